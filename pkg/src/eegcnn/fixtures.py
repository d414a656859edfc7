"""Bundled fixture signals (30 s at 500 Hz): a clean EEG-like trace and one
ocular and one muscle artifact source. Regenerate with tools/make_fixtures.py.
"""
from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np

from .artifacts import ArtifactSource
from .io import CsvSpec, read_csv_signal

FIXTURE_FS = 500.0

# (lambda, beta) values used for SNR sweeps over the fixtures
DEFAULT_GRID = (0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5)


def data_path(name: str) -> Path:
    return Path(str(resources.files("eegcnn") / "data" / name))


def _load(name: str) -> np.ndarray:
    return read_csv_signal(data_path(name), CsvSpec(fs=FIXTURE_FS, header=True)).samples


def clean_eeg() -> np.ndarray:
    return _load("clean_eeg.csv")


def ocular() -> ArtifactSource:
    return ArtifactSource(_load("ocular.csv"), "ocular", FIXTURE_FS, "oa_fixture")


def muscle() -> ArtifactSource:
    return ArtifactSource(_load("muscle.csv"), "muscle", FIXTURE_FS, "ma_fixture")


def artifact_manifest() -> Path:
    return data_path("artifacts.csv")
