"""Recordings, fixed-length windows, cubic-spline resampling and segmentation."""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import InvalidArgumentError, LabelError, TooShortError

TASK_LABELS = ("BT", "MT", "LT", "RT", "VT", "ST")
TARGET_FS = 500.0


def check_label(label: str) -> str:
    if label not in TASK_LABELS:
        raise LabelError(f"unknown task label {label!r}; expected one of {TASK_LABELS}")
    return label


@dataclass(frozen=True)
class SignalRecord:
    """One labelled single-channel trial. ``samples`` are microvolts."""

    samples: np.ndarray
    fs: float
    label: str
    subject_id: str = ""
    trial_id: str = ""
    channel: str = ""

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise InvalidArgumentError("samples must be a nonempty 1-D sequence")
        if not np.all(np.isfinite(samples)):
            raise InvalidArgumentError("samples contain NaN or Inf")
        if not self.fs > 0:
            raise InvalidArgumentError(f"fs must be positive, got {self.fs}")
        check_label(self.label)
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "fs", float(self.fs))

    @property
    def duration(self) -> float:
        return self.samples.size / self.fs

    def __len__(self):
        return self.samples.size


@dataclass(frozen=True)
class Window:
    """A fixed-length slice of a record.

    ``offset`` is the first sample index in the (resampled) source record.
    ``meta`` carries extra provenance such as contamination slice offsets.
    """

    samples: np.ndarray
    fs: float
    label: str
    subject_id: str = ""
    trial_id: str = ""
    offset: int = 0
    channel: str = ""
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=np.float64))

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def offset_s(self) -> float:
        return self.offset / self.fs

    @property
    def trial_key(self) -> tuple[str, str]:
        return (self.subject_id, self.trial_id)

    def with_samples(self, samples, **meta) -> "Window":
        return replace(self, samples=np.asarray(samples, dtype=np.float64), meta={**self.meta, **meta})


def resample_cubic(record: SignalRecord, fs_target: float = TARGET_FS) -> SignalRecord:
    """Resample with a natural cubic spline through ``(i / fs, x[i])``.

    The output has ``round(len * fs_target / fs)`` samples taken at
    ``j / fs_target``; both time bases start at zero. Points past the last
    knot use the final spline segment. No anti-alias filtering is applied.
    """
    if not fs_target > 0:
        raise InvalidArgumentError(f"fs_target must be positive, got {fs_target}")
    x = record.samples
    if x.size < 4:
        raise TooShortError(f"need at least 4 samples to resample, got {x.size}")
    n_out = int(round(x.size * fs_target / record.fs))
    if n_out < 1:
        raise TooShortError("resampled signal would be empty")
    t_in = np.arange(x.size) / record.fs
    t_out = np.arange(n_out) / fs_target
    spline = CubicSpline(t_in, x, bc_type="natural", extrapolate=True)
    return replace(record, samples=spline(t_out), fs=float(fs_target))


def window_length(fs: float, duration_s: float) -> int:
    return int(round(fs * duration_s))


def segment(record: SignalRecord, duration_s: float, overlap_s: float = 0.0) -> list[Window]:
    """Cut ``record`` into as many full windows as fit; the tail is dropped.

    Returns an empty list when the record is shorter than one window.
    """
    if not duration_s > 0:
        raise InvalidArgumentError(f"duration must be positive, got {duration_s}")
    if not 0 <= overlap_s < duration_s:
        raise InvalidArgumentError(f"need 0 <= overlap < duration, got {overlap_s}")
    n = window_length(record.fs, duration_s)
    stride = n - window_length(record.fs, overlap_s)
    if n < 1 or stride < 1:
        raise InvalidArgumentError("window or stride rounds to zero samples")
    length = record.samples.size
    if length < n:
        return []
    count = (length - n) // stride + 1
    return [
        Window(
            samples=record.samples[k * stride : k * stride + n].copy(),
            fs=record.fs,
            label=record.label,
            subject_id=record.subject_id,
            trial_id=record.trial_id,
            offset=k * stride,
            channel=record.channel,
        )
        for k in range(count)
    ]


def zscore(samples: np.ndarray) -> np.ndarray:
    """Per-window standardisation; a flat window maps to zeros."""
    samples = np.asarray(samples, dtype=np.float64)
    sd = samples.std()
    if sd == 0:
        return np.zeros_like(samples)
    return (samples - samples.mean()) / sd
