"""Ocular/muscle artifact mixing at controlled SNR.

SNR here is an amplitude ratio, ``rms(clean) / rms(scaled_noise)``, not dB.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidArgumentError, LengthError, UndefinedSNRError
from .numeric import SeededGenerator
from .signals import TARGET_FS, Window


class Mode(str, enum.Enum):
    OA = "oa"
    MA = "ma"
    OAMA = "oamma"

    @classmethod
    def parse(cls, value) -> "Mode":
        if isinstance(value, cls):
            return value
        key = str(value).lower().replace("+", "")
        aliases = {"oa": cls.OA, "ma": cls.MA, "oama": cls.OAMA, "oamma": cls.OAMA}
        try:
            return aliases[key]
        except KeyError:
            raise InvalidArgumentError(f"unknown contamination mode {value!r}") from None

    @property
    def uses_oa(self) -> bool:
        return self in (Mode.OA, Mode.OAMA)

    @property
    def uses_ma(self) -> bool:
        return self in (Mode.MA, Mode.OAMA)


@dataclass(frozen=True)
class ContaminationParams:
    lam: float = 1.0
    beta: float = 1.0
    mode: Mode = Mode.OAMA

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode.parse(self.mode))
        if self.lam < 0 or self.beta < 0:
            raise InvalidArgumentError("lambda and beta must be non-negative")

    @property
    def effective_lam(self) -> float:
        return self.lam if self.mode.uses_oa else 0.0

    @property
    def effective_beta(self) -> float:
        return self.beta if self.mode.uses_ma else 0.0


@dataclass(frozen=True)
class ArtifactSource:
    samples: np.ndarray
    kind: str  # "ocular" or "muscle"
    fs: float = TARGET_FS
    source_id: str = ""

    def __post_init__(self):
        if self.kind not in ("ocular", "muscle"):
            raise InvalidArgumentError(f"artifact kind must be ocular or muscle, got {self.kind!r}")
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise InvalidArgumentError("artifact samples must be a nonempty 1-D sequence")
        object.__setattr__(self, "samples", samples)


def rms(x: Sequence[float]) -> float:
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        raise InvalidArgumentError("rms of an empty sequence")
    return float(np.sqrt(np.mean(x * x)))


def snr_of(clean, scaled_noise) -> float:
    """``rms(clean) / rms(scaled_noise)``; for OA+MA pass the summed noise."""
    clean = clean.samples if isinstance(clean, Window) else np.asarray(clean, dtype=np.float64)
    noise = np.asarray(scaled_noise, dtype=np.float64)
    if clean.shape != noise.shape:
        raise LengthError(f"clean and noise lengths differ: {clean.shape} vs {noise.shape}")
    denom = rms(noise)
    if denom == 0:
        raise UndefinedSNRError("noise is identically zero; SNR undefined")
    return rms(clean) / denom


def _slice(source: ArtifactSource, n: int, gen: SeededGenerator | None, window: Window):
    if source.samples.size < n:
        raise LengthError(
            f"artifact {source.source_id or source.kind!r} has {source.samples.size} samples, "
            f"window needs {n}"
        )
    if source.fs != window.fs:
        raise InvalidArgumentError(
            f"artifact {source.source_id!r} at {source.fs} Hz, window at {window.fs} Hz; resample first"
        )
    span = source.samples.size - n
    offset = 0 if gen is None or span == 0 else int(gen.integers(0, span + 1))
    return source.samples[offset : offset + n], offset


def contaminate(
    clean: Window,
    oa: ArtifactSource | None,
    ma: ArtifactSource | None,
    p: ContaminationParams,
    gen: SeededGenerator | None = None,
    return_noise: bool = False,
):
    """Add scaled artifact slices to ``clean``.

    OA gives ``x + lam*y_o``, MA gives ``x + beta*y_m``, OA+MA adds both. The
    slice start in each artifact is drawn uniformly from ``gen`` (offset 0
    when ``gen`` is None) and recorded in the returned window's ``meta``.
    With ``return_noise`` the summed scaled artifact is returned too.
    """
    n = clean.n
    noise = np.zeros(n)
    meta = {
        "clean_id": f"{clean.subject_id}/{clean.trial_id}@{clean.offset}",
        "lambda": p.lam,
        "beta": p.beta,
        "mode": p.mode.value,
    }
    if p.mode.uses_oa:
        if oa is None:
            raise InvalidArgumentError("mode needs an ocular artifact source")
        y_o, off = _slice(oa, n, gen, clean)
        noise = noise + p.lam * y_o
        meta.update(oa_id=oa.source_id, oa_offset=off)
    if p.mode.uses_ma:
        if ma is None:
            raise InvalidArgumentError("mode needs a muscle artifact source")
        y_m, off = _slice(ma, n, gen, clean)
        noise = noise + p.beta * y_m
        meta.update(ma_id=ma.source_id, ma_offset=off)
    out = clean.with_samples(clean.samples + noise, **meta)
    if return_noise:
        return out, noise
    return out


@dataclass(frozen=True)
class Realization:
    window: Window
    noise: np.ndarray
    snr: float | None  # None when the noise is all zero (e.g. lambda = 0)


def sweep(
    windows: Iterable[Window],
    oa_sources: Sequence[ArtifactSource],
    ma_sources: Sequence[ArtifactSource],
    lambdas: Sequence[float],
    betas: Sequence[float],
    mode,
    seed: int,
) -> list[Realization]:
    """One realization per (window, grid point).

    Grid points are the cartesian product of ``lambdas`` and ``betas``
    (only the relevant list is used for single-artifact modes). Each
    realization draws from its own derived stream (window index, grid index),
    so results do not depend on iteration order.
    """
    mode = Mode.parse(mode)
    if mode is Mode.OA:
        grid = [(lam, 0.0) for lam in lambdas]
    elif mode is Mode.MA:
        grid = [(0.0, b) for b in betas]
    else:
        grid = [(lam, b) for lam in lambdas for b in betas]
    if mode.uses_oa and not oa_sources:
        raise InvalidArgumentError("no ocular artifact sources given")
    if mode.uses_ma and not ma_sources:
        raise InvalidArgumentError("no muscle artifact sources given")
    root = SeededGenerator(seed)
    out = []
    for wi, window in enumerate(windows):
        for gi, (lam, beta) in enumerate(grid):
            gen = root.derive(wi, gi)
            oa = oa_sources[int(gen.integers(0, len(oa_sources)))] if mode.uses_oa else None
            ma = ma_sources[int(gen.integers(0, len(ma_sources)))] if mode.uses_ma else None
            params = ContaminationParams(lam, beta, mode)
            w, noise = contaminate(window, oa, ma, params, gen, return_noise=True)
            snr = snr_of(window, noise) if np.any(noise) else None
            out.append(Realization(w, noise, snr))
    return out


def mean_snr_by_grid(realizations: Iterable[Realization]) -> dict[tuple[float, float], float | None]:
    """Mean per-realization SNR for each (lambda, beta) pair, insertion-ordered."""
    acc: dict[tuple[float, float], list[float]] = {}
    for r in realizations:
        key = (r.window.meta["lambda"], r.window.meta["beta"])
        acc.setdefault(key, [])
        if r.snr is not None:
            acc[key].append(r.snr)
    return {k: (float(np.mean(v)) if v else None) for k, v in acc.items()}
