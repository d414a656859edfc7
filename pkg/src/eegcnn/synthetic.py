"""Synthetic signals for tests and demos.

``spectral_dataset`` builds the two-class toy problem (8 Hz vs 25 Hz tones
in noise). The ``fixture_*`` generators make the EEG-like clean signal and
the ocular/muscle artifact sources bundled under ``eegcnn/data``.
"""
from __future__ import annotations

import numpy as np

from .numeric import SeededGenerator
from .signals import Window


def spectral_dataset(
    n_windows: int = 200,
    fs: float = 500.0,
    duration_s: float = 2.0,
    freqs=(8.0, 25.0),
    labels=("BT", "ST"),
    noise: float = 0.5,
    n_subjects: int = 10,
    seed: int = 0,
) -> list[Window]:
    """Alternating-class windows, one trial each: tone with random phase and gain plus white noise."""
    gen = SeededGenerator(seed)
    n = int(round(fs * duration_s))
    t = np.arange(n) / fs
    out = []
    for i in range(n_windows):
        c = i % len(freqs)
        phase = 2 * np.pi * gen.random()
        gain = 0.75 + 0.5 * gen.random()
        x = gain * np.sin(2 * np.pi * freqs[c] * t + phase) + noise * gen.normal(size=n)
        out.append(
            Window(x, fs, labels[c], subject_id=f"s{i % n_subjects:02d}", trial_id=f"t{i:04d}", channel="Fz")
        )
    return out


def band_energy(x, fs: float, f0: float, half_width: float = 1.0) -> float:
    """Spectral energy of ``x`` within ``f0 +- half_width`` Hz."""
    spec = np.abs(np.fft.rfft(x)) ** 2
    f = np.fft.rfftfreq(len(x), 1 / fs)
    return float(spec[(f >= f0 - half_width) & (f <= f0 + half_width)].sum())


def pink_noise(gen: SeededGenerator, n: int) -> np.ndarray:
    spec = np.fft.rfft(gen.normal(size=n))
    f = np.arange(spec.size)
    spec[1:] /= np.sqrt(f[1:])
    spec[0] = 0
    x = np.fft.irfft(spec, n)
    return x / x.std()


def fixture_clean_eeg(n: int, fs: float = 500.0, seed: int = 11) -> np.ndarray:
    """Alpha and beta rhythms over 1/f background, about 20 uV rms."""
    gen = SeededGenerator(seed)
    t = np.arange(n) / fs
    x = (
        12 * np.sin(2 * np.pi * 10.0 * t + 2 * np.pi * gen.random())
        + 5 * np.sin(2 * np.pi * 21.0 * t + 2 * np.pi * gen.random())
        + 10 * pink_noise(gen, n)
    )
    return x * (20.0 / np.sqrt(np.mean(x * x)))


def fixture_ocular(n: int, fs: float = 500.0, seed: int = 12) -> np.ndarray:
    """Blink-like bumps (raised-cosine, ~0.3 s) at random times, about 15 uV rms."""
    gen = SeededGenerator(seed)
    x = np.zeros(n)
    width = int(0.3 * fs)
    bump = 0.5 - 0.5 * np.cos(2 * np.pi * np.arange(width) / width)
    pos = 0
    while True:
        pos += int(fs * (0.8 + 1.5 * gen.random()))
        if pos + width > n:
            break
        x[pos : pos + width] += (80 + 60 * gen.random()) * bump
    x += 2 * pink_noise(gen, n)
    x -= x.mean()
    return x * (15.0 / np.sqrt(np.mean(x * x)))


def fixture_muscle(n: int, fs: float = 500.0, seed: int = 13) -> np.ndarray:
    """Bursts of broadband high-frequency activity, about 20 uV rms."""
    gen = SeededGenerator(seed)
    t = np.arange(n) / fs
    carrier = np.diff(gen.normal(size=n + 1))  # crude high-pass
    envelope = 0.3 + np.clip(np.sin(2 * np.pi * 0.4 * t + 2 * np.pi * gen.random()), 0, None) ** 2
    x = carrier * envelope
    x -= x.mean()
    return x * (20.0 / np.sqrt(np.mean(x * x)))
