"""
Resampling and windowing a recording
====================================

A 250 Hz recording is brought to the 500 Hz working rate with a natural
cubic spline, then cut into non-overlapping windows.
"""

import numpy as np

from eegcnn.signals import SignalRecord, resample_cubic, segment, zscore

fs = 250.0
t = np.arange(int(60 * fs)) / fs
x = 30 * np.sin(2 * np.pi * 10 * t) + np.random.default_rng(0).normal(scale=5, size=t.size)
rec = SignalRecord(x, fs, "BT", "s01", "BT-1", "Fz")

up = resample_cubic(rec, 500.0)
print(f"{len(rec)} samples at {rec.fs:g} Hz -> {len(up)} samples at {up.fs:g} Hz")

# every other output sample sits on an input knot
print("max knot deviation:", np.max(np.abs(up.samples[::2] - rec.samples)))

###############################################################################
# Ten-second windows of a one-minute trial give six windows of 5000 samples.

windows = segment(up, 10.0)
print(len(windows), "windows of", windows[0].n, "samples; offsets", [w.offset for w in windows])

# half-second overlap shortens the stride
print(len(segment(up, 10.0, overlap_s=0.5)), "windows with 0.5 s overlap")

# z-scoring is optional; raw microvolts are the default input
z = zscore(windows[0].samples)
print("z-scored mean %.1e, std %.3f" % (z.mean(), z.std()))
