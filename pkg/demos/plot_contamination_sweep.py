"""
Artifact contamination and SNR
==============================

Clean EEG is mixed with scaled ocular and muscle artifacts over a grid of
weights, and the resulting signal-to-noise ratio is tabulated.
"""

import numpy as np

from eegcnn import fixtures
from eegcnn.artifacts import ContaminationParams, contaminate, mean_snr_by_grid, snr_of, sweep
from eegcnn.numeric import SeededGenerator
from eegcnn.signals import Window

clean = fixtures.clean_eeg()
windows = [Window(clean[k * 5000 : (k + 1) * 5000], 500.0, "BT", "fixture", f"w{k}", k * 5000, "Fz")
           for k in range(3)]
oa, ma = fixtures.ocular(), fixtures.muscle()

###############################################################################
# A single mixture. The noise term is returned so the SNR can be checked.

noisy, noise = contaminate(windows[0], oa, ma, ContaminationParams(1.0, 1.0, "oamma"),
                           SeededGenerator(0), return_noise=True)
print("SNR at lambda=beta=1: %.3f" % snr_of(windows[0], noise))
print("artifact slice offsets:", noisy.meta["oa_offset"], noisy.meta["ma_offset"])

# doubling the ocular weight halves the SNR when only ocular noise is present
s1 = snr_of(windows[0], contaminate(windows[0], oa, None, ContaminationParams(0.5, 0, "oa"),
                                    SeededGenerator(0), return_noise=True)[1])
s2 = snr_of(windows[0], contaminate(windows[0], oa, None, ContaminationParams(1.0, 0, "oa"),
                                    SeededGenerator(0), return_noise=True)[1])
print("ratio of SNRs:", s1 / s2)

###############################################################################
# The whole grid, averaged over windows.

grid = fixtures.DEFAULT_GRID
means = mean_snr_by_grid(sweep(windows, [oa], [ma], grid, grid, "oamma", seed=1))
print("lambda\\beta " + " ".join(f"{b:6g}" for b in grid))
for lam in grid:
    print(f"{lam:11g} " + " ".join(f"{means[(lam, b)]:6.2f}" for b in grid))
print("SNR range %.2f - %.2f" % (min(means.values()), max(means.values())))
