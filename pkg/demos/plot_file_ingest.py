"""
Reading EDF and CSV recordings
==============================

Recordings on disk are listed in a manifest, read, resampled and windowed
into an archive that the trainer consumes.
"""

import tempfile
from pathlib import Path

import numpy as np

from eegcnn.cli import main
from eegcnn.io import read_archive, read_edf, read_edf_header, write_csv_signal, write_edf

root = Path(tempfile.mkdtemp())
g = np.random.default_rng(0)

# an EDF file with two channels at 500 Hz, and a single-column CSV at 250 Hz
write_edf(root / "rest.edf", {"EEG Fz": g.normal(size=30000) * 20, "EEG Cz": g.normal(size=30000) * 20}, 500)
write_csv_signal(root / "task.csv", g.normal(size=15000) * 20)

hdr = read_edf_header(root / "rest.edf")
print("EDF channels:", [s.label for s in hdr.signals], "records:", hdr.n_records)
rec = read_edf(root / "rest.edf", "EEG Fz", label="BT", subject_id="s01", trial_id="rest")
print(f"read {len(rec)} samples at {rec.fs:g} Hz")

###############################################################################
# The same files through a manifest and the ``preprocess`` subcommand.

(root / "manifest.csv").write_text(
    "path,format,channel,fs,label,subject_id,trial_id\n"
    "rest.edf,edf,EEG Fz,,BT,s01,rest\n"
    "task.csv,csv,Fz,250,ST,s01,task\n"
)
main(["preprocess", "--manifest", str(root / "manifest.csv"), "--out", str(root / "archive")])
windows = read_archive(root / "archive")
print([(w.trial_id, w.offset, w.n) for w in windows])
