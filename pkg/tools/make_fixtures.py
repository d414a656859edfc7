"""Regenerate the bundled fixture signals in src/eegcnn/data."""
from pathlib import Path

from eegcnn.io import write_csv_signal
from eegcnn.synthetic import fixture_clean_eeg, fixture_muscle, fixture_ocular

FS = 500.0
SECONDS = 30
DATA = Path(__file__).resolve().parents[1] / "src" / "eegcnn" / "data"

if __name__ == "__main__":
    n = int(FS * SECONDS)
    write_csv_signal(DATA / "clean_eeg.csv", fixture_clean_eeg(n, FS), header="uV")
    write_csv_signal(DATA / "ocular.csv", fixture_ocular(n, FS), header="uV")
    write_csv_signal(DATA / "muscle.csv", fixture_muscle(n, FS), header="uV")
    (DATA / "artifacts.csv").write_text(
        "path,format,channel,fs,kind,source_id\n"
        "ocular.csv,csv-header,EOG,500,ocular,oa_fixture\n"
        "muscle.csv,csv-header,EMG,500,muscle,ma_fixture\n"
    )
