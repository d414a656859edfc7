import csv

import numpy as np
import pytest

from eegcnn import fixtures
from eegcnn.cli import EXIT_CONFIG, EXIT_DATASET, EXIT_IO, main
from eegcnn.export import read_matrix_csv, read_pgm
from eegcnn.io import read_archive, write_archive, write_csv_signal
from eegcnn.synthetic import spectral_dataset


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def minute_manifest(tmp_path_factory):
    d = tmp_path_factory.mktemp("raw")
    g = np.random.default_rng(0)
    lines = ["path,format,channel,fs,label,subject_id,trial_id"]
    for i in range(36):
        label = "BT" if i % 2 == 0 else "ST"
        write_csv_signal(d / f"r{i}.csv", g.normal(size=60 * 250) * 10)
        lines.append(f"r{i}.csv,csv,Fz,250,{label},s{i // 2:02d},{label}{i}")
    (d / "manifest.csv").write_text("\n".join(lines) + "\n")
    return d / "manifest.csv"


def test_preprocess_counts_and_determinism(minute_manifest, tmp_path, capsys):
    out1, out2 = tmp_path / "a", tmp_path / "b"
    assert main(["preprocess", "--manifest", str(minute_manifest), "--out", str(out1)]) == 0
    assert "windows: 216" in capsys.readouterr().out
    ws = read_archive(out1)
    assert len(ws) == 216 and all(w.n == 5000 and w.fs == 500 for w in ws)
    assert main(["preprocess", "--manifest", str(minute_manifest), "--out", str(out2)]) == 0
    for name in ("index.csv", "windows.f64"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


def test_preprocess_empty_manifest(tmp_path):
    m = tmp_path / "m.csv"
    m.write_text("path,format,channel,fs,label,subject_id,trial_id\n")
    assert main(["preprocess", "--manifest", str(m), "--out", str(tmp_path / "o")]) == EXIT_DATASET


def test_preprocess_bad_row_reports_it(tmp_path, capsys):
    (tmp_path / "x.csv").write_text("1\n2\n")
    m = tmp_path / "m.csv"
    m.write_text("path,format,channel,fs,label,subject_id,trial_id\nx.csv,csv,Fz,250,BT,s,t\n")
    code = main(["preprocess", "--manifest", str(m), "--out", str(tmp_path / "o")])
    assert code == EXIT_DATASET
    assert "row 2" in capsys.readouterr().err


@pytest.fixture(scope="module")
def clean_archive(tmp_path_factory):
    d = tmp_path_factory.mktemp("clean")
    x = fixtures.clean_eeg()
    from eegcnn.signals import Window

    ws = [Window(x[k * 1000 : (k + 1) * 1000], 500.0, "BT", "s1", f"t{k}", k * 1000, "Fz") for k in range(4)]
    write_archive(d, ws)
    return d


def test_contaminate_report(clean_archive, tmp_path):
    out = tmp_path / "n"
    grid = "0.25,0.5,1,2.5"
    code = main(["contaminate", "--archive", str(clean_archive), "--artifacts", str(fixtures.artifact_manifest()),
                 "--lambda", grid, "--beta", grid, "--mode", "oamma", "--seed", "1", "--out", str(out)])
    assert code == 0
    report = read_rows(out / "snr_report.csv")
    assert len(report) == 4 * 16
    assert any(float(r["lambda"]) == 1 and float(r["beta"]) == 1 for r in report)
    snrs = [float(r["snr"]) for r in report]
    assert min(snrs) <= 0.4 and max(snrs) >= 3
    assert len(read_archive(out)) == 64
    summary = read_rows(out / "snr_summary.csv")
    assert len(summary) == 16


def test_contaminate_lambda_zero_identity(clean_archive, tmp_path):
    out = tmp_path / "n"
    assert main(["contaminate", "--archive", str(clean_archive), "--artifacts", str(fixtures.artifact_manifest()),
                 "--lambda", "0", "--mode", "oa", "--out", str(out)]) == 0
    clean = read_archive(clean_archive)
    dirty = read_archive(out)
    for a, b in zip(clean, dirty):
        assert np.array_equal(a.samples, b.samples)
    assert all(r["snr"] == "undefined" for r in read_rows(out / "snr_report.csv"))


def test_contaminate_short_artifact_named(clean_archive, tmp_path, capsys):
    (tmp_path / "tiny.csv").write_text("1\n2\n3\n4\n5\n")
    (tmp_path / "art.csv").write_text("path,format,channel,fs,kind,source_id\ntiny.csv,csv,EOG,500,ocular,tinyblink\n")
    code = main(["contaminate", "--archive", str(clean_archive), "--artifacts", str(tmp_path / "art.csv"),
                 "--mode", "oa", "--out", str(tmp_path / "o")])
    assert code == EXIT_DATASET
    assert "tinyblink" in capsys.readouterr().err


@pytest.fixture(scope="module")
def toy_archive(tmp_path_factory):
    d = tmp_path_factory.mktemp("toy")
    write_archive(d, spectral_dataset(n_windows=40, duration_s=0.2, noise=0.25, seed=1))
    return d


def test_train_single_class_rejected(tmp_path):
    write_archive(tmp_path / "a", [w for w in spectral_dataset(n_windows=20, duration_s=0.2) if w.label == "BT"])
    assert main(["train", "--archive", str(tmp_path / "a"), "--out", str(tmp_path / "o")]) == EXIT_DATASET


def test_train_depth_sweep_writes_three_metric_files(toy_archive, tmp_path):
    out = tmp_path / "sweep"
    code = main(["train", "--archive", str(toy_archive), "--out", str(out), "--depth", "1,2,3",
                 "--folds", "4", "--epochs", "1"])
    assert code == 0
    files = sorted(out.glob("*/metrics.csv"))
    assert len(files) == 3
    rows = read_rows(files[0])
    assert [r["fold"] for r in rows][-3:] == ["mean", "std", "mean(std)"]
    epochs = read_rows(files[0].parent / "fold00" / "epochs.csv")
    assert list(epochs[0]) == ["epoch", "train_loss", "train_acc", "val_loss", "val_acc"]


def test_train_rejects_bad_window_seconds(toy_archive, tmp_path):
    assert main(["train", "--archive", str(toy_archive), "--out", str(tmp_path), "--window-seconds", "3"]) == EXIT_CONFIG


def test_train_window_longer_than_archive(toy_archive, tmp_path):
    assert main(["train", "--archive", str(toy_archive), "--out", str(tmp_path), "--window-seconds", "2"]) == EXIT_CONFIG


@pytest.fixture(scope="module")
def toy_checkpoint(toy_archive, tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    assert main(["train", "--archive", str(toy_archive), "--out", str(out), "--folds", "4", "--epochs", "3"]) == 0
    return out / "fold00" / "checkpoint.bin"


def test_eval_outputs(toy_checkpoint, toy_archive, tmp_path):
    assert main(["eval", "--checkpoint", str(toy_checkpoint), "--archive", str(toy_archive), "--out", str(tmp_path)]) == 0
    rows = read_rows(tmp_path / "metrics.csv")
    assert rows[0]["scope"] == "overall" and int(rows[0]["n"]) == 40
    with open(tmp_path / "confusion.csv") as fh:
        body = list(csv.reader(fh))[1:]
    assert sum(int(v) for r in body for v in r[1:]) == 40


def test_eval_window_mismatch(toy_checkpoint, tmp_path):
    write_archive(tmp_path / "other", spectral_dataset(n_windows=4, duration_s=0.3))
    code = main(["eval", "--checkpoint", str(toy_checkpoint), "--archive", str(tmp_path / "other"),
                 "--out", str(tmp_path / "o")])
    assert code == EXIT_CONFIG


def test_eval_not_a_checkpoint(toy_archive, tmp_path):
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"XXXXXXXX")
    assert main(["eval", "--checkpoint", str(bad), "--archive", str(toy_archive), "--out", str(tmp_path)]) == EXIT_IO


def test_export_activations(toy_checkpoint, toy_archive, tmp_path):
    out = tmp_path / "act"
    assert main(["export-activations", "--checkpoint", str(toy_checkpoint), "--archive", str(toy_archive),
                 "--window-id", "3", "--out", str(out)]) == 0
    for name, shape in (("conv1", (96, 16)), ("conv2", (92, 32)), ("pool", (46, 32))):
        grid = read_matrix_csv(out / f"act_{name}.csv")
        assert grid.shape == shape
        assert read_pgm(out / f"act_{name}.pgm").shape == shape
    assert read_matrix_csv(out / "weights_conv1.csv").shape == (16, 5)
    assert read_matrix_csv(out / "weights_conv2.csv").shape == (32, 80)


def test_export_unknown_window(toy_checkpoint, toy_archive, tmp_path):
    code = main(["export-activations", "--checkpoint", str(toy_checkpoint), "--archive", str(toy_archive),
                 "--window-id", "999", "--out", str(tmp_path)])
    assert code == EXIT_DATASET


def test_exit_code_mapping(tmp_path):
    from eegcnn.cli import exit_code_for
    from eegcnn.errors import ConfigError, CorruptCheckpointError, DatasetError, EEGCNNError, LabelError, ShapeError

    assert exit_code_for(DatasetError("x")) == exit_code_for(LabelError("x")) == EXIT_DATASET
    assert exit_code_for(ConfigError("x")) == exit_code_for(ShapeError("x")) == EXIT_CONFIG
    assert exit_code_for(CorruptCheckpointError("x")) == exit_code_for(FileNotFoundError()) == EXIT_IO
    assert exit_code_for(EEGCNNError("x")) == 1
    with pytest.raises(SystemExit) as exc:
        main(["train"])
    assert exc.value.code == 2
    assert main(["eval", "--checkpoint", str(tmp_path / "none.bin"), "--archive", str(tmp_path),
                 "--out", str(tmp_path)]) == EXIT_IO
