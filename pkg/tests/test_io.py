import struct

import numpy as np
import pytest

from eegcnn.errors import (
    CorruptCheckpointError,
    DatasetError,
    FormatError,
    NotACheckpointError,
    VersionMismatchError,
)
from eegcnn.io import (
    CsvSpec,
    ModelCheckpoint,
    load_record,
    read_archive,
    read_checkpoint,
    read_csv_signal,
    read_edf,
    read_edf_header,
    read_manifest,
    write_archive,
    write_checkpoint,
    write_edf,
)
from eegcnn.model import ModelConfig, build_model
from eegcnn.signals import Window


def test_csv_single_column(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("1\n2\n3\n")
    rec = read_csv_signal(p, CsvSpec(fs=250))
    assert rec.samples.tolist() == [1, 2, 3]
    assert rec.fs == 250


def test_csv_header_skipped(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("uV\n1.5\n-2\n")
    assert read_csv_signal(p, CsvSpec(fs=1, header=True)).samples.tolist() == [1.5, -2]


def test_csv_time_value(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("0.0,4\n0.002,5\n")
    assert read_csv_signal(p, CsvSpec(fs=500, columns=2)).samples.tolist() == [4, 5]


def test_csv_comma_decimal_rejected(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("1.0\n2,5\n")
    with pytest.raises(FormatError, match=":2"):
        read_csv_signal(p, CsvSpec(fs=1))


@pytest.mark.parametrize("body", ["", "\n\n", "uV\n"])
def test_csv_empty_rejected(tmp_path, body):
    p = tmp_path / "a.csv"
    p.write_text(body)
    with pytest.raises(FormatError):
        read_csv_signal(p, CsvSpec(fs=1, header=body == "uV\n"))


def test_csv_nan_rejected(tmp_path):
    p = tmp_path / "a.csv"
    p.write_text("1\nnan\n")
    with pytest.raises(FormatError, match=":2"):
        read_csv_signal(p, CsvSpec(fs=1))


# --- EDF ------------------------------------------------------------------


def ascii_field(text, width):
    return str(text).ljust(width).encode("ascii")


def hand_edf(samples, labels=("Fz",), phys=(0, 4), dig=(0, 4), duration=1):
    """Assemble an EDF file byte by byte from the published fixed layout."""
    ns = len(labels)
    n = len(samples[0])
    head = (
        ascii_field("0", 8) + ascii_field("patient", 80) + ascii_field("recording", 80)
        + ascii_field("01.01.01", 8) + ascii_field("00.00.00", 8)
        + ascii_field(256 * (1 + ns), 8) + ascii_field("", 44)
        + ascii_field(1, 8) + ascii_field(duration, 8) + ascii_field(ns, 4)
    )
    assert len(head) == 256
    per_signal = [
        [ascii_field(l, 16) for l in labels],
        [ascii_field("", 80)] * ns,
        [ascii_field("uV", 8)] * ns,
        [ascii_field(phys[0], 8)] * ns,
        [ascii_field(phys[1], 8)] * ns,
        [ascii_field(dig[0], 8)] * ns,
        [ascii_field(dig[1], 8)] * ns,
        [ascii_field("", 80)] * ns,
        [ascii_field(n, 8)] * ns,
        [ascii_field("", 32)] * ns,
    ]
    head += b"".join(b"".join(col) for col in per_signal)
    assert len(head) == 256 * (1 + ns)
    body = b"".join(struct.pack("<" + "h" * n, *s) for s in samples)
    return head + body


def test_edf_identity_scaling(tmp_path):
    p = tmp_path / "a.edf"
    p.write_bytes(hand_edf([[0, 1, 2, 3, 4]]))
    rec = read_edf(p, "Fz")
    assert rec.samples.tolist() == [0, 1, 2, 3, 4]
    assert rec.fs == 5


def test_edf_midpoint_maps_to_zero(tmp_path):
    p = tmp_path / "a.edf"
    p.write_bytes(hand_edf([[0, -100, 100]], phys=(-1, 1), dig=(-100, 100)))
    rec = read_edf(p, "Fz")
    assert rec.samples[0] == 0.0
    assert rec.samples[1] == -1.0 and rec.samples[2] == 1.0


def test_edf_picks_channel(tmp_path):
    p = tmp_path / "a.edf"
    p.write_bytes(hand_edf([[1, 2], [7, 8]], labels=("Fz", "Cz")))
    assert read_edf(p, "Cz").samples.tolist() == [7, 8]
    assert read_edf_header(p).labels == ["Fz", "Cz"]


def test_edf_unknown_channel(tmp_path):
    p = tmp_path / "a.edf"
    p.write_bytes(hand_edf([[1, 2]], labels=("Fz", "Cz")) + struct.pack("<hh", 3, 4))
    with pytest.raises(FormatError, match="Fz, Cz"):
        read_edf(p, "XX")


def test_edf_truncated(tmp_path):
    p = tmp_path / "a.edf"
    p.write_bytes(hand_edf([[0, 1, 2, 3, 4]])[:-2])
    with pytest.raises(FormatError, match="truncated"):
        read_edf(p, "Fz")
    p.write_bytes(hand_edf([[0, 1]])[:300])
    with pytest.raises(FormatError, match="truncated"):
        read_edf(p, "Fz")


def test_edf_scaling_affine_endpoints(tmp_path):
    p = tmp_path / "a.edf"
    p.write_bytes(hand_edf([[-32768, 32767, 0]], phys=(-200, 200), dig=(-32768, 32767)))
    s = read_edf(p, "Fz").samples
    assert s[0] == -200 and s[1] == 200


def test_edf_writer_roundtrip(tmp_path):
    x = 50 * np.sin(np.arange(1000) / 7)
    p = tmp_path / "w.edf"
    write_edf(p, {"Fp1": x, "Fz": -x}, fs=100)
    rec = read_edf(p, "Fz")
    assert rec.fs == 100
    np.testing.assert_allclose(rec.samples, -x, atol=0.01)


# --- manifests ----------------------------------------------------------------


def test_manifest(tmp_path):
    (tmp_path / "a.csv").write_text("1\n2\n3\n4\n")
    (tmp_path / "m.csv").write_text(
        "path,format,channel,fs,label,subject_id,trial_id\na.csv,csv,Fz,250,ST,s1,t1\n"
    )
    rows = read_manifest(tmp_path / "m.csv")
    rec = load_record(rows[0])
    assert rec.label == "ST" and rec.fs == 250 and rec.subject_id == "s1"


@pytest.mark.parametrize(
    "row, match",
    [("a.csv,csv,Fz,250,XX,s1,t1", "label"), ("missing.csv,csv,Fz,250,BT,s,t", "exist"),
     ("a.csv,wav,Fz,250,BT,s,t", "format"), ("a.csv,csv,Fz,,BT,s,t", "fs")],
)
def test_manifest_errors_carry_row(tmp_path, row, match):
    (tmp_path / "a.csv").write_text("1\n")
    (tmp_path / "m.csv").write_text("path,format,channel,fs,label,subject_id,trial_id\n" + row + "\n")
    with pytest.raises(FormatError, match=match) as info:
        read_manifest(tmp_path / "m.csv")
    assert info.value.line == 2


# --- archives -------------------------------------------------------------------


def test_archive_roundtrip(tmp_path):
    ws = [Window(np.arange(5.0) + i, 500.0, "BT" if i % 2 else "ST", "s1", f"t{i}", 10 * i, "Fz", {"lambda": 0.5})
          for i in range(3)]
    write_archive(tmp_path / "arc", ws, extra_columns=["lambda"])
    back = read_archive(tmp_path / "arc")
    assert len(back) == 3
    for a, b in zip(ws, back):
        assert np.array_equal(a.samples, b.samples)
        assert (a.label, a.trial_id, a.offset, a.fs) == (b.label, b.trial_id, b.offset, b.fs)
        assert float(b.meta["lambda"]) == 0.5


def test_archive_missing(tmp_path):
    with pytest.raises(DatasetError):
        read_archive(tmp_path)


# --- checkpoints -------------------------------------------------------------------


@pytest.fixture
def ckpt():
    cfg = ModelConfig(window_samples=60, n_classes=3, dense_bias=True, labels=("BT", "MT", "LT"))
    return ModelCheckpoint.from_model(build_model(cfg, 7), seed=7)


def test_checkpoint_roundtrip_bitwise(tmp_path, ckpt):
    p = tmp_path / "c.bin"
    write_checkpoint(p, ckpt)
    back = read_checkpoint(p)
    assert back.config == ckpt.config and back.seed == 7
    for (na, a), (nb, b) in zip(ckpt.buffers, back.buffers):
        assert na == nb and a.tobytes() == b.tobytes()


def test_canonical_checkpoint_roundtrip(tmp_path):
    model = build_model(ModelConfig(), 1)
    p = tmp_path / "c.bin"
    write_checkpoint(p, ModelCheckpoint.from_model(model, 1))
    back = read_checkpoint(p).to_model()
    for (_, a), (_, b) in zip(model.named_parameters(), back.named_parameters()):
        assert a.tobytes() == b.tobytes()


def test_checkpoint_bad_magic(tmp_path):
    p = tmp_path / "c.bin"
    p.write_bytes(b"XXXX" + b"\0" * 40)
    with pytest.raises(NotACheckpointError):
        read_checkpoint(p)


def test_checkpoint_truncated(tmp_path, ckpt):
    p = tmp_path / "c.bin"
    write_checkpoint(p, ckpt)
    blob = p.read_bytes()
    p.write_bytes(blob[: len(blob) - 100])
    with pytest.raises(CorruptCheckpointError):
        read_checkpoint(p)


def test_checkpoint_version_mismatch(tmp_path, ckpt):
    p = tmp_path / "c.bin"
    write_checkpoint(p, ckpt)
    blob = bytearray(p.read_bytes())
    blob[6:10] = struct.pack("<I", 99)
    p.write_bytes(bytes(blob))
    with pytest.raises(VersionMismatchError):
        read_checkpoint(p)


def test_checkpoint_length_overrun(tmp_path, ckpt):
    p = tmp_path / "c.bin"
    write_checkpoint(p, ckpt)
    blob = bytearray(p.read_bytes())
    # first buffer's u64 count sits right after its name
    cfg_len = struct.unpack("<I", blob[10:14])[0]
    pos = 14 + cfg_len + 12
    nlen = struct.unpack("<H", blob[pos : pos + 2])[0]
    pos += 2 + nlen
    blob[pos : pos + 8] = struct.pack("<Q", 10**12)
    p.write_bytes(bytes(blob))
    with pytest.raises(CorruptCheckpointError, match="overruns"):
        read_checkpoint(p)
