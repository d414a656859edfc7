"""File formats: CSV signals, an EDF subset, dataset manifests, window
archives and model checkpoints. Byte layouts are described in docs/formats.md.
"""
from __future__ import annotations

import csv
import json
import math
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    ConfigError,
    CorruptCheckpointError,
    DatasetError,
    FormatError,
    InvalidArgumentError,
    NotACheckpointError,
    VersionMismatchError,
)
from .model import CNN1D, ModelConfig
from .signals import SignalRecord, Window, check_label

# --- CSV signals --------------------------------------------------------------


@dataclass(frozen=True)
class CsvSpec:
    """How to read a signal CSV: one value per line, or ``time,value`` pairs."""

    fs: float
    header: bool = False
    columns: int = 1
    label: str = "BT"
    subject_id: str = ""
    trial_id: str = ""
    channel: str = ""


def _parse_float(text, path, lineno):
    try:
        value = float(text)
    except ValueError:
        raise FormatError(f"cannot parse {text!r} as a number", path, lineno) from None
    if not math.isfinite(value):
        raise FormatError(f"non-finite value {text!r}", path, lineno)
    return value


def read_csv_signal(path, spec: CsvSpec) -> SignalRecord:
    """Parse a single-channel CSV. Decimal commas are rejected, not guessed."""
    path = Path(path)
    values = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if lineno == 1 and spec.header:
                continue
            line = line.strip()
            if not line:
                continue
            fields = [f.strip() for f in line.split(",")]
            if len(fields) != spec.columns:
                raise FormatError(
                    f"expected {spec.columns} field(s), found {len(fields)} in {line!r}", path, lineno
                )
            values.append(_parse_float(fields[-1], path, lineno))
    if not values:
        raise FormatError("no samples", path)
    return SignalRecord(
        np.array(values), spec.fs, spec.label, spec.subject_id, spec.trial_id, spec.channel
    )


def write_csv_signal(path, samples, header: str | None = None):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            fh.write(header + "\n")
        for v in np.asarray(samples, dtype=np.float64):
            fh.write(repr(float(v)) + "\n")


# --- EDF ------------------------------------------------------------------------


@dataclass(frozen=True)
class EdfSignalHeader:
    label: str
    samples_per_record: int
    physical_min: float
    physical_max: float
    digital_min: int
    digital_max: int


@dataclass(frozen=True)
class EdfHeader:
    n_records: int
    record_duration: float
    header_bytes: int
    signals: tuple

    @property
    def labels(self) -> list[str]:
        return [s.label for s in self.signals]


def _ascii(buf, path, what):
    try:
        return buf.decode("ascii").strip()
    except UnicodeDecodeError:
        raise FormatError(f"non-ASCII bytes in EDF field {what}", path) from None


def _num(text, path, what, cast=float):
    try:
        return cast(text)
    except ValueError:
        raise FormatError(f"bad EDF {what} field {text!r}", path) from None


def read_edf_header(path) -> EdfHeader:
    path = Path(path)
    with open(path, "rb") as fh:
        fixed = fh.read(256)
        if len(fixed) < 256:
            raise FormatError("truncated EDF fixed header", path)
        header_bytes = _num(_ascii(fixed[184:192], path, "header bytes"), path, "header bytes", int)
        n_records = _num(_ascii(fixed[236:244], path, "records"), path, "record count", int)
        duration = _num(_ascii(fixed[244:252], path, "duration"), path, "record duration")
        ns = _num(_ascii(fixed[252:256], path, "signals"), path, "signal count", int)
        if ns < 1:
            raise FormatError(f"EDF declares {ns} signals", path)
        block = fh.read(256 * ns)
        if len(block) < 256 * ns:
            raise FormatError("truncated EDF signal headers", path)

    def field(offset, width, i):
        start = offset * ns + width * i
        return _ascii(block[start : start + width], path, "signal header")

    # per-signal fields are stored field-by-field across all signals
    signals = []
    for i in range(ns):
        sh = EdfSignalHeader(
            label=field(0, 16, i),
            physical_min=_num(field(16 + 80 + 8, 8, i), path, "physical min"),
            physical_max=_num(field(16 + 80 + 8 + 8, 8, i), path, "physical max"),
            digital_min=_num(field(16 + 80 + 8 + 16, 8, i), path, "digital min", int),
            digital_max=_num(field(16 + 80 + 8 + 24, 8, i), path, "digital max", int),
            samples_per_record=_num(field(16 + 80 + 8 + 32 + 80, 8, i), path, "samples per record", int),
        )
        if sh.digital_max <= sh.digital_min:
            raise FormatError(f"signal {sh.label!r}: digital max <= digital min", path)
        if sh.samples_per_record < 1:
            raise FormatError(f"signal {sh.label!r}: samples per record < 1", path)
        signals.append(sh)
    if header_bytes != 256 * (ns + 1):
        raise FormatError(f"header size {header_bytes} inconsistent with {ns} signals", path)
    if not duration > 0:
        raise FormatError(f"record duration {duration} must be positive", path)
    return EdfHeader(n_records, duration, header_bytes, tuple(signals))


def read_edf(path, channel: str, label: str = "BT", subject_id: str = "", trial_id: str = "") -> SignalRecord:
    """Read one channel from a plain (non-EDF+) EDF file as physical units.

    Samples are little-endian int16, scaled affinely so that digital min/max
    map exactly to physical min/max. ``fs`` is samples_per_record / duration.
    """
    path = Path(path)
    hdr = read_edf_header(path)
    labels = hdr.labels
    if channel not in labels:
        raise FormatError(f"channel {channel!r} not found; available: {', '.join(labels)}", path)
    idx = labels.index(channel)
    per_record = sum(s.samples_per_record for s in hdr.signals)
    data = np.fromfile(path, dtype="<i2", offset=hdr.header_bytes)
    n_records = hdr.n_records
    if n_records < 0:
        n_records = data.size // per_record
    if n_records == 0 or data.size < n_records * per_record:
        raise FormatError(
            f"truncated EDF data: {data.size} samples for {n_records} records of {per_record}", path
        )
    records = data[: n_records * per_record].reshape(n_records, per_record)
    start = sum(s.samples_per_record for s in hdr.signals[:idx])
    sh = hdr.signals[idx]
    digital = records[:, start : start + sh.samples_per_record].reshape(-1).astype(np.float64)
    gain = (sh.physical_max - sh.physical_min) / (sh.digital_max - sh.digital_min)
    physical = sh.physical_min + (digital - sh.digital_min) * gain
    fs = sh.samples_per_record / hdr.record_duration
    return SignalRecord(physical, fs, label, subject_id, trial_id, channel)


def write_edf(path, signals: dict, fs: float, record_duration: float = 1.0, physical_range=None):
    """Write equal-rate signals to a minimal EDF file (int16, one block per second by default).

    ``signals`` maps label -> samples. Used for fixtures and demos.
    """
    labels = list(signals)
    arrays = [np.asarray(signals[k], dtype=np.float64) for k in labels]
    spr = int(round(fs * record_duration))
    n_records = min(a.size for a in arrays) // spr
    ns = len(arrays)
    dmin, dmax = -32768, 32767
    ranges = []
    for a in arrays:
        lo, hi = physical_range or (float(a.min()), float(a.max()))
        if hi <= lo:
            hi = lo + 1.0
        ranges.append((lo, hi))

    def pad(text, width):
        text = str(text)
        if len(text) > width:
            text = text[:width]
        return text.ljust(width).encode("ascii")

    def num(x, width):
        s = f"{x:.6g}" if isinstance(x, float) else str(x)
        return pad(s, width)

    head = b"".join(
        [
            pad("0", 8), pad("X X X X", 80), pad("Startdate X X X X", 80),
            pad("01.01.00", 8), pad("00.00.00", 8), pad(256 * (ns + 1), 8),
            pad("", 44), pad(n_records, 8), num(float(record_duration), 8), pad(ns, 4),
        ]
    )
    cols = [
        [pad(l, 16) for l in labels],
        [pad("", 80)] * ns,
        [pad("uV", 8)] * ns,
        [num(r[0], 8) for r in ranges],
        [num(r[1], 8) for r in ranges],
        [pad(dmin, 8)] * ns,
        [pad(dmax, 8)] * ns,
        [pad("", 80)] * ns,
        [pad(spr, 8)] * ns,
        [pad("", 32)] * ns,
    ]
    head += b"".join(b"".join(c) for c in cols)
    # physical range text is rounded to 8 chars; quantise against what a reader will parse
    parsed = [(float(num(r[0], 8)), float(num(r[1], 8))) for r in ranges]
    digital = []
    for a, (lo, hi) in zip(arrays, parsed):
        d = np.round((a[: n_records * spr] - lo) / (hi - lo) * (dmax - dmin) + dmin)
        digital.append(np.clip(d, dmin, dmax).astype("<i2").reshape(n_records, spr))
    body = np.concatenate(digital, axis=1).tobytes()
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(body)


# --- manifests --------------------------------------------------------------------

MANIFEST_COLUMNS = ("path", "format", "channel", "fs", "label", "subject_id", "trial_id")


@dataclass(frozen=True)
class ManifestRow:
    path: Path
    format: str
    channel: str
    fs: float | None
    label: str
    subject_id: str
    trial_id: str
    row: int = 0  # 1-based line in the manifest file


def read_manifest(path, labels_required: bool = True) -> list[ManifestRow]:
    """Parse a seven-column manifest. Relative paths resolve against the manifest's directory.

    Formats: ``csv`` (one value per line), ``csv-header`` (same, first line
    skipped), ``csv-tv`` (``time,value``), ``edf``. ``fs`` may be blank for EDF.
    """
    path = Path(path)
    base = path.parent
    rows = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in MANIFEST_COLUMNS if c not in (reader.fieldnames or ())]
        if missing:
            raise FormatError(f"manifest lacks columns {missing}", path, 1)
        for lineno, r in enumerate(reader, start=2):
            fmt = r["format"].strip().lower()
            if fmt not in ("csv", "csv-header", "csv-tv", "edf"):
                raise FormatError(f"unknown format {fmt!r}", path, lineno)
            fs_text = r["fs"].strip()
            fs = _parse_float(fs_text, path, lineno) if fs_text else None
            if fs is None and fmt != "edf":
                raise FormatError("fs is required for CSV signals", path, lineno)
            if fs is not None and fs <= 0:
                raise FormatError(f"fs must be positive, got {fs}", path, lineno)
            label = r["label"].strip()
            if labels_required:
                try:
                    check_label(label)
                except Exception as exc:
                    raise FormatError(str(exc), path, lineno) from None
            p = Path(r["path"].strip())
            if not p.is_absolute():
                p = base / p
            if not p.exists():
                raise FormatError(f"signal file {p} does not exist", path, lineno)
            rows.append(
                ManifestRow(p, fmt, r["channel"].strip(), fs, label, r["subject_id"].strip(), r["trial_id"].strip(), lineno)
            )
    return rows


def load_record(row: ManifestRow) -> SignalRecord:
    if row.format == "edf":
        rec = read_edf(row.path, row.channel, row.label, row.subject_id, row.trial_id)
        return rec
    spec = CsvSpec(
        fs=row.fs,
        header=row.format == "csv-header",
        columns=2 if row.format == "csv-tv" else 1,
        label=row.label,
        subject_id=row.subject_id,
        trial_id=row.trial_id,
        channel=row.channel,
    )
    return read_csv_signal(row.path, spec)


# --- window archives -------------------------------------------------------------------

ARCHIVE_INDEX = "index.csv"
ARCHIVE_DATA = "windows.f64"
INDEX_COLUMNS = ["window_id", "subject_id", "trial_id", "label", "channel", "fs", "offset", "n_samples"]


def write_archive(directory, windows, extra_columns=()) -> None:
    """Write ``index.csv`` plus ``windows.f64`` (row-major float64 LE, one window per row).

    ``extra_columns`` names ``meta`` keys to append to the index.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    windows = list(windows)
    lengths = {w.n for w in windows}
    if len(lengths) > 1:
        raise InvalidArgumentError(f"windows of differing lengths {sorted(lengths)}")
    cols = INDEX_COLUMNS + list(extra_columns)
    with open(directory / ARCHIVE_INDEX, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for i, win in enumerate(windows):
            row = [i, win.subject_id, win.trial_id, win.label, win.channel, repr(float(win.fs)), win.offset, win.n]
            row += [_fmt(win.meta.get(c, "")) for c in extra_columns]
            w.writerow(row)
    data = np.stack([w.samples for w in windows]) if windows else np.zeros((0,))
    data.astype("<f8").tofile(directory / ARCHIVE_DATA)


def _fmt(v):
    return repr(float(v)) if isinstance(v, float) else str(v)


def read_archive(directory) -> list[Window]:
    directory = Path(directory)
    index = directory / ARCHIVE_INDEX
    if not index.exists():
        raise DatasetError(f"{directory} is not a window archive (no {ARCHIVE_INDEX})")
    with open(index, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    data = np.fromfile(directory / ARCHIVE_DATA, dtype="<f8")
    if not rows:
        return []
    n = int(rows[0]["n_samples"])
    if data.size != n * len(rows):
        raise FormatError(f"{ARCHIVE_DATA} holds {data.size} values, index implies {n * len(rows)}", directory)
    data = data.reshape(len(rows), n)
    out = []
    for r, x in zip(rows, data):
        meta = {k: v for k, v in r.items() if k not in INDEX_COLUMNS}
        out.append(
            Window(x.copy(), float(r["fs"]), r["label"], r["subject_id"], r["trial_id"], int(r["offset"]), r["channel"], meta)
        )
    return out


# --- checkpoints -----------------------------------------------------------------------

MAGIC = b"MTCNN1"
CHECKPOINT_VERSION = 1


@dataclass
class ModelCheckpoint:
    config: ModelConfig
    seed: int
    buffers: list  # [(name, float64 array)] in declared parameter order

    @classmethod
    def from_model(cls, model: CNN1D, seed: int) -> "ModelCheckpoint":
        return cls(model.config, seed, [(n, p.copy()) for n, p in model.named_parameters()])

    def to_model(self) -> CNN1D:
        model = CNN1D(self.config)
        expected = model.named_parameters()
        if [n for n, _ in expected] != [n for n, _ in self.buffers]:
            raise CorruptCheckpointError("buffer names do not match the model layout")
        for (name, dst), (_, src) in zip(expected, self.buffers):
            if src.size != dst.size:
                raise CorruptCheckpointError(f"buffer {name}: {src.size} values, layout needs {dst.size}")
            dst[...] = src.reshape(dst.shape)
        return model


def write_checkpoint(path, ckpt: ModelCheckpoint) -> None:
    """Layout: magic, u32 version, u32 config length + UTF-8 JSON, u64 seed,
    u32 buffer count, then per buffer u16 name length + name, u64 value count,
    float64 LE payload. All integers little-endian.
    """
    cfg = json.dumps(ckpt.config.to_dict(), sort_keys=True, separators=(",", ":")).encode("utf-8")
    parts = [MAGIC, struct.pack("<I", CHECKPOINT_VERSION), struct.pack("<I", len(cfg)), cfg]
    parts.append(struct.pack("<QI", ckpt.seed, len(ckpt.buffers)))
    for name, buf in ckpt.buffers:
        nb = name.encode("utf-8")
        flat = np.ascontiguousarray(buf, dtype="<f8").reshape(-1)
        parts += [struct.pack("<H", len(nb)), nb, struct.pack("<Q", flat.size), flat.tobytes()]
    tmp = Path(str(path) + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(b"".join(parts))
    os.replace(tmp, path)


def read_checkpoint(path) -> ModelCheckpoint:
    path = Path(path)
    blob = path.read_bytes()
    if blob[: len(MAGIC)] != MAGIC:
        raise NotACheckpointError("bad magic; not a model checkpoint", path)
    pos = len(MAGIC)

    def take(n):
        nonlocal pos
        if pos + n > len(blob):
            raise CorruptCheckpointError(f"truncated at byte {pos} (needed {n} more)", path)
        chunk = blob[pos : pos + n]
        pos += n
        return chunk

    (version,) = struct.unpack("<I", take(4))
    if version != CHECKPOINT_VERSION:
        raise VersionMismatchError(f"checkpoint version {version}, reader supports {CHECKPOINT_VERSION}", path)
    (cfg_len,) = struct.unpack("<I", take(4))
    try:
        config = ModelConfig.from_dict(json.loads(take(cfg_len).decode("utf-8")))
    except (ValueError, TypeError, ConfigError) as exc:
        raise CorruptCheckpointError(f"bad config block: {exc}", path) from None
    seed, count = struct.unpack("<QI", take(12))
    buffers = []
    for _ in range(count):
        (nlen,) = struct.unpack("<H", take(2))
        name = take(nlen).decode("utf-8", errors="replace")
        (size,) = struct.unpack("<Q", take(8))
        if size * 8 > len(blob) - pos:
            raise CorruptCheckpointError(f"buffer {name!r} length {size} overruns the file", path)
        buffers.append((name, np.frombuffer(take(size * 8), dtype="<f8").astype(np.float64)))
    if pos != len(blob):
        raise CorruptCheckpointError(f"{len(blob) - pos} trailing bytes", path)
    ckpt = ModelCheckpoint(config, seed, buffers)
    ckpt.to_model()  # validates buffer layout
    return ckpt


def save_model(path, model: CNN1D, seed: int) -> None:
    write_checkpoint(path, ModelCheckpoint.from_model(model, seed))


def load_model(path) -> CNN1D:
    return read_checkpoint(path).to_model()


# --- artifact manifests ----------------------------------------------------------------

ARTIFACT_COLUMNS = ("path", "format", "channel", "fs", "kind", "source_id")


def read_artifact_manifest(path):
    """Artifact sources: ``path,format,channel,fs,kind,source_id`` with kind ocular|muscle.

    Returns ``[(ManifestRow, kind)]``; the row's ``trial_id`` holds the source id.
    """
    path = Path(path)
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in ARTIFACT_COLUMNS if c not in (reader.fieldnames or ())]
        if missing:
            raise FormatError(f"artifact manifest lacks columns {missing}", path, 1)
        for lineno, r in enumerate(reader, start=2):
            kind = r["kind"].strip().lower()
            if kind not in ("ocular", "muscle"):
                raise FormatError(f"artifact kind must be ocular or muscle, got {kind!r}", path, lineno)
            fmt = r["format"].strip().lower()
            if fmt not in ("csv", "csv-header", "csv-tv", "edf"):
                raise FormatError(f"unknown format {fmt!r}", path, lineno)
            fs_text = r["fs"].strip()
            fs = _parse_float(fs_text, path, lineno) if fs_text else None
            if fs is None and fmt != "edf":
                raise FormatError("fs is required for CSV signals", path, lineno)
            p = Path(r["path"].strip())
            if not p.is_absolute():
                p = path.parent / p
            if not p.exists():
                raise FormatError(f"artifact file {p} does not exist", path, lineno)
            sid = r["source_id"].strip() or p.stem
            # label is irrelevant for artifacts; BT keeps SignalRecord validation happy
            out.append((ManifestRow(p, fmt, r["channel"].strip(), fs, "BT", "", sid, lineno), kind))
    return out
