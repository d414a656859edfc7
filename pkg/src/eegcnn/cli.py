"""Command-line entry point: ``eegcnn <subcommand>`` or ``python -m eegcnn``.

Subcommands: preprocess, contaminate, train, eval, export-activations.

Exit codes: 0 success, 1 other package error, 2 usage error, 3 dataset
error, 4 configuration error, 5 file/format error.
"""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import artifacts, io
from .errors import (
    ConfigError,
    DatasetError,
    EEGCNNError,
    FormatError,
    InvalidArgumentError,
    LabelError,
    ShapeError,
)
from .export import export_activations
from .model import ModelConfig
from .signals import TARGET_FS, Window, resample_cubic, segment, window_length, zscore
from .training import (
    WindowSet,
    class_order,
    evaluate,
    make_folds,
    make_subject_folds,
    metrics_from_confusion,
    train_model,
)

log = logging.getLogger("eegcnn")

EXIT_OK, EXIT_OTHER, EXIT_USAGE, EXIT_DATASET, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3, 4, 5
WINDOW_SECONDS = (2, 4, 6, 8, 10)


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (DatasetError, LabelError)):
        return EXIT_DATASET
    if isinstance(exc, (ConfigError, ShapeError, InvalidArgumentError)):
        return EXIT_CONFIG
    if isinstance(exc, (FormatError, OSError)):
        return EXIT_IO
    return EXIT_OTHER


def _floats(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _onoff(text: str) -> bool:
    if text not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected on or off")
    return text == "on"


def _fmt(v) -> str:
    if v is None:
        return "undefined"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: Path, header, rows):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


# --- preprocess ------------------------------------------------------------------


def cmd_preprocess(args) -> int:
    rows = io.read_manifest(args.manifest)
    if not rows:
        raise DatasetError(f"manifest {args.manifest} lists no records")
    windows: list[Window] = []
    for row in rows:
        try:
            rec = io.load_record(row)
            if rec.fs != args.fs_target:
                rec = resample_cubic(rec, args.fs_target)
            ws = segment(rec, args.window_seconds, args.overlap)
        except EEGCNNError as exc:
            raise type(exc)(f"manifest row {row.row} ({row.path}): {exc}") from exc
        if args.zscore:
            ws = [w.with_samples(zscore(w.samples)) for w in ws]
        windows.extend(ws)
    if not windows:
        raise DatasetError("no record is long enough for one window")
    io.write_archive(args.out, windows)
    per_class = Counter(w.label for w in windows)
    print(f"records: {len(rows)}  windows: {len(windows)}")
    for label in class_order(list(per_class)):
        print(f"  {label}: {per_class[label]}")
    return EXIT_OK


# --- contaminate ---------------------------------------------------------------------


def _load_artifacts(path, fs: float):
    oa, ma = [], []
    for row, kind in io.read_artifact_manifest(path):
        rec = io.load_record(row)
        if rec.fs != fs:
            rec = resample_cubic(rec, fs)
        src = artifacts.ArtifactSource(rec.samples, kind, fs, row.trial_id)
        (oa if kind == "ocular" else ma).append(src)
    return oa, ma


REPORT_COLUMNS = ["window_id", "clean_id", "oa_id", "oa_offset", "ma_id", "ma_offset", "lambda", "beta", "snr"]


def cmd_contaminate(args) -> int:
    windows = io.read_archive(args.archive)
    if not windows:
        raise DatasetError(f"archive {args.archive} is empty")
    fs = windows[0].fs
    oa, ma = _load_artifacts(args.artifacts, fs)
    mode = artifacts.Mode.parse(args.mode)
    for src in (oa if mode.uses_oa else []) + (ma if mode.uses_ma else []):
        if src.samples.size < windows[0].n:
            raise DatasetError(
                f"artifact {src.source_id!r} has {src.samples.size} samples, windows need {windows[0].n}"
            )
    reals = artifacts.sweep(windows, oa, ma, args.lambdas, args.betas, mode, args.seed)
    out = Path(args.out)
    extra = ["clean_id", "oa_id", "oa_offset", "ma_id", "ma_offset", "lambda", "beta", "mode"]
    io.write_archive(out, [r.window for r in reals], extra_columns=extra)
    rows = []
    for i, r in enumerate(reals):
        m = r.window.meta
        rows.append([i, m["clean_id"], m.get("oa_id", ""), m.get("oa_offset", ""), m.get("ma_id", ""),
                     m.get("ma_offset", ""), float(m["lambda"]), float(m["beta"]), r.snr])
    _write_csv(out / "snr_report.csv", REPORT_COLUMNS, rows)
    summary = artifacts.mean_snr_by_grid(reals)
    _write_csv(out / "snr_summary.csv", ["lambda", "beta", "mean_snr"],
               [[float(l), float(b), s] for (l, b), s in summary.items()])
    defined = [s for s in summary.values() if s is not None]
    print(f"realizations: {len(reals)}  grid points: {len(summary)}")
    if defined:
        print(f"mean SNR range: {min(defined):.3f} - {max(defined):.3f}")
    return EXIT_OK


# --- train -----------------------------------------------------------------------------


@dataclass
class RunSpec:
    archive: Path
    out: Path
    seed: int = 0
    window_seconds: list = field(default_factory=list)
    depths: list = field(default_factory=lambda: [2])
    classes: str = ""
    head: str = ""
    folds: int = 10
    stratify: bool = True
    dense_bias: bool = False
    epochs: int = 20
    batch_size: int = 50
    lr: float = 0.001
    group: str = "trial"

    def __post_init__(self):
        for w in self.window_seconds:
            if w not in WINDOW_SECONDS:
                raise ConfigError(f"window seconds must be one of {WINDOW_SECONDS}, got {w}")
        for d in self.depths:
            if d not in (1, 2, 3):
                raise ConfigError(f"depth must be 1, 2 or 3, got {d}")


def _select_classes(windows, classes_arg: str):
    labels = class_order([w.label for w in windows])
    if not classes_arg:
        chosen = labels
    elif classes_arg.isdigit():
        if int(classes_arg) != len(labels):
            raise DatasetError(f"--classes {classes_arg} but archive has {len(labels)} classes {labels}")
        chosen = labels
    else:
        wanted = [c.strip() for c in classes_arg.split(",") if c.strip()]
        missing = [c for c in wanted if c not in labels]
        if missing:
            raise DatasetError(f"classes {missing} absent from archive (has {labels})")
        chosen = class_order(wanted)
        windows = [w for w in windows if w.label in chosen]
    if len(chosen) < 2:
        raise DatasetError(f"need at least two classes, archive has {chosen}")
    return windows, tuple(chosen)


def _rewindow(windows, n: int):
    """Split each window into consecutive non-overlapping sub-windows of ``n`` samples."""
    if not windows:
        return windows
    length = windows[0].n
    if n > length:
        raise ConfigError(f"requested {n}-sample windows but archive windows have {length}")
    if n == length:
        return windows
    out = []
    for w in windows:
        for k in range(length // n):
            out.append(Window(w.samples[k * n : (k + 1) * n].copy(), w.fs, w.label, w.subject_id,
                              w.trial_id, w.offset + k * n, w.channel, dict(w.meta)))
    return out


METRIC_COLUMNS = ["fold", "accuracy", "precision", "recall", "f1", "n_test"]
EPOCH_COLUMNS = ["epoch", "train_loss", "train_acc", "val_loss", "val_acc"]


def _aggregate_rows(per_fold):
    rows = []
    keys = ["accuracy", "precision", "recall", "f1"]
    means, stds = [], []
    for k in keys:
        vals = [m[k] for m in per_fold if m[k] is not None]
        means.append(float(np.mean(vals)) if vals else None)
        stds.append(float(np.std(vals)) if vals else None)
    rows.append(["mean", *means, ""])
    rows.append(["std", *stds, ""])
    rows.append(["mean(std)", *[
        "undefined" if m is None else f"{m:.4f}({s:.4f})" for m, s in zip(means, stds)
    ], ""])
    return rows


def run_training(spec: RunSpec) -> list[Path]:
    """Cross-validated training for every (window length, depth) combination.

    Returns the metrics CSV paths written.
    """
    windows = io.read_archive(spec.archive)
    if not windows:
        raise DatasetError(f"archive {spec.archive} is empty")
    windows, classes = _select_classes(windows, spec.classes)
    fs = windows[0].fs
    lengths = [window_length(fs, w) for w in spec.window_seconds] or [windows[0].n]
    combos = [(n, d) for n in lengths for d in spec.depths]
    written = []
    for n, depth in combos:
        out = spec.out if len(combos) == 1 else spec.out / f"window{n / fs:g}s_depth{depth}"
        out.mkdir(parents=True, exist_ok=True)
        data = WindowSet.from_windows(_rewindow(windows, n))
        config = ModelConfig(window_samples=n, depth=depth, n_classes=len(classes), head=spec.head,
                             dense_bias=spec.dense_bias, fs=fs, labels=classes)
        trials = data.trials()
        if spec.group == "subject":
            subject_of = dict(zip(data.trial_keys, data.subjects))
            plan = make_subject_folds(subject_of, trials, spec.seed, spec.folds)
        else:
            plan = make_folds(trials, spec.seed, spec.folds, stratify=spec.stratify, classes=classes)
        per_fold, rows = [], []
        for k, fold in enumerate(plan.folds):
            fold_seed = spec.seed + k
            model, stats = train_model(config, fold, data, fold_seed, spec.epochs, spec.batch_size, spec.lr)
            fold_dir = out / f"fold{k:02d}"
            fold_dir.mkdir(exist_ok=True)
            io.save_model(fold_dir / "checkpoint.bin", model, fold_seed)
            _write_csv(fold_dir / "epochs.csv", EPOCH_COLUMNS,
                       [[s.epoch, s.train_loss, s.train_acc, s.val_loss, s.val_acc] for s in stats])
            test = data.select(fold.test)
            cm, met = evaluate(model, test.x, test.targets(classes))
            per_fold.append(met.as_dict())
            rows.append([k, met.accuracy, met.precision, met.recall, met.f1, len(test)])
            print(f"[n={n} depth={depth}] fold {k}: accuracy {_fmt(met.accuracy)}")
        rows += _aggregate_rows(per_fold)
        path = out / "metrics.csv"
        _write_csv(path, METRIC_COLUMNS, rows)
        print(f"[n={n} depth={depth}] {rows[-1][0]} accuracy {rows[-1][1]}")
        written.append(path)
    return written


def cmd_train(args) -> int:
    spec = RunSpec(
        archive=Path(args.archive), out=Path(args.out), seed=args.seed,
        window_seconds=args.window_seconds or [], depths=args.depth, classes=args.classes,
        head=args.head or "", folds=args.folds, stratify=args.stratify, dense_bias=args.dense_bias,
        epochs=args.epochs, batch_size=args.batch_size, lr=args.lr, group=args.group,
    )
    run_training(spec)
    return EXIT_OK


# --- eval --------------------------------------------------------------------------------


def cmd_eval(args) -> int:
    model = io.load_model(args.checkpoint)
    cfg = model.config
    windows = io.read_archive(args.archive)
    if not windows:
        raise DatasetError(f"archive {args.archive} is empty")
    if windows[0].n != cfg.window_samples:
        raise ConfigError(
            f"checkpoint expects {cfg.window_samples}-sample windows, archive has {windows[0].n}"
        )
    data = WindowSet.from_windows(windows)
    cm, met = evaluate(model, data.x, data.targets(cfg.labels))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = [["overall", met.accuracy, met.precision, met.recall, met.f1, cm.total]]
    for name, pc in met.per_class.items():
        rows.append([name, pc["accuracy"], pc["precision"], pc["recall"], pc["f1"], ""])
    _write_csv(out / "metrics.csv", ["scope", "accuracy", "precision", "recall", "f1", "n"], rows)
    names = list(cfg.labels) or [str(i) for i in range(cfg.n_classes)]
    _write_csv(out / "confusion.csv", ["true\\pred", *names],
               [[names[i], *map(int, cm.matrix[i])] for i in range(len(names))])
    print(f"windows: {cm.total}  accuracy: {_fmt(met.accuracy)}")
    return EXIT_OK


# --- export-activations ----------------------------------------------------------------------


def cmd_export(args) -> int:
    model = io.load_model(args.checkpoint)
    windows = io.read_archive(args.archive)
    if not 0 <= args.window_id < len(windows):
        raise DatasetError(f"window id {args.window_id} not in archive (0..{len(windows) - 1})")
    w = windows[args.window_id]
    if w.n != model.config.window_samples:
        raise ConfigError(f"checkpoint expects {model.config.window_samples}-sample windows, got {w.n}")
    shapes = export_activations(model, w.samples, args.out)
    for name, shape in shapes.items():
        print(f"{name}: {' x '.join(map(str, shape))}")
    return EXIT_OK


# --- parser -----------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eegcnn", description="1-D CNN mental-task classification pipeline")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    pp = sub.add_parser("preprocess", help="resample and window recordings listed in a manifest")
    pp.add_argument("--manifest", required=True)
    pp.add_argument("--out", required=True)
    pp.add_argument("--fs-target", type=float, default=TARGET_FS)
    pp.add_argument("--window-seconds", type=float, default=10.0)
    pp.add_argument("--overlap", type=float, default=0.0)
    pp.add_argument("--zscore", type=_onoff, default=False, metavar="{on,off}")
    pp.set_defaults(func=cmd_preprocess)

    pc = sub.add_parser("contaminate", help="mix artifacts into archive windows over a lambda/beta grid")
    pc.add_argument("--archive", required=True)
    pc.add_argument("--artifacts", required=True, help="artifact manifest CSV")
    pc.add_argument("--lambda", dest="lambdas", type=_floats, default=[1.0])
    pc.add_argument("--beta", dest="betas", type=_floats, default=[1.0])
    pc.add_argument("--mode", choices=["oa", "ma", "oamma"], default="oamma")
    pc.add_argument("--seed", type=int, default=0)
    pc.add_argument("--out", required=True)
    pc.set_defaults(func=cmd_contaminate)

    pt = sub.add_parser("train", help="cross-validated training")
    pt.add_argument("--archive", "--manifest", dest="archive", required=True,
                    help="window archive directory")
    pt.add_argument("--out", required=True)
    pt.add_argument("--seed", type=int, default=0)
    pt.add_argument("--window-seconds", type=_ints, default=None, help="e.g. 2,4,6,8,10")
    pt.add_argument("--depth", type=_ints, default=[2], help="e.g. 1,2,3")
    pt.add_argument("--classes", default="", help="class count, or labels to keep, e.g. BT,ST")
    pt.add_argument("--head", choices=["sigmoid", "softmax"], default=None)
    pt.add_argument("--folds", type=int, default=10)
    pt.add_argument("--stratify", type=_onoff, default=True, metavar="{on,off}")
    pt.add_argument("--dense-bias", type=_onoff, default=False, metavar="{on,off}")
    pt.add_argument("--group", choices=["trial", "subject"], default="trial")
    pt.add_argument("--epochs", type=int, default=20)
    pt.add_argument("--batch-size", type=int, default=50)
    pt.add_argument("--lr", type=float, default=0.001)
    pt.set_defaults(func=cmd_train)

    pe = sub.add_parser("eval", help="evaluate a checkpoint on an archive")
    pe.add_argument("--checkpoint", required=True)
    pe.add_argument("--archive", required=True)
    pe.add_argument("--out", required=True)
    pe.set_defaults(func=cmd_eval)

    px = sub.add_parser("export-activations", help="dump per-layer activations and weights for one window")
    px.add_argument("--checkpoint", required=True)
    px.add_argument("--archive", required=True)
    px.add_argument("--window-id", type=int, required=True)
    px.add_argument("--out", required=True)
    px.set_defaults(func=cmd_export)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return args.func(args)
    except (EEGCNNError, OSError) as exc:
        print(f"eegcnn {args.command}: error: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
