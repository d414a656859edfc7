"""Losses, Adam, fold plans, the training loop and classification metrics."""
from __future__ import annotations

import logging
import math
import warnings
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import DatasetError, LabelError, ShapeError
from .model import CNN1D, ModelConfig
from .numeric import SeededGenerator
from .signals import TASK_LABELS

log = logging.getLogger(__name__)

PROB_CLAMP = 1e-12


# --- losses -----------------------------------------------------------------

def bce_loss(p, y):
    """Binary cross entropy, elementwise; ``p`` is clamped to [1e-12, 1 - 1e-12]."""
    p = np.clip(np.asarray(p, dtype=np.float64), PROB_CLAMP, 1 - PROB_CLAMP)
    y = np.asarray(y, dtype=np.float64)
    out = -(y * np.log(p) + (1 - y) * np.log(1 - p))
    return float(out) if out.ndim == 0 else out


def cce_loss(p, y):
    """Categorical cross entropy over the last axis; ``y`` must be one-hot."""
    p = np.clip(np.asarray(p, dtype=np.float64), PROB_CLAMP, 1.0)
    y = np.asarray(y, dtype=np.float64)
    if y.shape != p.shape:
        raise ShapeError(f"label shape {y.shape} does not match probabilities {p.shape}")
    if not (np.all((y == 0) | (y == 1)) and np.all(y.sum(axis=-1) == 1)):
        raise LabelError("labels must be one-hot")
    out = -np.sum(y * np.log(p), axis=-1)
    return float(out) if out.ndim == 0 else out


def one_hot(y, n_classes: int) -> np.ndarray:
    y = np.asarray(y, dtype=np.int64)
    out = np.zeros((y.size, n_classes))
    out[np.arange(y.size), y] = 1.0
    return out


def batch_loss(config: ModelConfig, probs: np.ndarray, y: np.ndarray, logits: np.ndarray | None = None):
    """Mean loss over a batch and its gradient w.r.t. the logits (``(p - y) / B``).

    With ``logits`` the loss is evaluated as log-sigmoid/log-softmax, which
    stays accurate when a probability rounds to within 1e-9 of 0 or 1; the
    per-sample value is capped at ``-log(1e-12)``, the bound the probability
    clamp implies.
    """
    b = len(y)
    if config.head == "sigmoid":
        target = np.asarray(y, dtype=np.float64)[:, None]
    else:
        target = one_hot(y, config.n_classes)
    if logits is None:
        if config.head == "sigmoid":
            loss = float(np.mean(bce_loss(probs, target)))
        else:
            loss = float(np.mean(cce_loss(probs, target)))
    else:
        z = np.asarray(logits, dtype=np.float64)
        if config.head == "sigmoid":
            # -log sigmoid(z) = softplus(-z); -log(1 - sigmoid(z)) = softplus(z)
            per = np.where(target == 1, np.logaddexp(0, -z), np.logaddexp(0, z))[:, 0]
        else:
            zmax = z.max(axis=1, keepdims=True)
            logp = z - zmax - np.log(np.exp(z - zmax).sum(axis=1, keepdims=True))
            per = -np.sum(target * logp, axis=1)
        loss = float(np.mean(np.minimum(per, -math.log(PROB_CLAMP))))
    return loss, (probs - target) / b


# --- Adam -------------------------------------------------------------------

@dataclass
class AdamState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(state: AdamState, params, grads) -> None:
    """One bias-corrected Adam update, in place. ``params``/``grads`` map name -> array."""
    params = dict(params)
    grads = dict(grads)
    if params.keys() != grads.keys():
        raise ShapeError("parameter and gradient names differ")
    state.t += 1
    t = state.t
    c1 = 1 - state.beta1**t
    c2 = 1 - state.beta2**t
    for name, p in params.items():
        g = grads[name]
        if g.shape != p.shape:
            raise ShapeError(f"{name}: gradient {g.shape} vs parameter {p.shape}")
        if name not in state.m:
            state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        m, v = state.m[name], state.v[name]
        m *= state.beta1
        m += (1 - state.beta1) * g
        v *= state.beta2
        v += (1 - state.beta2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.epsilon)


# --- data and folds ---------------------------------------------------------

def class_order(labels: Sequence[str]) -> tuple[str, ...]:
    """Distinct labels, task vocabulary order first (so BT is class 0, the negative)."""
    seen = set(labels)
    known = [t for t in TASK_LABELS if t in seen]
    return tuple(known + sorted(seen - set(known)))


@dataclass
class WindowSet:
    """Windows stacked as ``(n, samples)`` with their labels and trial keys."""

    x: np.ndarray
    labels: np.ndarray
    trial_keys: list
    subjects: list = field(default_factory=list)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=object)
        if not self.subjects:
            self.subjects = [k[0] for k in self.trial_keys]
        if not (len(self.x) == len(self.labels) == len(self.trial_keys)):
            raise ShapeError("windows, labels and trial keys differ in length")

    def __len__(self):
        return len(self.x)

    @classmethod
    def from_windows(cls, windows) -> "WindowSet":
        windows = list(windows)
        if not windows:
            return cls(np.zeros((0, 0)), np.array([], dtype=object), [])
        return cls(
            np.stack([w.samples for w in windows]),
            np.array([w.label for w in windows], dtype=object),
            [w.trial_key for w in windows],
        )

    def targets(self, classes: Sequence[str]) -> np.ndarray:
        index = {c: i for i, c in enumerate(classes)}
        try:
            return np.array([index[l] for l in self.labels], dtype=np.int64)
        except KeyError as exc:
            raise LabelError(f"label {exc.args[0]!r} not among model classes {tuple(classes)}") from None

    def select(self, keys) -> "WindowSet":
        keys = set(keys)
        idx = [i for i, k in enumerate(self.trial_keys) if k in keys]
        return self.take(idx)

    def take(self, idx) -> "WindowSet":
        idx = list(idx)
        return WindowSet(
            self.x[idx] if idx else np.zeros((0, self.x.shape[1] if self.x.ndim == 2 else 0)),
            self.labels[idx],
            [self.trial_keys[i] for i in idx],
            [self.subjects[i] for i in idx],
        )

    def trials(self) -> list[tuple]:
        """(trial key, label) pairs in first-seen order."""
        seen = {}
        for k, l in zip(self.trial_keys, self.labels):
            if k in seen and seen[k] != l:
                raise LabelError(f"trial {k} carries two labels")
            seen.setdefault(k, l)
        return list(seen.items())


@dataclass(frozen=True)
class Fold:
    train: tuple
    val: tuple
    test: tuple


@dataclass(frozen=True)
class FoldPlan:
    folds: tuple
    seed: int
    stratified: bool

    def __len__(self):
        return len(self.folds)

    def __getitem__(self, i) -> Fold:
        return self.folds[i]


def make_folds(
    trials: Sequence[tuple],
    seed: int,
    n_folds: int = 10,
    stratify: bool = True,
    classes: Sequence[str] | None = None,
) -> FoldPlan:
    """Rotating folds: fold k tests group k, validates on group k + n_folds//2,
    trains on the rest.

    ``trials`` is a sequence of ``(trial_key, label)``. Groups are dealt
    round-robin from a seeded shuffle; with ``stratify`` each class is
    shuffled separately and dealt consecutively, so every group gets a
    near-equal share of each class. Group sizes differ by at most one, and
    the larger groups come first, so pairing groups half a cycle apart keeps
    the train share within one trial of its nominal size.
    """
    trials = list(trials)
    if n_folds < 3:
        raise DatasetError(f"need at least 3 folds for train/val/test, got {n_folds}")
    by_class = defaultdict(list)
    for key, label in trials:
        by_class[label].append(key)
    for c in classes or ():
        if not by_class.get(c):
            raise DatasetError(f"class {c!r} has no trials")
    if len(trials) < n_folds:
        raise DatasetError(f"{len(trials)} trials cannot fill {n_folds} folds")
    small = [c for c, ks in by_class.items() if len(ks) < n_folds]
    if small:
        warnings.warn(f"classes {small} have fewer than {n_folds} trials; folds will be unbalanced")

    gen = SeededGenerator(seed)
    if stratify:
        order = []
        for c in class_order(list(by_class)):
            keys = by_class[c]
            order.extend(keys[i] for i in gen.permutation(len(keys)))
    else:
        keys = [k for k, _ in trials]
        order = [keys[i] for i in gen.permutation(len(keys))]
    groups = [order[g::n_folds] for g in range(n_folds)]
    folds = []
    for k in range(n_folds):
        v = (k + n_folds // 2) % n_folds
        test = tuple(groups[k])
        val = tuple(groups[v])
        train = tuple(key for g in range(n_folds) if g not in (k, v) for key in groups[g])
        folds.append(Fold(train, val, test))
    return FoldPlan(tuple(folds), seed, stratify)


def make_subject_folds(subject_of: dict, trials: Sequence[tuple], seed: int, n_folds: int = 10) -> FoldPlan:
    """Leave-subjects-out variant: whole subjects are dealt into groups."""
    subjects = sorted({subject_of[k] for k, _ in trials})
    plan = make_folds([(s, "all") for s in subjects], seed, n_folds, stratify=False)
    keys_of = defaultdict(list)
    for k, _ in trials:
        keys_of[subject_of[k]].append(k)
    expand = lambda ss: tuple(k for s in ss for k in keys_of[s])
    folds = tuple(Fold(expand(f.train), expand(f.val), expand(f.test)) for f in plan.folds)
    return FoldPlan(folds, seed, False)


# --- metrics ----------------------------------------------------------------

@dataclass
class ConfusionCounts:
    """``matrix[true, predicted]``; for two classes, class 1 is the positive."""

    matrix: np.ndarray
    classes: tuple = ()

    @property
    def total(self) -> int:
        return int(self.matrix.sum())

    def one_vs_rest(self, c: int) -> tuple[int, int, int, int]:
        """(TP, TN, FP, FN) treating class ``c`` as positive."""
        m = self.matrix
        tp = int(m[c, c])
        fp = int(m[:, c].sum() - tp)
        fn = int(m[c, :].sum() - tp)
        tn = int(m.sum() - tp - fp - fn)
        return tp, tn, fp, fn

    @property
    def tp(self):
        return self.one_vs_rest(1)[0]

    @property
    def tn(self):
        return self.one_vs_rest(1)[1]

    @property
    def fp(self):
        return self.one_vs_rest(1)[2]

    @property
    def fn(self):
        return self.one_vs_rest(1)[3]


def confusion(y_true, y_pred, n_classes: int, classes=()) -> ConfusionCounts:
    m = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(m, (np.asarray(y_true, dtype=np.int64), np.asarray(y_pred, dtype=np.int64)), 1)
    return ConfusionCounts(m, tuple(classes))


def _ratio(num, den):
    return None if den == 0 else num / den


def binary_metrics(tp: int, tn: int, fp: int, fn: int) -> dict:
    """Accuracy, precision, recall and F1; ``None`` marks a zero denominator."""
    acc = _ratio(tp + tn, tp + tn + fp + fn)
    prc = _ratio(tp, tp + fp)
    rcl = _ratio(tp, tp + fn)
    if prc is None or rcl is None or prc + rcl == 0:
        f1 = None
    else:
        f1 = 2 * prc * rcl / (prc + rcl)
    return {"accuracy": acc, "precision": prc, "recall": rcl, "f1": f1}


def _macro(values):
    vals = [v for v in values if v is not None]
    return sum(vals) / len(vals) if vals else None


@dataclass
class Metrics:
    accuracy: float | None
    precision: float | None
    recall: float | None
    f1: float | None
    per_class: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"accuracy": self.accuracy, "precision": self.precision, "recall": self.recall, "f1": self.f1}


def metrics_from_confusion(cm: ConfusionCounts) -> Metrics:
    """Binary: positive-class metrics. Multi-class: one-vs-rest per class, macro average."""
    n = cm.matrix.shape[0]
    total = cm.total
    if n == 2:
        d = binary_metrics(*cm.one_vs_rest(1))
        return Metrics(**d)
    per = {}
    for c in range(n):
        name = cm.classes[c] if cm.classes else str(c)
        per[name] = binary_metrics(*cm.one_vs_rest(c))
    acc = _ratio(int(np.trace(cm.matrix)), total)
    return Metrics(
        acc,
        _macro(p["precision"] for p in per.values()),
        _macro(p["recall"] for p in per.values()),
        _macro(p["f1"] for p in per.values()),
        per,
    )


def evaluate(model: CNN1D, x, y) -> tuple[ConfusionCounts, Metrics]:
    cfg = model.config
    pred = model.predict(x) if len(x) else np.zeros(0, dtype=np.int64)
    cm = confusion(y, pred, cfg.n_classes, cfg.labels)
    return cm, metrics_from_confusion(cm)


# --- training loop ------------------------------------------------------------

@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    train_acc: float
    val_loss: float | None
    val_acc: float | None


def _loss_acc(model: CNN1D, x, y):
    if len(x) == 0:
        return None, None
    probs, logits = model.predict_proba(x, return_logits=True)
    loss, _ = batch_loss(model.config, probs, y, logits)
    if model.config.head == "sigmoid":
        pred = (probs[:, 0] >= 0.5).astype(np.int64)
    else:
        pred = np.argmax(probs, axis=1)
    return loss, float(np.mean(pred == y))


def train_model(
    config: ModelConfig,
    fold: Fold,
    data: WindowSet,
    seed: int,
    epochs: int = 20,
    batch_size: int = 50,
    lr: float = 0.001,
) -> tuple[CNN1D, list[EpochStats]]:
    """Mini-batch Adam on ``fold.train`` with per-epoch train/validation stats.

    Stats are computed in inference mode after each epoch; row 0 is the
    untrained model. Initialization, batch order and dropout masks come from
    separate streams derived from ``seed``.
    """
    if not config.labels:
        config = replace(config, labels=class_order(list(data.labels)))
    classes = config.labels
    train = data.select(fold.train)
    val = data.select(fold.val)
    if len(train) == 0:
        raise DatasetError("empty training set")
    y_train = train.targets(classes)
    y_val = val.targets(classes) if len(val) else np.zeros(0, dtype=np.int64)

    model = CNN1D(config).initialize(seed)
    root = SeededGenerator(seed)
    adam = AdamState(lr=lr)
    stats = [EpochStats(0, *_loss_acc(model, train.x, y_train), *_loss_acc(model, val.x, y_val))]
    for epoch in range(1, epochs + 1):
        order = root.derive(1, epoch).permutation(len(train))
        drop_gen = root.derive(2, epoch)
        for start in range(0, len(order), batch_size):
            idx = order[start : start + batch_size]
            probs = model.forward(train.x[idx], train=True, gen=drop_gen)
            _, dz = batch_loss(config, probs, y_train[idx])
            grads = model.backward(grad_logits=dz)
            adam_step(adam, model.named_parameters(), grads)
        row = EpochStats(epoch, *_loss_acc(model, train.x, y_train), *_loss_acc(model, val.x, y_val))
        log.debug("epoch %d %s", epoch, row)
        stats.append(row)
        if not math.isfinite(row.train_loss):
            raise FloatingPointError(f"training loss diverged at epoch {epoch}")
    return model, stats
