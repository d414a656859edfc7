"""The full network: conv(+ReLU) x depth -> maxpool -> flatten+dropout -> dense."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigError, ShapeError, StateError
from .layers import Conv1D, Dense, Dropout, MaxPool1D, flatten
from .numeric import SeededGenerator

DEFAULT_FILTERS = (16, 32, 64)


@dataclass(frozen=True)
class ModelConfig:
    """Network shape. ``n_classes == 2`` with a sigmoid head gives one output unit."""

    window_samples: int = 5000
    depth: int = 2
    n_classes: int = 2
    head: str = ""  # "" picks sigmoid for two classes, softmax otherwise
    kernel_size: int = 5
    filters: tuple = ()
    pool: int = 2
    dropout: float = 0.25
    dense_bias: bool = False
    fs: float = 500.0
    labels: tuple = field(default=())

    def __post_init__(self):
        if not 1 <= self.depth <= 3:
            raise ConfigError(f"conv depth must be 1, 2 or 3, got {self.depth}")
        if self.n_classes < 2:
            raise ConfigError(f"need at least two classes, got {self.n_classes}")
        head = self.head or ("sigmoid" if self.n_classes == 2 else "softmax")
        if head not in ("sigmoid", "softmax"):
            raise ConfigError(f"head must be sigmoid or softmax, got {head!r}")
        if head == "sigmoid" and self.n_classes != 2:
            raise ConfigError("a sigmoid head only supports two classes")
        object.__setattr__(self, "head", head)
        filters = tuple(int(f) for f in (self.filters or DEFAULT_FILTERS[: self.depth]))
        if len(filters) != self.depth:
            raise ConfigError(f"{len(filters)} filter counts for depth {self.depth}")
        object.__setattr__(self, "filters", filters)
        object.__setattr__(self, "labels", tuple(self.labels))
        if self.labels and len(self.labels) != self.n_classes:
            raise ConfigError(f"{len(self.labels)} labels for {self.n_classes} classes")
        if self.conv_lengths()[-1] < self.pool:
            raise ConfigError(f"window of {self.window_samples} samples is too short for depth {self.depth}")

    @property
    def output_units(self) -> int:
        return 1 if self.head == "sigmoid" else self.n_classes

    def conv_lengths(self) -> list[int]:
        lengths, n = [], self.window_samples
        for _ in range(self.depth):
            n = n - self.kernel_size + 1
            lengths.append(n)
        return lengths

    def shape_chain(self) -> dict[str, tuple]:
        """Predicted per-layer shapes (without the batch axis)."""
        chain = {"input": (self.window_samples, 1)}
        for i, (n, f) in enumerate(zip(self.conv_lengths(), self.filters), start=1):
            chain[f"conv{i}"] = (n, f)
        pooled = (self.conv_lengths()[-1] - self.pool) // self.pool + 1
        chain["pool"] = (pooled, self.filters[-1])
        chain["flatten"] = (pooled * self.filters[-1],)
        chain["output"] = (self.output_units,)
        return chain

    @property
    def flat_width(self) -> int:
        return self.shape_chain()["flatten"][0]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["filters"] = list(self.filters)
        d["labels"] = list(self.labels)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        d = dict(d)
        d["filters"] = tuple(d.get("filters", ()))
        d["labels"] = tuple(d.get("labels", ()))
        return cls(**d)


@dataclass
class ActivationTrace:
    """Per-layer feature maps for a batch; ``maps[name]`` has a leading batch axis.

    ``conv{i}`` holds post-ReLU activations and ``conv{i}_pre`` the raw sums.
    """

    maps: dict = field(default_factory=dict)

    def shapes(self) -> dict[str, tuple]:
        return {k: v.shape[1:] for k, v in self.maps.items()}

    def for_item(self, i: int = 0) -> dict[str, np.ndarray]:
        return {k: v[i] for k, v in self.maps.items()}


class CNN1D:
    def __init__(self, config: ModelConfig):
        self.config = config
        self.convs = []
        cin = 1
        for i, f in enumerate(config.filters, start=1):
            self.convs.append(Conv1D(cin, f, config.kernel_size, name=f"conv{i}"))
            cin = f
        self.pool = MaxPool1D(config.pool, config.pool)
        self.dropout = Dropout(config.dropout)
        self.dense = Dense(
            config.flat_width, config.output_units, config.head, use_bias=config.dense_bias
        )
        self._forward_done = False

    @property
    def trainable(self):
        return [*self.convs, self.dense]

    def initialize(self, seed: int) -> "CNN1D":
        """He-uniform conv kernels, zero biases, Glorot-uniform dense weights."""
        root = SeededGenerator(seed)
        for i, layer in enumerate(self.trainable):
            layer.initialize(root.derive(0, i))
        return self

    def named_parameters(self) -> list[tuple[str, np.ndarray]]:
        """Parameters in their fixed declared order (also the checkpoint order)."""
        out = []
        for layer in self.trainable:
            for key in ("kernels", "weights", "bias"):
                if key in layer.params:
                    out.append((f"{layer.name}.{key}", layer.params[key]))
        return out

    def named_gradients(self) -> list[tuple[str, np.ndarray]]:
        out = []
        for layer in self.trainable:
            for key in ("kernels", "weights", "bias"):
                if key in layer.params:
                    out.append((f"{layer.name}.{key}", layer.grads[key]))
        return out

    def parameter(self, name: str) -> np.ndarray:
        return dict(self.named_parameters())[name]

    def _prepare(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[None, :]
        if x.ndim == 2:
            x = x[:, :, None]
        if x.ndim != 3 or x.shape[2] != 1:
            raise ShapeError(f"expected windows shaped (batch, samples), got {x.shape}")
        if x.shape[1] != self.config.window_samples:
            raise ShapeError(
                f"input: window has {x.shape[1]} samples, model expects {self.config.window_samples}"
            )
        return x

    def forward(self, x, train=False, gen: SeededGenerator | None = None, trace=False, dropout_mask=None):
        """Class probabilities, shape ``(batch, output_units)``.

        With ``trace`` a second value, an :class:`ActivationTrace`, is returned.
        """
        h = self._prepare(x)
        maps = {"input": h} if trace else None
        for conv in self.convs:
            try:
                pre, h = conv.forward(h, train)
            except ShapeError as exc:
                raise ShapeError(f"{conv.name}: {exc}") from exc
            if trace:
                maps[f"{conv.name}_pre"] = pre
                maps[conv.name] = h
        try:
            h = self.pool.forward(h, train)
        except ShapeError as exc:
            raise ShapeError(f"pool: {exc}") from exc
        self._pool_shape = h.shape
        flat = flatten(h)
        d = self.dropout.forward(flat, train, gen=gen, mask=dropout_mask)
        z, p = self.dense.forward(d, train)
        self.last_logits = z
        self._forward_done = True
        if trace:
            maps["pool"] = h
            maps["flatten"] = flat
            maps["logits"] = z
            maps["output"] = p
            return p, ActivationTrace(maps)
        return p

    __call__ = forward

    def backward(self, grad_output=None, grad_logits=None) -> dict[str, np.ndarray]:
        """Backprop from dLoss/dprob (``grad_output``) or dLoss/dlogit.

        Gradients are written into each layer's ``grads`` and also returned.
        """
        if not self._forward_done:
            raise StateError("backward called before forward")
        d = self.dense.backward(dp=grad_output, dz=grad_logits)
        d = self.dropout.backward(d)
        d = d.reshape(self._pool_shape)
        d = self.pool.backward(d)
        for conv in reversed(self.convs):
            d = conv.backward(d)
        return dict(self.named_gradients())

    def predict_proba(self, x, batch_size: int = 256, return_logits: bool = False):
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1:
            x = x[None]
        probs, logits = [], []
        for i in range(0, len(x), batch_size):
            probs.append(self.forward(x[i : i + batch_size]))
            logits.append(self.last_logits)
        width = self.config.output_units
        p = np.concatenate(probs) if probs else np.zeros((0, width))
        if return_logits:
            return p, (np.concatenate(logits) if logits else np.zeros((0, width)))
        return p

    def predict(self, x, batch_size: int = 256) -> np.ndarray:
        """Integer class indices; a sigmoid head thresholds at 0.5."""
        p = self.predict_proba(x, batch_size)
        if self.config.head == "sigmoid":
            return (p[:, 0] >= 0.5).astype(np.int64)
        return np.argmax(p, axis=1).astype(np.int64)


def build_model(config: ModelConfig, seed: int = 0) -> CNN1D:
    return CNN1D(config).initialize(seed)
