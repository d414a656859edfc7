"""Forward and backward passes for the 1-D CNN layers.

Feature maps are float64 arrays shaped ``(batch, length, channels)``. The
pure functions (:func:`conv1d`, :func:`maxpool1d`, ...) also accept a single
``(length, channels)`` map. Layer objects cache what their backward pass
needs and store parameter gradients next to the parameters.
"""
from __future__ import annotations

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InvalidArgumentError, ShapeError, StateError
from .numeric import SeededGenerator, glorot_uniform, he_uniform


def _as_batch(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return x[None, :, None], 1
    if x.ndim == 2:
        return x[None], 2
    if x.ndim == 3:
        return x, 3
    raise ShapeError(f"feature map must be 1-, 2- or 3-D, got shape {x.shape}")


def _restore(y, ndim):
    if ndim == 3:
        return y
    if ndim == 2:
        return y[0]
    return y[0, :, 0] if y.shape[2] == 1 else y[0]


def conv1d(x, kernels, bias=None):
    """Valid-mode cross-correlation, stride 1.

    ``kernels`` has shape ``(filters, v, in_channels)`` and
    ``out[n, i] = bias[i] + sum_m sum_ch x[n+m, ch] * kernels[i, m, ch]``,
    giving ``length - v + 1`` output rows. No activation is applied.
    """
    xb, ndim = _as_batch(x)
    kernels = np.asarray(kernels, dtype=np.float64)
    if kernels.ndim == 1:
        kernels = kernels[None, :, None]
    filters, v, cin = kernels.shape
    if xb.shape[2] != cin:
        raise ShapeError(f"input has {xb.shape[2]} channels, kernels expect {cin}")
    if xb.shape[1] < v:
        raise ShapeError(f"input length {xb.shape[1]} shorter than kernel size {v}")
    win = sliding_window_view(xb, v, axis=1)  # (B, L-v+1, C, v)
    y = np.einsum("bncm,fmc->bnf", win, kernels, optimize=True)
    if bias is not None:
        y = y + np.asarray(bias, dtype=np.float64)
    return y if ndim == 3 else y[0]


def relu(x):
    return np.maximum(np.asarray(x, dtype=np.float64), 0.0)


def maxpool1d(x, pool: int = 2, stride: int = 2, return_indices: bool = False):
    """Max over non-overlapping pairs (by default) along the length axis.

    A trailing element that does not fill a region is dropped. With
    ``return_indices`` the absolute input index of each winner is returned as
    well; ties go to the first position.
    """
    xb, ndim = _as_batch(x)
    length = xb.shape[1]
    if length < pool:
        raise ShapeError(f"input length {length} shorter than pool size {pool}")
    n_out = (length - pool) // stride + 1
    win = sliding_window_view(xb, pool, axis=1)[:, ::stride][:, :n_out]  # (B, H, C, pool)
    local = np.argmax(win, axis=3)
    y = np.take_along_axis(win, local[..., None], axis=3)[..., 0]
    y = _restore(y, ndim)
    if return_indices:
        idx = local + (np.arange(n_out) * stride)[None, :, None]
        return y, _restore(idx, ndim)
    return y


def flatten(x):
    """Row-major flatten: index ``t * channels + c`` (channels vary fastest)."""
    xb, _ = _as_batch(x)
    return xb.reshape(xb.shape[0], -1) if np.ndim(x) == 3 else xb.reshape(-1)


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def softmax(z, axis=-1):
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max(axis=axis, keepdims=True))
    return e / e.sum(axis=axis, keepdims=True)


class Layer:
    """Base: ``params`` and ``grads`` are parallel dicts of arrays."""

    name = "layer"

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}
        self._cache = None

    def zero_grad(self):
        for k, v in self.params.items():
            self.grads[k] = np.zeros_like(v)

    def clear_cache(self):
        self._cache = None

    def _need_cache(self):
        if self._cache is None:
            raise StateError(f"{self.name}: backward called without a cached forward pass")
        return self._cache


class Conv1D(Layer):
    """Conv + ReLU. Kernels ``(filters, v, in_channels)``, bias ``(filters,)``."""

    def __init__(self, in_channels: int, filters: int, kernel_size: int = 5, name="conv"):
        super().__init__()
        self.name = name
        self.in_channels = in_channels
        self.filters = filters
        self.kernel_size = kernel_size
        self.params["kernels"] = np.zeros((filters, kernel_size, in_channels))
        self.params["bias"] = np.zeros(filters)
        self.zero_grad()

    @property
    def fan_in(self) -> int:
        return self.kernel_size * self.in_channels

    def initialize(self, gen: SeededGenerator):
        k = self.params["kernels"]
        k[...] = he_uniform(gen, self.fan_in, k.size).reshape(k.shape)
        self.params["bias"][...] = 0.0

    def output_length(self, length: int) -> int:
        return length - self.kernel_size + 1

    def forward(self, x, train=False):
        pre = conv1d(x, self.params["kernels"], self.params["bias"])
        self._cache = (x, pre)
        return pre, relu(pre)

    def backward(self, dy):
        x, pre = self._need_cache()
        dpre = dy * (pre > 0)
        v = self.kernel_size
        win = sliding_window_view(x, v, axis=1)  # (B, Lo, C, v)
        self.grads["kernels"] = np.einsum("bncm,bnf->fmc", win, dpre, optimize=True)
        self.grads["bias"] = dpre.sum(axis=(0, 1))
        k = self.params["kernels"]
        lo = dpre.shape[1]
        dx = np.zeros_like(x)
        for m in range(v):
            dx[:, m : m + lo, :] += dpre @ k[:, m, :]
        return dx


class MaxPool1D(Layer):
    def __init__(self, pool: int = 2, stride: int = 2, name="pool"):
        super().__init__()
        self.name = name
        self.pool = pool
        self.stride = stride

    def output_length(self, length: int) -> int:
        return (length - self.pool) // self.stride + 1

    def forward(self, x, train=False):
        y, idx = maxpool1d(x, self.pool, self.stride, return_indices=True)
        self._cache = (x.shape, idx)
        return y

    def backward(self, dy):
        shape, idx = self._need_cache()
        dx = np.zeros(shape)
        b = np.arange(shape[0])[:, None, None]
        c = np.arange(shape[2])[None, None, :]
        # pool regions never overlap when stride >= pool, so plain assignment is safe
        if self.stride >= self.pool:
            dx[b, idx, c] = dy
        else:
            np.add.at(dx, (np.broadcast_to(b, idx.shape), idx, np.broadcast_to(c, idx.shape)), dy)
        return dx


class Dropout(Layer):
    """Inverted dropout: train-time survivors are scaled by ``1 / (1 - rate)``."""

    def __init__(self, rate: float = 0.25, name="dropout"):
        super().__init__()
        if not 0 <= rate < 1:
            raise InvalidArgumentError(f"dropout rate must be in [0, 1), got {rate}")
        self.name = name
        self.rate = rate
        self.mask = None

    def make_mask(self, shape, gen: SeededGenerator):
        keep = gen.random(shape) >= self.rate
        return keep / (1.0 - self.rate)

    def forward(self, x, train=False, gen: SeededGenerator | None = None, mask=None):
        if not train or self.rate == 0:
            self.mask = None
            self._cache = True
            return x
        if mask is None:
            if gen is None:
                raise StateError("dropout in training mode needs a generator or a mask")
            mask = self.make_mask(x.shape, gen)
        self.mask = mask
        self._cache = True
        return x * mask

    def backward(self, dy):
        self._need_cache()
        return dy if self.mask is None else dy * self.mask


def dropout_apply(layer: Dropout, x, gen: SeededGenerator | None, train: bool):
    return layer.forward(np.asarray(x, dtype=np.float64), train=train, gen=gen)


class Dense(Layer):
    """Fully connected head with sigmoid (one unit) or softmax (M units)."""

    def __init__(self, in_width: int, units: int, activation: str = "softmax", use_bias=False, name="dense"):
        super().__init__()
        if activation not in ("sigmoid", "softmax"):
            raise InvalidArgumentError(f"activation must be sigmoid or softmax, got {activation!r}")
        if activation == "sigmoid" and units != 1:
            raise InvalidArgumentError("a sigmoid head has exactly one unit")
        if activation == "softmax" and units < 2:
            raise InvalidArgumentError("a softmax head needs at least two units")
        self.name = name
        self.in_width = in_width
        self.units = units
        self.activation = activation
        self.use_bias = use_bias
        self.params["weights"] = np.zeros((in_width, units))
        if use_bias:
            self.params["bias"] = np.zeros(units)
        self.zero_grad()

    def initialize(self, gen: SeededGenerator):
        w = self.params["weights"]
        w[...] = glorot_uniform(gen, self.in_width, self.units, w.size).reshape(w.shape)
        if self.use_bias:
            self.params["bias"][...] = 0.0

    def logits(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.in_width:
            raise ShapeError(f"{self.name}: input width {x.shape[-1]}, expected {self.in_width}")
        z = x @ self.params["weights"]
        if self.use_bias:
            z = z + self.params["bias"]
        return z

    def activate(self, z):
        return sigmoid(z) if self.activation == "sigmoid" else softmax(z)

    def forward(self, x, train=False):
        z = self.logits(x)
        p = self.activate(z)
        self._cache = (x, p)
        return z, p

    def backward(self, dp=None, dz=None):
        """Gradient w.r.t. the input; give either dLoss/dprob or dLoss/dlogit."""
        x, p = self._need_cache()
        if dz is None:
            if dp is None:
                raise InvalidArgumentError("need dp or dz")
            if self.activation == "sigmoid":
                dz = dp * p * (1.0 - p)
            else:
                dz = p * (dp - np.sum(dp * p, axis=-1, keepdims=True))
        self.grads["weights"] = x.T @ dz
        if self.use_bias:
            self.grads["bias"] = dz.sum(axis=0)
        return dz @ self.params["weights"].T
