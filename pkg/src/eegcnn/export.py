"""Activation-map and weight export: CSV per layer plus an 8-bit PGM preview."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .model import CNN1D

TRACE_LAYERS_SUFFIX = ("pool",)


def write_matrix_csv(path, grid: np.ndarray, header=None):
    grid = np.atleast_2d(np.asarray(grid, dtype=np.float64))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header is not None:
            fh.write(",".join(header) + "\n")
        for row in grid:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_matrix_csv(path, header=True) -> np.ndarray:
    return np.loadtxt(path, delimiter=",", skiprows=1 if header else 0, ndmin=2)


def write_pgm(path, grid: np.ndarray):
    """Binary P5 greyscale, height = rows, width = columns, min-max scaled to 0..255."""
    grid = np.atleast_2d(np.asarray(grid, dtype=np.float64))
    lo, hi = float(grid.min()), float(grid.max())
    scaled = np.zeros(grid.shape) if hi == lo else (grid - lo) / (hi - lo) * 255.0
    pixels = np.round(scaled).astype(np.uint8)
    rows, cols = pixels.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{cols} {rows}\n255\n".encode("ascii"))
        fh.write(pixels.tobytes())


def read_pgm(path) -> np.ndarray:
    blob = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while blob[pos : pos + 1].isspace():
            pos += 1
        start = pos
        while not blob[pos : pos + 1].isspace():
            pos += 1
        tokens.append(blob[start:pos])
    if tokens[0] != b"P5":
        raise ValueError("not a binary PGM")
    cols, rows = int(tokens[1]), int(tokens[2])
    pos += 1
    return np.frombuffer(blob[pos : pos + rows * cols], dtype=np.uint8).reshape(rows, cols)


def activation_layers(model: CNN1D) -> list[str]:
    return [c.name for c in model.convs] + ["pool"]


def export_activations(model: CNN1D, window: np.ndarray, out_dir) -> dict[str, tuple]:
    """Write ``act_<layer>.csv``/``.pgm`` (rows = time, cols = filters) and
    ``weights_<layer>.csv`` for one window. Returns ``{file stem: shape}``.

    Activations are post-ReLU for conv layers. Conv weights are written as
    ``filters x (kernel_size * in_channels)`` with the kernel tap varying
    slowest; dense weights as ``in_width x units``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _, trace = model.forward(np.asarray(window, dtype=np.float64)[None], trace=True)
    maps = trace.for_item(0)
    written = {}
    for name in activation_layers(model):
        grid = maps[name]
        header = [f"f{j}" for j in range(grid.shape[1])]
        write_matrix_csv(out / f"act_{name}.csv", grid, header)
        write_pgm(out / f"act_{name}.pgm", grid)
        written[f"act_{name}"] = grid.shape
    for conv in model.convs:
        k = conv.params["kernels"]
        w = k.reshape(k.shape[0], -1)
        header = [f"k{m}c{c}" for m in range(k.shape[1]) for c in range(k.shape[2])]
        write_matrix_csv(out / f"weights_{conv.name}.csv", w, header)
        written[f"weights_{conv.name}"] = w.shape
    w = model.dense.params["weights"]
    write_matrix_csv(out / "weights_dense.csv", w, [f"u{j}" for j in range(w.shape[1])])
    written["weights_dense"] = w.shape
    probs = maps["output"]
    write_matrix_csv(out / "output.csv", probs[None], [f"p{j}" for j in range(probs.size)])
    return written
