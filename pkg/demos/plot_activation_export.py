"""
Looking inside the network
==========================

Feature maps and weights of a model are written as CSV grids and
greyscale PGM images for external viewing.
"""

import tempfile
from pathlib import Path

import numpy as np

from eegcnn.export import export_activations, read_pgm
from eegcnn.model import ModelConfig, build_model

model = build_model(ModelConfig(window_samples=5000), seed=0)
t = np.arange(5000) / 500.0
window = 20 * np.sin(2 * np.pi * 10 * t)

_, trace = model.forward(window, trace=True)
for name, shape in trace.shapes().items():
    print(f"{name:10s} {shape}")

out = Path(tempfile.mkdtemp())
shapes = export_activations(model, window, out)
for stem, shape in shapes.items():
    print(stem, shape)

# one image row per time step, one column per filter
print("act_pool.pgm is", read_pgm(out / "act_pool.pgm").shape)
