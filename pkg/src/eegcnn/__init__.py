"""Light-weight 1-D CNN for single-channel EEG mental-task classification, in NumPy."""

from .artifacts import ArtifactSource, ContaminationParams, Mode, contaminate, rms, snr_of, sweep
from .errors import EEGCNNError
from .model import CNN1D, ActivationTrace, ModelConfig, build_model
from .numeric import SeededGenerator, dot, glorot_uniform, he_uniform, uniform_in
from .signals import SignalRecord, Window, resample_cubic, segment
from .training import (
    AdamState,
    FoldPlan,
    WindowSet,
    adam_step,
    bce_loss,
    cce_loss,
    evaluate,
    make_folds,
    train_model,
)

__version__ = "0.1.0"
