"""Encoder-decoder transformer with gated visual fusion and prompt-aware decoding."""

from .batching import Batch, batches_from_stream, make_batch
from .checkpoint import load_checkpoint, save_checkpoint
from .config import ModelConfig
from .decoding import Hypothesis, translate
from .transformer import EncoderState, TranslationModel, sinusoidal_positions

__all__ = [
    "Batch", "EncoderState", "Hypothesis", "ModelConfig", "TranslationModel",
    "batches_from_stream", "load_checkpoint", "make_batch", "save_checkpoint",
    "sinusoidal_positions", "translate",
]
