"""Padded batch assembly for training and scoring."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InputError
from ..tokenizer import BOS, EOS, PAD
from ..data.tasks import TrainingExample


@dataclass
class Batch:
    """Rectangular arrays for one forward pass.

    Encoder input is the example tokens plus EOS; decoder input/target are
    the BOS-shifted and EOS-closed views of the clean target. ``features``
    rows are zero (with indicator 0) for examples without an image.
    """

    src: np.ndarray
    src_mask: np.ndarray
    tgt_in: np.ndarray
    tgt_out: np.ndarray
    tgt_mask: np.ndarray
    features: np.ndarray | None
    indicator: np.ndarray
    task_tag: str = "translate"

    def __len__(self) -> int:
        return self.src.shape[0]

    @property
    def target_tokens(self) -> int:
        return int(self.tgt_mask.sum())


def _pad(rows: list[list[int]]) -> tuple[np.ndarray, np.ndarray]:
    width = max(len(r) for r in rows)
    out = np.full((len(rows), width), PAD, dtype=np.int64)
    mask = np.zeros((len(rows), width))
    for i, r in enumerate(rows):
        out[i, : len(r)] = r
        mask[i, : len(r)] = 1.0
    return out, mask


def make_batch(examples: list[TrainingExample], img_feat_dim: int) -> Batch:
    """Pad a group of examples into one batch."""
    if not examples:
        raise InputError("cannot batch zero examples")
    enc = [list(e.encoder_tokens) + [EOS] for e in examples]
    dec_in = [[BOS] + list(e.decoder_target) for e in examples]
    dec_out = [list(e.decoder_target) + [EOS] for e in examples]
    src, src_mask = _pad(enc)
    tgt_in, _ = _pad(dec_in)
    tgt_out, tgt_mask = _pad(dec_out)
    indicator = np.array([0.0 if e.image is None else 1.0 for e in examples])
    features = None
    if indicator.any():
        features = np.zeros((len(examples), img_feat_dim))
        for i, e in enumerate(examples):
            if e.image is not None:
                features[i] = e.image
    tags = {e.task_tag for e in examples}
    tag = tags.pop() if len(tags) == 1 else "mixed"
    return Batch(src, src_mask, tgt_in, tgt_out, tgt_mask, features, indicator, tag)


def batches_from_stream(stream, batch_tokens: int, img_feat_dim: int):
    """Group a training-example stream into task-homogeneous batches.

    Examples buffer per task tag; a buffer flushes once its padded target
    size would exceed ``batch_tokens``. Tail buffers flush at stream end,
    so one epoch in equals one epoch out.
    """
    buffers: dict[str, list[TrainingExample]] = {}
    widths: dict[str, int] = {}
    for ex in stream:
        buf = buffers.setdefault(ex.task_tag, [])
        width = max(widths.get(ex.task_tag, 0), len(ex.decoder_target) + 1)
        if buf and (len(buf) + 1) * width > batch_tokens:
            yield make_batch(buf, img_feat_dim)
            buffers[ex.task_tag] = [ex]
            widths[ex.task_tag] = len(ex.decoder_target) + 1
        else:
            buf.append(ex)
            widths[ex.task_tag] = width
    for tag in sorted(buffers):
        if buffers[tag]:
            yield make_batch(buffers[tag], img_feat_dim)
