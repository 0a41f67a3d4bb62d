"""Beam-search translation with length normalization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InputError
from ..numerics import Tensor, no_grad
from ..tokenizer import BOS, EOS, SEP
from ..data.tasks import make_prompted_source
from .transformer import TranslationModel


@dataclass
class Hypothesis:
    tokens: list[int]     # output ids, BOS/EOS stripped, prompt echo removed
    score: float          # log-probability / length**alpha
    log_prob: float


def _log_softmax(row: np.ndarray) -> np.ndarray:
    m = row.max()
    return row - (m + np.log(np.exp(row - m).sum()))


def translate(model: TranslationModel, source: list[int],
              image: np.ndarray | None = None,
              prompt: list[int] | None = None,
              beam: int = 1, max_len: int | None = None) -> Hypothesis:
    """Decode one source sequence; ``beam=1`` is greedy.

    A prompt is appended to the source after SEP before encoding. Scores
    are summed token log-probabilities divided by length**alpha. If the
    model emits SEP, the hypothesis keeps only the text before it.
    """
    if not source:
        raise InputError("translate: empty source")
    if beam < 1:
        raise InputError(f"beam must be >= 1, got {beam}")
    src = list(source)
    if prompt:
        src = make_prompted_source(src, prompt)
    alpha = model.config.length_norm_alpha
    if max_len is None:
        max_len = min(model.config.max_len - 1, 2 * len(src) + 8)

    with no_grad():
        src_arr = np.asarray([src], dtype=np.int64)
        src_mask = np.ones(src_arr.shape)
        h_text = model.encode_text(src_arr, src_mask)
        feats = None if image is None else np.asarray([image], dtype=np.float64)
        memory = model.fuse(h_text, feats).h_out

        live: list[tuple[list[int], float]] = [([BOS], 0.0)]
        done: list[tuple[list[int], float]] = []
        for _ in range(max_len):
            b = len(live)
            mem = memory if b == 1 else Tensor(np.repeat(memory.data, b, axis=0))
            mask = np.repeat(src_mask, b, axis=0)
            tgt_in = np.asarray([seq for seq, _ in live], dtype=np.int64)
            logits = model.decode(mem, mask, tgt_in).data[:, -1, :]
            expanded: list[tuple[list[int], float]] = []
            for row, (seq, lp) in zip(logits, live):
                logp = _log_softmax(row)
                for tok in np.argsort(-logp)[:beam]:
                    expanded.append((seq + [int(tok)], lp + float(logp[tok])))
            expanded.sort(key=lambda c: -c[1])
            live = []
            for seq, lp in expanded:
                if seq[-1] == EOS:
                    done.append((seq, lp))
                elif len(live) < beam:
                    live.append((seq, lp))
            if not live or len(done) >= beam:
                break
        done.extend(live)  # length-capped beams compete too

    def normalized(entry):
        seq, lp = entry
        n = max(len(seq) - 1, 1)  # generated tokens, EOS included
        return lp / (n ** alpha)

    best_seq, best_lp = max(done, key=normalized)
    out = [t for t in best_seq if t not in (BOS, EOS)]
    if SEP in out:
        out = out[: out.index(SEP)]
    return Hypothesis(out, normalized((best_seq, best_lp)), best_lp)
