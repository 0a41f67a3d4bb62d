"""Paired bootstrap significance test for BLEU.

System A is the candidate claimed to be better. Sentence indices are
resampled with replacement; the reported p-value is the fraction of
resamples where system B scores at least as high as A, so identical
systems give p = 1.0 and a dominant A drives p toward 0.
"""

from __future__ import annotations

import numpy as np

from ..errors import InputError
from ..numerics import Rng
from .bleu import SentenceStats, bleu_from_stats, sentence_stats


def bootstrap_significance(hyps_a: list[str], hyps_b: list[str],
                           references: list[str], resamples: int = 1000,
                           seed: int = 0) -> float:
    if not (len(hyps_a) == len(hyps_b) == len(references)):
        raise InputError(
            f"misaligned corpora: {len(hyps_a)} vs {len(hyps_b)} vs "
            f"{len(references)} sentences")
    if not references:
        raise InputError("empty corpus")
    if resamples < 1000:
        raise InputError(f"resamples must be >= 1000, got {resamples}")

    stats_a = [sentence_stats(h, r) for h, r in zip(hyps_a, references)]
    stats_b = [sentence_stats(h, r) for h, r in zip(hyps_b, references)]

    def table(stats: list[SentenceStats]) -> np.ndarray:
        return np.array([s.correct + s.total + [s.hyp_len, s.ref_len]
                         for s in stats], dtype=np.float64)

    ta, tb = table(stats_a), table(stats_b)
    n = len(references)
    rng = Rng(seed).child("bootstrap")
    b_wins = 0
    for _ in range(resamples):
        idx = rng.integers(0, n, size=n)
        score_a = _bleu_from_rows(ta[idx].sum(axis=0))
        score_b = _bleu_from_rows(tb[idx].sum(axis=0))
        if score_b >= score_a:
            b_wins += 1
    return b_wins / resamples


def _bleu_from_rows(row: np.ndarray) -> float:
    stats = SentenceStats(row[0:4].astype(int).tolist(),
                          row[4:8].astype(int).tolist(),
                          int(row[8]), int(row[9]))
    return bleu_from_stats(stats)
