"""Corpus-level tokenized BLEU (4-gram, clipped, geometric mean, brevity
penalty). Smoothing is off by default, matching the usual tokenized-BLEU
convention; ``smooth=True`` applies add-one smoothing to the n>1 orders
for tiny dev corpora where 4-gram matches can vanish entirely."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from math import exp, log

from ..errors import InputError

MAX_ORDER = 4


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


@dataclass
class SentenceStats:
    """Sufficient statistics of one hypothesis/reference pair."""

    correct: list[int]
    total: list[int]
    hyp_len: int
    ref_len: int

    def __add__(self, other: "SentenceStats") -> "SentenceStats":
        return SentenceStats(
            [a + b for a, b in zip(self.correct, other.correct)],
            [a + b for a, b in zip(self.total, other.total)],
            self.hyp_len + other.hyp_len, self.ref_len + other.ref_len)


def sentence_stats(hypothesis: str, reference: str) -> SentenceStats:
    hyp, ref = hypothesis.split(), reference.split()
    correct, total = [], []
    for n in range(1, MAX_ORDER + 1):
        hyp_counts = _ngrams(hyp, n)
        ref_counts = _ngrams(ref, n)
        correct.append(sum(min(c, ref_counts[g]) for g, c in hyp_counts.items()))
        total.append(max(len(hyp) - n + 1, 0))
    return SentenceStats(correct, total, len(hyp), len(ref))


def bleu_from_stats(stats: SentenceStats, smooth: bool = False) -> float:
    """Score in [0, 100] from aggregated statistics."""
    if stats.hyp_len == 0:
        return 0.0
    log_precision = 0.0
    for n in range(MAX_ORDER):
        correct, total = stats.correct[n], stats.total[n]
        if smooth and n > 0:
            correct, total = correct + 1, total + 1
        if correct == 0 or total == 0:
            return 0.0
        log_precision += log(correct / total) / MAX_ORDER
    brevity = 1.0 if stats.hyp_len >= stats.ref_len else exp(1.0 - stats.ref_len / stats.hyp_len)
    return 100.0 * brevity * exp(log_precision)


def corpus_bleu(hypotheses: list[str], references: list[str],
                smooth: bool = False) -> float:
    """BLEU over pre-tokenized (whitespace-split) sentence strings."""
    if len(hypotheses) != len(references):
        raise InputError(
            f"{len(hypotheses)} hypotheses vs {len(references)} references")
    if not hypotheses:
        raise InputError("empty corpus")
    agg = sentence_stats(hypotheses[0], references[0])
    for h, r in zip(hypotheses[1:], references[1:]):
        agg = agg + sentence_stats(h, r)
    return bleu_from_stats(agg, smooth=smooth)
