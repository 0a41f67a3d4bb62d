"""Word-level accuracy on ambiguous glossary entries.

For every sentence and every glossary source word found in it, the case is
applicable only when exactly one of the entry's target alternatives occurs
in the reference; it counts as a hit when that same alternative also
occurs in the hypothesis. Alternatives are matched as substrings of the
raw (detokenized) target strings, which keeps Chinese matching independent
of any segmentation. A hypothesis containing several alternatives at once
still scores by the reference-matched one, but such cases are counted
separately because they usually deserve a manual look.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import InputError


def load_glossary(path: str) -> dict[str, list[str]]:
    """TSV: column 1 source word, column 2 comma-separated alternatives."""
    glossary: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as f:
        for n, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[1].strip():
                raise InputError(f"{path}:{n}: expected 'word<TAB>alt1,alt2,...'")
            alts = [a.strip() for a in parts[1].split(",") if a.strip()]
            if not alts:
                raise InputError(f"{path}:{n}: entry has no alternatives")
            glossary[parts[0].strip().lower()] = alts
    return glossary


@dataclass
class WordAccuracyReport:
    accuracy: float
    hits: int
    applicable: int
    multi_alternative_hyps: int  # hits/misses where the hypothesis held >1 alternatives

    def to_dict(self) -> dict:
        return {"accuracy": self.accuracy, "hits": self.hits,
                "applicable": self.applicable,
                "multi_alternative_hyps": self.multi_alternative_hyps}


def word_accuracy(sources: list[str], hypotheses: list[str],
                  references: list[str],
                  glossary: dict[str, list[str]]) -> WordAccuracyReport:
    """Accuracy = hits / applicable over aligned sentence triples."""
    if not glossary:
        raise InputError("glossary is empty")
    if not (len(sources) == len(hypotheses) == len(references)):
        raise InputError(
            f"misaligned corpora: {len(sources)} sources, "
            f"{len(hypotheses)} hypotheses, {len(references)} references")
    patterns = {
        word: re.compile(r"(?<!\w)" + re.escape(word) + r"(?!\w)")
        for word in glossary}
    hits = applicable = flagged = 0
    for src, hyp, ref in zip(sources, hypotheses, references):
        low = src.lower()
        for word, alts in glossary.items():
            if not patterns[word].search(low):
                continue
            in_ref = [a for a in alts if a in ref]
            if len(in_ref) != 1:
                continue  # ambiguous or absent in the reference: skip
            applicable += 1
            expected = in_ref[0]
            if expected in hyp:
                hits += 1
            if sum(a in hyp for a in alts) > 1:
                flagged += 1
    accuracy = hits / applicable if applicable else 0.0
    return WordAccuracyReport(accuracy, hits, applicable, flagged)
