"""Aggregate metric bundle."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .word_accuracy import WordAccuracyReport


@dataclass
class EvalReport:
    """Everything one evaluation run produces.

    ``ablation`` maps an ablation mode to its BLEU delta versus normal
    decoding. ``extras`` is an open slot for external metrics computed
    elsewhere (learned metrics are out of scope here).
    """

    bleu: float | None = None
    word_accuracy: WordAccuracyReport | None = None
    modality_ratio: float | None = None
    ablation: dict[str, float] = field(default_factory=dict)
    significance: float | None = None
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out: dict = {}
        if self.bleu is not None:
            out["bleu"] = self.bleu
        if self.word_accuracy is not None:
            out["word_accuracy"] = self.word_accuracy.to_dict()
        if self.modality_ratio is not None:
            out["modality_ratio"] = self.modality_ratio
        if self.ablation:
            out["ablation"] = self.ablation
        if self.significance is not None:
            out["significance"] = self.significance
        if self.extras:
            out["extras"] = self.extras
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), ensure_ascii=False, indent=2)
