"""Metrics and the analysis battery: BLEU, ambiguous-word accuracy,
modality ratio, visual ablations, significance testing, attention export."""

from .ablation import (
    ABLATION_MODES,
    ablation_battery,
    decode_corpus,
    modality_ratio,
    run_ablation,
)
from .attention_export import export_attention
from .bleu import SentenceStats, bleu_from_stats, corpus_bleu, sentence_stats
from .bootstrap import bootstrap_significance
from .report import EvalReport
from .word_accuracy import WordAccuracyReport, load_glossary, word_accuracy

__all__ = [
    "ABLATION_MODES", "EvalReport", "SentenceStats", "WordAccuracyReport",
    "ablation_battery", "bleu_from_stats", "bootstrap_significance",
    "corpus_bleu", "decode_corpus", "export_attention", "load_glossary",
    "modality_ratio", "run_ablation", "sentence_stats", "word_accuracy",
]
