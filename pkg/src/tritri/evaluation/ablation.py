"""Visual ablations and the modality-contribution ratio.

``absent`` decodes with the no-image path (indicator 0, prompt stripped);
``adversarial`` deranges the test set's image assignments so every sample
carries a wrong image, and prompts regenerate from those wrong images.
Comparing the three answers whether the model actually reads its images.
"""

from __future__ import annotations

import warnings

import numpy as np

from ..data.mixing import shuffle_images
from ..data.tasks import ExampleBuilder
from ..data.corpus import Sample
from ..errors import ConfigError, InputError
from ..model.decoding import translate
from ..model.transformer import TranslationModel
from ..numerics import no_grad
from ..tokenizer import Vocab
from .bleu import corpus_bleu
from .report import EvalReport
from .word_accuracy import WordAccuracyReport, word_accuracy

ABLATION_MODES = ("normal", "absent", "adversarial")


def modality_ratio(model: TranslationModel, inputs) -> float:
    """Mean per-token ratio ||gated visual term|| / ||text state||.

    ``inputs`` is a list of (token ids, feature-or-None). Inputs without a
    feature contribute zero rows (the gated term vanishes with the
    indicator); zero-norm text rows are excluded with a warning.
    """
    ratios: list[float] = []
    with no_grad():
        for src, feature in inputs:
            h_text = model.encode_text(np.asarray([src], dtype=np.int64))
            if feature is None:
                ratios.extend([0.0] * h_text.shape[1])
                continue
            state = model.fuse(h_text, np.asarray([feature])[..., :])
            gated = state.gate.data * np.matmul(state.h_fused.data,
                                                model.params["proj.w"].data)
            text_norm = np.linalg.norm(state.h_text.data[0], axis=-1)
            gate_norm = np.linalg.norm(gated[0], axis=-1)
            for g, t in zip(gate_norm, text_norm):
                if t == 0.0:
                    warnings.warn("modality_ratio: zero-norm text row excluded")
                    continue
                ratios.append(float(g / t))
    if not ratios:
        raise InputError("modality_ratio: no usable rows")
    return float(np.mean(ratios))


def decode_corpus(model: TranslationModel, builder: ExampleBuilder,
                  samples: list[Sample], vocab: Vocab,
                  ablation: str = "normal", beam: int = 1) -> list[str]:
    """Greedy/beam hypotheses (decoded strings) for every sample."""
    hyps = []
    for s in samples:
        src, feature = builder.build_eval_input(s, ablation)
        hyp = translate(model, src, image=feature, beam=beam)
        hyps.append(vocab.decode(hyp.tokens))
    return hyps


def run_ablation(model: TranslationModel, builder: ExampleBuilder,
                 testset: list[Sample], mode: str, vocab: Vocab,
                 glossary: dict[str, list[str]] | None = None,
                 rng=None, beam: int = 1) -> dict:
    """Decode the test set under one ablation mode and score it.

    Returns ``{"mode", "bleu", "word_accuracy", "hypotheses"}``; BLEU uses
    add-one smoothing since ablation sets are typically small.
    """
    if mode not in ABLATION_MODES:
        raise InputError(f"unknown ablation mode {mode!r}")
    if builder.mode == "text-only" and mode != "normal":
        raise ConfigError("a text-only model has no visual input to ablate")
    samples = testset
    ablation = "normal"
    if mode == "absent":
        ablation = "absent"
    elif mode == "adversarial":
        if rng is None:
            raise InputError("adversarial ablation needs an rng")
        samples = shuffle_images(testset, rng)
    hyps = decode_corpus(model, builder, samples, vocab, ablation, beam)
    refs = [s.target for s in testset]
    out = {"mode": mode, "bleu": corpus_bleu(hyps, refs, smooth=True),
           "hypotheses": hyps, "word_accuracy": None}
    if glossary:
        sources = [s.source or "" for s in testset]
        out["word_accuracy"] = word_accuracy(sources, hyps, refs, glossary)
    return out


def ablation_battery(model: TranslationModel, builder: ExampleBuilder,
                     testset: list[Sample], vocab: Vocab,
                     glossary: dict[str, list[str]] | None = None,
                     rng=None, beam: int = 1,
                     modes=ABLATION_MODES) -> tuple[EvalReport, dict]:
    """All requested ablation modes plus deltas against normal decoding."""
    results = {m: run_ablation(model, builder, testset, m, vocab, glossary,
                               rng, beam) for m in modes}
    normal = results.get("normal")
    report = EvalReport(bleu=normal["bleu"] if normal else None,
                        word_accuracy=normal["word_accuracy"] if normal else None)
    if builder.uses_fusion:
        inputs = [builder.build_eval_input(s, "normal") for s in testset]
        report.modality_ratio = modality_ratio(model, inputs)
    if normal:
        for m, res in results.items():
            if m != "normal":
                report.ablation[m] = normal["bleu"] - res["bleu"]
    return report, results
