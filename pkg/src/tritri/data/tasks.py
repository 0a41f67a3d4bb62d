"""Training-task constructors: denoising, pseudo prompts, prompted sources.

Every constructor is a pure function of its inputs and the supplied RNG
stream, so an epoch is reproducible from the seed alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import InputError
from ..tokenizer import MASK, SEP, WORD_END, Vocab
from .corpus import DEFAULT_STOPWORDS, Sample

MODES = ("fusion", "prompt", "fusion+prompt", "text-only")


@dataclass
class TrainingExample:
    """One encoder/decoder pair ready for batching.

    ``encoder_tokens`` may contain SEP (prompted) or MASK (denoising);
    ``decoder_target`` is always the clean target. ``image`` is the raw
    feature vector or None.
    """

    encoder_tokens: list[int]
    decoder_target: list[int]
    image: np.ndarray | None
    task_tag: str  # "translate" | "denoise"
    kind: str

    def __post_init__(self):
        if self.task_tag == "translate" and MASK in self.encoder_tokens:
            raise InputError("translate example contains MASK tokens")


def mask_tokens(ids: list[int], mask_ratio: float, rng,
                level: str = "token", vocab: Vocab | None = None) -> list[int]:
    """Replace non-special ids by MASK, each independently with ``mask_ratio``.

    ``level="word"`` draws once per word (a word closes at a token whose
    string ends with the word-end marker; requires ``vocab``) and masks
    all of the word's tokens together.
    """
    if not 0.0 <= mask_ratio <= 1.0:
        raise InputError(f"mask_ratio must be in [0, 1], got {mask_ratio}")
    if level not in ("token", "word"):
        raise InputError(f"unknown masking level {level!r}")
    out = list(ids)
    if level == "token":
        for i, t in enumerate(out):
            if t >= 6 and rng.random() < mask_ratio:
                out[i] = MASK
        return out
    if vocab is None:
        raise InputError("word-level masking needs the vocabulary")
    i = 0
    while i < len(out):
        if out[i] < 6:
            i += 1
            continue
        j = i
        while j < len(out) and out[j] >= 6:
            if vocab.id_to_token[out[j]].endswith(WORD_END):
                j += 1
                break
            j += 1
        if rng.random() < mask_ratio:
            for k in range(i, j):
                out[k] = MASK
        i = j
    return out


def make_denoising_example(caption: Sample, vocab: Vocab, mask_ratio: float,
                           rng, image: np.ndarray | None = None,
                           level: str = "token") -> TrainingExample:
    """Build a (masked caption -> clean caption) reconstruction example."""
    if caption.kind != "caption":
        raise InputError(f"expected a caption sample, got kind {caption.kind!r}")
    target = vocab.encode(caption.target)
    masked = mask_tokens(target, mask_ratio, rng, level=level, vocab=vocab)
    return TrainingExample(masked, target, image, "denoise", caption.kind)


def sample_pseudo_prompt(words: list[str], rng, min_k: int = 1, max_k: int = 3,
                         stopwords: frozenset[str] = DEFAULT_STOPWORDS) -> list[str]:
    """Pick 1-3 distinct content words from a target sentence, in order.

    The draw count k is uniform on [min_k, max_k] and clips to the number
    of distinct content words; a sentence with none yields an empty prompt.
    """
    if not words:
        raise InputError("target sentence is empty")
    seen: set[str] = set()
    content: list[str] = []
    for w in words:
        lw = w.lower()
        if lw in stopwords or lw in seen:
            continue
        seen.add(lw)
        content.append(w)
    if not content:
        return []
    k = int(rng.integers(min_k, max_k + 1))
    k = max(1, min(k, len(content)))
    idx = sorted(rng.choice(len(content), size=k, replace=False).tolist())
    return [content[i] for i in idx]


def make_prompted_source(source_ids: list[int], keyword_ids: list[int]) -> list[int]:
    """Append ``SEP`` plus keyword tokens; empty keywords leave the source as is."""
    if not keyword_ids:
        return list(source_ids)
    if SEP in source_ids:
        raise InputError("source already carries a prompt separator")
    return list(source_ids) + [SEP] + list(keyword_ids)


def strip_prompt(ids: list[int]) -> list[int]:
    """Tokens before the first SEP (the whole sequence if none)."""
    if SEP in ids:
        return list(ids[: ids.index(SEP)])
    return list(ids)


class ExampleBuilder:
    """Turns raw samples into mode-specific training examples.

    Holds everything preprocessing needs: the vocabulary, resolved image
    features, the keyword predictor for prompt modes, and named RNG
    children (``mask``, ``prompt``) so different consumers never share a
    draw sequence.
    """

    def __init__(self, vocab: Vocab, features: dict[str, np.ndarray], mode: str,
                 rng, keyword_index=None, mask_ratio: float = 0.3,
                 prompt_keywords: int = 3, min_k: int = 1, max_k: int = 3,
                 stopwords: frozenset[str] = DEFAULT_STOPWORDS,
                 mask_level: str = "token"):
        if mode not in MODES:
            raise InputError(f"unknown mode {mode!r}; expected one of {MODES}")
        if mode in ("prompt", "fusion+prompt") and keyword_index is None:
            raise InputError(f"mode {mode!r} needs a keyword index")
        self.vocab = vocab
        self.features = features
        self.mode = mode
        self.uses_fusion = mode in ("fusion", "fusion+prompt")
        self.uses_prompt = mode in ("prompt", "fusion+prompt")
        self.index = keyword_index
        self.mask_ratio = mask_ratio
        self.prompt_keywords = prompt_keywords
        self.min_k, self.max_k = min_k, max_k
        self.stopwords = stopwords
        self.mask_level = mask_level
        self.mask_rng = rng.child("mask")
        self.prompt_rng = rng.child("prompt")
        self._kw_cache: dict[str, list[int]] = {}

    def _predicted_keyword_ids(self, image_id: str) -> list[int]:
        ids = self._kw_cache.get(image_id)
        if ids is None:
            words = self.index.predict(self.features[image_id], self.prompt_keywords)
            ids = self.vocab.encode(" ".join(words))
            self._kw_cache[image_id] = ids
        return ids

    def build(self, sample: Sample, use_image: bool = True) -> TrainingExample:
        """One training example; ``use_image=False`` marks a dropped image."""
        image_ok = sample.image_id is not None and use_image
        feature = self.features[sample.image_id] if (image_ok and self.uses_fusion) else None

        if sample.kind == "caption":
            ex = make_denoising_example(
                sample, self.vocab, self.mask_ratio, self.mask_rng,
                image=feature, level=self.mask_level)
            if self.uses_prompt and image_ok:
                ex.encoder_tokens = make_prompted_source(
                    ex.encoder_tokens, self._predicted_keyword_ids(sample.image_id))
            return ex

        src = self.vocab.encode(sample.source)
        tgt = self.vocab.encode(sample.target)
        if self.uses_prompt:
            if sample.kind == "triplet" and image_ok:
                src = make_prompted_source(src, self._predicted_keyword_ids(sample.image_id))
            elif sample.kind == "parallel":
                kw = sample_pseudo_prompt(
                    sample.target.split(), self.prompt_rng,
                    self.min_k, self.max_k, self.stopwords)
                src = make_prompted_source(src, self.vocab.encode(" ".join(kw)))
        return TrainingExample(src, tgt, feature, "translate", sample.kind)

    def build_eval_input(self, sample: Sample, ablation: str = "normal"):
        """Encoder tokens plus optional feature for inference.

        ``absent`` forces the no-image path: indicator 0, prompt stripped.
        Adversarial inputs are made by re-assigning image ids upstream and
        evaluating ``normal``.
        """
        if ablation not in ("normal", "absent"):
            raise InputError(f"unknown ablation {ablation!r}")
        has_image = sample.image_id is not None and ablation == "normal"
        text = sample.source if sample.source is not None else sample.target
        src = self.vocab.encode(text)
        if self.uses_prompt and has_image:
            src = make_prompted_source(src, self._predicted_keyword_ids(sample.image_id))
        feature = None
        if self.uses_fusion and has_image:
            feature = self.features[sample.image_id]
        return src, feature
