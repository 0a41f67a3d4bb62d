"""Synthetic disambiguation benchmark.

Each source sentence contains exactly one ambiguous word whose correct
target-side rendering is determined solely by the image: every
(word, sense) pair owns a feature-space prototype, and a sample's image
vector is its pair's prototype plus small noise. Text alone cannot pick
the sense (senses are balanced per word), so any accuracy above chance
must come through the visual path. Sense inventories of two to four
senses per word mirror the glossary style of real e-commerce data.

The generator emits the three training streams (triplets, image-free
parallel text over filler vocabulary only, monolingual captions with
images), dev/test triplet splits, the feature store, and the glossary
that turns word-level accuracy into disambiguation accuracy.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data.corpus import Sample
from .numerics import Rng

AMBIGUOUS: dict[str, list[str]] = {
    "mask": ["kouzhao", "mianju", "mianmo"],
    "top": ["shangyi", "jiding"],
    "clip": ["kazi", "qujia", "jiapian"],
    "tape": ["jiaodai", "cidai"],
    "pad": ["hudian", "tadian", "dainkuai", "tiedian"],
    "ring": ["jiezhi", "quanhuan"],
    "bow": ["qingong", "wangong", "gunbang"],
    "set": ["taozhuang", "cuozi", "taohe", "zutao"],
}

FILLERS: list[tuple[str, str]] = [
    ("buy", "mai"), ("new", "xin"), ("hot", "remen"), ("sale", "cuxiao"),
    ("big", "hen"), ("red", "hong"), ("one", "yige"), ("two", "liang"),
    ("box", "hezi"), ("kit", "gongju"), ("soft", "rou"), ("blue", "lan"),
]

_PATTERNS = ((1, 3), (0, 3), (2, 3), (1, 4))  # (ambiguous-word slot, length)


@dataclass
class SyntheticTask:
    corpora: dict[str, list[Sample]]
    features: dict[str, np.ndarray]
    dev: list[Sample]
    test: list[Sample]
    glossary: dict[str, list[str]]
    chance_rate: float
    sentences: list[str] = field(default_factory=list)  # BPE training corpus


def _check_inventory():
    words = [w for w, _ in FILLERS] + [t for _, t in FILLERS]
    senses = [s for alts in AMBIGUOUS.values() for s in alts]
    assert len(set(senses)) == len(senses), "sense tokens must be unique"
    for alts in AMBIGUOUS.values():
        for a in alts:
            for b in alts:
                if a != b:
                    assert a not in b, f"sense {a!r} is a substring of {b!r}"
    for s in senses:
        for w in words:
            assert s not in w and w not in s, (s, w)


_check_inventory()


def make_disambiguation_task(seed: int = 0, n_train: int = 512,
                             n_parallel: int = 256, n_caption: int = 128,
                             dev_per_sense: int = 2, test_per_sense: int = 4,
                             img_feat_dim: int = 8,
                             noise: float = 0.05) -> SyntheticTask:
    """Build the full corpus bundle; deterministic in ``seed``."""
    rng = Rng(seed).child("synthetic")
    pairs = [(w, i) for w, alts in AMBIGUOUS.items() for i in range(len(alts))]
    prototypes: dict[tuple[str, int], np.ndarray] = {}
    for p in pairs:
        v = rng.normal(size=img_feat_dim)
        prototypes[p] = v / np.linalg.norm(v)

    features: dict[str, np.ndarray] = {}
    counter = [0]

    def new_image(pair) -> str:
        ident = f"im{counter[0]:05d}"
        counter[0] += 1
        features[ident] = prototypes[pair] + noise * rng.normal(size=img_feat_dim)
        return ident

    def sentence_pair(word: str, sense_idx: int) -> tuple[str, str]:
        slot, length = _PATTERNS[int(rng.integers(0, len(_PATTERNS)))]
        picks = rng.choice(len(FILLERS), size=length - 1, replace=False)
        src, tgt = [], []
        fill = iter(picks.tolist())
        for pos in range(length):
            if pos == slot:
                src.append(word)
                tgt.append(AMBIGUOUS[word][sense_idx])
            else:
                s, t = FILLERS[next(fill)]
                src.append(s)
                tgt.append(t)
        return " ".join(src), " ".join(tgt)

    def triplet(pair) -> Sample:
        src, tgt = sentence_pair(*pair)
        return Sample("triplet", tgt, src, new_image(pair))

    train = [triplet(pairs[i % len(pairs)]) for i in range(n_train)]
    dev = [triplet(p) for p in pairs for _ in range(dev_per_sense)]
    test = [triplet(p) for p in pairs for _ in range(test_per_sense)]

    parallel = []
    for _ in range(n_parallel):
        picks = rng.choice(len(FILLERS), size=3, replace=False)
        src = " ".join(FILLERS[i][0] for i in picks.tolist())
        tgt = " ".join(FILLERS[i][1] for i in picks.tolist())
        parallel.append(Sample("parallel", tgt, src))

    captions = []
    for i in range(n_caption):
        pair = pairs[i % len(pairs)]
        _, tgt = sentence_pair(*pair)
        captions.append(Sample("caption", tgt, None, new_image(pair)))

    sentences = sorted({s.target for s in train + dev + test + parallel + captions}
                       | {s.source for s in train + dev + test + parallel
                          if s.source})
    chance = len(AMBIGUOUS) * test_per_sense / len(test)
    return SyntheticTask(
        corpora={"triplet": train, "parallel": parallel, "caption": captions},
        features=features, dev=dev, test=test,
        glossary={w: list(alts) for w, alts in AMBIGUOUS.items()},
        chance_rate=chance, sentences=sentences)


def discard_triplet_images(task: SyntheticTask) -> dict[str, list[Sample]]:
    """The triplet-unavailable regime: triplets degrade to parallel text."""
    stripped = [Sample("parallel", s.target, s.source)
                for s in task.corpora["triplet"]]
    return {"triplet": [], "parallel": stripped + task.corpora["parallel"],
            "caption": task.corpora["caption"]}
