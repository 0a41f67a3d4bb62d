"""Image-to-keyword prediction for prompt-based translation.

Keywords of a target sentence are its rarest content words (corpus-level
inverse frequency, rarest first). The image -> keyword model is an exact
nearest-neighbor index over stored feature vectors with cosine similarity:
a query returns the keywords of its closest entry. The index sits behind a
small interface so a learned captioner could replace it.
"""

from __future__ import annotations

import json
from collections import Counter

import numpy as np

from .data.corpus import DEFAULT_STOPWORDS, read_features, write_features
from .errors import InputError, StateError


class KeywordExtractor:
    """Ranks content words of a sentence by corpus rarity."""

    def __init__(self, corpus_targets, stopwords: frozenset[str] = DEFAULT_STOPWORDS):
        self.stopwords = stopwords
        self.freq: Counter[str] = Counter()
        for sentence in corpus_targets:
            self.freq.update(w.lower() for w in sentence.split())

    def extract(self, target: str, k: int) -> list[str]:
        """Up to ``k`` distinct content words, rarest first, ties in
        sentence order. Unseen words count as rarest of all."""
        if k < 1:
            raise InputError(f"k must be >= 1, got {k}")
        seen: set[str] = set()
        candidates: list[tuple[int, int, str]] = []
        for pos, word in enumerate(target.split()):
            lw = word.lower()
            if lw in self.stopwords or lw in seen:
                continue
            seen.add(lw)
            candidates.append((self.freq.get(lw, 0), pos, word))
        candidates.sort(key=lambda c: (c[0], c[1]))
        return [w for _, _, w in candidates[:k]]


def extract_keywords(target: str, k: int, extractor: KeywordExtractor) -> list[str]:
    return extractor.extract(target, k)


class KeywordIndex:
    """Exact cosine nearest-neighbor store of (feature vector, keywords)."""

    def __init__(self, vectors: np.ndarray, keywords: list[list[str]]):
        if len(vectors) != len(keywords):
            raise InputError("vector/keyword counts differ")
        self.vectors = np.asarray(vectors, dtype=np.float64)
        self.keywords = [list(k) for k in keywords]
        norms = np.linalg.norm(self.vectors, axis=1)
        self._unit = self.vectors / np.maximum(norms, 1e-300)[:, None]

    def __len__(self) -> int:
        return len(self.keywords)

    def predict(self, image: np.ndarray, k: int) -> list[str]:
        """Keywords of the cosine-nearest entry, truncated to ``k``.

        Ties break toward the earliest entry. Invariant under positive
        scaling of the query.
        """
        if len(self.keywords) == 0:
            raise StateError("keyword index is empty")
        q = np.asarray(image, dtype=np.float64)
        if q.shape != (self.vectors.shape[1],):
            raise InputError(
                f"query dimension {q.shape} does not match index dimension "
                f"({self.vectors.shape[1]},)")
        qn = np.linalg.norm(q)
        sims = self._unit @ (q / qn if qn > 0 else q)
        best = int(np.argmax(sims))  # argmax returns the first maximum
        return self.keywords[best][:k]

    def save(self, features_path: str, keywords_path: str) -> None:
        """Write vectors in the image-feature binary format (ordinal ids)
        plus a JSONL sidecar mapping ordinals to keyword lists."""
        write_features(features_path, {str(i): v for i, v in enumerate(self.vectors)})
        with open(keywords_path, "w", encoding="utf-8") as f:
            for i, kws in enumerate(self.keywords):
                f.write(json.dumps({"i": i, "keywords": kws}, ensure_ascii=False) + "\n")

    @classmethod
    def load(cls, features_path: str, keywords_path: str) -> "KeywordIndex":
        features = read_features(features_path)
        vectors = np.stack([features[str(i)] for i in range(len(features))])
        keywords: dict[int, list[str]] = {}
        with open(keywords_path, encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    obj = json.loads(line)
                    keywords[int(obj["i"])] = list(obj["keywords"])
        return cls(vectors, [keywords[i] for i in range(len(keywords))])


def build_index(pairs, k: int, stopwords: frozenset[str] = DEFAULT_STOPWORDS,
                extractor: KeywordExtractor | None = None) -> KeywordIndex:
    """Index (feature vector, target sentence) pairs by their keywords.

    Pairs whose target has no content words are skipped (an entry must
    carry at least one keyword). Duplicate vectors are all retained.
    """
    pairs = list(pairs)
    if extractor is None:
        extractor = KeywordExtractor((t for _, t in pairs), stopwords)
    vectors: list[np.ndarray] = []
    keywords: list[list[str]] = []
    dim = None
    for vec, target in pairs:
        vec = np.asarray(vec, dtype=np.float64)
        if dim is None:
            dim = vec.shape
        elif vec.shape != dim:
            raise InputError(f"feature dimensions differ: {vec.shape} vs {dim}")
        kws = extractor.extract(target, k)
        if kws:
            vectors.append(vec)
            keywords.append(kws)
    if not vectors:
        return KeywordIndex(np.zeros((0, 0)), [])
    return KeywordIndex(np.stack(vectors), keywords)


def predict_keywords(index: KeywordIndex, image: np.ndarray, k: int) -> list[str]:
    return index.predict(image, k)
