"""Corpus and image-feature ingestion.

Corpora are JSON-lines files, one object per line with fields ``src``
(optional), ``tgt`` (required) and ``img`` (optional image id). The sample
kind is inferred from which optional fields are present: both -> triplet,
``src`` only -> parallel, ``img`` only -> caption.

Image features live in a little-endian binary file: magic ``IMF1``, u32
record count, u32 dimension, then per record a u16 id byte-length, the
UTF-8 id bytes, and ``dim`` float32 values.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from ..errors import InputError, ParseError

KINDS = ("triplet", "parallel", "caption")

FEATURE_MAGIC = b"IMF1"


@dataclass
class Sample:
    """One corpus example; ``kind`` is determined by which fields exist."""

    kind: str
    target: str
    source: str | None = None
    image_id: str | None = None
    line: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown sample kind {self.kind!r}")
        checks = {
            "triplet": self.source is not None and self.image_id is not None,
            "parallel": self.source is not None and self.image_id is None,
            "caption": self.source is None and self.image_id is not None,
        }
        if not checks[self.kind]:
            raise InputError(
                f"fields do not match kind {self.kind!r} "
                f"(source={self.source is not None}, image={self.image_id is not None})")


def infer_kind(has_source: bool, has_image: bool) -> str | None:
    if has_source and has_image:
        return "triplet"
    if has_source:
        return "parallel"
    if has_image:
        return "caption"
    return None


def load_corpus(path: str, kind: str | None = None) -> list[Sample]:
    """Read a JSONL corpus; duplicates are preserved, line numbers recorded.

    With ``kind`` given, every line must be of that kind; otherwise the
    kind is inferred per line.
    """
    if kind is not None and kind not in KINDS:
        raise InputError(f"unknown corpus kind {kind!r}")
    samples: list[Sample] = []
    with open(path, encoding="utf-8") as f:
        for n, raw in enumerate(f, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                obj = json.loads(raw)
            except json.JSONDecodeError as e:
                raise ParseError(f"invalid JSON ({e.msg})", path, n)
            if not isinstance(obj, dict):
                raise ParseError("line is not a JSON object", path, n)
            tgt = obj.get("tgt")
            if not isinstance(tgt, str) or not tgt:
                raise ParseError("missing or empty 'tgt' field", path, n)
            src = obj.get("src")
            img = obj.get("img")
            line_kind = infer_kind(src is not None, img is not None)
            if line_kind is None:
                raise ParseError("line has neither 'src' nor 'img'", path, n)
            if kind is not None and line_kind != kind:
                raise ParseError(f"expected kind {kind!r}, found {line_kind!r}", path, n)
            samples.append(Sample(line_kind, tgt, src, img, line=n))
    return samples


def save_corpus(path: str, samples: list[Sample]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for s in samples:
            obj: dict = {}
            if s.source is not None:
                obj["src"] = s.source
            obj["tgt"] = s.target
            if s.image_id is not None:
                obj["img"] = s.image_id
            f.write(json.dumps(obj, ensure_ascii=False) + "\n")


def write_features(path: str, features: dict[str, np.ndarray]) -> None:
    """Write an id -> vector map in the IMF1 binary layout."""
    if not features:
        raise InputError("feature map is empty")
    dims = {len(v) for v in features.values()}
    if len(dims) != 1:
        raise InputError(f"inconsistent feature dimensions: {sorted(dims)}")
    dim = dims.pop()
    with open(path, "wb") as f:
        f.write(FEATURE_MAGIC)
        f.write(struct.pack("<II", len(features), dim))
        for key, vec in features.items():
            ident = key.encode("utf-8")
            f.write(struct.pack("<H", len(ident)))
            f.write(ident)
            f.write(np.asarray(vec, dtype="<f4").tobytes())


def read_features(path: str) -> dict[str, np.ndarray]:
    """Read an IMF1 feature file into an id -> float64 vector map."""
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != FEATURE_MAGIC:
        raise ParseError("bad magic, not an IMF1 feature file", path, 0)
    count, dim = struct.unpack_from("<II", blob, 4)
    offset = 12
    features: dict[str, np.ndarray] = {}
    for _ in range(count):
        (id_len,) = struct.unpack_from("<H", blob, offset)
        offset += 2
        ident = blob[offset:offset + id_len].decode("utf-8")
        offset += id_len
        vec = np.frombuffer(blob, dtype="<f4", count=dim, offset=offset).astype(np.float64)
        offset += 4 * dim
        if not np.all(np.isfinite(vec)):
            raise ParseError(f"non-finite feature values for id {ident!r}", path, 0)
        features[ident] = vec
    return features


# A compact English function-word list; prompts and keyword extraction
# treat anything here (case-insensitive) as non-content.
DEFAULT_STOPWORDS = frozenset("""
a an the and or but if then else for to of in on at by with from as is are
was were be been being am do does did not no nor so such that this these
those it its he she his her they them their we our you your i me my mine
up down out off over under again further once here there when where why
how all any both each few more most other some only own same than too very
can will just should now
""".split())


def load_stopwords(path: str) -> frozenset[str]:
    """Read a plain-text stopword file, one word per line."""
    with open(path, encoding="utf-8") as f:
        return frozenset(w.strip().lower() for w in f if w.strip())
