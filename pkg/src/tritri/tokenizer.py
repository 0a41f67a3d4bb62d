"""Joint byte-pair-encoding vocabulary over whitespace-tokenized text.

Both languages share one merge table and one id space. Text is split on
whitespace (the target side is expected pre-segmented), each word becomes a
character sequence closed by the word-end symbol ``</w>``, and merges are
learned by highest pair frequency with lexicographic tie-breaking so two
trainings on the same corpus produce identical vocabularies.

Ids 0-5 are reserved: PAD, BOS, EOS, UNK, SEP, MASK. They are never
produced by merges and survive retraining unchanged.
"""

from __future__ import annotations

import json
from collections import Counter

from .errors import InputError, ParseError

PAD, BOS, EOS, UNK, SEP, MASK = range(6)
RESERVED = ("<pad>", "<bos>", "<eos>", "<unk>", "<sep>", "<mask>")
WORD_END = "</w>"


class Vocab:
    """Immutable BPE vocabulary: merge list plus token ids."""

    def __init__(self, merges: list[tuple[str, str]], symbols: list[str],
                 num_merges: int):
        self.merges = list(merges)
        self.num_merges = int(num_merges)  # requested count, kept as metadata
        self.token_to_id: dict[str, int] = {t: i for i, t in enumerate(RESERVED)}
        for s in symbols:
            if s not in self.token_to_id:
                self.token_to_id[s] = len(self.token_to_id)
        for left, right in self.merges:
            merged = left + right
            if merged not in self.token_to_id:
                self.token_to_id[merged] = len(self.token_to_id)
        self.id_to_token = {i: t for t, i in self.token_to_id.items()}
        self._ranks = {pair: i for i, pair in enumerate(self.merges)}
        self._word_cache: dict[str, tuple[int, ...]] = {}

    def __len__(self) -> int:
        return len(self.token_to_id)

    # -- encoding ----------------------------------------------------------

    def _encode_word(self, word: str) -> tuple[int, ...]:
        cached = self._word_cache.get(word)
        if cached is not None:
            return cached
        symbols = list(word) + [WORD_END]
        while len(symbols) > 1:
            best = None
            best_rank = len(self._ranks)
            for pair in zip(symbols, symbols[1:]):
                rank = self._ranks.get(pair, best_rank)
                if rank < best_rank:
                    best, best_rank = pair, rank
            if best is None:
                break
            merged, out, i = best[0] + best[1], [], 0
            while i < len(symbols):
                if i + 1 < len(symbols) and (symbols[i], symbols[i + 1]) == best:
                    out.append(merged)
                    i += 2
                else:
                    out.append(symbols[i])
                    i += 1
            symbols = out
        ids = tuple(self.token_to_id.get(s, UNK) for s in symbols)
        self._word_cache[word] = ids
        return ids

    def encode(self, text: str) -> list[int]:
        """Tokenize ``text``; unknown symbols map to UNK. Total function."""
        ids: list[int] = []
        for word in text.split():
            ids.extend(self._encode_word(word))
        return ids

    def decode(self, ids: list[int]) -> str:
        """Inverse of encode on corpus sentences.

        PAD/BOS/EOS vanish; SEP renders as a standalone ``<sep>`` word;
        UNK and MASK render inline as ``<unk>`` / ``<mask>``.
        """
        pieces: list[str] = []
        for i in ids:
            i = int(i)
            if i < 0 or i >= len(self.token_to_id):
                raise InputError(f"token id {i} outside vocabulary of size {len(self)}")
            if i in (PAD, BOS, EOS):
                continue
            if i == SEP:
                pieces.append(RESERVED[SEP] + " ")
            elif i in (UNK, MASK):
                pieces.append(RESERVED[i])
            else:
                pieces.append(self.id_to_token[i])
        return "".join(pieces).replace(WORD_END, " ").strip()

    # -- persistence ---------------------------------------------------------

    def save(self, path: str) -> None:
        """Write the merge table: header ``BPE v1 <num_merges>``, one merge per line."""
        with open(path, "w", encoding="utf-8") as f:
            f.write(f"BPE v1 {self.num_merges}\n")
            for left, right in self.merges:
                f.write(f"{left} {right}\n")

    def to_json(self) -> str:
        """Full-fidelity serialization (merges plus symbol inventory)."""
        products = {left + right for left, right in self.merges}
        symbols = [t for t, i in sorted(self.token_to_id.items(), key=lambda kv: kv[1])
                   if i >= len(RESERVED) and t not in products]
        return json.dumps({"num_merges": self.num_merges, "symbols": symbols,
                           "merges": self.merges})

    @classmethod
    def from_json(cls, blob: str) -> "Vocab":
        d = json.loads(blob)
        return cls([tuple(m) for m in d["merges"]], d["symbols"], d["num_merges"])


def load_vocab(path: str) -> Vocab:
    """Load a merge-table file written by :meth:`Vocab.save`.

    The file carries merges only, so the symbol inventory is rebuilt from
    the characters occurring in merges; characters that never joined any
    merge encode to UNK after a reload.
    """
    with open(path, encoding="utf-8") as f:
        lines = f.read().splitlines()
    if not lines or not lines[0].startswith("BPE v1 "):
        raise ParseError("missing 'BPE v1 <num_merges>' header", path, 1)
    try:
        num_merges = int(lines[0].split()[2])
    except (IndexError, ValueError):
        raise ParseError("malformed header", path, 1)
    merges = []
    for n, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(" ")
        if len(parts) != 2:
            raise ParseError(f"expected 'left right', got {line!r}", path, n)
        merges.append((parts[0], parts[1]))
    chars: set[str] = {WORD_END}
    for left, right in merges:
        for part in (left, right):
            chars.update(part.replace(WORD_END, ""))
    return Vocab(merges, sorted(chars), num_merges)


def train_bpe(corpus, num_merges: int) -> Vocab:
    """Learn ``num_merges`` merges jointly over an iterable of sentences.

    Deterministic: pair-frequency ties break on the lexicographically
    smaller pair. Stops early if no pair occurs twice. A merge whose
    product would collide with a reserved marker string is skipped.
    """
    if num_merges < 0:
        raise InputError(f"num_merges must be >= 0, got {num_merges}")
    word_freq: Counter[str] = Counter()
    for sentence in corpus:
        word_freq.update(sentence.split())
    if not word_freq:
        raise InputError("corpus is empty")

    words = {w: list(w) + [WORD_END] for w in word_freq}
    symbols = sorted({s for seq in words.values() for s in seq})

    pair_counts: Counter[tuple[str, str]] = Counter()
    pair_words: dict[tuple[str, str], set[str]] = {}
    for w, seq in words.items():
        f = word_freq[w]
        for pair in zip(seq, seq[1:]):
            pair_counts[pair] += f
            pair_words.setdefault(pair, set()).add(w)

    merges: list[tuple[str, str]] = []
    for _ in range(num_merges):
        # pick max count; ties -> lexicographically smallest pair
        candidates = [(c, p) for p, c in pair_counts.items()
                      if c >= 2 and (p[0] + p[1]) not in RESERVED]
        if not candidates:
            break
        max_count = max(c for c, _ in candidates)
        best = min(p for c, p in candidates if c == max_count)
        merges.append(best)
        merged = best[0] + best[1]

        for w in list(pair_words.get(best, ())):
            seq = words[w]
            f = word_freq[w]
            for pair in zip(seq, seq[1:]):
                pair_counts[pair] -= f
                if pair_counts[pair] <= 0:
                    del pair_counts[pair]
                ws = pair_words.get(pair)
                if ws is not None:
                    ws.discard(w)
                    if not ws:
                        del pair_words[pair]
            out, i = [], 0
            while i < len(seq):
                if i + 1 < len(seq) and (seq[i], seq[i + 1]) == best:
                    out.append(merged)
                    i += 2
                else:
                    out.append(seq[i])
                    i += 1
            words[w] = out
            for pair in zip(out, out[1:]):
                pair_counts[pair] += f
                pair_words.setdefault(pair, set()).add(w)

    return Vocab(merges, symbols, num_merges)
