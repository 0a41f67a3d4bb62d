import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tritri.errors import InputError, ParseError
from tritri.tokenizer import (
    BOS, EOS, MASK, PAD, RESERVED, SEP, UNK, Vocab, load_vocab, train_bpe,
)

CORPUS = [
    "the cat sat on the mat",
    "the dog sat on the log",
    "a cat and a dog",
    "现货 儿童 口罩 三 层",
    "现货 奶酪 粒 宠物 专用",
] * 20


@pytest.fixture(scope="module")
def vocab():
    return train_bpe(CORPUS, 80)


def test_reserved_ids_fixed():
    assert (PAD, BOS, EOS, UNK, SEP, MASK) == (0, 1, 2, 3, 4, 5)
    v = train_bpe(["x"], 0)
    for i, name in enumerate(RESERVED):
        assert v.token_to_id[name] == i


def test_zero_merges_gives_character_vocab():
    v = train_bpe(["ab ba"], 0)
    assert v.merges == []
    assert v.decode(v.encode("ab ba")) == "ab ba"


def test_first_merge_by_pair_count():
    v = train_bpe(["abab"] * 100, 1)
    assert v.merges == [("a", "b")]


def test_requested_merges_recorded_in_metadata():
    v = train_bpe(["tiny corpus"], 11000)
    assert v.num_merges == 11000
    assert len(v.merges) < 11000  # pairs exhaust early on a tiny corpus


def test_empty_corpus_rejected():
    with pytest.raises(InputError):
        train_bpe([], 10)
    with pytest.raises(InputError):
        train_bpe(["", "   "], 10)


def test_training_is_deterministic(vocab):
    again = train_bpe(CORPUS, 80)
    assert again.merges == vocab.merges
    assert again.token_to_id == vocab.token_to_id


def test_encode_empty_string(vocab):
    assert vocab.encode("") == []


def test_roundtrip_on_corpus(vocab):
    for sentence in set(CORPUS):
        assert vocab.decode(vocab.encode(sentence)) == sentence


def test_unknown_symbol_becomes_unk(vocab):
    assert UNK in vocab.encode("Zebra")


def test_decode_empty_and_control(vocab):
    assert vocab.decode([]) == ""
    assert vocab.decode([BOS, EOS]) == ""
    assert vocab.decode([PAD, PAD]) == ""


def test_decode_renders_markers(vocab):
    ids = vocab.encode("the cat")
    assert vocab.decode(ids + [SEP] + vocab.encode("dog")) == "the cat <sep> dog"
    assert "<mask>" in vocab.decode([MASK])


def test_decode_rejects_out_of_range(vocab):
    with pytest.raises(InputError):
        vocab.decode([len(vocab)])


def test_save_load_merge_table(tmp_path, vocab):
    path = tmp_path / "bpe.txt"
    vocab.save(str(path))
    header = path.read_text(encoding="utf-8").splitlines()[0]
    assert header == f"BPE v1 {vocab.num_merges}"
    loaded = load_vocab(str(path))
    assert loaded.merges == vocab.merges
    assert loaded.num_merges == vocab.num_merges


def test_load_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("not a header\n")
    with pytest.raises(ParseError):
        load_vocab(str(path))


def test_json_roundtrip_is_full_fidelity(vocab):
    clone = Vocab.from_json(vocab.to_json())
    assert clone.token_to_id == vocab.token_to_id
    for sentence in set(CORPUS):
        assert clone.encode(sentence) == vocab.encode(sentence)


@settings(max_examples=60, deadline=None)
@given(st.lists(
    st.text(alphabet="abcdeno ", min_size=1, max_size=30),
    min_size=1, max_size=8))
def test_roundtrip_property(sentences):
    normalized = [" ".join(s.split()) for s in sentences]
    normalized = [s for s in normalized if s]
    if not normalized:
        return
    v = train_bpe(normalized, 30)
    for s in normalized:
        assert v.decode(v.encode(s)) == s
