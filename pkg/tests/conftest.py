import numpy as np
import pytest

from tritri.model import ModelConfig, TranslationModel
from tritri.synthetic import make_disambiguation_task
from tritri.tokenizer import train_bpe


@pytest.fixture(scope="session")
def tiny_task():
    """Small synthetic bundle for fast unit tests (not the acceptance runs)."""
    return make_disambiguation_task(seed=0, n_train=96, n_parallel=48,
                                    n_caption=48, dev_per_sense=1,
                                    test_per_sense=1)


@pytest.fixture(scope="session")
def tiny_vocab(tiny_task):
    return train_bpe(tiny_task.sentences, 200)


@pytest.fixture(scope="session")
def tiny_config(tiny_vocab):
    return ModelConfig(vocab_size=len(tiny_vocab), enc_layers=2, dec_layers=2,
                       heads=2, d_model=16, d_ff=32, img_dim=4, img_feat_dim=8,
                       dropout=0.0, label_smoothing=0.1)


@pytest.fixture()
def tiny_model(tiny_config):
    return TranslationModel(tiny_config, seed=42)


@pytest.fixture()
def rng_features():
    gen = np.random.default_rng(7)
    return {f"im{i}": gen.normal(size=8) for i in range(4)}
