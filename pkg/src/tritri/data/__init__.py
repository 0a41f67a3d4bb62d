"""Corpus ingestion, task constructors, and temperature-based mixing."""

from .corpus import (
    DEFAULT_STOPWORDS,
    KINDS,
    Sample,
    load_corpus,
    load_stopwords,
    read_features,
    save_corpus,
    write_features,
)
from .mixing import (
    MixPlan,
    MixRates,
    build_mixed_stream,
    check_image_resolution,
    implied_temperature,
    rates_from_probabilities,
    sample_stream,
    shuffle_images,
    temperature_probabilities,
)
from .tasks import (
    MODES,
    ExampleBuilder,
    TrainingExample,
    make_denoising_example,
    make_prompted_source,
    mask_tokens,
    sample_pseudo_prompt,
    strip_prompt,
)

__all__ = [
    "DEFAULT_STOPWORDS", "KINDS", "MODES", "ExampleBuilder", "MixPlan",
    "MixRates", "Sample", "TrainingExample", "build_mixed_stream",
    "check_image_resolution", "implied_temperature", "load_corpus",
    "load_stopwords", "make_denoising_example", "make_prompted_source",
    "mask_tokens", "rates_from_probabilities", "read_features",
    "sample_pseudo_prompt", "sample_stream", "save_corpus", "shuffle_images",
    "strip_prompt", "temperature_probabilities", "write_features",
]
