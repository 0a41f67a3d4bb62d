"""Temperature-based mixing of the three training streams.

Stream i of size D_i is sampled with probability proportional to
D_i**(1/T); raising T flattens the mix toward uniform. For epoch-level
training the probabilities are converted to integer upsample rates, every
stream is replicated by its rate, and the union is shuffled. Each
image-bearing example then independently loses its image with the
configured drop ratio.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize_scalar

from ..errors import InputError, ResolutionError
from .corpus import KINDS, Sample
from .tasks import ExampleBuilder, TrainingExample


def temperature_probabilities(sizes, temperature: float) -> np.ndarray:
    """p_i = D_i**(1/T) / sum_j D_j**(1/T)."""
    sizes = np.asarray(sizes, dtype=np.float64)
    if sizes.size == 0 or np.any(sizes <= 0):
        raise InputError(f"sizes must be positive, got {sizes.tolist()}")
    if temperature <= 0:
        raise InputError(f"temperature must be positive, got {temperature}")
    w = sizes ** (1.0 / temperature)
    return w / w.sum()


@dataclass
class MixRates:
    """Integer upsample rates plus the temperature they actually realize."""

    rates: list[int]
    implied_temperature: float


def implied_temperature(sizes, rates) -> float:
    """Temperature whose ideal mix is closest (KL) to the rounded-rate mix."""
    sizes = np.asarray(sizes, dtype=np.float64)
    counts = np.asarray(rates, dtype=np.float64) * sizes
    props = counts / counts.sum()

    def kl(t):
        q = temperature_probabilities(sizes, t)
        return float((props * np.log(props / q)).sum())

    res = minimize_scalar(kl, bounds=(0.2, 1000.0), method="bounded")
    return float(res.x)


def rates_from_probabilities(sizes, probabilities) -> MixRates:
    """Integer upsample rates realizing the target mix.

    r_i = round((p_i / D_i) / min_j(p_j / D_j)), clamped to at least 1;
    the stream with the smallest per-example weight keeps rate 1.
    """
    sizes = np.asarray(sizes, dtype=np.float64)
    p = np.asarray(probabilities, dtype=np.float64)
    if sizes.shape != p.shape:
        raise InputError(f"sizes {sizes.shape} and probabilities {p.shape} differ")
    if np.any(sizes <= 0) or np.any(p <= 0):
        raise InputError("sizes and probabilities must be positive")
    per_example = p / sizes
    raw = per_example / per_example.min()
    rates = np.maximum(1, np.rint(raw).astype(int))
    return MixRates(rates.tolist(), implied_temperature(sizes, rates))


@dataclass
class MixPlan:
    """Per-kind sizes, temperature, integer rates, and the image drop ratio."""

    sizes: dict[str, int]
    temperature: float
    rates: dict[str, int]
    drop_ratio: float

    def __post_init__(self):
        if not 0.0 <= self.drop_ratio <= 1.0:
            raise InputError(f"drop_ratio must be in [0, 1], got {self.drop_ratio}")
        if any(r < 1 for r in self.rates.values()):
            raise InputError(f"rates must be >= 1, got {self.rates}")

    @property
    def probabilities(self) -> dict[str, float]:
        """Per-kind mix probabilities realized by the integer rates."""
        counts = {k: self.rates[k] * self.sizes[k] for k in self.sizes}
        total = sum(counts.values())
        return {k: c / total for k, c in counts.items()}

    @classmethod
    def from_corpora(cls, corpora: dict[str, list[Sample]], temperature: float = 5.0,
                     drop_ratio: float = 0.3) -> "MixPlan":
        kinds = [k for k in KINDS if corpora.get(k)]
        if not kinds:
            raise InputError("no non-empty corpus streams")
        sizes = [len(corpora[k]) for k in kinds]
        if len(kinds) == 1:
            rates = MixRates([1], float(temperature))
        else:
            rates = rates_from_probabilities(
                sizes, temperature_probabilities(sizes, temperature))
        return cls({k: s for k, s in zip(kinds, sizes)}, temperature,
                   {k: r for k, r in zip(kinds, rates.rates)}, drop_ratio)


def check_image_resolution(corpora: dict[str, list[Sample]],
                           features: dict[str, np.ndarray]) -> None:
    """Fail fast if any sample references an image with no stored feature."""
    missing = sorted({
        s.image_id for stream in corpora.values() for s in stream
        if s.image_id is not None and s.image_id not in features})
    if missing:
        shown = ", ".join(missing[:10]) + (" ..." if len(missing) > 10 else "")
        raise ResolutionError(
            f"{len(missing)} image ids have no feature record: {shown}", missing)


def build_mixed_stream(corpora: dict[str, list[Sample]], plan: MixPlan,
                       rng, builder: ExampleBuilder):
    """One deterministic epoch of training examples.

    Every stream is replicated by its integer rate, the union is shuffled
    by the ``shuffle`` child stream, and image drops are drawn from the
    ``drop`` child stream in shuffled order. Drop draws happen for every
    image-bearing example regardless of mode, so runs in different modes
    under one seed see identical streams.
    """
    check_image_resolution(corpora, builder.features)
    slots: list[tuple[str, int]] = []
    for kind in KINDS:
        stream = corpora.get(kind) or []
        rate = plan.rates.get(kind, 1)
        for _ in range(rate):
            slots.extend((kind, i) for i in range(len(stream)))
    order = rng.child("shuffle").permutation(len(slots))
    drop_rng = rng.child("drop")

    def generate():
        for slot in order:
            kind, i = slots[slot]
            sample = corpora[kind][i]
            use_image = True
            if sample.image_id is not None:
                use_image = drop_rng.random() >= plan.drop_ratio
            yield builder.build(sample, use_image=use_image)

    return generate()


def sample_stream(corpora: dict[str, list[Sample]], probabilities, rng):
    """Endless fractional sampler: draw a stream by probability, then an
    example uniformly inside it. Used to validate the mix empirically."""
    kinds = [k for k in KINDS if corpora.get(k)]
    p = np.asarray(probabilities, dtype=np.float64)
    if len(kinds) != p.size:
        raise InputError(f"{len(kinds)} non-empty streams but {p.size} probabilities")
    cumulative = np.cumsum(p / p.sum())
    while True:
        u = rng.random()
        kind = kinds[int(np.searchsorted(cumulative, u, side="right"))]
        stream = corpora[kind]
        yield stream[int(rng.integers(0, len(stream)))]


def shuffle_images(samples: list[Sample], rng) -> list[Sample]:
    """Derange image assignments: no sample keeps its own image.

    Implemented as a uniformly random single cycle (Sattolo walk) over the
    image-bearing samples, which is always fixed-point free; for two
    samples this is the swap.
    """
    carriers = [i for i, s in enumerate(samples) if s.image_id is not None]
    if len(carriers) < 2:
        raise InputError(f"need at least 2 image-bearing samples, got {len(carriers)}")
    perm = list(range(len(carriers)))
    for i in range(len(perm) - 1, 0, -1):
        j = int(rng.integers(0, i))
        perm[i], perm[j] = perm[j], perm[i]
    out = list(samples)
    ids = [samples[c].image_id for c in carriers]
    for slot, c in enumerate(carriers):
        out[c] = replace(samples[c], image_id=ids[perm[slot]])
    return out
