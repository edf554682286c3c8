"""Confusion-matrix crowd simulator with a portable deterministic RNG.

Datasets with known ground truth are generated for oracle and recovery
tests. Randomness comes from SplitMix64 rather than a platform RNG so
that a fixture is reproducible bit-for-bit from its seed in any
language:

* state update: ``state += 0x9E3779B97F4A7C15 (mod 2^64)``
* output: ``z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EB; z = z ^ (z >> 31)``
  (all mod 2^64)
* uniform double: top 53 bits, ``(z >> 11) * 2^-53``

Draw order is fixed: first one accuracy per worker (skipped when
explicit confusion matrices are supplied), then per item in index order
one truth draw, ``redundancy`` worker-selection draws (partial
Fisher-Yates over the worker range), and finally one label draw per
assigned worker in ascending worker order. Categorical draws invert the
cumulative distribution with a linear scan.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import GroundTruth, LabelMatrix

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class SplitMix64:
    """The SplitMix64 generator (constants above)."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_uint64(self) -> int:
        self._state = (self._state + _GAMMA) & _MASK64
        z = self._state
        z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
        z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
        return z ^ (z >> 31)

    def uniform(self) -> float:
        """Uniform double in [0, 1) from the top 53 bits."""
        return (self.next_uint64() >> 11) * 2.0**-53

    def below(self, n: int) -> int:
        """Uniform integer in [0, n) as ``floor(uniform() * n)``."""
        return int(self.uniform() * n)

    def categorical(self, cdf) -> int:
        """First index whose cumulative mass exceeds a uniform draw."""
        u = self.uniform()
        for k, threshold in enumerate(cdf):
            if u < threshold:
                return k
        return len(cdf) - 1


@dataclass(eq=False)
class SynthSpec:
    """Recipe for one synthetic dataset.

    Workers are either symmetric (one accuracy per worker drawn
    uniformly from ``accuracy_range``; off-diagonal error mass spread
    evenly) or fully specified through ``confusion`` with shape
    (num_workers, true class, emitted class). Each item is labelled by
    ``redundancy`` distinct workers chosen uniformly.
    """

    num_items: int
    num_workers: int
    num_classes: int
    redundancy: int
    seed: int = 0
    class_prior: tuple[float, ...] | None = None  # None -> uniform
    accuracy_range: tuple[float, float] = (0.55, 0.95)
    confusion: np.ndarray | None = None

    def __post_init__(self):
        if min(self.num_items, self.num_workers, self.num_classes) < 1:
            raise ValueError("item, worker and class counts must be positive")
        if not 1 <= self.redundancy <= self.num_workers:
            raise ValueError(
                f"redundancy {self.redundancy} must be between 1 and the "
                f"worker count {self.num_workers}"
            )
        if self.class_prior is not None:
            prior = np.asarray(self.class_prior, dtype=np.float64)
            if prior.shape != (self.num_classes,) or np.any(prior < 0):
                raise ValueError("class_prior must be a non-negative vector of length K")
            if abs(float(prior.sum()) - 1.0) > 1e-9:
                raise ValueError("class_prior must sum to 1")
        if self.confusion is not None:
            conf = np.asarray(self.confusion, dtype=np.float64)
            expected = (self.num_workers, self.num_classes, self.num_classes)
            if conf.shape != expected:
                raise ValueError(f"confusion must have shape {expected}")
            if np.any(conf < 0) or np.any(np.abs(conf.sum(axis=2) - 1.0) > 1e-9):
                raise ValueError("confusion rows must be distributions")
        else:
            lo, hi = self.accuracy_range
            if not 0.0 <= lo <= hi <= 1.0:
                raise ValueError("accuracy_range must satisfy 0 <= lo <= hi <= 1")

    def prior_vector(self) -> np.ndarray:
        if self.class_prior is None:
            return np.full(self.num_classes, 1.0 / self.num_classes)
        return np.asarray(self.class_prior, dtype=np.float64)


def draw_worker_confusions(spec: SynthSpec) -> np.ndarray:
    """The per-worker confusion matrices ``generate`` will use.

    For symmetric specs these are drawn from the seed (the draws are the
    first ``num_workers`` uniforms of the stream, so this replays
    exactly what ``generate`` consumes); explicit matrices are returned
    as given.
    """
    if spec.confusion is not None:
        return np.asarray(spec.confusion, dtype=np.float64)
    return _draw_confusions(spec, SplitMix64(spec.seed))


def _draw_confusions(spec: SynthSpec, rng: SplitMix64) -> np.ndarray:
    lo, hi = spec.accuracy_range
    k = spec.num_classes
    conf = np.empty((spec.num_workers, k, k))
    for j in range(spec.num_workers):
        acc = lo + rng.uniform() * (hi - lo)
        off = (1.0 - acc) / (k - 1) if k > 1 else 0.0
        conf[j] = np.full((k, k), off)
        np.fill_diagonal(conf[j], acc if k > 1 else 1.0)
    return conf


def generate(spec: SynthSpec) -> tuple[LabelMatrix, GroundTruth]:
    """Sample a labelled dataset and its complete ground truth.

    Item i gets external id ``q{i}`` and worker j gets ``w{j}``; dense
    indices coincide with the generation indices because the full id
    universes are passed through. Fully reproducible from the seed.
    """
    rng = SplitMix64(spec.seed)
    if spec.confusion is None:
        confusion = _draw_confusions(spec, rng)
    else:
        confusion = np.asarray(spec.confusion, dtype=np.float64)

    prior_cdf = np.cumsum(spec.prior_vector())
    label_cdfs = np.cumsum(confusion, axis=2)

    records = []
    truth: dict[int, int] = {}
    for i in range(spec.num_items):
        true_class = rng.categorical(prior_cdf)
        truth[i] = true_class
        chosen = sorted(_sample_distinct(rng, spec.num_workers, spec.redundancy))
        for j in chosen:
            label = rng.categorical(label_cdfs[j, true_class])
            records.append((f"q{i}", f"w{j}", str(label)))

    matrix = LabelMatrix.from_triples(
        records,
        item_ids=[f"q{i}" for i in range(spec.num_items)],
        worker_ids=[f"w{j}" for j in range(spec.num_workers)],
        num_classes=spec.num_classes,
    )
    return matrix, GroundTruth(mapping=truth)


def _sample_distinct(rng: SplitMix64, population: int, count: int) -> list[int]:
    """``count`` distinct integers from [0, population), by partial
    Fisher-Yates over a virtual identity array."""
    replacements: dict[int, int] = {}
    out = []
    for t in range(count):
        idx = t + rng.below(population - t)
        out.append(replacements.get(idx, idx))
        replacements[idx] = replacements.get(t, t)
    return out
