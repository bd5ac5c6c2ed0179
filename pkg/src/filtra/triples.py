"""Metric triples, sampled distance-matrix distributions and Cesaro averages over sequences."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.stats import ks_2samp

TRIPLE_SCHEMA = "filtra.triple/1"


@dataclass
class MetricTriple:
    masses: np.ndarray
    d: np.ndarray
    points: Optional[list] = None
    metric: bool = False  # when True, the triangle inequality is enforced too

    def __post_init__(self):
        self.masses = np.asarray(self.masses, dtype=float)
        self.d = np.asarray(self.d, dtype=float)
        if self.points is None:
            self.points = list(range(len(self.masses)))
        self.validate()

    def validate(self, tol: float = 1e-12) -> None:
        n = len(self.masses)
        if self.d.shape != (n, n):
            raise ValueError(f"distance matrix shape {self.d.shape} does not match {n} points")
        if (self.masses < 0).any() or abs(self.masses.sum() - 1) > 1e-9:
            raise ValueError("masses must be a probability vector")
        if (self.d < 0).any():
            raise ValueError("distances must be nonnegative")
        if np.abs(np.diag(self.d)).max(initial=0) > tol:
            raise ValueError("diagonal must vanish")
        if np.abs(self.d - self.d.T).max(initial=0) > tol:
            raise ValueError("distance matrix must be symmetric")
        if self.metric and n <= 400:
            # d(i,l) <= d(i,j) + d(j,l) for all i, j, l
            if (self.d[:, None, :] > self.d[:, :, None] + self.d[None, :, :] + 1e-9).any():
                raise ValueError("triangle inequality fails")

    def relabeled(self, perm: Sequence[int]) -> "MetricTriple":
        """Same space with point i renamed to perm[i]."""
        perm = np.asarray(perm)
        inv = np.argsort(perm)
        return MetricTriple(self.masses[inv], self.d[np.ix_(inv, inv)], [self.points[i] for i in inv], self.metric)

    @classmethod
    def interval(cls, size: int = 1000) -> "MetricTriple":
        x = (np.arange(size) + 0.5) / size
        return cls(np.full(size, 1.0 / size), np.abs(x[:, None] - x[None, :]), metric=True)

    @classmethod
    def two_point(cls, distance: float = 1.0, p: float = 0.5) -> "MetricTriple":
        return cls(np.array([p, 1 - p]), np.array([[0.0, distance], [distance, 0.0]]), ["a", "b"], metric=True)

    @classmethod
    def one_point(cls) -> "MetricTriple":
        return cls(np.array([1.0]), np.zeros((1, 1)), ["a"], metric=True)

    def to_dict(self) -> dict:
        return {"schema": TRIPLE_SCHEMA, "masses": self.masses.tolist(), "d": self.d.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "MetricTriple":
        return cls(np.array(data["masses"], dtype=float), np.array(data["d"], dtype=float), data.get("points"), bool(data.get("metric", False)))

    @classmethod
    def load(cls, path) -> "MetricTriple":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _draw(masses: np.ndarray, d: np.ndarray, k: int, count: int, rng: np.random.Generator) -> np.ndarray:
    idx = rng.choice(len(masses), size=(count, k), p=masses)
    return d[idx[:, :, None], idx[:, None, :]]


def sample_matrix_distribution(triple: MetricTriple, k: int, count: int, seed) -> np.ndarray:
    """Array of shape (count, k, k): distance matrices of k i.i.d. mass-weighted draws."""
    if k < 2:
        raise ValueError("k must be at least 2")
    return _draw(triple.masses, triple.d, k, count, np.random.default_rng(seed))


def functionals(samples: np.ndarray) -> dict:
    """Permutation-invariant summaries used by :func:`compare`."""
    k = samples.shape[1]
    iu = np.triu_indices(k, 1)
    out = {"entries": samples[:, iu[0], iu[1]].ravel(), "row_sums": samples.sum(axis=2).ravel()}
    if k >= 3:
        tri = [samples[:, i, j] + samples[:, j, l] + samples[:, i, l] for i, j, l in itertools.combinations(range(k), 3)]
        out["triangle_perimeters"] = np.concatenate(tri)
    return out


def compare_samples(a: np.ndarray, b: np.ndarray) -> float:
    fa, fb = functionals(a), functionals(b)
    return max(float(ks_2samp(fa[name], fb[name]).statistic) for name in fa)


def compare(a: MetricTriple, b: MetricTriple, k: int = 4, count: int = 10_000, seed=0) -> float:
    """Largest Kolmogorov-Smirnov statistic over the functional battery, independent draws per triple."""
    ss = np.random.SeedSequence(seed)
    ra, rb = (np.random.default_rng(s) for s in ss.spawn(2))
    return compare_samples(_draw(a.masses, a.d, k, count, ra), _draw(b.masses, b.d, k, count, rb))


def null_threshold(triple: MetricTriple, k: int = 4, count: int = 10_000, seed=0, reps: int = 20, quantile: float = 0.99) -> float:
    """Quantile of the score of a triple against independent copies of itself."""
    ss = np.random.SeedSequence(seed)
    scores = []
    for child in ss.spawn(reps):
        ra, rb = (np.random.default_rng(s) for s in child.spawn(2))
        scores.append(compare_samples(_draw(triple.masses, triple.d, k, count, ra), _draw(triple.masses, triple.d, k, count, rb)))
    return float(np.quantile(scores, quantile))


@dataclass
class CesaroSummary:
    N: int
    k: int
    count: int
    entry_law: dict  # value -> empirical probability of an off-diagonal entry
    entry_mean: float
    entry_correlation: np.ndarray  # correlation matrix of the upper-triangle entries
    samples: np.ndarray = field(repr=False)

    def prob(self, value: float) -> float:
        return self.entry_law.get(float(value), 0.0)

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "k": self.k,
            "count": self.count,
            "entry_law": {repr(v): p for v, p in sorted(self.entry_law.items())},
            "entry_mean": self.entry_mean,
            "entry_correlation": np.nan_to_num(self.entry_correlation).round(6).tolist(),
        }


Sequence_ = Union[Sequence[np.ndarray], Callable[[int], np.ndarray]]


def cesaro_matrix_distribution(semimetrics: Sequence_, masses, N: int, k: int, count: int, seed, indices: Optional[Sequence[int]] = None) -> CesaroSummary:
    """Draw n uniformly from 1..N (or from ``indices``), then a matrix from the n-th triple; summarize.

    ``semimetrics`` is a callable n -> matrix or a list indexed from n = 1.
    """
    masses = np.asarray(masses, dtype=float)
    get = semimetrics if callable(semimetrics) else (lambda n: np.asarray(semimetrics[n - 1], dtype=float))
    pool = np.asarray(indices if indices is not None else np.arange(1, N + 1))
    rng = np.random.default_rng(seed)
    ns = rng.choice(pool, size=count)
    samples = np.empty((count, k, k))
    for n in np.unique(ns):
        rows = np.nonzero(ns == n)[0]
        samples[rows] = _draw(masses, np.asarray(get(int(n)), dtype=float), k, len(rows), rng)
    iu = np.triu_indices(k, 1)
    entries = samples[:, iu[0], iu[1]]
    values, counts = np.unique(entries.ravel(), return_counts=True)
    law = {float(v): float(c) / entries.size for v, c in zip(values, counts)}
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.corrcoef(entries, rowvar=False) if entries.shape[1] > 1 else np.ones((1, 1))
    return CesaroSummary(N, k, count, law, float(entries.mean()), np.atleast_2d(corr), samples)


def alternating_two_point(n: int) -> np.ndarray:
    """Two-point semimetric with distance n mod 2."""
    x = float(n % 2)
    return np.array([[0.0, x], [x, 0.0]])
