"""Empirical cdfs on a fixed grid, streaming moments and ratio estimators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

GRID = np.linspace(0.0, 1.0, 1001)
FIXED_SCALE = 2.0**32


def to_fixed(values) -> np.ndarray:
    """Values in [0, 1] as 32-bit fixed point (1 maps to 2^32 - 1)."""
    v = np.asarray(values, dtype=float)
    return np.minimum(np.floor(v * FIXED_SCALE), FIXED_SCALE - 1).astype(np.uint32)


def from_fixed(codes) -> np.ndarray:
    return (np.asarray(codes, dtype=np.float64) + 0.5) / FIXED_SCALE


@dataclass(frozen=True, eq=False)
class EmpiricalCdf:
    samples: np.ndarray  # sorted
    grid: np.ndarray
    values: np.ndarray  # F(grid)

    @property
    def n(self) -> int:
        return len(self.samples)

    def __call__(self, x):
        return np.searchsorted(self.samples, np.asarray(x, dtype=float), side="right") / self.n


def cdf(samples, grid=None) -> EmpiricalCdf:
    s = np.sort(np.asarray(samples, dtype=float).ravel())
    if s.size == 0:
        raise ValueError("empirical cdf of an empty sample")
    g = GRID if grid is None else np.asarray(grid, dtype=float)
    vals = np.searchsorted(s, g, side="right") / s.size
    return EmpiricalCdf(s, g, vals)


def sup_distance(F: EmpiricalCdf, G: EmpiricalCdf) -> float:
    if F.grid.shape != G.grid.shape or not np.array_equal(F.grid, G.grid):
        raise ValueError("cdfs are tabulated on different grids")
    return float(np.max(np.abs(F.values - G.values)))


class MomentAccumulator:
    """Count, mean and second central moment, with Chan's merge."""

    def __init__(self, count: int = 0, mean: float = 0.0, m2: float = 0.0):
        self.count = count
        self.mean = mean
        self.m2 = m2

    def add(self, x: float) -> None:
        self.count += 1
        d = x - self.mean
        self.mean += d / self.count
        self.m2 += d * (x - self.mean)

    def extend(self, xs) -> None:
        xs = np.asarray(xs, dtype=float)
        if xs.size:
            self.merge(MomentAccumulator(xs.size, float(xs.mean()), float(((xs - xs.mean()) ** 2).sum())))

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        if other.count == 0:
            return self
        if self.count == 0:
            self.count, self.mean, self.m2 = other.count, other.mean, other.m2
            return self
        n = self.count + other.count
        d = other.mean - self.mean
        self.mean += d * other.count / n
        self.m2 += other.m2 + d * d * self.count * other.count / n
        self.count = n
        return self

    @property
    def variance(self) -> float:
        return self.m2 / (self.count - 1)


def mean_with_error(acc: MomentAccumulator) -> tuple[float, float]:
    if acc.count < 2:
        raise ValueError("need at least two samples")
    return acc.mean, math.sqrt(acc.variance / acc.count)


def ratio_estimate(sk, sv, skk, svv, skv, n):
    """Ratio estimator sum(k)/sum(v) over n samples with its linearised
    standard error, from per-sample integer sums.

    Probes of one sample share a curve, so they are not independent; the
    sample is the independent unit.
    """
    sk = np.asarray(sk, dtype=float)
    sv = np.asarray(sv, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = sk / sv
        vbar = sv / n
        # sum_i (k_i - p v_i)^2
        ss = np.asarray(skk, float) - 2 * p * np.asarray(skv, float) + p * p * np.asarray(svv, float)
        var = ss / (n * (n - 1)) / (vbar * vbar)
    return p, np.sqrt(np.maximum(var, 0.0))
