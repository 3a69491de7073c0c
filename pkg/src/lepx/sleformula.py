"""Schramm's pass-right probability for SLE_kappa in the upper half plane.

    P(theta) = 1/2 + G(kappa) cot(theta) 2F1(1/2, 4/kappa; 3/2; -cot^2 theta)
    G(kappa) = Gamma(4/kappa) / (sqrt(pi) Gamma((8 - kappa) / (2 kappa)))

P tends to 1 as theta -> 0, i.e. for points near the positive real axis,
which is the right-hand (black) side of a curve running from 0 to infinity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

CHUNK = 4096
MAX_TERMS = 50_000_000


class SeriesError(ArithmeticError):
    pass


def _series_2f1(a: float, b: float, c: float, y: float, tol: float) -> float:
    """sum_n (a)_n (b)_n / ((c)_n n!) y^n for 0 <= y < 1.

    Stops once the tail bound |t_n| y / (1 - y) falls below ``tol``; valid
    because the term ratio never exceeds y when a + b <= c + 1 and ab <= c.
    """
    if y == 0.0:
        return 1.0
    if not 0.0 < y < 1.0:
        raise SeriesError(f"series argument {y} outside [0, 1)")
    total = 0.0
    term = 1.0
    n0 = 0
    while n0 < MAX_TERMS:
        n = np.arange(n0, n0 + CHUNK, dtype=float)
        ratios = (a + n) * (b + n) / ((c + n) * (n + 1.0)) * y
        terms = term * np.concatenate(([1.0], np.cumprod(ratios[:-1])))
        bound = np.abs(terms) * y / (1.0 - y)
        hit = np.flatnonzero(bound < tol)
        if hit.size:
            k = hit[0] + 1
            return total + math.fsum(terms[:k])
        total += math.fsum(terms)
        term = terms[-1] * ratios[-1]
        n0 += CHUNK
    raise SeriesError("2F1 series did not converge")


def gauss_2f1_halfline(b: float, x: float, tol: float = 1e-13) -> float:
    """2F1(1/2, b; 3/2; x) for x <= 0, b > 1/2.

    For -1 <= x <= 0, Pfaff: 2F1(a, b; c; x) = (1 - x)^(-a) 2F1(a, c - b; c; x / (x - 1)).
    For x < -1 the 1/x connection formula; with a = 1/2, c = 3/2 its first
    series terminates and the second, after Pfaff, has argument 1 / (1 - x).
    """
    if x > 0:
        raise ValueError("x must be <= 0")
    if x < -1.0:
        return _large_negative(b, x, tol)
    a, c = 0.5, 1.5
    y = x / (x - 1.0) if x != 0 else 0.0
    bp = c - b
    if a + bp > c + 1 or a * bp > c:
        raise SeriesError("tail bound does not apply for this b")
    scale = (1.0 - x) ** (-a)
    return scale * _series_2f1(a, bp, c, y, tol / scale)


def _large_negative(b: float, x: float, tol: float) -> float:
    if b <= 0.5:
        raise SeriesError("connection formula needs b > 1/2")
    s = -x
    lead = 0.5 * math.sqrt(math.pi) * math.gamma(b - 0.5) / math.gamma(b) / math.sqrt(s)
    # (-x)^(-b) (1 - 1/x)^(-b) = (1 - x)^(-b)
    scale = (1.0 - x) ** (-b) / (1.0 - 2.0 * b)
    if scale == 0.0:  # underflow; the series is bounded by 2
        return lead
    tail = scale * _series_2f1(b, 1.0, b + 0.5, 1.0 / (1.0 - x), tol / abs(scale))
    return lead + tail


def schramm_prefactor(kappa: float) -> float:
    return math.gamma(4.0 / kappa) / (math.sqrt(math.pi) * math.gamma((8.0 - kappa) / (2.0 * kappa)))


def schramm_pass_right(theta: float, kappa: float) -> float:
    if not 0.0 < theta < math.pi:
        raise ValueError("theta must lie in (0, pi)")
    if not 0.0 < kappa < 8.0:
        raise ValueError("kappa must lie in (0, 8)")
    cot = math.cos(theta) / math.sin(theta)
    if cot == 0.0 or abs(theta - math.pi / 2) < 1e-300:
        return 0.5
    return 0.5 + schramm_prefactor(kappa) * cot * gauss_2f1_halfline(4.0 / kappa, -cot * cot)


def theta_grid(n: int = 199) -> np.ndarray:
    """n uniform angles strictly inside (0, pi)."""
    return np.pi * np.arange(1, n + 1) / (n + 1)


@dataclass(frozen=True)
class SchrammCurve:
    kappa: float
    theta: np.ndarray
    probability: np.ndarray


def schramm_curve(kappa: float, theta=None) -> SchrammCurve:
    theta = theta_grid() if theta is None else np.asarray(theta, dtype=float)
    p = np.array([schramm_pass_right(float(t), kappa) for t in theta])
    return SchrammCurve(kappa, theta, p)
