"""Fit ln N(L) = ln c + (1/nu) ln L + a L^(-Delta) with a search over Delta."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

BRACKET = (0.05, 2.0)
COARSE = 40
TOL = 1e-4
GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class FitError(ValueError):
    pass


@dataclass(frozen=True)
class LengthObservation:
    L: float
    mean_steps: float
    stderr: float

    def __post_init__(self):
        if not (self.L > 0 and self.mean_steps > 0 and self.stderr > 0):
            raise ValueError(f"invalid observation {self}")


@dataclass(frozen=True)
class LinearFit:
    ln_c: float
    inv_nu: float
    a: float
    cov: np.ndarray
    rss: float


@dataclass(frozen=True)
class FitResult:
    ln_c: float
    inv_nu: float
    a: float
    corr_exp: float
    ln_c_err: float
    inv_nu_err: float
    a_err: float
    rss: float
    at_edge: bool = False

    def to_dict(self) -> dict:
        return asdict(self)


def _arrays(obs):
    obs = list(obs)
    if len(obs) < 4:
        raise FitError(f"need at least 4 observations, got {len(obs)}")
    L = np.array([o.L for o in obs], dtype=float)
    if len(np.unique(L)) < 4:
        raise FitError("need at least 4 distinct L values")
    N = np.array([o.mean_steps for o in obs], dtype=float)
    se = np.array([o.stderr for o in obs], dtype=float)
    return L, np.log(N), (N / se) ** 2


def fit_linear_given_exp(obs, corr_exp: float) -> LinearFit:
    """Weighted least squares on {1, ln L, L^-Delta}, weights (N / stderr)^2."""
    L, y, w = _arrays(obs)
    X = np.column_stack([np.ones_like(L), np.log(L), L ** (-corr_exp)])
    sw = np.sqrt(w)
    Xw = X * sw[:, None]
    yw = y * sw
    if np.linalg.matrix_rank(Xw, tol=1e-12 * np.abs(Xw).max()) < 3:
        raise FitError(f"singular design at Delta = {corr_exp}")
    # QR is better conditioned than the normal equations; the covariance is
    # the inverse normal matrix (R^T R)^-1.
    Q, R = np.linalg.qr(Xw)
    beta = np.linalg.solve(R, Q.T @ yw)
    Rinv = np.linalg.inv(R)
    cov = Rinv @ Rinv.T
    resid = yw - Xw @ beta
    return LinearFit(float(beta[0]), float(beta[1]), float(beta[2]), cov, float(resid @ resid))


def _rss(obs, d):
    try:
        return fit_linear_given_exp(obs, d).rss
    except FitError:
        return math.inf


def golden_section(f, lo: float, hi: float, tol: float = TOL):
    """Minimise a unimodal f on [lo, hi]."""
    a, b = lo, hi
    c = b - GOLDEN * (b - a)
    d = a + GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + GOLDEN * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def fit_with_exponent_search(obs, bracket=BRACKET, n_coarse: int = COARSE, tol: float = TOL) -> FitResult:
    obs = list(obs)
    lo, hi = bracket
    scan = np.linspace(lo, hi, n_coarse)
    rss = np.array([_rss(obs, d) for d in scan])
    if not np.isfinite(rss).any():
        raise FitError("no admissible Delta in the bracket")
    i = int(np.argmin(rss))
    # refine around the global coarse minimum (covers multimodal scans too)
    a = scan[max(i - 1, 0)]
    b = scan[min(i + 1, n_coarse - 1)]
    d, r = golden_section(lambda x: _rss(obs, x), a, b, tol)
    if rss[i] < r:
        d, r = float(scan[i]), float(rss[i])
    fit = fit_linear_given_exp(obs, d)
    err = np.sqrt(np.diag(fit.cov))
    at_edge = bool(d - lo < 2 * tol or hi - d < 2 * tol)
    return FitResult(fit.ln_c, fit.inv_nu, fit.a, float(d), *map(float, err), fit.rss, at_edge)


def coarse_is_unimodal(obs, bracket=BRACKET, n_coarse: int = COARSE) -> bool:
    scan = np.linspace(*bracket, n_coarse)
    r = np.array([_rss(obs, d) for d in scan])
    dr = np.sign(np.diff(r))
    dr = dr[dr != 0]
    return int(np.count_nonzero(np.diff(dr) != 0)) <= 1


def diagnostic_table(obs, fit: FitResult):
    """Rows (L, ln N - 4/3 ln L, fitted value of the same quantity)."""
    rows = []
    for o in obs:
        lnL = math.log(o.L)
        model = fit.ln_c + fit.inv_nu * lnL + fit.a * o.L ** (-fit.corr_exp)
        rows.append((o.L, math.log(o.mean_steps) - 4.0 / 3.0 * lnL, model - 4.0 / 3.0 * lnL))
    return rows


def synthetic_observations(L, ln_c, inv_nu, a, corr_exp, rel_noise=0.0, rng=None):
    """Observations drawn from the ansatz, with optional multiplicative noise."""
    L = np.asarray(L, dtype=float)
    N = np.exp(ln_c + inv_nu * np.log(L) + a * L ** (-corr_exp))
    if rel_noise > 0:
        rng = np.random.default_rng(rng)
        Nobs = N * (1.0 + rel_noise * rng.standard_normal(L.shape))
        se = rel_noise * N
    else:
        Nobs = N
        se = 1e-3 * N
    return [LengthObservation(float(l), float(n), float(s)) for l, n, s in zip(L, Nobs, se)]
