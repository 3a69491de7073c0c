"""Conformal maps from the four unit domains onto the upper half plane.

Each shape has a fixed base map ``g`` onto H.  A real Mobius map then sends
``g(z)`` to 0 and ``g(w)`` to infinity, and a positive factor pins
``|phi(marker)| = 1``:

* disc       Cayley transform
* half_disc  ``2p / (1 + p^2)`` (square of a Mobius map onto the quadrant)
* square     inverse of the Schwarz map ``int dt / sqrt(1 + t^4)`` onto the
             unit disc, written with the Jacobi ``cn`` of modulus k^2 = 1/2,
             followed by a Cayley transform
* triangle   inverse of the Schwarz-Christoffel map
             ``s -> C int_0^s (1 - t^2)^(-2/3) dt`` (corners at s = -1, 1, inf),
             evaluated from convergent series and inverted by Newton's method

Points are unit-domain complex numbers.  Orientation: the white arc
(clockwise from z to w) maps to the negative real axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, special
from scipy.spatial import cKDTree

from .hexlattice import DomainSpec

BOUNDARY_TOL = 1e-12


class MapError(ValueError):
    pass


# --------------------------------------------------------------------------
# square: Schwarz's square <-> disc map


def lemniscatic_parameter() -> float:
    """Parameter m = k^2 whose periods satisfy K'(k) / K(k) = 1."""
    return optimize.brentq(
        lambda m: special.ellipk(1.0 - m) - special.ellipk(m), 0.1, 0.9, xtol=1e-15, rtol=1e-15
    )


def jacobi_sncndn(u, m):
    """sn, cn, dn at complex u from the real-argument functions (addition
    formulas with the imaginary part taken at the complementary parameter)."""
    u = np.asarray(u, dtype=complex)
    s, c, d, _ = special.ellipj(u.real, m)
    s1, c1, d1, _ = special.ellipj(u.imag, 1.0 - m)
    den = c1 * c1 + m * s * s * s1 * s1
    sn = (s * d1 + 1j * c * d * s1 * c1) / den
    cn = (c * c1 - 1j * s * d * s1 * d1) / den
    dn = (d * c1 * d1 - 1j * m * s * c * s1) / den
    return sn, cn, dn


def jacobi_cn(u, m):
    """cn(u | m) for complex u."""
    return jacobi_sncndn(u, m)[1]


class SquareBase:
    """Square of side 1 centred at i/2 -> unit disc -> H.

    With K = K(1/sqrt 2), ``u = K (p - i/2)`` lies in the square of
    half-side K/2 and the disc point ``t`` solves
    ``cn(2u) = (1 - t^2) / (1 + t^2)``.  The half-argument form
    ``t = sn(u) dn(u) / cn(u)`` avoids the cancellation in ``1 - cn(2u)``
    near the centre and picks the branch with ``t ~ u``.
    """

    def __init__(self):
        self.m = lemniscatic_parameter()
        self.K = float(special.ellipk(self.m))
        self.pole = 1j

    def to_disc(self, p):
        u = self.K * (np.asarray(p, dtype=complex) - 0.5j)
        sn, cn, dn = jacobi_sncndn(u, self.m)
        return sn * dn / cn

    def __call__(self, p):
        t = self.to_disc(p)
        with np.errstate(divide="ignore", invalid="ignore"):
            return 1j * (1.0 - 1j * t) / (1.0 + 1j * t)


class DiscBase:
    """Disc of diameter 1 centred at i/2; bottom -> 0, top -> infinity."""

    pole = 1j

    def __call__(self, p):
        zeta = (np.asarray(p, dtype=complex) - 0.5j) / 0.5
        with np.errstate(divide="ignore", invalid="ignore"):
            return 1j * (1.0 - 1j * zeta) / (1.0 + 1j * zeta)

    def inverse(self, s):
        s = np.asarray(s, dtype=complex)
        zeta = 1j * (s - 1j) / (s + 1j)
        return 0.5j + 0.5 * zeta


class HalfDiscBase:
    """Upper half of the unit disc; 0 -> 0, i -> infinity."""

    pole = 1j

    def __call__(self, p):
        p = np.asarray(p, dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            return 2.0 * p / (1.0 + p * p)

    def inverse(self, s):
        s = np.asarray(s, dtype=complex)
        m = np.sqrt((1.0 + s) / (1.0 - s))  # first quadrant for s in H
        m = np.where(m.real < 0, -m, m)
        return (m - 1.0) / (m + 1.0)


# --------------------------------------------------------------------------
# triangle: Schwarz-Christoffel with three angles pi/3


def _pochhammer_ratio_terms(a, n):
    """(a)_k / k! for k < n."""
    out = np.empty(n)
    out[0] = 1.0
    for k in range(1, n):
        out[k] = out[k - 1] * (a + k - 1) / k
    return out


def _cbrt_lower(e):
    """Cube root continuous on the closed lower half plane (arg in [-pi, 0])."""
    return np.conj(np.conj(e) ** (1.0 / 3.0))


class TriangleBase:
    """Equilateral triangle with base [-1/2, 1/2] and apex i sqrt(3)/2.

    Forward map ``f: H -> triangle`` with ``f(0) = 0``, ``f(+-1) = +-1/2``,
    ``f(inf) = apex``; the base map is its inverse.  ``f`` is summed from
    three expansions: about 0 (|s| <= 0.8), about the base corners
    (|s -+ 1| <= 1.6) and about infinity (|s| >= 1.25).
    """

    N_TERMS = 220

    def __init__(self):
        self.C = 1.0 / special.beta(0.5, 1.0 / 3.0)
        self.apex = 1j * math.sqrt(3.0) / 2.0
        self.pole = self.apex
        n = np.arange(self.N_TERMS)
        a = np.empty(self.N_TERMS)
        a[0] = 1.0
        for k in range(1, self.N_TERMS):
            a[k] = a[k - 1] * (0.5 + k - 1) * (2.0 / 3.0 + k - 1) / ((1.5 + k - 1) * k)
        self._a0 = a
        c = _pochhammer_ratio_terms(2.0 / 3.0, self.N_TERMS)
        self._b = c * 2.0 ** (-n) / (n + 1.0 / 3.0)
        self._cinf = c / (2.0 * n + 1.0 / 3.0)
        self._seed_tree = None

    # forward map --------------------------------------------------------
    def _series_zero(self, s):
        x = s * s
        acc = np.zeros_like(s)
        for coef in self._a0[::-1]:
            acc = acc * x + coef
        return self.C * s * acc

    def _series_corner(self, s):
        e = 1.0 - s
        acc = np.zeros_like(s)
        for coef in self._b[::-1]:
            acc = acc * e + coef
        return 0.5 - self.C * 2.0 ** (-2.0 / 3.0) * _cbrt_lower(e) * acc

    def _series_infinity(self, s):
        x = 1.0 / (s * s)
        acc = np.zeros_like(s)
        for coef in self._cinf[::-1]:
            acc = acc * x + coef
        rot = np.exp(2j * math.pi / 3.0)
        return self.apex - self.C * rot * s ** (-1.0 / 3.0) * acc

    def forward(self, s):
        s = np.atleast_1d(np.asarray(s, dtype=complex))
        out = np.empty_like(s)
        r = np.abs(s)
        a = r <= 0.8
        c = (r >= 1.25) & ~a
        b = ~(a | c)
        if a.any():
            out[a] = self._series_zero(s[a])
        if c.any():
            out[c] = self._series_infinity(s[c])
        bp = b & (s.real >= 0.0)
        bm = b & (s.real < 0.0)
        if bp.any():
            out[bp] = self._series_corner(s[bp])
        if bm.any():
            out[bm] = -np.conj(self._series_corner(-np.conj(s[bm])))
        return out

    def derivative(self, s):
        s = np.asarray(s, dtype=complex)
        return self.C * _cbrt_lower(1.0 - s) ** -2 * (1.0 + s) ** (-2.0 / 3.0)

    # inverse ------------------------------------------------------------
    def _seeds(self):
        if self._seed_tree is None:
            rho = np.logspace(-5, 9, 700)
            alpha = np.linspace(0.0, math.pi, 181)
            R, A = np.meshgrid(rho, alpha)
            pts = (R * np.exp(1j * A)).ravel()
            eps = np.logspace(-12, -0.2, 300)
            beta = np.linspace(0.0, math.pi, 91)
            E, B = np.meshgrid(eps, beta)
            near = (E * np.exp(1j * B)).ravel()
            pts = np.concatenate([pts, 1.0 + near, -1.0 + near])
            vals = self.forward(pts)
            self._seed_pts = pts
            self._seed_tree = cKDTree(np.column_stack([vals.real, vals.imag]))
        return self._seed_tree

    def inverse(self, p, tol=1e-15, max_iter=60):
        p = np.atleast_1d(np.asarray(p, dtype=complex))
        tree = self._seeds()
        _, idx = tree.query(np.column_stack([p.real, p.imag]))
        s = self._seed_pts[idx].copy()
        res = self.forward(s) - p
        scale = 1.0
        active = np.abs(res) > tol * scale
        for _ in range(max_iter):
            if not active.any():
                break
            sa = s[active]
            ra = res[active]
            step = ra / self.derivative(sa)
            t = np.ones(sa.shape)
            best_s = sa.copy()
            best_r = np.abs(ra)
            pending = np.ones(sa.shape, dtype=bool)
            for _ in range(40):
                trial = sa - t * step
                trial = trial.real + 1j * np.abs(trial.imag)
                rt = self.forward(trial) - p[active]
                ok = pending & (np.abs(rt) < best_r)
                best_s = np.where(ok, trial, best_s)
                best_r = np.where(ok, np.abs(rt), best_r)
                pending &= ~ok
                if not pending.any():
                    break
                t = np.where(pending, t * 0.5, t)
            stalled = pending
            s[active] = best_s
            res[active] = self.forward(best_s) - p[active]
            new_active = np.abs(res) > tol * scale
            idx_active = np.flatnonzero(active)
            new_active[idx_active[stalled]] = False
            active = new_active
        return s

    def __call__(self, p):
        p = np.asarray(p, dtype=complex)
        shape = p.shape
        flat = p.ravel()
        out = np.empty(flat.shape, dtype=complex)
        at_pole = np.abs(flat - self.apex) < 1e-300
        out[at_pole] = np.inf
        if (~at_pole).any():
            out[~at_pole] = self.inverse(flat[~at_pole])
        return out.reshape(shape)


_BASES = {
    "disc": DiscBase,
    "half_disc": HalfDiscBase,
    "square": SquareBase,
    "triangle": TriangleBase,
}
_BASE_CACHE: dict = {}


def base_map(shape: str):
    if shape not in _BASE_CACHE:
        _BASE_CACHE[shape] = _BASES[shape]()
    return _BASE_CACHE[shape]


# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MapDescriptor:
    """phi(p) = lam * sign * (g(p) - a) / (g(p) - b), or lam * (g(p) - a)
    when g(w) is infinite."""

    spec: DomainSpec
    a: float
    b: float  # inf when the base map already sends w to infinity
    sign: float
    lam: float
    params: dict = field(default_factory=dict)

    @property
    def normalization(self) -> float:
        return self.lam

    def rescaled(self, factor: float) -> "MapDescriptor":
        return MapDescriptor(self.spec, self.a, self.b, self.sign, self.lam * factor, self.params)


def _mobius(s, a, b, sign):
    s = np.asarray(s, dtype=complex)
    if math.isinf(b):
        return s - a
    with np.errstate(divide="ignore", invalid="ignore"):
        return sign * (s - a) / (s - b)


def _base_value(g, p: complex) -> complex:
    if abs(p - g.pole) < 1e-12:
        return complex(math.inf, 0.0)
    return complex(np.asarray(g(np.array([p])))[0])


def build_map(spec: DomainSpec) -> MapDescriptor:
    g = base_map(spec.shape)
    ga = _base_value(g, spec.anchor_z)
    gb = _base_value(g, spec.anchor_w)
    if math.isinf(ga.real):
        raise MapError("z must not be the pole of the base map")
    if abs(ga.imag) > 1e-9 or (not math.isinf(gb.real) and abs(gb.imag) > 1e-9):
        raise MapError("anchors did not map to the real axis")
    a = ga.real
    b = gb.real
    sign = 1.0 if math.isinf(b) else math.copysign(1.0, a - b)
    raw = complex(_mobius(g(np.array([spec.marker_point])), a, b, sign)[0])
    if not raw.imag > 0:
        raise MapError("marker did not map into the upper half plane")
    params = {}
    if spec.shape == "square":
        params = {"m": g.m, "K": g.K}
    elif spec.shape == "triangle":
        params = {"C": g.C}
    return MapDescriptor(spec, a, b, sign, 1.0 / abs(raw), params)


def map_point(m: MapDescriptor, p, tol: float = 1e-9) -> np.ndarray:
    """phi at unit-domain points ``p`` (complex, any shape).

    Points outside the domain by at most ``tol`` are first projected onto
    the boundary; farther points raise :class:`MapError`.
    """
    geom = m.spec.geometry
    p = np.asarray(p, dtype=complex)
    x, y = p.real, p.imag
    inside = geom.contains(x, y)
    if not inside.all():
        px, py = geom.project(x, y)
        dist = np.hypot(x - px, y - py)
        outside = ~inside & (dist > BOUNDARY_TOL)
        if np.any(outside & (dist > tol)):
            raise MapError(f"point outside the {m.spec.shape} by more than {tol}")
        p = np.where(outside, px + 1j * py, p)
    g = base_map(m.spec.shape)
    s = g(p)
    with np.errstate(invalid="ignore"):
        phi = m.lam * _mobius(s, m.a, m.b, m.sign)
    at_w = np.abs(p - m.spec.anchor_w) < 1e-13
    return np.where(at_w, complex(math.inf, math.inf), phi)


def polar(zval) -> tuple[float, float]:
    """(modulus, angle in (0, pi)) of a point of the open upper half plane."""
    zval = complex(zval)
    if not zval.imag > 0:
        raise ValueError(f"{zval} is not in the open upper half plane")
    return abs(zval), math.atan2(zval.imag, zval.real)


def polar_array(zvals):
    """Vectorised polar form; boundary images get angle 0 or pi."""
    zvals = np.asarray(zvals, dtype=complex)
    ang = np.arctan2(np.maximum(zvals.imag, 0.0), zvals.real)
    return np.abs(zvals), ang


@dataclass(frozen=True)
class MappedCurve:
    points: np.ndarray  # complex images


def map_curve(m: MapDescriptor, path_xy, L: float, offset=(0.0, 0.0)) -> MappedCurve:
    """Images of lattice-coordinate vertices (N x 2 array).

    Lattice vertices can sit up to one lattice spacing outside the
    continuum boundary; they are projected onto it.
    """
    xy = np.asarray(path_xy, dtype=float)
    p = ((xy[:, 0] - offset[0]) + 1j * (xy[:, 1] - offset[1])) / L
    return MappedCurve(map_point(m, p, tol=1.5 / L))
