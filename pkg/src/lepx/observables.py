"""Conformal-invariance observables: averaged first-hit angle and pass-right.

Angles are reported divided by pi.  A probe is "right" when it lies on the
right-hand (black) side of the curve, so the pass-right function tends to 1
as theta -> 0 (probes next to the black arc, which maps to the positive
reals).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .conformal import MapDescriptor, MappedCurve, map_point
from .hexlattice import DiscreteDomain, hex_corner
from .kernels import BAND, averaged_first_hit_kernel
from .sleformula import theta_grid
from .stats import ratio_estimate

FIRSTHIT_INTERVALS = ((0.4, 0.6), (0.8, 1.2), (1.6, 2.4))
PASSRIGHT_INTERVALS = ((0.2, 0.4), (0.4, 0.6), (0.6, 0.8))
T_POINTS = 21


class ObservableError(ValueError):
    pass


class ProbeTooClose(ObservableError):
    pass


# --------------------------------------------------------------------------
# first hit


def _points(curve):
    return np.asarray(getattr(curve, "points", curve), dtype=complex)


def first_hit_angle(curve, r: float) -> float:
    """theta / pi of the first point of ``curve`` with modulus >= r."""
    z = _points(curve)
    hit = np.flatnonzero(np.abs(z) >= r)
    if hit.size == 0:
        raise ObservableError(f"curve never reaches modulus {r}")
    p = z[hit[0]]
    return math.atan2(max(p.imag, 0.0), p.real) / math.pi


def averaged_first_hit(curve, r_lo: float, r_hi: float) -> float:
    """Exact r-average of :func:`first_hit_angle` over [r_lo, r_hi]."""
    if not r_hi > r_lo > 0:
        raise ObservableError("need r_hi > r_lo > 0")
    z = _points(curve)
    mod = np.abs(z)
    ang = np.arctan2(np.maximum(z.imag, 0.0), z.real) / math.pi
    out = np.empty(1)
    ok = averaged_first_hit_kernel(
        np.arange(len(z), dtype=np.int64),
        np.arange(len(z), dtype=np.int64),
        len(z),
        mod,
        ang,
        np.array([r_lo]),
        np.array([r_hi]),
        out,
    )
    if not ok:
        raise ObservableError(f"curve never reaches modulus {r_hi}")
    return float(out[0])


def vertex_images(domain: DiscreteDomain, m: MapDescriptor):
    """|phi| and arg(phi)/pi at every vertex of a domain hexagon (flat index).

    Lattice vertices up to one spacing outside the continuum boundary are
    projected onto it.  Unused entries are NaN; an image at infinity gets
    modulus inf and angle 1/2.
    """
    t = domain.tables
    flats = set()
    for h in domain.hexes:
        for k in range(6):
            flats.add(domain.vertex_to_flat(hex_corner(h, k)))
    idx = np.array(sorted(flats), dtype=np.int64)
    ux, uy = domain.to_unit(t.vx[idx], t.vy[idx])
    z = map_point(m, ux + 1j * uy, tol=1.5 / domain.spec.L)
    vmod = np.full(len(t.vx), np.nan)
    vang = np.full(len(t.vx), np.nan)
    finite = np.isfinite(z)
    vmod[idx] = np.where(finite, np.abs(z), np.inf)
    ang = np.arctan2(np.maximum(z.imag, 0.0), z.real) / math.pi
    vang[idx] = np.where(finite, ang, 0.5)
    return vmod, vang


def mapped_path(domain: DiscreteDomain, m: MapDescriptor, flat) -> MappedCurve:
    t = domain.tables
    ux, uy = domain.to_unit(t.vx[flat], t.vy[flat])
    return MappedCurve(map_point(m, ux + 1j * uy, tol=1.5 / domain.spec.L))


# --------------------------------------------------------------------------
# side of a point


def black_closure(domain: DiscreteDomain, n: int = 2000) -> np.ndarray:
    """Polyline (lattice coordinates) from w_delta back to z_delta running
    outside the domain along the black arc.

    The continuum boundary is pushed outward by four lattice spacings along
    the ray from the centroid, which clears every domain vertex.
    """
    spec = domain.spec
    geom = spec.geometry
    L = spec.L
    s_z = float(geom.param(spec.anchor_z.real, spec.anchor_z.imag))
    s_w = float(geom.param(spec.anchor_w.real, spec.anchor_w.imag))
    P = geom.perimeter
    # black = counterclockwise z -> w; walk it backwards from w to z
    length = (s_w - s_z) % P
    back = np.linspace(0.0, length, n)
    # keep polygon corners on the arc exactly
    corners = np.asarray(getattr(geom, "offsets", []), dtype=float)
    back = np.union1d(back, (s_w - corners) % P)
    back = back[back <= length]
    bx, by = geom.point_at((s_w - back) % P)
    pts = np.asarray(bx) + 1j * np.asarray(by)
    c = geom.centroid
    d = pts - c
    pts = pts + (4.0 / L) * d / np.abs(d)
    lx, ly = domain.to_lattice(pts.real, pts.imag)
    t = domain.tables
    w = domain.vertex_to_flat(domain.end_vertex)
    z = domain.vertex_to_flat(domain.start_vertex)
    head = np.array([t.vx[w] + 1j * t.vy[w]])
    tail = np.array([t.vx[z] + 1j * t.vy[z]])
    return np.concatenate([head, lx + 1j * ly, tail])


def closed_loop(domain: DiscreteDomain, path_xy) -> np.ndarray:
    p = np.asarray(path_xy)
    if p.ndim == 2:
        p = p[:, 0] + 1j * p[:, 1]
    return np.concatenate([p, black_closure(domain)[1:-1]])


def _min_distance(path, q) -> float:
    a = path[:-1]
    b = path[1:]
    d = b - a
    u = np.clip(((q - a) * np.conj(d)).real / np.maximum(np.abs(d) ** 2, 1e-300), 0.0, 1.0)
    return float(np.min(np.abs(a + u * d - q)))


def winding_number(loop, q) -> int:
    z = np.asarray(loop) - q
    z2 = np.roll(z, -1)
    ang = np.angle(z2 / z)
    return int(round(ang.sum() / (2 * math.pi)))


def side_of_point(domain: DiscreteDomain, path_xy, q) -> str:
    """'right' or 'left' of probe ``q`` (lattice coordinates, complex)."""
    p = np.asarray(path_xy)
    if p.ndim == 2:
        p = p[:, 0] + 1j * p[:, 1]
    if _min_distance(p, q) < BAND:
        raise ProbeTooClose(f"probe {q} is within {BAND} of the path")
    return "right" if winding_number(closed_loop(domain, p), q) != 0 else "left"


def side_by_ray_casting(loop, q) -> str:
    """Even-odd rule with a ray towards +x (an independent check)."""
    z = np.asarray(loop)
    a = z
    b = np.roll(z, -1)
    crosses = (a.imag > q.imag) != (b.imag > q.imag)
    with np.errstate(divide="ignore", invalid="ignore"):
        x = a.real + (q.imag - a.imag) * (b.real - a.real) / (b.imag - a.imag)
    n = int(np.count_nonzero(crosses & (x > q.real)))
    return "right" if n % 2 else "left"


# --------------------------------------------------------------------------
# probes


@dataclass(frozen=True)
class SegmentProbe:
    t: float
    y: float  # unit height
    x: np.ndarray  # unit abscissae per theta (NaN when absent)
    theta: np.ndarray

    @property
    def points(self) -> np.ndarray:
        return self.x + 1j * self.y


def segment_height(m: MapDescriptor, t: float) -> float:
    z, w = m.spec.anchor_z, m.spec.anchor_w
    return z.imag + t * (w.imag - z.imag)


def _angles(m, x, y):
    z = map_point(m, x + 1j * y)
    return np.arctan2(np.maximum(z.imag, 0.0), z.real)


def build_probes_many(m: MapDescriptor, ts, theta) -> list[SegmentProbe]:
    """Probes on several horizontal segments at once (batched bisection)."""
    theta = np.asarray(theta, dtype=float)
    geom = m.spec.geometry
    ys = np.array([segment_height(m, t) for t in ts])
    chords = [geom.chord(y) for y in ys]
    xl = np.array([float(c[0]) for c in chords])
    xr = np.array([float(c[1]) for c in chords])
    # monotonicity along each segment
    s = np.linspace(0.0, 1.0, 202)[1:-1]
    X = xl[:, None] + s[None, :] * (xr - xl)[:, None]
    A = _angles(m, X.ravel(), np.repeat(ys, len(s))).reshape(X.shape)
    dA = np.diff(A, axis=1)
    direction = np.sign(dA[:, 0])
    if not np.all(dA * direction[:, None] > 0):
        raise ObservableError("polar angle is not monotone along a probe segment")
    a_lo = _angles(m, xl, ys)
    a_hi = _angles(m, xr, ys)
    nl, nt = len(ys), len(theta)
    lo = np.repeat(xl[:, None], nt, axis=1)
    hi = np.repeat(xr[:, None], nt, axis=1)
    yy = np.repeat(ys[:, None], nt, axis=1)
    target = np.broadcast_to(theta, (nl, nt))
    amin = np.minimum(a_lo, a_hi)[:, None]
    amax = np.maximum(a_lo, a_hi)[:, None]
    present = (target > amin) & (target < amax)
    dec = (direction < 0)[:, None]
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        if np.all((hi - lo) <= 4e-16 * np.maximum(np.abs(mid), 1.0)):
            break
        a = _angles(m, mid.ravel(), yy.ravel()).reshape(mid.shape)
        # move towards the requested angle
        go_right = np.where(dec, a > target, a < target)
        lo = np.where(go_right, mid, lo)
        hi = np.where(go_right, hi, mid)
    x = np.where(present, 0.5 * (lo + hi), np.nan)
    return [SegmentProbe(float(t), float(y), x[i], theta.copy()) for i, (t, y) in enumerate(zip(ts, ys))]


def build_probes(m: MapDescriptor, t: float, theta=None) -> SegmentProbe:
    theta = theta_grid() if theta is None else theta
    if not 0.0 < t < 1.0:
        raise ObservableError("t must lie in (0, 1)")
    return build_probes_many(m, [t], theta)[0]


def t_grid(interval, n: int = T_POINTS) -> np.ndarray:
    return np.linspace(interval[0], interval[1], n)


@dataclass(frozen=True)
class ProbeSet:
    """Probe lines of several t-intervals in the layout the kernel wants.

    Lines are sorted by lattice height; ``probe_x[line]`` is sorted
    ascending and ``probe_theta[line]`` holds the theta index of each probe.
    """

    intervals: tuple
    theta: np.ndarray
    line_y: np.ndarray
    line_order: np.ndarray
    line_int: np.ndarray
    probe_x: np.ndarray
    probe_theta: np.ndarray
    probe_count: np.ndarray
    closure: np.ndarray

    @property
    def n_lines(self) -> int:
        return len(self.line_y)


def build_probe_set(domain: DiscreteDomain, m: MapDescriptor, intervals=PASSRIGHT_INTERVALS, theta=None, n_t: int = T_POINTS) -> ProbeSet:
    theta = theta_grid() if theta is None else np.asarray(theta, dtype=float)
    ts, owners = [], []
    for i, iv in enumerate(intervals):
        for t in t_grid(iv, n_t):
            ts.append(float(t))
            owners.append(i)
    probes = build_probes_many(m, ts, theta)
    geom = m.spec.geometry
    nl = len(probes)
    nt = len(theta)
    line_y = np.empty(nl)
    probe_x = np.zeros((nl, nt))
    probe_theta = np.zeros((nl, nt), dtype=np.int64)
    probe_count = np.zeros(nl, dtype=np.int64)
    closure = np.zeros(nl, dtype=np.int64)
    for ell, pr in enumerate(probes):
        ok = np.flatnonzero(np.isfinite(pr.x))
        lx, ly = domain.to_lattice(pr.x[ok], np.full(len(ok), pr.y))
        order = np.argsort(lx, kind="stable")
        probe_x[ell, : len(ok)] = lx[order]
        probe_theta[ell, : len(ok)] = ok[order]
        probe_count[ell] = len(ok)
        line_y[ell] = float(domain.to_lattice(0.0, pr.y)[1])
        x_left = float(geom.chord(pr.y)[0])
        closure[ell] = 0 if bool(geom.is_white(x_left, pr.y, m.spec.anchor_z, m.spec.anchor_w)) else 1
    order = np.argsort(line_y, kind="stable")
    return ProbeSet(
        tuple(intervals),
        theta,
        line_y[order],
        order.astype(np.int64),
        np.array(owners, dtype=np.int64),
        probe_x,
        probe_theta,
        probe_count,
        closure,
    )


@dataclass(frozen=True)
class PassRightEstimate:
    theta: np.ndarray
    estimate: np.ndarray
    stderr: np.ndarray
    n_effective: np.ndarray  # valid probe evaluations per theta
    discard_rate: np.ndarray


def pass_right_function(acc, n_samples: int, theta, n_t: int = T_POINTS) -> list[PassRightEstimate]:
    """Per-interval estimates from the integer accumulator of the kernel.

    ``acc[i, theta, :]`` holds sums of (k, v, k^2, v^2, k v) over samples,
    where k and v count right indicators and valid probes of one sample.
    """
    out = []
    acc = np.asarray(acc)
    for i in range(acc.shape[0]):
        sk, sv, skk, svv, skv = (acc[i, :, j] for j in range(5))
        p, se = ratio_estimate(sk, sv, skk, svv, skv, n_samples)
        disc = 1.0 - sv / (n_samples * n_t)
        out.append(PassRightEstimate(np.asarray(theta), p, se, sv.astype(np.int64), disc))
    return out
