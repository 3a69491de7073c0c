"""Continuum domains in unit coordinates (y axis up).

Every shape is convex and exposes the same small surface: strict
membership, nearest-boundary projection, a counterclockwise boundary
arc-length parameter, horizontal chords and default anchor points.

Unit sizes (the simulation scales by ``L``):

* triangle   equilateral, side 1, base on y = 0, apex up
* square     side 1, ``[-1/2, 1/2] x [0, 1]``
* disc       diameter 1, centre ``(0, 1/2)``
* half_disc  radius 1, centre at the origin, diameter on y = 0

All defaults put ``z`` at the bottom and ``w`` at the top of the vertical
symmetry axis x = 0.
"""

from __future__ import annotations

import math

import numpy as np

SHAPES = ("triangle", "square", "disc", "half_disc")

SQRT3 = math.sqrt(3.0)


def _as_arrays(x, y):
    return np.asarray(x, dtype=float), np.asarray(y, dtype=float)


class Shape:
    name: str
    perimeter: float
    z: complex
    w: complex
    centroid: complex

    def contains(self, x, y):
        raise NotImplementedError

    def param(self, x, y):
        """Arc-length parameter (counterclockwise) of the nearest boundary point."""
        raise NotImplementedError

    def point_at(self, s):
        raise NotImplementedError

    def project(self, x, y):
        raise NotImplementedError

    def chord(self, y):
        """Left and right boundary abscissae of the horizontal line at height y."""
        raise NotImplementedError

    def on_ccw_arc(self, s, s_from, s_to):
        """True where ``s`` lies on the counterclockwise arc from s_from to s_to."""
        P = self.perimeter
        return np.mod(np.asarray(s) - s_from, P) < np.mod(s_to - s_from, P)

    def is_white(self, x, y, z=None, w=None):
        """Boundary colouring: the clockwise arc from z to w is white."""
        z = self.z if z is None else z
        w = self.w if w is None else w
        s_z = float(self.param(z.real, z.imag))
        s_w = float(self.param(w.real, w.imag))
        return self.on_ccw_arc(self.param(x, y), s_w, s_z)

    def distance_outside(self, x, y):
        """Euclidean distance to the domain (0 inside)."""
        x, y = _as_arrays(x, y)
        px, py = self.project(x, y)
        d = np.hypot(x - px, y - py)
        return np.where(self.contains(x, y), 0.0, d)

    @property
    def ymin(self):
        return self.chord_range()[0]

    @property
    def ymax(self):
        return self.chord_range()[1]

    def chord_range(self):
        raise NotImplementedError


class ConvexPolygon(Shape):
    def __init__(self, name, vertices, z, w, centroid):
        self.name = name
        self.vertices = np.asarray(vertices, dtype=float)
        self.z, self.w, self.centroid = complex(z), complex(w), complex(centroid)
        v = self.vertices
        self.edges = np.roll(v, -1, axis=0) - v
        self.lengths = np.hypot(self.edges[:, 0], self.edges[:, 1])
        self.offsets = np.concatenate([[0.0], np.cumsum(self.lengths)[:-1]])
        self.perimeter = float(self.lengths.sum())

    def contains(self, x, y):
        x, y = _as_arrays(x, y)
        inside = np.ones(np.broadcast(x, y).shape, dtype=bool)
        for (vx, vy), (ex, ey) in zip(self.vertices, self.edges):
            inside &= ex * (y - vy) - ey * (x - vx) > 0.0
        return inside

    def _nearest(self, x, y):
        x, y = _as_arrays(x, y)
        best = np.full(np.broadcast(x, y).shape, np.inf)
        bx = np.zeros_like(best)
        by = np.zeros_like(best)
        bs = np.zeros_like(best)
        for (vx, vy), (ex, ey), ln, off in zip(
            self.vertices, self.edges, self.lengths, self.offsets
        ):
            u = np.clip(((x - vx) * ex + (y - vy) * ey) / ln**2, 0.0, 1.0)
            px, py = vx + u * ex, vy + u * ey
            d = np.hypot(x - px, y - py)
            better = d < best
            best = np.where(better, d, best)
            bx = np.where(better, px, bx)
            by = np.where(better, py, by)
            bs = np.where(better, off + u * ln, bs)
        return bx, by, np.mod(bs, self.perimeter)

    def project(self, x, y):
        bx, by, _ = self._nearest(x, y)
        return bx, by

    def param(self, x, y):
        return self._nearest(x, y)[2]

    def point_at(self, s):
        s = np.mod(np.asarray(s, dtype=float), self.perimeter)
        k = np.searchsorted(self.offsets, s, side="right") - 1
        u = (s - self.offsets[k]) / self.lengths[k]
        return (
            self.vertices[k, 0] + u * self.edges[k, 0],
            self.vertices[k, 1] + u * self.edges[k, 1],
        )

    def chord_range(self):
        return float(self.vertices[:, 1].min()), float(self.vertices[:, 1].max())

    def chord(self, y):
        y = float(y)
        xs = []
        for (vx, vy), (ex, ey) in zip(self.vertices, self.edges):
            if ey == 0.0:
                continue
            u = (y - vy) / ey
            if 0.0 <= u <= 1.0:
                xs.append(vx + u * ex)
        if not xs:
            raise ValueError(f"height {y} misses the {self.name}")
        return min(xs), max(xs)


class Disc(Shape):
    name = "disc"

    def __init__(self):
        self.c = 0.5j
        self.R = 0.5
        self.perimeter = 2 * math.pi * self.R
        self.z, self.w, self.centroid = 0j, 1j, self.c

    def contains(self, x, y):
        x, y = _as_arrays(x, y)
        return np.hypot(x - self.c.real, y - self.c.imag) < self.R

    def _angle(self, x, y):
        x, y = _as_arrays(x, y)
        return np.mod(np.arctan2(y - self.c.imag, x - self.c.real), 2 * math.pi)

    def param(self, x, y):
        return self.R * self._angle(x, y)

    def point_at(self, s):
        a = np.asarray(s, dtype=float) / self.R
        return self.c.real + self.R * np.cos(a), self.c.imag + self.R * np.sin(a)

    def project(self, x, y):
        return self.point_at(self.param(x, y))

    def chord_range(self):
        return self.c.imag - self.R, self.c.imag + self.R

    def chord(self, y):
        h = (float(y) - self.c.imag) / self.R
        if abs(h) > 1.0:
            raise ValueError(f"height {y} misses the disc")
        half = self.R * math.sqrt(1.0 - h * h)
        return self.c.real - half, self.c.real + half


class HalfDisc(Shape):
    """Upper half of the unit disc.

    Boundary parameter: [0, 2) runs east along the diameter from (-1, 0),
    [2, 2 + pi) runs counterclockwise along the arc.
    """

    name = "half_disc"

    def __init__(self):
        self.perimeter = 2.0 + math.pi
        self.z, self.w = 0j, 1j
        self.centroid = complex(0.0, 4.0 / (3.0 * math.pi))

    def contains(self, x, y):
        x, y = _as_arrays(x, y)
        return (y > 0.0) & (x * x + y * y < 1.0)

    def _nearest(self, x, y):
        x, y = _as_arrays(x, y)
        # diameter candidate
        dx = np.clip(x, -1.0, 1.0)
        dd = np.hypot(x - dx, y)
        ds = dx + 1.0
        # arc candidate (radial projection, clamped to the upper half)
        a = np.arctan2(y, x)
        a = np.where(a < 0.0, np.where(x >= 0.0, 0.0, math.pi), a)
        ax, ay = np.cos(a), np.sin(a)
        ad = np.hypot(x - ax, y - ay)
        use_arc = ad < dd
        return (
            np.where(use_arc, ax, dx),
            np.where(use_arc, ay, 0.0),
            np.mod(np.where(use_arc, 2.0 + a, ds), self.perimeter),
        )

    def project(self, x, y):
        px, py, _ = self._nearest(x, y)
        return px, py

    def param(self, x, y):
        return self._nearest(x, y)[2]

    def point_at(self, s):
        s = np.mod(np.asarray(s, dtype=float), self.perimeter)
        on_diam = s < 2.0
        a = s - 2.0
        return np.where(on_diam, s - 1.0, np.cos(a)), np.where(on_diam, 0.0, np.sin(a))

    def chord_range(self):
        return 0.0, 1.0

    def chord(self, y):
        y = float(y)
        if not 0.0 <= y <= 1.0:
            raise ValueError(f"height {y} misses the half disc")
        half = math.sqrt(1.0 - y * y)
        return -half, half


def make_shape(name: str) -> Shape:
    if name == "triangle":
        h = SQRT3 / 2
        return ConvexPolygon(
            "triangle",
            [(-0.5, 0.0), (0.5, 0.0), (0.0, h)],
            z=0j,
            w=complex(0.0, h),
            centroid=complex(0.0, h / 3),
        )
    if name == "square":
        return ConvexPolygon(
            "square",
            [(-0.5, 0.0), (0.5, 0.0), (0.5, 1.0), (-0.5, 1.0)],
            z=0j,
            w=1j,
            centroid=0.5j,
        )
    if name == "disc":
        return Disc()
    if name == "half_disc":
        return HalfDisc()
    raise ValueError(f"unknown shape {name!r}; expected one of {SHAPES}")
