"""Honeycomb geometry and discretisation of the continuum domains.

Hexagons are pointy-top with edge length 1, which is also the nearest
neighbour distance between honeycomb vertices (the lattice spacing).
Axial coordinates ``(q, r)`` put the centre of hexagon ``(q, r)`` at
``(sqrt(3) * (q + r / 2), 1.5 * r)``.

Every honeycomb vertex is the top corner of exactly one hexagon or the
bottom corner of exactly one hexagon, so ``VertexId(hex, corner)`` with
``corner`` in {TOP, BOTTOM} is a canonical address.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .shapes import SHAPES, make_shape

log = logging.getLogger(__name__)

SQRT3 = math.sqrt(3.0)
TOP, BOTTOM = 0, 1

EXTERIOR, WHITE, BLACK, INTERIOR = 0, 1, 2, 3

HEX_DIRECTIONS = ((1, 0), (1, -1), (0, -1), (-1, 0), (-1, 1), (0, 1))

# neighbour slot k of a TOP vertex / BOTTOM vertex: (dq, dr) of the owning hex
_NEIGHBOR_OFFSETS = {
    TOP: ((-1, 2), (-1, 1), (0, 1)),
    BOTTOM: ((1, -2), (1, -1), (0, -1)),
}
# hexagons touching a TOP / BOTTOM vertex, relative to its owning hex
_VERTEX_HEXES = {
    TOP: ((0, 0), (-1, 1), (0, 1)),
    BOTTOM: ((0, 0), (0, -1), (1, -1)),
}


class HexCoord(NamedTuple):
    q: int
    r: int


class VertexId(NamedTuple):
    hex: HexCoord
    corner: int


def hex_center(c) -> tuple[float, float]:
    q, r = c
    return SQRT3 * (q + 0.5 * r), 1.5 * r


def hex_neighbors(c) -> list[HexCoord]:
    q, r = c
    return [HexCoord(q + dq, r + dr) for dq, dr in HEX_DIRECTIONS]


def vertex_position(v: VertexId) -> tuple[float, float]:
    x, y = hex_center(v.hex)
    return x, y + (1.0 if v.corner == TOP else -1.0)


def vertex_neighbors(v: VertexId) -> list[VertexId]:
    q, r = v.hex
    other = BOTTOM if v.corner == TOP else TOP
    return [
        VertexId(HexCoord(q + dq, r + dr), other)
        for dq, dr in _NEIGHBOR_OFFSETS[v.corner]
    ]


def vertex_hexes(v: VertexId) -> list[HexCoord]:
    q, r = v.hex
    return [HexCoord(q + dq, r + dr) for dq, dr in _VERTEX_HEXES[v.corner]]


def hex_corner(c, k: int) -> VertexId:
    """Canonical id of corner ``k`` of hexagon ``c``.

    Corners are numbered counterclockwise from the top: 0 top, 1 upper
    left, 2 lower left, 3 bottom, 4 lower right, 5 upper right.
    """
    q, r = c
    table = (
        (q, r, TOP),
        (q - 1, r + 1, BOTTOM),
        (q, r - 1, TOP),
        (q, r, BOTTOM),
        (q + 1, r - 1, TOP),
        (q, r + 1, BOTTOM),
    )
    qq, rr, corner = table[k % 6]
    return VertexId(HexCoord(qq, rr), corner)


def _slot_tables():
    """Turning tables shared by the boundary tracer and the sampler.

    For a vertex of class ``c`` reached along neighbour slot ``k`` (slots are
    symmetric: the edge is slot ``k`` at both ends):

    ``ahead[c, k]``   hex offset (dq, dr) of the hexagon not touching the edge
    ``turn[c, k, s]`` outgoing slot keeping the left/right colours; ``s`` is 0
                      when the hexagon ahead has the left colour, 1 otherwise
    """
    ahead = np.zeros((2, 3, 2), dtype=np.int64)
    turn = np.zeros((2, 3, 2), dtype=np.int64)
    for c in (TOP, BOTTOM):
        v = VertexId(HexCoord(0, 0), c)
        vx, vy = vertex_position(v)
        hexes = vertex_hexes(v)
        nbrs = vertex_neighbors(v)
        for k, u in enumerate(nbrs):
            ux, uy = vertex_position(u)
            shared = [h for h in hexes if h in vertex_hexes(u)]
            assert len(shared) == 2
            (a_hex,) = [h for h in hexes if h not in shared]
            ahead[c, k] = a_hex

            def cross(h):
                hx, hy = hex_center(h)
                return (vx - ux) * (hy - uy) - (vy - uy) * (hx - ux)

            left = max(shared, key=cross)
            right = min(shared, key=cross)
            for s, partner in ((0, right), (1, left)):
                for kk, nb in enumerate(nbrs):
                    if kk == k:
                        continue
                    border = set(hexes) & set(vertex_hexes(nb))
                    if border == {a_hex, partner}:
                        turn[c, k, s] = kk
    return ahead, turn


AHEAD_OFFSETS, TURN_TABLE = _slot_tables()


@dataclass(frozen=True)
class DomainSpec:
    """A continuum domain scaled by ``L``.

    ``z``, ``w`` and ``marker`` are unit-domain points (complex numbers);
    ``None`` selects the shape default.  ``offset`` is the lattice position
    of the unit-domain origin; ``None`` lets :func:`build_domain` choose a
    mirror-symmetric placement for the symmetric default anchors.
    """

    shape: str
    L: float
    z: complex | None = None
    w: complex | None = None
    marker: complex | None = None
    offset: tuple[float, float] | None = None

    def __post_init__(self):
        if self.shape not in SHAPES:
            raise ValueError(f"unknown shape {self.shape!r}")
        if not self.L > 0:
            raise ValueError("L must be positive")
        geom = make_shape(self.shape)
        z, w = self.anchor_z, self.anchor_w
        if abs(z - w) < 1e-12:
            raise ValueError("z and w coincide")
        for name, p in (("z", z), ("w", w)):
            px, py = geom.project(p.real, p.imag)
            if abs(complex(float(px), float(py)) - p) > 1e-9:
                raise ValueError(f"anchor {name}={p} is not on the {self.shape} boundary")
        m = self.marker_point
        if not geom.contains(m.real, m.imag):
            raise ValueError(f"marker {m} is not interior to the {self.shape}")

    @property
    def geometry(self):
        return make_shape(self.shape)

    @property
    def anchor_z(self) -> complex:
        return self.geometry.z if self.z is None else complex(self.z)

    @property
    def anchor_w(self) -> complex:
        return self.geometry.w if self.w is None else complex(self.w)

    @property
    def marker_point(self) -> complex:
        return self.geometry.centroid if self.marker is None else complex(self.marker)

    @property
    def symmetric(self) -> bool:
        return self.anchor_z.real == 0.0 and self.anchor_w.real == 0.0


class LatticeTables(NamedTuple):
    """Flat-array view of a domain for the compiled kernels.

    Hex flat index ``h = (q - q0) * nr + (r - r0)``; vertex flat index
    ``2 * h + corner``.
    """

    q0: int
    r0: int
    nq: int
    nr: int
    hex_state: np.ndarray
    vx: np.ndarray
    vy: np.ndarray
    nb_delta: np.ndarray
    ahead_delta: np.ndarray
    turn: np.ndarray
    z_v: int
    start_v: int
    start_slot: int
    end_v: int
    n_hexes: int
    n_interior: int


@dataclass(frozen=True, eq=False)
class DiscreteDomain:
    spec: DomainSpec
    offset: tuple[float, float]
    hexes: frozenset
    boundary_white: tuple
    boundary_black: tuple
    start_vertex: VertexId
    end_vertex: VertexId
    interior: tuple = field(repr=False)

    def __eq__(self, other):
        if not isinstance(other, DiscreteDomain):
            return NotImplemented
        return (
            self.spec == other.spec
            and self.offset == other.offset
            and self.hexes == other.hexes
            and self.boundary_white == other.boundary_white
            and self.boundary_black == other.boundary_black
            and self.start_vertex == other.start_vertex
            and self.end_vertex == other.end_vertex
        )

    __hash__ = None

    def color_of_boundary(self, h) -> int | None:
        if h in self._white_set:
            return WHITE
        if h in self._black_set:
            return BLACK
        return None

    @cached_property
    def _white_set(self):
        return frozenset(self.boundary_white)

    @cached_property
    def _black_set(self):
        return frozenset(self.boundary_black)

    @property
    def anchor_distance(self) -> float:
        """Lattice distance between the explorer's start and end vertices."""
        (x0, y0), (x1, y1) = vertex_position(self.start_vertex), vertex_position(self.end_vertex)
        return math.hypot(x1 - x0, y1 - y0)

    def to_unit(self, x, y):
        """Lattice coordinates -> unit-domain coordinates."""
        ox, oy = self.offset
        return (np.asarray(x) - ox) / self.spec.L, (np.asarray(y) - oy) / self.spec.L

    def to_lattice(self, x, y):
        ox, oy = self.offset
        return np.asarray(x) * self.spec.L + ox, np.asarray(y) * self.spec.L + oy

    @cached_property
    def tables(self) -> LatticeTables:
        qs = [h.q for h in self.hexes]
        rs = [h.r for h in self.hexes]
        margin = 3
        q0, r0 = min(qs) - margin, min(rs) - margin
        nq = max(qs) - q0 + margin + 1
        nr = max(rs) - r0 + margin + 1
        state = np.zeros(nq * nr, dtype=np.int8)
        for h in self.interior:
            state[(h.q - q0) * nr + (h.r - r0)] = INTERIOR
        for h in self.boundary_white:
            state[(h.q - q0) * nr + (h.r - r0)] = WHITE
        for h in self.boundary_black:
            state[(h.q - q0) * nr + (h.r - r0)] = BLACK
        qq, rr = np.meshgrid(np.arange(nq) + q0, np.arange(nr) + r0, indexing="ij")
        cx = SQRT3 * (qq + 0.5 * rr)
        cy = 1.5 * rr
        vx = np.repeat(cx.ravel(), 2)
        vy = np.stack([cy.ravel() + 1.0, cy.ravel() - 1.0], axis=1).ravel()
        nb_delta = np.array(
            [[dq * nr + dr for dq, dr in _NEIGHBOR_OFFSETS[c]] for c in (TOP, BOTTOM)],
            dtype=np.int64,
        )
        ahead_delta = AHEAD_OFFSETS[:, :, 0] * nr + AHEAD_OFFSETS[:, :, 1]

        def flat(v: VertexId) -> int:
            return 2 * ((v.hex.q - q0) * nr + (v.hex.r - r0)) + v.corner

        v1, slot = self.first_step
        return LatticeTables(
            q0=q0,
            r0=r0,
            nq=nq,
            nr=nr,
            hex_state=state,
            vx=vx,
            vy=vy,
            nb_delta=nb_delta,
            ahead_delta=np.ascontiguousarray(ahead_delta, dtype=np.int64),
            turn=TURN_TABLE.copy(),
            z_v=flat(self.start_vertex),
            start_v=flat(v1),
            start_slot=slot,
            end_v=flat(self.end_vertex),
            n_hexes=len(self.hexes),
            n_interior=len(self.interior),
        )

    def vertex_from_flat(self, f) -> VertexId:
        t = self.tables
        h, c = divmod(int(f), 2)
        qi, ri = divmod(h, t.nr)
        return VertexId(HexCoord(qi + t.q0, ri + t.r0), c)

    def vertex_to_flat(self, v: VertexId) -> int:
        t = self.tables
        return 2 * ((v.hex.q - t.q0) * t.nr + (v.hex.r - t.r0)) + v.corner

    def hex_to_flat(self, h) -> int:
        t = self.tables
        return (h[0] - t.q0) * t.nr + (h[1] - t.r0)

    @cached_property
    def first_step(self) -> tuple[VertexId, int]:
        """Second vertex of every interface and the slot used to reach it."""
        z = self.start_vertex
        white = self._white_set
        black = self._black_set
        for k, u in enumerate(vertex_neighbors(z)):
            shared = set(vertex_hexes(z)) & set(vertex_hexes(u))
            if len(shared & white) == 1 and len(shared & black) == 1:
                (wh,) = shared & white
                zx, zy = vertex_position(z)
                ux, uy = vertex_position(u)
                hx, hy = hex_center(wh)
                if (ux - zx) * (hy - zy) - (uy - zy) * (hx - zx) <= 0:
                    raise RuntimeError("white arc is not on the left of the first edge")
                return u, k
        raise RuntimeError("start vertex does not separate the two arcs")


def _trace_outer_loop(hexes: frozenset):
    """Counterclockwise walk along the honeycomb edges separating the domain
    from its exterior.  Returns the visited vertices and, per edge, the
    domain hexagon on its left."""
    q, r = min(hexes, key=lambda h: (h.r, h.q))
    # edge from the lower-left corner to the bottom corner of the lowest hex
    u = hex_corner((q, r), 2)
    v = hex_corner((q, r), 3)
    k = vertex_neighbors(v).index(u)
    start = (v, k)
    verts = [u]
    left = []
    while True:
        verts.append(v)
        (a_q, a_r) = AHEAD_OFFSETS[v.corner, k]
        shared = set(vertex_hexes(v)) & set(vertex_hexes(vertex_neighbors(v)[k]))
        (lh,) = [h for h in shared if h in hexes]
        left.append(lh)
        ahead = HexCoord(v.hex.q + int(a_q), v.hex.r + int(a_r))
        s = 0 if ahead in hexes else 1
        k = int(TURN_TABLE[v.corner, k, s])
        v = vertex_neighbors(v)[k]
        if (v, k) == start:
            break
        if len(verts) > 12 * len(hexes) + 12:
            raise RuntimeError("outer boundary walk did not close")
    return verts, left


def _flood_connected(cells: set) -> bool:
    if not cells:
        return False
    seen = set()
    stack = [next(iter(cells))]
    while stack:
        h = stack.pop()
        if h in seen:
            continue
        seen.add(h)
        stack.extend(n for n in hex_neighbors(h) if n in cells and n not in seen)
    return len(seen) == len(cells)


def _domain_hexes(spec: DomainSpec, offset):
    geom = spec.geometry
    L = spec.L
    ox, oy = offset
    ylo, yhi = geom.chord_range()
    xs = geom.point_at(np.linspace(0.0, geom.perimeter, 2001))[0]
    xlo, xhi = float(np.min(xs)), float(np.max(xs))
    r_lo = math.floor((L * ylo + oy) / 1.5) - 1
    r_hi = math.ceil((L * yhi + oy) / 1.5) + 1
    rr = np.arange(r_lo, r_hi + 1)
    q_lo = math.floor((L * xlo + ox) / SQRT3 - 0.5 * r_hi) - 2
    q_hi = math.ceil((L * xhi + ox) / SQRT3 - 0.5 * r_lo) + 2
    qq = np.arange(q_lo, q_hi + 1)
    Q, R = np.meshgrid(qq, rr, indexing="ij")
    cx = SQRT3 * (Q + 0.5 * R)
    cy = 1.5 * R
    inside = geom.contains((cx - ox) / L, (cy - oy) / L)
    return frozenset(HexCoord(int(a), int(b)) for a, b in zip(Q[inside], R[inside]))


def _nearest_split_vertex(loop_verts, hexes, target, ox, oy, L):
    best = None
    for i, v in enumerate(loop_verts[1:]):
        if sum(h in hexes for h in vertex_hexes(v)) != 2:
            continue
        x, y = vertex_position(v)
        d = math.hypot(x - (L * target.real + ox), y - (L * target.imag + oy))
        key = (round(d, 9), v.hex.q, v.hex.r, v.corner)
        if best is None or key < best[0]:
            best = (key, i)
    return best[1]


def _build(spec: DomainSpec, offset) -> DiscreteDomain:
    hexes = _domain_hexes(spec, offset)
    if not hexes:
        raise ValueError(f"{spec.shape} at L={spec.L} contains no hexagon")
    if not _flood_connected(set(hexes)):
        raise ValueError(f"{spec.shape} at L={spec.L} is not edge-connected")
    boundary = {h for h in hexes if any(n not in hexes for n in hex_neighbors(h))}
    interior = hexes - boundary
    if not interior:
        raise ValueError(f"{spec.shape} at L={spec.L} has no interior hexagon")

    verts, left = _trace_outer_loop(hexes)
    if set(left) != boundary:
        raise ValueError("domain boundary is not a single outer ring")
    ox, oy = offset
    # loop vertex i+1 ends edge i; the split at that vertex is between
    # left[i] and left[i+1]
    iz = _nearest_split_vertex(verts, hexes, spec.anchor_z, ox, oy, spec.L)
    iw = _nearest_split_vertex(verts, hexes, spec.anchor_w, ox, oy, spec.L)
    if iz == iw:
        raise ValueError("z and w round to the same lattice vertex")
    M = len(left)

    def arc(i_from, i_to):
        out = []
        i = i_from
        while True:
            if not out or out[-1] != left[i]:
                out.append(left[i])
            if i == i_to:
                break
            i = (i + 1) % M
        return out

    black_ccw = arc((iz + 1) % M, iw)
    white_ccw = arc((iw + 1) % M, iz)
    if set(black_ccw) & set(white_ccw):
        raise ValueError("a boundary hexagon belongs to both arcs")
    # both arcs listed clockwise: white from z to w, black from w to z
    white = tuple(reversed(white_ccw))
    black = tuple(reversed(black_ccw))
    return DiscreteDomain(
        spec=spec,
        offset=(float(ox), float(oy)),
        hexes=hexes,
        boundary_white=white,
        boundary_black=black,
        start_vertex=verts[iz + 1],
        end_vertex=verts[iw + 1],
        interior=tuple(sorted(interior)),
    )


def mirror_hex(h) -> HexCoord:
    """Reflection across the vertical line x = sqrt(3)/2."""
    return HexCoord(1 - h[0] - h[1], h[1])


def _is_mirror_symmetric(d: DiscreteDomain, strict: bool = True) -> bool:
    """Mirror symmetry with colour swap, up to one self-mirror hexagon at w.

    A corner at w (the triangle apex) always ends in a single hexagon on the
    axis; its colour only decides the interface's final step.
    """
    axis = SQRT3 / 2
    if abs(vertex_position(d.start_vertex)[0] - axis) > 1e-9:
        return False
    if frozenset(map(mirror_hex, d.hexes)) != d.hexes:
        return False
    white = set(d.boundary_white)
    black = set(d.boundary_black)
    odd = (set(map(mirror_hex, white)) ^ black) | (set(map(mirror_hex, black)) ^ white)
    if not odd:
        return abs(vertex_position(d.end_vertex)[0] - axis) < 1e-9
    if strict or len(odd) != 1:
        return False
    (h,) = odd
    return mirror_hex(h) == h and h in vertex_hexes(d.end_vertex)


def build_domain(spec: DomainSpec) -> DiscreteDomain:
    """Discretise ``spec``: hexagons whose centre is strictly inside the
    scaled domain, boundary ring split into a white and a black arc."""
    if spec.offset is not None:
        d = _build(spec, spec.offset)
        _check_first_step(d)
        return d
    if not spec.symmetric:
        d = _build(spec, (0.0, 0.0))
        _check_first_step(d)
        return d
    # slide vertically (period: two hex rows) until the placement is exactly
    # mirror symmetric about x = sqrt(3)/2 with z, w on the axis
    candidates = []
    for j in range(120):
        offset = (SQRT3 / 2, 0.025 * j)
        try:
            d = _build(spec, offset)
        except ValueError:
            continue
        if _is_mirror_symmetric(d, strict=True):
            _check_first_step(d)
            return d
        candidates.append(d)
    for d in candidates:
        if _is_mirror_symmetric(d, strict=False):
            _check_first_step(d)
            return d
    raise ValueError(f"no mirror-symmetric placement found for {spec}")


def _check_first_step(d: DiscreteDomain):
    d.first_step  # raises on orientation errors


def default_spec(shape: str, L: float) -> DomainSpec:
    return DomainSpec(shape=shape, L=L)
