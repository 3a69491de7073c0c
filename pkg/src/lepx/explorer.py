"""Percolation exploration interface from z to w with lazily revealed colours."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .hexlattice import (
    AHEAD_OFFSETS,
    BLACK,
    TURN_TABLE,
    WHITE,
    DiscreteDomain,
    HexCoord,
    VertexId,
    vertex_neighbors,
)
from .kernels import explore_kernel
from .rng import RngStream

WHITE_BIT, BLACK_BIT = 0, 1


class ExplorationError(RuntimeError):
    pass


class ColorField:
    """Hexagon colours of one sample; boundary arcs pre-coloured."""

    def __init__(self, domain: DiscreteDomain):
        self.domain = domain
        self.colors: dict[HexCoord, int] = {}
        for h in domain.boundary_white:
            self.colors[h] = WHITE
        for h in domain.boundary_black:
            self.colors[h] = BLACK
        self.n_revealed = 0

    def __contains__(self, h):
        return h in self.colors


def reveal(field: ColorField, h, rng: RngStream) -> int:
    """Colour of ``h``, drawing one fair bit the first time it is needed."""
    h = HexCoord(*h)
    if h in field.colors:
        return field.colors[h]
    if h not in field.domain.hexes:
        raise KeyError(f"{h} is outside the domain")
    color = BLACK if rng.bit() else WHITE
    field.colors[h] = color
    field.n_revealed += 1
    return color


@dataclass(frozen=True, eq=False)
class InterfacePath:
    """Vertices omega(0..n) of an interface, as flat lattice indices."""

    domain: DiscreteDomain
    flat: np.ndarray
    n_revealed: int = 0

    @property
    def n(self) -> int:
        """Number of steps."""
        return len(self.flat) - 1

    @cached_property
    def vertices(self) -> tuple[VertexId, ...]:
        return tuple(self.domain.vertex_from_flat(f) for f in self.flat)

    def positions(self) -> np.ndarray:
        t = self.domain.tables
        return np.stack([t.vx[self.flat], t.vy[self.flat]], axis=1)

    def __eq__(self, other):
        return isinstance(other, InterfacePath) and np.array_equal(self.flat, other.flat)

    __hash__ = None


def _buffers(domain: DiscreteDomain):
    t = domain.tables
    color = np.zeros(t.nq * t.nr, dtype=np.uint8)
    stamp = np.zeros(t.nq * t.nr, dtype=np.int64)
    path = np.empty(10 * t.n_hexes + 16, dtype=np.int64)
    return color, stamp, path


def _run(domain, seed, index, forced, use_forced, buffers=None, epoch=1):
    t = domain.tables
    color, stamp, path = buffers if buffers is not None else _buffers(domain)
    n, revealed = explore_kernel(
        t.hex_state,
        t.nb_delta,
        t.ahead_delta,
        t.turn,
        t.z_v,
        t.start_v,
        t.start_slot,
        t.end_v,
        color,
        stamp,
        epoch,
        np.uint64(seed),
        np.uint64(index),
        forced,
        use_forced,
        path,
    )
    if n < 0:
        raise ExplorationError(f"exploration failed with code {n}")
    return InterfacePath(domain, path[:n].copy(), int(revealed))


def explore(domain: DiscreteDomain, rng: RngStream) -> InterfacePath:
    """Interface with white on its left, colours drawn from ``rng``'s stream."""
    dummy = np.zeros(1, dtype=np.int8)
    return _run(domain, rng.master_seed, rng.sample_index, dummy, False)


def forced_coloring(domain: DiscreteDomain, colors) -> np.ndarray:
    """Flat forced-colour array; ``colors`` maps interior hexes to WHITE/BLACK
    or is a single colour for the whole interior."""
    t = domain.tables
    forced = np.zeros(t.nq * t.nr, dtype=np.int8)
    for h in domain.interior:
        c = colors if isinstance(colors, int) else colors[h]
        forced[domain.hex_to_flat(h)] = BLACK_BIT if c == BLACK else WHITE_BIT
    return forced


def explore_forced(domain: DiscreteDomain, colors) -> InterfacePath:
    """Deterministic trace for a fixed interior colouring."""
    return _run(domain, 0, 0, forced_coloring(domain, colors), True)


def explore_reference(domain: DiscreteDomain, rng: RngStream) -> InterfacePath:
    """Plain-Python exploration with a dictionary colour field.

    Consumes ``rng`` in the same order as the compiled walk, so both give
    the same path for the same stream.
    """
    field = ColorField(domain)
    v, k = domain.first_step
    verts = [domain.start_vertex, v]
    cap = 10 * len(domain.hexes)
    while True:
        dq, dr = AHEAD_OFFSETS[v.corner, k]
        ahead = HexCoord(v.hex.q + int(dq), v.hex.r + int(dr))
        if ahead not in domain.hexes:
            break
        col = reveal(field, ahead, rng)
        k = int(TURN_TABLE[v.corner, k, 0 if col == WHITE else 1])
        v = vertex_neighbors(v)[k]
        verts.append(v)
        if len(verts) > cap:
            raise ExplorationError("step cap exceeded")
    if v != domain.end_vertex:
        raise ExplorationError("interface did not end at w")
    flat = np.array([domain.vertex_to_flat(u) for u in verts], dtype=np.int64)
    return InterfacePath(domain, flat, field.n_revealed)
