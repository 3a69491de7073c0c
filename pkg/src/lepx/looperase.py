"""Chronological near-loop erasure.

Starting from ``t_0 = 0``, each retained time is the last time the path
visits a lattice neighbour of the current vertex:

    t_{j+1} = max { i : t_j < i <= n, omega(i) adjacent to omega(t_j) }

and the walk stops once ``omega(t_j)`` is the endpoint.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernels import erase_kernel


@dataclass(frozen=True, eq=False)
class ErasedPath:
    vertices: np.ndarray  # flat vertex indices eta(0..m)
    times: np.ndarray  # retained original indices t_0..t_m

    @property
    def m(self) -> int:
        return len(self.vertices) - 1

    def __eq__(self, other):
        return (
            isinstance(other, ErasedPath)
            and np.array_equal(self.vertices, other.vertices)
            and np.array_equal(self.times, other.times)
        )

    __hash__ = None


class CorruptPathError(ValueError):
    pass


def _flat(path):
    return np.asarray(getattr(path, "flat", path), dtype=np.int64)


def erase_near_loops(path, nb_delta) -> ErasedPath:
    """Linear-time erasure of a self-avoiding honeycomb path.

    ``path`` is an :class:`InterfacePath` or an array of flat vertex indices;
    ``nb_delta`` is the neighbour table of the lattice the indices live on.
    """
    flat = _flat(path)
    if len(flat) != len(np.unique(flat)):
        raise CorruptPathError("path is not self-avoiding")
    size = int(flat.max()) + 2 * int(np.abs(nb_delta).max()) + 4
    pos = np.zeros(size, dtype=np.int64)
    stamp = np.zeros(size, dtype=np.int64)
    times = np.empty(len(flat), dtype=np.int64)
    m1 = erase_kernel(flat, len(flat), nb_delta, pos, stamp, 1, times)
    if m1 < 0:
        raise CorruptPathError("no later neighbour of a retained vertex")
    times = times[:m1].copy()
    return ErasedPath(flat[times], times)


def erase_near_loops_reference(vertices, adjacent) -> tuple[list, list]:
    """Literal quadratic scan of the definition.

    ``vertices`` is any sequence of hashable vertices and ``adjacent(a, b)``
    the lattice adjacency test.  Returns (eta, times).
    """
    n = len(vertices) - 1
    times = [0]
    t = 0
    while vertices[t] != vertices[n]:
        best = None
        for i in range(t + 1, n + 1):
            if adjacent(vertices[i], vertices[t]):
                best = i
        if best is None:
            raise CorruptPathError(f"no neighbour of omega({t}) after time {t}")
        t = best
        times.append(t)
    return [vertices[t] for t in times], times


def has_near_loops(flat, nb_delta) -> bool:
    """True if some pair j' >= j + 2 is equal or lattice-adjacent."""
    flat = [int(v) for v in _flat(flat)]
    where = {v: i for i, v in enumerate(flat)}
    if len(where) != len(flat):
        return True
    for j, v in enumerate(flat):
        c = v & 1
        for k in range(3):
            u = 2 * ((v >> 1) + int(nb_delta[c, k])) + (1 - c)
            i = where.get(u)
            if i is not None and abs(i - j) >= 2:
                return True
    return False
