import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lepx.explorer import explore
from lepx.hexlattice import BOTTOM, TOP, HexCoord, VertexId, build_domain, default_spec, hex_corner, vertex_neighbors, vertex_position
from lepx.looperase import CorruptPathError, erase_near_loops, erase_near_loops_reference, has_near_loops
from lepx.rng import RngStream

SQRT3 = math.sqrt(3.0)


def adjacent(a, b):
    return b in vertex_neighbors(a)


@pytest.fixture(scope="module")
def disc50():
    return build_domain(default_spec("disc", 50.0))


def _as_ids(d, flat):
    return [d.vertex_from_flat(f) for f in flat]


def test_abstract_two_step_near_loop():
    # smallest near-loop on an abstract graph where v2 touches v0
    edges = {("a", "b"), ("b", "c"), ("a", "c")}
    adj = lambda x, y: (x, y) in edges or (y, x) in edges
    eta, times = erase_near_loops_reference(["a", "b", "c"], adj)
    assert eta == ["a", "c"] and times == [0, 2]


def test_hexagon_loop_is_shortcut(disc50):
    # walking five edges around a hexagon ends next to the start
    d = disc50
    h = d.interior[len(d.interior) // 2]
    corners = [hex_corner(h, k) for k in range(6)]
    flat = np.array([d.vertex_to_flat(v) for v in corners])
    e = erase_near_loops(flat, d.tables.nb_delta)
    assert list(e.times) == [0, 5]
    assert list(e.vertices) == [flat[0], flat[5]]


def test_zigzag_is_unchanged(disc50):
    d = disc50
    v = d.start_vertex
    path = [v]
    # straight upward zig-zag: alternate the two upward slots
    for k in range(20):
        x, y = vertex_position(path[-1])
        nxt = [u for u in vertex_neighbors(path[-1]) if vertex_position(u)[1] > y]
        nxt.sort(key=lambda u: vertex_position(u)[0])
        path.append(nxt[k % len(nxt)] if len(nxt) > 1 else nxt[0])
    flat = np.array([d.vertex_to_flat(v) for v in path])
    assert not has_near_loops(flat, d.tables.nb_delta)
    e = erase_near_loops(flat, d.tables.nb_delta)
    assert np.array_equal(e.times, np.arange(len(flat)))


def _check_invariants(flat, e, nb_delta, d):
    n = len(flat) - 1
    t = e.times
    assert t[0] == 0 and t[-1] == n and np.all(np.diff(t) > 0)
    assert np.array_equal(e.vertices, flat[t])
    ids = _as_ids(d, e.vertices)
    for a, b in zip(ids, ids[1:]):
        assert adjacent(a, b)
    assert not has_near_loops(e.vertices, nb_delta)
    assert e.m <= n
    assert (e.m == n) == (not has_near_loops(flat, nb_delta))
    again = erase_near_loops(e.vertices, nb_delta)
    assert np.array_equal(again.vertices, e.vertices)


def test_fast_matches_literal_scan(disc50):
    d = disc50
    nb = d.tables.nb_delta
    for i in range(100):
        p = explore(d, RngStream(17, i))
        e = erase_near_loops(p, nb)
        eta, times = erase_near_loops_reference(p.vertices, adjacent)
        assert list(e.times) == times
        assert _as_ids(d, e.vertices) == eta
        _check_invariants(p.flat, e, nb, d)


def _vertex_at(x, y):
    """Canonical id of the honeycomb vertex at (x, y)."""
    for corner, dy in ((TOP, 1.0), (BOTTOM, -1.0)):
        r = (y - dy) / 1.5
        if abs(r - round(r)) < 1e-6:
            r = round(r)
            q = x / SQRT3 - 0.5 * r
            if abs(q - round(q)) < 1e-6:
                return VertexId(HexCoord(round(q), r), corner)
    raise AssertionError(f"({x}, {y}) is not a honeycomb vertex")


def _rotate60(v):
    x, y = vertex_position(v)
    c, s = 0.5, SQRT3 / 2
    return _vertex_at(c * x - s * y, s * x + c * y)


def _mirror(v):
    x, y = vertex_position(v)
    return _vertex_at(-x, y)


@pytest.mark.parametrize("sym", [_rotate60, _mirror])
def test_erasure_commutes_with_lattice_symmetries(disc50, sym):
    d = disc50
    for i in range(20):
        p = explore(d, RngStream(23, i))
        ids = list(p.vertices)
        eta, _ = erase_near_loops_reference(ids, adjacent)
        moved, _ = erase_near_loops_reference([sym(v) for v in ids], adjacent)
        assert moved == [sym(v) for v in eta]


def test_corrupt_paths_rejected(disc50):
    d = disc50
    nb = d.tables.nb_delta
    p = explore(d, RngStream(1, 0)).flat
    with pytest.raises(CorruptPathError):
        erase_near_loops(np.concatenate([p, p[:1]]), nb)  # repeats a vertex
    # a jump off the walk leaves a retained vertex with no later neighbour
    with pytest.raises(CorruptPathError):
        erase_near_loops(np.concatenate([p[:10], [p[0] + 2 * 10**5]]), nb)


@settings(max_examples=60)
@given(st.integers(0, 2**32), st.integers(0, 10**6))
def test_invariants_hold_for_random_samples(seed, index):
    d = build_domain(default_spec("square", 20.0))
    p = explore(d, RngStream(seed, index))
    e = erase_near_loops(p, d.tables.nb_delta)
    _check_invariants(p.flat, e, d.tables.nb_delta, d)
