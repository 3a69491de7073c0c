import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lepx.hexlattice import (
    BOTTOM,
    SHAPES,
    TOP,
    DomainSpec,
    HexCoord,
    VertexId,
    build_domain,
    default_spec,
    hex_center,
    hex_corner,
    hex_neighbors,
    mirror_hex,
    vertex_hexes,
    vertex_neighbors,
    vertex_position,
)
from lepx.shapes import make_shape

SQRT3 = math.sqrt(3.0)

coords = st.integers(-50, 50)
vertices = st.builds(lambda q, r, c: VertexId(HexCoord(q, r), c), coords, coords, st.sampled_from([TOP, BOTTOM]))


def test_hex_center_origin_and_spacing():
    assert hex_center((0, 0)) == (0.0, 0.0)
    d10 = math.dist(hex_center((1, 0)), (0.0, 0.0))
    assert d10 == pytest.approx(SQRT3, abs=1e-14)
    assert math.dist(hex_center((1, -1)), (0.0, 0.0)) == pytest.approx(d10, abs=1e-14)


@given(coords, coords)
def test_six_neighbours_at_sqrt3(q, r):
    c = HexCoord(q, r)
    nbs = hex_neighbors(c)
    assert len(set(nbs)) == 6
    for n in nbs:
        assert math.dist(hex_center(n), hex_center(c)) == pytest.approx(SQRT3, abs=1e-12)


@given(vertices)
def test_vertex_neighbours_symmetric_at_unit_distance(v):
    nbs = vertex_neighbors(v)
    assert len(set(nbs)) == 3
    for u in nbs:
        assert v in vertex_neighbors(u)
        assert math.dist(vertex_position(u), vertex_position(v)) == pytest.approx(1.0, abs=1e-12)


def _brute_force_vertices(radius=6):
    """All honeycomb vertices near the origin, as (position -> ids)."""
    out = {}
    for q in range(-radius, radius + 1):
        for r in range(-radius, radius + 1):
            for k in range(6):
                v = hex_corner((q, r), k)
                key = tuple(np.round(vertex_position(v), 9))
                out.setdefault(key, set()).add(v)
    return out


def test_vertex_canonical_addresses_unique():
    # every geometric point gets exactly one id from all six owning corners
    for ids in _brute_force_vertices().values():
        assert len(ids) == 1


@pytest.mark.parametrize("v", [VertexId(HexCoord(0, 0), TOP), VertexId(HexCoord(1, -1), BOTTOM), VertexId(HexCoord(-2, 3), TOP)])
def test_vertex_neighbours_match_brute_force_scan(v):
    pts = _brute_force_vertices()
    x, y = vertex_position(v)
    near = set()
    for (px, py), ids in pts.items():
        if 1e-9 < math.hypot(px - x, py - y) <= 1.01:
            near |= ids
    assert near == set(vertex_neighbors(v))


@given(vertices)
def test_vertex_touches_three_hexes_at_unit_distance(v):
    hs = vertex_hexes(v)
    assert len(set(hs)) == 3
    for h in hs:
        assert math.dist(hex_center(h), vertex_position(v)) == pytest.approx(1.0, abs=1e-12)


def _boundary(d):
    return {h for h in d.hexes if any(n not in d.hexes for n in hex_neighbors(h))}


def _is_chain(arc):
    return all(b in hex_neighbors(a) for a, b in zip(arc, arc[1:]))


def _connected(cells):
    cells = set(cells)
    seen, stack = set(), [next(iter(cells))]
    while stack:
        h = stack.pop()
        if h not in seen:
            seen.add(h)
            stack.extend(n for n in hex_neighbors(h) if n in cells)
    return seen == cells


def test_square_arcs_partition_boundary():
    d = build_domain(DomainSpec("square", 10.0))
    white, black = set(d.boundary_white), set(d.boundary_black)
    assert white and black
    assert not white & black
    assert white | black == _boundary(d)
    assert _is_chain(d.boundary_white) and _is_chain(d.boundary_black)


def test_disc_boundary_hexes_have_an_outside_neighbour():
    d = build_domain(DomainSpec("disc", 6.0))
    geom = make_shape("disc")
    for h in set(d.boundary_white) | set(d.boundary_black):
        outside = 0
        for n in hex_neighbors(h):
            x, y = d.to_unit(*hex_center(n))
            outside += not bool(geom.contains(x, y))
        assert outside >= 1


def test_triangle_hex_count_matches_point_in_polygon_scan():
    d = build_domain(DomainSpec("triangle", 36.0))
    ox, oy = d.offset
    L = 36.0
    a, b, c = np.array([-0.5, 0.0]), np.array([0.5, 0.0]), np.array([0.0, SQRT3 / 2])

    def inside(p):
        # strict barycentric sign test, independent of the shape class
        def cross(u, v, w):
            return (v[0] - u[0]) * (w[1] - u[1]) - (v[1] - u[1]) * (w[0] - u[0])

        return cross(a, b, p) > 0 and cross(b, c, p) > 0 and cross(c, a, p) > 0

    count = 0
    for q in range(-60, 60):
        for r in range(-10, 40):
            x, y = hex_center((q, r))
            count += inside(np.array([(x - ox) / L, (y - oy) / L]))
    assert count == len(d.hexes)


@pytest.mark.parametrize("shape", SHAPES)
@pytest.mark.parametrize("L", [6.0, 13.0, 50.0])
def test_domain_invariants(shape, L):
    d = build_domain(default_spec(shape, L))
    assert _connected(d.hexes)
    assert _connected(d.interior)
    white, black = set(d.boundary_white), set(d.boundary_black)
    assert white | black == _boundary(d) and not white & black
    assert _is_chain(d.boundary_white) and _is_chain(d.boundary_black)
    for v in (d.start_vertex, d.end_vertex):
        hs = set(vertex_hexes(v))
        assert hs & white and hs & black


@pytest.mark.parametrize("shape", SHAPES)
def test_symmetric_domain_reflects_white_onto_black(shape):
    d = build_domain(default_spec(shape, 40.0))
    assert set(map(mirror_hex, d.hexes)) == set(d.hexes)
    mw = set(map(mirror_hex, d.boundary_white))
    black = set(d.boundary_black)
    # a corner at w may leave one self-mirror hexagon on the axis
    assert len(mw ^ black) <= 1


def test_build_domain_deterministic():
    assert build_domain(default_spec("disc", 30.0)) == build_domain(default_spec("disc", 30.0))


def test_boundary_white_is_clockwise_from_z():
    # signed area of the white-arc centres plus the chord back: with white on
    # the clockwise side from z (bottom) to w (top), the arc lies on the left
    d = build_domain(default_spec("square", 30.0))
    cx = np.array([hex_center(h)[0] for h in d.boundary_white])
    axis = vertex_position(d.start_vertex)[0]
    assert np.all(cx <= axis + 1e-9)


def test_degenerate_domains_rejected():
    with pytest.raises(ValueError):
        build_domain(DomainSpec("disc", 1.0))
    with pytest.raises(ValueError):
        DomainSpec("square", 10.0, z=0.5j, w=0.5j)
    with pytest.raises(ValueError):
        DomainSpec("square", 10.0, z=0.3j)  # not on the boundary
    with pytest.raises(ValueError):
        DomainSpec("hexagon", 10.0)
    with pytest.raises(ValueError):
        DomainSpec("disc", -1.0)


@settings(max_examples=25, deadline=None)
@given(st.floats(4.0, 60.0), st.floats(0.0, 3.0), st.floats(0.0, 3.0))
def test_random_placements_satisfy_invariants(L, ox, oy):
    try:
        d = build_domain(DomainSpec("disc", L, offset=(ox, oy)))
    except ValueError:
        return
    white, black = set(d.boundary_white), set(d.boundary_black)
    assert white | black == _boundary(d) and not white & black
    assert d.start_vertex != d.end_vertex


@pytest.mark.parametrize("shape, height", [("triangle", math.sqrt(3) / 2), ("square", 1.0), ("disc", 1.0), ("half_disc", 1.0)])
def test_anchor_distance_tracks_scaled_anchors(shape, height):
    for L in (36.0, 100.0):
        d = build_domain(default_spec(shape, L))
        (x0, y0), (x1, y1) = vertex_position(d.start_vertex), vertex_position(d.end_vertex)
        assert d.anchor_distance == pytest.approx(math.hypot(x1 - x0, y1 - y0))
        assert abs(d.anchor_distance - L * height) < 5
