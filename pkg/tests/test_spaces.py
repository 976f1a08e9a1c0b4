import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from proxlab.spaces import (
    BinarySeqPoint,
    BinarySeqSpace,
    Circle,
    Interval,
    Product,
    ProductPoint,
    Torus,
    TorusPoint,
    build_grid,
    chain_components,
    diam,
    dist,
    grid_from_json,
    hausdorff,
    interior_points,
    space_from_json,
)

I, C, T, B = Interval(), Circle(), Torus(), BinarySeqSpace()


# --- metrics ---------------------------------------------------------------


def test_circle_wraps():
    assert dist(C, 0.1, 0.9) == pytest.approx(0.2)


def test_interval_plain():
    assert dist(I, 0.2, 0.7) == pytest.approx(0.5)


def test_shift_single_defect_at_origin():
    zero = BinarySeqPoint.constant("0")
    y = BinarySeqPoint("0", "1", "0", 0)
    assert dist(B, zero, y) == 1.0


def test_shift_distance_is_power_of_two():
    zero = BinarySeqPoint.constant("0")
    for k in range(-6, 7):
        y = BinarySeqPoint("0", "1", "0", k)
        assert dist(B, zero, y) == 2.0 ** -abs(k)


def test_torus_is_max_of_circles():
    x = TorusPoint(Fraction(1, 10), Fraction(1, 2))
    y = TorusPoint(Fraction(9, 10), Fraction(3, 5))
    assert dist(T, x, y) == pytest.approx(0.2)


def test_product_max_metric():
    P = Product(I, C)
    assert dist(P, ProductPoint(0.1, 0.0), ProductPoint(0.3, 0.95)) == pytest.approx(0.2)


def test_mismatched_variant_is_type_error():
    with pytest.raises(TypeError):
        dist(T, 0.1, 0.2)
    with pytest.raises(TypeError):
        dist(B, 0.1, 0.2)


def test_out_of_range_rejected():
    with pytest.raises(ValueError):
        dist(I, 1.5, 0.2)
    with pytest.raises(ValueError):
        dist(C, 1.0, 0.2)


def test_torus_points_reduced():
    x = TorusPoint(Fraction(6, 4), Fraction(-1, 3))
    assert x.p == Fraction(1, 2) and x.q == Fraction(2, 3)


# --- diam / hausdorff --------------------------------------------------------


def test_diam_examples():
    assert diam(I, [0.0, 0.3, 0.6]) == pytest.approx(0.6)
    assert diam(C, [0.0, 0.4, 0.8]) == pytest.approx(0.4)
    assert diam(I, [0.3]) == 0.0


def test_diam_empty_raises():
    with pytest.raises(ValueError):
        diam(I, [])


def test_hausdorff_examples():
    A = [0.1, 0.5]
    assert hausdorff(I, A, A) == 0.0
    assert hausdorff(I, [0.0], [0.0, 0.5]) == pytest.approx(0.5)
    assert hausdorff(I, [0.2], [0.3]) == pytest.approx(0.1)
    with pytest.raises(ValueError):
        hausdorff(I, [], [0.1])


def test_hausdorff_metric_on_samples():
    rng = np.random.default_rng(3)
    for _ in range(200):
        A, Bs, Cs = (list(rng.random(rng.integers(1, 6))) for _ in range(3))
        ab, bc, ac = hausdorff(C, A, Bs), hausdorff(C, Bs, Cs), hausdorff(C, A, Cs)
        assert hausdorff(C, Bs, A) == ab
        assert ac <= ab + bc + 1e-12


# --- grids ----------------------------------------------------------------------


def test_grid_examples():
    assert build_grid(I, 0.25).points == [0.0, 0.25, 0.5, 0.75, 1.0]
    assert build_grid(C, 0.25).points == [0.0, 0.25, 0.5, 0.75]
    assert build_grid(T, 0.5).size == 4


def test_grid_rejects_bad_h():
    with pytest.raises(ValueError):
        build_grid(I, 0.0)
    with pytest.raises(ValueError):
        build_grid(C, -0.1)


@pytest.mark.parametrize("space", [I, C, T, Product(I, C), Product(C, T)])
def test_grid_is_eps_net(space):
    h = 0.1
    g = build_grid(space, h)
    rng = np.random.default_rng(0)
    axes = space.axes
    X = rng.random((500, len(axes)))
    d = space.dist_coords(X[:, None, :], g.coords[None, :, :]).min(axis=1)
    assert d.max() <= h
    # pairwise distinct
    assert len({tuple(r) for r in g.coords.tolist()}) == g.size


def test_shift_grid_is_distinct_and_dense_at_scale():
    g = build_grid(B, 0.25)
    assert len(set(g.points)) == g.size
    rng = np.random.default_rng(1)
    for _ in range(50):
        bits = "".join(rng.choice(["0", "1"], 9))
        x = BinarySeqPoint("0", bits, "1", -4)
        assert min(B.dist(x, p) for p in g.points) <= 0.25


def test_grid_nearest_and_neighbors():
    g = build_grid(C, 0.1)
    assert g.nearest(0.96) == 0
    assert sorted(g.neighbors(0, 0.1).tolist()) == [0, 1, 9]


def test_grid_json_roundtrip():
    for space, h in [(I, 0.25), (Product(I, C), 0.5), (B, 0.5), (T, 0.5)]:
        g = build_grid(space, h)
        obj = json.loads(json.dumps(g.to_json()))
        assert grid_from_json(obj).points == g.points
        assert space_from_json(space.to_json()) == space


def test_rational_points_serialize_as_strings():
    assert T.point_to_json(TorusPoint(Fraction(1, 3), Fraction(0))) == ["1/3", "0/1"]
    assert B.point_to_json(BinarySeqPoint("01", "", "0", 0))["right"] == "0"


# --- interiors and components ------------------------------------------------------


def test_interior_full_and_single():
    g = build_grid(I, 0.1)
    assert interior_points(g.full_mask(), 0.1).count == g.size
    single = g.mask_from_indices([5])
    assert interior_points(single, 0.1).count == 0


def test_interior_of_fiber_is_empty():
    g = build_grid(Product(I, C), 0.1)
    fiber = g.mask(g.coords[:, 0] == 0.5)
    assert fiber.count == 10
    assert interior_points(fiber, 0.1).count == 0


def test_interval_endpoints_are_relative_interior():
    g = build_grid(I, 0.1)
    m = g.mask(g.coords[:, 0] <= 0.5)
    inner = interior_points(m, 0.1)
    assert 0 in inner.indices().tolist()
    assert 5 not in inner.indices().tolist()


def test_interior_monotone_in_r():
    g = build_grid(C, 0.02)
    rng = np.random.default_rng(2)
    m = g.mask(rng.random(g.size) < 0.8)
    counts = [interior_points(m, r).count for r in (0, 0.02, 0.04, 0.08)]
    assert counts[0] == m.count
    assert counts == sorted(counts, reverse=True)


def test_chain_components_examples():
    g = build_grid(I, 0.25)
    comps = chain_components(g.mask_from_indices([0, 1, 3]), 0.25)
    assert [c.indices().tolist() for c in comps] == [[0, 1], [3]]
    assert len(chain_components(g.full_mask(), 0.25)) == 1
    assert chain_components(g.mask(), 0.25) == []


def test_chain_components_wrap_on_circle():
    g = build_grid(C, 0.1)
    comps = chain_components(g.mask_from_indices([0, 1, 9]), 0.1)
    assert len(comps) == 1


# --- binary sequences ------------------------------------------------------------------

words = st.text(alphabet="01", min_size=1, max_size=4)


@st.composite
def rephrased(draw):
    left, right = draw(words), draw(words)
    core = draw(st.text(alphabet="01", max_size=5))
    origin = draw(st.integers(-6, 6))
    x = BinarySeqPoint(left, core, right, origin)
    # rewrite: repeat periods, unroll one right period into the core, one left period before it
    a, b = draw(st.integers(1, 3)), draw(st.integers(1, 3))
    y = BinarySeqPoint(left * a, left + core + right, right * b, origin - len(left))
    return x, y, (left, core, right, origin)


@settings(max_examples=200, deadline=None)
@given(rephrased())
def test_canonicalization_roundtrip(data):
    x, y, (left, core, right, origin) = data
    assert x == y
    assert hash(x) == hash(y)
    assert B.dist(x, y) == 0.0
    lo = origin - 3 * len(left) - 2
    hi = origin + len(core) + 3 * len(right) + 2
    for n in range(lo, hi):
        k = n - origin
        if 0 <= k < len(core):
            want = core[k]
        elif k >= len(core):
            want = right[(k - len(core)) % len(right)]
        else:
            want = left[k % len(left)]
        assert x[n] == want


def test_periodic_rotations_agree():
    assert BinarySeqPoint.periodic("01", 0) == BinarySeqPoint.periodic("10", 1)
    assert BinarySeqPoint.periodic("0101", 0) == BinarySeqPoint.periodic("01", 0)
    assert BinarySeqPoint.periodic("01", 0) != BinarySeqPoint.periodic("01", 1)


def test_shift_point_json_roundtrip():
    x = BinarySeqPoint("01", "110", "0", -2)
    assert B.point_from_json(json.loads(json.dumps(B.point_to_json(x)))) == x


def test_shift_metric_is_exact():
    x = BinarySeqPoint("0", "101", "1", -1)
    y = BinarySeqPoint("0", "100", "1", -1)
    assert B.first_difference(x, y) == 1
    assert B.dist(x, y) == 0.5
    assert math.log2(B.dist(x, y)).is_integer()
