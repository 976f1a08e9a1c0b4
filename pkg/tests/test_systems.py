import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from proxlab import systems as sy
from proxlab.spaces import (
    BinarySeqPoint,
    BinarySeqSpace,
    Circle,
    Interval,
    ProductPoint,
    TorusPoint,
    build_grid,
)

I, C, B = Interval(), Circle(), BinarySeqSpace()


def test_north_south_example():
    assert sy.apply(sy.NorthSouth(), 0.3, 1) == pytest.approx(0.7)


def test_sqrt_interval_examples():
    f = sy.SqrtInterval()
    assert sy.apply(f, 0.25, 1) == 0.5
    assert sy.apply(f, 0.25, -1) == 0.0625


def test_shift_moves_symbols_left():
    x = BinarySeqPoint("0", "1", "0", 0)
    y = sy.apply(sy.Shift(), x, 2)
    assert y[-2] == "1" and y[0] == "0"
    assert B.dist(y, BinarySeqPoint.constant("0")) == 0.25


def test_cat_map_exact():
    x = TorusPoint(Fraction(1, 2), Fraction(1, 2))
    assert sy.apply(sy.CatMap(), x, 1) == TorusPoint(Fraction(1, 2), Fraction(0))
    z = TorusPoint(Fraction(3, 7), Fraction(5, 11))
    assert sy.apply(sy.CatMap(), sy.apply(sy.CatMap(), z, 25), -25) == z


def test_orbit_segment_examples():
    assert sy.orbit_segment(sy.Rotation(0.25), 0.0, 0, 3) == [0.0, 0.25, 0.5, 0.75]
    assert sy.orbit_segment(sy.IdentityInterval(), 0.4, -3, 3) == [0.4] * 7
    seg = sy.orbit_segment(sy.SqrtInterval(), 0.5, 0, 2)
    assert seg == pytest.approx([0.5, 0.5**0.5, 0.5**0.25])


def test_orbit_segment_negative_window():
    seg = sy.orbit_segment(sy.SqrtInterval(), 0.5, -2, 0)
    assert seg == pytest.approx([0.5**4, 0.5**2, 0.5])


def test_apply_rejects_foreign_point():
    with pytest.raises((TypeError, ValueError)):
        sy.apply(sy.SqrtInterval(), 1.5, 1)
    with pytest.raises(TypeError):
        sy.apply(sy.CatMap(), 0.5, 1)


@pytest.mark.parametrize(
    "system, samples",
    [
        (sy.SqrtInterval(), list(np.linspace(0, 1, 50))),
        (sy.Rotation(sy.GOLDEN), list(np.linspace(0, 0.99, 50))),
        (sy.NorthSouth(), list(np.linspace(0, 1, 50))),
        (sy.SqrtCircle(), list(np.linspace(0, 0.99, 50))),
        (sy.Denjoy(sy.DenjoyParams()), list(np.linspace(0, 0.99, 50))),
    ],
)
def test_float_roundtrip_within_1e9(system, samples):
    for x in samples:
        y = sy.apply(system, sy.apply(system, float(x), 7), -7)
        assert system.space.dist(x, y) <= 1e-9


def test_exact_roundtrips():
    r = sy.Rotation(Fraction(2, 7))
    assert sy.apply(r, sy.apply(r, Fraction(1, 3), 11), -11) == Fraction(1, 3)
    x = BinarySeqPoint("01", "110", "1", -2)
    assert sy.apply(sy.Shift(), sy.apply(sy.Shift(), x, 9), -9) == x


def test_check_homeo_examples():
    shift_pts = build_grid(B, 0.25).points[:30]
    assert sy.check_homeo(sy.Shift(), shift_pts)["defect"] == 0
    tor = [TorusPoint(Fraction(i, 7), Fraction(j, 5)) for i in range(7) for j in range(5)]
    rep = sy.check_homeo(sy.CatMap(), tor)
    assert rep["defect"] == 0 and rep["passed"]
    rng = np.random.default_rng(0)
    rep = sy.check_homeo(sy.SqrtInterval(), list(rng.random(100)), tol=1e-12)
    assert rep["passed"]


def test_north_south_isometry_and_involution():
    f = sy.NorthSouth()
    rng = np.random.default_rng(1)
    for x, y in rng.random((100, 2)):
        assert I.dist(f.step(x), f.step(y)) == I.dist(x, y)
        assert sy.apply(f, x, 2) == pytest.approx(x, abs=1e-15)


def test_rotation_isometry_for_iterates():
    f = sy.Rotation(sy.GOLDEN)
    rng = np.random.default_rng(2)
    for x, y in rng.random((30, 2)):
        for n in (-5, 3, 17):
            assert C.dist(sy.apply(f, x, n), sy.apply(f, y, n)) == pytest.approx(C.dist(x, y), abs=1e-12)


def test_sqrt_interval_limits():
    f = sy.SqrtInterval()
    assert f.step(0.0) == 0.0 and f.step(1.0) == 1.0
    for x in (0.1, 0.5, 0.9):
        fwd = sy.orbit_segment(f, x, 0, 40)
        bwd = sy.orbit_segment(f, x, -40, 0)
        assert 1 - fwd[-1] <= 1e-6 and bwd[0] <= 1e-6
        assert np.all(np.diff(fwd) >= 0) and np.all(np.diff(bwd) >= 0)


def test_sqrt_closed_form_oracle():
    f = sy.SqrtInterval()
    for n in range(-5, 6):
        assert sy.apply(f, 0.3, n) == pytest.approx(0.3 ** (2.0**-n), rel=1e-12)


def test_product_componentwise():
    f = sy.sqrt_times_rotation(sy.GOLDEN)
    x = ProductPoint(0.3, 0.7)
    for n in (-4, 0, 5):
        y = sy.apply(f, x, n)
        assert y.a == sy.apply(f.f, 0.3, n)
        assert y.b == sy.apply(f.g, 0.7, n)


@settings(max_examples=200, deadline=None)
@given(st.text(alphabet="01", min_size=1, max_size=3), st.text(alphabet="01", max_size=6), st.integers(-5, 5))
def test_shift_lipschitz_two(left, core, origin):
    zero = BinarySeqPoint.constant("0")
    x = BinarySeqPoint(left, core, "0", origin)
    d = B.dist(x, zero)
    if d == 0:
        return
    d1 = B.dist(sy.Shift().step(x), sy.Shift().step(zero))
    assert d1 in (2 * d, d / 2, d)
    assert d1 <= 2 * d


def test_denjoy_structure():
    p = sy.DenjoyParams(sy.GOLDEN, 20, 0.5)
    f = sy.Denjoy(p)
    a0, b0 = f.arc(0)
    a1, b1 = f.arc(1)
    assert b0 - a0 == pytest.approx(p.lengths[0])
    assert f.step(a0) == pytest.approx(a1, abs=1e-12)
    assert f.step(b0) == pytest.approx(b1, abs=1e-12)
    assert sy.denjoy_eval(p, a0 + 1.0) == pytest.approx(a1, abs=1e-12)
    assert sy.check_homeo(f, list(np.linspace(0, 0.999, 200)), tol=1e-9)["passed"]


def test_denjoy_params_validation_and_budget():
    with pytest.raises(ValueError):
        sy.DenjoyParams(sy.GOLDEN, 0, 0.5)
    with pytest.raises(ValueError):
        sy.DenjoyParams(sy.GOLDEN, 5, 1.5)
    budgets = [sy.DenjoyParams(sy.GOLDEN, K, 0.5).e_K for K in (5, 10, 15)]
    assert budgets[0] > budgets[1] > budgets[2]
    assert budgets[1] / budgets[2] == pytest.approx(2**5)


def test_denjoy_is_increasing_lift():
    f = sy.Denjoy(sy.DenjoyParams())
    t = np.linspace(0, 2, 4001)
    F = f.flift(t)
    assert np.all(np.diff(F) > 0)
    assert F[-1] - F[0] == pytest.approx(2.0)


def test_sine_circle_requires_homeomorphism():
    with pytest.raises(ValueError):
        sy.SineCircleMap(0.2)


def test_iterate_matches_double_step():
    f = sy.SqrtInterval()
    g = sy.Iterate(f, 3)
    assert g.step(0.2) == f.step(f.step(f.step(0.2)))
    assert g.step_inv(g.step(0.2)) == pytest.approx(0.2)


@pytest.mark.parametrize(
    "desc",
    [
        {"kind": "rotation", "alpha": "1/3"},
        {"kind": "rotation", "alpha": 0.6180339887},
        {"kind": "product", "f": {"kind": "sqrt_circle"}, "g": {"kind": "rotation", "alpha": 0.6180339887}},
        {"kind": "denjoy", "K": 10, "c": 0.4},
        {"kind": "cat_map"},
        {"kind": "shift"},
        {"kind": "north_south"},
        {"kind": "identity_interval"},
        {"kind": "iterate", "base": {"kind": "sqrt_interval"}, "k": 2},
    ],
)
def test_descriptor_roundtrip(desc):
    f = sy.system_from_json(desc)
    g = sy.system_from_json(f.to_json())
    assert g.id == f.id


def test_rational_alpha_is_exact():
    f = sy.system_from_json({"kind": "rotation", "alpha": "1/3"})
    assert f.alpha == Fraction(1, 3)
    assert sy.apply(f, Fraction(0), 3) == 0


def test_bad_descriptor():
    with pytest.raises(ValueError):
        sy.system_from_json({"kind": "no_such_map"})
    with pytest.raises(ValueError):
        sy.system_from_json([1, 2])


def test_orbit_table_matches_segments():
    f = sy.sqrt_torus(sy.GOLDEN)
    pts = [ProductPoint(0.2, 0.4), ProductPoint(0.9, 0.1)]
    tab = sy.orbit_table(f, pts, -3, 3)
    for i, p in enumerate(pts):
        seg = sy.orbit_segment(f, p, -3, 3)
        assert tab[i, :, 0] == pytest.approx([q.a for q in seg], abs=1e-12)
        assert tab[i, :, 1] == pytest.approx([q.b for q in seg], abs=1e-12)


def test_cat_map_table_is_exact_rational():
    g = build_grid(sy.CatMap().space, 0.1)
    tab = sy.orbit_table(sy.CatMap(), g.points, -3, 3)
    for i in (0, 17, 55):
        seg = sy.orbit_segment(sy.CatMap(), g.point(i), -3, 3)
        assert tab[i, :, 0].tolist() == [float(q.p) for q in seg]
        assert tab[i, :, 1].tolist() == [float(q.q) for q in seg]


def test_golden_constant():
    assert sy.GOLDEN == pytest.approx((math.sqrt(5) - 1) / 2)
