from fractions import Fraction

import numpy as np
import pytest

from proxlab import measures as me
from proxlab import systems as sy
from proxlab.proximal import HorizonParams
from proxlab.spaces import Circle, Interval, Product, ProductPoint, build_grid

I, C = Interval(), Circle()


def _random_measure(rng, space, k):
    return me.make_atomic(list(rng.random(k)), rng.random(k) + 0.1, space)


# --- construction -----------------------------------------------------------------


def test_make_atomic_examples():
    mu = me.make_atomic([0.5], [1])
    assert mu.atoms == [(0.5, 1.0)]
    assert me.make_atomic([0.2, 0.4], [2, 2]).weights.tolist() == [0.5, 0.5]
    g = build_grid(I, 0.1)
    assert np.allclose(me.lebesgue_grid(g).weights, 1 / g.size)


def test_make_atomic_errors():
    with pytest.raises(ValueError):
        me.make_atomic([])
    with pytest.raises(ValueError):
        me.make_atomic([0.1, 0.2], [1, 0])
    with pytest.raises(ValueError):
        me.make_atomic([0.1], [1, 2])


def test_weights_sum_to_one():
    rng = np.random.default_rng(0)
    mu = _random_measure(rng, C, 37)
    assert abs(mu.weights.sum() - 1) <= 1e-12


# --- pushforward and averaging ------------------------------------------------------


def test_pushforward_examples():
    f = sy.SqrtInterval()
    assert me.pushforward(me.dirac(I, 0.25), f, 1).points == [0.5]
    g = build_grid(C, 0.25)
    mu = me.pushforward(me.lebesgue_grid(g), sy.Rotation(0.1), 1)
    assert mu.points == pytest.approx([0.1, 0.35, 0.6, 0.85])
    assert mu.weights.tolist() == [0.25] * 4
    nu = me.pushforward(mu, sy.Rotation(0.1), 0)
    assert nu.points == mu.points and nu.weights.tolist() == mu.weights.tolist()


def test_pushforward_space_mismatch():
    with pytest.raises(ValueError):
        me.pushforward(me.dirac(C, 0.1), sy.SqrtInterval(), 1)


def test_pushforward_mass_and_exact_inverse():
    f = sy.Rotation(Fraction(2, 7))
    mu = me.make_atomic([Fraction(1, 3), Fraction(1, 5)], [1, 3], C)
    nu = me.pushforward(mu, f, 5)
    assert nu.weights.sum() == mu.weights.sum()
    back = me.pushforward(nu, f, -5)
    assert back.points == mu.points and back.weights.tolist() == mu.weights.tolist()


def test_cesaro_examples():
    mu = me.dirac(I, 0.3)
    one = me.cesaro(mu, sy.SqrtInterval(), 1)
    assert one.points == [0.3] and one.weights.tolist() == [1.0]
    avg = me.cesaro(me.dirac(C, Fraction(0)), sy.Rotation(Fraction(1, 3)), 3)
    assert sorted(avg.points) == [0, Fraction(1, 3), Fraction(2, 3)]
    assert np.allclose(avg.weights, 1 / 3)
    assert me.invariance_defect(avg, sy.Rotation(Fraction(1, 3))) == 0


def test_cesaro_sqrt_interval_concentrates_near_one():
    avg = me.cesaro(me.dirac(I, 0.5), sy.SqrtInterval(), 40, bin_h=0.01)
    near = sum(w for p, w in avg.atoms if abs(p - 1) <= 0.05)
    assert near >= 0.9
    assert len(avg) < 40


def test_cesaro_errors():
    with pytest.raises(ValueError):
        me.cesaro(me.dirac(I, 0.5), sy.SqrtInterval(), 0)
    with pytest.raises(ValueError):
        me.cesaro(me.dirac(I, 0.5), sy.SqrtInterval(), 3, bin_h=-1)


def test_coalesce_keeps_atoms_distinct_and_mass():
    rng = np.random.default_rng(4)
    mu = _random_measure(rng, C, 200)
    merged = me.coalesce(mu, 0.05)
    assert abs(merged.weights.sum() - 1) <= 1e-12
    pts = np.array(merged.points)
    d = C.dist_coords(pts[:, None, None], pts[None, :, None])
    assert np.all(d[~np.eye(len(pts), dtype=bool)] > 0)


# --- transport -------------------------------------------------------------------


def test_w1_examples():
    mu = me.make_atomic([0.1, 0.7], [1, 2])
    assert me.w1(I, mu, mu) == 0
    assert me.w1(I, me.dirac(I, 0.2), me.dirac(I, 0.9)) == pytest.approx(0.7)
    assert me.w1(C, me.dirac(C, 0.1), me.dirac(C, 0.9)) == pytest.approx(0.2)
    assert me.w1(I, me.make_atomic([0.0, 1.0]), me.dirac(I, 0.5)) == pytest.approx(0.5)


def test_w1_too_many_atoms():
    g = build_grid(I, 1 / 3000)
    mu = me.lebesgue_grid(g)
    with pytest.raises(ValueError, match="bin_h"):
        me.w1(I, mu, mu)


def test_w1_metric_axioms():
    rng = np.random.default_rng(7)
    for space in (I, C):
        for _ in range(50):
            a, b, c = (_random_measure(rng, space, int(rng.integers(1, 8))) for _ in range(3))
            ab, bc, ac = me.w1(space, a, b), me.w1(space, b, c), me.w1(space, a, c)
            assert me.w1(space, b, a) == ab
            assert ac <= ab + bc + 1e-9
            assert me.w1(space, a, a) == 0


def test_w1_lp_agrees_with_1d():
    rng = np.random.default_rng(8)
    for space in (I, C):
        for _ in range(25):
            a = _random_measure(rng, space, int(rng.integers(1, 10)))
            b = _random_measure(rng, space, int(rng.integers(1, 10)))
            assert abs(me.w1(space, a, b, "lp") - me.w1(space, a, b, "1d")) <= 1e-9


def test_w1_on_product_uses_lp():
    P = Product(I, C)
    a = me.make_atomic([ProductPoint(0.1, 0.2)], space=P)
    b = me.make_atomic([ProductPoint(0.4, 0.9)], space=P)
    assert me.w1(P, a, b) == pytest.approx(0.3)
    with pytest.raises(ValueError):
        me.w1(P, a, b, "1d")


def test_invariance_defect_examples():
    g = build_grid(C, 0.01)
    assert me.invariance_defect(me.lebesgue_grid(g), sy.Rotation(sy.GOLDEN)) <= 0.01
    assert me.invariance_defect(me.dirac(I, 1.0), sy.SqrtInterval()) == 0
    assert me.invariance_defect(me.dirac(I, 0.5), sy.SqrtInterval()) == pytest.approx(0.5**0.5 - 0.5)


def test_support_examples():
    assert me.support(me.dirac(I, 0.3)) == [0.3]
    avg = me.cesaro(me.dirac(I, 0.5), sy.SqrtInterval(), 200, bin_h=0.01)
    supp = me.support(avg, tol=0.01, bin_h=0.01)
    assert supp and all(abs(p - 1) <= 0.05 for p in supp)
    g = build_grid(I, 0.1)
    assert me.support(me.lebesgue_grid(g)) == g.points
    with pytest.raises(ValueError):
        me.support(me.dirac(I, 0.3), tol=-1)


# --- measure tests ---------------------------------------------------------------------

SQRT_ROT = sy.sqrt_times_rotation()
SMALL = HorizonParams(N=30, eps=1e-3)


@pytest.fixture(scope="module")
def ex27_grid():
    return build_grid(SQRT_ROT.space, 1 / 20)


def test_inner_distal_test_examples(ex27_grid):
    rep = me.inner_distal_measure_test(me.lebesgue_grid(ex27_grid), SQRT_ROT, ex27_grid, SMALL)
    assert rep.verdict == "PASS" and rep.max_mass == 0
    gi = build_grid(I, 1 / 100)
    rep = me.inner_distal_measure_test(me.lebesgue_grid(gi), sy.SqrtInterval(), gi, SMALL)
    assert rep.verdict == "FAIL" and rep.max_mass >= 0.9
    rep = me.inner_distal_measure_test(me.dirac(I, 0.0), sy.SqrtInterval(), gi, SMALL)
    assert rep.verdict == "FAIL" and rep.max_mass == 1.0
    assert rep.witness["center_index"] == 0


def test_report_json_shape():
    gi = build_grid(I, 1 / 50)
    rep = me.inner_distal_measure_test(me.lebesgue_grid(gi), sy.NorthSouth(), gi, SMALL)
    obj = rep.to_json()
    assert obj["verdict"] == "PASS"
    assert obj["max_mass"] == max(obj["per_center"]["mass"])
    assert len(obj["per_center"]["center"]) == gi.size


def test_meagre_expansive_examples():
    g = build_grid(C, 1 / 100)
    rep = me.meagre_expansive_measure_test(me.lebesgue_grid(g), sy.Rotation(sy.GOLDEN), g, delta=0.1, N=20)
    assert rep.verdict == "FAIL"
    assert rep.max_mass == pytest.approx(0.2 - 2 * 3 / 100, abs=0.03)
    rep = me.meagre_expansive_measure_test(me.dirac(C, 0.5), sy.IdentityCircle(), g, delta=0.01, N=5)
    assert rep.verdict == "PASS"
    with pytest.raises(ValueError):
        me.meagre_expansive_measure_test(me.dirac(C, 0.5), sy.IdentityCircle(), g, delta=0)


def test_measure_test_space_mismatch():
    g = build_grid(C, 0.1)
    with pytest.raises(ValueError):
        me.inner_distal_measure_test(me.dirac(I, 0.5), sy.Rotation(0.1), g, SMALL)


def test_convexity_closure():
    g = build_grid(I, 1 / 100)
    f = sy.NorthSouth()
    rng = np.random.default_rng(5)
    mu = _random_measure(rng, I, 30)
    nu = _random_measure(rng, I, 30)
    ra = me.inner_distal_measure_test(mu, f, g, SMALL)
    rb = me.inner_distal_measure_test(nu, f, g, SMALL)
    assert ra.passed and rb.passed
    for t in (0.25, 0.5, 0.75):
        rm = me.inner_distal_measure_test(mu.mix(nu, t), f, g, SMALL)
        assert rm.passed
        # mass is linear in the measure
        lin = t * np.array(ra.masses) + (1 - t) * np.array(rb.masses)
        assert np.allclose(rm.masses, lin, atol=1e-12)


def test_convexity_of_failing_masses():
    g = build_grid(I, 1 / 50)
    f = sy.SqrtInterval()
    a, b = me.dirac(I, 0.3), me.dirac(I, 0.7)
    ra, rb = (me.inner_distal_measure_test(m, f, g, SMALL) for m in (a, b))
    rm = me.inner_distal_measure_test(a.mix(b, 0.25), f, g, SMALL)
    assert np.allclose(rm.masses, 0.25 * np.array(ra.masses) + 0.75 * np.array(rb.masses))


def test_pushforward_preservation(ex27_grid):
    N = 20
    mu = me.lebesgue_grid(ex27_grid)
    rep = me.inner_distal_measure_test(mu, SQRT_ROT, ex27_grid, HorizonParams(N=N, eps=1e-3))
    assert rep.passed
    nu = me.pushforward(mu, SQRT_ROT, 1)
    rep1 = me.inner_distal_measure_test(nu, SQRT_ROT, ex27_grid, HorizonParams(N=N - 1, eps=1e-3))
    assert rep1.passed


def test_portmanteau_spot_check():
    g = build_grid(C, 1 / 200)
    lam = me.lebesgue_grid(g)
    U = (0.2, 0.45)
    target = sum(w for p, w in lam.atoms if U[0] < p < U[1])
    f = sy.Rotation(sy.GOLDEN)
    vals = []
    for n in (100, 1000, 10_000):
        pts = sy.orbit_segment(f, 0.0, 0, n - 1)
        vals.append(sum(1 for p in pts if U[0] < p < U[1]) / n)
    assert min(vals) >= target - 0.01


@pytest.mark.parametrize(
    "system, x0, space",
    [(sy.Rotation(sy.GOLDEN), 0.0, C), (sy.SqrtInterval(), 0.5, I)],
)
def test_cesaro_defect_nonincreasing(system, x0, space):
    mu = me.dirac(space, x0)
    for m in (10, 20, 40):
        d1 = me.invariance_defect(me.cesaro(mu, system, m), system)
        d2 = me.invariance_defect(me.cesaro(mu, system, 2 * m), system)
        assert d2 <= d1 + 1e-9


def test_denjoy_minimal_set_measure_is_meagre_expansive():
    f = sy.Denjoy(sy.DenjoyParams())
    g = build_grid(C, 1 / 200)
    # the orbit of an endpoint of I_0 accumulates on the minimal Cantor set
    mu = me.cesaro(me.dirac(C, 0.0), f, 2000, bin_h=g.h / 4)
    for delta in (0.05, 0.1):
        assert me.meagre_expansive_measure_test(mu, f, g, delta=delta, N=60).max_mass == 0
    # the uniform measure charges the wandering arcs, whose balls have interior
    lam = me.meagre_expansive_measure_test(me.lebesgue_grid(g), f, g, delta=0.1, N=60)
    assert lam.verdict == "FAIL" and lam.max_mass >= 0.1
