"""
Atomic measures, transport and the measure tests
================================================
"""

from fractions import Fraction

from proxlab import measures as me
from proxlab import systems as sy
from proxlab.proximal import HorizonParams
from proxlab.spaces import Circle, Interval, build_grid

I = Interval()

# Wasserstein-1 on the interval: the CDF formula and the LP agree.
mu = me.make_atomic([0.0, 1.0])
nu = me.dirac(I, 0.5)
print("W1(uniform{0,1}, delta_0.5) =", me.w1(I, mu, nu), "| LP:", round(me.w1(I, mu, nu, "lp"), 12))

# Cesaro averages drift toward the invariant measure delta_1.
f = sy.SqrtInterval()
for n in (10, 50, 200):
    avg = me.cesaro(me.dirac(I, 0.5), f, n)
    near = sum(w for p, w in avg.atoms if abs(p - 1) <= 0.05)
    print(f"n={n:4d} defect={me.invariance_defect(avg, f):.4f} mass near 1={near:.3f}")

# A period-3 orbit average is exactly invariant.
r = sy.Rotation(Fraction(1, 3))
print("rotation 1/3 orbit average defect:", me.invariance_defect(me.cesaro(me.dirac(Circle(), Fraction(0)), r, 3), r))

# The inner-distal measure test on the three interval models.
g = build_grid(I, 1 / 200)
lam = me.lebesgue_grid(g)
for h in (sy.IdentityInterval(), sy.NorthSouth(), sy.SqrtInterval()):
    rep = me.inner_distal_measure_test(lam, h, g, HorizonParams())
    print(f"{h.id:18s} {rep.verdict} max mass {rep.max_mass:.3f}")
