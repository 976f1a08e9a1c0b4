"""
Rotation numbers and the circle classification
==============================================
"""

from fractions import Fraction

from proxlab import circle as ci
from proxlab import systems as sy

for name, f in [
    ("rotation 1/3", sy.Rotation(Fraction(1, 3))),
    ("golden rotation", sy.Rotation(sy.GOLDEN)),
    ("sine circle map", sy.SineCircleMap(0.1)),
    ("Denjoy", sy.Denjoy(sy.DenjoyParams())),
]:
    rho, err = ci.rotation_number(f, 0.0, 20_000)
    res = ci.classify_circle(f, ci.ClassifyParams(n_rho=20_000))
    print(f"{name:16s} rho={float(rho):.6f} (+-{err:.0e})  {res.cls}  witness={res.witness}")

# Convergence of the running estimate for the Denjoy map.
for k, est in ci.rho_convergence(sy.Denjoy(sy.DenjoyParams()), 0.0, 100_000, points=6):
    print(f"  k={k:6d}  estimate={est:.7f}")

# A rational approximation is only reported when it is within tolerance.
print("rational_approx(0.333334) ->", ci.rational_approx(0.333334, 10, 1e-3))
print("rational_approx(golden)   ->", ci.rational_approx(sy.GOLDEN, 50, 1e-9))
