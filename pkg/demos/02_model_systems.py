"""
Model homeomorphisms
====================

The catalogue of exactly evaluable maps, iterated forward and backward.
"""

from fractions import Fraction

import numpy as np

from proxlab import systems as sy
from proxlab.spaces import BinarySeqPoint, TorusPoint

f = sy.SqrtInterval()
print("sqrt interval orbit of 0.5, n = -3..3:")
print(np.round(sy.orbit_segment(f, 0.5, -3, 3), 5))

# An irrational rotation never returns exactly.
r = sy.Rotation(sy.GOLDEN)
print("golden rotation:", np.round(sy.orbit_segment(r, 0.0, 0, 5), 4))

# The cat map works on exact rationals, so long round trips are exact.
cat = sy.CatMap()
z = TorusPoint(Fraction(3, 7), Fraction(5, 11))
print("cat map f^-40 f^40 z == z:", sy.apply(cat, sy.apply(cat, z, 40), -40) == z)

# Shift on eventually periodic sequences.
s = sy.Shift()
x = BinarySeqPoint("0", "1", "0", 0)
print("shift moves the 1 to position", [n for n in range(-5, 6) if sy.apply(s, x, 2)[n] == "1"])

# A Denjoy map: wandering arcs I_n with lengths summing to one half.
d = sy.Denjoy(sy.DenjoyParams(sy.GOLDEN, 20, 0.5))
print("Denjoy arc I_0 =", tuple(round(t, 4) for t in d.arc(0)), " f(I_0) =", tuple(round(t, 4) for t in d.arc(1)))
print("homeomorphism check:", sy.check_homeo(d, list(np.linspace(0, 0.99, 100)), tol=1e-9)["passed"])

# Products act componentwise; descriptors round-trip through JSON.
p = sy.sqrt_times_rotation()
print("product descriptor:", p.to_json())
