"""
Spaces, metrics and finite grids
================================

Every computation in proxlab happens on a finite grid that is an h-net of a
compact metric space.  This script builds a few of them.
"""

from fractions import Fraction

import numpy as np

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
    interior_points,
)

# The circle wraps around, the interval does not.
print("circle   d(0.1, 0.9) =", Circle().dist(0.1, 0.9))
print("interval d(0.1, 0.9) =", Interval().dist(0.1, 0.9))

# Products use the max metric.
P = Product(Interval(), Circle())
print("product  d =", P.dist(ProductPoint(0.1, 0.0), ProductPoint(0.3, 0.95)))

# Torus points are exact rationals.
T = Torus()
x = TorusPoint(Fraction(1, 10), Fraction(1, 2))
y = TorusPoint(Fraction(9, 10), Fraction(3, 5))
print("torus    d =", T.exact_dist(x, y))

# Eventually periodic binary sequences have a canonical form, so two
# spellings of the same sequence compare equal.
B = BinarySeqSpace()
a = BinarySeqPoint("0", "1", "0", 3)
b = BinarySeqPoint("00", "0001", "000", 0)
print("same sequence:", a == b, " d(0^inf, a) =", B.dist(BinarySeqPoint.constant("0"), a))

# A grid on the interval x circle; the largest gap to a random point is <= h.
g = build_grid(P, 0.05)
pts = np.random.default_rng(0).random((2000, 2))
gap = P.dist_coords(pts[:, None, :], g.coords[None, :, :]).min(axis=1).max()
print(f"grid of {g.size} points, worst covering distance {gap:.4f}")

# Interiors at scale r and chain components.  A fiber {x} x S^1 has no interior.
fiber = g.mask(g.coords[:, 0] == 0.5)
print("fiber size", fiber.count, "interior", interior_points(fiber, 0.15).count)
strip = g.mask(np.abs(g.coords[:, 0] - 0.5) <= 0.2)
print("strip interior", interior_points(strip, 0.15).count, "components", len(chain_components(strip, 0.05)))
