"""
Proximal cells and the inner-distal certificate
===============================================

For the interval x circle map (sqrt, golden rotation) the proximal cell of
(x, y) is the fiber through y, which has empty interior.  For the sqrt map
alone, every point of (0, 1) is proximal to every other, and the certificate
finds a cell with large interior.
"""

import numpy as np

from proxlab import proximal as px
from proxlab import systems as sy
from proxlab.spaces import Interval, ProductPoint, build_grid

f = sy.sqrt_times_rotation()
g = build_grid(f.space, 1 / 40)
x = ProductPoint(0.5, 0.25)
cell = px.proximal_cell(f, x, g, 40, 1e-3)
xs = np.unique(g.coords[cell.included][:, 0])
ys = np.unique(g.coords[cell.included][:, 1])
print(f"cell of (0.5, 0.25): {cell.count} points, first coords span [{xs.min()}, {xs.max()}], second coords {ys}")

cert = px.inner_distal_certificate(f, g, px.HorizonParams(N=40, eps=1e-3))
print("interval x circle:", cert.verdict, "| ball route:", cert.ball_route["verdict"])

gi = build_grid(Interval(), 1 / 100)
cert = px.inner_distal_certificate(sy.SqrtInterval(), gi, px.HorizonParams(N=40, eps=1e-3))
print("sqrt interval:", cert.verdict, "witness component diam", cert.witness["component_diam"])

# Diameter of a fiber segment under backward iteration: x -> x^(2^|n|) collapses it.
seg = [ProductPoint(float(t), 0.0) for t in np.linspace(0.2, 0.8, 201)]
dec = px.diam_decay(f, seg, 12)
for n, dval in dec.trace[:7]:
    print(f"  n={n:4d}  diam={dval:.3e}")

# Dynamic balls of an isometry are plain balls.
gc = build_grid(sy.Rotation(sy.GOLDEN).space, 1 / 100)
ball = px.dynamic_ball(sy.Rotation(sy.GOLDEN), 0.5, gc, 0.105, 20)
print("rotation dynamic ball of radius 0.105:", ball.count, "grid points")
