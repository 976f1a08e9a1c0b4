"""Lifts, rotation numbers, periodic points and the circle classification."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from .spaces import Circle, Grid, SubsetMask, build_grid
from .systems import CircleMap, Identity, Iterate, Rotation, SystemModel, orbit_table, wrap

CONJUGATE_ROTATION_DISTAL = "CONJUGATE_ROTATION_DISTAL"
RATIONAL_WITH_PERIODIC_SET = "RATIONAL_WITH_PERIODIC_SET"
DENJOY_LIKE = "DENJOY_LIKE"

BISECT_TOL = 1e-10


def _require_circle(homeo: SystemModel) -> None:
    if not isinstance(homeo.space, Circle):
        raise TypeError(f"{homeo.id} is not a circle map")


def _lift_fn(homeo: SystemModel):
    if hasattr(homeo, "lift"):
        return homeo.lift
    # branch selection: nearest lift value to the previous value plus the mean displacement
    probe = np.linspace(0, 1, 64, endpoint=False)
    disp = [((homeo.step(t) - t + 0.5) % 1) - 0.5 for t in probe]
    mean = float(np.mean(disp))

    def lift(t):
        base = homeo.step(t % 1.0)
        target = t + mean
        return base + round(target - base)

    return lift


@dataclass
class LiftTrace:
    t0: float
    values: list
    n: int

    def circle_orbit(self) -> list:
        return [wrap(v) for v in self.values]


def lift_orbit(homeo: SystemModel, t0: float, n: int) -> LiftTrace:
    """``F^k(t0)`` for ``k = 0..n`` on one continuous branch of the lift."""
    _require_circle(homeo)
    if n < 1:
        raise ValueError("lift_orbit needs n >= 1")
    F = _lift_fn(homeo)
    vals = [t0]
    t = t0
    for _ in range(n):
        t = F(t)
        vals.append(t)
    return LiftTrace(t0, vals, n)


def rotation_number(homeo: SystemModel, t0: float = 0.0, n: int = 100_000) -> tuple[Any, float]:
    """``(F^n(t0) - t0) / n`` reduced mod 1, with error bound ``2 / n``.

    Rotations by a ``Fraction`` are iterated in rational arithmetic, which
    returns the exact rotation number.
    """
    _require_circle(homeo)
    if n < 100:
        raise ValueError("rotation_number needs n >= 100")
    if isinstance(homeo, Rotation) and isinstance(homeo.alpha, Fraction):
        t = Fraction(t0)
        end = t + n * homeo.alpha
        return ((end - t) / n) % 1, 0.0
    F = _lift_fn(homeo)
    t = t0
    for _ in range(n):
        t = F(t)
    return ((t - t0) / n) % 1.0, 2.0 / n


def rho_convergence(homeo: SystemModel, t0: float = 0.0, n: int = 100_000, points: int = 20) -> list[tuple[int, Any]]:
    """Running estimates ``(k, (F^k(t0) - t0) / k mod 1)`` at log-spaced ``k``; the last row is ``k = n``."""
    _require_circle(homeo)
    if n < 100:
        raise ValueError("rho_convergence needs n >= 100")
    checks = sorted({int(k) for k in np.geomspace(100, n, points).round()} | {n})
    if isinstance(homeo, Rotation) and isinstance(homeo.alpha, Fraction):
        return [(k, homeo.alpha % 1) for k in checks]
    F = _lift_fn(homeo)
    out = []
    t = t0
    done = 0
    for k in checks:
        for _ in range(k - done):
            t = F(t)
        done = k
        out.append((k, ((t - t0) / k) % 1.0))
    return out


def rational_approx(rho: float, qmax: int = 50, tol: float = 1e-6) -> Fraction | None:
    """Continued-fraction convergent ``p/q`` with ``q <= qmax`` and ``|rho - p/q| <= tol``."""
    if qmax < 1 or not tol > 0:
        raise ValueError("need qmax >= 1 and tol > 0")
    if isinstance(rho, Fraction) and rho.denominator <= qmax:
        return rho
    x = Fraction(rho)
    h0, h1 = 0, 1
    k0, k1 = 1, 0
    while True:
        a = math.floor(x)
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        if k1 > qmax:
            return None
        conv = Fraction(h1, k1)
        if abs(float(rho) - h1 / k1) <= tol:
            return conv % 1
        frac = x - a
        if frac == 0:
            return None
        x = 1 / frac


@dataclass
class PeriodicPoints:
    """Grid mask near ``Fix(f^p)`` plus refined root brackets."""

    mask: SubsetMask
    brackets: list[tuple[float, float]]
    p: int

    @property
    def roots(self) -> list[float]:
        return [0.5 * (a + b) for a, b in self.brackets]


def _displacement(homeo: SystemModel, p: int, t):
    F = _lift_fn(homeo)
    s = t
    for _ in range(p):
        s = F(s)
    return s - t


def periodic_points(homeo: SystemModel, p: int, grid: Grid, zero_tol: float = 1e-12) -> PeriodicPoints:
    """Locate ``Fix(f^p)`` from sign changes of ``F^p(t) - t - k`` on the grid.

    Grid points where the displacement vanishes (to ``zero_tol``) are fixed;
    sign changes between neighbouring grid points are bisected to width
    ``1e-10`` and marked at the nearest grid point.
    """
    _require_circle(homeo)
    if p < 1:
        raise ValueError("period must be positive")
    t = np.asarray(grid.coords[:, 0], dtype=float)
    if hasattr(homeo, "flift"):
        s = t.copy()
        for _ in range(p):
            s = homeo.flift(s)
        D = s - t
    else:
        D = np.array([_displacement(homeo, p, float(x)) for x in t])
    inc = np.zeros(grid.size, dtype=bool)
    brackets: list[tuple[float, float]] = []
    n = grid.size
    for k in range(math.floor(D.min() - zero_tol), math.ceil(D.max() + zero_tol) + 1):
        E = D - k
        zero = np.abs(E) <= zero_tol
        inc |= zero
        for i in np.flatnonzero(zero):
            brackets.append((float(t[i]), float(t[i])))
        for i in range(n):
            j = (i + 1) % n
            if zero[i] or zero[j] or E[i] * E[j] >= 0:
                continue
            a, b = float(t[i]), float(t[i]) + grid.spacing
            ea = E[i]
            while b - a > BISECT_TOL:
                m = 0.5 * (a + b)
                em = _displacement(homeo, p, m) - k
                if em == 0:
                    a = b = m
                    break
                if (em > 0) == (ea > 0):
                    a, ea = m, em
                else:
                    b = m
            brackets.append((a % 1.0, a % 1.0 + (b - a)))
            inc[grid.nearest(wrap(0.5 * (a + b)))] = True
    brackets.sort()
    return PeriodicPoints(grid.mask(inc), brackets, p)


def _arc_images(homeo: SystemModel, left: float, length: float, N: int) -> list[tuple[float, float]]:
    F = _lift_fn(homeo)
    a, b = left, left + length
    out = [(a % 1.0, length)]
    for _ in range(N):
        a, b = F(a), F(b)
        out.append((a % 1.0, b - a))
    return out


def _pairwise_disjoint(arcs: list[tuple[float, float]]) -> bool:
    if sum(length for _, length in arcs) > 1.0:
        return False
    arcs = sorted(arcs)
    for (s0, l0), (s1, _) in zip(arcs, arcs[1:]):
        if s0 + l0 >= s1:
            return False
    s_last, l_last = arcs[-1]
    return s_last + l_last < arcs[0][0] + 1.0


def wandering_arc_probe(homeo: SystemModel, arcs: Sequence[tuple[float, float]], N: int) -> tuple[float, float] | None:
    """First arc ``(left, right)`` whose images ``f^n(J)``, ``0 <= n <= N``, are pairwise disjoint.

    Arcs run counterclockwise from ``left`` to ``right``.
    """
    _require_circle(homeo)
    for left, right in arcs:
        length = (right - left) % 1.0
        if length <= 0:
            raise ValueError("arcs must be nondegenerate")
        if _pairwise_disjoint(_arc_images(homeo, left, length, N)):
            return (left, right)
    return None


@dataclass
class ClassifyParams:
    n_rho: int = 100_000
    t0: float = 0.0
    qmax: int = 50
    tol: float = 1e-6
    grid_h: float = 1 / 200
    arc_count: int = 20
    arc_horizon: int = 50
    extra_arcs: tuple = ()


@dataclass
class ClassificationResult:
    rho: Any
    error: float
    rational: Fraction | None
    cls: str
    witness: Any = None
    evidence: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        rho = f"{self.rho.numerator}/{self.rho.denominator}" if isinstance(self.rho, Fraction) else float(self.rho)
        return {
            "rho": rho,
            "error": self.error,
            "rational": None if self.rational is None else f"{self.rational.numerator}/{self.rational.denominator}",
            "class": self.cls,
            "witness": None if self.witness is None else list(self.witness),
            "evidence": self.evidence,
        }


def classify_circle(homeo: SystemModel, params: ClassifyParams | None = None) -> ClassificationResult:
    """Rational rotation number -> periodic set; irrational -> wandering-arc probe."""
    _require_circle(homeo)
    params = params or ClassifyParams()
    rho, err = rotation_number(homeo, params.t0, params.n_rho)
    rat = rational_approx(rho, params.qmax, max(params.tol, err))
    evidence: dict = {"rule": {"qmax": params.qmax, "tol": params.tol}, "n": params.n_rho}
    if rat is not None:
        grid = build_grid(Circle(), params.grid_h)
        per = periodic_points(homeo, rat.denominator, grid)
        evidence["periodic_count"] = per.mask.count
        evidence["grid_size"] = grid.size
        evidence["periodic_mask"] = per.mask.to_json()
        return ClassificationResult(rho, err, rat, RATIONAL_WITH_PERIODIC_SET, None, evidence)
    m = params.arc_count
    arcs = [(k / m, (k + 1) / m) for k in range(m)] + list(params.extra_arcs)
    witness = wandering_arc_probe(homeo, arcs, params.arc_horizon)
    evidence["arcs_probed"] = len(arcs)
    evidence["arc_horizon"] = params.arc_horizon
    cls = DENJOY_LIKE if witness is not None else CONJUGATE_ROTATION_DISTAL
    return ClassificationResult(rho, err, None, cls, witness, evidence)


def nonwandering_points(system: SystemModel, grid: Grid, r: float, N: int) -> SubsetMask:
    """Grid points ``x`` with some ``y`` in ``B(x, r)`` and ``1 <= n <= N`` such that ``f^n(y)`` lies in ``B(x, r)``."""
    if r < grid.spacing:
        raise ValueError("r must be at least the grid spacing")
    if grid.space.is_float:
        tab = orbit_table(system, grid.points, 1, N) if not grid.is_lattice or not system.vectorized else None
        if tab is None:
            from .systems import _float_table

            tab = _float_table(system, grid.coords, 1, N)
        C = grid.coords
        inc = np.zeros(grid.size, dtype=bool)
        for i in range(grid.size):
            nb = grid.neighbors(i, r)
            d = grid.space.dist_coords(tab[nb], C[i][None, None, :])
            inc[i] = bool((d <= r + 1e-15).any())
        return grid.mask(inc)
    pts = grid.points
    inc = np.zeros(grid.size, dtype=bool)
    for i, x in enumerate(pts):
        for j in grid.neighbors(i, r):
            y = pts[j]
            for _ in range(N):
                y = system.step(y)
                if grid.space.dist(y, x) <= r:
                    inc[i] = True
                    break
            if inc[i]:
                break
    return grid.mask(inc)
