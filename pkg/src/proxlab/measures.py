"""Atomic Borel probability measures and the measure-theoretic tests."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .proximal import HorizonParams, OrbitTable, _interior
from .spaces import Circle, Grid, Interval, Space, mask_mass_indices
from .systems import SystemModel, apply

MAX_ATOMS = 5000


@dataclass(eq=False)
class AtomicMeasure:
    space: Space
    points: list
    weights: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if len(self.points) != self.weights.size:
            raise ValueError("points and weights differ in length")

    def __len__(self) -> int:
        return len(self.points)

    @property
    def atoms(self) -> list[tuple[Any, float]]:
        return list(zip(self.points, self.weights.tolist()))

    def coords(self) -> np.ndarray:
        return self.space.coords_array(self.points)

    def mix(self, other: AtomicMeasure, t: float) -> AtomicMeasure:
        """``t * self + (1 - t) * other`` (atoms concatenated, equal atoms merged)."""
        return coalesce(
            AtomicMeasure(
                self.space,
                list(self.points) + list(other.points),
                np.concatenate([t * self.weights, (1 - t) * other.weights]),
            ),
            0.0,
        )

    def to_json(self) -> dict:
        return {
            "space": self.space.to_json(),
            "atoms": [[self.space.point_to_json(p), float(w)] for p, w in zip(self.points, self.weights)],
        }


def make_atomic(points: Sequence[Any], weights: Sequence[float] | None = None, space: Space | None = None) -> AtomicMeasure:
    """Normalized atomic measure; ``space`` defaults to the interval for bare numbers."""
    if len(points) == 0:
        raise ValueError("a measure needs at least one atom")
    if weights is None:
        weights = np.ones(len(points))
    w = np.asarray(weights, dtype=float)
    if w.size != len(points):
        raise ValueError("points and weights differ in length")
    if np.any(w <= 0):
        raise ValueError("atom weights must be positive")
    if space is None:
        space = Interval()
    for p in points:
        space.validate(p)
    return AtomicMeasure(space, list(points), w / w.sum())


def lebesgue_grid(grid: Grid) -> AtomicMeasure:
    """Uniform measure on the grid points."""
    return make_atomic(grid.points, np.ones(grid.size), grid.space)


def dirac(space: Space, x: Any) -> AtomicMeasure:
    return make_atomic([x], [1.0], space)


def pushforward(mu: AtomicMeasure, system: SystemModel, k: int = 1) -> AtomicMeasure:
    if system.space != mu.space:
        raise ValueError("measure and system live on different spaces")
    return AtomicMeasure(mu.space, [apply(system, p, k) for p in mu.points], mu.weights.copy())


def coalesce(mu: AtomicMeasure, bin_h: float) -> AtomicMeasure:
    """Merge atoms within ``bin_h`` of a seed atom (heaviest atoms seed first).

    The merged location is the weight-averaged position, unwrapped around
    the seed on circle axes and projected back into the space.  With
    ``bin_h == 0`` only equal atoms merge and locations are kept exactly.
    """
    space = mu.space
    n = len(mu.points)
    order = sorted(range(n), key=lambda i: (-mu.weights[i], i))
    if bin_h == 0 or not space.is_float:
        groups: dict[Any, float] = {}
        reps: dict[Any, Any] = {}
        if bin_h == 0:
            for i in order:
                p = mu.points[i]
                groups[p] = groups.get(p, 0.0) + mu.weights[i]
                reps.setdefault(p, p)
            keys = list(groups)
            return AtomicMeasure(space, [reps[k] for k in keys], np.array([groups[k] for k in keys]))
        taken = np.zeros(n, dtype=bool)
        pts, ws = [], []
        for i in order:
            if taken[i]:
                continue
            members = [j for j in order if not taken[j] and space.dist(mu.points[i], mu.points[j]) <= bin_h]
            for j in members:
                taken[j] = True
            pts.append(mu.points[i])
            ws.append(sum(mu.weights[j] for j in members))
        return AtomicMeasure(space, pts, np.array(ws))
    C = mu.coords()
    axes = space.axes
    taken = np.zeros(n, dtype=bool)
    pts, ws = [], []
    for i in order:
        if taken[i]:
            continue
        free = np.flatnonzero(~taken)
        d = space.dist_coords(C[free], C[i][None, :])
        members = free[d <= bin_h]
        taken[members] = True
        w = mu.weights[members]
        diff = C[members] - C[i]
        for j, kind in enumerate(axes):
            if kind == "circle":
                diff[:, j] = (diff[:, j] + 0.5) % 1.0 - 0.5
        loc = C[i] + (w[:, None] * diff).sum(axis=0) / w.sum()
        pts.append(mu.points[i] if members.size == 1 else space.from_coords(loc))
        ws.append(w.sum())
    return coalesce(AtomicMeasure(space, pts, np.array(ws)), 0.0)


def cesaro(mu: AtomicMeasure, system: SystemModel, n: int, bin_h: float = 0.0) -> AtomicMeasure:
    """``(1/n) sum_{k<n} f^k_* mu``, then coalesced at scale ``bin_h``."""
    if n < 1:
        raise ValueError("cesaro needs n >= 1")
    if bin_h < 0:
        raise ValueError("bin_h must be nonnegative")
    pts, ws = [], []
    for p, w in zip(mu.points, mu.weights):
        y = p
        for _ in range(n):
            pts.append(y)
            ws.append(w / n)
            y = system.step(y)
    return coalesce(AtomicMeasure(mu.space, pts, np.array(ws)), bin_h)


# ---------------------------------------------------------------------------
# Wasserstein-1
# ---------------------------------------------------------------------------


def _w1_interval(x: np.ndarray, a: np.ndarray, y: np.ndarray, b: np.ndarray) -> float:
    pts = np.concatenate([x, y])
    order = np.argsort(pts, kind="mergesort")
    signed = np.concatenate([a, -b])[order]
    cdf = np.cumsum(signed)[:-1]
    gaps = np.diff(pts[order])
    return float(np.abs(cdf) @ gaps)


def _w1_circle(x: np.ndarray, a: np.ndarray, y: np.ndarray, b: np.ndarray) -> float:
    """Circle W1: ``min_c int_0^1 |F(t) - G(t) - c| dt``, minimized at a weighted median."""
    pts = np.concatenate([x % 1.0, y % 1.0])
    order = np.argsort(pts, kind="mergesort")
    s = pts[order]
    signed = np.concatenate([a, -b])[order]
    cdf = np.cumsum(signed)
    lengths = np.diff(np.concatenate([s, [s[0] + 1.0]]))
    keep = lengths > 0
    vals, lens = cdf[keep], lengths[keep]
    if vals.size == 0:
        return 0.0
    o = np.argsort(vals, kind="mergesort")
    cum = np.cumsum(lens[o])
    c = vals[o][np.searchsorted(cum, 0.5 * cum[-1])]
    return float(np.abs(vals - c) @ lens)


def _w1_lp(space: Space, mu: AtomicMeasure, nu: AtomicMeasure) -> float:
    m, n = len(mu), len(nu)
    if space.is_float:
        M = space.dist_coords(mu.coords()[:, None, :], nu.coords()[None, :, :])
    else:
        M = np.array([[space.dist(p, q) for q in nu.points] for p in mu.points])
    rows = sparse.kron(sparse.eye(m), np.ones((1, n)))
    cols = sparse.kron(np.ones((1, m)), sparse.eye(n))
    A = sparse.vstack([rows, cols]).tocsr()
    b = np.concatenate([mu.weights, nu.weights])
    # both marginals sum to 1; drop one redundant equation
    res = linprog(M.ravel(), A_eq=A[:-1], b_eq=b[:-1], bounds=(0, None), method="highs")
    if res.status != 0:
        raise RuntimeError(f"transport LP failed: {res.message}")
    return float(res.fun)


def w1(space: Space, mu: AtomicMeasure, nu: AtomicMeasure, method: str = "auto") -> float:
    """Exact Wasserstein-1 distance between atomic measures.

    ``method`` is ``"auto"`` (1-D formula on the interval and circle, LP
    otherwise), ``"lp"`` or ``"1d"``.
    """
    if mu.space != space or nu.space != space:
        raise ValueError("measures must live on the given space")
    if len(mu) + len(nu) > MAX_ATOMS:
        raise ValueError(
            f"{len(mu) + len(nu)} atoms exceed the transport limit {MAX_ATOMS}; coalesce with a larger bin_h"
        )
    one_d = isinstance(space, (Interval, Circle))
    if method == "1d" or (method == "auto" and one_d):
        if not one_d:
            raise ValueError("the 1-D formula only applies to the interval and the circle")
        x, y = mu.coords()[:, 0], nu.coords()[:, 0]
        f = _w1_interval if isinstance(space, Interval) else _w1_circle
        return max(0.0, f(x, mu.weights, y, nu.weights))
    return max(0.0, _w1_lp(space, mu, nu))


def invariance_defect(mu: AtomicMeasure, system: SystemModel, method: str = "auto") -> float:
    """``W1(mu, f_* mu)``."""
    return w1(mu.space, mu, pushforward(mu, system, 1), method)


def support(mu: AtomicMeasure, tol: float = 0.0, bin_h: float = 0.0) -> list:
    """Atom locations with weight above ``tol`` after coalescing at ``bin_h``."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    merged = coalesce(mu, bin_h)
    return [p for p, w in zip(merged.points, merged.weights) if w > tol]


def mass_of(mu: AtomicMeasure, grid: Grid, idx: np.ndarray) -> float:
    """Mass of atoms lying within half a grid spacing of the grid points ``idx``."""
    inc = np.zeros(grid.size, dtype=bool)
    inc[idx] = True
    return _mass(mu, grid, inc)


def _incidence(mu: AtomicMeasure, grid: Grid) -> sparse.csr_matrix:
    if grid.is_lattice:
        near = mask_mass_indices(grid, mu.coords(), grid.spacing / 2)
    else:
        near = [
            np.array([j for j, q in enumerate(grid.points) if grid.space.dist(p, q) <= grid.spacing / 2 + 1e-15])
            for p in mu.points
        ]
    rows = np.concatenate([np.full(len(v), i) for i, v in enumerate(near)]) if near else np.zeros(0)
    cols = np.concatenate(near) if near else np.zeros(0)
    return sparse.csr_matrix(
        (np.ones(len(cols)), (rows.astype(int), cols.astype(int))), shape=(len(mu), grid.size)
    )


def _mass(mu: AtomicMeasure, grid: Grid, inc: np.ndarray, A: sparse.csr_matrix | None = None) -> float:
    A = _incidence(mu, grid) if A is None else A
    hit = (A @ inc.astype(float)) > 0
    return float(mu.weights[hit].sum())


# ---------------------------------------------------------------------------
# Measure tests
# ---------------------------------------------------------------------------


@dataclass
class MeasureTestReport:
    system_id: str
    measure_id: str
    params: dict
    centers: list[int]
    masses: list[float]
    max_mass: float
    tol: float
    witness: dict | None = None
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.max_mass <= self.tol

    @property
    def verdict(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def to_json(self) -> dict:
        return {
            "system": self.system_id,
            "measure": self.measure_id,
            "params": self.params,
            "tol": self.tol,
            "max_mass": self.max_mass,
            "verdict": self.verdict,
            "witness": self.witness,
            "per_center": {"center": self.centers, "mass": self.masses},
        }


def _sweep(mu, system, grid, which, scale, N, r, side, tol, measure_id, params):
    if mu.space != grid.space or system.space != grid.space:
        raise ValueError("measure, system and grid must share one space")
    nmin = -N if side == "two_sided" else 0
    T = OrbitTable(system, nmin, N, grid=grid)
    A = _incidence(mu, grid)
    atom_grid = np.asarray(A.sum(axis=0)).ravel() > 0
    cache: dict = {}
    masses = []
    best = (-1.0, None)
    for c in range(grid.size):
        inner = _interior(T, grid, which, T, c, scale, r, cache)
        if inner.size == 0 or not atom_grid[inner].any():
            m = 0.0
        else:
            inc = np.zeros(grid.size, dtype=bool)
            inc[inner] = True
            m = _mass(mu, grid, inc, A)
        masses.append(m)
        if m > best[0]:
            best = (m, c)
    max_mass = max(masses) if masses else 0.0
    witness = None
    if best[1] is not None and max_mass > 0:
        witness = {"center": grid.space.point_to_json(grid.point(best[1])), "center_index": int(best[1]), "mass": max_mass}
    return MeasureTestReport(system.id, measure_id, params, list(range(grid.size)), masses, max_mass, tol, witness)


def inner_distal_measure_test(
    mu: AtomicMeasure,
    system: SystemModel,
    grid: Grid,
    params: HorizonParams | None = None,
    tol: float = 0.01,
    measure_id: str = "mu",
) -> MeasureTestReport:
    """Largest mass carried by the r-interior of a proximal-cell estimate; PASS iff ``<= tol``."""
    params = (params or HorizonParams()).resolved(grid)
    return _sweep(mu, system, grid, "cell", params.eps, params.N, params.r, "two_sided", tol, measure_id, params.to_json())


def meagre_expansive_measure_test(
    mu: AtomicMeasure,
    system: SystemModel,
    grid: Grid,
    delta: float = 0.05,
    N: int = 60,
    r: float | None = None,
    tol: float = 0.01,
    side: str = "two_sided",
    measure_id: str = "mu",
) -> MeasureTestReport:
    """Same sweep with dynamic balls of radius ``delta`` in place of proximal cells."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    if side not in ("two_sided", "forward"):
        raise ValueError(f"unknown side {side!r}")
    r = 3 * grid.h if r is None else r
    params = {"delta": delta, "N": N, "r": r, "side": side}
    return _sweep(mu, system, grid, "ball", delta, N, r, side, tol, measure_id, params)
