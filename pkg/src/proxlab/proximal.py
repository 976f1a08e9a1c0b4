"""Finite-horizon estimators for proximal cells, dynamic balls and diameter decay.

The infimum over all iterates is replaced by a window ``|n| <= N``.  All
sweeps run on :class:`OrbitTable` objects, which tabulate the orbit of
every grid point once.  For product systems on product grids the table
keeps one sub-table per factor; because the metric is the max metric,

* the proximal cell of ``(x, y)`` lies inside the product of the factor
  cells (used to prune candidates, never to decide membership), and
* dynamic balls and grid balls are exactly products of factor balls.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

from .spaces import (
    BinarySeqPoint,
    Grid,
    SubsetMask,
    chain_components,
    diam,
    interior_points,
)
from .systems import Product, SystemModel, _float_table, orbit_segment, orbit_table

CONSISTENT = "CONSISTENT_WITH_INNER_DISTAL"
REFUTED = "REFUTED"


@dataclass(frozen=True)
class HorizonParams:
    """Iteration horizon and discretization scales (metric units).

    ``r`` and ``step`` default to ``3 h`` and ``h`` of the grid they are used on.
    """

    N: int = 60
    eps: float = 1e-3
    r: float | None = None
    step: float | None = None
    delta: float = 0.05

    def resolved(self, grid: Grid) -> HorizonParams:
        r = 3 * grid.h if self.r is None else self.r
        step = grid.h if self.step is None else self.step
        out = HorizonParams(self.N, self.eps, r, step, self.delta)
        out.validate(grid)
        return out

    def validate(self, grid: Grid | None = None) -> None:
        if self.N < 1:
            raise ValueError("horizon N must be at least 1")
        if not self.eps > 0 or not self.delta > 0:
            raise ValueError("eps and delta must be positive")
        if grid is not None and self.r is not None and self.r < grid.spacing:
            raise ValueError("interior scale r must be at least the grid spacing")
        if grid is not None and self.step is not None and self.step < grid.spacing:
            raise ValueError("chain step must be at least the grid spacing")

    def to_json(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# Orbit tables
# ---------------------------------------------------------------------------


class OrbitTable:
    """Orbits ``f^n(p)``, ``nmin <= n <= nmax``, of a grid or of a point list."""

    def __init__(
        self,
        system: SystemModel,
        nmin: int,
        nmax: int,
        grid: Grid | None = None,
        points: Sequence[Any] | None = None,
    ):
        self.system = system
        self.space = system.space
        self.nmin, self.nmax = nmin, nmax
        self.grid = grid
        self.left = self.right = None
        self.nr: int | None = None
        self.coords: np.ndarray | None = None
        self.orbits: list[list] | None = None
        if isinstance(system, Product) and grid is not None and grid.factors is not None:
            gl, gr = grid.factors
            self.left = OrbitTable(system.f, nmin, nmax, grid=gl)
            self.right = OrbitTable(system.g, nmin, nmax, grid=gr)
            self.nr = gr.size
            self.size = grid.size
        elif isinstance(system, Product) and points is not None:
            self.left = OrbitTable(system.f, nmin, nmax, points=[p.a for p in points])
            self.right = OrbitTable(system.g, nmin, nmax, points=[p.b for p in points])
            self.size = len(points)
        else:
            if grid is not None and grid.is_lattice and system.vectorized:
                self.coords = _float_table(system, grid.coords, nmin, nmax)
                self.size = grid.size
                return
            pts = grid.points if grid is not None else list(points)
            self.size = len(pts)
            if self.space.is_float:
                self.coords = orbit_table(system, pts, nmin, nmax)
            else:
                self.orbits = [orbit_segment(system, p, nmin, nmax) for p in pts]

    @property
    def is_product(self) -> bool:
        return self.left is not None

    def split(self, idx):
        if self.nr is None:
            return idx, idx
        return idx // self.nr, idx % self.nr

    def window(self, lo: int, hi: int) -> slice:
        return slice(lo - self.nmin, hi - self.nmin + 1)


def table_dist(T: OrbitTable, idx: np.ndarray, C: OrbitTable, c: int, win: slice | None = None) -> np.ndarray:
    """Distances ``d(f^n(T[j]), f^n(C[c]))`` for ``j`` in ``idx``: shape (len(idx), W)."""
    idx = np.asarray(idx, dtype=int)
    if T.is_product:
        li, ri = T.split(idx)
        lc, rc = C.split(c)
        return np.maximum(
            table_dist(T.left, li, C.left, lc, win), table_dist(T.right, ri, C.right, rc, win)
        )
    win = win or slice(None)
    if T.coords is not None:
        return T.space.dist_coords(T.coords[idx, win], C.coords[c, win][None, :, :])
    ref = C.orbits[c][win]
    return np.array(
        [[T.space.dist(a, b) for a, b in zip(T.orbits[j][win], ref)] for j in idx], dtype=float
    ).reshape(len(idx), len(ref))


def _cell(T: OrbitTable, C: OrbitTable, c: int, eps: float, cache: dict, prune: bool = True) -> np.ndarray:
    key = ("cell", id(T), id(C), int(c), eps, prune)
    if key in cache:
        return cache[key]
    if T.is_product and prune:
        lc, rc = C.split(c)
        L = _cell(T.left, C.left, lc, eps, cache)
        R = _cell(T.right, C.right, rc, eps, cache)
        cand = (L[:, None] * T.nr + R[None, :]).ravel() if L.size and R.size else np.zeros(0, int)
    else:
        cand = np.arange(T.size)
    if cand.size:
        gaps = table_dist(T, cand, C, c).min(axis=1)
        out = np.sort(cand[gaps <= eps])
    else:
        out = cand
    cache[key] = out
    return out


def _ball(T: OrbitTable, C: OrbitTable, c: int, delta: float, cache: dict) -> np.ndarray:
    key = ("ball", id(T), id(C), int(c), delta)
    if key in cache:
        return cache[key]
    if T.is_product:
        lc, rc = C.split(c)
        L = _ball(T.left, C.left, lc, delta, cache)
        R = _ball(T.right, C.right, rc, delta, cache)
        out = np.sort((L[:, None] * T.nr + R[None, :]).ravel())
    else:
        cand = np.arange(T.size)
        out = cand[table_dist(T, cand, C, c).max(axis=1) <= delta]
    cache[key] = out
    return out


def _interior(T: OrbitTable, grid: Grid, which: str, C: OrbitTable, c: int, scale: float, r: float, cache: dict) -> np.ndarray:
    """Interior (at scale ``r``) of a cell or ball; product interiors short-circuit on empty factors."""
    key = ("int", which, id(T), id(C), int(c), scale, r)
    if key in cache:
        return cache[key]
    if T.is_product and grid.factors is not None:
        lc, rc = C.split(c)
        gl, gr = grid.factors
        if _interior(T.left, gl, which, C.left, lc, scale, r, cache).size == 0 or _interior(
            T.right, gr, which, C.right, rc, scale, r, cache
        ).size == 0:
            cache[key] = np.zeros(0, dtype=int)
            return cache[key]
    idx = _cell(T, C, c, scale, cache) if which == "cell" else _ball(T, C, c, scale, cache)
    out = interior_points(grid.mask_from_indices(idx), r).indices() if idx.size else idx
    cache[key] = out
    return out


def _center_table(system, x, grid, nmin, nmax, T):
    """Table and index for a center: the grid table itself when ``x`` is a grid point."""
    if grid.is_lattice:
        i = grid.nearest(x)
        if grid.space.dist(grid.point(i), x) == 0:
            return T, i
    elif x in grid.points:
        return T, grid.points.index(x)
    return OrbitTable(system, nmin, nmax, points=[x]), 0


# ---------------------------------------------------------------------------
# Single-pair and single-center estimators
# ---------------------------------------------------------------------------


def prox_gap(system: SystemModel, x: Any, y: Any, N: int) -> float:
    """``min_{|n| <= N} d(f^n x, f^n y)``."""
    if N < 0:
        raise ValueError("horizon must be nonnegative")
    ox = orbit_segment(system, x, -N, N)
    oy = orbit_segment(system, y, -N, N)
    return min(system.space.dist(a, b) for a, b in zip(ox, oy))


def proximal_cell(system: SystemModel, x: Any, grid: Grid, N: int, eps: float, prune: bool = True) -> SubsetMask:
    """Grid points ``y`` with ``prox_gap(x, y, N) <= eps``.

    ``prune=False`` evaluates every grid point without using product structure.
    """
    T = OrbitTable(system, -N, N, grid=grid)
    C, c = _center_table(system, x, grid, -N, N, T)
    return grid.mask_from_indices(_cell(T, C, c, eps, {}, prune=prune))


def dynamic_ball(system: SystemModel, x: Any, grid: Grid, delta: float, N: int, side: str = "two_sided") -> SubsetMask:
    """Grid points staying ``delta``-close to the orbit of ``x`` on the window."""
    if not delta > 0:
        raise ValueError("delta must be positive")
    nmin = -N if side == "two_sided" else 0
    if side not in ("two_sided", "forward"):
        raise ValueError(f"unknown side {side!r}")
    T = OrbitTable(system, nmin, N, grid=grid)
    C, c = _center_table(system, x, grid, nmin, N, T)
    return grid.mask_from_indices(_ball(T, C, c, delta, {}))


def _argmin_n(ns: Sequence[int], values: np.ndarray) -> int:
    m = values.min()
    best = [n for n, v in zip(ns, values) if v == m]
    return min(best, key=lambda n: (abs(n), n))


@dataclass
class DecayReport:
    initial: str
    min_diam: float
    argmin_n: int
    trace: list[tuple[int, float]]

    def to_json(self) -> dict:
        return {
            "initial": self.initial,
            "min_diam": self.min_diam,
            "argmin_n": self.argmin_n,
            "trace": [[n, d] for n, d in self.trace],
        }


def diam_trace(system: SystemModel, C: Sequence[Any], N: int) -> np.ndarray:
    """``diam f^n(C)`` for ``n = -N..N`` (sample-point diameters)."""
    space = system.space
    if space.is_float:
        tab = orbit_table(system, list(C), -N, N)
        D = space.dist_coords(tab[:, None, :, :], tab[None, :, :, :])
        return D.max(axis=(0, 1))
    orbits = [orbit_segment(system, p, -N, N) for p in C]
    return np.array([diam(space, [o[k] for o in orbits]) for k in range(2 * N + 1)])


def diam_decay(system: SystemModel, C: Sequence[Any], N: int, initial: str = "") -> DecayReport:
    if len(C) == 0:
        raise ValueError("diam_decay needs a nonempty set")
    tr = diam_trace(system, C, N)
    ns = list(range(-N, N + 1))
    n_star = _argmin_n(ns, tr)
    return DecayReport(
        initial or f"{len(C)} sample points",
        float(tr[n_star + N]),
        n_star,
        [(n, float(v)) for n, v in zip(ns, tr)],
    )


def cw_distal_probe(system: SystemModel, continua: Sequence[Sequence[Any]], N: int, gamma: float) -> dict:
    """Min iterated diameter per continuum; FAIL when some continuum shrinks below ``gamma``."""
    rows = []
    witness = None
    for k, C in enumerate(continua):
        rep = diam_decay(system, C, N)
        rows.append({"index": k, "diam": diam(system.space, C), "min_diam": rep.min_diam, "argmin_n": rep.argmin_n})
        if rep.min_diam < gamma and witness is None:
            witness = rows[-1]
    return {
        "system": system.id,
        "N": N,
        "gamma": gamma,
        "continua": rows,
        "verdict": "PASS" if witness is None else "FAIL",
        "witness": witness,
    }


def stable_class(system: SystemModel, x: Any, grid: Grid, N: int, eps: float) -> SubsetMask:
    """Two-checkpoint outer approximation of ``W^s(x)``.

    Keeps ``y`` when ``d(f^n x, f^n y) <= eps`` for all ``ceil(N/2) <= n <= N``
    and the distance at ``N`` does not exceed the one at ``ceil(N/2)``.
    """
    half = math.ceil(N / 2)
    T = OrbitTable(system, half, N, grid=grid)
    C, c = _center_table(system, x, grid, half, N, T)
    D = table_dist(T, np.arange(T.size), C, c)
    keep = (D.max(axis=1) <= eps) & (D[:, -1] <= D[:, 0])
    return grid.mask(keep)


def return_times(system: SystemModel, x: Any, eps: float, N: int, gap_bound: int | None = None) -> dict:
    """Return-time set ``{n : d(f^n x, x) < eps}`` on ``[-N, N]`` and its largest gap.

    Gaps are measured with virtual returns at ``-N-1`` and ``N+1`` so a lone
    return at 0 produces gap ``N+1``.  The set counts as syndetic at this
    horizon when the largest gap is at most ``gap_bound`` (default ``N // 4``).
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    gap_bound = max(1, N // 4) if gap_bound is None else gap_bound
    orbit = orbit_segment(system, x, -N, N)
    R = [n for n, y in zip(range(-N, N + 1), orbit) if system.space.dist(y, x) < eps]
    marks = [-N - 1] + R + [N + 1]
    max_gap = max(b - a for a, b in zip(marks, marks[1:]))
    return {
        "R": R,
        "max_gap": max_gap,
        "gap_bound": gap_bound,
        "verdict": "SYNDETIC_AT_HORIZON" if max_gap <= gap_bound else "NON_SYNDETIC_EVIDENCE",
    }


def min_separation(system: SystemModel, grid: Grid, N: int) -> dict:
    """Smallest, over distinct grid pairs, of ``max_{|n| <= N} d(f^n x, f^n y)``."""
    T = OrbitTable(system, -N, N, grid=grid)
    best, pair = math.inf, None
    allidx = np.arange(T.size)
    for c in range(T.size):
        others = allidx[c + 1 :]
        if not others.size:
            continue
        sep = table_dist(T, others, T, c).max(axis=1)
        j = int(np.argmin(sep))
        if sep[j] < best:
            best, pair = float(sep[j]), (c, int(others[j]))
    return {"system": system.id, "N": N, "min_max_distance": best, "pair": pair}


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------


@dataclass
class CertificateReport:
    system_id: str
    params: HorizonParams
    centers: list[int]
    cell_sizes: list[int]
    interior_counts: list[int]
    verdict: str
    witness: dict | None
    ball_route: dict
    runtime: dict = field(default_factory=dict)

    @property
    def refuted(self) -> bool:
        return self.verdict == REFUTED

    def to_json(self) -> dict:
        return {
            "system": self.system_id,
            "params": self.params.to_json(),
            "verdict": self.verdict,
            "witness": self.witness,
            "ball_route": self.ball_route,
            "per_center": {
                "center": self.centers,
                "cell_size": self.cell_sizes,
                "interior_count": self.interior_counts,
            },
        }


def _ball_traces(T: OrbitTable, grid: Grid, c: int, r: float, cache: dict) -> np.ndarray:
    """Diameter trace of the grid r-ball around ``c`` (products: max of factor traces)."""
    key = ("bt", id(T), int(c), r)
    if key in cache:
        return cache[key]
    if T.is_product and grid.factors is not None:
        lc, rc = T.split(c)
        gl, gr = grid.factors
        out = np.maximum(_ball_traces(T.left, gl, lc, r, cache), _ball_traces(T.right, gr, rc, r, cache))
    else:
        nb = grid.neighbors(c, r)
        if T.coords is not None:
            tab = T.coords[nb]
            out = T.space.dist_coords(tab[:, None], tab[None, :]).max(axis=(0, 1))
        else:
            pkey = ("pd", id(T))
            if pkey not in cache:
                # exact spaces: all pairwise distances per iterate, computed once
                W = T.nmax - T.nmin + 1
                n = T.size
                P = np.zeros((W, n, n))
                for i in range(n):
                    for j in range(i + 1, n):
                        P[:, i, j] = P[:, j, i] = [
                            T.space.dist(a, b) for a, b in zip(T.orbits[i], T.orbits[j])
                        ]
                cache[pkey] = P
            out = cache[pkey][:, nb][:, :, nb].max(axis=(1, 2))
    cache[key] = out
    return out


def inner_distal_certificate(system: SystemModel, grid: Grid, params: HorizonParams | None = None) -> CertificateReport:
    """Sweep every grid center; REFUTED iff some proximal-cell estimate has interior points.

    Also runs the ball route: every grid ``r``-ball whose iterated diameter
    drops to ``eps`` or below refutes independently; ``ball_route["agrees"]``
    records whether both routes give the same verdict.
    """
    import time

    params = (params or HorizonParams()).resolved(grid)
    t0 = time.perf_counter()
    T = OrbitTable(system, -params.N, params.N, grid=grid)
    cache: dict = {}
    sizes, counts = [], []
    best = (-1, None)
    for c in range(grid.size):
        cell = _cell(T, T, c, params.eps, cache)
        inner = _interior(T, grid, "cell", T, c, params.eps, params.r, cache)
        sizes.append(int(cell.size))
        counts.append(int(inner.size))
        if inner.size > best[0] and inner.size > 0:
            best = (int(inner.size), c)
    witness = None
    if best[1] is not None:
        c = best[1]
        inner = grid.mask_from_indices(_interior(T, grid, "cell", T, c, params.eps, params.r, cache))
        comps = chain_components(inner, params.step)
        comp = max(comps, key=lambda m: (m.count, -int(m.indices()[0])))
        cidx = comp.indices()
        mid = int(cidx[len(cidx) // 2])
        witness = {
            "center": grid.space.point_to_json(grid.point(c)),
            "center_index": int(c),
            "interior_point": grid.space.point_to_json(grid.point(mid)),
            "interior_count": best[0],
            "component": [int(i) for i in cidx],
            "component_diam": diam(grid.space, [grid.point(i) for i in cidx]),
        }
    t1 = time.perf_counter()

    ball_witness = None
    bcache: dict = {}
    min_seen = math.inf
    for c in range(grid.size):
        tr = _ball_traces(T, grid, c, params.r, bcache)
        m = float(tr.min())
        min_seen = min(min_seen, m)
        if m <= params.eps and ball_witness is None:
            ns = list(range(-params.N, params.N + 1))
            ball_witness = {
                "center": grid.space.point_to_json(grid.point(c)),
                "center_index": int(c),
                "min_diam": m,
                "argmin_n": _argmin_n(ns, tr),
            }
    verdict = REFUTED if witness is not None else CONSISTENT
    ball_verdict = REFUTED if ball_witness is not None else CONSISTENT
    return CertificateReport(
        system.id,
        params,
        list(range(grid.size)),
        sizes,
        counts,
        verdict,
        witness,
        {
            "verdict": ball_verdict,
            "witness": ball_witness,
            "min_ball_diam": min_seen,
            "agrees": ball_verdict == verdict,
        },
        {"cells_seconds": t1 - t0, "balls_seconds": time.perf_counter() - t1},
    )


# ---------------------------------------------------------------------------
# Homomorphisms and inner-light maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FactorMap:
    """Factor map descriptor: ``identity``, ``proj_left``, ``proj_right``,
    ``collapse_right`` (``(a, b) -> (a, value)``) or ``compose`` of a list."""

    kind: str
    value: Any = None
    parts: tuple = ()

    def __call__(self, y):
        from .spaces import ProductPoint

        if self.kind == "identity":
            return y
        if self.kind == "proj_left":
            return y.a
        if self.kind == "proj_right":
            return y.b
        if self.kind == "collapse_right":
            return ProductPoint(y.a, self.value)
        if self.kind == "compose":
            for p in self.parts:
                y = p(y)
            return y
        raise ValueError(f"unknown factor map {self.kind!r}")

    def codomain(self, space):
        from .spaces import Product as ProductSpace

        if self.kind == "identity":
            return space
        if self.kind in ("proj_left", "proj_right", "collapse_right"):
            if not isinstance(space, ProductSpace):
                raise ValueError(f"{self.kind} needs a product space, got {space.kind}")
            return {"proj_left": space.left, "proj_right": space.right}.get(self.kind, space)
        if self.kind == "compose":
            for p in self.parts:
                space = p.codomain(space)
            return space
        raise ValueError(f"unknown factor map {self.kind!r}")


def check_homomorphism(g: SystemModel, f: SystemModel, pi: FactorMap, samples: Sequence[Any], tol: float = 1e-12) -> dict:
    """Equivariance defect ``max d(f(pi y), pi(g y))`` over samples of ``g.space``."""
    if pi.codomain(g.space) != f.space:
        raise ValueError(f"factor map {pi.kind} does not map {g.space.kind} onto {f.space.kind}")
    defect = 0.0
    for y in samples:
        defect = max(defect, f.space.dist(f.step(pi(y)), pi(g.step(y))))
    return {"defect": defect, "tol": tol, "passed": defect <= tol}


def _snap(grid: Grid, pts: Sequence[Any]) -> SubsetMask:
    return grid.mask_from_indices(sorted({grid.nearest(p) for p in pts}))


def inner_light_probe(pi: FactorMap, continua: Sequence[Sequence[Any]], gridX: Grid, gridY: Grid, r: float) -> dict:
    """Look for a continuum ``C`` with r-interior whose image ``pi(C)`` has none."""
    rows = []
    violation = None
    for k, C in enumerate(continua):
        cy = interior_points(_snap(gridY, C), r).count
        cx = interior_points(_snap(gridX, [pi(y) for y in C]), r).count
        row = {"index": k, "image_interior": cx, "interior": cy, "violation": cx == 0 and cy > 0}
        rows.append(row)
        if row["violation"] and violation is None:
            violation = row
    return {"continua": rows, "verdict": "VIOLATION" if violation else "NO_VIOLATION", "witness": violation}


# ---------------------------------------------------------------------------
# Shift-space helpers
# ---------------------------------------------------------------------------


def cylinder_witnesses(w: str) -> tuple[BinarySeqPoint, BinarySeqPoint]:
    """A periodic and a non-periodic point of the cylinder ``[w]`` (``x_0..x_{|w|-1} = w``)."""
    periodic = BinarySeqPoint.periodic(w, 0)
    other = BinarySeqPoint("0", w, "1", 0)
    return periodic, other
