"""Compact metric space models, exact metrics, grids and masks.

Every float-coordinate space (circle, interval, torus and products of
these) is handled through a flat coordinate vector: each coordinate is
either a circle axis or an interval axis, and because every combinator in
the catalogue uses the max metric, the distance between two points is the
maximum of the per-axis distances.  The binary sequence space is the one
leaf without a float embedding and falls back to exact pointwise code.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from numbers import Real
from typing import Any, Iterable, Sequence

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

_AXIS_TOL = 1e-9


# ---------------------------------------------------------------------------
# Points
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TorusPoint:
    """A point of the 2-torus with exact rational coordinates in [0, 1)."""

    p: Fraction
    q: Fraction

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", Fraction(self.p) % 1)
        object.__setattr__(self, "q", Fraction(self.q) % 1)

    def __iter__(self):
        return iter((self.p, self.q))


@dataclass(frozen=True)
class ProductPoint:
    a: Any
    b: Any

    def __iter__(self):
        return iter((self.a, self.b))


def _primitive_root(word: str) -> str:
    n = len(word)
    for p in range(1, n + 1):
        if n % p == 0 and word[:p] * (n // p) == word:
            return word[:p]
    return word


def _check_word(word: str, allow_empty: bool) -> None:
    if not isinstance(word, str) or (not word and not allow_empty):
        raise ValueError(f"invalid binary word {word!r}")
    if set(word) - {"0", "1"}:
        raise ValueError(f"binary words use only '0' and '1', got {word!r}")


@dataclass(frozen=True)
class BinarySeqPoint:
    """An eventually periodic bi-infinite binary sequence ``...LLL core RRR...``.

    ``core`` starts at index ``origin``; the right period starts right after
    it and the left period ends at ``origin - 1``.  The representation is
    canonicalized on construction, so equal sequences compare equal.
    """

    left: str
    core: str
    right: str
    origin: int = 0

    def __post_init__(self) -> None:
        _check_word(self.left, False)
        _check_word(self.core, True)
        _check_word(self.right, False)
        left, core, right, origin = _canonical_seq(
            self.left, self.core, self.right, int(self.origin)
        )
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "core", core)
        object.__setattr__(self, "right", right)
        object.__setattr__(self, "origin", origin)

    @classmethod
    def constant(cls, symbol: str) -> BinarySeqPoint:
        return cls(symbol, "", symbol, 0)

    @classmethod
    def periodic(cls, word: str, origin: int = 0) -> BinarySeqPoint:
        """The purely periodic point ``word^inf`` with a copy of ``word`` at ``origin``."""
        return cls(word, "", word, origin)

    def __getitem__(self, n: int) -> str:
        k = n - self.origin
        if 0 <= k < len(self.core):
            return self.core[k]
        if k >= len(self.core):
            return self.right[(k - len(self.core)) % len(self.right)]
        return self.left[k % len(self.left)]

    def window(self, lo: int, hi: int) -> str:
        return "".join(self[n] for n in range(lo, hi + 1))

    def shifted(self, n: int) -> BinarySeqPoint:
        """``sigma^n`` of this point: the symbol at index ``i`` moves to ``i - n``."""
        return BinarySeqPoint(self.left, self.core, self.right, self.origin - n)

    @property
    def is_periodic(self) -> bool:
        return not self.core and self.left == self.right

    def extent(self) -> int:
        """A radius beyond which the sequence is governed by its periods."""
        return abs(self.origin) + len(self.core) + 1


def _rot_left(w: str) -> str:
    return w[1:] + w[0]


def _rot_right(w: str) -> str:
    return w[-1] + w[:-1]


def _canonical_seq(left: str, core: str, right: str, origin: int):
    left = _primitive_root(left)
    right = _primitive_root(right)
    while core and core[-1] == right[-1]:
        core = core[:-1]
        right = _rot_right(right)
    while core and core[0] == left[0]:
        core = core[1:]
        left = _rot_left(left)
        origin += 1
    if core:
        return left, core, right, origin
    if left == right:
        p = len(left)
        rotations = [left[s:] + left[:s] for s in range(p)]
        s = min(range(p), key=lambda i: (rotations[i], i))
        return rotations[s], "", rotations[s], (origin + s) % p
    # not periodic: push the left/right boundary as far left as it goes
    while left[-1] == right[-1]:
        left = _rot_right(left)
        right = _rot_right(right)
        origin -= 1
    return left, "", right, origin


# ---------------------------------------------------------------------------
# Spaces
# ---------------------------------------------------------------------------


class Space:
    """Base class of the space catalogue."""

    kind: str = ""

    @property
    def axes(self) -> tuple[str, ...] | None:
        """Per-coordinate axis kinds ('circle' or 'interval'), None if not embeddable."""
        raise NotImplementedError

    @property
    def is_float(self) -> bool:
        return self.axes is not None

    def validate(self, x: Any) -> None:
        raise NotImplementedError

    def contains(self, x: Any) -> bool:
        try:
            self.validate(x)
        except (TypeError, ValueError):
            return False
        return True

    def dist(self, x: Any, y: Any) -> float:
        raise NotImplementedError

    def coords(self, x: Any) -> list[float]:
        raise NotImplementedError

    def from_coords(self, c: Sequence[float]) -> Any:
        raise NotImplementedError

    def to_json(self) -> dict:
        return {"kind": self.kind}

    def point_to_json(self, x: Any) -> Any:
        raise NotImplementedError

    def point_from_json(self, obj: Any) -> Any:
        raise NotImplementedError

    # vectorized helpers for float spaces ---------------------------------

    def coords_array(self, pts: Iterable[Any]) -> np.ndarray:
        rows = [self.coords(x) for x in pts]
        return np.asarray(rows, dtype=float).reshape(len(rows), len(self.axes))

    def dist_coords(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Broadcasted metric on coordinate arrays whose last axis is the coordinate index."""
        return axis_dist(self.axes, a, b)


def axis_dist(axes: Sequence[str], a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))
    out = None
    for j, kind in enumerate(axes):
        d = diff[..., j]
        if kind == "circle":
            d = d % 1.0
            d = np.minimum(d, 1.0 - d)
        out = d if out is None else np.maximum(out, d)
    return out


def _as_real(x: Any, what: str) -> Real:
    if isinstance(x, bool) or not isinstance(x, (Real, np.floating, np.integer)):
        raise TypeError(f"{what} point must be a real number, got {type(x).__name__}")
    return x


def _real_to_json(x: Real) -> Any:
    if isinstance(x, Fraction):
        return f"{x.numerator}/{x.denominator}"
    return float(x)


def parse_real(obj: Any) -> Real:
    """Read a number written either as a decimal or as a ``"p/q"`` string."""
    if isinstance(obj, str):
        return Fraction(obj) if "/" in obj else float(obj)
    if isinstance(obj, (int, float)):
        return obj
    raise ValueError(f"cannot read a number from {obj!r}")


@dataclass(frozen=True)
class Circle(Space):
    kind = "circle"

    @property
    def axes(self):
        return ("circle",)

    def validate(self, x):
        _as_real(x, "circle")
        if not 0 <= x < 1:
            raise ValueError(f"circle coordinate {x!r} outside [0, 1)")

    def dist(self, x, y):
        self.validate(x)
        self.validate(y)
        d = abs(x - y)
        return float(min(d, 1 - d))

    def coords(self, x):
        return [float(x)]

    def from_coords(self, c):
        t = float(c[0]) % 1.0
        return 0.0 if t == 1.0 else t

    def point_to_json(self, x):
        return _real_to_json(x)

    def point_from_json(self, obj):
        return parse_real(obj)


@dataclass(frozen=True)
class Interval(Space):
    kind = "interval"

    @property
    def axes(self):
        return ("interval",)

    def validate(self, x):
        _as_real(x, "interval")
        if not 0 <= x <= 1:
            raise ValueError(f"interval coordinate {x!r} outside [0, 1]")

    def dist(self, x, y):
        self.validate(x)
        self.validate(y)
        return float(abs(x - y))

    def coords(self, x):
        return [float(x)]

    def from_coords(self, c):
        return min(max(float(c[0]), 0.0), 1.0)

    def point_to_json(self, x):
        return _real_to_json(x)

    def point_from_json(self, obj):
        return parse_real(obj)


@dataclass(frozen=True)
class Torus(Space):
    kind = "torus"

    @property
    def axes(self):
        return ("circle", "circle")

    def validate(self, x):
        if not isinstance(x, TorusPoint):
            raise TypeError(f"torus point must be a TorusPoint, got {type(x).__name__}")

    def exact_dist(self, x, y) -> Fraction:
        """The max-of-circles distance as an exact rational."""
        self.validate(x)
        self.validate(y)
        out = Fraction(0)
        for s, t in ((x.p, y.p), (x.q, y.q)):
            d = abs(s - t)
            out = max(out, min(d, 1 - d))
        return out

    def dist(self, x, y):
        return float(self.exact_dist(x, y))

    def coords(self, x):
        return [float(x.p), float(x.q)]

    def from_coords(self, c):
        return TorusPoint(
            Fraction(float(c[0]) % 1.0).limit_denominator(10**6),
            Fraction(float(c[1]) % 1.0).limit_denominator(10**6),
        )

    def point_to_json(self, x):
        return [_real_to_json(x.p), _real_to_json(x.q)]

    def point_from_json(self, obj):
        return TorusPoint(Fraction(obj[0]), Fraction(obj[1]))


@dataclass(frozen=True)
class BinarySeqSpace(Space):
    kind = "binary_seq"

    @property
    def axes(self):
        return None

    def validate(self, x):
        if not isinstance(x, BinarySeqPoint):
            raise TypeError(f"expected a BinarySeqPoint, got {type(x).__name__}")

    def first_difference(self, x: BinarySeqPoint, y: BinarySeqPoint) -> int | None:
        """Smallest ``|n|`` with ``x_n != y_n``, or None when ``x == y``."""
        if x == y:
            return None
        bound = (
            max(x.extent(), y.extent())
            + math.lcm(len(x.left), len(y.left))
            + math.lcm(len(x.right), len(y.right))
        )
        for m in range(bound + 1):
            if x[m] != y[m] or x[-m] != y[-m]:
                return m
        raise AssertionError("distinct eventually periodic sequences must differ early")

    def dist(self, x, y):
        self.validate(x)
        self.validate(y)
        m = self.first_difference(x, y)
        return 0.0 if m is None else 2.0**-m

    def point_to_json(self, x):
        return {"left": x.left, "core": x.core, "right": x.right, "origin": x.origin}

    def point_from_json(self, obj):
        return BinarySeqPoint(obj["left"], obj["core"], obj["right"], int(obj["origin"]))


@dataclass(frozen=True)
class Product(Space):
    left: Space
    right: Space
    kind = "product"

    @property
    def axes(self):
        la, ra = self.left.axes, self.right.axes
        if la is None or ra is None:
            return None
        return la + ra

    def validate(self, x):
        if not isinstance(x, ProductPoint):
            raise TypeError(f"product point must be a ProductPoint, got {type(x).__name__}")
        self.left.validate(x.a)
        self.right.validate(x.b)

    def dist(self, x, y):
        self.validate(x)
        self.validate(y)
        return max(self.left.dist(x.a, y.a), self.right.dist(x.b, y.b))

    def coords(self, x):
        return self.left.coords(x.a) + self.right.coords(x.b)

    def from_coords(self, c):
        k = len(self.left.axes)
        return ProductPoint(self.left.from_coords(c[:k]), self.right.from_coords(c[k:]))

    def to_json(self):
        return {"kind": "product", "left": self.left.to_json(), "right": self.right.to_json()}

    def point_to_json(self, x):
        return [self.left.point_to_json(x.a), self.right.point_to_json(x.b)]

    def point_from_json(self, obj):
        return ProductPoint(self.left.point_from_json(obj[0]), self.right.point_from_json(obj[1]))


def space_from_json(obj: dict) -> Space:
    kind = obj.get("kind")
    simple = {"circle": Circle, "interval": Interval, "torus": Torus, "binary_seq": BinarySeqSpace}
    if kind in simple:
        return simple[kind]()
    if kind == "product":
        return Product(space_from_json(obj["left"]), space_from_json(obj["right"]))
    raise ValueError(f"unknown space kind {kind!r}")


# ---------------------------------------------------------------------------
# Metric operations
# ---------------------------------------------------------------------------


def dist(space: Space, x: Any, y: Any) -> float:
    return space.dist(x, y)


def _pairwise(space: Space, a: Sequence[Any], b: Sequence[Any]) -> np.ndarray:
    if space.is_float:
        ca, cb = space.coords_array(a), space.coords_array(b)
        return space.dist_coords(ca[:, None, :], cb[None, :, :])
    return np.array([[space.dist(x, y) for y in b] for x in a], dtype=float).reshape(len(a), len(b))


def diam(space: Space, pts: Sequence[Any]) -> float:
    """Largest pairwise distance of a nonempty finite set."""
    if len(pts) == 0:
        raise ValueError("diam of an empty set")
    return float(_pairwise(space, pts, pts).max())


def hausdorff(space: Space, A: Sequence[Any], B: Sequence[Any]) -> float:
    if len(A) == 0 or len(B) == 0:
        raise ValueError("hausdorff distance needs nonempty sets")
    D = _pairwise(space, A, B)
    return float(max(D.min(axis=1).max(), D.min(axis=0).max()))


# ---------------------------------------------------------------------------
# Grids and masks
# ---------------------------------------------------------------------------


def _words(max_len: int) -> list[str]:
    return ["".join(w) for n in range(1, max_len + 1) for w in itertools.product("01", repeat=n)]


def shift_level(h: float) -> int:
    """Word-length parameter ``L`` of a shift grid at scale ``h = 2^-L``."""
    return max(1, math.ceil(-math.log2(h) - 1e-12))


@dataclass(eq=False)
class Grid:
    """A finite net of a space.

    Lattice grids (circle/interval/torus and their products) carry
    ``shape`` and ``spacing``; the flat index is the C-order ravel of the
    per-axis indices, so a product grid's index is ``i_left * n_right + i_right``.
    """

    space: Space
    h: float
    spacing: float
    shape: tuple[int, ...] | None = None
    explicit_points: list[Any] | None = None
    factors: tuple[Grid, Grid] | None = None
    _neighbors: dict = field(default_factory=dict, repr=False)

    @property
    def size(self) -> int:
        if self.shape is not None:
            return int(np.prod(self.shape))
        return len(self.explicit_points)

    def __len__(self) -> int:
        return self.size

    @property
    def is_lattice(self) -> bool:
        return self.shape is not None

    @cached_property
    def axis_values(self) -> list[np.ndarray]:
        return [np.arange(n) * self.spacing for n in self.shape]

    @cached_property
    def coords(self) -> np.ndarray:
        """(size, ncoords) float coordinates; only for float spaces."""
        if self.is_lattice:
            mesh = np.meshgrid(*self.axis_values, indexing="ij")
            return np.stack([m.ravel() for m in mesh], axis=-1)
        return self.space.coords_array(self.explicit_points)

    def point(self, i: int) -> Any:
        if not self.is_lattice:
            return self.explicit_points[i]
        idx = np.unravel_index(int(i), self.shape)
        return _lattice_point(self.space, list(idx), int(round(1.0 / self.spacing)))

    @cached_property
    def points(self) -> list[Any]:
        if not self.is_lattice:
            return list(self.explicit_points)
        return [self.point(i) for i in range(self.size)]

    def nearest(self, x: Any) -> int:
        """Index of a nearest grid point."""
        if self.is_lattice:
            c = np.asarray(self.space.coords(x))
            idx = []
            for val, n, kind in zip(c, self.shape, self.space.axes):
                k = int(round(val / self.spacing))
                idx.append(k % n if kind == "circle" else min(max(k, 0), n - 1))
            return int(np.ravel_multi_index(idx, self.shape))
        d = [self.space.dist(x, p) for p in self.explicit_points]
        return int(np.argmin(d))

    def box_radius(self, r: float) -> int:
        return int(math.floor(r / self.spacing + _AXIS_TOL))

    def neighbors(self, i: int, r: float) -> np.ndarray:
        """Indices of grid points within distance ``r`` of grid point ``i`` (including ``i``)."""
        key = (int(i), float(r))
        if key in self._neighbors:
            return self._neighbors[key]
        if self.is_lattice:
            k = self.box_radius(r)
            center = np.unravel_index(int(i), self.shape)
            ranges = []
            for c, n, kind in zip(center, self.shape, self.space.axes):
                if kind == "circle":
                    vals = np.arange(n) if 2 * k + 1 >= n else np.arange(c - k, c + k + 1) % n
                else:
                    vals = np.arange(max(c - k, 0), min(c + k, n - 1) + 1)
                ranges.append(vals)
            mesh = np.meshgrid(*ranges, indexing="ij")
            out = np.sort(np.ravel_multi_index([m.ravel() for m in mesh], self.shape))
        else:
            p = self.explicit_points[i]
            out = np.array(
                [j for j, q in enumerate(self.explicit_points) if self.space.dist(p, q) <= r + 1e-15],
                dtype=int,
            )
        self._neighbors[key] = out
        return out

    def to_json(self) -> dict:
        return {
            "space": self.space.to_json(),
            "h": self.h,
            "points": [self.space.point_to_json(p) for p in self.points],
        }

    def mask(self, included: Iterable[bool] | np.ndarray | None = None) -> SubsetMask:
        if included is None:
            included = np.zeros(self.size, dtype=bool)
        return SubsetMask(self, np.asarray(included, dtype=bool))

    def full_mask(self) -> SubsetMask:
        return SubsetMask(self, np.ones(self.size, dtype=bool))

    def mask_from_indices(self, idx: Iterable[int]) -> SubsetMask:
        inc = np.zeros(self.size, dtype=bool)
        inc[np.asarray(list(idx), dtype=int)] = True
        return SubsetMask(self, inc)


def _lattice_point(space: Space, idx: list[int], n: int) -> Any:
    """Grid point for per-axis indices ``idx`` (consumed from the front)."""
    if isinstance(space, (Circle, Interval)):
        return float(idx.pop(0)) / n
    if isinstance(space, Torus):
        return TorusPoint(Fraction(idx.pop(0), n), Fraction(idx.pop(0), n))
    if isinstance(space, Product):
        a = _lattice_point(space.left, idx, n)
        b = _lattice_point(space.right, idx, n)
        return ProductPoint(a, b)
    raise TypeError(f"no lattice for {space.kind}")


def _shift_grid_points(L: int) -> list[BinarySeqPoint]:
    periods = sorted({_primitive_root(w) for w in _words(L)}, key=lambda w: (len(w), w))
    cores = ["".join(w) for w in itertools.product("01", repeat=2 * L - 1)]
    seen: dict[BinarySeqPoint, None] = {}
    for lw in periods:
        for c in cores:
            for rw in periods:
                seen.setdefault(BinarySeqPoint(lw, c, rw, -(L - 1)), None)
    return sorted(seen, key=lambda x: (len(x.left) + len(x.core) + len(x.right), x.left, x.core, x.right, x.origin))


def build_grid(space: Space, h: float) -> Grid:
    """Uniform lattice of spacing ``<= h`` (word enumeration for the shift space)."""
    if not h > 0:
        raise ValueError("grid resolution h must be positive")
    if space.is_float:
        n = math.ceil(1.0 / h - _AXIS_TOL)
        shape = tuple(n + 1 if kind == "interval" else n for kind in space.axes)
        factors = None
        if isinstance(space, Product):
            factors = (build_grid(space.left, h), build_grid(space.right, h))
        return Grid(space, h, 1.0 / n, shape=shape, factors=factors)
    if isinstance(space, BinarySeqSpace):
        L = shift_level(h)
        return Grid(space, h, 2.0**-L, explicit_points=_shift_grid_points(L))
    if isinstance(space, Product):
        gl, gr = build_grid(space.left, h), build_grid(space.right, h)
        pts = [ProductPoint(a, b) for a in gl.points for b in gr.points]
        return Grid(space, h, max(gl.spacing, gr.spacing), explicit_points=pts, factors=(gl, gr))
    raise ValueError(f"cannot grid space {space!r}")


def grid_from_json(obj: dict) -> Grid:
    space = space_from_json(obj["space"])
    grid = build_grid(space, float(obj["h"]))
    pts = [space.point_from_json(p) for p in obj["points"]]
    if pts != grid.points:
        return Grid(space, float(obj["h"]), grid.spacing, explicit_points=pts)
    return grid


@dataclass(eq=False)
class SubsetMask:
    grid: Grid
    included: np.ndarray

    def __post_init__(self) -> None:
        self.included = np.asarray(self.included, dtype=bool)
        if self.included.shape != (self.grid.size,):
            raise ValueError("mask length must equal the grid size")

    def __len__(self) -> int:
        return int(self.included.sum())

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SubsetMask):
            return NotImplemented
        return self.grid is other.grid and bool(np.array_equal(self.included, other.included))

    @property
    def count(self) -> int:
        return int(self.included.sum())

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.included)

    def points(self) -> list[Any]:
        return [self.grid.point(i) for i in self.indices()]

    def issubset(self, other: SubsetMask) -> bool:
        return bool(np.all(~self.included | other.included))

    def __and__(self, other: SubsetMask) -> SubsetMask:
        return SubsetMask(self.grid, self.included & other.included)

    def __or__(self, other: SubsetMask) -> SubsetMask:
        return SubsetMask(self.grid, self.included | other.included)

    def to_json(self) -> list[int]:
        return [int(i) for i in self.indices()]


def interior_points(mask: SubsetMask, r: float) -> SubsetMask:
    """Mask points whose whole r-ball (relative to the space) lies in the mask."""
    grid = mask.grid
    if r <= 0 or not mask.included.any():
        return SubsetMask(grid, mask.included.copy())
    if grid.is_lattice:
        k = grid.box_radius(r)
        if k == 0:
            return SubsetMask(grid, mask.included.copy())
        arr = mask.included.reshape(grid.shape).astype(np.uint8)
        for axis, (n, kind) in enumerate(zip(grid.shape, grid.space.axes)):
            if kind == "circle":
                if 2 * k + 1 >= n:
                    arr = np.broadcast_to(arr.min(axis=axis, keepdims=True), arr.shape).copy()
                else:
                    arr = ndimage.minimum_filter1d(arr, 2 * k + 1, axis=axis, mode="wrap")
            else:
                arr = ndimage.minimum_filter1d(arr, 2 * k + 1, axis=axis, mode="nearest")
        return SubsetMask(grid, arr.ravel().astype(bool))
    out = np.zeros(grid.size, dtype=bool)
    for i in mask.indices():
        out[i] = bool(mask.included[grid.neighbors(i, r)].all())
    return SubsetMask(grid, out)


def _edges(grid: Grid, idx: np.ndarray, step: float) -> tuple[np.ndarray, np.ndarray]:
    if grid.is_lattice:
        k = grid.box_radius(step)
        multi = np.array(np.unravel_index(idx, grid.shape))
        rows, cols = [], []
        for off in itertools.product(range(-k, k + 1), repeat=len(grid.shape)):
            if not any(off):
                continue
            nb = multi + np.array(off)[:, None]
            ok = np.ones(idx.size, dtype=bool)
            for ax, (n, kind) in enumerate(zip(grid.shape, grid.space.axes)):
                if kind == "circle":
                    nb[ax] %= n
                else:
                    ok &= (nb[ax] >= 0) & (nb[ax] < n)
            j = np.ravel_multi_index(np.where(ok, nb, 0), grid.shape)
            rows.append(idx[ok])
            cols.append(j[ok])
        return np.concatenate(rows) if rows else idx[:0], np.concatenate(cols) if cols else idx[:0]
    rows, cols = [], []
    for i in idx:
        for j in grid.neighbors(i, step):
            rows.append(i)
            cols.append(j)
    return np.asarray(rows, dtype=int), np.asarray(cols, dtype=int)


def chain_components(mask: SubsetMask, step: float) -> list[SubsetMask]:
    """Components of the graph joining mask points at distance ``<= step``.

    Components are ordered by their smallest grid index.
    """
    grid = mask.grid
    idx = mask.indices()
    if idx.size == 0:
        return []
    rows, cols = _edges(grid, idx, step)
    keep = mask.included[cols]
    rows, cols = rows[keep], cols[keep]
    pos = np.full(grid.size, -1)
    pos[idx] = np.arange(idx.size)
    adj = coo_matrix(
        (np.ones(rows.size), (pos[rows], pos[cols])), shape=(idx.size, idx.size)
    )
    ncomp, labels = connected_components(adj, directed=False)
    comps = []
    for c in range(ncomp):
        inc = np.zeros(grid.size, dtype=bool)
        inc[idx[labels == c]] = True
        comps.append(SubsetMask(grid, inc))
    comps.sort(key=lambda m: int(m.indices()[0]))
    return comps


def mask_mass_indices(grid: Grid, coords: np.ndarray, radius: float) -> list[np.ndarray]:
    """For each coordinate row, the grid indices within ``radius`` of it (lattice grids)."""
    out = []
    for c in np.atleast_2d(coords):
        per_axis = []
        for val, n, kind in zip(c, grid.shape, grid.space.axes):
            lo = math.floor(val / grid.spacing)
            cand = []
            for k in (lo - 1, lo, lo + 1, lo + 2):
                d = abs(val - k * grid.spacing)
                if kind == "circle":
                    d = d % 1.0
                    d = min(d, 1.0 - d)
                    kk = k % n
                else:
                    if k < 0 or k >= n:
                        continue
                    kk = k
                if d <= radius + 1e-12 and kk not in cand:
                    cand.append(kk)
            per_axis.append(cand)
        combos = list(itertools.product(*per_axis))
        if combos:
            out.append(np.ravel_multi_index(np.array(combos).T, grid.shape))
        else:
            out.append(np.zeros(0, dtype=int))
    return out
