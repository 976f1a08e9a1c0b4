"""Catalogue of exactly evaluable homeomorphisms with forward/backward iteration."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from numbers import Real
from typing import Any, Sequence

import numpy as np

from .spaces import (
    BinarySeqPoint,
    BinarySeqSpace,
    Circle,
    Interval,
    Product as ProductSpace,
    ProductPoint,
    Space,
    Torus,
    TorusPoint,
    parse_real,
    space_from_json,
)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def wrap(t):
    """Reduce a circle coordinate into [0, 1), never returning 1.0."""
    t = t % 1
    return 0.0 if t == 1 else t


def _wrap_arr(a: np.ndarray) -> np.ndarray:
    a = np.mod(a, 1.0)
    a[a >= 1.0] = 0.0
    return a


def _real_json(x: Real):
    return f"{x.numerator}/{x.denominator}" if isinstance(x, Fraction) else float(x)


class SystemModel:
    """An invertible map on a :class:`Space`.

    Subclasses implement :meth:`step` and :meth:`step_inv`; those with a
    float-coordinate vectorization also implement :meth:`fstep`.
    """

    space: Space
    exact: bool = False
    kind: str = ""

    @property
    def id(self) -> str:
        return self.kind

    def step(self, x):
        raise NotImplementedError

    def step_inv(self, x):
        raise NotImplementedError

    def fstep(self, c: np.ndarray, inverse: bool = False) -> np.ndarray:
        """Vectorized step on a (m, k) coordinate array."""
        raise NotImplementedError

    @property
    def vectorized(self) -> bool:
        return type(self).fstep is not SystemModel.fstep

    def to_json(self) -> dict:
        return {"kind": self.kind}

    def __repr__(self) -> str:
        return f"<{type(self).__name__} {self.id}>"


def _check_point(system: SystemModel, x: Any) -> None:
    try:
        system.space.validate(x)
    except TypeError as exc:
        raise TypeError(f"point {x!r} does not belong to {system.id}: {exc}") from None


def apply(system: SystemModel, x: Any, n: int) -> Any:
    """``f^n(x)`` by ``|n|`` single steps (inverse steps for negative ``n``)."""
    _check_point(system, x)
    stepper = system.step if n >= 0 else system.step_inv
    for _ in range(abs(int(n))):
        x = stepper(x)
    return x


def orbit_segment(system: SystemModel, x: Any, nmin: int, nmax: int) -> list:
    """``[f^n(x) for n in nmin..nmax]``, one map application per step."""
    if nmin > nmax:
        raise ValueError("nmin must not exceed nmax")
    _check_point(system, x)
    anchor = min(max(0, nmin), nmax)
    base = apply(system, x, anchor)
    out = {anchor: base}
    y = base
    for n in range(anchor + 1, nmax + 1):
        y = system.step(y)
        out[n] = y
    y = base
    for n in range(anchor - 1, nmin - 1, -1):
        y = system.step_inv(y)
        out[n] = y
    return [out[n] for n in range(nmin, nmax + 1)]


def orbit_table(system: SystemModel, points: Sequence[Any], nmin: int, nmax: int) -> np.ndarray:
    """Float coordinates of ``f^n(p)``: array of shape (len(points), nmax-nmin+1, k).

    Products are tabulated componentwise, so exact factors (the cat map)
    stay exact up to the final conversion to floats.
    """
    if isinstance(system, Product):
        a = orbit_table(system.f, [p.a for p in points], nmin, nmax)
        b = orbit_table(system.g, [p.b for p in points], nmin, nmax)
        return np.concatenate([a, b], axis=-1)
    if isinstance(system, CatMap):
        return system.table(points, nmin, nmax)
    space = system.space
    if system.vectorized:
        return _float_table(system, space.coords_array(points), nmin, nmax)
    rows = [space.coords_array(orbit_segment(system, p, nmin, nmax)) for p in points]
    return np.stack(rows) if rows else np.zeros((0, nmax - nmin + 1, len(space.axes)))


def _float_table(system: SystemModel, c0: np.ndarray, nmin: int, nmax: int) -> np.ndarray:
    W = nmax - nmin + 1
    out = np.empty((c0.shape[0], W, c0.shape[1]))
    anchor = min(max(0, nmin), nmax)
    c = c0.copy()
    for _ in range(anchor):
        c = system.fstep(c)
    out[:, anchor - nmin] = c
    cur = c
    for n in range(anchor + 1, nmax + 1):
        cur = system.fstep(cur)
        out[:, n - nmin] = cur
    cur = c
    for n in range(anchor - 1, nmin - 1, -1):
        cur = system.fstep(cur, inverse=True)
        out[:, n - nmin] = cur
    return out


def check_homeo(system: SystemModel, samples: Sequence[Any], tol: float | None = None) -> dict:
    """Round-trip defect ``max d(f(f^-1 x), x), d(f^-1(f x), x)`` over the samples."""
    if tol is None:
        tol = 0.0 if system.exact else 1e-9
    defect = 0.0
    for x in samples:
        _check_point(system, x)
        defect = max(
            defect,
            system.space.dist(system.step(system.step_inv(x)), x),
            system.space.dist(system.step_inv(system.step(x)), x),
        )
    return {"system": system.id, "defect": defect, "tol": tol, "passed": defect <= tol}


# ---------------------------------------------------------------------------
# Circle and interval maps
# ---------------------------------------------------------------------------


class CircleMap(SystemModel):
    """A circle homeomorphism given by a degree-one lift ``F``."""

    space = Circle()

    def lift(self, t):
        raise NotImplementedError

    def lift_inv(self, t):
        raise NotImplementedError

    def flift(self, t: np.ndarray, inverse: bool = False) -> np.ndarray:
        f = self.lift_inv if inverse else self.lift
        return np.array([f(float(s)) for s in np.ravel(t)]).reshape(np.shape(t))

    def step(self, x):
        return wrap(self.lift(x))

    def step_inv(self, x):
        return wrap(self.lift_inv(x))

    def fstep(self, c, inverse=False):
        return _wrap_arr(self.flift(c, inverse=inverse))


@dataclass(frozen=True, repr=False)
class Rotation(CircleMap):
    alpha: Real
    kind = "rotation"

    def __post_init__(self):
        object.__setattr__(self, "alpha", wrap(self.alpha))

    @property
    def exact(self):
        return isinstance(self.alpha, Fraction)

    @property
    def id(self):
        return f"rotation({_real_json(self.alpha)})"

    def lift(self, t):
        return t + self.alpha

    def lift_inv(self, t):
        return t - self.alpha

    def flift(self, t, inverse=False):
        return t - float(self.alpha) if inverse else t + float(self.alpha)

    def to_json(self):
        return {"kind": "rotation", "alpha": _real_json(self.alpha)}


@dataclass(frozen=True, repr=False)
class Identity(SystemModel):
    space: Space = field(default_factory=Interval)
    kind = "identity"
    exact = True

    @property
    def id(self):
        return f"identity_{self.space.kind}"

    def step(self, x):
        return x

    def step_inv(self, x):
        return x

    def lift(self, t):
        return t

    lift_inv = lift

    def fstep(self, c, inverse=False):
        if not self.space.is_float:
            raise NotImplementedError
        return c.copy()

    @property
    def vectorized(self):
        return self.space.is_float

    def to_json(self):
        return {"kind": "identity", "space": self.space.to_json()}


def IdentityInterval() -> Identity:
    return Identity(Interval())


def IdentityCircle() -> Identity:
    return Identity(Circle())


@dataclass(frozen=True, repr=False)
class NorthSouth(SystemModel):
    """``x -> 1 - x`` on [0, 1]."""

    space = Interval()
    kind = "north_south"
    exact = True

    def step(self, x):
        return 1 - x

    step_inv = step

    def fstep(self, c, inverse=False):
        return 1.0 - c


@dataclass(frozen=True, repr=False)
class SqrtInterval(SystemModel):
    """``x -> sqrt(x)`` on [0, 1]; fixes 0 and 1, inverse ``x**2``."""

    space = Interval()
    kind = "sqrt_interval"

    def step(self, x):
        return math.sqrt(x)

    def step_inv(self, x):
        return x * x

    def fstep(self, c, inverse=False):
        return c * c if inverse else np.sqrt(c)


@dataclass(frozen=True, repr=False)
class SqrtCircle(CircleMap):
    """``t -> sqrt(t)`` on [0, 1) with 0 and 1 identified."""

    kind = "sqrt_circle"

    def lift(self, t):
        k = math.floor(t)
        return k + math.sqrt(t - k)

    def lift_inv(self, t):
        k = math.floor(t)
        return k + (t - k) ** 2

    def flift(self, t, inverse=False):
        k = np.floor(t)
        s = t - k
        return k + (s * s if inverse else np.sqrt(s))


@dataclass(frozen=True, repr=False)
class SineCircleMap(CircleMap):
    """Lift ``F(t) = t + shift + a sin(2 pi t)``; a homeomorphism for ``2 pi |a| < 1``."""

    a: float = 0.1
    shift: float = 0.0
    kind = "sine_circle"

    def __post_init__(self):
        if not 2 * math.pi * abs(self.a) < 1:
            raise ValueError("sine circle map needs 2*pi*|a| < 1 to be a homeomorphism")

    @property
    def id(self):
        return f"sine_circle({self.a},{self.shift})"

    def lift(self, t):
        return t + self.shift + self.a * math.sin(2 * math.pi * t)

    def lift_inv(self, t):
        return float(self.flift(np.array([t]), inverse=True)[0])

    def flift(self, t, inverse=False):
        t = np.asarray(t, dtype=float)
        if not inverse:
            return t + self.shift + self.a * np.sin(2 * np.pi * t)
        s = t - self.shift
        for _ in range(100):
            r = s + self.shift + self.a * np.sin(2 * np.pi * s) - t
            s = s - r / (1 + 2 * np.pi * self.a * np.cos(2 * np.pi * s))
            if np.max(np.abs(r), initial=0.0) < 1e-15:
                break
        return s

    def to_json(self):
        return {"kind": "sine_circle", "a": self.a, "shift": self.shift}


@dataclass(frozen=True, repr=False)
class Conjugate(CircleMap):
    """``h o base o h^-1`` for circle maps ``base`` and ``h``."""

    base: CircleMap
    h: CircleMap
    kind = "conjugate"

    @property
    def id(self):
        return f"conjugate({self.base.id},{self.h.id})"

    def lift(self, t):
        return self.h.lift(self.base.lift(self.h.lift_inv(t)))

    def lift_inv(self, t):
        return self.h.lift(self.base.lift_inv(self.h.lift_inv(t)))

    def flift(self, t, inverse=False):
        s = self.h.flift(t, inverse=True)
        s = self.base.flift(s, inverse=inverse)
        return self.h.flift(s)

    def to_json(self):
        return {"kind": "conjugate", "base": self.base.to_json(), "h": self.h.to_json()}


# ---------------------------------------------------------------------------
# Denjoy-type maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DenjoyParams:
    """Blow-up of the rotation orbit ``{n alpha : |n| <= K}``.

    Each orbit point ``n alpha`` is opened into an arc of length
    ``c 2^-|n| / 3``; the rest of the circle is scaled by ``1 - S_K``
    where ``S_K`` is the total inserted length.
    """

    alpha: float = GOLDEN
    K: int = 20
    c: float = 0.5

    def __post_init__(self):
        if not 0 < self.c < 1:
            raise ValueError("Denjoy inserted length c must lie in (0, 1)")
        if self.K < 1:
            raise ValueError("Denjoy truncation K must be at least 1")

    @property
    def lengths(self) -> dict[int, float]:
        return {n: self.c * 2.0 ** -abs(n) / 3.0 for n in range(-self.K, self.K + 1)}

    @property
    def e_K(self) -> float:
        """Length left out by the truncation, ``c * sum_{|n|>K} 2^-|n| / 3``."""
        return self.c * 2.0 ** (1 - self.K) / 3.0

    @property
    def ramp(self) -> float:
        return self.e_K


@dataclass(frozen=True, repr=False)
class Denjoy(CircleMap):
    """Truncated Denjoy homeomorphism ``Phi o R_alpha o Phi^-1``.

    ``Phi`` is a piecewise linear homeomorphism that stretches each ramp
    ``[n alpha, n alpha + w]`` (``w = e_K``) onto an arc ``I_n`` of length
    ``l_n + (1 - S_K) w``, so ``f`` carries ``I_n`` affinely onto ``I_{n+1}``
    for ``|n| < K`` and ``I_K`` onto the short image of the next ramp.  The
    rotation number is exactly ``alpha``; ``I_0`` stays disjoint from its
    images for as long as the rotation ramps stay disjoint.
    """

    params: DenjoyParams = field(default_factory=DenjoyParams)
    kind = "denjoy"

    @property
    def id(self):
        p = self.params
        return f"denjoy({p.alpha},{p.K},{p.c})"

    @cached_property
    def _tables(self):
        p = self.params
        lengths = p.lengths
        thetas = {n: (n * p.alpha) % 1.0 for n in lengths}
        w = p.ramp
        a = 1.0 - sum(lengths.values())
        th = np.array([thetas[n] for n in lengths])
        ln = np.array([lengths[n] for n in lengths])

        def phi(x):
            s = x[:, None] - th[None, :]
            fl = np.floor(s)
            g = fl + np.minimum((s - fl) / w, 1.0)
            return a * x + (ln[None, :] * g).sum(axis=1)

        knots = np.unique(np.concatenate([[0.0], th, (th + w) % 1.0]))
        X = np.concatenate([knots, [1.0]])
        Y = phi(X)
        Y[-1] = Y[0] + 1.0
        return X, Y, thetas

    def phi(self, x):
        X, Y, _ = self._tables
        x = np.asarray(x, dtype=float)
        k = np.floor(x)
        return k + np.interp(x - k, X, Y)

    def phi_inv(self, t):
        X, Y, _ = self._tables
        t = np.asarray(t, dtype=float)
        k = np.floor(t - Y[0])
        return k + np.interp(t - k, Y, X)

    def arc(self, n: int) -> tuple[float, float]:
        """Endpoints (lift values in [0, 2)) of the inserted arc ``I_n``."""
        _, _, thetas = self._tables
        th = thetas[n]
        left = float(self.phi(th))
        right = float(self.phi(th + self.params.ramp))
        return left % 1.0, left % 1.0 + (right - left)

    def flift(self, t, inverse=False):
        a = -self.params.alpha if inverse else self.params.alpha
        return self.phi(self.phi_inv(t) + a)

    def lift(self, t):
        return float(self.flift(t))

    def lift_inv(self, t):
        return float(self.flift(t, inverse=True))

    def to_json(self):
        p = self.params
        return {"kind": "denjoy", "alpha": p.alpha, "K": p.K, "c": p.c}


_DENJOY_CACHE: dict[DenjoyParams, Denjoy] = {}


def denjoy_eval(params: DenjoyParams, t: float) -> float:
    """Value of the truncated Denjoy homeomorphism at circle coordinate ``t``."""
    system = _DENJOY_CACHE.setdefault(params, Denjoy(params))
    return wrap(system.lift(t % 1.0))


# ---------------------------------------------------------------------------
# Torus and shift
# ---------------------------------------------------------------------------


@dataclass(frozen=True, repr=False)
class CatMap(SystemModel):
    """The automorphism ``[[2, 1], [1, 1]]`` of the torus, exact on rationals."""

    space = Torus()
    kind = "cat_map"
    exact = True

    def step(self, x):
        return TorusPoint(2 * x.p + x.q, x.p + x.q)

    def step_inv(self, x):
        return TorusPoint(x.p - x.q, -x.p + 2 * x.q)

    def table(self, points: Sequence[TorusPoint], nmin: int, nmax: int) -> np.ndarray:
        """Exact integer iteration on a common denominator, converted to floats at the end."""
        W = nmax - nmin + 1
        if not points:
            return np.zeros((0, W, 2))
        q = 1
        for x in points:
            q = math.lcm(q, x.p.denominator, x.q.denominator)
        if q > 2**40:
            rows = [Torus().coords_array(orbit_segment(self, x, nmin, nmax)) for x in points]
            return np.stack(rows)
        P = np.array([int(x.p * q) for x in points], dtype=np.int64)
        Q = np.array([int(x.q * q) for x in points], dtype=np.int64)
        out = np.empty((len(points), W, 2), dtype=np.int64)
        anchor = min(max(0, nmin), nmax)
        p, s = P, Q
        for _ in range(anchor):
            p, s = (2 * p + s) % q, (p + s) % q
        out[:, anchor - nmin, 0], out[:, anchor - nmin, 1] = p, s
        cp, cs = p, s
        for n in range(anchor + 1, nmax + 1):
            cp, cs = (2 * cp + cs) % q, (cp + cs) % q
            out[:, n - nmin, 0], out[:, n - nmin, 1] = cp, cs
        cp, cs = p, s
        for n in range(anchor - 1, nmin - 1, -1):
            cp, cs = (cp - cs) % q, (-cp + 2 * cs) % q
            out[:, n - nmin, 0], out[:, n - nmin, 1] = cp, cs
        return out / q


@dataclass(frozen=True, repr=False)
class Shift(SystemModel):
    """The left shift ``(sigma x)_n = x_{n+1}`` on two-sided binary sequences."""

    space = BinarySeqSpace()
    kind = "shift"
    exact = True

    def step(self, x):
        return x.shifted(1)

    def step_inv(self, x):
        return x.shifted(-1)


# ---------------------------------------------------------------------------
# Combinators
# ---------------------------------------------------------------------------


@dataclass(frozen=True, repr=False)
class Product(SystemModel):
    f: SystemModel
    g: SystemModel
    kind = "product"

    @property
    def space(self):
        return ProductSpace(self.f.space, self.g.space)

    @property
    def exact(self):
        return self.f.exact and self.g.exact

    @property
    def id(self):
        return f"product({self.f.id},{self.g.id})"

    def step(self, x):
        return ProductPoint(self.f.step(x.a), self.g.step(x.b))

    def step_inv(self, x):
        return ProductPoint(self.f.step_inv(x.a), self.g.step_inv(x.b))

    @property
    def vectorized(self):
        return self.f.vectorized and self.g.vectorized

    def fstep(self, c, inverse=False):
        k = len(self.f.space.axes)
        return np.concatenate(
            [self.f.fstep(c[:, :k], inverse), self.g.fstep(c[:, k:], inverse)], axis=1
        )

    def to_json(self):
        return {"kind": "product", "f": self.f.to_json(), "g": self.g.to_json()}


@dataclass(frozen=True, repr=False)
class Iterate(SystemModel):
    """The power ``base^k`` (``k >= 1``), evaluated by ``k`` single steps."""

    base: SystemModel
    k: int = 2
    kind = "iterate"

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("iterate power must be positive")

    @property
    def space(self):
        return self.base.space

    @property
    def exact(self):
        return self.base.exact

    @property
    def id(self):
        return f"iterate({self.base.id},{self.k})"

    def step(self, x):
        for _ in range(self.k):
            x = self.base.step(x)
        return x

    def step_inv(self, x):
        for _ in range(self.k):
            x = self.base.step_inv(x)
        return x

    @property
    def vectorized(self):
        return self.base.vectorized

    def fstep(self, c, inverse=False):
        for _ in range(self.k):
            c = self.base.fstep(c, inverse)
        return c

    def lift(self, t):
        for _ in range(self.k):
            t = self.base.lift(t)
        return t

    def to_json(self):
        return {"kind": "iterate", "base": self.base.to_json(), "k": self.k}


def sqrt_times_rotation(alpha: Real = GOLDEN) -> Product:
    """``sqrt`` on [0, 1] times a rotation of the circle."""
    return Product(SqrtInterval(), Rotation(alpha))


def sqrt_torus(alpha: Real = GOLDEN) -> Product:
    """``(t1, t2) -> (sqrt t1, t2 + alpha)`` on the 2-torus as circle x circle."""
    return Product(SqrtCircle(), Rotation(alpha))


def identity_times_cat() -> Product:
    return Product(IdentityCircle(), CatMap())


# ---------------------------------------------------------------------------
# Descriptors
# ---------------------------------------------------------------------------


def system_from_json(obj: dict) -> SystemModel:
    """Build a system from a descriptor such as ``{"kind": "rotation", "alpha": "1/3"}``."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ValueError(f"invalid system descriptor {obj!r}")
    kind = obj["kind"]
    if kind == "rotation":
        return Rotation(parse_real(obj.get("alpha", GOLDEN)))
    if kind == "identity":
        return Identity(space_from_json(obj.get("space", {"kind": "interval"})))
    if kind == "identity_interval":
        return IdentityInterval()
    if kind == "identity_circle":
        return IdentityCircle()
    if kind == "north_south":
        return NorthSouth()
    if kind == "sqrt_interval":
        return SqrtInterval()
    if kind == "sqrt_circle":
        return SqrtCircle()
    if kind == "cat_map":
        return CatMap()
    if kind == "shift":
        return Shift()
    if kind == "sine_circle":
        return SineCircleMap(float(obj.get("a", 0.1)), float(obj.get("shift", 0.0)))
    if kind == "denjoy":
        return Denjoy(
            DenjoyParams(
                float(parse_real(obj.get("alpha", GOLDEN))),
                int(obj.get("K", 20)),
                float(obj.get("c", 0.5)),
            )
        )
    if kind == "conjugate":
        return Conjugate(system_from_json(obj["base"]), system_from_json(obj["h"]))
    if kind == "product":
        return Product(system_from_json(obj["f"]), system_from_json(obj["g"]))
    if kind == "iterate":
        return Iterate(system_from_json(obj["base"]), int(obj.get("k", 2)))
    raise ValueError(f"unknown system kind {kind!r}")
