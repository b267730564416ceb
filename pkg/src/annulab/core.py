"""Annulus coordinates, the universal cover, and the map-family abstraction.

Points of the annulus are stored as ``x in [0, 1)`` (the circle coordinate)
and ``y in [0, 1]``.  Points of the universal cover keep the unbounded circle
coordinate ``xt`` explicitly; every evaluator in this package works on lifted
coordinates and only projects at the end, so no orbit is ever "unwrapped"
after the fact.

All evaluators are vectorised: they accept scalars or numpy arrays of equal
shape for ``xt`` and ``y`` and return a pair of the same shape.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Mapping

import numpy as np

LiftFn = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


class DomainError(ValueError):
    """A coordinate lies outside the annulus."""


class EvaluationError(RuntimeError):
    """An evaluator produced a non-finite value while iterating."""

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} (step {step})")
        self.step = step


@dataclass(frozen=True)
class AnnulusPoint:
    x: float
    y: float

    def __post_init__(self):
        if not (0.0 <= self.x < 1.0):
            raise DomainError(f"circle coordinate {self.x!r} not in [0, 1)")
        if not (0.0 <= self.y <= 1.0):
            raise DomainError(f"radial coordinate {self.y!r} not in [0, 1]")

    def as_tuple(self) -> tuple[float, float]:
        return (self.x, self.y)


@dataclass(frozen=True)
class LiftedPoint:
    xt: float
    y: float

    def project(self) -> AnnulusPoint:
        return project(self)

    def deck(self, k: int) -> "LiftedPoint":
        return deck(self, k)


def wrap(x):
    """Reduce the circle coordinate to ``[0, 1)``.

    ``np.mod`` can return exactly 1.0 for tiny negative inputs; those are
    folded back to 0.
    """
    r = np.mod(x, 1.0)
    return np.where(r >= 1.0, 0.0, r) if isinstance(r, np.ndarray) else (0.0 if r >= 1.0 else float(r))


def project(zt: LiftedPoint) -> AnnulusPoint:
    if not (0.0 <= zt.y <= 1.0):
        raise DomainError(f"radial coordinate {zt.y!r} not in [0, 1]")
    return AnnulusPoint(wrap(zt.xt), zt.y)


def deck(zt: LiftedPoint, k: int) -> LiftedPoint:
    return LiftedPoint(zt.xt + k, zt.y)


def circle_distance(dx):
    """Distance on R/Z between points whose coordinates differ by ``dx``."""
    d = np.abs(np.mod(dx, 1.0))
    return np.minimum(d, 1.0 - d)


def annulus_distance(x1, y1, x2, y2):
    """The annulus metric ``min(|dx|, 1 - |dx|) + |dy|``."""
    return circle_distance(np.asarray(x1) - np.asarray(x2)) + np.abs(np.asarray(y1) - np.asarray(y2))


def as_points(points) -> np.ndarray:
    """Coerce AnnulusPoints, LiftedPoints, tuples or an array to an (N, 2) float array."""
    if isinstance(points, np.ndarray):
        arr = np.asarray(points, dtype=float)
        return arr.reshape(-1, 2)
    rows = []
    for p in points:
        if isinstance(p, AnnulusPoint):
            rows.append((p.x, p.y))
        elif isinstance(p, LiftedPoint):
            rows.append((p.xt, p.y))
        else:
            rows.append((float(p[0]), float(p[1])))
    return np.array(rows, dtype=float).reshape(-1, 2)


# ---------------------------------------------------------------------------
# map families
# ---------------------------------------------------------------------------

_FAMILY_BUILDERS: dict[str, Callable[[tuple, Mapping], "MapSpec"]] = {}


def register_family(name: str):
    """Register a builder ``(params, flags) -> MapSpec`` used by :func:`map_from_record`."""
    def deco(fn):
        _FAMILY_BUILDERS[name] = fn
        return fn
    return deco


@dataclass(frozen=True)
class MapSpec:
    """An invertible, liftable annulus map.

    ``lift`` and ``lift_inv`` act on the universal cover; the annulus maps
    :meth:`forward` and :meth:`inverse` are obtained by evaluating the lift on
    the representative in ``[0, 1)`` and projecting.
    """

    family: str
    params: tuple[float, ...]
    lift: LiftFn = field(repr=False, compare=False)
    lift_inv: LiftFn = field(repr=False, compare=False)
    reversible: bool = False
    closed: bool = True
    orientation: int = 1

    def forward(self, x, y):
        xt, y2 = self.lift(np.asarray(wrap(x), dtype=float), np.asarray(y, dtype=float))
        return wrap(xt), y2

    def inverse(self, x, y):
        xt, y2 = self.lift_inv(np.asarray(wrap(x), dtype=float), np.asarray(y, dtype=float))
        return wrap(xt), y2

    def contains(self, y) -> np.ndarray:
        y = np.asarray(y)
        if self.closed:
            return (y >= 0.0) & (y <= 1.0)
        return (y > 0.0) & (y < 1.0)

    def to_record(self) -> dict:
        return {
            "family": self.family,
            "params": [float(p) for p in self.params],
            "closed": self.closed,
            "reversible": self.reversible,
            "orientation": self.orientation,
        }


def map_from_record(record: Mapping) -> MapSpec:
    """Rebuild a :class:`MapSpec` from its text record (see :meth:`MapSpec.to_record`)."""
    # builders live in sibling modules; importing registers them
    from . import families, henon_heiles  # noqa: F401

    name = record["family"]
    if name not in _FAMILY_BUILDERS:
        raise ValueError(f"unknown family {name!r}")
    return _FAMILY_BUILDERS[name](tuple(record["params"]), record)


def shifted(spec: MapSpec, k: int) -> MapSpec:
    """The lift ``T^k o f~`` of the same annulus map."""
    def lift(xt, y):
        a, b = spec.lift(xt, y)
        return a + k, b

    def lift_inv(xt, y):
        return spec.lift_inv(np.asarray(xt) - k, y)

    return replace(spec, family=f"{spec.family}+T^{k}", lift=lift, lift_inv=lift_inv)


def power(spec: MapSpec, q: int) -> MapSpec:
    """The lift ``f~^q``."""
    if q < 1:
        raise ValueError("power must be >= 1")

    def lift(xt, y):
        return iterate(spec, xt, y, q)

    def lift_inv(xt, y):
        for _ in range(q):
            xt, y = spec.lift_inv(xt, y)
        return xt, y

    return replace(spec, family=f"{spec.family}^{q}", lift=lift, lift_inv=lift_inv)


def inverse_map(spec: MapSpec) -> MapSpec:
    """The lift ``f~^{-1}`` packaged as a map."""
    return replace(spec, family=f"{spec.family}^-1", lift=spec.lift_inv, lift_inv=spec.lift)


def iterate(spec: MapSpec, xt, y, n: int):
    """Apply the lift ``n`` times (vectorised)."""
    xt = np.asarray(xt, dtype=float)
    y = np.asarray(y, dtype=float)
    for _ in range(n):
        xt, y = spec.lift(xt, y)
    return xt, y


def orbit_arrays(spec: MapSpec, xt, y, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Lifted orbit of length ``n + 1`` for a batch of seeds.

    Returns arrays of shape ``(n + 1,) + shape(xt)``.
    """
    xt = np.asarray(xt, dtype=float)
    y = np.asarray(y, dtype=float)
    X = np.empty((n + 1,) + xt.shape)
    Y = np.empty((n + 1,) + xt.shape)
    X[0], Y[0] = xt, y
    for i in range(1, n + 1):
        X[i], Y[i] = spec.lift(X[i - 1], Y[i - 1])
        if not (np.all(np.isfinite(X[i])) and np.all(np.isfinite(Y[i]))):
            raise EvaluationError(f"{spec.family}: non-finite iterate", i)
    return X, Y


def lift_orbit(spec: MapSpec, z0: LiftedPoint, n: int) -> list[LiftedPoint]:
    """``(z0, f~(z0), ..., f~^n(z0))``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    X, Y = orbit_arrays(spec, z0.xt, z0.y, n)
    return [LiftedPoint(float(a), float(b)) for a, b in zip(X, Y)]


@dataclass(frozen=True)
class LiftReport:
    projection_deviation: float
    deck_deviation: float
    inverse_deviation: float
    boundary_deviation: float
    samples: int
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.projection_deviation, self.deck_deviation,
                   self.inverse_deviation, self.boundary_deviation) < self.tol


def check_lift_consistency(spec: MapSpec, sample_count: int, tol: float, seed: int = 0) -> LiftReport:
    """Check the covering-space axioms of ``spec`` on random samples.

    Measures ``pi o f~ - f o pi`` (lift on far sheets vs the base sheet),
    ``f~ o T - T o f~``, ``f^-1 o f - id`` and, for closed annuli, the
    invariance of the two boundary circles.  Failures are reported, never
    raised.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    rng = np.random.default_rng(seed)
    xt = rng.uniform(-3.0, 3.0, sample_count)
    if spec.closed:
        y = rng.uniform(0.0, 1.0, sample_count)
    else:
        y = rng.uniform(1e-6, 1.0 - 1e-6, sample_count)

    ax, ay = spec.lift(xt, y)
    bx, by = spec.forward(wrap(xt), y)
    proj = float(np.max(annulus_distance(wrap(ax), ay, bx, by)))

    cx, cy = spec.lift(xt + 1.0, y)
    deck_dev = float(np.max(np.abs(cx - ax - 1.0) + np.abs(cy - ay)))

    ix, iy = spec.inverse(bx, by)
    inv = float(np.max(annulus_distance(ix, iy, wrap(xt), y)))

    bdev = 0.0
    if spec.closed:
        xb = rng.uniform(0.0, 1.0, max(2, sample_count // 10))
        for level in (0.0, 1.0):
            _, yb = spec.lift(xb, np.full_like(xb, level))
            bdev = max(bdev, float(np.max(np.abs(yb - level))))
    return LiftReport(proj, deck_dev, inv, bdev, sample_count, tol)


def gcd(a: int, b: int) -> int:
    return math.gcd(int(a), int(b))


def seed_grid(nx: int, ny: int, y_range: tuple[float, float] = (0.0, 1.0),
              x_range: tuple[float, float] = (0.0, 1.0)) -> np.ndarray:
    """Rectangular seed grid as an (nx*ny, 2) array, ordered by y then x.

    The x values exclude the right end point (it is the same circle point as
    the left one); the y values include both ends.
    """
    xs = np.linspace(x_range[0], x_range[1], nx, endpoint=False)
    ys = np.linspace(y_range[0], y_range[1], ny)
    Y, X = np.meshgrid(ys, xs, indexing="ij")
    return np.column_stack([X.ravel(), Y.ravel()])


def points_to_list(points: Iterable) -> list[list[float]]:
    return [[float(a), float(b)] for a, b in as_points(points)]
