"""Rotation numbers, rotation intervals and Farey enumeration."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import MapSpec, annulus_distance, as_points, orbit_arrays, wrap

DEFAULT_RADIUS = 0.05


@dataclass
class RotationEstimate:
    """Rotation number of one seed, read off at its recurrence times.

    ``recurrence_times`` are the ``n`` (up to ``iterations``) at which the
    projected orbit re-entered the ball around the seed.  ``recurrent`` is
    false when no return happened within the budget; ``value`` is then the
    plain Birkhoff quotient.
    """

    value: float
    iterations: int
    recurrence_times: list[int]
    error_bound: float
    converged: bool
    recurrent: bool = True
    seed: tuple[float, float] | None = None

    def to_dict(self) -> dict:
        return {
            "seed": list(self.seed) if self.seed is not None else None,
            "value": self.value,
            "error": self.error_bound,
            "n": self.iterations,
            "returns": len(self.recurrence_times),
            "converged": self.converged,
            "recurrent": self.recurrent,
        }


def _estimate_from_orbit(X: np.ndarray, Y: np.ndarray, tol: float, radius: float) -> RotationEstimate:
    """Estimator applied to one lifted orbit prefix ``X[0..n], Y[0..n]``.

    At every recurrence ``n_k`` the quotient ``e_k = (X[n_k] - X[0]) / n_k``
    is formed.  The window of recurrence ``k`` holds the estimates with
    ``n_j >= n_k / 2`` and never fewer than the last three; its spread is the
    error bound, and the estimate converges at the first window whose spread
    is below ``tol``.
    """
    n_max = X.shape[0] - 1
    d = annulus_distance(X[1:], Y[1:], X[0], Y[0])
    times = np.flatnonzero(d < radius) + 1
    if times.size == 0:
        value = float((X[-1] - X[0]) / n_max)
        return RotationEstimate(value, n_max, [], math.inf, False, recurrent=False)
    est = (X[times] - X[0]) / times
    err = math.inf if times.size < 2 else float(abs(est[-1] - est[-2]))
    for k in range(2, times.size):
        lo = np.searchsorted(times, times[k] / 2.0, side="left")
        lo = min(lo, k - 2)
        window = est[lo:k + 1]
        err = float(window.max() - window.min())
        if err < tol:
            return RotationEstimate(float(est[k]), int(times[k]), times[:k + 1].tolist(), err, True)
    return RotationEstimate(float(est[-1]), n_max, times.tolist(), err, False)


def rotation_estimate(spec: MapSpec, z, n_max: int, tol: float, radius: float = DEFAULT_RADIUS) -> RotationEstimate:
    """Estimate ``rho(f~, z)`` for a single annulus point ``z``."""
    return rotation_estimates(spec, [z], n_max, tol, radius)[0]


def rotation_estimates(spec: MapSpec, seeds, n_max: int, tol: float,
                       radius: float = DEFAULT_RADIUS) -> list[RotationEstimate]:
    """Vectorised :func:`rotation_estimate` over a batch of seeds."""
    if n_max < 10:
        raise ValueError("n_max must be >= 10")
    pts = as_points(seeds)
    X, Y = orbit_arrays(spec, wrap(pts[:, 0]), pts[:, 1], n_max)
    out = []
    for i in range(pts.shape[0]):
        est = _estimate_from_orbit(X[:, i], Y[:, i], tol, radius)
        est.seed = (float(pts[i, 0]), float(pts[i, 1]))
        out.append(est)
    return out


class NotPeriodicError(ValueError):
    """The point does not close up at the stated period."""


def rotation_of_periodic(spec: MapSpec, orbit) -> Fraction:
    """Rotation number ``l/k`` of a periodic orbit (reduced).

    ``orbit`` is an :class:`~annulab.periodic.OrbitRecord` or a pair
    ``(point, period)``.
    """
    if isinstance(orbit, tuple):
        (x, y), k = orbit
    else:
        (x, y), k = orbit.points[0], orbit.period
    if k < 1:
        raise ValueError("period must be >= 1")
    xt = np.array([float(x)])
    yy = np.array([float(y)])
    X, _ = orbit_arrays(spec, xt, yy, k)
    disp = float(X[k, 0] - X[0, 0])
    ell = round(disp)
    if abs(disp - ell) >= 0.1:
        raise NotPeriodicError(f"displacement {disp!r} after {k} steps is not near an integer")
    return Fraction(int(ell), int(k))


@dataclass
class RotationInterval:
    lower: float
    upper: float
    lower_witness: tuple[float, float]
    upper_witness: tuple[float, float]
    estimates: list[RotationEstimate] = field(repr=False)
    excluded: int = 0

    @property
    def degenerate(self) -> bool:
        return self.lower == self.upper

    def records(self) -> list[dict]:
        return [dict(index=i, **e.to_dict()) for i, e in enumerate(self.estimates)]


class IntervalUndefinedError(RuntimeError):
    """No seed produced a converged rotation estimate."""


def rotation_interval(spec: MapSpec, seeds, n_max: int, tol: float,
                      radius: float = DEFAULT_RADIUS, degenerate_tol: float | None = None) -> RotationInterval:
    """Smallest and largest converged rotation estimates over the seeds.

    Estimates closer than ``degenerate_tol`` (default ``tol``) to the extreme
    values are snapped so that an interval made of one rotation number is
    reported exactly degenerate.
    """
    pts = as_points(seeds)
    if pts.shape[0] < 2:
        raise ValueError("need at least two seeds")
    ests = rotation_estimates(spec, pts, n_max, tol, radius)
    good = [i for i, e in enumerate(ests) if e.converged]
    if not good:
        raise IntervalUndefinedError("no seed converged")
    lo_i = min(good, key=lambda i: (ests[i].value, i))
    hi_i = max(good, key=lambda i: (ests[i].value, -i))
    lo, hi = ests[lo_i].value, ests[hi_i].value
    snap = tol if degenerate_tol is None else degenerate_tol
    if hi - lo < snap:
        hi = lo
    return RotationInterval(lo, hi, tuple(pts[lo_i]), tuple(pts[hi_i]), ests, len(ests) - len(good))


@dataclass
class Window:
    """Axis-aligned box ``[x0, x1] x [y0, y1]`` in the annulus (``x1 - x0 < 1/2``)."""

    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError("window must have positive area")
        if self.x1 - self.x0 >= 0.5:
            raise ValueError("window x-extent must be < 1/2")

    def contains(self, x, y):
        return (np.mod(np.asarray(x) - self.x0, 1.0) <= self.x1 - self.x0) & (y >= self.y0) & (y <= self.y1)

    @property
    def center(self) -> tuple[float, float]:
        return (wrap(0.5 * (self.x0 + self.x1)), 0.5 * (self.y0 + self.y1))


@dataclass
class ReturnStats:
    """First-return bookkeeping for one seed in a window.

    ``m`` holds the lifted horizontal displacement accumulated between
    successive visits and ``tau`` the return times; ``ratio`` is
    ``sum(m) / sum(tau)``.
    """

    window: Window
    m: list[float]
    tau: list[int]
    recurrent: bool

    @property
    def m_sums(self) -> np.ndarray:
        return np.cumsum(self.m)

    @property
    def tau_sums(self) -> np.ndarray:
        return np.cumsum(self.tau)

    @property
    def ratio(self) -> float:
        if not self.tau:
            return math.nan
        return float(self.m_sums[-1] / self.tau_sums[-1])

    @property
    def error_bound(self) -> float:
        # a lifted displacement differs from n * rho by at most about one turn
        if not self.tau:
            return math.inf
        return 1.0 / float(self.tau_sums[-1])


def return_rotation_estimate(spec: MapSpec, window: Window, budget: int, seed=None) -> ReturnStats:
    """Accumulate first returns of ``seed`` (default: window centre) to ``window``."""
    x, y = window.center if seed is None else seed
    X, Y = orbit_arrays(spec, np.array([x]), np.array([y]), budget)
    X, Y = X[:, 0], Y[:, 0]
    inside = window.contains(wrap(X), Y)
    visits = np.flatnonzero(inside[1:]) + 1
    if visits.size == 0:
        return ReturnStats(window, [], [], False)
    times = np.concatenate([[0], visits])
    m = np.diff(X[times])
    tau = np.diff(times)
    return ReturnStats(window, m.tolist(), tau.astype(int).tolist(), True)


def farey_enumerate(lo: float, hi: float, q_max: int, n0: int) -> list[Fraction]:
    """Irreducible ``p/q`` with ``lo < p/q < hi``, ``q <= q_max`` and ``gcd(q, n0) = 1``.

    Walks the Farey sequence of order ``q_max`` on each unit interval meeting
    ``(lo, hi)`` with the next-term recurrence, so every term is produced
    already reduced and in increasing order.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    if q_max < 1 or n0 < 1:
        raise ValueError("q_max and n0 must be >= 1")
    flo, fhi = Fraction(lo), Fraction(hi)
    out: list[Fraction] = []
    for k in range(math.floor(lo), math.ceil(hi)):
        a, b, c, d = 0, 1, 1, q_max
        terms = [(0, 1)]
        while c <= q_max:
            t = (q_max + b) // d
            a, b, c, d = c, d, t * c - a, t * d - b
            terms.append((a, b))
        for p, q in terms[:-1] if k + 1 < math.ceil(hi) else terms:
            r = Fraction(p + k * q, q)
            if r <= flo:
                continue
            if r >= fhi:
                break
            if math.gcd(q, n0) == 1:
                out.append(r)
    return out


def format_rationals(rs) -> list[str]:
    return [f"{r.numerator}/{r.denominator}" for r in rs]
