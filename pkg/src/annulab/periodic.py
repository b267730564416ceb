"""Periodic orbits of the lifted map: root finding, prime periods, coprime scans."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import MapSpec, annulus_distance, as_points, iterate, orbit_arrays, seed_grid, wrap
from .rotation import (NotPeriodicError, RotationInterval, farey_enumerate, rotation_interval,
                       rotation_of_periodic)

FD_STEP = 1e-7
MAX_NEWTON = 50
RANK_RTOL = 1e-9
DEDUP_TOL = 1e-6


def worker_count() -> int:
    """Worker threads for seed/target level parallelism (``ANNULAB_WORKERS``)."""
    env = os.environ.get("ANNULAB_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass
class OrbitRecord:
    """A certified periodic orbit, points listed in iteration order."""

    points: tuple[tuple[float, float], ...]
    period: int
    rotation: Fraction
    residual: float
    prime_certified: bool
    family: dict = field(default_factory=dict)
    symmetric: bool | None = None
    non_isolated: bool = False

    def to_dict(self) -> dict:
        return {
            "family": self.family.get("family"),
            "params": self.family.get("params"),
            "period": self.period,
            "rotation": f"{self.rotation.numerator}/{self.rotation.denominator}",
            "points": [[float(x), float(y)] for x, y in self.points],
            "residual": float(self.residual),
            "prime_certified": self.prime_certified,
            "symmetric": self.symmetric,
            "non_isolated": self.non_isolated,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OrbitRecord":
        fam = {"family": d.get("family"), "params": d.get("params")}
        return cls(tuple((float(x), float(y)) for x, y in d["points"]), int(d["period"]),
                   Fraction(d["rotation"]), float(d["residual"]), bool(d["prime_certified"]),
                   fam, d.get("symmetric"), bool(d.get("non_isolated", False)))


def same_orbit(a: OrbitRecord, b: OrbitRecord, tol: float = DEDUP_TOL) -> bool:
    """True when the two point sets agree within ``tol`` (annulus metric)."""
    if a.period != b.period:
        return False
    pa, pb = np.asarray(a.points), np.asarray(b.points)
    d = annulus_distance(pa[:, None, 0], pa[:, None, 1], pb[None, :, 0], pb[None, :, 1])
    return bool(np.all(d.min(axis=1) < tol) and np.all(d.min(axis=0) < tol))


def dedup_orbits(records, tol: float = DEDUP_TOL) -> list[OrbitRecord]:
    kept: list[OrbitRecord] = []
    for r in records:
        if not any(same_orbit(r, k, tol) for k in kept):
            kept.append(r)
    return kept


def prime_period(spec: MapSpec, z, k: int, tol: float) -> int:
    """Least ``l | k`` with ``|f^l(z) - z| < tol``."""
    x, y = (z.x, z.y) if hasattr(z, "x") else (float(z[0]), float(z[1]))
    X, Y = orbit_arrays(spec, np.array([x]), np.array([y]), k)
    d = annulus_distance(X[:, 0], Y[:, 0], x, y)
    if not d[k] < tol:
        raise NotPeriodicError(f"|f^{k}(z) - z| = {d[k]:.3e} is not below {tol:.1e}")
    for l in range(1, k + 1):
        if k % l == 0 and d[l] < tol:
            return l
    return k  # unreachable


def _G(spec: MapSpec, x, y, p: int, q: int):
    X, Y = iterate(spec, x, y, q)
    return np.column_stack([X - x - p, Y - y])


def _clip_y(spec: MapSpec, y):
    if spec.closed:
        return np.clip(y, 0.0, 1.0)
    return np.clip(y, 1e-12, 1.0 - 1e-12)


def _jacobian(spec, x, y, p, q):
    # central differences: near a resonance the weak singular direction of J is
    # tiny and a one-sided difference would swamp it with truncation error
    h = FD_STEP
    yp = np.minimum(y + h, 1.0)
    ym = np.maximum(y - h, 0.0)
    J = np.empty((x.size, 2, 2))
    J[:, :, 0] = (_G(spec, x + h, y, p, q) - _G(spec, x - h, y, p, q)) / (2 * h)
    J[:, :, 1] = (_G(spec, x, yp, p, q) - _G(spec, x, ym, p, q)) / (yp - ym)[:, None]
    return J


@dataclass
class NewtonResult:
    x: np.ndarray
    y: np.ndarray
    residual: np.ndarray
    rank_deficient: np.ndarray
    iterations: np.ndarray


def newton_pq(spec: MapSpec, seeds, p: int, q: int, stop: float = 1e-14) -> NewtonResult:
    """Damped Newton on ``G(z) = f~^q(z) - T^p z`` for a batch of seeds.

    The step is ``-pinv(J) G`` with a relative rank cut; on a rank-deficient
    Jacobian (a circle of roots, as for a pure twist) this is the 1-D Newton
    step along the only direction in which ``G`` varies.  Each step is halved
    until ``|G|`` decreases.
    """
    pts = as_points(seeds)
    x = pts[:, 0].copy()
    y = _clip_y(spec, pts[:, 1].copy())
    G = _G(spec, x, y, p, q)
    res = np.abs(G).sum(axis=1)
    active = res > stop
    its = np.zeros(x.size, dtype=int)
    deficient = np.zeros(x.size, dtype=bool)
    for _ in range(MAX_NEWTON):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        J = _jacobian(spec, x[idx], y[idx], p, q)
        step = -np.einsum("nij,nj->ni", np.linalg.pinv(J, rcond=RANK_RTOL), G[idx])
        lam = np.ones(idx.size)
        pending = np.ones(idx.size, dtype=bool)
        for _halving in range(20):
            j = np.flatnonzero(pending)
            if j.size == 0:
                break
            k = idx[j]
            nx = x[k] + lam[j] * step[j, 0]
            ny = _clip_y(spec, y[k] + lam[j] * step[j, 1])
            nG = _G(spec, nx, ny, p, q)
            nres = np.abs(nG).sum(axis=1)
            ok = nres < res[k]
            acc = j[ok]
            ka = idx[acc]
            x[ka], y[ka], G[ka], res[ka] = nx[ok], ny[ok], nG[ok], nres[ok]
            pending[acc] = False
            lam[j[~ok]] *= 0.5
        its[idx] += 1
        # no decrease possible: converged to round-off or stuck
        active[idx[pending]] = False
        active &= res > stop
    # rank at the final point
    J = _jacobian(spec, x, y, p, q)
    s = np.linalg.svd(J, compute_uv=False)
    deficient = s[:, 1] <= RANK_RTOL * np.maximum(s[:, 0], 1e-300)
    return NewtonResult(x, y, res, deficient, its)


def _orbit_record(spec: MapSpec, x: float, y: float, p: int, q: int, tol: float,
                  non_isolated: bool) -> OrbitRecord | None:
    X, Y = orbit_arrays(spec, np.array([x]), np.array([y]), 2 * q)
    X, Y = X[:, 0], Y[:, 0]
    resid = float(np.max(np.abs(X[q:2 * q] - X[:q] - p) + np.abs(Y[q:2 * q] - Y[:q])))
    if not resid < tol:
        return None
    pts = [(wrap(float(a)), float(b)) for a, b in zip(X[:q], Y[:q])]
    start = min(range(q), key=lambda i: (pts[i][0], pts[i][1]))
    pts = pts[start:] + pts[:start]
    try:
        period = prime_period(spec, pts[0], q, tol)
        rot = rotation_of_periodic(spec, (pts[0], q))
    except NotPeriodicError:
        return None
    return OrbitRecord(tuple(pts), q, rot, resid, period == q, spec.to_record(),
                       symmetric=None, non_isolated=bool(non_isolated))


@dataclass
class PQSearch:
    target: Fraction
    orbits: list[OrbitRecord]
    converged: int
    singular_skipped: int
    failed: int


def search_pq(spec: MapSpec, target: Fraction, seeds, tol: float = 1e-10,
              dedup_tol: float = DEDUP_TOL, shooting: bool = True) -> PQSearch:
    """Newton from every seed; radial shooting from the seed heights if that fails."""
    target = Fraction(target)
    p, q = target.numerator, target.denominator
    pts = as_points(seeds)
    if pts.shape[0] == 0:
        raise ValueError("no seeds")
    nr = newton_pq(spec, pts, p, q)
    recs = []
    skipped = failed = conv = 0
    for i in range(pts.shape[0]):
        if not nr.residual[i] < tol:
            # a rank-deficient Jacobian away from a root: nothing to step along
            if nr.rank_deficient[i]:
                skipped += 1
            else:
                failed += 1
            continue
        conv += 1
        rec = _orbit_record(spec, float(nr.x[i]), float(nr.y[i]), p, q, tol, nr.rank_deficient[i])
        if rec is None or rec.rotation != target or not rec.prime_certified:
            failed += 1
            continue
        recs.append(rec)
    orbits = dedup_orbits(recs, dedup_tol)
    if any(o.non_isolated for o in orbits):
        # a numerically degenerate circle of solutions counts as one orbit
        orbits = [min(orbits, key=lambda o: (not o.non_isolated, o.residual))]
    if not orbits and shooting:
        for y0 in sorted(set(np.round(pts[:, 1], 12)), key=lambda v: (abs(v - pts[0, 1]), v)):
            orbits = shoot_pq(spec, target, float(y0), tol)
            if orbits:
                break
    return PQSearch(target, orbits, conv, skipped, failed)


def _displacement_height(spec: MapSpec, x, y0, p: int, q: int, iters: int = 40):
    """Solve ``X_q(x, y) - x - p = 0`` for ``y`` on each vertical line (1-D Newton)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = _clip_y(spec, np.full(x.shape, float(y0)))
    h = FD_STEP
    for _ in range(iters):
        g = _G(spec, x, y, p, q)[:, 0]
        d = (_G(spec, x, y + h, p, q)[:, 0] - _G(spec, x, y - h, p, q)[:, 0]) / (2 * h)
        d = np.where(np.abs(d) < 1e-12, 1e-12, d)
        step = np.clip(g / d, -0.05, 0.05)
        y = _clip_y(spec, y - step)
        if np.all(np.abs(step) < 1e-15):
            break
    G = _G(spec, x, y, p, q)
    return y, G


def shoot_pq(spec: MapSpec, target, y0: float, tol: float = 1e-10, n_grid: int | None = None,
             max_orbits: int = 2) -> list[OrbitRecord]:
    """``(p, q)`` orbits by shooting along the curve of exact ``p/q`` displacement.

    On every vertical line the height with ``X_q - x = p`` is found by a 1-D
    Newton solve; the vertical return ``g(x) = Y_q - y`` along that curve is
    sampled on ``n_grid`` circle positions and its sign changes are refined
    with Brent's method.  Near a high-order resonance ``g`` is tiny but smooth,
    so this succeeds where the 2-D Newton step is dominated by the strong
    twist direction.
    """
    from scipy.optimize import brentq

    target = Fraction(target)
    p, q = target.numerator, target.denominator
    n = n_grid or 8 * q
    xs = np.arange(n + 1) / n
    ys, G = _displacement_height(spec, xs, y0, p, q)
    ok = np.abs(G[:, 0]) < tol
    g = G[:, 1]
    found: list[OrbitRecord] = []
    if np.all(ok) and np.all(np.abs(g) < tol):
        rec = _orbit_record(spec, float(xs[0]), float(ys[0]), p, q, tol, True)
        return [rec] if rec is not None and rec.rotation == target else []
    y_guess = {}

    def gfun(x):
        yy, GG = _displacement_height(spec, [x], y_guess["y"], p, q)
        y_guess["last"] = float(yy[0])
        return float(GG[0, 1])

    for i in range(n):
        if not (ok[i] and ok[i + 1]) or g[i] * g[i + 1] > 0:
            continue
        if any(circle_dist_to_orbit(xs[i], ys[i], r) < 0.5 / n for r in found):
            continue
        y_guess["y"] = float(ys[i])
        if g[i] == 0.0:
            xr = xs[i]
            y_guess["last"] = float(ys[i])
        else:
            xr = brentq(gfun, xs[i], xs[i + 1], xtol=1e-15, rtol=4 * np.finfo(float).eps)
            gfun(xr)
        rec = _orbit_record(spec, float(xr), y_guess["last"], p, q, tol, False)
        if rec is None or rec.rotation != target or not rec.prime_certified:
            continue
        if not any(same_orbit(rec, r) for r in found):
            found.append(rec)
        if len(found) >= max_orbits:
            break
    return found


def circle_dist_to_orbit(x: float, y: float, rec: OrbitRecord) -> float:
    P = np.asarray(rec.points)
    return float(np.min(annulus_distance(P[:, 0], P[:, 1], x, y)))


def find_pq_orbit(spec: MapSpec, target, seeds, tol: float = 1e-10) -> list[OrbitRecord]:
    """Orbits with ``f~^q(z) = T^p z`` for ``target = p/q``, one record per distinct orbit."""
    return search_pq(spec, Fraction(target), seeds, tol).orbits


# ---------------------------------------------------------------------------
# coprime period scan
# ---------------------------------------------------------------------------

def default_scan_seeds(spec: MapSpec, ny: int = 21, nx: int = 2) -> np.ndarray:
    if spec.closed:
        return seed_grid(nx, ny, (0.0, 1.0))
    return seed_grid(nx, ny, (1e-3, 1.0 - 1e-3))


def target_seeds(interval: RotationInterval, target: Fraction, n_x: int = 4) -> np.ndarray:
    """Newton seeds for ``target``: heights whose measured rotation brackets it.

    The two converged estimates closest to the target from below and above
    give their heights plus the linearly interpolated one; each height is
    paired with ``n_x`` circle positions spread over ``[0, 1/q)``.
    """
    t = float(target)
    good = [e for e in interval.estimates if e.converged]
    below = [e for e in good if e.value < t]
    above = [e for e in good if e.value > t]
    ys = []
    if below and above:
        lo = max(below, key=lambda e: (e.value, -e.seed[1]))
        hi = min(above, key=lambda e: (e.value, e.seed[1]))
        y_lo, y_hi = lo.seed[1], hi.seed[1]
        ys = [y_lo + (t - lo.value) * (y_hi - y_lo) / (hi.value - lo.value), y_lo, y_hi]
    else:
        near = sorted(good, key=lambda e: (abs(e.value - t), e.seed[1]))[:3]
        ys = [e.seed[1] for e in near]
    uniq = []
    for v in ys:
        if all(abs(v - u) > 1e-12 for u in uniq):
            uniq.append(v)
    q = target.denominator
    xs = [j / (n_x * q) for j in range(n_x)]
    return np.array([(x, y) for y in uniq for x in xs], dtype=float)


@dataclass
class TargetResult:
    target: Fraction
    orbits: list[OrbitRecord]
    converged: int = 0
    singular_skipped: int = 0
    failed: int = 0


@dataclass
class CoprimeScanReport:
    n0: int
    q_max: int
    interval: RotationInterval
    degenerate: bool
    results: list[TargetResult]

    @property
    def orbits(self) -> list[OrbitRecord]:
        return [o for r in self.results for o in r.orbits]

    @property
    def periods(self) -> list[int]:
        return [o.period for o in self.orbits]

    @property
    def satisfied(self) -> list[Fraction]:
        return [r.target for r in self.results if r.orbits]

    def summary(self) -> dict:
        return {
            "n0": self.n0,
            "q_max": self.q_max,
            "interval": [self.interval.lower, self.interval.upper],
            "degenerate_interval": self.degenerate,
            "targets": len(self.results),
            "targets_with_orbits": len(self.satisfied),
            "orbits": len(self.orbits),
            "truncation": f"periods limited to q <= {self.q_max}",
        }


def coprime_period_scan(spec: MapSpec, n0: int, q_max: int, seeds=None, tol: float = 1e-10,
                        n_max: int = 2000, rot_tol: float = 1e-4, workers: int | None = None) -> CoprimeScanReport:
    """Periodic orbits with periods prime to ``n0``, up to ``q_max``.

    Measures the rotation interval over ``seeds``, enumerates the irreducible
    ``p/q`` inside it with ``gcd(q, n0) = 1`` and solves for a ``(p, q)``
    orbit for each.  A degenerate interval (one rotation number only) is
    reported with no targets; nothing can be enumerated in that case.
    """
    if seeds is None:
        seeds = default_scan_seeds(spec)
    interval = rotation_interval(spec, seeds, n_max, rot_tol)
    if interval.degenerate:
        return CoprimeScanReport(n0, q_max, interval, True, [])
    targets = farey_enumerate(interval.lower, interval.upper, q_max, n0)

    def solve(t):
        s = search_pq(spec, t, target_seeds(interval, t), tol)
        return TargetResult(t, s.orbits, s.converged, s.singular_skipped, s.failed)

    n_workers = worker_count() if workers is None else workers
    if n_workers > 1 and len(targets) > 1:
        with ThreadPoolExecutor(n_workers) as ex:
            results = list(ex.map(solve, targets))
    else:
        results = [solve(t) for t in targets]
    return CoprimeScanReport(n0, q_max, interval, False, results)


def orbit_closes(spec: MapSpec, rec: OrbitRecord, tol: float) -> bool:
    """Iterating ``f`` from ``points[0]`` reproduces the listed points cyclically."""
    P = np.asarray(rec.points)
    X, Y = orbit_arrays(spec, P[:1, 0], P[:1, 1], rec.period)
    d = annulus_distance(wrap(X[:, 0]), Y[:, 0], np.append(P[:, 0], P[0, 0]), np.append(P[:, 1], P[0, 1]))
    return bool(np.all(d < tol))


__all__ = [
    "OrbitRecord", "find_pq_orbit", "search_pq", "prime_period", "coprime_period_scan",
    "CoprimeScanReport", "dedup_orbits", "same_orbit", "newton_pq", "orbit_closes", "math",
]
