"""The reflection R(x, y) = (-x, y), its fixed lines, and symmetric orbits.

For a map with ``f o R = R o f^-1`` a point ``z`` on a fixed line of ``R``
whose ``m``-th iterate is again on a fixed line satisfies ``f^{2m}(z) = z``
and its orbit is ``R``-invariant.  The searches here root-solve that
condition along the two lines ``x = 0`` and ``x = 1/2``; the lines are 1-D,
so bracketing plus bisection always converges.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import AnnulusPoint, MapSpec, annulus_distance, as_points, orbit_arrays, wrap
from .periodic import (DEDUP_TOL, CoprimeScanReport, OrbitRecord, _orbit_record, dedup_orbits,
                       prime_period, same_orbit)
from .rotation import NotPeriodicError, farey_enumerate, rotation_interval, rotation_of_periodic

DEFAULT_RESOLUTION = 512
BISECT_TOL = 1e-12
DEGENERATE_FRACTION = 0.9


def apply_R(z):
    """``R(x, y) = (-x mod 1, y)`` for an :class:`AnnulusPoint` or an ``(x, y)`` pair."""
    if isinstance(z, AnnulusPoint):
        return AnnulusPoint(wrap(-z.x), z.y)
    x, y = z
    return wrap(-np.asarray(x, dtype=float) if isinstance(x, np.ndarray) else -float(x)), y


def lift_R(xt, y, axis: float = 0.0):
    """Reflection of the universal cover about ``xt = axis``."""
    return 2.0 * axis - np.asarray(xt, dtype=float), y


@dataclass(frozen=True)
class SymmetryLine:
    id: str
    x: float

    def points(self, ys) -> np.ndarray:
        ys = np.asarray(ys, dtype=float)
        return np.column_stack([np.full(ys.shape, self.x), ys])


Y1 = SymmetryLine("Y1", 0.0)
Y2 = SymmetryLine("Y2", 0.5)
LINES = (Y1, Y2)


def line_by_id(name: str) -> SymmetryLine:
    for line in LINES:
        if line.id == name:
            return line
    raise ValueError(f"unknown symmetry line {name!r}")


def _line_heights(spec: MapSpec, resolution: int) -> np.ndarray:
    if spec.closed:
        return np.linspace(0.0, 1.0, resolution)
    return np.linspace(0.0, 1.0, resolution + 2)[1:-1]


@dataclass
class ReversibilityReport:
    annulus_deviation: float
    lift_deviation: float
    samples: int
    tol: float

    @property
    def deviation(self) -> float:
        return max(self.annulus_deviation, self.lift_deviation)

    @property
    def passed(self) -> bool:
        return self.deviation < self.tol


def check_reversible(spec: MapSpec, samples: int = 1000, tol: float = 1e-9, seed: int = 0) -> ReversibilityReport:
    """Max of ``|f o R(z) - R o f^-1(z)|`` on the annulus and its lifted analogue."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, samples)
    y = rng.uniform(0.0, 1.0, samples) if spec.closed else rng.uniform(1e-6, 1 - 1e-6, samples)
    ax, ay = spec.forward(*apply_R((x, y)))
    bx, by = apply_R(spec.inverse(x, y))
    dev = float(np.max(annulus_distance(ax, ay, bx, by)))
    xt = rng.uniform(-3.0, 3.0, samples)
    cx, cy = spec.lift(*lift_R(xt, y))
    dx, dy = lift_R(*spec.lift_inv(xt, y))
    ldev = float(np.max(np.abs(cx - dx) + np.abs(cy - dy)))
    return ReversibilityReport(dev, ldev, samples, tol)


# ---------------------------------------------------------------------------
# roots along a symmetry line
# ---------------------------------------------------------------------------

def _displacements(spec: MapSpec, line: SymmetryLine, ys, m: int) -> np.ndarray:
    """``X_j(line, y) - line.x`` for ``j = 0..m`` (shape ``(m + 1, len(ys))``)."""
    ys = np.asarray(ys, dtype=float)
    X, _ = orbit_arrays(spec, np.full(ys.shape, line.x), ys, m)
    return X - line.x


def _bracket_levels(d: np.ndarray, offset: float) -> list[tuple[int, float]]:
    """Sign changes of ``d - offset - k`` over integer ``k``: ``(index, level)`` pairs."""
    out = []
    lo = math.floor(float(np.min(d)) - offset)
    hi = math.ceil(float(np.max(d)) - offset)
    for k in range(lo, hi + 1):
        s = d - offset - k
        for i in range(d.size - 1):
            if s[i] == 0.0:
                out.append((i, offset + k))
            elif s[i] * s[i + 1] < 0:
                out.append((i, offset + k))
        if s[-1] == 0.0:
            out.append((d.size - 1, offset + k))
    return out


def _refine(spec: MapSpec, line: SymmetryLine, m: int, level: float, a: float, b: float) -> float:
    """Bisection on ``X_m(line, y) - line.x - level`` over ``[a, b]``, then a 1-D Newton polish."""
    def h(y):
        return float(_displacements(spec, line, [y], m)[m, 0] - level)

    fa = h(a)
    if fa == 0.0:
        return a
    fb = h(b)
    if fb == 0.0:
        return b
    while b - a > BISECT_TOL:
        c = 0.5 * (a + b)
        fc = h(c)
        if fc == 0.0:
            return c
        if (fc < 0) == (fa < 0):
            a, fa = c, fc
        else:
            b = c
    y = 0.5 * (a + b)
    best, fbest = y, abs(h(y))
    step = 1e-7
    for _ in range(5):
        if fbest == 0.0:
            break
        lo, hi = max(best - step, 0.0), min(best + step, 1.0)
        slope = (h(hi) - h(lo)) / (hi - lo)
        if slope == 0.0:
            break
        cand = best - h(best) / slope
        if not (0.0 <= cand <= 1.0):
            break
        fc = abs(h(cand))
        if fc >= fbest:
            break
        best, fbest = cand, fc
    return best


@dataclass
class LineCrossing:
    """A height ``y`` on ``line`` whose ``m``-th iterate lands on ``target_line``."""

    line: str
    y: float
    m: int
    target_line: str
    level: float


@dataclass
class SymmetricFixedPoints:
    """Result of the symmetric fixed point detector on one line.

    ``crossings`` are all heights where ``f`` maps the line point back onto
    the same line; ``fixed_points`` those among them that are fixed.  The
    remaining crossings are symmetric period-2 points.  ``degenerate`` marks
    a line that is (numerically) fixed as a whole; then ``fixed_points``
    holds one representative.
    """

    line: SymmetryLine
    fixed_points: list[AnnulusPoint]
    crossings: list[float]
    degenerate: bool = False

    def __len__(self):
        return len(self.fixed_points)

    def __iter__(self):
        return iter(self.fixed_points)


def symmetric_fixed_points(spec: MapSpec, line: SymmetryLine, resolution: int = DEFAULT_RESOLUTION,
                           tol: float = 1e-10) -> SymmetricFixedPoints:
    """Symmetric fixed points of ``f`` on ``line``.

    The lifted displacement ``d(y) = X(line, y) - line.x`` is sampled at
    ``resolution`` heights; every crossing of an integer is bisected.  A fixed
    point on the line exists exactly when ``f(line)`` meets the line, which is
    the case iff some crossing exists.
    """
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    ys = _line_heights(spec, resolution)
    d = _displacements(spec, line, ys, 1)[1]
    near = np.abs(d - np.round(d)) < tol
    if near.mean() > DEGENERATE_FRACTION:
        rep = AnnulusPoint(line.x, 0.5)
        fx, fy = spec.forward(rep.x, rep.y)
        fixed = [rep] if float(annulus_distance(fx, fy, rep.x, rep.y)) < tol else []
        return SymmetricFixedPoints(line, fixed, [], True)
    roots = []
    for i, level in _bracket_levels(d, 0.0):
        j = min(i + 1, ys.size - 1)
        y = _refine(spec, line, 1, level, float(ys[i]), float(ys[j])) if j != i else float(ys[i])
        if not any(abs(y - r) < 1e-9 for r in roots):
            roots.append(y)
    roots.sort()
    fixed = []
    for y in roots:
        fx, fy = spec.forward(line.x, y)
        if float(annulus_distance(fx, fy, line.x, y)) < tol:
            fixed.append(AnnulusPoint(line.x, y))
    return SymmetricFixedPoints(line, fixed, roots, False)


def sign_scan_crossings(spec: MapSpec, line: SymmetryLine, resolution: int) -> list[tuple[float, float]]:
    """Brackets ``(y_a, y_b)`` of integer crossings of ``d(y)`` from a plain sign scan."""
    ys = _line_heights(spec, resolution)
    d = _displacements(spec, line, ys, 1)[1]
    out = []
    for i, _level in _bracket_levels(d, 0.0):
        j = min(i + 1, ys.size - 1)
        out.append((float(ys[i]), float(ys[j])))
    return sorted(out)


# ---------------------------------------------------------------------------
# symmetric periodic orbits
# ---------------------------------------------------------------------------

def is_symmetric_orbit(spec: MapSpec | None, orbit: OrbitRecord, tol: float) -> tuple[bool, list[int] | None]:
    """Whether ``R`` maps the orbit's point set onto itself, with the permutation.

    Returns ``(True, perm)`` with ``R(points[i]) = points[perm[i]]`` within
    ``tol``, or ``(False, None)``.
    """
    P = np.asarray(orbit.points, dtype=float)
    rx, ry = apply_R((P[:, 0], P[:, 1]))
    d = annulus_distance(rx[:, None], ry[:, None], P[None, :, 0], P[None, :, 1])
    perm = [int(j) for j in np.argmin(d, axis=1)]
    if all(d[i, perm[i]] < tol for i in range(len(perm))) and len(set(perm)) == len(perm):
        return True, perm
    return False, None


def on_lines(points, tol: float) -> list[tuple[int, str]]:
    out = []
    for j, (x, _y) in enumerate(points):
        for line in LINES:
            if abs(((x - line.x + 0.5) % 1.0) - 0.5) < tol:
                out.append((j, line.id))
    return out


@dataclass
class SymmetricOrbitRecord:
    orbit: OrbitRecord
    crossings: list[tuple[int, str]] = field(default_factory=list)
    symmetry_type: str = "even"
    degenerate: bool = False

    @property
    def period(self) -> int:
        return self.orbit.period

    @property
    def rotation(self):
        return self.orbit.rotation

    def to_dict(self) -> dict:
        d = self.orbit.to_dict()
        d["crossings"] = [[j, line] for j, line in self.crossings]
        d["symmetry_type"] = self.symmetry_type
        d["degenerate"] = self.degenerate
        return d


def _symmetry_type(period: int) -> str:
    if period == 1:
        return "fixed"
    return "odd" if period % 2 else "even"


def _make_symmetric(spec: MapSpec, x: float, y: float, m: int, tol: float,
                    degenerate: bool, line_tol: float) -> SymmetricOrbitRecord | None:
    try:
        k = prime_period(spec, (x, y), 2 * m, tol)
        rot = rotation_of_periodic(spec, ((x, y), k))
    except NotPeriodicError:
        return None
    rec = _orbit_record(spec, x, y, rot.numerator * (k // rot.denominator), k, tol, degenerate)
    if rec is None:
        return None
    ok, _perm = is_symmetric_orbit(spec, rec, line_tol)
    if not ok:
        return None
    rec.symmetric = True
    return SymmetricOrbitRecord(rec, on_lines(rec.points, line_tol), _symmetry_type(k), degenerate)


def symmetric_orbit_search(spec: MapSpec, m_max: int, resolution: int = DEFAULT_RESOLUTION,
                           tol: float = 1e-9, line_tol: float = 1e-8,
                           database=None) -> list[SymmetricOrbitRecord]:
    """Symmetric periodic orbits through the symmetry lines, half-periods ``m <= m_max``.

    For each start line, ``m`` and target line, the heights where
    ``X_m(line, y) - line.x`` crosses ``(target.x - line.x) + k`` are bracketed
    on ``resolution`` samples and bisected.  The prime period of each root is
    certified afterwards.  Results are sorted by (period, rotation, first
    point) and deduplicated, also against ``database`` records if given.
    """
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    ys = _line_heights(spec, resolution)
    found: list[SymmetricOrbitRecord] = []
    for line in LINES:
        D = _displacements(spec, line, ys, m_max)
        for m in range(1, m_max + 1):
            d = D[m]
            for target in LINES:
                offset = target.x - line.x
                near = np.abs((d - offset) - np.round(d - offset)) < tol
                if near.mean() > DEGENERATE_FRACTION:
                    rec = _make_symmetric(spec, line.x, 0.5, m, tol, True, line_tol)
                    if rec is not None:
                        found.append(rec)
                    continue
                for i, level in _bracket_levels(d, offset):
                    j = min(i + 1, ys.size - 1)
                    y = _refine(spec, line, m, level, float(ys[i]), float(ys[j])) if j != i else float(ys[i])
                    rec = _make_symmetric(spec, line.x, y, m, tol, False, line_tol)
                    if rec is not None:
                        found.append(rec)
    found.sort(key=lambda r: (r.period, r.rotation, r.orbit.points[0]))
    out: list[SymmetricOrbitRecord] = []
    known = list(database or [])
    for r in found:
        if any(same_orbit(r.orbit, o.orbit, DEDUP_TOL) for o in out):
            continue
        if any(same_orbit(r.orbit, o, DEDUP_TOL) for o in known):
            continue
        out.append(r)
    return out


@dataclass
class SymmetricScanReport:
    n0: int
    q_max: int
    records: list[SymmetricOrbitRecord]
    targets: list = field(default_factory=list)
    missing: list = field(default_factory=list)

    @property
    def periods(self) -> list[int]:
        return [r.period for r in self.records]

    def summary(self) -> dict:
        return {
            "n0": self.n0,
            "q_max": self.q_max,
            "symmetric_orbits": len(self.records),
            "periods": sorted(set(self.periods)),
            "targets_checked": len(self.targets),
            "missing": [f"{t.numerator}/{t.denominator}" for t in self.missing],
            "truncation": f"periods limited to q <= {self.q_max}",
        }


def symmetric_period_scan(spec: MapSpec, n0: int, q_max: int, tol: float = 1e-9,
                          generic_report: CoprimeScanReport | None = None,
                          resolution: int = DEFAULT_RESOLUTION, line_tol: float = 1e-8) -> SymmetricScanReport:
    """Symmetric orbits with periods prime to ``n0`` up to ``q_max``.

    When ``generic_report`` (a :func:`~annulab.periodic.coprime_period_scan`
    result) is given, every rotation number it satisfied is checked for a
    symmetric representative; the ones without are listed in ``missing``.
    """
    recs = symmetric_orbit_search(spec, q_max, resolution, tol, line_tol)
    recs = [r for r in recs if r.period <= q_max and math.gcd(r.period, n0) == 1]
    targets = []
    missing = []
    if generic_report is not None:
        targets = list(generic_report.satisfied)
        have = {r.rotation for r in recs}
        missing = [t for t in targets if t not in have]
    return SymmetricScanReport(n0, q_max, recs, targets, missing)


def rotation_targets(spec: MapSpec, seeds, q_max: int, n0: int, n_max: int = 2000, tol: float = 1e-4):
    """Farey targets over the measured rotation interval (empty if degenerate)."""
    iv = rotation_interval(spec, as_points(seeds), n_max, tol)
    if iv.degenerate:
        return []
    return farey_enumerate(iv.lower, iv.upper, q_max, n0)


__all__ = [
    "apply_R", "lift_R", "SymmetryLine", "Y1", "Y2", "check_reversible", "symmetric_fixed_points",
    "symmetric_orbit_search", "is_symmetric_orbit", "symmetric_period_scan", "SymmetricOrbitRecord",
    "dedup_orbits",
]
