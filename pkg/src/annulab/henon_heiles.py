"""The Hénon-Heiles Hamiltonian, its symmetries, flow, section map and symmetric orbits.

``H = (p1^2 + p2^2 + q1^2 + q2^2) / 2 + q1^2 q2 - q2^3 / 3``.  The flow is
integrated with the fourth-order Yoshida composition of the kick-drift-kick
leapfrog; both splitting pieces are invariant under the rotation ``sigma``
and the scheme is symmetric, so ``phi^t o rho = rho o phi^-t`` and
``phi^t o sigma = sigma o phi^t`` hold up to round-off.

The Poincaré section is ``q1 = 0, p1 > 0`` in coordinates ``(q2, p2)``; ``p1``
is recovered from the energy.  The fixed set of ``rho`` meets the section in
the segment ``p2 = 0``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .core import MapSpec, register_family, wrap

CBRT2 = 2.0 ** (1.0 / 3.0)
W1 = 1.0 / (2.0 - CBRT2)
W0 = -CBRT2 / (2.0 - CBRT2)
ESCAPE_RADIUS = 5.0
SQRT3_2 = math.sqrt(3.0) / 2.0


class EscapeError(RuntimeError):
    """The trajectory left the escape radius."""

    def __init__(self, time: float):
        super().__init__(f"trajectory escaped at t = {time:.6g}")
        self.time = time


class NoCrossingError(RuntimeError):
    """No section crossing within the time budget."""


@dataclass(frozen=True)
class HHState:
    q1: float
    q2: float
    p1: float
    p2: float

    def as_array(self) -> np.ndarray:
        return np.array([self.q1, self.q2, self.p1, self.p2])

    @classmethod
    def from_array(cls, a) -> "HHState":
        return cls(float(a[0]), float(a[1]), float(a[2]), float(a[3]))


def _arr(s) -> np.ndarray:
    return s.as_array() if isinstance(s, HHState) else np.asarray(s, dtype=float)


def hh_energy(s):
    """``H`` at a state (``HHState`` or array with last axis of length 4)."""
    a = _arr(s)
    q1, q2, p1, p2 = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    h = 0.5 * (p1 * p1 + p2 * p2 + q1 * q1 + q2 * q2) + q1 * q1 * q2 - q2 ** 3 / 3.0
    return float(h) if np.ndim(h) == 0 else h


def hh_potential(q1, q2):
    return 0.5 * (q1 * q1 + q2 * q2) + q1 * q1 * q2 - q2 ** 3 / 3.0


def hh_gradient(s) -> np.ndarray:
    a = _arr(s)
    q1, q2, p1, p2 = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    return np.stack([q1 + 2 * q1 * q2, q2 + q1 * q1 - q2 * q2, p1, p2], axis=-1)


# ---------------------------------------------------------------------------
# symmetries
# ---------------------------------------------------------------------------

def apply_rho(s):
    """``(q1, q2, p1, p2) -> (-q1, q2, p1, -p2)``."""
    a = _arr(s)
    out = a * np.array([-1.0, 1.0, 1.0, -1.0])
    return HHState.from_array(out) if isinstance(s, HHState) else out


_C3 = -0.5
_S3 = SQRT3_2


def apply_sigma(s):
    """Rotate ``(q1, q2)`` and ``(p1, p2)`` simultaneously by ``2 pi / 3``."""
    a = _arr(s)
    q1, q2, p1, p2 = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    out = np.stack([_C3 * q1 - _S3 * q2, _S3 * q1 + _C3 * q2,
                    _C3 * p1 - _S3 * p2, _S3 * p1 + _C3 * p2], axis=-1)
    return HHState.from_array(out) if isinstance(s, HHState) else out


# ---------------------------------------------------------------------------
# integrator kernels
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def _kdk(q1, q2, p1, p2, h):
    hh = 0.5 * h
    p1 -= hh * (q1 + 2.0 * q1 * q2)
    p2 -= hh * (q2 + q1 * q1 - q2 * q2)
    q1 += h * p1
    q2 += h * p2
    p1 -= hh * (q1 + 2.0 * q1 * q2)
    p2 -= hh * (q2 + q1 * q1 - q2 * q2)
    return q1, q2, p1, p2


@njit(cache=True, nogil=True)
def _step(q1, q2, p1, p2, h):
    q1, q2, p1, p2 = _kdk(q1, q2, p1, p2, W1 * h)
    q1, q2, p1, p2 = _kdk(q1, q2, p1, p2, W0 * h)
    return _kdk(q1, q2, p1, p2, W1 * h)


@njit(cache=True, nogil=True)
def _flow(s, t, dt, radius, keep):
    """Integrate for time ``t`` (either sign) with step ``|dt|``.

    Returns (final state, trajectory or empty, escape time or nan).
    """
    h = abs(dt) if t >= 0 else -abs(dt)
    n = int(math.floor(abs(t) / abs(dt)))
    rem = t - n * h
    if abs(rem) < 1e-14 * max(1.0, abs(t)):
        rem = 0.0
    q1, q2, p1, p2 = s[0], s[1], s[2], s[3]
    traj = np.empty((n + 2 if keep else 0, 4))
    if keep:
        traj[0, 0], traj[0, 1], traj[0, 2], traj[0, 3] = q1, q2, p1, p2
    r2 = radius * radius
    for i in range(n):
        q1, q2, p1, p2 = _step(q1, q2, p1, p2, h)
        if keep:
            traj[i + 1, 0], traj[i + 1, 1], traj[i + 1, 2], traj[i + 1, 3] = q1, q2, p1, p2
        if q1 * q1 + q2 * q2 + p1 * p1 + p2 * p2 > r2 or not math.isfinite(q1 + q2 + p1 + p2):
            out = np.array([q1, q2, p1, p2])
            return out, traj[:i + 2], (i + 1) * h
    if rem != 0.0:
        q1, q2, p1, p2 = _step(q1, q2, p1, p2, rem)
    out = np.array([q1, q2, p1, p2])
    if keep:
        traj[n + 1] = out
        if rem == 0.0:
            traj = traj[:n + 1]
    return out, traj, np.nan


@njit(cache=True, nogil=True)
def _crossings(s, dt, k, tmax, radius, upward_only):
    """The first ``k`` crossings of ``q1 = 0`` (all, or only with ``q1`` increasing).

    Crossing times are refined by bisection on a single partial step from the
    last grid state, to 1e-12 in time; integration then resumes on the grid.
    Returns (states (k, 4), times (k,), number found, status) with status 0
    ok, 1 escaped, 2 time budget exhausted.
    """
    out = np.full((k, 4), np.nan)
    times = np.full(k, np.nan)
    q1, q2, p1, p2 = s[0], s[1], s[2], s[3]
    t = 0.0
    found = 0
    r2 = radius * radius
    while found < k:
        if t > tmax:
            return out, times, found, 2
        n1, n2, n3, n4 = _step(q1, q2, p1, p2, dt)
        hit = False
        if q1 < 0.0 and n1 >= 0.0:
            hit = True
        elif (not upward_only) and q1 > 0.0 and n1 <= 0.0:
            hit = True
        if hit:
            a = 0.0
            b = dt
            sa = q1
            while b - a > 1e-12:
                mid = 0.5 * (a + b)
                m1, m2, m3, m4 = _step(q1, q2, p1, p2, mid)
                if (m1 < 0.0) == (sa < 0.0) and m1 != 0.0:
                    a = mid
                else:
                    b = mid
            tau = 0.5 * (a + b)
            m1, m2, m3, m4 = _step(q1, q2, p1, p2, tau)
            out[found, 0], out[found, 1], out[found, 2], out[found, 3] = m1, m2, m3, m4
            times[found] = t + tau
            found += 1
        q1, q2, p1, p2 = n1, n2, n3, n4
        t += dt
        if q1 * q1 + q2 * q2 + p1 * p1 + p2 * p2 > r2 or not math.isfinite(q1 + q2 + p1 + p2):
            return out, times, found, 1
    return out, times, found, 0


@njit(cache=True, nogil=True)
def _line_values(q2s, c, dt, k, tmax, radius):
    """``p2`` and time at the first ``k`` crossings for starts on the rho-fixed segment."""
    n = q2s.size
    vals = np.full((n, k), np.nan)
    tt = np.full((n, k), np.nan)
    s = np.empty(4)
    for i in range(n):
        q2 = q2s[i]
        p1sq = 2.0 * c - q2 * q2 + 2.0 * q2 * q2 * q2 / 3.0
        if p1sq <= 0.0:
            continue
        s[0] = 0.0
        s[1] = q2
        s[2] = math.sqrt(p1sq)
        s[3] = 0.0
        st, ti, found, status = _crossings(s, dt, k, tmax, radius, False)
        for j in range(found):
            vals[i, j] = st[j, 3]
            tt[i, j] = ti[j]
    return vals, tt


@njit(cache=True, nogil=True)
def _section_map(q2s, p2s, c, dt, tmax, radius, backward):
    """First return to ``q1 = 0, p1 > 0`` for a batch of section points (nan if none)."""
    n = q2s.size
    oq = np.full(n, np.nan)
    op = np.full(n, np.nan)
    s = np.empty(4)
    for i in range(n):
        q2 = q2s[i]
        p2 = -p2s[i] if backward else p2s[i]
        p1sq = 2.0 * c - p2 * p2 - q2 * q2 + 2.0 * q2 * q2 * q2 / 3.0
        if p1sq <= 0.0:
            continue
        s[0] = 0.0
        s[1] = q2
        s[2] = math.sqrt(p1sq)
        s[3] = p2
        st, ti, found, status = _crossings(s, dt, 1, tmax, radius, True)
        if found == 1:
            oq[i] = st[0, 1]
            op[i] = -st[0, 3] if backward else st[0, 3]
    return oq, op


# ---------------------------------------------------------------------------
# public flow API
# ---------------------------------------------------------------------------

def hh_flow(s, t: float, dt: float = 1e-3, trajectory: bool = False, escape_radius: float = ESCAPE_RADIUS):
    """``phi^t(s)``; with ``trajectory=True`` also the states on the time grid.

    Negative ``t`` integrates backwards.  Raises :class:`EscapeError` when the
    phase-space norm exceeds ``escape_radius``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    a = _arr(s).astype(float)
    out, traj, esc = _flow(a, float(t), float(dt), float(escape_radius), bool(trajectory))
    if not math.isnan(esc):
        raise EscapeError(esc)
    res = HHState.from_array(out) if isinstance(s, HHState) else out
    return (res, traj) if trajectory else res


def critical_levels(grid: int = 9, span: float = 2.0, tol: float = 1e-14) -> list[tuple[HHState, float]]:
    """All equilibria found by Newton on ``grad H = 0`` from a ``grid x grid`` start set.

    Momenta vanish at an equilibrium, so the solve is in ``(q1, q2)`` with the
    exact Hessian of the potential.  Returned sorted by (energy, q1, q2).
    """
    found: list[np.ndarray] = []
    for a in np.linspace(-span, span, grid):
        for b in np.linspace(-span, span, grid):
            q = np.array([a, b])
            for _ in range(100):
                g = np.array([q[0] + 2 * q[0] * q[1], q[1] + q[0] ** 2 - q[1] ** 2])
                J = np.array([[1 + 2 * q[1], 2 * q[0]], [2 * q[0], 1 - 2 * q[1]]])
                try:
                    dq = np.linalg.solve(J, g)
                except np.linalg.LinAlgError:
                    break
                q = q - dq
                if np.max(np.abs(dq)) < tol or np.max(np.abs(q)) > 1e6:
                    break
            g = np.array([q[0] + 2 * q[0] * q[1], q[1] + q[0] ** 2 - q[1] ** 2])
            if np.max(np.abs(g)) < 1e-12 and not any(np.max(np.abs(q - f)) < 1e-8 for f in found):
                found.append(q)
    out = [(HHState(float(q[0]), float(q[1]), 0.0, 0.0), float(hh_potential(q[0], q[1]))) for q in found]
    out.sort(key=lambda e: (round(e[1], 12), e[0].q1, e[0].q2))
    return out


def critical_values(levels=None, tol: float = 1e-12) -> list[float]:
    vals: list[float] = []
    for _s, v in (levels if levels is not None else critical_levels()):
        if not any(abs(v - w) < tol for w in vals):
            vals.append(v)
    return sorted(vals)


# ---------------------------------------------------------------------------
# section
# ---------------------------------------------------------------------------

def section_p1_squared(c: float, q2, p2):
    q2 = np.asarray(q2, dtype=float)
    return 2.0 * c - np.asarray(p2) ** 2 - q2 ** 2 + 2.0 * q2 ** 3 / 3.0


@dataclass(frozen=True)
class SectionPoint:
    q2: float
    p2: float
    time: float = 0.0
    energy_residual: float = 0.0

    def state(self, c: float) -> HHState:
        p1sq = float(section_p1_squared(c, self.q2, self.p2))
        if p1sq <= 0:
            raise ValueError("point is outside the section domain")
        return HHState(0.0, self.q2, math.sqrt(p1sq), self.p2)


def section_point(c: float, q2: float, p2: float) -> SectionPoint:
    sp = SectionPoint(float(q2), float(p2))
    st = sp.state(c)
    return SectionPoint(sp.q2, sp.p2, 0.0, abs(hh_energy(st) - c))


def poincare_return(c: float, x: SectionPoint, crossings: int = 1, dt: float = 1e-3,
                    tmax: float | None = None, escape_radius: float = ESCAPE_RADIUS) -> list[SectionPoint]:
    """Successive returns of ``x`` to ``q1 = 0, p1 > 0``."""
    if not 0.0 < c < 1.0 / 6.0:
        raise ValueError("c must lie in (0, 1/6)")
    s = x.state(c).as_array()
    budget = 50.0 * crossings if tmax is None else tmax
    st, ti, found, status = _crossings(s, dt, crossings, budget, escape_radius, True)
    if status == 1:
        raise EscapeError(float(np.nanmax(ti)) if found else math.nan)
    if found < crossings:
        raise NoCrossingError(f"only {found} of {crossings} crossings within t = {budget}")
    return [SectionPoint(float(st[j, 1]), float(st[j, 3]), float(ti[j]), abs(hh_energy(st[j]) - c))
            for j in range(crossings)]


def section_cloud(c: float, seeds, crossings: int, dt: float = 1e-3) -> list[list[SectionPoint]]:
    return [poincare_return(c, section_point(c, q, p), crossings, dt) for q, p in seeds]


def rho_segment(c: float, guard: float = 1e-3) -> tuple[float, float]:
    """End points in ``q2`` of the rho-fixed segment ``p2 = 0`` with ``p1^2 > guard``."""
    roots = np.roots([2.0 / 3.0, -1.0, 0.0, 2.0 * c - guard])
    real = sorted(r.real for r in roots if abs(r.imag) < 1e-12)
    lo = max(r for r in real if r < 0)
    hi = min(r for r in real if r > 0)
    return float(lo), float(hi)


def return_map(c: float, q2, p2, dt: float = 1e-3, backward: bool = False, tmax: float = 50.0):
    """Vectorised first-return map (``backward`` uses ``rho o P o rho``)."""
    q2 = np.atleast_1d(np.asarray(q2, dtype=float))
    p2 = np.atleast_1d(np.asarray(p2, dtype=float))
    return _section_map(q2, p2, float(c), float(dt), float(tmax), ESCAPE_RADIUS, bool(backward))


# ---------------------------------------------------------------------------
# symmetric periodic orbits
# ---------------------------------------------------------------------------

@dataclass
class HHOrbitRecord:
    """A periodic orbit started on the rho-fixed segment, with symmetry certificates."""

    c: float
    q2: float
    period: float
    half_crossings: int
    closure_residual: float
    rho_residual: float
    sigma_residual: float
    sigma_shift: float
    energy_residual: float
    section_points: list[tuple[float, float]] = field(default_factory=list)
    rho_tol: float = 1e-7
    sigma_tol: float = 1e-6

    @property
    def rho_symmetric(self) -> bool:
        return self.rho_residual < self.rho_tol

    @property
    def sigma_symmetric(self) -> bool:
        return self.sigma_residual < self.sigma_tol

    @property
    def start(self) -> HHState:
        p1 = math.sqrt(max(float(section_p1_squared(self.c, self.q2, 0.0)), 0.0))
        return HHState(0.0, self.q2, p1, 0.0)

    def to_dict(self) -> dict:
        return {
            "family": "hh",
            "params": [self.c],
            "q2": self.q2,
            "period": self.period,
            "half_crossings": self.half_crossings,
            "closure_residual": self.closure_residual,
            "rho_residual": self.rho_residual,
            "sigma_residual": self.sigma_residual,
            "sigma_shift": self.sigma_shift,
            "energy_residual": self.energy_residual,
            "rho_symmetric": self.rho_symmetric,
            "sigma_symmetric": self.sigma_symmetric,
            "section_points": [[a, b] for a, b in self.section_points],
        }


def _line_root(c, dt, m, a, b, fa, tmax):
    """Bisection for ``p2 = 0`` at the ``m``-th crossing, in the start height."""
    def g(q2):
        v, t = _line_values(np.array([q2]), c, dt, m, tmax, ESCAPE_RADIUS)
        return float(v[0, m - 1]), float(t[0, m - 1])

    for _ in range(200):
        if b - a <= 1e-15 * max(1.0, abs(a)):
            break
        mid = 0.5 * (a + b)
        if mid in (a, b):
            break
        fm, _t = g(mid)
        if math.isnan(fm):
            return math.nan, math.nan, math.nan
        if fm == 0.0:
            a = b = mid
            break
        if (fm < 0) == (fa < 0):
            a, fa = mid, fm
        else:
            b = mid
    q2 = 0.5 * (a + b)
    val, t = g(q2)
    return q2, val, t


def certify_orbit(c: float, start: np.ndarray, period: float, dt: float = 1e-3) -> dict:
    """Closure, rho and sigma certificates of the orbit of ``start`` with period ``period``.

    The orbit is resampled on ``N`` points, ``N`` a multiple of 6, so that the
    time reversal ``k -> N - k`` and the sigma shifts ``N/3``, ``2N/3`` are
    grid aligned.
    """
    n = 6 * max(1, int(math.ceil(period / (6.0 * dt))))
    h = period / n
    _out, traj, esc = _flow(np.asarray(start, dtype=float), float(n * h), float(h), ESCAPE_RADIUS, True)
    if not math.isnan(esc):
        raise EscapeError(esc)
    traj = traj[: n + 1]
    closure = float(np.max(np.abs(traj[n] - traj[0])))
    pts = traj[:n]
    rho = apply_rho(pts)
    rev = np.concatenate([pts[:1], pts[1:][::-1]])
    rho_res = float(np.max(np.abs(rho - rev)))
    sig = apply_sigma(pts)
    d0 = np.max(np.abs(pts - sig[0]), axis=1)
    j = int(np.argmin(d0))
    sig_res = float(np.max(np.abs(np.roll(pts, -j, axis=0) - sig)))
    energy = float(np.max(np.abs(hh_energy(pts) - c)))
    return {"closure": closure, "rho": rho_res, "sigma": sig_res, "shift": j / n * period,
            "energy": energy, "n": n}


def _section_set(c, start, period, dt):
    st, ti, found, _status = _crossings(np.asarray(start, dtype=float), dt, 64, period * (1 - 1e-9),
                                        ESCAPE_RADIUS, True)
    pts = [(float(st[i, 1]), float(st[i, 3])) for i in range(found)]
    if start[2] > 0:
        pts.append((float(start[1]), float(start[3])))
    return sorted(pts)


def _same_hh(a: HHOrbitRecord, b: HHOrbitRecord, tol: float = 1e-6) -> bool:
    if abs(a.period - b.period) > 1e-6 * max(1.0, a.period):
        return False
    if len(a.section_points) != len(b.section_points):
        return False
    pa, pb = np.asarray(a.section_points), np.asarray(b.section_points)
    if pa.size == 0:
        return abs(a.q2 - b.q2) < tol
    d = np.max(np.abs(pa[:, None, :] - pb[None, :, :]), axis=2)
    return bool(np.all(d.min(axis=1) < tol))


@dataclass
class HHSearchReport:
    c: float
    orbits: list[HHOrbitRecord]
    roots: int
    failed: list[dict]


def hh_symmetric_orbits(c: float = 0.125, m_max: int = 4, resolution: int = 400, tol: float = 1e-7,
                        dt: float = 1e-3, guard: float = 1e-3, tmax: float | None = None,
                        sigma_tol: float = 1e-6) -> HHSearchReport:
    """rho-symmetric periodic orbits through the segment ``q1 = p2 = 0``.

    For each ``m <= m_max``, ``p2`` at the ``m``-th crossing of ``q1 = 0`` (in
    either direction) is sampled over ``resolution`` start heights; its sign
    changes are bisected.  A root returns to the fixed set of ``rho`` after
    time ``T``, so it is periodic with period ``2T``.  Roots whose orbit closes
    already at ``2T / l`` are repetitions and skipped; the rest are certified
    and deduplicated by their section points.
    """
    if not 0.0 < c < 1.0 / 6.0:
        raise ValueError("c must lie in (0, 1/6)")
    lo, hi = rho_segment(c, guard)
    q2s = np.linspace(lo, hi, resolution)
    budget = 20.0 * m_max if tmax is None else tmax
    vals, _times = _line_values(q2s, c, dt, m_max, budget, ESCAPE_RADIUS)
    orbits: list[HHOrbitRecord] = []
    failed: list[dict] = []
    roots = 0
    for m in range(1, m_max + 1):
        v = vals[:, m - 1]
        for i in range(resolution - 1):
            a, b = v[i], v[i + 1]
            if not (np.isfinite(a) and np.isfinite(b)) or a * b > 0:
                continue
            q2, val, t_half = _line_root(c, dt, m, float(q2s[i]), float(q2s[i + 1]), float(a), budget)
            if not np.isfinite(val) or abs(val) > 1e-8:
                failed.append({"m": m, "q2": q2, "reason": "discontinuity", "p2": val})
                continue
            roots += 1
            start = np.array([0.0, q2, math.sqrt(float(section_p1_squared(c, q2, 0.0))), 0.0])
            period = 2.0 * t_half
            repeated = False
            for ell in range(2, 2 * m + 1):
                sub = hh_flow(start, period / ell, dt)
                if np.max(np.abs(sub - start)) < 1e3 * tol:
                    repeated = True
                    break
            if repeated:
                continue
            cert = certify_orbit(c, start, period, dt)
            if cert["closure"] >= tol or cert["rho"] >= tol:
                failed.append({"m": m, "q2": q2, "reason": "closure", "closure": cert["closure"]})
                continue
            rec = HHOrbitRecord(c, q2, period, m, cert["closure"], cert["rho"], cert["sigma"], cert["shift"],
                                cert["energy"], _section_set(c, start, period, dt), tol, sigma_tol)
            if not any(_same_hh(rec, o) for o in orbits):
                orbits.append(rec)
    orbits.sort(key=lambda r: (round(r.period, 6), r.q2))
    return HHSearchReport(c, orbits, roots, failed)


# ---------------------------------------------------------------------------
# area preservation of the return map
# ---------------------------------------------------------------------------

@dataclass
class HHAreaReport:
    areas: np.ndarray
    estimates: np.ndarray
    sigmas: np.ndarray
    n_sigma: float

    @property
    def z_scores(self) -> np.ndarray:
        return np.abs(self.estimates - self.areas) / np.maximum(self.sigmas, 1e-300)

    @property
    def passed(self) -> bool:
        return bool(np.all(self.z_scores <= self.n_sigma))


def _inside_domain(c, q2, p2, guard):
    return section_p1_squared(c, q2, p2) > guard


def random_section_boxes(c: float, count: int, rng, size: float = 0.05, guard: float = 0.02) -> list[tuple]:
    """Random axis-aligned boxes ``(q0, q1, p0, p1)`` inside the section domain."""
    lo, hi = rho_segment(c, 0.0)
    pmax = math.sqrt(2 * c)
    boxes = []
    while len(boxes) < count:
        w, h = rng.uniform(0.5, 1.0, 2) * size
        q0 = rng.uniform(lo, hi - w)
        p0 = rng.uniform(-pmax, pmax - h)
        gq, gp = np.meshgrid(np.linspace(q0, q0 + w, 5), np.linspace(p0, p0 + h, 5))
        if np.all(_inside_domain(c, gq, gp, guard)):
            boxes.append((float(q0), float(q0 + w), float(p0), float(p0 + h)))
    return boxes


def hh_area_check(c: float = 0.125, boxes: int = 20, samples: int = 100_000, dt: float = 1e-2,
                  seed: int = 0, n_sigma: float = 3.0, box_list=None) -> HHAreaReport:
    """Monte Carlo area of ``P(B)`` against ``|B|`` for random section boxes.

    Membership ``x in P(B)`` is tested as ``P^-1(x) in B`` with
    ``P^-1 = rho o P o rho``; the sampling window is the bounding box of the
    image of the boundary of ``B``, padded.
    """
    rng = np.random.default_rng(seed)
    blist = box_list if box_list is not None else random_section_boxes(c, boxes, rng)
    areas, ests, sigs = [], [], []
    for q0, q1, p0, p1 in blist:
        t = np.linspace(0.0, 1.0, 200)
        bq = np.concatenate([q0 + (q1 - q0) * t, np.full_like(t, q1), q1 - (q1 - q0) * t, np.full_like(t, q0)])
        bp = np.concatenate([np.full_like(t, p0), p0 + (p1 - p0) * t, np.full_like(t, p1), p1 - (p1 - p0) * t])
        iq, ip = return_map(c, bq, bp, dt)
        ok = np.isfinite(iq)
        pad_q = 0.1 * (np.nanmax(iq) - np.nanmin(iq)) + 1e-3
        pad_p = 0.1 * (np.nanmax(ip) - np.nanmin(ip)) + 1e-3
        wq0, wq1 = np.nanmin(iq[ok]) - pad_q, np.nanmax(iq[ok]) + pad_q
        wp0, wp1 = np.nanmin(ip[ok]) - pad_p, np.nanmax(ip[ok]) + pad_p
        sq = rng.uniform(wq0, wq1, samples)
        sp = rng.uniform(wp0, wp1, samples)
        bq2, bp2 = return_map(c, sq, sp, dt, backward=True)
        hit = (bq2 >= q0) & (bq2 <= q1) & (bp2 >= p0) & (bp2 <= p1)
        frac = hit.mean()
        win = (wq1 - wq0) * (wp1 - wp0)
        areas.append((q1 - q0) * (p1 - p0))
        ests.append(frac * win)
        sigs.append(win * math.sqrt(max(frac * (1 - frac), 1.0 / samples) / samples))
    return HHAreaReport(np.array(areas), np.array(ests), np.array(sigs), n_sigma)


# ---------------------------------------------------------------------------
# annulus chart of the return map
# ---------------------------------------------------------------------------

def elliptic_fixed_point(c: float, dt: float = 1e-3, guess: float | None = None) -> tuple[float, float]:
    """A fixed point of the return map on ``p2 = 0`` with ``|trace| < 2``.

    Scans the rho-fixed segment for sign changes of ``p2`` after one section
    return (such roots are fixed, by reversibility, when the first crossing
    is a return) and keeps the first elliptic one.
    """
    lo, hi = rho_segment(c, 1e-3)
    q2s = np.linspace(lo, hi, 200) if guess is None else np.array([guess - 0.05, guess + 0.05])
    _q, p = return_map(c, q2s, np.zeros_like(q2s), dt)
    for i in range(q2s.size - 1):
        if not (np.isfinite(p[i]) and np.isfinite(p[i + 1])) or p[i] * p[i + 1] > 0:
            continue
        a, b, fa = q2s[i], q2s[i + 1], p[i]
        for _ in range(100):
            mid = 0.5 * (a + b)
            fm = return_map(c, [mid], [0.0], dt)[1][0]
            if (fm < 0) == (fa < 0):
                a, fa = mid, fm
            else:
                b = mid
        z = 0.5 * (a + b)
        fq, fp = return_map(c, [z], [0.0], dt)
        if abs(fq[0] - z) > 1e-6:
            continue
        h = 1e-6
        j = np.empty((2, 2))
        for k, (dq, dp) in enumerate(((h, 0.0), (0.0, h))):
            q_plus, p_plus = return_map(c, [z + dq], [dp], dt)
            q_minus, p_minus = return_map(c, [z - dq], [-dp], dt)
            j[:, k] = [(q_plus[0] - q_minus[0]) / (2 * h), (p_plus[0] - p_minus[0]) / (2 * h)]
        if abs(np.trace(j)) < 2.0:
            return float(z), 0.0
    raise RuntimeError("no elliptic fixed point found on the symmetry segment")


def _chart_radius(c, q0, theta):
    """Distance from ``(q0, 0)`` to the section boundary along direction ``theta``."""
    cq, sp = np.cos(theta), np.sin(theta)
    a = np.zeros_like(theta)
    b = np.full_like(theta, 2.0)
    for _ in range(60):
        mid = 0.5 * (a + b)
        inside = section_p1_squared(c, q0 + mid * cq, mid * sp) > 0
        a = np.where(inside, mid, a)
        b = np.where(inside, b, mid)
    return a


def hh_chart(c: float, dt: float = 1e-3, center: tuple[float, float] | None = None) -> MapSpec:
    """The return map in polar coordinates about an elliptic fixed point, as an open-annulus map.

    ``x = angle / 2 pi``, ``y = r / r_max(angle)``.  The lift uses the
    principal branch of the angular displacement, which is a valid lift when
    the return map turns points by less than half a revolution.
    """
    q0, p0 = center if center is not None else elliptic_fixed_point(c, dt)
    return _chart_from_params((float(c), float(dt), float(q0), float(p0)))


def _chart_from_params(params) -> MapSpec:
    c, dt, q0, p0 = params

    def to_section(x, y):
        th = 2 * np.pi * np.asarray(x, dtype=float)
        r = np.asarray(y, dtype=float) * _chart_radius(c, q0, th)
        return q0 + r * np.cos(th), p0 + r * np.sin(th)

    def from_section(q, p):
        th = np.arctan2(p - p0, q - q0)
        r = np.hypot(q - q0, p - p0)
        return wrap(th / (2 * np.pi)), r / _chart_radius(c, q0, th)

    def make(backward):
        def lift(xt, y):
            xt = np.asarray(xt, dtype=float)
            q, p = to_section(xt, y)
            fq, fp = return_map(c, q, p, dt, backward=backward)
            nx, ny = from_section(fq, fp)
            dx = np.mod(nx - np.mod(xt, 1.0) + 0.5, 1.0) - 0.5
            return xt + dx, ny
        return lift

    return MapSpec("hh-chart", (c, dt, q0, p0), make(False), make(True), reversible=False, closed=False)


@register_family("hh-chart")
def _build_chart(params, _record):
    return _chart_from_params(tuple(float(p) for p in params))


def random_on_shell(c: float, count: int, rng) -> np.ndarray:
    """Uniform-direction states on ``H = c`` inside the bounded potential well."""
    out = []
    while len(out) < count:
        q = rng.uniform(-1.0, 1.0, 2)
        v = float(hh_potential(q[0], q[1]))
        # bounded component: inside the triangle of saddles
        if v >= c or q[1] < -0.5 or q[1] > 1.0 or abs(q[0]) > (1.0 - q[1]) / math.sqrt(3.0) + 1e-12:
            continue
        ang = rng.uniform(0.0, 2 * np.pi)
        pm = math.sqrt(2 * (c - v))
        out.append([q[0], q[1], pm * math.cos(ang), pm * math.sin(ang)])
    return np.array(out)
