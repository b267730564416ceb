"""Concrete area-preserving annulus map families.

Four kinds are provided:

``rotation``
    rigid rotation ``(x, y) -> (x + alpha, y)``.
``twist``
    shear ``T_w(x, y) = (x + w(y), y)`` with a polynomial profile ``w``.
``kicked``
    ``T_w o K_eps``.
``symmetric``
    symmetric splitting ``K_{eps/2} o T_w o K_{eps/2}``.

The kick ``K_t`` is the time-``t`` flow of the Hamiltonian ``h = c(x) V(y)``
(area form ``dx ^ dy``), with ``c`` a trigonometric polynomial and ``V`` a
polynomial vanishing at ``y = 0`` and ``y = 1``.  It is integrated with the
implicit midpoint rule at a fixed number of substeps; the midpoint rule is
symplectic and symmetric, so ``K_{-t}`` inverts ``K_t`` and, when ``c`` is
even, ``K_t o R = R o K_{-t}`` up to round-off.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .core import MapSpec, register_family, wrap

KINDS = ("rotation", "twist", "kicked", "symmetric")
DEFAULT_V = (0.0, 0.0, 1.0, -2.0, 1.0)  # y^2 (1 - y)^2
TWO_PI = 2.0 * math.pi


@njit(cache=True, nogil=True)
def _poly(c, y):
    acc = 0.0
    for k in range(c.size - 1, -1, -1):
        acc = acc * y + c[k]
    return acc


@njit(cache=True, nogil=True)
def _dpoly(c, y):
    acc = 0.0
    for k in range(c.size - 1, 0, -1):
        acc = acc * y + k * c[k]
    return acc


@njit(cache=True, nogil=True)
def _field(x, y, ca, sb, vc):
    # x' = dh/dy = c(x) V'(y),  y' = -dh/dx = -c'(x) V(y)
    c = 0.0
    dc = 0.0
    for k in range(ca.size):
        if ca[k] != 0.0:
            w = 6.283185307179586 * k
            c += ca[k] * math.cos(w * x)
            dc -= w * ca[k] * math.sin(w * x)
    for k in range(sb.size):
        if sb[k] != 0.0:
            w = 6.283185307179586 * (k + 1)
            c += sb[k] * math.sin(w * x)
            dc += w * sb[k] * math.cos(w * x)
    return c * _dpoly(vc, y), -dc * _poly(vc, y)


@njit(cache=True, nogil=True)
def _kick(xt, y, t, nsub, ca, sb, vc):
    n = xt.size
    ox = np.empty(n)
    oy = np.empty(n)
    h = t / nsub
    for i in range(n):
        x0 = xt[i]
        y0 = y[i]
        for _ in range(nsub):
            fx, fy = _field(x0, y0, ca, sb, vc)
            x1 = x0 + h * fx
            y1 = y0 + h * fy
            for _it in range(60):
                fx, fy = _field(0.5 * (x0 + x1), 0.5 * (y0 + y1), ca, sb, vc)
                nx = x0 + h * fx
                ny = y0 + h * fy
                done = abs(nx - x1) <= 2e-16 * (1.0 + abs(nx)) and abs(ny - y1) <= 2e-16
                x1 = nx
                y1 = ny
                if done:
                    break
            x0 = x1
            y0 = y1
        ox[i] = x0
        oy[i] = y0
    return ox, oy


@dataclass(frozen=True)
class FamilySpec:
    """Parameters of one map family.

    ``omega`` and ``V`` are polynomial coefficients in increasing powers of
    ``y``.  ``cos_coeffs[k]`` multiplies ``cos(2 pi k x)`` (k >= 0) and
    ``sin_coeffs[k]`` multiplies ``sin(2 pi (k+1) x)``.
    """

    kind: str
    alpha: float = 0.0
    omega: tuple[float, ...] = (0.0, 1.0)
    eps: float = 0.0
    cos_coeffs: tuple[float, ...] = (0.0, 1.0)
    sin_coeffs: tuple[float, ...] = ()
    V: tuple[float, ...] = DEFAULT_V
    substeps: int = 64
    closed: bool = True

    def to_params(self) -> tuple[float, ...]:
        """Flat parameter vector: kind-specific, length-prefixed sections."""
        if self.kind == "rotation":
            return (float(self.alpha),)
        if self.kind == "twist":
            return tuple(float(c) for c in self.omega)
        out = [float(self.eps), float(self.substeps)]
        for seq in (self.omega, self.cos_coeffs, self.sin_coeffs, self.V):
            out.append(float(len(seq)))
            out.extend(float(c) for c in seq)
        return tuple(out)

    @classmethod
    def from_params(cls, kind: str, params, closed: bool = True) -> "FamilySpec":
        params = [float(p) for p in params]
        if kind == "rotation":
            return cls(kind, alpha=params[0], closed=closed)
        if kind == "twist":
            return cls(kind, omega=tuple(params), closed=closed)
        eps, sub = params[0], int(params[1])
        pos = 2
        seqs = []
        for _ in range(4):
            n = int(params[pos])
            seqs.append(tuple(params[pos + 1:pos + 1 + n]))
            pos += 1 + n
        return cls(kind, eps=eps, substeps=sub, omega=seqs[0], cos_coeffs=seqs[1],
                   sin_coeffs=seqs[2], V=seqs[3], closed=closed)

    @property
    def even_kick(self) -> bool:
        return not any(b != 0.0 for b in self.sin_coeffs)


class FamilyError(ValueError):
    """Invalid family parameters."""


def _validate(spec: FamilySpec):
    if spec.kind not in KINDS:
        raise FamilyError(f"unknown kind {spec.kind!r}; expected one of {KINDS}")
    if spec.kind in ("kicked", "symmetric"):
        if spec.eps < 0:
            raise FamilyError("kick amplitude must be non-negative")
        if spec.substeps < 1:
            raise FamilyError("substeps must be >= 1")
        v = np.asarray(spec.V, dtype=float)
        if v.size == 0 or abs(np.polyval(v[::-1], 0.0)) > 1e-14 or abs(np.polyval(v[::-1], 1.0)) > 1e-14:
            raise FamilyError("radial profile must vanish at y=0 and y=1")
    if spec.kind != "rotation" and len(spec.omega) == 0:
        raise FamilyError("empty twist profile")


def build(spec: FamilySpec) -> MapSpec:
    """Build the evaluators for ``spec``."""
    _validate(spec)
    params = spec.to_params()

    if spec.kind == "rotation":
        a = float(spec.alpha)

        def lift(xt, y):
            return np.asarray(xt, dtype=float) + a, np.asarray(y, dtype=float) + 0.0

        def lift_inv(xt, y):
            return np.asarray(xt, dtype=float) - a, np.asarray(y, dtype=float) + 0.0

        return MapSpec("rotation", params, lift, lift_inv, reversible=True, closed=spec.closed)

    w = np.polynomial.Polynomial(np.asarray(spec.omega, dtype=float))

    def twist(xt, y):
        y = np.asarray(y, dtype=float)
        return np.asarray(xt, dtype=float) + w(y), y + 0.0

    def untwist(xt, y):
        y = np.asarray(y, dtype=float)
        return np.asarray(xt, dtype=float) - w(y), y + 0.0

    if spec.kind == "twist":
        return MapSpec("twist", params, twist, untwist, reversible=True, closed=spec.closed)

    ca = np.asarray(spec.cos_coeffs, dtype=float)
    sb = np.asarray(spec.sin_coeffs, dtype=float)
    vc = np.asarray(spec.V, dtype=float)
    nsub = int(spec.substeps)

    def kick(t):
        def k(xt, y):
            xt = np.asarray(xt, dtype=float)
            y = np.asarray(y, dtype=float)
            xt, y = np.broadcast_arrays(xt, y)
            shape = xt.shape
            ox, oy = _kick(np.ascontiguousarray(xt).ravel(), np.ascontiguousarray(y).ravel(),
                           t, nsub, ca, sb, vc)
            return ox.reshape(shape), oy.reshape(shape)
        return k

    eps = float(spec.eps)
    if spec.kind == "kicked":
        kf, kb = kick(eps), kick(-eps)

        def lift(xt, y):
            return twist(*kf(xt, y))

        def lift_inv(xt, y):
            return kb(*untwist(xt, y))

        return MapSpec("kicked", params, lift, lift_inv, reversible=False, closed=spec.closed)

    hf, hb = kick(0.5 * eps), kick(-0.5 * eps)

    def lift(xt, y):
        return hf(*twist(*hf(xt, y)))

    def lift_inv(xt, y):
        return hb(*untwist(*hb(xt, y)))

    return MapSpec("symmetric", params, lift, lift_inv, reversible=spec.even_kick, closed=spec.closed)


for _kind in KINDS:
    def _builder(params, record, _kind=_kind):
        return build(FamilySpec.from_params(_kind, params, closed=bool(record.get("closed", True))))
    register_family(_kind)(_builder)


# convenience constructors -------------------------------------------------

def rigid_rotation(alpha: float) -> MapSpec:
    return build(FamilySpec("rotation", alpha=alpha))


def pure_twist(*omega: float) -> MapSpec:
    """Twist with ``w(y) = omega[0] + omega[1] y + ...``."""
    return build(FamilySpec("twist", omega=tuple(omega)))


def kicked_twist(eps: float, omega=(0.0, 1.0), substeps: int = 64) -> MapSpec:
    return build(FamilySpec("kicked", eps=eps, omega=tuple(omega), substeps=substeps))


def symmetric_twist(eps: float, omega=(0.0, 1.0), substeps: int = 64,
                    cos_coeffs=(0.0, 1.0), sin_coeffs=()) -> MapSpec:
    return build(FamilySpec("symmetric", eps=eps, omega=tuple(omega), substeps=substeps,
                            cos_coeffs=tuple(cos_coeffs), sin_coeffs=tuple(sin_coeffs)))


def asymmetric_twist(eps: float = 0.1, substeps: int = 64) -> MapSpec:
    """Symmetric splitting with an odd kick profile ``sin(2 pi x)``: not reversible."""
    return symmetric_twist(eps, substeps=substeps, cos_coeffs=(0.0, 0.0), sin_coeffs=(1.0,))


def identity_map() -> MapSpec:
    return rigid_rotation(0.0)


def builtin_families() -> dict[str, MapSpec]:
    """The families exercised by the lift-axiom suite."""
    return {
        "rotation-1/3": rigid_rotation(1.0 / 3.0),
        "rotation-1/2": rigid_rotation(0.5),
        "identity": identity_map(),
        "twist-y": pure_twist(0.0, 1.0),
        "twist-y-1/2": pure_twist(-0.5, 1.0),
        "kicked-0.1": kicked_twist(0.1),
        "symmetric-0.05": symmetric_twist(0.05),
        "symmetric-0.2": symmetric_twist(0.2),
        "asymmetric-0.1": asymmetric_twist(0.1),
    }


# area ----------------------------------------------------------------------

@dataclass(frozen=True)
class AreaReport:
    boxes: int
    samples_per_box: int
    relative_deviations: tuple[float, ...]
    confidence_radii: tuple[float, ...]

    @property
    def max_relative_deviation(self) -> float:
        return max(self.relative_deviations)

    @property
    def max_confidence_radius(self) -> float:
        return max(self.confidence_radii)

    def within(self, bound: float = 0.0) -> bool:
        return all(d <= r + bound for d, r in zip(self.relative_deviations, self.confidence_radii))


def area_check(spec: MapSpec, boxes: int, samples_per_box: int, seed: int = 0,
               n_sigma: float = 3.0) -> AreaReport:
    """Monte Carlo comparison of ``|f(B)|`` against ``|B|`` for random boxes.

    Points are drawn uniformly in the bounding box of ``f~(B~)`` (from a
    dense image of the boundary of ``B~``) and counted as hits when their
    preimage lies in ``B~``.  The confidence radius is ``n_sigma`` binomial
    standard deviations, relative to ``|B|``.
    """
    if boxes < 1 or samples_per_box < 100:
        raise ValueError("need boxes >= 1 and samples_per_box >= 100")
    rng = np.random.default_rng(seed)
    devs, radii = [], []
    for _ in range(boxes):
        wx = rng.uniform(0.05, 0.2)
        wy = rng.uniform(0.05, 0.2)
        x0 = rng.uniform(0.0, 1.0)
        y0 = rng.uniform(0.0, 1.0 - wy)
        s = np.linspace(0.0, 1.0, 200)
        bx = np.concatenate([x0 + wx * s, np.full_like(s, x0 + wx), x0 + wx * s[::-1], np.full_like(s, x0)])
        by = np.concatenate([np.full_like(s, y0), y0 + wy * s, np.full_like(s, y0 + wy), y0 + wy * s[::-1]])
        ix, iy = spec.lift(bx, by)
        pad_x = 0.02 * (ix.max() - ix.min()) + 1e-9
        pad_y = 0.02 * (iy.max() - iy.min()) + 1e-9
        lo_x, hi_x = ix.min() - pad_x, ix.max() + pad_x
        lo_y, hi_y = max(0.0, iy.min() - pad_y), min(1.0, iy.max() + pad_y)
        ux = rng.uniform(lo_x, hi_x, samples_per_box)
        uy = rng.uniform(lo_y, hi_y, samples_per_box)
        px, py = spec.lift_inv(ux, uy)
        hit = (px >= x0) & (px <= x0 + wx) & (py >= y0) & (py <= y0 + wy)
        p = hit.mean()
        region = (hi_x - lo_x) * (hi_y - lo_y)
        area = wx * wy
        devs.append(abs(region * p - area) / area)
        radii.append(n_sigma * region * math.sqrt(max(p * (1 - p), 0.0) / samples_per_box) / area)
    return AreaReport(boxes, samples_per_box, tuple(devs), tuple(radii))


__all__ = [
    "FamilySpec", "FamilyError", "build", "area_check", "AreaReport", "rigid_rotation",
    "pure_twist", "kicked_twist", "symmetric_twist", "asymmetric_twist", "identity_map",
    "builtin_families", "wrap",
]
