"""Phase-plane propagation of the quasi-derivative system.

The eigenvalue equation with a measure potential is integrated through the
pair (u, u1) where u1 = u' - q*u is the regularized derivative; both stay
absolutely continuous across atoms of the measure, so nothing jumps at an
atom.  The pair is carried in polar form u = exp(rho)*sin(theta),
u1 = exp(rho)*cos(theta):

    theta' = (cos(theta) + q(x) sin(theta))^2 + lam * sin(theta)^2
    rho'   = (1 - lam - q(x)^2) sin(theta) cos(theta)
             - q(x) (cos(theta)^2 - sin(theta)^2)

with q the left-continuous primitive of the measure.  theta crosses
multiples of pi only upward (theta' = 1 there), so the winding counts the
zeros of u and drives all eigenvalue logic.  Integration stops exactly at
every density knot and atom position and uses the one-sided value of q on
each open subinterval, where q is linear and the system is smooth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .measure import BVPotential, GridFunction

__all__ = ["PrueferState", "PropagationError", "propagate", "solution_at", "SegmentPath"]


class PropagationError(RuntimeError):
    """The adaptive integrator failed to meet the tolerance."""


@dataclass(frozen=True)
class PrueferState:
    """Polar shooting state: phase (unbounded winding), log-amplitude, position."""

    theta: float
    rho: float
    position: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.theta) and math.isfinite(self.rho)
                and math.isfinite(self.position)):
            raise ValueError("state components must be finite")

    @property
    def u(self) -> float:
        return math.exp(self.rho) * math.sin(self.theta)

    @property
    def u_quasi(self) -> float:
        return math.exp(self.rho) * math.cos(self.theta)


# ---------------------------------------------------------------------------
# adaptive Dormand-Prince 5(4) kernel, JIT-compiled when numba is present


def _kernel_source(seg_start, seg_end, seg_q0, seg_slope, lam, theta0, rho0, tol,
                   out_theta, out_rho):
    theta = theta0
    rho = rho0
    nseg = seg_start.size
    h_carry = -1.0
    for i in range(nseg):
        x0 = seg_start[i]
        x1 = seg_end[i]
        q0 = seg_q0[i]
        sl = seg_slope[i]
        length = x1 - x0
        if length != 0.0:
            direction = 1.0 if length > 0.0 else -1.0
            remaining = abs(length)
            pos = 0.0  # unsigned progress from x0
            h = remaining if h_carry <= 0.0 else min(h_carry, remaining)
            while remaining > 0.0:
                if h > remaining:
                    h = remaining
                hs = direction * h

                # stage 1
                xq = q0 + sl * (direction * pos)
                s = math.sin(theta)
                c = math.cos(theta)
                w = c + xq * s
                k1t = w * w + lam * s * s
                k1r = (1.0 - lam - xq * xq) * s * c - xq * (c * c - s * s)

                # stage 2 (c2 = 1/5)
                th = theta + hs * 0.2 * k1t
                xq = q0 + sl * (direction * (pos + 0.2 * h))
                s = math.sin(th)
                c = math.cos(th)
                w = c + xq * s
                k2t = w * w + lam * s * s

                # stage 3 (c3 = 3/10)
                th = theta + hs * (0.075 * k1t + 0.225 * k2t)
                xq = q0 + sl * (direction * (pos + 0.3 * h))
                s = math.sin(th)
                c = math.cos(th)
                w = c + xq * s
                k3t = w * w + lam * s * s
                k3r = (1.0 - lam - xq * xq) * s * c - xq * (c * c - s * s)

                # stage 4 (c4 = 4/5)
                th = theta + hs * (0.9777777777777777 * k1t - 3.7333333333333334 * k2t
                                   + 3.5555555555555554 * k3t)
                xq = q0 + sl * (direction * (pos + 0.8 * h))
                s = math.sin(th)
                c = math.cos(th)
                w = c + xq * s
                k4t = w * w + lam * s * s
                k4r = (1.0 - lam - xq * xq) * s * c - xq * (c * c - s * s)

                # stage 5 (c5 = 8/9)
                th = theta + hs * (2.9525986892242035 * k1t - 11.595793324188385 * k2t
                                   + 9.822892851699436 * k3t - 0.2908093278463649 * k4t)
                xq = q0 + sl * (direction * (pos + 0.8888888888888888 * h))
                s = math.sin(th)
                c = math.cos(th)
                w = c + xq * s
                k5t = w * w + lam * s * s
                k5r = (1.0 - lam - xq * xq) * s * c - xq * (c * c - s * s)

                # stage 6 (c6 = 1)
                th = theta + hs * (2.8462752525252526 * k1t - 10.757575757575758 * k2t
                                   + 8.906422717743473 * k3t + 0.2784090909090909 * k4t
                                   - 0.2735313036020583 * k5t)
                xq = q0 + sl * (direction * (pos + h))
                s = math.sin(th)
                c = math.cos(th)
                w = c + xq * s
                k6t = w * w + lam * s * s
                k6r = (1.0 - lam - xq * xq) * s * c - xq * (c * c - s * s)

                # 5th-order solution (b2 = 0)
                dth5 = (0.09114583333333333 * k1t + 0.44923629829290207 * k3t
                        + 0.6510416666666666 * k4t - 0.322376179245283 * k5t
                        + 0.13095238095238096 * k6t)
                drh5 = (0.09114583333333333 * k1r + 0.44923629829290207 * k3r
                        + 0.6510416666666666 * k4r - 0.322376179245283 * k5r
                        + 0.13095238095238096 * k6r)
                th_new = theta + hs * dth5
                rho_new = rho + hs * drh5

                # stage 7 at the proposed endpoint (feeds the error estimate)
                xq = q0 + sl * (direction * (pos + h))
                s = math.sin(th_new)
                c = math.cos(th_new)
                w = c + xq * s
                k7t = w * w + lam * s * s
                k7r = (1.0 - lam - xq * xq) * s * c - xq * (c * c - s * s)

                # difference against the embedded 4th-order weights
                errt = hs * (0.0012326388888888888 * k1t - 0.0042527702905061394 * k3t
                             + 0.036979166666666666 * k4t - 0.05086379716981132 * k5t
                             + 0.0419047619047619 * k6t - 0.025 * k7t)
                errr = hs * (0.0012326388888888888 * k1r - 0.0042527702905061394 * k3r
                             + 0.036979166666666666 * k4r - 0.05086379716981132 * k5r
                             + 0.0419047619047619 * k6r - 0.025 * k7r)

                at = abs(theta)
                an = abs(th_new)
                sc_t = tol * (1.0 + (at if at > an else an))
                ar = abs(rho)
                am = abs(rho_new)
                sc_r = tol * (1.0 + (ar if ar > am else am))
                err = abs(errt) / sc_t
                er2 = abs(errr) / sc_r
                if er2 > err:
                    err = er2

                dtheta = hs * dth5
                if dtheta < 0.0:
                    dtheta = -dtheta

                if err <= 1.0 and dtheta <= 1.5:
                    theta = th_new
                    rho = rho_new
                    pos += h
                    remaining -= h
                    fac = 5.0 if err == 0.0 else 0.9 * err ** -0.2
                    if fac > 5.0:
                        fac = 5.0
                    elif fac < 0.2:
                        fac = 0.2
                    h *= fac
                else:
                    if h <= remaining * 1e-14 + 1e-300:
                        return theta, rho, 1  # step size underflow
                    if err > 1.0:
                        fac = 0.9 * err ** -0.2
                        if fac < 0.1:
                            fac = 0.1
                        h *= fac
                    else:  # phase-advance guard tripped
                        h *= 0.5
            h_carry = h
        out_theta[i] = theta
        out_rho[i] = rho
    return theta, rho, 0


try:  # pragma: no cover - exercised implicitly everywhere
    from numba import njit

    _kernel = njit(cache=True, fastmath=False)(_kernel_source)
except Exception:  # pragma: no cover - numba is a hard dependency in practice
    _kernel = _kernel_source


class SegmentPath:
    """Precompiled integration geometry for one (potential, window) pair.

    Building the subinterval table once and sweeping many spectral
    parameters over it is the hot path of eigenvalue bisection.
    """

    def __init__(self, P: BVPotential, x_from: float, x_to: float,
                 record_points: np.ndarray | None = None):
        P._check_inside(x_from, x_to)
        if x_from == x_to:
            raise ValueError("empty propagation range")
        self.potential = P
        self.x_from = float(x_from)
        self.x_to = float(x_to)
        forward = x_to > x_from
        lo, hi = (x_from, x_to) if forward else (x_to, x_from)

        B = P.breakpoints()
        pts = [np.array([lo, hi]), B[(B > lo) & (B < hi)]]
        if record_points is not None:
            rp = np.asarray(record_points, dtype=float)
            if rp.size and (rp.min() < lo or rp.max() > hi):
                raise ValueError("record points outside the propagation range")
            pts.append(rp)
        nodes = pts[0]
        for p in pts[1:]:
            nodes = np.union1d(nodes, p)
        if not forward:
            nodes = nodes[::-1]
        self.nodes = nodes  # traversal order, nodes[0] == x_from

        starts = nodes[:-1]
        ends = nodes[1:]
        mids = 0.5 * (starts + ends)
        slope = np.asarray(P.density_at(mids), dtype=float)
        if forward:
            q0 = np.asarray(P.q_right(starts), dtype=float)
        else:
            q0 = np.asarray(P.q_left(starts), dtype=float)
        self._seg_start = np.ascontiguousarray(starts)
        self._seg_end = np.ascontiguousarray(ends)
        self._seg_q0 = np.ascontiguousarray(q0)
        self._seg_slope = np.ascontiguousarray(slope)

    def run(self, lam: float, theta0: float = 0.0, rho0: float = 0.0,
            tol: float = 1e-10, want_trace: bool = False):
        """Integrate across all segments; returns (theta, rho[, trace])."""
        if tol <= 0:
            raise ValueError("tol must be positive")
        n = self._seg_start.size
        out_t = np.empty(n)
        out_r = np.empty(n)
        theta, rho, status = _kernel(self._seg_start, self._seg_end, self._seg_q0,
                                     self._seg_slope, float(lam), float(theta0),
                                     float(rho0), float(tol), out_t, out_r)
        if status != 0:
            raise PropagationError(
                f"step size underflow at lam={lam} on [{self.x_from}, {self.x_to}]")
        if not (math.isfinite(theta) and math.isfinite(rho)):
            raise PropagationError(f"non-finite state at lam={lam}")
        if want_trace:
            thetas = np.concatenate(([theta0], out_t))
            rhos = np.concatenate(([rho0], out_r))
            return theta, rho, thetas, rhos
        return theta, rho


def propagate(P: BVPotential, lam: float, x_from: float, x_to: float,
              state: PrueferState, tol: float = 1e-10) -> PrueferState:
    """Advance a phase-plane state from x_from to x_to.

    The state is continuous across atoms: the measure enters only through
    the one-sided primitive values used on each open subinterval.
    """
    if abs(state.position - x_from) > 1e-12 * (1 + abs(x_from)):
        raise ValueError("state.position disagrees with x_from")
    if x_from == x_to:
        return state
    path = SegmentPath(P, x_from, x_to)
    theta, rho = path.run(lam, state.theta, state.rho, tol)
    return PrueferState(theta=theta, rho=rho, position=x_to)


def solution_at(P: BVPotential, lam: float, theta0: float, xs, tol: float = 1e-10):
    """Sample (u, u_quasi) along xs from a single sweep started at xs[0].

    Both returned functions share one overall normalization (the amplitude
    is re-based by its running maximum before exponentiation, so extreme
    log-amplitudes never overflow).
    """
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 1 or xs.size < 2 or not np.all(np.diff(xs) > 0):
        raise ValueError("xs must be strictly increasing with >= 2 points")
    path = SegmentPath(P, xs[0], xs[-1], record_points=xs)
    _, _, thetas, rhos = path.run(lam, theta0, 0.0, tol, want_trace=True)
    idx = np.searchsorted(path.nodes, xs)
    th = thetas[idx]
    rh = rhos[idx]
    ref = rh.max()
    amp = np.exp(rh - ref)
    u = GridFunction(xs, amp * np.sin(th))
    uq = GridFunction(xs, amp * np.cos(th))
    return u, uq
