"""Quadratic-form evaluation for measure potentials.

The energy form splits into the kinetic part (exact for piecewise-linear
data) and the improper measure pairing, evaluated as a two-parameter table
of partial integrals with independently moving left and right cutoffs.  A
symmetric sweep could hide conditional divergence, so the cutoffs are never
tied together.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .criteria import brinck_constant
from .measure import (
    BVPotential,
    GridFunction,
    Interval,
    deriv_norm_sq,
    l2_norm_sq,
    stieltjes_pair,
)
from .prufer import SegmentPath
from .spectral import eigenvalue as _eigenvalue

__all__ = [
    "FormReport",
    "FormDivergenceError",
    "FormMargins",
    "potential_energy",
    "form_bilinear",
    "rayleigh_check",
    "form_lower_bound_check",
]

Q_TOL_ABS = 1e-9
Q_TOL_REL = 1e-7


class FormDivergenceError(RuntimeError):
    """The improper measure pairing failed to settle."""


@dataclass(frozen=True)
class FormReport:
    """Kinetic term, partial-integral table and the settled energy value."""

    kinetic: float
    left_cuts: list
    right_cuts: list
    potential_partial: list      # rows (left_cut, right_cut, value)
    Q: float | None
    form_value: float | None
    domain_membership: str       # converged | diverged | oscillating
    spread: float

    def to_dict(self) -> dict:
        return {
            "kinetic": self.kinetic,
            "left_cuts": list(self.left_cuts),
            "right_cuts": list(self.right_cuts),
            "potential_partial": [list(r) for r in self.potential_partial],
            "Q": self.Q,
            "form_value": self.form_value,
            "domain_membership": self.domain_membership,
            "spread": self.spread,
        }


def _default_cuts(span: Interval, n: int = 6):
    mid = 0.5 * (span.a + span.b)
    width = span.b - span.a
    lefts = mid - 0.5 * width * np.linspace(0.3, 1.0, n)
    rights = mid + 0.5 * width * np.linspace(0.3, 1.0, n)
    lefts[-1] = span.a
    rights[-1] = span.b
    return lefts, rights


def _partial_table(P: BVPotential, f: GridFunction, g: GridFunction,
                   left_cuts, right_cuts) -> np.ndarray:
    tbl = np.empty((len(left_cuts), len(right_cuts)), dtype=complex)
    for i, a in enumerate(left_cuts):
        for j, b in enumerate(right_cuts):
            if a < b:
                tbl[i, j] = stieltjes_pair(P, f, g, Interval(float(a), float(b)))
            else:
                tbl[i, j] = 0.0
    return tbl


def _settle(tbl: np.ndarray):
    """Classify the tail of the partial table; returns (state, value, spread)."""
    block = tbl[-3:, -3:] if tbl.shape[0] >= 3 and tbl.shape[1] >= 3 else tbl
    spread = float(np.max(np.abs(block - block[-1, -1])))
    last = block[-1, -1]
    tol = max(Q_TOL_ABS, Q_TOL_REL * abs(last))
    if spread <= tol:
        return "converged", last, spread
    diag = np.abs(np.diagonal(tbl))
    growing = diag.size >= 3 and np.all(np.diff(diag) > 0) and diag[-1] > 10.0 * diag[0] + 1.0
    return ("diverged" if growing else "oscillating"), None, spread


def potential_energy(P: BVPotential, u: GridFunction,
                     left_cuts=None, right_cuts=None) -> FormReport:
    """Improper pairing of |u|^2 against the measure, with convergence audit.

    The cutoffs march independently toward the two ends of u's span;
    divergence or oscillation is a reported state, never an exception.
    """
    span = u.span
    if left_cuts is None or right_cuts is None:
        dl, dr = _default_cuts(span)
        left_cuts = dl if left_cuts is None else np.asarray(left_cuts, float)
        right_cuts = dr if right_cuts is None else np.asarray(right_cuts, float)
    left_cuts = np.asarray(left_cuts, float)
    right_cuts = np.asarray(right_cuts, float)
    if np.any(left_cuts < span.a) or np.any(right_cuts > span.b):
        raise ValueError("cut positions must stay inside the sampled span")
    if not (np.all(np.diff(left_cuts) <= 0) and np.all(np.diff(right_cuts) >= 0)):
        raise ValueError("cuts must progress monotonically toward the ends")

    tbl = _partial_table(P, u, u, left_cuts, right_cuts)
    state, value, spread = _settle(tbl)
    kinetic = deriv_norm_sq(u)
    q_val = float(np.real(value)) if value is not None else None
    return FormReport(
        kinetic=kinetic,
        left_cuts=left_cuts.tolist(),
        right_cuts=right_cuts.tolist(),
        potential_partial=[
            (float(a), float(b), float(np.real(tbl[i, j])))
            for i, a in enumerate(left_cuts)
            for j, b in enumerate(right_cuts)
        ],
        Q=q_val,
        form_value=(kinetic + q_val) if q_val is not None else None,
        domain_membership=state,
        spread=spread,
    )


def form_bilinear(P: BVPotential, u: GridFunction, v: GridFunction,
                  left_cuts=None, right_cuts=None) -> complex:
    """Sesquilinear energy form: kinetic pairing plus the settled measure limit.

    Conjugate-symmetric in (u, v); raises FormDivergenceError when the
    partial table does not settle (non-membership of the form domain).
    """
    from .measure import deriv_inner

    lo = max(u.grid[0], v.grid[0])
    hi = min(u.grid[-1], v.grid[-1])
    span = Interval(lo, hi)
    if left_cuts is None or right_cuts is None:
        dl, dr = _default_cuts(span)
        left_cuts = dl if left_cuts is None else np.asarray(left_cuts, float)
        right_cuts = dr if right_cuts is None else np.asarray(right_cuts, float)
    tbl = _partial_table(P, u, v, left_cuts, right_cuts)
    state, value, spread = _settle(tbl)
    if state != "converged":
        raise FormDivergenceError(
            f"measure pairing did not settle (state={state}, spread={spread:.3e})")
    kin = deriv_inner(u, v, span)
    total = kin + value
    if not (u.is_complex or v.is_complex):
        return float(np.real(total))
    return complex(total)


def rayleigh_check(P: BVPotential, window, k: int, tol_lambda: float = 1e-8,
                   tol_ode: float = 1e-10, target_residual: float = 1e-6) -> float:
    """|form value - lam * norm^2| for a computed eigenpair.

    The eigenfunction is resampled densely enough that the piecewise-linear
    kinetic term cannot contribute more than a fraction of the target
    residual; the identity then holds to solver accuracy.
    """
    from .measure import as_interval

    J = as_interval(window)
    lam = _eigenvalue(P, J, k, tol_lambda, tol_ode)

    # chord-slope kinetic error ~ (h/pi)^2 * sup |(density - lam)|^2; pick h
    # so that term stays at ~1/5 of the target residual
    v_scale = float(np.max(np.abs(P.density)) if P.density.size else 0.0) + abs(lam) + 1.0
    h = math.pi * math.sqrt(0.2 * target_residual) / v_scale
    n = int(min(2_000_001, max(2001, math.ceil(J.length / h) + 1)))
    grid = np.union1d(np.linspace(J.a, J.b, n), P.breakpoints())
    grid = grid[(grid >= J.a) & (grid <= J.b)]

    path = SegmentPath(P, J.a, J.b, record_points=grid)
    _, _, th, rh = path.run(lam, 0.0, 0.0, tol_ode, want_trace=True)
    u = GridFunction(path.nodes, np.exp(rh - rh.max()) * np.sin(th))
    norm_sq = l2_norm_sq(u)
    u = GridFunction(u.grid, u.values / math.sqrt(norm_sq))

    kinetic = deriv_norm_sq(u)
    q_val = float(np.real(stieltjes_pair(P, u, u, J)))
    return abs(kinetic + q_val - lam)


@dataclass(frozen=True)
class FormMargins:
    """Slack of the two guaranteed energy inequalities (both nonnegative)."""

    kinetic_margin: float
    potential_margin: float
    C: float
    h: float


def form_lower_bound_check(P: BVPotential, u: GridFunction, h: float) -> FormMargins:
    """Evaluate the two h-parametrized lower-bound inequalities on u.

    kinetic_margin  = 2C/h * ||u||^2 + form_value - (1 - C h) * ||u'||^2
    potential_margin = (1 - C h) * Q + 2C/h * ||u||^2 + C h * form_value

    Both are guaranteed nonnegative for h in (0, 1] when u is compactly
    supported in the working domain; C is the clamped window constant.
    """
    if not 0.0 < h <= 1.0:
        raise ValueError("h must lie in (0, 1]")
    C = brinck_constant(P).C
    span = u.span
    mass = l2_norm_sq(u)
    kinetic = deriv_norm_sq(u)
    q_val = float(np.real(stieltjes_pair(P, u, u, span)))
    form_value = kinetic + q_val
    kinetic_margin = 2.0 * C / h * mass + form_value - (1.0 - C * h) * kinetic
    potential_margin = (1.0 - C * h) * q_val + 2.0 * C / h * mass + C * h * form_value
    return FormMargins(kinetic_margin=float(kinetic_margin),
                       potential_margin=float(potential_margin),
                       C=C, h=h)
