"""Property-check engine for the interval inequalities behind the toolkit.

Each check evaluates one inequality exactly on step/piecewise-linear data
(the only rounding is floating point) and returns its slack.  Suites drive
the checks over seeded random ensembles and report any normalized slack
below -1e-10 as a violation.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .criteria import brinck_constant
from .measure import (
    BVPotential,
    GridFunction,
    Interval,
    as_interval,
    deriv_norm_sq,
    l2_norm_sq,
    stieltjes_abs2,
    stieltjes_integral,
)

__all__ = [
    "CheckOutcome",
    "SuiteReport",
    "check_ganelius",
    "check_embedding",
    "check_lemma3",
    "check_corollary1",
    "check_proposition_upper",
    "run_suite",
    "random_br_potential",
    "random_grid_function",
    "SUITES",
]

MARGIN_TOL = 1e-10


@dataclass(frozen=True)
class CheckOutcome:
    """Raw inequality slack plus the dominant magnitude used to normalize it."""

    margin: float
    scale: float

    @property
    def normalized(self) -> float:
        return self.margin / max(1.0, self.scale)

    def ok(self, tol: float = MARGIN_TOL) -> bool:
        return self.normalized >= -tol


# ---------------------------------------------------------------------------
# pointwise helpers on piecewise-linear data


def _nodes_in(f: GridFunction, J: Interval) -> np.ndarray:
    inner = f.grid[(f.grid > J.a) & (f.grid < J.b)]
    return np.concatenate(([J.a], inner, [J.b]))


def _inf_sup_abs2(f: GridFunction, J: Interval):
    """Exact min and max of |f|^2 over the closed window."""
    pts = _nodes_in(f, J)
    vals = np.abs(np.asarray(f(pts)))
    lo = float(np.min(vals) ** 2)
    hi = float(np.max(vals) ** 2)
    # |f|^2 is cellwise quadratic; an interior minimum exists where the real
    # and imaginary chords jointly pass closest to zero
    fv = np.asarray(f(pts), dtype=complex)
    for i in range(pts.size - 1):
        dx = pts[i + 1] - pts[i]
        a = fv[i]
        s = (fv[i + 1] - fv[i]) / dx
        denom = (s * np.conj(s)).real
        if denom > 0.0:
            t = -((a * np.conj(s)).real) / denom
            if 0.0 < t < dx:
                lo = min(lo, float(abs(a + s * t) ** 2))
    return lo, hi


def _variation(f: GridFunction, J: Interval) -> float:
    """Total variation of f over the window (exact for the interpolant)."""
    pts = _nodes_in(f, J)
    return float(np.sum(np.abs(np.diff(np.asarray(f(pts))))))


def _variation_abs2(f: GridFunction, J: Interval) -> float:
    """Total variation of |f|^2 over the window.

    On each cell |f|^2 is a parabola in x; its variation is the sum of the
    monotone pieces around the (possible) interior vertex.
    """
    pts = _nodes_in(f, J)
    fv = np.asarray(f(pts), dtype=complex)
    total = 0.0
    for i in range(pts.size - 1):
        dx = pts[i + 1] - pts[i]
        a = fv[i]
        s = (fv[i + 1] - fv[i]) / dx
        v0 = float(abs(a) ** 2)
        v1 = float(abs(a + s * dx) ** 2)
        denom = (s * np.conj(s)).real
        t = -((a * np.conj(s)).real) / denom if denom > 0.0 else -1.0
        if 0.0 < t < dx:
            vmin = float(abs(a + s * t) ** 2)
            total += (v0 - vmin) + (v1 - vmin)
        else:
            total += abs(v1 - v0)
    return total


def sup_compact_measure(P: BVPotential, J: Interval) -> float:
    """Exact sup of the measure of compact subintervals of [a, b).

    Candidate endpoints are the breakpoints with both one-sided variants;
    pairing the variants across two distinct breakpoints is always feasible,
    while at a single breakpoint only the whole-atom (or empty) window
    exists.  Point windows off the atoms make the sup >= 0.
    """
    B = P.breakpoints()
    cand = np.concatenate(([J.a], B[(B > J.a) & (B < J.b)], [J.b]))
    qL = np.asarray(P.q_left(cand), dtype=float)
    qR = np.asarray(P.q_right(cand), dtype=float)
    # left endpoint of K: subtract q_left (atom included) or q_right
    # (excluded); right endpoint: add q_right (included) or q_left
    # (excluded); K must close strictly below b, so at cand == b only the
    # left-limit value is legal
    lo_side = np.minimum(qL, qR)
    hi_side = np.maximum(qL, qR)
    hi_side[-1] = qL[-1]

    best = 0.0
    inside = (P.atom_pos >= J.a) & (P.atom_pos < J.b)
    if np.any(inside):
        best = max(best, float(np.max(P.atom_weight[inside])))
    run_min = lo_side[0]
    for j in range(1, cand.size):
        v = hi_side[j] - run_min
        if v > best:
            best = v
        if lo_side[j] < run_min:
            run_min = lo_side[j]
    return best


# ---------------------------------------------------------------------------
# the five checks


def check_ganelius(f: GridFunction, g: BVPotential, J) -> CheckOutcome:
    """Slack of: integral of f dg <= (inf f + var f) * sup_K integral over K."""
    J = as_interval(J)
    pts = _nodes_in(f, J)
    vals = np.asarray(f(pts))
    if np.iscomplexobj(vals) or np.any(vals < 0):
        raise ValueError("f must be real and nonnegative on the window")
    inf_f = float(np.min(vals))
    var_f = _variation(f, J)
    sup_k = sup_compact_measure(g, J)
    lhs = float(stieltjes_integral(g, f, J))
    bound = (inf_f + var_f) * sup_k
    return CheckOutcome(margin=bound - lhs, scale=max(abs(bound), abs(lhs)))


def check_embedding(f: GridFunction, J, t_param: float):
    """Three pointwise-vs-norm margins on a compact window of length l.

    (a) |f(x)|^2 >= l^-1/2 * ||f||^2 - l/2 * ||f'||^2 at grid nodes;
    (b) |f(x)|^2 <= 2/t * ||f||^2 + t * ||f'||^2 everywhere;
    (c) inf |f|^2 <= l^-1 * ||f||^2.
    """
    J = as_interval(J)
    l = J.length
    if not 0.0 < t_param <= l:
        raise ValueError("t_param must lie in (0, window length]")
    norm_sq = l2_norm_sq(f, J)
    der_sq = deriv_norm_sq(f, J)
    pts = _nodes_in(f, J)
    abs2 = np.abs(np.asarray(f(pts))) ** 2
    inf_abs2, sup_abs2 = _inf_sup_abs2(f, J)

    lower = 0.5 / l * norm_sq - 0.5 * l * der_sq
    m_lower = float(np.min(abs2) - lower)
    upper = 2.0 / t_param * norm_sq + t_param * der_sq
    m_upper = float(upper - sup_abs2)
    m_inf = float(norm_sq / l - inf_abs2)
    scale = max(norm_sq / l, l * der_sq, sup_abs2, 2.0 / t_param * norm_sq)
    return (CheckOutcome(m_lower, scale),
            CheckOutcome(m_upper, scale),
            CheckOutcome(m_inf, scale))


def _ceil_length(l: float) -> int:
    n = math.ceil(l)
    if n < 1:
        n = 1
    # guard against ceil(integer + ulp noise)
    if n - 1 >= l:
        n -= 1
    return max(n, 1)


def check_lemma3(P: BVPotential, f: GridFunction, I, h: float) -> CheckOutcome:
    """Slack of the windowed lower bound on the measure pairing of |f|^2.

    margin = int_I |f|^2 dq + C [ 2 (h l / n)^-1 ||f||^2 + (h l / n) ||f'||^2 ]
    with n the integer rounding of the window length l upward.
    """
    I = as_interval(I)
    if not 0.0 < h <= 1.0:
        raise ValueError("h must lie in (0, 1]")
    l = I.length
    n = _ceil_length(l)
    C = brinck_constant(P).C
    step = h * l / n
    pairing = stieltjes_abs2(P, f, I)
    penalty = C * (2.0 / step * l2_norm_sq(f, I) + step * deriv_norm_sq(f, I))
    return CheckOutcome(margin=pairing + penalty, scale=max(abs(pairing), penalty))


def check_corollary1(P: BVPotential, u: GridFunction, I) -> CheckOutcome:
    """Slack of the unit-cell positivity: kinetic + 2C^2 mass + pairing >= 0."""
    I = as_interval(I)
    if I.length > 1.0 + 1e-12:
        raise ValueError("window length must not exceed 1")
    C = brinck_constant(P).C
    kin = deriv_norm_sq(u, I)
    mass = l2_norm_sq(u, I)
    pairing = stieltjes_abs2(P, u, I)
    margin = kin + 2.0 * C * C * mass + pairing
    return CheckOutcome(margin=margin, scale=max(kin, 2.0 * C * C * mass, abs(pairing)))


def check_proposition_upper(P: BVPotential, u: GridFunction, I, h: float) -> CheckOutcome:
    """Slack of the mirrored (upper) windowed bound on the measure pairing.

    The constant is the window constant of the sign-flipped measure.
    """
    I = as_interval(I)
    if not 0.0 < h <= 1.0:
        raise ValueError("h must lie in (0, 1]")
    l = I.length
    n = _ceil_length(l)
    reflected = BVPotential(P.knots, -P.density, P.atom_pos, -P.atom_weight)
    C1 = brinck_constant(reflected).C
    step = h * l / n
    pairing = stieltjes_abs2(P, u, I)
    penalty = C1 * (2.0 / step * l2_norm_sq(u, I) + step * deriv_norm_sq(u, I))
    return CheckOutcome(margin=penalty - pairing, scale=max(abs(pairing), penalty))


# ---------------------------------------------------------------------------
# random ensembles


def random_br_potential(rng: np.random.Generator, domain=(-3.0, 3.0),
                        c_target: float = 4.0, max_tries: int = 50) -> BVPotential:
    """Mixed atoms-plus-steps potential rejection-sampled to sup_neg <= c_target."""
    lo, hi = domain
    for _ in range(max_tries):
        n_cells = int(rng.integers(1, 6))
        inner = np.sort(rng.uniform(lo, hi, size=n_cells - 1)) if n_cells > 1 else np.empty(0)
        knots = np.concatenate(([lo], inner, [hi]))
        knots = np.unique(knots)
        density = rng.uniform(-c_target, 5.0, size=knots.size - 1)
        n_atoms = int(rng.integers(0, 7))
        pos = np.sort(rng.uniform(lo + 1e-3, hi - 1e-3, size=n_atoms))
        pos = pos[np.concatenate(([True], np.diff(pos) > 1e-9))] if n_atoms else pos
        w = rng.uniform(-c_target, 5.0, size=pos.size)
        w[w == 0.0] = 1.0
        P = BVPotential(knots, density, pos, w)
        if brinck_constant(P).sup_neg <= c_target:
            return P
    # fall back to a mild potential that always qualifies
    return BVPotential(np.array([lo, hi]), np.array([0.5]), np.empty(0), np.empty(0))


def random_grid_function(rng: np.random.Generator, J: Interval,
                         nonneg: bool = False, complex_ok: bool = True,
                         zero_ends: bool = False) -> GridFunction:
    n = int(rng.integers(4, 12))
    inner = np.sort(rng.uniform(J.a, J.b, size=n))
    inner = inner[np.concatenate(([True], np.diff(inner) > 1e-9))]
    grid = np.concatenate(([J.a], inner, [J.b]))
    if nonneg:
        vals = rng.uniform(0.0, 2.0, size=grid.size)
    elif complex_ok and rng.random() < 0.5:
        vals = rng.normal(size=grid.size) + 1j * rng.normal(size=grid.size)
    else:
        vals = rng.normal(size=grid.size)
    if zero_ends:
        vals[0] = 0.0
        vals[-1] = 0.0
    return GridFunction(grid, vals)


def _sub_window(rng: np.random.Generator, domain: Interval, max_len: float) -> Interval:
    length = rng.uniform(0.1, min(max_len, domain.length))
    a = rng.uniform(domain.a, domain.b - length)
    return Interval(a, a + length)


# ---------------------------------------------------------------------------
# suites


def _digest(*arrays) -> str:
    hsh = hashlib.sha256()
    for arr in arrays:
        hsh.update(np.ascontiguousarray(arr).tobytes())
    return hsh.hexdigest()[:16]


def _case_ganelius(rng):
    P = random_br_potential(rng)
    J = _sub_window(rng, P.domain, 4.0)
    f = random_grid_function(rng, J, nonneg=True)
    out = check_ganelius(f, P, J)
    return (out,), _digest(P.knots, P.density, P.atom_pos, P.atom_weight,
                           f.grid, f.values, [J.a, J.b])


def _case_embedding(rng):
    a = rng.uniform(-2.0, 2.0)
    J = Interval(a, a + rng.uniform(0.2, 3.0))
    f = random_grid_function(rng, J)
    t = rng.uniform(1e-3, J.length)
    outs = check_embedding(f, J, t)
    return outs, _digest(f.grid, f.values, [J.a, J.b, t])


def _case_lemma3(rng):
    P = random_br_potential(rng)
    I = _sub_window(rng, P.domain, 3.0)
    f = random_grid_function(rng, I)
    h = rng.uniform(0.05, 1.0)
    out = check_lemma3(P, f, I, h)
    return (out,), _digest(P.knots, P.density, P.atom_pos, P.atom_weight,
                           f.grid, f.values, [I.a, I.b, h])


def _case_corollary1(rng):
    P = random_br_potential(rng)
    I = _sub_window(rng, P.domain, 1.0)
    u = random_grid_function(rng, I)
    out = check_corollary1(P, u, I)
    return (out,), _digest(P.knots, P.density, P.atom_pos, P.atom_weight,
                           u.grid, u.values, [I.a, I.b])


def _case_proposition(rng):
    P = random_br_potential(rng)
    I = _sub_window(rng, P.domain, 3.0)
    u = random_grid_function(rng, I)
    h = rng.uniform(0.05, 1.0)
    out = check_proposition_upper(P, u, I, h)
    return (out,), _digest(P.knots, P.density, P.atom_pos, P.atom_weight,
                           u.grid, u.values, [I.a, I.b, h])


SUITES = {
    "ganelius": _case_ganelius,
    "embedding": _case_embedding,
    "lemma3": _case_lemma3,
    "corollary1": _case_corollary1,
    "proposition_upper": _case_proposition,
}


@dataclass(frozen=True)
class SuiteReport:
    """Aggregate of one seeded inequality sweep."""

    suite: str
    seed: int
    n_cases: int
    tolerance: float
    worst_margin: float                  # normalized
    violations: list = field(default_factory=list)
    digest: str = ""

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "seed": self.seed,
            "n_cases": self.n_cases,
            "tolerance": self.tolerance,
            "worst_margin": self.worst_margin,
            "violations": list(self.violations),
            "digest": self.digest,
            "passed": self.passed,
        }


def run_suite(name: str, seed: int, n_cases: int = 1000,
              tol: float = MARGIN_TOL) -> SuiteReport:
    """Run one named inequality suite; deterministic for a fixed seed."""
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; options: {sorted(SUITES)}")
    case = SUITES[name]
    rng = np.random.default_rng(seed)
    worst = math.inf
    violations = []
    margins_digest = hashlib.sha256()
    for idx in range(n_cases):
        outcomes, digest = case(rng)
        for out in outcomes:
            nm = out.normalized
            margins_digest.update(repr(nm).encode())
            if nm < worst:
                worst = nm
            if nm < -tol:
                violations.append({"seed": seed, "case": idx,
                                   "inputs_digest": digest, "margin": nm})
    return SuiteReport(
        suite=name,
        seed=seed,
        n_cases=n_cases,
        tolerance=tol,
        worst_margin=worst,
        violations=violations,
        digest=hashlib.sha256(
            (name + str(seed) + str(n_cases) + margins_digest.hexdigest()).encode()
        ).hexdigest()[:16],
    )
