"""Window criteria for measure potentials.

Two diagnostics live here: the capped-window lower-bound constant (the
smallest C with every window integral of length <= cap bounded below by -C,
clamped to >= 2 by convention, giving the guaranteed form bound -2*C^2),
and the moving-window profile whose divergence at the domain edges is the
discreteness signal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .measure import BVPotential, Interval, measure_of

__all__ = [
    "BrinckReport",
    "MolchanovProfile",
    "DiscretenessCall",
    "brinck_constant",
    "lower_bound_estimate",
    "molchanov_profile",
    "classify_discreteness",
]


@dataclass(frozen=True)
class BrinckReport:
    """Exact supremum of -(window integral) over capped windows.

    ``sup_neg`` is the supremum itself, ``C = max(2, sup_neg)`` the clamped
    constant, ``lower_bound = -2 C^2`` the guaranteed quadratic-form bound.
    The witness is a concrete half-open window attaining the supremum; the
    variant flag records whether one-sided endpoint limits were needed.
    """

    sup_neg: float
    C: float
    lower_bound: float
    witness: Interval
    witness_variant: str
    cap: float

    def to_dict(self) -> dict:
        return {
            "sup_neg": self.sup_neg,
            "C": self.C,
            "lower_bound": self.lower_bound,
            "witness": [self.witness.a, self.witness.b],
            "witness_variant": self.witness_variant,
            "cap": self.cap,
        }


def lower_bound_estimate(C: float) -> float:
    """Guaranteed spectral lower bound -2*C^2 for a clamped constant C >= 2."""
    if not C >= 2.0:
        raise ValueError("the window constant convention requires C >= 2")
    return -2.0 * C * C


def _nudge_up(x: float) -> float:
    return math.nextafter(x, math.inf)


def brinck_constant(P: BVPotential, cap: float = 1.0) -> BrinckReport:
    """Exact sup of -measure over half-open windows of length <= cap.

    The window integral is piecewise linear in both endpoints between
    breakpoints, so the supremum is attained at breakpoint pairs, at
    one-sided limits around atoms, or on the cap constraint b = a + cap.
    All of those candidates are enumerated; no sampling is involved.
    """
    if cap <= 0:
        raise ValueError("cap must be positive")
    lo, hi = P.x_lo, P.x_hi
    span = hi - lo
    if span <= 0:
        raise ValueError("degenerate domain")
    cap = min(cap, span)
    cached = P._cache.get(("brinck", cap))
    if cached is not None:
        return cached

    B = P.breakpoints()
    qL = np.asarray(P.q_left(B), dtype=float)
    qR = np.asarray(P.q_right(B), dtype=float)
    min_b_side = np.minimum(qL, qR)   # best (lowest) value reachable at/just past b
    use_right_at_b = qR < qL          # which one-sided value attains the minimum

    cand_a = np.union1d(B, B - cap)
    cand_a = cand_a[(cand_a >= lo) & (cand_a < hi)]

    # the empty-window limit: sup_neg >= 0 always
    best = 0.0
    best_witness = None    # (a, b, variant)
    best_plain = 0.0
    plain_witness = None   # witness attained by a literal [a, b) window

    qL_a = np.asarray(P.q_left(cand_a), dtype=float)
    qR_a = np.asarray(P.q_right(cand_a), dtype=float)

    def consider(val: float, a: float, b: float, variant: str) -> None:
        nonlocal best, best_witness, best_plain, plain_witness
        if val > best:
            best = val
            best_witness = (a, b, variant)
        if variant == "plain" and val > best_plain:
            best_plain = val
            plain_witness = (a, b, variant)

    for i, a in enumerate(cand_a):
        b_end = min(a + cap, hi)
        if b_end <= a:
            continue
        a_inc, a_exc = qL_a[i], qR_a[i]
        exact_cap = a + cap <= hi

        # vanishing window [a, a+eps): isolates the atom sitting at a
        consider(a_inc - a_exc, a, a, "point_atom")

        # window ending exactly at b_end
        bL = float(P.q_left(b_end))
        consider(a_inc - bL, a, b_end, "plain")
        consider(a_exc - bL, a, b_end, "a_excluded")
        if exact_cap:
            # the remaining cap-length combo keeps |J| <= cap only when both
            # endpoints shift together; (a-incl, b-incl) would overshoot
            bR = float(P.q_right(b_end))
            consider(a_exc - bR, a, b_end, "shifted")

        # interior breakpoints strictly between a and b_end: slack below the
        # cap allows every endpoint variant, so take the cheapest b-side value
        j0 = int(np.searchsorted(B, a, side="right"))
        j1 = int(np.searchsorted(B, b_end, side="left"))
        if j1 > j0:
            seg = min_b_side[j0:j1]
            jmin = j0 + int(np.argmin(seg))
            b_pos = float(B[jmin])
            consider(a_inc - qL[jmin], a, b_pos, "plain")
            variant = "a_excluded" if a_exc > a_inc else "plain"
            if use_right_at_b[jmin]:
                variant = variant + "+b_included" if variant != "plain" else "b_included"
            if variant != "plain":
                consider(max(a_inc, a_exc) - min_b_side[jmin], a, b_pos, variant)

    if plain_witness is not None and best_plain >= best:
        best, best_witness = best_plain, plain_witness
    sup_neg = float(best)
    witness = _materialize_witness(P, best_witness, cap, lo, hi)
    C = max(2.0, sup_neg)
    report = BrinckReport(
        sup_neg=sup_neg,
        C=C,
        lower_bound=lower_bound_estimate(C),
        witness=witness[0],
        witness_variant=witness[1],
        cap=cap,
    )
    P._cache[("brinck", cap)] = report
    return report


def _materialize_witness(P: BVPotential, best, cap: float, lo: float, hi: float):
    """Turn a value-space optimum into an actual half-open window.

    One-sided limits are realized by single-ulp nudges so that measure_of on
    the returned interval reproduces -sup_neg to rounding accuracy.
    """
    if best is None:
        # sup_neg = 0: any vanishingly small window works
        width = max((hi - lo) * 1e-15, math.ulp(lo) * 4)
        return Interval(lo, lo + width), "empty_limit"
    a, b, variant = best
    if variant == "plain":
        pass
    elif variant == "shifted":
        b = _nudge_up(b)
        a = b - cap
    elif variant == "point_atom":
        b = _nudge_up(a)
    else:  # one-sided limits with slack below the cap
        if variant.startswith("a_excluded"):
            a = _nudge_up(a)
        if variant.endswith("b_included"):
            b = _nudge_up(b)
    if b <= a:
        b = _nudge_up(a)
    return Interval(float(a), float(b)), variant


@dataclass(frozen=True)
class MolchanovProfile:
    """Moving-window integrals and their running infimum toward the edges.

    ``running_inf[i]`` is the infimum of the window integral over all starts
    at least as far from the origin as ``starts[i]``; it is non-decreasing in
    that distance by construction.
    """

    h: float
    starts: np.ndarray
    window_integrals: np.ndarray
    running_inf: np.ndarray

    def to_rows(self):
        return zip(self.starts.tolist(), self.window_integrals.tolist(),
                   self.running_inf.tolist())


def molchanov_profile(P: BVPotential, h: float, n_starts: int = 256) -> MolchanovProfile:
    """Evaluate all windows [a, a+h) on a start set that attains the infimum.

    Starts combine a uniform grid with every breakpoint shifted by 0 and -h,
    so the piecewise-linear window integral is sampled at all of its break
    positions.
    """
    lo, hi = P.x_lo, P.x_hi
    if not (0 < h <= hi - lo):
        raise ValueError("window length h must lie in (0, domain length]")
    if n_starts < 2:
        raise ValueError("need at least two start positions")
    B = P.breakpoints()
    starts = np.union1d(np.linspace(lo, hi - h, n_starts),
                        np.union1d(B, B - h))
    starts = starts[(starts >= lo) & (starts <= hi - h)]
    w = np.asarray(P.q_left(starts + h) - P.q_left(starts), dtype=float)

    # suffix infimum in the |a| ordering
    order = np.argsort(np.abs(starts), kind="stable")
    inf_sorted = np.minimum.accumulate(w[order][::-1])[::-1]
    running = np.empty_like(w)
    running[order] = inf_sorted
    return MolchanovProfile(h=float(h), starts=starts, window_integrals=w,
                            running_inf=running)


@dataclass(frozen=True)
class DiscretenessCall:
    """Heuristic verdict; a finite truncation can only provide evidence."""

    verdict: str  # discrete_evidence | essential_evidence | inconclusive
    heuristic: bool = True
    diagnostics: dict = field(default_factory=dict)


def classify_discreteness(profile: MolchanovProfile,
                          growth_factor: float = 2.0,
                          edge_fraction: float = 0.25,
                          trim_fraction: float = 0.02) -> DiscretenessCall:
    """Compare the outer edge of the running infimum against the interior.

    Growing and positive outer infimum reads as discrete-spectrum evidence;
    a profile that stays flat relative to its own scale reads as essential-
    spectrum evidence; anything else is inconclusive.  The outermost
    trim_fraction of starts is dropped first: the suffix infimum over a
    handful of edge windows says nothing about the tail behavior.
    """
    if profile.starts.size == 0:
        raise ValueError("empty profile")
    dist = np.abs(profile.starts)
    order = np.argsort(dist, kind="stable")
    keep_n = max(2, int(math.ceil((1.0 - trim_fraction) * order.size)))
    kept = order[:keep_n]
    d = dist[kept]
    w = profile.window_integrals[kept]
    run = np.minimum.accumulate(w[::-1])[::-1]  # suffix inf in |a| order

    a_min, a_max = float(d[0]), float(d[-1])
    cut = a_min + (1.0 - edge_fraction) * (a_max - a_min)
    outer = d >= cut
    inner = ~outer
    if not outer.any() or not inner.any():
        return DiscretenessCall("inconclusive", diagnostics={"reason": "degenerate split"})

    outer_inf = float(w[outer].min())
    inner_inf = float(w[inner].min())
    outer_run = run[outer]
    increasing = bool(outer_run[-1] > outer_run[0] + 1e-12)

    scale = float(np.max(np.abs(w)))
    spread = float(run.max() - run.min())
    flat = spread <= 0.10 * max(scale, 1e-30)

    diag = {
        "inner_inf": inner_inf,
        "outer_inf": outer_inf,
        "edge_cut": cut,
        "increasing_outer": increasing,
        "running_inf_spread": spread,
        "profile_scale": scale,
        "growth_factor": growth_factor,
        "edge_fraction": edge_fraction,
    }
    if outer_inf > 0 and outer_inf >= growth_factor * inner_inf and increasing:
        return DiscretenessCall("discrete_evidence", diagnostics=diag)
    if flat:
        return DiscretenessCall("essential_evidence", diagnostics=diag)
    return DiscretenessCall("inconclusive", diagnostics=diag)
