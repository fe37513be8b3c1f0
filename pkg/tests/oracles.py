"""Independent oracles used by the test suite.

Each oracle reaches the target quantity by a route disjoint from the
production code: brute window scans with ulp nudges, a dense
finite-difference eigensolver, explicit (u, u') transfer matrices, Airy
zeros from scipy, and the one-band dispersion relation of a periodic comb.
"""

from __future__ import annotations

import math

import numpy as np

from measpec.measure import BVPotential, measure_of


def brute_window_neg_sup(P: BVPotential, cap: float = 1.0,
                         rng: np.random.Generator | None = None,
                         n_random: int = 300) -> float:
    """Max of -measure over half-open windows of length <= cap, by scan.

    Candidates anchor at breakpoints with one-ulp nudges on both endpoints
    (plus optional random starts), so one-sided limit values are reached to
    rounding accuracy without any analytic reasoning.
    """
    lo, hi = P.x_lo, P.x_hi
    cap = min(cap, hi - lo)
    B = P.breakpoints()

    def up(t):
        return math.nextafter(t, math.inf)

    a_cands = set()
    for t in B.tolist():
        for v in (t, up(t), t - cap, up(t - cap), t - 0.5 * cap):
            a_cands.add(v)
    if rng is not None:
        a_cands.update(rng.uniform(lo, hi, n_random).tolist())

    best = 0.0
    for a in a_cands:
        if not lo <= a < hi:
            continue
        b_hi = min(a + cap, hi)
        b_cands = {b_hi, up(a)}
        for t in B[(B > a) & (B <= b_hi)].tolist():
            b_cands.add(t)
            b_cands.add(up(t))
        for b in b_cands:
            if a < b <= hi and b - a <= cap * (1.0 + 1e-15):
                best = max(best, -measure_of(P, (a, b)))
    return best


def fd_lowest_eigenvalues(P: BVPotential, a: float, b: float,
                          n_eigs: int = 5, n_grid: int = 20001) -> np.ndarray:
    """Dirichlet eigenvalues from a dense second-order finite-difference matrix.

    Atoms must sit on grid nodes; each is folded into the diagonal as the
    u'-jump condition w/h.  Accuracy is O(h^2), about 1e-5 on unit-scale
    problems at the default resolution.
    """
    from scipy.linalg import eigh_tridiagonal

    x = np.linspace(a, b, n_grid)
    h = x[1] - x[0]
    interior = x[1:-1]
    diag = 2.0 / h**2 + np.asarray(P.density_at(interior), float)
    off = np.full(interior.size - 1, -1.0 / h**2)
    for pos, w in zip(P.atom_pos, P.atom_weight):
        j = int(round((pos - a) / h))
        if not (0 < j < n_grid - 1) or abs(x[j] - pos) > 1e-9 * (1 + abs(pos)):
            raise ValueError(f"oracle needs atoms on grid nodes, got {pos}")
        diag[j - 1] += w / h
    vals = eigh_tridiagonal(diag, off, select="i",
                            select_range=(0, n_eigs - 1),
                            eigvals_only=True)
    return vals


def transfer_terminal_state(P: BVPotential, lam: float, a: float, b: float,
                            theta0: float = 0.0):
    """(u, u') at b by explicit free flights and atom jump conditions.

    Only valid for atoms-only potentials; atoms must lie strictly inside
    (a, b).  The initial (u, u') realizes the polar state (theta0, rho=0)
    through u' = u1 + q(a+)*u.
    """
    if np.any(P.density != 0.0):
        raise ValueError("transfer oracle handles atoms-only potentials")
    atoms = [(float(p), float(w)) for p, w in zip(P.atom_pos, P.atom_weight)
             if a < p < b]
    q_right_a = float(P.q_right(a))
    u = math.sin(theta0)
    up = math.cos(theta0) + q_right_a * u

    def flight(u, up, d):
        if d == 0.0:
            return u, up
        if lam > 0.0:
            k = math.sqrt(lam)
            c, s = math.cos(k * d), math.sin(k * d)
            return c * u + s / k * up, -k * s * u + c * up
        if lam < 0.0:
            k = math.sqrt(-lam)
            c, s = math.cosh(k * d), math.sinh(k * d)
            return c * u + s / k * up, k * s * u + c * up
        return u + d * up, up

    x = a
    for pos, w in atoms:
        u, up = flight(u, up, pos - x)
        up += w * u
        x = pos
    u, up = flight(u, up, b - x)
    return u, up


def airy_level_oracle(n_levels: int = 5) -> np.ndarray:
    """Dirichlet-free levels of the speed-|x| potential on the line.

    Even states sit at zeros of Ai', odd states at zeros of Ai; scipy's
    ai_zeros is an independent root-finder for both families.
    """
    from scipy.special import ai_zeros

    n_half = n_levels // 2 + 1
    a, ap, _, _ = ai_zeros(n_half)
    levels = []
    for k in range(n_levels):
        levels.append(-ap[k // 2] if k % 2 == 0 else -a[k // 2])
    return np.asarray(levels)


def kronig_penney_states_per_length(E: float, weight: float,
                                    period: float = 1.0,
                                    n_samples: int = 400001) -> float:
    """Integrated density of states below E for the periodic atom comb.

    Uses the dispersion relation cos(k*P) = cos(kap*P) + w*sin(kap*P)/(2*kap)
    and accumulates the Bloch-phase sweep across the allowed bands.
    """
    if E <= 0:
        return 0.0
    t = np.linspace(1e-9, math.sqrt(E), n_samples) * period  # kappa * period
    disc = np.cos(t) + weight * period * np.sin(t) / (2.0 * t)
    allowed = np.abs(disc) <= 1.0
    phase = np.arccos(np.clip(disc, -1.0, 1.0))
    steps = np.abs(np.diff(phase))
    both = allowed[:-1] & allowed[1:]
    return float(np.sum(steps[both]) / math.pi / period)
