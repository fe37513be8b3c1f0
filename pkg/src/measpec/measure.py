"""Signed-measure potentials on a finite working interval.

A potential is stored as a piecewise-constant density plus weighted point
atoms.  The primitive ``q`` is the left-continuous function with
``q(x_lo) = 0``; window integrals, Stieltjes pairings and total variation
all reduce to exact arithmetic on this representation.  Intervals are
half-open ``[a, b)`` throughout: a window owns the atom sitting on its left
endpoint and excludes the one on its right endpoint.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np

__all__ = [
    "Interval",
    "GridFunction",
    "BVPotential",
    "PotentialSpecError",
    "build_potential",
    "load_potential",
    "q_eval",
    "measure_of",
    "stieltjes_integral",
    "stieltjes_pair",
    "stieltjes_abs2",
    "total_variation",
    "shift_measure",
    "l2_inner",
    "l2_norm_sq",
    "deriv_inner",
    "deriv_norm_sq",
]


class PotentialSpecError(ValueError):
    """Raised when a potential description is malformed."""


@dataclass(frozen=True)
class Interval:
    """Half-open interval [a, b) with a < b."""

    a: float
    b: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError("interval endpoints must be finite")
        if not self.a < self.b:
            raise ValueError(f"interval requires a < b, got [{self.a}, {self.b})")

    @property
    def length(self) -> float:
        return self.b - self.a

    def __contains__(self, x: float) -> bool:
        return self.a <= x < self.b


def as_interval(J) -> Interval:
    if isinstance(J, Interval):
        return J
    a, b = J
    return Interval(float(a), float(b))


def _interp(x: np.ndarray, xp: np.ndarray, fp: np.ndarray) -> np.ndarray:
    """Piecewise-linear evaluation; exact at grid nodes, complex-safe."""
    if np.iscomplexobj(fp):
        return np.interp(x, xp, fp.real) + 1j * np.interp(x, xp, fp.imag)
    return np.interp(x, xp, fp)


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Piecewise-linear function on a strictly increasing grid.

    Values may be real or complex; the derivative is the piecewise-constant
    array of chord slopes, which is exact for the interpolant itself.
    """

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values)
        if np.iscomplexobj(v):
            v = v.astype(complex)
        else:
            v = v.astype(float)
        if g.ndim != 1 or g.size < 2:
            raise ValueError("grid needs at least two points")
        if v.shape != g.shape:
            raise ValueError("values must match grid shape")
        if not np.all(np.isfinite(g)) or not np.all(np.isfinite(v)):
            raise ValueError("grid and values must be finite")
        if not np.all(np.diff(g) > 0):
            raise ValueError("grid must be strictly increasing")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    # -- basic queries ----------------------------------------------------

    @property
    def span(self) -> Interval:
        return Interval(float(self.grid[0]), float(self.grid[-1]))

    @property
    def is_complex(self) -> bool:
        return np.iscomplexobj(self.values)

    def __call__(self, x):
        xq = np.asarray(x, dtype=float)
        lo, hi = self.grid[0], self.grid[-1]
        if np.any(xq < lo) or np.any(xq > hi):
            raise ValueError("evaluation outside the grid span")
        out = _interp(xq, self.grid, self.values)
        return out if np.ndim(x) else out[()]

    def derivative(self) -> np.ndarray:
        """Chord slope per grid cell (length n-1)."""
        return np.diff(self.values) / np.diff(self.grid)

    # -- algebra (exact on the union grid) --------------------------------

    def resample(self, grid: np.ndarray) -> "GridFunction":
        return GridFunction(grid, _interp(np.asarray(grid, float), self.grid, self.values))

    def _binary(self, other: "GridFunction", op) -> "GridFunction":
        if not isinstance(other, GridFunction):
            return NotImplemented
        g = np.union1d(self.grid, other.grid)
        lo = max(self.grid[0], other.grid[0])
        hi = min(self.grid[-1], other.grid[-1])
        g = g[(g >= lo) & (g <= hi)]
        if g.size < 2:
            raise ValueError("grid functions share no common span")
        return GridFunction(g, op(_interp(g, self.grid, self.values),
                                  _interp(g, other.grid, other.values)))

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, c):
        if isinstance(c, (int, float, complex)):
            return GridFunction(self.grid, self.values * c)
        return NotImplemented

    __rmul__ = __mul__

    @classmethod
    def from_callable(cls, fn: Callable, grid: Iterable[float]) -> "GridFunction":
        g = np.asarray(list(grid), dtype=float)
        return cls(g, np.asarray([fn(x) for x in g]))


@dataclass(frozen=True, eq=False)
class BVPotential:
    """Density-plus-atoms measure on a closed working domain.

    ``knots``/``density`` give the step density (``density[i]`` on
    ``[knots[i], knots[i+1])``); ``atom_pos``/``atom_weight`` list the point
    masses, strictly inside the domain.  The primitive is left-continuous
    and vanishes at the left domain edge.
    """

    knots: np.ndarray
    density: np.ndarray
    atom_pos: np.ndarray
    atom_weight: np.ndarray

    def __post_init__(self) -> None:
        k = np.asarray(self.knots, dtype=float)
        d = np.asarray(self.density, dtype=float)
        ap = np.asarray(self.atom_pos, dtype=float)
        aw = np.asarray(self.atom_weight, dtype=float)
        if k.ndim != 1 or k.size < 2 or not np.all(np.diff(k) > 0):
            raise PotentialSpecError("knots must be strictly increasing with >= 2 entries")
        if d.shape != (k.size - 1,):
            raise PotentialSpecError("need one density value per knot cell")
        if ap.shape != aw.shape or ap.ndim != 1:
            raise PotentialSpecError("atom positions/weights must be 1-d and aligned")
        if ap.size and not np.all(np.diff(ap) > 0):
            raise PotentialSpecError("atom positions must be strictly increasing")
        if ap.size and (ap[0] <= k[0] or ap[-1] >= k[-1]):
            raise PotentialSpecError("atoms must lie strictly inside the domain")
        if np.any(aw == 0.0):
            raise PotentialSpecError("atom weights must be nonzero")
        for arr in (k, d, ap, aw):
            if not np.all(np.isfinite(arr)):
                raise PotentialSpecError("potential data must be finite")
        object.__setattr__(self, "knots", k)
        object.__setattr__(self, "density", d)
        object.__setattr__(self, "atom_pos", ap)
        object.__setattr__(self, "atom_weight", aw)
        qk = np.concatenate(([0.0], np.cumsum(d * np.diff(k))))
        object.__setattr__(self, "_q_at_knots", qk)
        object.__setattr__(self, "_atom_cum", np.concatenate(([0.0], np.cumsum(aw))))
        object.__setattr__(self, "_cache", {})  # derived-result memo (pure data)

    # -- geometry ----------------------------------------------------------

    @property
    def x_lo(self) -> float:
        return float(self.knots[0])

    @property
    def x_hi(self) -> float:
        return float(self.knots[-1])

    @property
    def domain(self) -> Interval:
        return Interval(self.x_lo, self.x_hi)

    def breakpoints(self) -> np.ndarray:
        """Sorted positions where the density or the primitive can break."""
        return np.union1d(self.knots, self.atom_pos)

    def density_at(self, x) -> np.ndarray:
        """Density on the open cell containing x (cell owned by its left knot)."""
        xq = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.knots, xq, side="right") - 1, 0, self.density.size - 1)
        out = self.density[idx]
        return out if np.ndim(x) else float(out)

    def _check_inside(self, *xs: float) -> None:
        for x in xs:
            if not (self.x_lo <= x <= self.x_hi):
                raise ValueError(f"position {x} outside domain [{self.x_lo}, {self.x_hi}]")

    # -- primitive evaluation ----------------------------------------------

    def q_ac(self, x) -> np.ndarray:
        """Absolutely continuous part of the primitive."""
        xq = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.knots, xq, side="right") - 1, 0, self.density.size - 1)
        out = self._q_at_knots[idx] + self.density[idx] * (xq - self.knots[idx])
        return out if np.ndim(x) else float(out)

    def q_left(self, x) -> np.ndarray:
        xq = np.asarray(x, dtype=float)
        jumps = self._atom_cum[np.searchsorted(self.atom_pos, xq, side="left")]
        out = self.q_ac(xq) + jumps
        return out if np.ndim(x) else float(out)

    def q_right(self, x) -> np.ndarray:
        xq = np.asarray(x, dtype=float)
        jumps = self._atom_cum[np.searchsorted(self.atom_pos, xq, side="right")]
        out = self.q_ac(xq) + jumps
        return out if np.ndim(x) else float(out)

    def atom_weight_at(self, x: float) -> float:
        i = np.searchsorted(self.atom_pos, x, side="left")
        if i < self.atom_pos.size and self.atom_pos[i] == x:
            return float(self.atom_weight[i])
        return 0.0


# ---------------------------------------------------------------------------
# construction


def _expand_generator(name: str, params: dict, lo: float, hi: float):
    """Return (density_segments, atoms) for a named generator."""
    segments: list[tuple[float, float, float]] = []
    atoms: list[tuple[float, float]] = []
    if name == "single_delta":
        x0 = float(params["x0"])
        alpha = float(params["alpha"])
        atoms.append((x0, alpha))
    elif name == "abs_x":
        # stores the speed-|x| slope as a midpoint step density so the
        # primitive tracks x|x|/2 to second order in the cell width
        cell = float(params.get("cell", 0.01))
        if cell <= 0:
            raise PotentialSpecError("abs_x cell width must be positive")
        edges = np.arange(lo, hi, cell)
        edges = np.append(edges, hi)
        mids = 0.5 * (edges[:-1] + edges[1:])
        for a, b, m in zip(edges[:-1], edges[1:], mids):
            segments.append((float(a), float(b), float(abs(m))))
    elif name == "periodic_comb":
        period = float(params["period"])
        weight = float(params["weight"])
        phase = float(params.get("phase", 0.5 * period))
        if period <= 0:
            raise PotentialSpecError("periodic_comb period must be positive")
        if weight == 0:
            raise PotentialSpecError("periodic_comb weight must be nonzero")
        k = math.ceil((lo - phase) / period)
        x = phase + k * period
        while x < hi:
            if x > lo:
                atoms.append((x, weight))
            x += period
    elif name in ("paper_comb", "delta_comb", "sqrt_comb"):
        # alternating comb on x_n = sqrt(n): +(rho + alpha_n) on odd nodes,
        # -rho on even nodes
        rho = float(params.get("rho", 1.0))
        rule = str(params.get("alpha_rule", "const"))
        alpha0 = float(params.get("alpha", 1.0))
        n_max = int(params.get("n_max", 10**7))
        if rho <= 0:
            raise PotentialSpecError("comb strength rho must be positive")

        def alpha_of(m: int) -> float:  # m = 1, 2, ... indexes odd nodes
            if rule == "const":
                return alpha0
            if rule == "log":
                return alpha0 * math.log1p(m)
            if rule == "inv_n":
                return alpha0 / m
            raise PotentialSpecError(f"unknown alpha_rule {rule!r}")

        n = 1
        while n <= n_max:
            x = math.sqrt(n)
            if x >= hi:
                break
            if x > lo:
                if n % 2 == 1:
                    atoms.append((x, rho + alpha_of((n + 1) // 2)))
                else:
                    atoms.append((x, -rho))
            n += 1
    else:
        raise PotentialSpecError(f"unknown generator {name!r}")
    return segments, atoms


def build_potential(spec: dict) -> BVPotential:
    """Build a potential from a parsed JSON description.

    Expected fields: ``domain: [lo, hi]``, optional ``density`` list of
    ``{from, to, value}`` segments, optional ``atoms`` list of ``{x, w}``,
    optional ``generator: {name, params}``.
    """
    if not isinstance(spec, dict):
        raise PotentialSpecError("potential spec must be a JSON object")
    try:
        lo, hi = (float(v) for v in spec["domain"])
    except (KeyError, TypeError, ValueError) as exc:
        raise PotentialSpecError("spec needs a numeric 'domain: [lo, hi]'") from exc
    if not lo < hi:
        raise PotentialSpecError("domain must satisfy lo < hi")

    segments: list[tuple[float, float, float]] = []
    for seg in spec.get("density", []) or []:
        try:
            a, b, v = float(seg["from"]), float(seg["to"]), float(seg["value"])
        except (KeyError, TypeError, ValueError) as exc:
            raise PotentialSpecError("density segments need from/to/value") from exc
        if not (lo <= a < b <= hi):
            raise PotentialSpecError(f"density segment [{a}, {b}) outside domain")
        segments.append((a, b, v))

    atoms: list[tuple[float, float]] = []
    for at in spec.get("atoms", []) or []:
        try:
            x, w = float(at["x"]), float(at["w"])
        except (KeyError, TypeError, ValueError) as exc:
            raise PotentialSpecError("atoms need x/w") from exc
        atoms.append((x, w))

    gen = spec.get("generator")
    if gen is not None:
        try:
            name = gen["name"]
        except (KeyError, TypeError) as exc:
            raise PotentialSpecError("generator needs a name") from exc
        gseg, gatoms = _expand_generator(str(name), dict(gen.get("params", {}) or {}), lo, hi)
        segments.extend(gseg)
        atoms.extend(gatoms)

    # assemble the step density on the union of segment edges
    edges = {lo, hi}
    for a, b, _ in segments:
        edges.add(a)
        edges.add(b)
    knots = np.array(sorted(edges))
    density = np.zeros(knots.size - 1)
    for a, b, v in segments:
        i0 = int(np.searchsorted(knots, a))
        i1 = int(np.searchsorted(knots, b))
        density[i0:i1] += v

    if atoms:
        atoms.sort(key=lambda t: t[0])
        pos = [x for x, _ in atoms]
        if any(pos[i] == pos[i + 1] for i in range(len(pos) - 1)):
            raise PotentialSpecError("duplicate atom positions")
        for x, w in atoms:
            if not (lo < x < hi):
                raise PotentialSpecError(f"atom at {x} outside the open domain ({lo}, {hi})")
            if w == 0:
                raise PotentialSpecError(f"atom at {x} has zero weight")
    ap = np.array([x for x, _ in atoms]) if atoms else np.empty(0)
    aw = np.array([w for _, w in atoms]) if atoms else np.empty(0)
    return BVPotential(knots, density, ap, aw)


def load_potential(path) -> BVPotential:
    """Read a JSON potential spec from disk."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise PotentialSpecError(f"invalid JSON in {path}: {exc}") from exc
    return build_potential(spec)


# ---------------------------------------------------------------------------
# measure operations


def q_eval(P: BVPotential, x: float, side: str = "left") -> float:
    """One-sided value of the primitive; 'left' is the canonical branch."""
    P._check_inside(x)
    if side == "left":
        return float(P.q_left(x))
    if side == "right":
        return float(P.q_right(x))
    raise ValueError("side must be 'left' or 'right'")


def measure_of(P: BVPotential, J) -> float:
    """Total measure of the half-open window J = [a, b)."""
    J = as_interval(J)
    P._check_inside(J.a, J.b)
    return float(P.q_left(J.b) - P.q_left(J.a))


def total_variation(P: BVPotential, J) -> float:
    """Variation of the primitive over [a, b): |density| mass plus |atom| mass."""
    J = as_interval(J)
    P._check_inside(J.a, J.b)
    pts = np.union1d(np.array([J.a, J.b]), P.knots[(P.knots > J.a) & (P.knots < J.b)])
    mids = 0.5 * (pts[:-1] + pts[1:])
    ac = float(np.sum(np.abs(P.density_at(mids)) * np.diff(pts)))
    i0 = np.searchsorted(P.atom_pos, J.a, side="left")
    i1 = np.searchsorted(P.atom_pos, J.b, side="left")
    return ac + float(np.sum(np.abs(P.atom_weight[i0:i1])))


def shift_measure(P: BVPotential, s: float) -> BVPotential:
    """Add a constant s to the density everywhere; atoms unchanged."""
    return BVPotential(P.knots, P.density + float(s), P.atom_pos, P.atom_weight)


# ---------------------------------------------------------------------------
# exact pairings against the measure and against Lebesgue measure
#
# On each refined cell the integrand is a polynomial of degree <= 2
# (linear x linear, or linear x constant), so a one-point trapezoid /
# Simpson rule per cell is exact up to rounding.  This keeps quadrature
# error out of every inequality margin downstream.


def _refined_cells(P: BVPotential | None, J: Interval, *grids: np.ndarray):
    pieces = [np.array([J.a, J.b])]
    if P is not None:
        k = P.knots
        pieces.append(k[(k > J.a) & (k < J.b)])
    for g in grids:
        pieces.append(g[(g > J.a) & (g < J.b)])
    pts = np.union1d(pieces[0], pieces[0])
    for p in pieces[1:]:
        pts = np.union1d(pts, p)
    return pts


def _require_span(f: GridFunction, J: Interval) -> None:
    if J.a < f.grid[0] - 0 or J.b > f.grid[-1] + 0:
        raise ValueError("window outside the grid span of the function")


def stieltjes_pair(P: BVPotential, f: GridFunction, g: GridFunction, J) -> complex:
    """Exact Stieltjes pairing of f * conj(g) against the measure over [a, b)."""
    J = as_interval(J)
    P._check_inside(J.a, J.b)
    _require_span(f, J)
    _require_span(g, J)
    pts = _refined_cells(P, J, f.grid, g.grid)
    mids = 0.5 * (pts[:-1] + pts[1:])
    dens = P.density_at(mids)
    fv = _interp(pts, f.grid, f.values)
    gv = np.conj(_interp(pts, g.grid, g.values))
    fm = _interp(mids, f.grid, f.values)
    gm = np.conj(_interp(mids, g.grid, g.values))
    prod = fv * gv
    cells = np.diff(pts) / 6.0 * (prod[:-1] + 4.0 * fm * gm + prod[1:])
    total = np.sum(dens * cells)
    i0 = np.searchsorted(P.atom_pos, J.a, side="left")
    i1 = np.searchsorted(P.atom_pos, J.b, side="left")
    if i1 > i0:
        xa = P.atom_pos[i0:i1]
        total = total + np.sum(P.atom_weight[i0:i1]
                               * _interp(xa, f.grid, f.values)
                               * np.conj(_interp(xa, g.grid, g.values)))
    if not (f.is_complex or g.is_complex):
        return float(np.real(total))
    return complex(total)


def stieltjes_integral(P: BVPotential, f: GridFunction, J) -> float | complex:
    """Integral of f against the measure over [a, b); exact for the interpolant."""
    J = as_interval(J)
    P._check_inside(J.a, J.b)
    _require_span(f, J)
    pts = _refined_cells(P, J, f.grid)
    mids = 0.5 * (pts[:-1] + pts[1:])
    dens = P.density_at(mids)
    fv = _interp(pts, f.grid, f.values)
    total = np.sum(dens * 0.5 * (fv[:-1] + fv[1:]) * np.diff(pts))
    i0 = np.searchsorted(P.atom_pos, J.a, side="left")
    i1 = np.searchsorted(P.atom_pos, J.b, side="left")
    if i1 > i0:
        xa = P.atom_pos[i0:i1]
        total = total + np.sum(P.atom_weight[i0:i1] * _interp(xa, f.grid, f.values))
    if not f.is_complex:
        return float(np.real(total))
    return complex(total)


def stieltjes_abs2(P: BVPotential, f: GridFunction, J) -> float:
    """Integral of |f|^2 against the measure over [a, b); exact."""
    return float(np.real(stieltjes_pair(P, f, f, J)))


def l2_inner(f: GridFunction, g: GridFunction, J=None) -> complex:
    """Exact integral of f * conj(g) dx over J (default: common span)."""
    if J is None:
        J = Interval(max(f.grid[0], g.grid[0]), min(f.grid[-1], g.grid[-1]))
    J = as_interval(J)
    _require_span(f, J)
    _require_span(g, J)
    pts = _refined_cells(None, J, f.grid, g.grid)
    mids = 0.5 * (pts[:-1] + pts[1:])
    fv = _interp(pts, f.grid, f.values)
    gv = np.conj(_interp(pts, g.grid, g.values))
    fm = _interp(mids, f.grid, f.values)
    gm = np.conj(_interp(mids, g.grid, g.values))
    total = np.sum(np.diff(pts) / 6.0 * (fv[:-1] * gv[:-1] + 4.0 * fm * gm + fv[1:] * gv[1:]))
    if not (f.is_complex or g.is_complex):
        return float(np.real(total))
    return complex(total)


def l2_norm_sq(f: GridFunction, J=None) -> float:
    return float(np.real(l2_inner(f, f, J)))


def deriv_inner(f: GridFunction, g: GridFunction, J=None) -> complex:
    """Exact integral of f' * conj(g') dx over J (slopes are cellwise constant)."""
    if J is None:
        J = Interval(max(f.grid[0], g.grid[0]), min(f.grid[-1], g.grid[-1]))
    J = as_interval(J)
    _require_span(f, J)
    _require_span(g, J)
    pts = _refined_cells(None, J, f.grid, g.grid)
    mids = 0.5 * (pts[:-1] + pts[1:])
    fi = np.clip(np.searchsorted(f.grid, mids, side="right") - 1, 0, f.grid.size - 2)
    gi = np.clip(np.searchsorted(g.grid, mids, side="right") - 1, 0, g.grid.size - 2)
    fs = (np.diff(f.values) / np.diff(f.grid))[fi]
    gs = np.conj((np.diff(g.values) / np.diff(g.grid))[gi])
    total = np.sum(fs * gs * np.diff(pts))
    if not (f.is_complex or g.is_complex):
        return float(np.real(total))
    return complex(total)


def deriv_norm_sq(f: GridFunction, J=None) -> float:
    return float(np.real(deriv_inner(f, f, J)))
