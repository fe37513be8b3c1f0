import math

import numpy as np
import pytest

import measpec as m
from measpec.forms import FormDivergenceError
from measpec.inequalities import random_br_potential, random_grid_function
from measpec.measure import Interval, deriv_norm_sq, l2_norm_sq, stieltjes_abs2


def hat(grid_n=101, lo=-1.0, hi=1.0):
    g = np.linspace(lo, hi, grid_n)
    return m.GridFunction(g, np.maximum(0.0, 1.0 - np.abs(g)))


# ---------------------------------------------------------------------------
# potential energy


def test_atom_pairing_constant_over_all_cuts():
    alpha = 1.5
    P = m.build_potential({"domain": [-2, 2], "atoms": [{"x": 0, "w": -alpha}]})
    u = hat()
    rep = m.potential_energy(P, u)
    assert rep.domain_membership == "converged"
    assert rep.Q == pytest.approx(-alpha * 1.0**2)
    # every partial window [-M, N) with M, N >= 1 already holds the atom
    for a, b, v in rep.potential_partial:
        if a <= -0.99 and b >= 0.99:
            assert v == pytest.approx(rep.Q)
    assert rep.form_value == pytest.approx(rep.kinetic + rep.Q)


def test_zero_function_zero_energy():
    P = m.build_potential({"domain": [-2, 2], "atoms": [{"x": 0, "w": -1}]})
    g = np.linspace(-1, 1, 11)
    rep = m.potential_energy(P, m.GridFunction(g, np.zeros(11)))
    assert rep.Q == 0.0
    assert rep.form_value == 0.0


def test_delta_eigenpair_energy_identity():
    # Q(u) = lam * ||u||^2 - ||u'||^2 for a computed eigenpair
    P = m.build_potential({"domain": [-20, 20], "atoms": [{"x": 0, "w": -1}]})
    lam = m.eigenvalue(P, (-20, 20), 0)
    u = m.eigenfunction(P, (-20, 20), 0, xs=np.linspace(-20, 20, 20001), lam=lam)
    rep = m.potential_energy(P, u)
    assert rep.domain_membership == "converged"
    assert rep.Q == pytest.approx(lam * 1.0 - rep.kinetic, abs=1e-6)


def test_growing_partials_flagged_diverged():
    P = m.build_potential({"domain": [-4, 4],
                           "density": [{"from": -4, "to": 4, "value": 10}]})
    g = np.linspace(-4, 4, 17)
    rep = m.potential_energy(P, m.GridFunction(g, np.ones(17)))
    assert rep.domain_membership == "diverged"
    assert rep.Q is None and rep.form_value is None


def test_alternating_partials_flagged_oscillating():
    segs = [{"from": float(k), "to": float(k + 1), "value": 40.0 * (-1) ** k}
            for k in range(-4, 4)]
    P = m.build_potential({"domain": [-4, 4], "density": segs})
    g = np.linspace(-4, 4, 17)
    rep = m.potential_energy(P, m.GridFunction(g, np.ones(17)))
    assert rep.domain_membership == "oscillating"


# ---------------------------------------------------------------------------
# bilinear form


def test_diagonal_matches_form_value():
    P = m.build_potential({"domain": [-2, 2], "atoms": [{"x": 0.2, "w": -0.8}]})
    u = hat()
    rep = m.potential_energy(P, u)
    t_uu = m.form_bilinear(P, u, u)
    assert complex(t_uu).imag == pytest.approx(0.0, abs=1e-12)
    assert t_uu == pytest.approx(rep.form_value, rel=1e-12)


def test_zero_measure_gives_pure_kinetic():
    P = m.build_potential({"domain": [-2, 2]})
    u = hat()
    assert m.form_bilinear(P, u, u) == pytest.approx(deriv_norm_sq(u))


def test_free_eigenpair_diagonal_is_the_level():
    P = m.build_potential({"domain": [0, math.pi]})
    u = m.eigenfunction(P, (0, math.pi), 0)
    assert m.form_bilinear(P, u, u) == pytest.approx(1.0, abs=1e-6)


def test_sesquilinear_symmetry_and_polarization():
    P = m.build_potential({"domain": [-2, 2], "atoms": [{"x": 0, "w": -1.5}]})
    rng = np.random.default_rng(8)
    g = np.linspace(-1.5, 1.5, 41)
    u = m.GridFunction(g, rng.normal(size=41) + 1j * rng.normal(size=41))
    v = m.GridFunction(g, rng.normal(size=41) + 1j * rng.normal(size=41))

    t = lambda a, b: m.form_bilinear(P, a, b)
    assert abs(t(u, v) - np.conj(t(v, u))) < 1e-10
    lhs = 4.0 * t(u, v)
    rhs = (t(u + v, u + v) - t(u - v, u - v)
           + 1j * t(u + 1j * v, u + 1j * v) - 1j * t(u - 1j * v, u - 1j * v))
    assert abs(lhs - rhs) <= 1e-9 * max(1.0, abs(lhs))


def test_bilinear_raises_on_divergence():
    P = m.build_potential({"domain": [-4, 4],
                           "density": [{"from": -4, "to": 4, "value": 10}]})
    g = np.linspace(-4, 4, 17)
    ones = m.GridFunction(g, np.ones(17))
    with pytest.raises(FormDivergenceError):
        m.form_bilinear(P, ones, ones)


def test_energy_scales_quadratically():
    P = random_br_potential(np.random.default_rng(4))
    u = random_grid_function(np.random.default_rng(5), P.domain, zero_ends=True)
    span = u.span
    base = stieltjes_abs2(P, u, span)
    for c in (2.0, -3.0, 1.5j):
        scaled = stieltjes_abs2(P, c * u, span)
        assert scaled == pytest.approx(abs(c) ** 2 * base, rel=1e-12, abs=1e-12)


# ---------------------------------------------------------------------------
# eigenpair identity residual


def test_rayleigh_residual_free():
    P = m.build_potential({"domain": [0, math.pi]})
    assert m.rayleigh_check(P, (0, math.pi), 0) < 1e-8


def test_rayleigh_residual_delta_well():
    P = m.build_potential({"domain": [-20, 20], "atoms": [{"x": 0, "w": -1}]})
    assert m.rayleigh_check(P, (-20, 20), 0) < 1e-6


# ---------------------------------------------------------------------------
# guaranteed lower bounds


def test_margin_formula_on_zero_measure():
    P = m.build_potential({"domain": [-2, 2]})
    u = hat()
    out = m.form_lower_bound_check(P, u, 0.5)
    # C = 2, h = 1/2: 2C/h = 8, (1 - C h) = 0
    expected = 8.0 * l2_norm_sq(u) + deriv_norm_sq(u)
    assert out.C == 2.0
    assert out.kinetic_margin == pytest.approx(expected)
    assert out.kinetic_margin >= 0.0 and out.potential_margin >= 0.0


def test_margins_nonnegative_randomized():
    rng = np.random.default_rng(77)
    for _ in range(200):
        P = random_br_potential(rng)
        lo, hi = P.x_lo, P.x_hi
        a = rng.uniform(lo, hi - 0.5)
        b = rng.uniform(a + 0.3, hi)
        u = random_grid_function(rng, Interval(a, b), zero_ends=True)
        h = float(rng.uniform(0.05, 1.0))
        out = m.form_lower_bound_check(P, u, h)
        scale = max(1.0, abs(out.kinetic_margin), abs(out.potential_margin))
        assert out.kinetic_margin >= -1e-10 * scale
        assert out.potential_margin >= -1e-10 * scale


def test_peaked_function_on_attractive_atom():
    P = m.build_potential({"domain": [-2, 2], "atoms": [{"x": 0, "w": -2}]})
    u = hat()
    out = m.form_lower_bound_check(P, u, 1.0)
    assert out.kinetic_margin >= -1e-10
    assert out.potential_margin >= -1e-10


def test_h_out_of_range():
    P = m.build_potential({"domain": [-2, 2]})
    with pytest.raises(ValueError):
        m.form_lower_bound_check(P, hat(), 1.5)


def test_unit_cell_positivity_randomized():
    # kinetic + 2C^2 mass + pairing >= 0 on every unit cell
    rng = np.random.default_rng(31)
    for _ in range(1000):
        P = random_br_potential(rng)
        C = m.brinck_constant(P).C
        lo, hi = P.x_lo, P.x_hi
        a = rng.uniform(lo, hi - 1.0)
        I = Interval(a, a + 1.0)
        u = random_grid_function(rng, I)
        kin = deriv_norm_sq(u, I)
        mass = l2_norm_sq(u, I)
        pair = stieltjes_abs2(P, u, I)
        margin = kin + 2.0 * C * C * mass + pair
        assert margin >= -1e-10 * max(1.0, kin, 2 * C * C * mass, abs(pair))


def test_diagonal_form_bound_randomized():
    # form value >= -2C^2 ||u||^2 for compactly supported samples
    rng = np.random.default_rng(32)
    for _ in range(1000):
        P = random_br_potential(rng)
        C = m.brinck_constant(P).C
        lo, hi = P.x_lo, P.x_hi
        a = rng.uniform(lo, hi - 0.5)
        b = rng.uniform(a + 0.3, hi)
        u = random_grid_function(rng, Interval(a, b), zero_ends=True)
        form_value = deriv_norm_sq(u) + stieltjes_abs2(P, u, u.span)
        floor = -2.0 * C * C * l2_norm_sq(u)
        assert form_value >= floor - 1e-9 * max(1.0, abs(floor))
