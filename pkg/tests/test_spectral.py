import math

import numpy as np
import pytest

import measpec as m
from measpec.measure import l2_norm_sq

from oracles import fd_lowest_eigenvalues, kronig_penney_states_per_length


PI = math.pi


def free_pi():
    return m.build_potential({"domain": [0.0, PI]})


def delta_well():
    return m.build_potential({"domain": [-20, 20], "atoms": [{"x": 0, "w": -1}]})


# ---------------------------------------------------------------------------
# counting


def test_count_free_interior():
    assert m.count_below(free_pi(), (0, PI), 5.0) == 2  # levels 1 and 4


def test_count_excludes_boundary_eigenvalue():
    assert m.count_below(free_pi(), (0, PI), 1.0) == 0


def test_count_single_bound_state():
    P = delta_well()
    assert m.count_below(P, (-20, 20), 0.0) == 1
    fd = fd_lowest_eigenvalues(P, -20, 20, 2, 40001)
    assert int(np.sum(fd < 0.0)) == 1


def test_counting_consistency_around_levels():
    P = free_pi()
    tol_lambda = 1e-8
    for k in (0, 2, 5):
        lam = m.eigenvalue(P, (0, PI), k, tol_lambda)
        eps = 10 * tol_lambda
        assert m.count_below(P, (0, PI), lam - eps) == k
        assert m.count_below(P, (0, PI), lam + eps) == k + 1


# ---------------------------------------------------------------------------
# eigenvalues


def test_free_spectrum_squares():
    P = free_pi()
    for k in range(4):
        assert m.eigenvalue(P, (0, PI), k) == pytest.approx((k + 1) ** 2, abs=1e-8)


def test_delta_well_ground_state():
    lam = m.eigenvalue(delta_well(), (-20, 20), 0)
    assert lam == pytest.approx(-0.25, abs=1e-6)


def test_negative_k_rejected():
    with pytest.raises(ValueError):
        m.eigenvalue(free_pi(), (0, PI), -1)


def test_fd_oracle_equivalence_random_atoms():
    # five lowest levels vs the dense finite-difference matrix, atoms on its grid
    n_grid = 20001
    a, b = -5.0, 5.0
    x = np.linspace(a, b, n_grid)
    rng = np.random.default_rng(123)
    for _ in range(50):
        n_atoms = int(rng.integers(1, 5))
        idx = np.sort(rng.choice(np.arange(2000, n_grid - 2000), n_atoms, replace=False))
        pos = x[idx]
        keep = np.concatenate(([True], np.diff(pos) > 1e-6))
        pos = pos[keep]
        w = rng.uniform(-2.0, 3.0, pos.size)
        w[np.abs(w) < 1e-3] = 1.0
        P = m.BVPotential(np.array([a, b]), np.array([0.0]), pos, w)
        fd = fd_lowest_eigenvalues(P, a, b, 5, n_grid)
        for k in range(5):
            lam = m.eigenvalue(P, (a, b), k, 1e-9, 1e-11)
            assert lam == pytest.approx(fd[k], abs=1e-4)


# ---------------------------------------------------------------------------
# eigenfunctions


def test_free_ground_eigenfunction_matches_sine():
    u = m.eigenfunction(free_pi(), (0, PI), 0)
    exact = math.sqrt(2 / PI) * np.sin(u.grid)
    sign = np.sign(u.values[len(u.values) // 2]) or 1.0
    assert np.max(np.abs(sign * u.values - exact)) < 1e-6


def test_eigenfunction_contracts():
    for k in (0, 3):
        u = m.eigenfunction(free_pi(), (0, PI), k)
        assert abs(u.values[0]) < 1e-6 and abs(u.values[-1]) < 1e-6
        assert l2_norm_sq(u) == pytest.approx(1.0, abs=1e-8)


def test_delta_well_eigenfunction_even_with_kink():
    xs = np.linspace(-20, 20, 8001)
    u = m.eigenfunction(delta_well(), (-20, 20), 0, xs=xs)
    g, v = u.grid, u.values
    i0 = int(np.searchsorted(g, 0.0))
    v = v * np.sign(v[i0])
    assert np.max(np.abs(v - v[::-1])) < 1e-6          # even
    sl_r = (v[i0 + 1] - v[i0]) / (g[i0 + 1] - g[i0])
    sl_l = (v[i0] - v[i0 - 1]) / (g[i0] - g[i0 - 1])
    # chord slopes approximate the one-sided derivatives to O(h)
    assert sl_r - sl_l == pytest.approx(-v[i0], abs=5e-3)
    assert l2_norm_sq(u) == pytest.approx(1.0, abs=1e-8)


# ---------------------------------------------------------------------------
# truncation sweeps


def test_free_scan_grows_like_weyl():
    P = m.build_potential({"domain": [-40, 40]})
    rep = m.spectrum_scan(P, [10, 20, 40], k_max=1, E_ref=1.0)
    for L in rep.L_values:
        weyl = 2 * L * math.sqrt(1.0) / PI
        assert rep.counts[L] == pytest.approx(weyl, abs=1.5)
    assert rep.count_verdict == "essential_evidence"
    assert rep.monotone_ok
    assert rep.lower_bound_check["ok"]


def test_domain_monotonicity_delta_well():
    rep = m.spectrum_scan(delta_well(), [5, 10, 20], k_max=2, E_ref=0.5)
    for k, seq in rep.convergence.items():
        assert all(seq[i + 1] <= seq[i] + 1e-7 for i in range(len(seq) - 1))
    assert rep.lower_bound_check["min_eigenvalue"] == pytest.approx(-0.25, abs=1e-4)


def test_periodic_comb_density_matches_band_oracle():
    E_ref = 4.0
    P = m.build_potential({"domain": [0, 80],
                           "generator": {"name": "periodic_comb",
                                         "params": {"period": 1.0, "weight": 1.0,
                                                    "phase": 0.5}}})
    rep = m.spectrum_scan(P, [40, 80], k_max=0, E_ref=E_ref)
    ids = kronig_penney_states_per_length(E_ref, 1.0)
    for L in rep.L_values:
        assert rep.counts[L] / L == pytest.approx(ids, rel=0.10)
    assert rep.count_verdict == "essential_evidence"


def test_scan_validation():
    with pytest.raises(ValueError):
        m.spectrum_scan(free_pi(), [], 1, 1.0)
