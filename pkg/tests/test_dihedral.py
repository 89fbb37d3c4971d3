import math

import numpy as np
import pytest

from cayleyqw import (
    GroupFamily,
    WalkError,
    build_cayley_graph,
    check_quadrangularity,
    check_unitarity,
    coarse_grain,
    make_dirac,
    make_hadamard,
    make_parity_walk,
    make_weyl,
    to_momentum,
)
from cayleyqw.dihedral import (
    DihedralParams,
    NotInClassError,
    dispersion_params,
    enumerate_admissible_graphs,
    extract_canonical_form,
    instantiate_finite_dihedral,
    make_dihedral_graph,
    make_dihedral_walk,
    parity_test,
    recover_dihedral_params,
    transition_scalars,
)
from cayleyqw.momentum import SIGMA_X, brillouin_grid, dispersion, su2_normalize
from cayleyqw.walk import QuantumWalk

from conftest import parity_class_coefficients, parity_class_walk, random_dihedral_params

D_INF = GroupFamily.infinite_dihedral()


# --- parameter validation ------------------------------------------------------

def test_case_constraints_enforced():
    with pytest.raises(WalkError, match="s2"):
        DihedralParams("ze_zero", 0.4, 0.4, 0.5, 1, -1, 1)
    with pytest.raises(WalkError, match="s2"):
        DihedralParams("zd_zero", 0.4, 0.6, 0.5, 1, 1, 1)
    with pytest.raises(WalkError, match="p > q"):
        DihedralParams.generic(0.2, 0.8, 0.5, s2=1)
    with pytest.raises(WalkError, match="p \\+ q < 1"):
        DihedralParams.generic(0.7, 0.6, 0.5, s2=-1)
    with pytest.raises(WalkError, match="strictly inside"):
        DihedralParams.mu_zero(0.0, 0.5)
    with pytest.raises(WalkError, match="strictly inside"):
        DihedralParams.generic(0.8, 0.2, 1.0)
    with pytest.raises(WalkError, match="mu = 0"):
        DihedralParams("mu_zero", 0.5, 0.5, 0.3)


def test_rotation_case_scalar_values():
    z = transition_scalars(DihedralParams.mu_zero(0.5, 0.5))
    assert z["a"] == pytest.approx(0.5)
    assert z["a_inv"] == pytest.approx(0.5)
    assert z["b"] == pytest.approx(0.5j)
    assert z["c"] == pytest.approx(-0.5j)
    assert z["d"] == 0 and z["e"] == 0


def test_generic_case_all_six_nonzero():
    walk = make_dihedral_walk(DihedralParams.generic(0.8, 0.2, 0.5))
    assert walk.graph.labels == ("a", "a_inv", "b", "c", "d", "e")
    assert all(abs(walk.scalar(lab)) > 0 for lab in walk.graph.labels)
    assert check_unitarity(walk, 1e-12).ok


@pytest.mark.parametrize("case", ["mu_zero", "ze_zero", "zd_zero", "generic"])
def test_families_unitary_over_random_draws(case, rng):
    for _ in range(25):
        walk = make_dihedral_walk(random_dihedral_params(rng, case))
        assert check_unitarity(walk, 1e-12).ok


def test_families_unitary_near_boundaries():
    eps = 1e-6
    for params in [
        DihedralParams.mu_zero(eps, 1 - eps),
        DihedralParams.ze_zero(1 - eps, eps),
        DihedralParams.zd_zero(eps, 1 - eps),
        DihedralParams.generic(1 - eps, eps, 1 - eps),
        DihedralParams.generic(eps, eps / 2, eps, s2=-1),
    ]:
        assert check_unitarity(make_dihedral_walk(params), 1e-12).ok


# --- enumeration ------------------------------------------------------------------

def test_enumeration_returns_the_four_graphs():
    graphs = enumerate_admissible_graphs(2)
    assert [g.labels for g in graphs] == [
        ("a", "a_inv", "b", "c"),
        ("a", "a_inv", "b", "c", "d"),
        ("a", "a_inv", "b", "c", "e"),
        ("a", "a_inv", "b", "c", "d", "e"),
    ]


def test_enumeration_invariant_under_window_translation():
    assert [g.labels for g in enumerate_admissible_graphs(3)] == [
        g.labels for g in enumerate_admissible_graphs(2)
    ]


def test_pure_reflection_window_rejected():
    graph = build_cayley_graph(
        D_INF, [("e", (0, 0))] + [(f"h{i}", (3 + i, 1)) for i in (-1, 0, 1)]
    )
    assert not check_quadrangularity(graph).passed
    labels = {g.labels for g in enumerate_admissible_graphs(4)}
    assert all("a" in labs and "a_inv" in labs for labs in labels)


# --- finite dihedral ---------------------------------------------------------------

def test_finite_instantiation_unitary():
    walk = instantiate_finite_dihedral(DihedralParams.mu_zero(0.5, 0.5), 4)
    assert walk.graph.family == GroupFamily.finite_dihedral(4)
    assert check_unitarity(walk, 1e-12).ok
    walk = instantiate_finite_dihedral(DihedralParams.generic(0.8, 0.2, 0.5), 4)
    assert check_unitarity(walk, 1e-12).ok


def test_finite_instantiation_needs_n_at_least_four():
    with pytest.raises(WalkError, match="n >= 4"):
        instantiate_finite_dihedral(DihedralParams.mu_zero(0.5, 0.5), 3)


def test_finite_evolution_is_unitary_and_matches_oracle(rng):
    from cayleyqw import evolve, random_state
    from conftest import dense_step_matrix

    walk = instantiate_finite_dihedral(DihedralParams.generic(0.8, 0.2, 0.5), 5)
    oracle = dense_step_matrix(walk, 5)
    assert np.max(np.abs(oracle @ oracle.conj().T - np.eye(10))) < 1e-12
    state = random_state(walk, 5, rng)
    out = evolve(walk, state, 7)
    expect = np.linalg.matrix_power(oracle, 7) @ state.data.reshape(-1)
    assert np.max(np.abs(out.data.reshape(-1) - expect)) < 1e-13
    assert abs(out.norm - 1.0) < 1e-12


# --- parity -----------------------------------------------------------------------

def test_rotated_mass_walk_has_sigma_x_parity(rng):
    phi = 0.7
    rot = math.cos(phi) * np.eye(2) + 1j * math.sin(phi) * SIGMA_X
    nu, mu = 0.8, 0.6
    mats = {
        "+1": rot @ np.diag([nu, 0.0]).astype(complex),
        "-1": rot @ np.diag([0.0, nu]).astype(complex),
        "e": rot @ (1j * mu * SIGMA_X),
    }
    graph = build_cayley_graph(
        GroupFamily.free_abelian(1), [("+1", (1,)), ("-1", (-1,)), ("e", (0,))]
    )
    walk = QuantumWalk(graph, 2, mats, allow_zero=True)
    cert = parity_test(walk)
    assert cert.found
    assert cert.residual <= 1e-12
    assert np.allclose(cert.matrix, SIGMA_X) or np.allclose(cert.matrix, -SIGMA_X)


def test_weyl_is_parity_invariant():
    cert = parity_test(make_weyl())
    assert cert.found
    assert dispersion_params(make_weyl()) == pytest.approx((1.0, 0.0))
    form = extract_canonical_form(make_weyl())
    assert form.in_class
    assert form.mu == pytest.approx(0.0, abs=1e-12)


def test_hadamard_fails_parity_and_class():
    hadamard = make_hadamard()
    assert not parity_test(hadamard).found
    assert not extract_canonical_form(hadamard).in_class
    with pytest.raises(NotInClassError):
        dispersion_params(hadamard)


def test_parity_certificate_matrix_is_involutive(rng):
    cert = parity_test(parity_class_walk(rng))
    assert cert.found
    p = cert.matrix
    assert np.allclose(p, p.conj().T, atol=1e-12)
    assert np.allclose(p @ p, np.eye(2), atol=1e-12)
    assert abs(np.trace(p)) < 1e-10  # excluded the identity direction


# --- canonical form ------------------------------------------------------------------

def test_dirac_walk_has_zero_angles():
    form = extract_canonical_form(make_dirac(0.8, 0.6, +1))
    assert form.in_class
    assert form.theta == pytest.approx(0.0, abs=1e-12)
    assert form.theta_prime == pytest.approx(0.0, abs=1e-12)
    assert form.nu == pytest.approx(0.8)
    assert form.dihedral_params() is None  # boundary of the open families


@pytest.mark.parametrize("case", ["mu_zero", "ze_zero", "zd_zero", "generic"])
def test_round_trip_through_coarse_graining(case, rng):
    for _ in range(10):
        params = random_dihedral_params(rng, case)
        plain = DihedralParams(
            params.case, params.p, params.q, params.mu,
            params.s1, params.s2, params.s3, 0.0,
        )
        cg = coarse_grain(make_dihedral_walk(plain)).result
        form = extract_canonical_form(cg)
        assert form.in_class and form.residual <= 1e-9
        got = form.dihedral_params()
        assert got is not None
        assert got.case == plain.case
        assert got.p == pytest.approx(plain.p, abs=1e-9)
        assert got.q == pytest.approx(plain.q, abs=1e-9)
        assert got.mu == pytest.approx(plain.mu, abs=1e-9)
        assert (got.s1, got.s2, got.s3) == (plain.s1, plain.s2, plain.s3)


def test_random_conjugated_class_walks_accepted(rng):
    for _ in range(15):
        walk = parity_class_walk(rng)
        form = extract_canonical_form(walk)
        assert form.in_class
        assert form.residual <= 1e-9
        # reconstruction reproduces the coefficients in the original basis
        mw = to_momentum(walk)
        normed, phase = su2_normalize(mw)
        plus, minus, stay = form.coefficients()
        assert np.max(np.abs(plus - normed.coefficient(1))) <= 1e-9
        assert np.max(np.abs(minus - normed.coefficient(-1))) <= 1e-9
        assert np.max(np.abs(stay - normed.coefficient(0))) <= 1e-9


def test_class_equality_both_inclusions(rng):
    # coarse-grained family walks are parity invariant, and parity-class
    # walks extract to the canonical form
    for _ in range(10):
        cg = coarse_grain(make_dihedral_walk(random_dihedral_params(rng))).result
        assert parity_test(cg).found
    for _ in range(10):
        assert extract_canonical_form(parity_class_walk(rng)).in_class


# --- dispersion parameters ------------------------------------------------------------

def test_dirac_dispersion_params():
    delta, gamma = dispersion_params(make_dirac(0.8, 0.6, +1))
    assert delta == pytest.approx(0.8)
    assert gamma == pytest.approx(0.0, abs=1e-12)


def test_global_phase_does_not_move_dispersion_params():
    plain = DihedralParams.generic(0.8, 0.2, 0.5)
    rotated = DihedralParams.generic(0.8, 0.2, 0.5, theta=1.1)
    a = dispersion_params(coarse_grain(make_dihedral_walk(plain)).result)
    b = dispersion_params(coarse_grain(make_dihedral_walk(rotated)).result)
    assert a == pytest.approx(b, abs=1e-12)


def test_generic_dispersion_params_match_eigenphases(rng):
    params = DihedralParams.generic(0.8, 0.2, 0.5)
    cg = coarse_grain(make_dihedral_walk(params)).result
    delta, gamma = dispersion_params(cg)
    nu = params.nu
    expect_delta = nu * (math.sqrt(0.8 * 0.2) + math.sqrt(0.2 * 0.8))
    expect_gamma = -0.5 * params.alpha
    assert delta == pytest.approx(expect_delta, abs=1e-12)
    assert gamma == pytest.approx(expect_gamma, abs=1e-12)
    normed, _ = su2_normalize(to_momentum(cg))
    data = dispersion(normed, samples=257)
    closed = np.arccos(np.clip(delta * np.cos(data.ks) + gamma, -1, 1))
    assert np.max(np.abs(data.branches[:, 0] - closed)) < 1e-9


def test_dispersion_constraint_and_minimum(rng):
    for _ in range(10):
        cg = coarse_grain(make_dihedral_walk(random_dihedral_params(rng))).result
        delta, gamma = dispersion_params(cg)
        assert abs(delta + gamma) <= 1.0 + 1e-12
        assert abs(delta - gamma) <= 1.0 + 1e-12
        if delta < 0:
            # the representative with delta >= 0 differs by the leftover sign
            delta, gamma = -delta, -gamma
        ks = brillouin_grid(257)
        omega = np.arccos(np.clip(delta * np.cos(ks) + gamma, -1, 1))
        k0 = np.argmin(np.abs(ks))
        assert omega[k0] <= omega.min() + 1e-12


# --- parameter recovery from raw amplitudes ---------------------------------------------

@pytest.mark.parametrize("case", ["mu_zero", "ze_zero", "zd_zero", "generic"])
def test_recover_params_from_scalars(case, rng):
    for _ in range(10):
        params = random_dihedral_params(rng, case)
        z = transition_scalars(params)
        got = recover_dihedral_params(z)
        regen = transition_scalars(got)
        for lab in z:
            assert regen[lab] == pytest.approx(z[lab], abs=1e-9)


def test_recover_rejects_monoidal():
    with pytest.raises(NotInClassError):
        recover_dihedral_params({"b": 1.0})
