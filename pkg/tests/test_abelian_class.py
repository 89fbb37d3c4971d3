import cmath
import math

import numpy as np
import pytest

from cayleyqw import (
    ClassifyStatus,
    GroupElement,
    GroupError,
    GroupFamily,
    brute_force_scalar_solutions,
    build_cayley_graph,
    character_decompose,
    check_quadrangularity,
    check_unitarity,
    classify,
    delta_state,
    evolve,
    scalar_walk,
)
from cayleyqw.abelian_class import gauge_fix, polish_solution, solution_walk
from cayleyqw.dihedral import make_dihedral_graph, transition_scalars
from cayleyqw.walk import LatticeLayout, LatticeState

from conftest import random_dihedral_params

Z1 = GroupFamily.free_abelian(1)
Z2 = GroupFamily.free_abelian(2)


def line_graph(gens=((1,), (-1,))):
    return build_cayley_graph(Z1, [(f"g{i}", v) for i, v in enumerate(gens)])


def square_graph():
    return build_cayley_graph(
        GroupFamily.abelian((2, 2), 0), [("g1", (1, 0)), ("g2", (0, 1))]
    )


# --- character decomposition -----------------------------------------------------

def test_pure_free_group_has_single_block():
    graph = build_cayley_graph(Z2, [("x", (1, 0)), ("y", (0, 1))])
    walk = scalar_walk(graph, {"x": 0.6, "y": 0.8j})
    blocks = character_decompose(walk)
    assert len(blocks) == 1
    assert blocks[0].scalars == {(1, 0): 0.6, (0, 1): 0.8j}


def test_torsion_blocks_are_character_sums():
    fam = GroupFamily.abelian((2,), 1)
    graph = build_cayley_graph(fam, [("g1", (0, 1)), ("g2", (1, 1))])
    u, v = 1 / math.sqrt(2), 1j / math.sqrt(2)
    walk = scalar_walk(graph, {"g1": u, "g2": v})
    blocks = character_decompose(walk)
    assert [b.index for b in blocks] == [(1,), (2,)]
    # oracle: direct character sum exp(2 pi i j m / 2) over the residues
    for block in blocks:
        j = block.index[0]
        expect = u + v * cmath.exp(2j * math.pi * j * 1 / 2)
        assert block.scalars[(1,)] == pytest.approx(expect)
    assert blocks[0].scalars[(1,)] == pytest.approx((1 - 1j) / math.sqrt(2))
    assert blocks[1].scalars[(1,)] == pytest.approx((1 + 1j) / math.sqrt(2))


def test_vanishing_combination_absent_from_block():
    fam = GroupFamily.abelian((2,), 1)
    graph = build_cayley_graph(fam, [("g1", (0, 1)), ("g2", (1, 1))])
    walk = scalar_walk(graph, {"g1": 0.5, "g2": 0.5})  # not unitary, fine here
    blocks = character_decompose(walk)
    assert (1,) not in blocks[0].scalars or blocks[0].index == (1,)
    # j = 1 block: 0.5 + 0.5 e^{i pi} = 0 -> displacement dropped
    assert blocks[0].scalars == {}
    assert blocks[1].scalars[(1,)] == pytest.approx(1.0)


def test_character_decompose_rejects_dihedral():
    graph = make_dihedral_graph()
    walk = scalar_walk(graph, dict.fromkeys(graph.labels, 0.5), allow_zero=True)
    with pytest.raises(GroupError):
        character_decompose(walk)


# --- classification -----------------------------------------------------------------

def test_monoidal_walk_classifies():
    graph = build_cayley_graph(Z1, [("g0", (1,))])
    walk = scalar_walk(graph, {"g0": cmath.exp(-0.7j)})
    result = classify(walk)
    assert result.ok
    ((block),) = result.blocks
    assert block.survivor == (1,)
    assert block.phase == pytest.approx(0.7)


def test_torsion_walk_classifies_to_shifts():
    fam = GroupFamily.abelian((2,), 1)
    graph = build_cayley_graph(fam, [("g1", (0, 1)), ("g2", (1, 1))])
    walk = scalar_walk(graph, {"g1": 1 / math.sqrt(2), "g2": 1j / math.sqrt(2)})
    result = classify(walk)
    assert result.ok
    assert [b.survivor for b in result.blocks] == [(1,), (1,)]
    assert result.blocks[0].phase == pytest.approx(math.pi / 4)
    assert result.blocks[1].phase == pytest.approx(-math.pi / 4)


def test_finite_group_rejected():
    walk = scalar_walk(
        square_graph(), {"g1": 1 / math.sqrt(2), "g2": 1j / math.sqrt(2)}
    )
    with pytest.raises(GroupError, match="free rank"):
        classify(walk)


def test_non_unitary_reported():
    walk = scalar_walk(line_graph(), {"g0": 0.7, "g1": 0.7})
    result = classify(walk)
    assert result.status is ClassifyStatus.NOT_UNITARY


def test_classification_reproduces_evolution(rng):
    # block states are character vectors times position states; the walk must
    # act on them as the surviving shift times the phase
    fam = GroupFamily.abelian((2,), 1)
    graph = build_cayley_graph(fam, [("g1", (0, 1)), ("g2", (1, 1))])
    walk = scalar_walk(graph, {"g1": 1 / math.sqrt(2), "g2": 1j / math.sqrt(2)})
    result = classify(walk)
    n = 12
    layout = LatticeLayout(graph, n)
    for block in result.blocks:
        j = block.index[0]
        xi = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        data = np.zeros((2, n, 1), dtype=complex)
        for res in range(2):
            data[res, :, 0] = cmath.exp(2j * math.pi * j * res / 2) * xi
        state = LatticeState(layout, data / np.linalg.norm(data))
        out = evolve(walk, state, 1, allow_wrap=True)
        shift = block.survivor[0]
        expect = cmath.exp(-1j * block.phase) * np.roll(state.data, -shift, axis=1)
        assert np.max(np.abs(out.data - expect)) < 1e-12


def test_classified_dispersion_is_affine(rng):
    fam = GroupFamily.abelian((2,), 1)
    graph = build_cayley_graph(fam, [("g1", (0, 1)), ("g2", (1, 1))])
    walk = scalar_walk(graph, {"g1": 1 / math.sqrt(2), "g2": 1j / math.sqrt(2)})
    result = classify(walk)
    for block in result.blocks:
        h = block.survivor[0]
        for k in rng.uniform(-math.pi, math.pi, size=16):
            a_k = sum(z * cmath.exp(-1j * k * hv[0]) for hv, z in block.scalars.items())
            expect = cmath.exp(-1j * (k * h + block.phase))
            assert abs(a_k - expect) < 1e-9


# --- brute-force solver -----------------------------------------------------------------

def test_line_solver_finds_only_monoidal():
    sols = brute_force_scalar_solutions(line_graph(), n_starts=48, seed=3)
    assert sols
    assert all(s.is_monoidal() for s in sols)
    assert all(s.residual <= 1e-10 for s in sols)


def test_line_solver_three_generators():
    graph = line_graph(((1,), (-1,), (2,)))
    sols = brute_force_scalar_solutions(graph, n_starts=48, seed=4)
    assert sols
    assert all(s.is_monoidal() for s in sols)


def test_square_solver_finds_nontrivial():
    sols = brute_force_scalar_solutions(square_graph(), n_starts=48, seed=5)
    nontrivial = [s for s in sols if not s.is_monoidal()]
    assert nontrivial
    assert all(s.residual <= 1e-10 for s in sols)
    # the known closed-form point is itself a solution of the system
    known = polish_solution(
        square_graph(), {"g1": 1 / math.sqrt(2), "g2": 1j / math.sqrt(2)}
    )
    assert known.residual <= 1e-12


def test_solver_solutions_pass_check_unitarity():
    for sol in brute_force_scalar_solutions(square_graph(), n_starts=24, seed=6):
        assert check_unitarity(solution_walk(square_graph(), sol)).ok


def test_dihedral_solver_rediscovers_families(rng):
    graph = make_dihedral_graph(with_d=True, with_e=True)
    for target_seed in range(3):
        local = np.random.default_rng(target_seed)
        params = random_dihedral_params(local, "generic")
        target = transition_scalars(params)
        refined = polish_solution(graph, target, perturbation=1e-3, seed=target_seed)
        assert refined.residual <= 1e-10
        fixed_t = gauge_fix([target[lab] for lab in graph.labels])
        fixed_r = gauge_fix([refined.scalars[lab] for lab in graph.labels])
        assert np.max(np.abs(fixed_t - fixed_r)) < 1e-2


def test_dihedral_solver_output_classifies_into_families(rng):
    from cayleyqw.dihedral import NotInClassError, recover_dihedral_params

    graph = make_dihedral_graph(with_d=True, with_e=True)
    sols = brute_force_scalar_solutions(graph, n_starts=40, seed=11)
    assert sols
    matched = 0
    for sol in sols:
        assert sol.residual <= 1e-10
        try:
            params = recover_dihedral_params(sol.scalars, zero_tol=1e-5)
        except NotInClassError:
            # boundary / monoidal-support hit
            continue
        regen = transition_scalars(params)
        for lab in graph.labels:
            assert regen[lab] == pytest.approx(sol.scalars[lab], abs=1e-6)
        matched += 1
    assert matched > 0


def test_quadrangularity_failure_means_no_full_support():
    # random generating sets violating the pair condition admit only
    # solutions with at least one vanishing amplitude
    for gens in [((1,), (-1,)), ((1,), (2,)), ((1,), (-1,), (3,))]:
        graph = line_graph(gens)
        assert not check_quadrangularity(graph).passed
        for sol in brute_force_scalar_solutions(graph, n_starts=32, seed=8):
            assert len(sol.support()) < len(graph)


def test_solver_size_guard():
    graph = make_dihedral_graph(with_d=True, with_e=True)
    big = build_cayley_graph(
        GroupFamily.free_abelian(1),
        [(f"g{i}", (i + 1,)) for i in range(7)],
    )
    with pytest.raises(GroupError, match="small"):
        brute_force_scalar_solutions(big, n_starts=1)
