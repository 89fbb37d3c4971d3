"""Coarse-graining of scalar walks on the infinite dihedral group.

A scalar walk on G = H u Hr with H = <a> is unitarily equivalent to a
spinorial walk on Z: group the vertices into coset pairs {x c1, x c2} and let
the coset label act as a two-dimensional coin.  Concretely, with U_H mapping
|x c_j> to |x>|j>, each generator h contributes z_h to the matrix entry
(tau(h, j), j) of the coarse-grained coefficient at c_tau(h,j) h c_j^-1 in H,
where tau(h, j) is the coset reached from c_j by right-dividing h.

The construction requires every coarse-grained generator to land in
{e, a, a^-1} (coordination number two on the line); a source generator a^l
with |l| >= 2 therefore makes the walk ineligible.  Zero coefficient matrices
are kept so the result always carries the uniform {+1, -1, 0} layout.

The transformation is pure: inputs are never mutated and results are
immutable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .groups import (
    DIHEDRAL_INF,
    CosetTiling,
    GroupFamily,
    build_cayley_graph,
    compose,
    default_tiling,
)
from .walk import (
    LatticeLayout,
    LatticeState,
    QuantumWalk,
    WalkError,
    evolve,
    random_state,
)


class CoarseGrainError(WalkError):
    """The walk is not eligible for index-2 coarse-graining."""


_CG_LABELS = {1: "a", -1: "a_inv", 0: "e"}


@dataclass(frozen=True, eq=False)
class CoarseGraining:
    """Result bundle: source walk, tiling, tau table and the walk on Z.

    ``tau`` maps (generator label, coset index) to the destination coset
    index; for an index-2 tiling each tau(h, .) is a bijection on {0, 1}.
    """

    source: QuantumWalk
    tiling: CosetTiling
    tau: dict[tuple[str, int], int]
    result: QuantumWalk


def coarse_grain(walk: QuantumWalk, tiling: Optional[CosetTiling] = None) -> CoarseGraining:
    """Coarse-grain a scalar walk on an infinite dihedral Cayley graph.

    Returns a spinorial walk on Z whose basis is the coset pair, first
    representative mapped to (1, 0) and second to (0, 1).
    """
    family = walk.graph.family
    if family.kind != DIHEDRAL_INF:
        raise CoarseGrainError(
            f"coarse-graining is defined for infinite dihedral walks, got {family.tag()}"
        )
    if not walk.is_scalar:
        raise CoarseGrainError("coarse-graining applies to scalar walks")
    if tiling is None:
        tiling = default_tiling(family)
    if tiling.family != family:
        raise CoarseGrainError("tiling family does not match the walk")

    mats = {m: np.zeros((2, 2), dtype=complex) for m in (1, -1, 0)}
    tau: dict[tuple[str, int], int] = {}
    for label, h, mat in walk.items():
        z = mat[0, 0]
        for j in (0, 1):
            j_dst = tiling.coset_index(compose(tiling.reps[j], h.inverse()))
            tau[(label, j)] = j_dst
            moved = compose(compose(tiling.reps[j_dst], h), tiling.reps[j].inverse())
            if moved.reflection_bit != 0:
                raise CoarseGrainError("internal error: coarse-grained move left H")
            # the coset delta determined by tau must agree with the element
            # delta in the Kronecker pair; both are checked explicitly
            in_h = [i for i in (0, 1)
                    if compose(compose(tiling.reps[i], h), tiling.reps[j].inverse()).reflection_bit == 0]
            if in_h != [j_dst]:
                raise CoarseGrainError("tau index disagrees with the subgroup condition")
            step = moved.payload[0]
            if step not in (1, -1, 0):
                raise CoarseGrainError(
                    f"generator {label!r} coarse-grains to a^{step}; "
                    "coordination number would exceed two"
                )
            mats[step][j_dst, j] += z

    graph = build_cayley_graph(
        GroupFamily.free_abelian(1),
        [(_CG_LABELS[m], (m,)) for m in (1, -1, 0)],
    )
    result = QuantumWalk(
        graph,
        2,
        {_CG_LABELS[m]: mats[m] for m in (1, -1, 0)},
        allow_zero=True,
        verified=walk.verified,
    )
    return CoarseGraining(source=walk, tiling=tiling, tau=tau, result=result)


@dataclass(frozen=True, eq=False)
class EquivalenceReport:
    max_deviation: float
    tol: float
    steps: int
    n_states: int

    @property
    def ok(self) -> bool:
        return self.max_deviation <= self.tol

    def __bool__(self) -> bool:
        return self.ok


def verify_equivalence(
    cg: CoarseGraining,
    steps: int = 20,
    n_states: int = 10,
    n_sites: int = 0,
    tol: float = 1e-12,
    seed: int = 0,
) -> EquivalenceReport:
    """Evolve source and coarse-grained walks from matched initial states.

    The dihedral lattice stores amplitudes as (site, coset bit) pairs and the
    coarse-grained lattice as (site, coin component), so a matched pair is
    literally the same array; the report carries the max amplitude deviation
    seen at any step.
    """
    if not n_sites:
        n_sites = 2 * steps + 9
    rng = np.random.default_rng(seed)
    worst = 0.0
    cg_layout = LatticeLayout(cg.result.graph, n_sites)
    for _ in range(n_states):
        src = random_state(cg.source, n_sites, rng, width=5, tiling=cg.tiling)
        dst = LatticeState(cg_layout, src.data.reshape(n_sites, 2).copy())
        for _ in range(steps):
            src = evolve(cg.source, src, 1, allow_wrap=True)
            dst = evolve(cg.result, dst, 1, allow_wrap=True)
            dev = float(np.max(np.abs(src.data.reshape(n_sites, 2) - dst.data.reshape(n_sites, 2))))
            worst = max(worst, dev)
    return EquivalenceReport(max_deviation=worst, tol=tol, steps=steps, n_states=n_states)
