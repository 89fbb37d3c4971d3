"""Discrete-time quantum walks on Cayley graphs of finitely generated groups.

Exact group arithmetic and Cayley graph construction, walk unitarity
verification, lattice evolution, momentum-space dispersion analysis,
coarse-graining of dihedral scalar walks to spinorial walks on the line, the
triviality classification of infinite Abelian scalar walks, and the
parametric dihedral solution families with their parity characterization.
"""

from .abelian_class import (
    CharacterBlock,
    ClassificationResult,
    ClassifyStatus,
    ScalarSolution,
    brute_force_scalar_solutions,
    character_decompose,
    classify,
)
from .coarse_grain import CoarseGrainError, CoarseGraining, coarse_grain, verify_equivalence
from .dihedral import (
    CanonicalForm,
    DihedralParams,
    NotInClassError,
    ParityCertificate,
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
from .groups import (
    CayleyGraph,
    CosetTiling,
    GroupElement,
    GroupError,
    GroupFamily,
    build_cayley_graph,
    compose,
    default_tiling,
    element_from_word,
    format_presentation,
    identity,
    inverse,
    parse_family,
    parse_presentation,
)
from .momentum import (
    DispersionData,
    MomentumError,
    MomentumWalk,
    brillouin_grid,
    diffusion_coefficient,
    dispersion,
    group_velocity,
    make_dirac,
    make_hadamard,
    make_parity_walk,
    make_weyl,
    su2_normalize,
    to_momentum,
    unitarity_residual,
)
from .specfile import (
    SpecFormatError,
    WalkSpecFile,
    format_walk_spec,
    load_walk_spec,
    parse_walk_spec,
    save_walk_spec,
)
from .walk import (
    LatticeLayout,
    LatticeState,
    QuantumWalk,
    QuadrangularityResult,
    UnitarityReport,
    WalkError,
    check_quadrangularity,
    check_unitarity,
    delta_state,
    evolve,
    position_distribution,
    random_state,
    scalar_walk,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
