"""Classification of scalar walks on infinite Abelian groups.

Writing the position group as F x Z^d with F a product of finite cyclic
factors, the characters of F block-diagonalize any scalar walk: block j
carries the effective scalars z_h(j) = sum_f z_(f,h) chi_j(f) over the free
displacements h.  Within each block the walk is a scalar walk on Z^d, and a
geometric elimination argument (the maximal-norm displacement difference is
realized by a unique ordered pair, so its cross term must vanish) reduces a
unitary block to a single surviving shift with a phase.  The classifier runs
that elimination constructively and reports the shift/phase pair per block;
dispersion relations are therefore affine in the wave vector.

A multi-start least-squares solver over the unitarity condition system acts
as the independent search oracle: it knows nothing about the classification
and simply hunts for amplitude assignments with vanishing residual.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import least_squares

from .groups import ABELIAN, FREE_ABELIAN, CayleyGraph, GroupError, compose
from .walk import QuantumWalk, UnitarityReport, check_unitarity


@dataclass(frozen=True)
class CharacterBlock:
    """One character sector: block index j, the effective scalar per free
    displacement, and (after classification) the surviving shift and phase."""

    index: tuple[int, ...]
    scalars: dict[tuple[int, ...], complex]
    survivor: Optional[tuple[int, ...]] = None
    phase: Optional[float] = None


def character_decompose(walk: QuantumWalk, drop_tol: float = 1e-14) -> list[CharacterBlock]:
    """Split a scalar walk on F x Z^d into its character blocks.

    Blocks are indexed by j in {1..i_1} x ... x {1..i_n} (a single block when
    there are no finite factors) and ordered lexicographically.  Displacements
    whose effective scalar vanishes are dropped from the block.
    """
    family = walk.graph.family
    if family.kind not in (FREE_ABELIAN, ABELIAN):
        raise GroupError(f"character decomposition requires an Abelian family, got {family.tag()}")
    if not walk.is_scalar:
        raise GroupError("character decomposition applies to scalar walks")
    torsion = family.torsion
    blocks: list[CharacterBlock] = []
    for index in itertools.product(*(range(1, i + 1) for i in torsion)):
        scalars: dict[tuple[int, ...], complex] = {}
        for _, elem, mat in walk.items():
            z = complex(mat[0, 0])
            res = elem.payload[: len(torsion)]
            free = elem.payload[len(torsion):]
            angle = 2.0 * math.pi * sum(
                j * m / i for j, m, i in zip(index, res, torsion)
            )
            scalars[free] = scalars.get(free, 0.0) + z * cmath.exp(1j * angle)
        scalars = {h: z for h, z in scalars.items() if abs(z) > drop_tol}
        blocks.append(CharacterBlock(index=index, scalars=scalars))
    return blocks


class ClassifyStatus(Enum):
    TRIVIAL = "trivial"
    NOT_UNITARY = "not_unitary"
    COUNTEREXAMPLE = "counterexample"


@dataclass(frozen=True)
class ClassificationResult:
    status: ClassifyStatus
    blocks: tuple[CharacterBlock, ...] = ()
    report: Optional[UnitarityReport] = None
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.status is ClassifyStatus.TRIVIAL


def classify(walk: QuantumWalk, tol: float = 1e-10) -> ClassificationResult:
    """Run the constructive elimination on every character block.

    Requires an infinite Abelian position space (free rank >= 1) and a
    unitary scalar walk.  On success each block reports its surviving shift
    h(j) and the phase theta_j with z = exp(-i theta_j).  A block that defies
    elimination (both members of a forced-zero product significantly nonzero)
    is reported as a counterexample rather than silently accepted.
    """
    family = walk.graph.family
    if family.kind not in (FREE_ABELIAN, ABELIAN) or family.rank < 1:
        raise GroupError(
            "classification applies to infinite Abelian position spaces "
            f"(free rank >= 1), got {family.tag()}"
        )
    report = check_unitarity(walk, tol)
    if not report.ok:
        return ClassificationResult(ClassifyStatus.NOT_UNITARY, report=report)

    n_torsion = max(len(family.torsion), 1)
    product_tol = 10.0 * n_torsion * max(tol, 1e-14)
    done: list[CharacterBlock] = []
    for block in character_decompose(walk):
        active = dict(block.scalars)
        # eliminated amplitudes are only zero up to the working tolerance;
        # their leftover magnitude feeds back into later cross conditions
        slack = product_tol
        while len(active) > 1:
            keys = sorted(active)
            pairs = [
                (h1, h2)
                for h1 in keys
                for h2 in keys
                if h1 != h2
            ]
            norms = {
                (h1, h2): sum((x - y) ** 2 for x, y in zip(h1, h2))
                for h1, h2 in pairs
            }
            top = max(norms.values())
            maximal = sorted(p for p, n in norms.items() if n == top)
            h1, h2 = maximal[0]
            diff = tuple(x - y for x, y in zip(h1, h2))
            same_diff = [
                p for p in pairs
                if tuple(x - y for x, y in zip(p[0], p[1])) == diff
            ]
            if len(same_diff) != 1:
                return ClassificationResult(
                    ClassifyStatus.COUNTEREXAMPLE,
                    report=report,
                    detail=f"maximal displacement difference {diff} has {len(same_diff)} pairs",
                )
            z1, z2 = active[h1], active[h2]
            if abs(z1 * z2.conjugate()) > slack:
                return ClassificationResult(
                    ClassifyStatus.COUNTEREXAMPLE,
                    report=report,
                    detail=(
                        f"block {block.index}: cross term at {diff} is "
                        f"{abs(z1 * z2.conjugate()):.3e}, expected <= {slack:.3e}"
                    ),
                )
            drop = h1 if abs(z1) <= abs(z2) else h2
            slack += abs(active[drop])
            del active[drop]
        if not active:
            return ClassificationResult(
                ClassifyStatus.COUNTEREXAMPLE,
                report=report,
                detail=f"block {block.index} has no surviving amplitude",
            )
        (survivor, z), = active.items()
        if abs(abs(z) - 1.0) > math.sqrt(slack) + slack:
            return ClassificationResult(
                ClassifyStatus.COUNTEREXAMPLE,
                report=report,
                detail=f"block {block.index}: survivor magnitude {abs(z)!r} != 1",
            )
        done.append(
            CharacterBlock(
                index=block.index,
                scalars=block.scalars,
                survivor=survivor,
                phase=-cmath.phase(z),
            )
        )
    return ClassificationResult(ClassifyStatus.TRIVIAL, blocks=tuple(done), report=report)


# ---------------------------------------------------------------------------
# Brute-force solver for the scalar unitarity system

@dataclass(frozen=True)
class ScalarSolution:
    """One solver hit: amplitudes per generator label plus the max residual."""

    scalars: dict[str, complex]
    residual: float

    def support(self, tol: float = 1e-6) -> tuple[str, ...]:
        return tuple(lab for lab, z in self.scalars.items() if abs(z) > tol)

    def is_monoidal(self, tol: float = 1e-6) -> bool:
        return len(self.support(tol)) == 1


def _condition_system(graph: CayleyGraph):
    """Index the cross conditions: for each nonidentity difference, the list
    of (i, j) amplitude pairs entering sum z_i z_j^*."""
    elems = graph.elements
    n = len(elems)
    right: dict = {}
    left: dict = {}
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            g_r = compose(elems[i], elems[j].inverse())
            right.setdefault(g_r, []).append((i, j))
            g_l = compose(elems[i].inverse(), elems[j])
            left.setdefault(g_l, []).append((i, j))
    groups = [pairs for pairs in right.values()] + [pairs for pairs in left.values()]
    return groups


def unitarity_residual_map(graph: CayleyGraph):
    """Residual function of the unitarity system over stacked re/im unknowns."""
    groups = _condition_system(graph)
    n = len(graph.elements)

    def residual(x: np.ndarray) -> np.ndarray:
        z = x[:n] + 1j * x[n:]
        vals = []
        for pairs in groups:
            acc = 0.0 + 0.0j
            for i, j in pairs:
                acc += z[i] * z[j].conjugate()
            vals.append(acc.real)
            vals.append(acc.imag)
        vals.append(float(np.sum(np.abs(z) ** 2)) - 1.0)
        return np.asarray(vals)

    return residual


def _max_residual(graph: CayleyGraph, scalars: Sequence[complex]) -> float:
    groups = _condition_system(graph)
    z = np.asarray(scalars, dtype=complex)
    worst = abs(float(np.sum(np.abs(z) ** 2)) - 1.0)
    for pairs in groups:
        acc = sum(z[i] * z[j].conjugate() for i, j in pairs)
        worst = max(worst, abs(acc))
    return worst


def gauge_fix(scalars: Sequence[complex], tol: float = 1e-6) -> np.ndarray:
    """Rotate a solution so its first significant amplitude is positive real."""
    z = np.asarray(scalars, dtype=complex)
    for val in z:
        if abs(val) > tol:
            return z * cmath.exp(-1j * cmath.phase(complex(val)))
    return z


_SPARSIFY_THRESHOLDS = (1e-12, 1e-10, 1e-8, 1e-6, 1e-4)


def _sparsify(graph: CayleyGraph, z: np.ndarray, residual_tol: float) -> np.ndarray:
    """Zero stray amplitudes when the full condition system still holds.

    Descent endpoints can carry first-order-cancelling junk up to the square
    root of the residual scale; truncating it keeps the point on the solution
    set.  Amplitudes that genuinely carry weight are protected: zeroing them
    breaks a condition, so the truncation is rejected.
    """
    best = z
    for threshold in _SPARSIFY_THRESHOLDS:
        candidate = np.where(np.abs(best) <= threshold, 0.0, best)
        if np.array_equal(candidate, best):
            continue
        if _max_residual(graph, candidate) <= residual_tol:
            best = candidate
        else:
            break
    return best


def brute_force_scalar_solutions(
    graph: CayleyGraph,
    n_starts: int = 256,
    seed: int = 0,
    residual_tol: float = 1e-10,
    dedup_tol: float = 1e-7,
) -> list[ScalarSolution]:
    """Multi-start least squares on the unitarity residual.

    Best effort by construction: an empty list means nothing was found at
    this resolution, never that no solution exists.  Solutions are
    deduplicated modulo a global phase (first significant amplitude rotated
    to the positive real axis) and reported with their exact max residual.
    """
    if len(graph) > 6:
        raise GroupError("brute-force search is intended for small generating sets (<= 6)")
    n = len(graph.elements)
    residual = unitarity_residual_map(graph)
    rng = np.random.default_rng(seed)
    found: list[np.ndarray] = []
    for _ in range(n_starts):
        x0 = rng.standard_normal(2 * n)
        x0 /= np.linalg.norm(x0)
        sol = least_squares(residual, x0, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15)
        z = sol.x[:n] + 1j * sol.x[n:]
        if _max_residual(graph, z) > residual_tol:
            continue
        z = _sparsify(graph, z, residual_tol)
        fixed = gauge_fix(z)
        if any(np.max(np.abs(fixed - other)) <= dedup_tol for other in found):
            continue
        found.append(fixed)
    found.sort(key=lambda z: tuple(np.round(np.concatenate([z.real, z.imag]), 9)))
    labels = graph.labels
    return [
        ScalarSolution(
            scalars={lab: complex(z[i]) for i, lab in enumerate(labels)},
            residual=_max_residual(graph, z),
        )
        for z in found
    ]


def polish_solution(
    graph: CayleyGraph,
    scalars: dict[str, complex],
    perturbation: float = 0.0,
    seed: int = 0,
) -> ScalarSolution:
    """Refine an amplitude assignment (optionally perturbed) to the solution
    manifold; used to confirm that closed-form solutions are fixed points of
    the search."""
    labels = graph.labels
    z0 = np.array([scalars[lab] for lab in labels], dtype=complex)
    if perturbation:
        rng = np.random.default_rng(seed)
        z0 = z0 + perturbation * (
            rng.standard_normal(len(z0)) + 1j * rng.standard_normal(len(z0))
        )
    residual = unitarity_residual_map(graph)
    x0 = np.concatenate([z0.real, z0.imag])
    sol = least_squares(residual, x0, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15)
    n = len(labels)
    z = sol.x[:n] + 1j * sol.x[n:]
    return ScalarSolution(
        scalars={lab: complex(z[i]) for i, lab in enumerate(labels)},
        residual=_max_residual(graph, z),
    )


def solution_walk(graph: CayleyGraph, solution: ScalarSolution) -> QuantumWalk:
    """Wrap a solver hit as a scalar walk on its graph (zeros retained)."""
    mats = {lab: np.array([[z]], dtype=complex) for lab, z in solution.scalars.items()}
    return QuantumWalk(graph, 1, mats, allow_zero=True)
