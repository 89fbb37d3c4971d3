"""Walk data model, unitarity verification and real-space evolution.

A discrete-time walk on a Cayley graph updates a square-summable amplitude
field by psi'_g = sum_h A_h psi_{g h}, one s x s transition matrix A_h per
generator h (a single scalar when s = 1).  Unitarity of the full evolution
operator is equivalent to a finite system of matrix conditions indexed by the
nonidentity group elements reachable as h h'^-1 or h^-1 h', plus the two
completeness sums; ``check_unitarity`` evaluates exactly that system.

Real-space evolution runs on a periodic truncation (a ring per free axis),
which keeps the evolution exactly unitary; a size precondition guarantees the
wavefront never wraps unless the caller opts in.  Walk objects are immutable
and ``evolve`` is pure, so disjoint states may be evolved in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .groups import (
    CayleyGraph,
    CosetTiling,
    GroupElement,
    compose,
    default_tiling,
)


class WalkError(ValueError):
    """Invalid walk construction or evolution request."""


@dataclass(frozen=True)
class QuantumWalk:
    """Transition matrices over a Cayley graph with an s-dimensional coin.

    ``transitions`` maps generator labels to s x s complex matrices.  Every
    generator must have an entry; zero matrices are rejected unless
    ``allow_zero`` is set (coarse-graining keeps them to preserve a uniform
    coefficient layout).
    """

    graph: CayleyGraph
    coin_dim: int
    transitions: dict[str, np.ndarray]
    verified: bool = field(default=False, compare=False)
    allow_zero: bool = field(default=False, compare=False)

    def __post_init__(self) -> None:
        if self.coin_dim < 1:
            raise WalkError("coin dimension must be >= 1")
        s = self.coin_dim
        mats: dict[str, np.ndarray] = {}
        for label in self.graph.labels:
            if label not in self.transitions:
                raise WalkError(f"missing transition matrix for generator {label!r}")
            mat = np.array(self.transitions[label], dtype=complex)  # own the storage
            if mat.shape == () and s == 1:
                mat = mat.reshape(1, 1)
            if mat.shape != (s, s):
                raise WalkError(
                    f"transition for {label!r} has shape {mat.shape}, expected ({s}, {s})"
                )
            if not self.allow_zero and not np.any(mat):
                raise WalkError(f"transition matrix for {label!r} is zero")
            mat.setflags(write=False)
            mats[label] = mat
        extra = set(self.transitions) - set(self.graph.labels)
        if extra:
            raise WalkError(f"transitions for unknown generators: {sorted(extra)}")
        object.__setattr__(self, "transitions", mats)

    @property
    def is_scalar(self) -> bool:
        return self.coin_dim == 1

    def matrix(self, label: str) -> np.ndarray:
        return self.transitions[label]

    def scalar(self, label: str) -> complex:
        if not self.is_scalar:
            raise WalkError("scalar() is only defined for one-dimensional coins")
        return complex(self.transitions[label][0, 0])

    def items(self):
        """Yield (label, generator element, matrix) in graph order."""
        for label, elem in self.graph.generators:
            yield label, elem, self.transitions[label]

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuantumWalk):
            return NotImplemented
        return (
            self.graph == other.graph
            and self.coin_dim == other.coin_dim
            and all(
                np.array_equal(self.transitions[lab], other.transitions[lab])
                for lab in self.graph.labels
            )
        )


def scalar_walk(graph: CayleyGraph, scalars: Mapping[str, complex], **kw) -> QuantumWalk:
    """Convenience constructor for s = 1 walks from a label -> scalar map."""
    mats = {lab: np.array([[z]], dtype=complex) for lab, z in scalars.items()}
    return QuantumWalk(graph, 1, mats, **kw)


# ---------------------------------------------------------------------------
# Quadrangularity (necessary condition for scalar walks)

@dataclass(frozen=True)
class QuadrangularityResult:
    passed: bool
    witness: Optional[tuple[str, str]] = None

    def __bool__(self) -> bool:  # pragma: no cover - convenience
        return self.passed


def check_quadrangularity(graph: CayleyGraph) -> QuadrangularityResult:
    """Check that every ordered generator pair difference h1 h2^-1 is realized
    by at least one other ordered pair.  Vacuously true for singletons; on
    failure the first violating pair (in generator order) is returned."""
    gens = graph.generators
    diffs: dict[GroupElement, int] = {}
    for _, h1 in gens:
        for _, h2 in gens:
            if h1 == h2:
                continue
            g = compose(h1, h2.inverse())
            diffs[g] = diffs.get(g, 0) + 1
    for lab1, h1 in gens:
        for lab2, h2 in gens:
            if h1 == h2:
                continue
            if diffs[compose(h1, h2.inverse())] < 2:
                return QuadrangularityResult(False, (lab1, lab2))
    return QuadrangularityResult(True)


# ---------------------------------------------------------------------------
# Unitarity

@dataclass(frozen=True)
class UnitarityReport:
    """Residuals of the unitarity condition system.

    ``cross`` maps (group element, side) to the norm of the corresponding
    off-identity sum, with side "right" for sum A_h A_h'^dag over h h'^-1 = g
    and "left" for sum A_h^dag A_h' over h^-1 h' = g.  ``completeness`` holds
    the two identity-sum residuals.
    """

    tol: float
    completeness: tuple[float, float]
    cross: dict[tuple[GroupElement, str], float]

    @property
    def max_residual(self) -> float:
        worst = max(self.completeness)
        if self.cross:
            worst = max(worst, max(self.cross.values()))
        return worst

    @property
    def ok(self) -> bool:
        return self.max_residual <= self.tol

    def __bool__(self) -> bool:
        return self.ok

    def summary(self) -> str:
        status = "unitary" if self.ok else "NOT unitary"
        return f"{status}: max residual {self.max_residual:.3e} (tol {self.tol:g})"


def check_unitarity(walk: QuantumWalk, tol: float = 1e-10) -> UnitarityReport:
    """Evaluate the unitarity conditions of the walk operator.

    For every nonidentity g reachable as h h'^-1 (h != h') the sum of
    A_h A_h'^dag must vanish, for every g reachable as h^-1 h' the sum of
    A_h^dag A_h' must vanish, and the two completeness sums must equal the
    identity.  The report carries the max-norm residual of each condition.
    """
    s = walk.coin_dim
    entries = list(walk.items())
    right: dict[GroupElement, np.ndarray] = {}
    left: dict[GroupElement, np.ndarray] = {}
    comp_r = np.zeros((s, s), dtype=complex)
    comp_l = np.zeros((s, s), dtype=complex)
    for _, h1, m1 in entries:
        comp_r += m1 @ m1.conj().T
        comp_l += m1.conj().T @ m1
        for _, h2, m2 in entries:
            if h1 == h2:
                continue
            g_r = compose(h1, h2.inverse())
            right.setdefault(g_r, np.zeros((s, s), dtype=complex))
            right[g_r] += m1 @ m2.conj().T
            g_l = compose(h1.inverse(), h2)
            left.setdefault(g_l, np.zeros((s, s), dtype=complex))
            left[g_l] += m1.conj().T @ m2
    eye = np.eye(s)
    cross = {}
    for g, mat in right.items():
        cross[(g, "right")] = float(np.max(np.abs(mat)))
    for g, mat in left.items():
        cross[(g, "left")] = float(np.max(np.abs(mat)))
    completeness = (
        float(np.max(np.abs(comp_r - eye))),
        float(np.max(np.abs(comp_l - eye))),
    )
    return UnitarityReport(tol=tol, completeness=completeness, cross=cross)


# ---------------------------------------------------------------------------
# Truncated position space and evolution

@dataclass(frozen=True)
class LatticeLayout:
    """Periodic truncation of the walk's position space.

    Abelian families keep the torsion axes at their exact sizes and truncate
    each free axis to ``n_sites``.  Dihedral families use (site, coset bit)
    pairs over a ring of ``n_sites`` translations, matching the layout of a
    coarse-grained walk so equivalence checks reduce to array comparison.
    """

    graph: CayleyGraph
    n_sites: int
    tiling: Optional[CosetTiling] = None

    def __post_init__(self) -> None:
        family = self.graph.family
        if family.is_dihedral and self.tiling is None:
            object.__setattr__(self, "tiling", default_tiling(family))
        if family.kind == "dihedral_n" and self.n_sites != family.order:
            raise WalkError("finite dihedral layouts must use n_sites equal to the order")
        if self.n_sites < 1:
            raise WalkError("n_sites must be positive")

    @property
    def dims(self) -> tuple[int, ...]:
        family = self.graph.family
        if family.is_dihedral:
            return (self.n_sites, 2)
        return family.torsion + (self.n_sites,) * family.rank

    def site_labels(self) -> list[int]:
        """Centered integer labels for a ring axis (index -1 maps to -1)."""
        n = self.n_sites
        half = (n + 1) // 2
        return [i if i < half else i - n for i in range(n)]


@dataclass(eq=False)
class LatticeState:
    """Amplitudes over a lattice layout, shape (*layout.dims, coin_dim)."""

    layout: LatticeLayout
    data: np.ndarray

    def __post_init__(self) -> None:
        self.data = np.asarray(self.data, dtype=complex)
        expected = self.layout.dims
        if self.data.shape[:-1] != expected:
            raise WalkError(
                f"state shape {self.data.shape} does not match layout dims {expected}"
            )

    @property
    def coin_dim(self) -> int:
        return self.data.shape[-1]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.data))

    def normalized(self) -> "LatticeState":
        n = self.norm
        if n == 0.0:
            raise WalkError("cannot normalize the zero state")
        return LatticeState(self.layout, self.data / n)


def delta_state(
    walk: QuantumWalk,
    n_sites: int,
    site=0,
    component: int = 0,
    tiling: Optional[CosetTiling] = None,
) -> LatticeState:
    """Unit amplitude at one site and one internal component.

    For dihedral walks ``site`` is the translation coordinate and
    ``component`` the coset bit; for Abelian walks with s > 1 it is the coin
    index.  Multi-axis sites may be given as a tuple.
    """
    layout = LatticeLayout(walk.graph, n_sites, tiling)
    dims = layout.dims
    family = walk.graph.family
    data = np.zeros(dims + (walk.coin_dim,), dtype=complex)
    if family.is_dihedral:
        if not walk.is_scalar:
            raise WalkError("dihedral layouts are defined for scalar walks")
        data[int(site) % n_sites, int(component), 0] = 1.0
    else:
        idx = tuple(int(v) % d for v, d in zip(np.atleast_1d(site), dims))
        if len(idx) != len(dims):
            raise WalkError(f"site {site!r} does not address layout dims {dims}")
        data[idx + (component,)] = 1.0
    return LatticeState(layout, data)


def random_state(
    walk: QuantumWalk,
    n_sites: int,
    rng: np.random.Generator,
    width: Optional[int] = None,
    tiling: Optional[CosetTiling] = None,
) -> LatticeState:
    """Normalized complex Gaussian state, optionally localized to a window of
    ``width`` sites (centered at 0) along each free axis."""
    layout = LatticeLayout(walk.graph, n_sites, tiling)
    shape = layout.dims + (walk.coin_dim,)
    data = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    if width is not None:
        family = walk.graph.family
        axes = [0] if family.is_dihedral else [
            len(family.torsion) + i for i in range(family.rank)
        ]
        mask = np.zeros(layout.dims, dtype=bool)
        keep = [i % n_sites for i in range(-(width // 2), width - width // 2)]
        sl: list = [slice(None)] * len(layout.dims)
        for ax in axes:
            m = np.zeros(layout.dims[ax], dtype=bool)
            m[keep] = True
            shape_ax = [1] * len(layout.dims)
            shape_ax[ax] = layout.dims[ax]
            mask = mask | ~m.reshape(shape_ax)
        data[mask] = 0.0
    return LatticeState(layout, data).normalized()


def _max_free_displacement(walk: QuantumWalk) -> int:
    disp = 0
    for _, elem, _ in walk.items():
        disp = max(disp, max((abs(v) for v in elem.free_part), default=0))
    return disp


def _support_width(state: LatticeState) -> int:
    """Worst-case occupied span along the free axes (0 for the zero state)."""
    family = state.layout.graph.family
    if family.is_dihedral:
        axes = [0]
    else:
        axes = [len(family.torsion) + i for i in range(family.rank)]
    occupied = np.abs(state.data).sum(axis=-1) > 0
    width = 0
    for ax in axes:
        other = tuple(i for i in range(occupied.ndim) if i != ax)
        line = occupied.any(axis=other) if other else occupied
        idx = np.nonzero(line)[0]
        if idx.size:
            width = max(width, int(idx.max() - idx.min()) + 1)
    return width


def evolve(
    walk: QuantumWalk,
    state: LatticeState,
    steps: int,
    allow_wrap: bool = False,
) -> LatticeState:
    """Apply the walk update ``steps`` times.

    Unless ``allow_wrap`` is set, the ring must be large enough that the
    wavefront cannot travel around it: n_sites > 2 * steps * max displacement
    + initial support width.  Finite-group axes are exact and never checked.
    """
    if steps < 0:
        raise WalkError("steps must be nonnegative")
    if state.coin_dim != walk.coin_dim:
        raise WalkError("state coin dimension does not match the walk")
    if state.layout.graph.family != walk.graph.family:
        raise WalkError("state layout family does not match the walk")
    family = walk.graph.family
    if family.is_infinite and not allow_wrap:
        need = 2 * steps * _max_free_displacement(walk) + _support_width(state)
        if state.layout.n_sites <= need:
            raise WalkError(
                f"ring of {state.layout.n_sites} sites cannot hold {steps} steps "
                f"without wrap (needs > {need}); pass allow_wrap=True to accept"
            )

    data = state.data
    if family.is_dihedral:
        stepper = _dihedral_step(walk, state.layout)
    else:
        stepper = _abelian_step(walk, state.layout)
    for _ in range(steps):
        data = stepper(data)
    return LatticeState(state.layout, data)


def _abelian_step(walk: QuantumWalk, layout: LatticeLayout):
    family = walk.graph.family
    naxes = len(layout.dims)
    moves = []
    for _, elem, mat in walk.items():
        shift = tuple(-v for v in elem.payload)  # psi'[x] += A_h psi[x + h]
        moves.append((shift, mat.T.copy()))

    def step(data: np.ndarray) -> np.ndarray:
        out = np.zeros_like(data)
        for shift, mat_t in moves:
            out += np.roll(data, shift, axis=tuple(range(naxes))) @ mat_t
        return out

    return step


def _dihedral_step(walk: QuantumWalk, layout: LatticeLayout):
    tiling = layout.tiling
    moves = []  # (j, j_src, y, A_h^T); psi'[x, j] += A_h psi[x + y, j_src]
    for _, h, mat in walk.items():
        for j in range(2):
            prod = compose(tiling.reps[j], h)
            y, j_src = tiling.decompose(prod)
            moves.append((j, j_src, y, mat.T.copy()))

    def step(data: np.ndarray) -> np.ndarray:
        out = np.zeros_like(data)
        for j, j_src, y, mat_t in moves:
            out[:, j, :] += np.roll(data[:, j_src, :], -y, axis=0) @ mat_t
        return out

    return step


def position_distribution(state: LatticeState, tol: float = 1e-9) -> np.ndarray:
    """Per-site probabilities with the coin traced out; shape = layout.dims.

    The state must be normalized; the result sums to 1 within tolerance.
    """
    if abs(state.norm - 1.0) > tol:
        raise WalkError(f"state is not normalized (norm {state.norm!r})")
    return (np.abs(state.data) ** 2).sum(axis=-1)
