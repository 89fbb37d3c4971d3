"""Wave-vector representation of walks on Z^d and dispersion analysis.

For a walk on Z^d the Fourier transform block-diagonalizes the evolution into
a k-indexed family A_k = sum_h exp(-i k.h) A_h of s x s unitaries over the
Brillouin zone [-pi, pi)^d.  Eigenvalues are phase factors exp(i w_r(k)); the
branches w_r are the dispersion relations, and their first and second k
derivatives give the group velocity and the diffusion coefficient.

For s = 2 the eigenphases come from the trace and determinant in closed form;
other coin dimensions fall back to a dense eigensolver.  Per-k evaluations
are independent, so everything here is trivially parallelizable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
import numpy as np

from .groups import FREE_ABELIAN, GroupFamily, build_cayley_graph
from .walk import QuantumWalk, WalkError, check_unitarity


class MomentumError(ValueError):
    """Momentum-space construction or gauge failure."""


@dataclass(frozen=True, eq=False)
class MomentumWalk:
    """Coefficient family A_k = sum_h exp(-i k.h) C_h over the Brillouin zone."""

    coin_dim: int
    coeffs: tuple[tuple[tuple[int, ...], np.ndarray], ...]
    dim: int

    def __post_init__(self) -> None:
        frozen = []
        for h, mat in self.coeffs:
            h = tuple(int(v) for v in h)
            if len(h) != self.dim:
                raise MomentumError(f"coefficient vector {h} does not have dim {self.dim}")
            mat = np.array(mat, dtype=complex)  # own the storage
            if mat.shape != (self.coin_dim, self.coin_dim):
                raise MomentumError("coefficient matrix has the wrong shape")
            mat.setflags(write=False)
            frozen.append((h, mat))
        object.__setattr__(self, "coeffs", tuple(frozen))

    @property
    def bz_ranges(self) -> tuple[tuple[float, float], ...]:
        return tuple(((-math.pi, math.pi),) * self.dim)

    def at(self, k) -> np.ndarray:
        """Evaluate A_k at a single wave vector."""
        kv = np.atleast_1d(np.asarray(k, dtype=float))
        out = np.zeros((self.coin_dim, self.coin_dim), dtype=complex)
        for h, mat in self.coeffs:
            out += np.exp(-1j * float(np.dot(kv, h))) * mat
        return out

    def sample(self, ks: np.ndarray) -> np.ndarray:
        """Evaluate A_k on an array of wave vectors, shape (n, s, s)."""
        ks = np.asarray(ks, dtype=float)
        if self.dim == 1 and ks.ndim == 1:
            ks = ks[:, None]
        out = np.zeros((ks.shape[0], self.coin_dim, self.coin_dim), dtype=complex)
        for h, mat in self.coeffs:
            phases = np.exp(-1j * (ks @ np.asarray(h, dtype=float)))
            out += phases[:, None, None] * mat
        return out

    def coefficient(self, h) -> np.ndarray:
        hv = tuple(int(v) for v in np.atleast_1d(h))
        for hh, mat in self.coeffs:
            if hh == hv:
                return mat
        return np.zeros((self.coin_dim, self.coin_dim), dtype=complex)


def to_momentum(walk: QuantumWalk) -> MomentumWalk:
    """Momentum-space coefficients of a walk whose position space is Z^d.

    Walks on dihedral graphs must be coarse-grained first; finite cyclic
    factors call for a character decomposition instead.
    """
    family = walk.graph.family
    if family.kind != FREE_ABELIAN:
        raise MomentumError(
            f"momentum representation requires a Z^d position space, got {family.tag()}"
        )
    coeffs = [(elem.payload, mat) for _, elem, mat in walk.items()]
    return MomentumWalk(walk.coin_dim, tuple(coeffs), family.rank)


def unitarity_residual(mwalk: MomentumWalk, samples: int = 1024, seed: int = 0) -> float:
    """Max deviation of A_k A_k^dag from the identity over sampled k.

    Uses a uniform grid for d = 1 and uniform random wave vectors otherwise.
    """
    if mwalk.dim == 1:
        ks = brillouin_grid(samples)
    else:
        rng = np.random.default_rng(seed)
        ks = rng.uniform(-math.pi, math.pi, size=(samples, mwalk.dim))
    mats = mwalk.sample(ks)
    eye = np.eye(mwalk.coin_dim)
    prods = mats @ mats.conj().transpose(0, 2, 1)
    return float(np.max(np.abs(prods - eye)))


def brillouin_grid(samples: int) -> np.ndarray:
    """Uniform grid of `samples` points covering [-pi, pi)."""
    if samples < 2:
        raise MomentumError("need at least two samples")
    return -math.pi + 2.0 * math.pi * np.arange(samples) / samples


# ---------------------------------------------------------------------------
# SU(2) gauge normalization

def su2_normalize(
    mwalk: MomentumWalk, tol: float = 1e-10
) -> tuple[MomentumWalk, complex]:
    """Divide out the k-independent phase so that det A_k = 1 identically.

    The determinant of a coefficient family is itself a trigonometric
    polynomial; it must be constant up to ``tol`` for the gauge to exist.
    The leftover sign is fixed by making the (1,1) entry of the h = +1
    coefficient nonnegative real when possible, falling back to the first
    significant entry in storage order.  Returns the normalized family and
    the phase that was divided out.
    """
    if mwalk.coin_dim != 2 or mwalk.dim != 1:
        raise MomentumError("SU(2) normalization applies to s=2 walks on Z")
    det_poly: dict[int, complex] = {}
    for h1, c1 in mwalk.coeffs:
        for h2, c2 in mwalk.coeffs:
            m = h1[0] + h2[0]
            det_poly[m] = det_poly.get(m, 0.0) + (
                c1[0, 0] * c2[1, 1] - c1[0, 1] * c2[1, 0]
            )
    off = max((abs(v) for m, v in det_poly.items() if m != 0), default=0.0)
    d0 = det_poly.get(0, 0.0)
    if off > tol or abs(abs(d0) - 1.0) > max(tol, 1e-8):
        raise MomentumError("determinant is not a constant unimodular phase")
    phase = np.exp(0.5j * np.angle(d0))

    coeffs = [(h, mat / phase) for h, mat in mwalk.coeffs]

    def _pivot() -> complex:
        plus = dict(coeffs).get((1,))
        if plus is not None and abs(plus[0, 0]) > tol:
            return complex(plus[0, 0])
        for _, mat in coeffs:
            for val in mat.flat:
                if abs(val) > tol:
                    return complex(val)
        return 1.0 + 0.0j

    piv = _pivot()
    flip = piv.real < -tol or (abs(piv.real) <= tol and piv.imag < 0)
    if flip:
        phase = -phase
        coeffs = [(h, -mat) for h, mat in coeffs]
    return MomentumWalk(2, tuple(coeffs), 1), complex(phase)


# ---------------------------------------------------------------------------
# Dispersion relations

@dataclass(frozen=True, eq=False)
class DispersionData:
    """Sampled eigenphase branches over the Brillouin zone.

    ``branches`` has shape (n_k, s) and is sorted in decreasing phase at each
    k; all phases are wrapped to (-pi, pi].  ``tracked()`` reorders the
    branches for continuity in k, which derivative estimates require.
    """

    ks: np.ndarray
    branches: np.ndarray
    tol: float = field(default=1e-10, compare=False)

    @property
    def n_samples(self) -> int:
        return self.ks.shape[0]

    @property
    def n_branches(self) -> int:
        return self.branches.shape[1]

    def tracked(self) -> np.ndarray:
        """Branches permuted columnwise so each column is continuous in k."""
        out = self.branches.copy()
        for i in range(1, out.shape[0]):
            prev = out[i - 1]
            row = out[i]
            if out.shape[1] == 2:
                keep = _phase_dist(row[0], prev[0]) + _phase_dist(row[1], prev[1])
                swap = _phase_dist(row[1], prev[0]) + _phase_dist(row[0], prev[1])
                if swap < keep:
                    out[i] = row[::-1]
            elif out.shape[1] > 2:
                order = []
                remaining = list(range(len(row)))
                for p in prev:
                    j = min(remaining, key=lambda j: _phase_dist(row[j], p))
                    order.append(j)
                    remaining.remove(j)
                out[i] = row[order]
        return out


def _phase_dist(a: float, b: float) -> float:
    d = abs(a - b) % (2.0 * math.pi)
    return min(d, 2.0 * math.pi - d)


def _wrap(angles: np.ndarray) -> np.ndarray:
    wrapped = np.mod(angles + math.pi, 2.0 * math.pi) - math.pi
    wrapped[wrapped == -math.pi] = math.pi
    return wrapped


def dispersion(mwalk: MomentumWalk, samples: int = 1024, tol: float = 1e-10) -> DispersionData:
    """Eigenphase branches on a uniform Brillouin-zone grid (d = 1 only).

    Raises if any sampled A_k fails unitarity beyond ``tol``.  For s = 2 the
    phases are computed from the trace and determinant in closed form.
    """
    if mwalk.dim != 1:
        raise MomentumError("dispersion sampling is implemented for d = 1")
    ks = brillouin_grid(samples)
    mats = mwalk.sample(ks)
    eye = np.eye(mwalk.coin_dim)
    residual = np.max(np.abs(mats @ mats.conj().transpose(0, 2, 1) - eye))
    if residual > tol:
        raise MomentumError(f"A_k is not unitary (residual {residual:.3e} > {tol:g})")

    s = mwalk.coin_dim
    if s == 1:
        branches = np.angle(mats[:, 0, 0])[:, None]
    elif s == 2:
        tr = mats[:, 0, 0] + mats[:, 1, 1]
        det = mats[:, 0, 0] * mats[:, 1, 1] - mats[:, 0, 1] * mats[:, 1, 0]
        phi0 = 0.5 * np.angle(det)
        half_tr = 0.5 * tr * np.exp(-1j * phi0)
        arg = np.clip(half_tr.real, -1.0, 1.0)
        if float(np.max(np.abs(half_tr.real))) - 1.0 > max(10.0 * tol, 1e-12):
            raise MomentumError("trace magnitude exceeds the unitary bound")
        omega = np.arccos(arg)
        branches = np.stack([_wrap(phi0 + omega), _wrap(phi0 - omega)], axis=1)
        branches = np.sort(branches, axis=1)[:, ::-1]
    else:
        eigs = np.linalg.eigvals(mats)
        branches = np.sort(np.angle(eigs), axis=1)[:, ::-1]
    return DispersionData(ks=ks, branches=branches, tol=tol)


@dataclass(frozen=True, eq=False)
class DerivativeSamples:
    """Central finite-difference samples with a smoothness mask.

    Points where the stencil straddles a band crossing or a kink are flagged
    (mask False) rather than silently returned.
    """

    ks: np.ndarray
    values: np.ndarray
    smooth: np.ndarray


def _smooth_mask(tracked: np.ndarray, dk: float) -> np.ndarray:
    second = np.roll(tracked, -1, axis=0) - 2.0 * tracked + np.roll(tracked, 1, axis=0)
    kink = np.abs(second) > dk ** 1.5
    near_edge = np.minimum(np.abs(tracked), np.abs(math.pi - np.abs(tracked))) < 2.0 * dk
    mask = ~(kink | near_edge)
    # a point is smooth only if its immediate neighbours are clean too
    return mask & np.roll(mask, 1, axis=0) & np.roll(mask, -1, axis=0)


def group_velocity(data: DispersionData) -> DerivativeSamples:
    """d omega / d k per branch via central differences on the sampling grid."""
    tracked = data.tracked()
    dk = 2.0 * math.pi / data.n_samples
    diff = _wrap(np.roll(tracked, -1, axis=0) - np.roll(tracked, 1, axis=0))
    values = diff / (2.0 * dk)
    return DerivativeSamples(data.ks, values, _smooth_mask(tracked, dk))


def diffusion_coefficient(data: DispersionData) -> DerivativeSamples:
    """d^2 omega / d k^2 per branch via central differences."""
    tracked = data.tracked()
    dk = 2.0 * math.pi / data.n_samples
    second = np.roll(tracked, -1, axis=0) - 2.0 * tracked + np.roll(tracked, 1, axis=0)
    values = second / dk ** 2
    return DerivativeSamples(data.ks, values, _smooth_mask(tracked, dk))


# ---------------------------------------------------------------------------
# Named spinorial walks on the line

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def _line_graph(with_stay: bool):
    family = GroupFamily.free_abelian(1)
    gens = [("+1", (1,)), ("-1", (-1,))]
    if with_stay:
        gens.append(("e", (0,)))
    return build_cayley_graph(family, gens)


def _spinor_walk(plus, minus, stay=None, verify_tol: float = 1e-12) -> QuantumWalk:
    with_stay = stay is not None and np.any(np.abs(stay) > 0)
    graph = _line_graph(with_stay)
    mats = {"+1": plus, "-1": minus}
    if with_stay:
        mats["e"] = stay
    walk = QuantumWalk(graph, 2, mats)
    report = check_unitarity(walk, verify_tol)
    if not report.ok:
        raise WalkError(f"constructed walk is not unitary: {report.summary()}")
    return QuantumWalk(graph, 2, mats, verified=True)


def make_dirac(nu: float, mu: float, s: int) -> QuantumWalk:
    """Mass-mu spinorial walk with A_k = [[nu e^{-ik}, i s mu], [i s mu, nu e^{ik}]].

    Requires nu^2 + mu^2 = 1 and s = +-1.  With mu = 0 the stay-put
    generator drops out and the walk is the massless (chiral) one.
    """
    if s not in (1, -1):
        raise WalkError("s must be +1 or -1")
    if abs(nu * nu + mu * mu - 1.0) > 1e-12:
        raise WalkError(f"nu^2 + mu^2 = {nu * nu + mu * mu!r} != 1")
    plus = np.array([[nu, 0.0], [0.0, 0.0]], dtype=complex)
    minus = np.array([[0.0, 0.0], [0.0, nu]], dtype=complex)
    stay = 1j * s * mu * SIGMA_X
    return _spinor_walk(plus, minus, stay)


def make_weyl() -> QuantumWalk:
    """Massless walk A_k = exp(-i k sigma_z)."""
    return make_dirac(1.0, 0.0, +1)


def make_hadamard() -> QuantumWalk:
    """Coined line walk: conditional shift composed with the Hadamard coin.

    Momentum form diag(e^{-ik}, e^{ik}) H; the shift/coin pairing is fixed by
    this construction (other conventions differ by a local basis change).
    """
    h = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / math.sqrt(2.0)
    plus = np.array([[1.0, 0.0], [0.0, 0.0]]) @ h
    minus = np.array([[0.0, 0.0], [0.0, 1.0]]) @ h
    return _spinor_walk(plus, minus)


def make_parity_walk(delta: float, gamma: float, s: int = +1) -> QuantumWalk:
    """Reflection-symmetric spinorial walk with eigenphases
    +-arccos(delta cos k + gamma).

    Requires |delta + gamma| <= 1 and |delta - gamma| <= 1.  Built as
    exp(i phi sigma_x) A^D_k with the rotation angle and mass chosen to hit
    the requested dispersion parameters.
    """
    if abs(delta + gamma) > 1.0 + 1e-12 or abs(delta - gamma) > 1.0 + 1e-12:
        raise WalkError("need |delta +- gamma| <= 1")
    if s not in (1, -1):
        raise WalkError("s must be +1 or -1")
    # With nu cos(phi) = delta and s mu sin(phi) = -gamma, c = cos^2(phi)
    # solves c^2 - c (1 + delta^2 - gamma^2) + delta^2 = 0; the larger root
    # lies in [delta^2, 1] and keeps nu = |delta|/sqrt(c) <= 1.
    b = 1.0 + delta * delta - gamma * gamma
    disc = max(b * b - 4.0 * delta * delta, 0.0)
    c = min(0.5 * (b + math.sqrt(disc)), 1.0)
    if c >= 1.0 - 1e-12:
        nu = abs(delta)
        mu = math.sqrt(max(1.0 - nu * nu, 0.0))
        cos_phi = 1.0 if delta >= 0 else -1.0
        sin_phi = 0.0
    else:
        nu = math.sqrt(delta * delta / c) if c > 0 else 0.0
        mu = math.sqrt(gamma * gamma / (1.0 - c))
        cos_phi = delta / nu if nu > 1e-14 else math.sqrt(c)
        sin_phi = -gamma / (s * mu)
    if abs(nu * nu + mu * mu - 1.0) > 1e-9:
        raise WalkError("no admissible rotation angle for these parameters")
    rot = cos_phi * np.eye(2) + 1j * sin_phi * SIGMA_X  # exp(i phi sigma_x)
    plus = rot @ np.array([[nu, 0.0], [0.0, 0.0]], dtype=complex)
    minus = rot @ np.array([[0.0, 0.0], [0.0, nu]], dtype=complex)
    stay = rot @ (1j * s * mu * SIGMA_X)
    graph = _line_graph(True)
    mats = {"+1": plus, "-1": minus, "e": stay}
    walk = QuantumWalk(graph, 2, mats, allow_zero=True)
    report = check_unitarity(walk, 1e-10)
    if not report.ok:
        raise WalkError(f"constructed walk is not unitary: {report.summary()}")
    return QuantumWalk(graph, 2, mats, verified=True, allow_zero=True)
