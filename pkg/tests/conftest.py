"""Shared fixtures and independent oracles for the test suite.

The dense-operator builder below constructs the one-step evolution matrix by
looping over lattice basis states and applying the update rule literally via
group composition; it shares no code with the rolled array implementation in
``cayleyqw.walk`` and serves as the reference for evolution tests.
"""

from __future__ import annotations

import numpy as np
import pytest

from cayleyqw import (
    DihedralParams,
    GroupFamily,
    QuantumWalk,
    build_cayley_graph,
    compose,
    default_tiling,
)
from cayleyqw.momentum import SIGMA_X


def dense_step_matrix(walk: QuantumWalk, n_sites: int, tiling=None) -> np.ndarray:
    """One-step evolution operator on the periodic lattice, built directly."""
    family = walk.graph.family
    s = walk.coin_dim
    if family.is_dihedral:
        if tiling is None:
            tiling = default_tiling(family)
        sites = [(x, j) for x in range(n_sites) for j in range(2)]
        index = {site: i for i, site in enumerate(sites)}
        dim = len(sites) * s
        mat = np.zeros((dim, dim), dtype=complex)
        for x, j in sites:
            g = tiling.site_element(x, j)
            for _, h, amp in walk.items():
                y, jj = tiling.decompose(compose(g, h))
                col_site = index[(y % n_sites, jj)]
                row_site = index[(x, j)]
                for a in range(s):
                    for b in range(s):
                        mat[row_site * s + a, col_site * s + b] += amp[a, b]
        return mat
    dims = family.torsion + (n_sites,) * family.rank
    sites = list(np.ndindex(*dims)) if dims else [()]
    index = {site: i for i, site in enumerate(sites)}
    dim = len(sites) * s
    mat = np.zeros((dim, dim), dtype=complex)
    for site in sites:
        for _, h, amp in walk.items():
            moved = tuple((x + v) % d for x, v, d in zip(site, h.payload, dims))
            for a in range(s):
                for b in range(s):
                    mat[index[site] * s + a, index[moved] * s + b] += amp[a, b]
    return mat


def random_su2(rng: np.random.Generator) -> np.ndarray:
    quat = rng.standard_normal(4)
    quat /= np.linalg.norm(quat)
    w, x, y, z = quat
    return np.array(
        [[w + 1j * z, 1j * x + y], [1j * x - y, w - 1j * z]], dtype=complex
    )


def random_dihedral_params(
    rng: np.random.Generator, case: str = None, margin: float = 0.05
) -> DihedralParams:
    if case is None:
        case = rng.choice(["mu_zero", "ze_zero", "zd_zero", "generic"])
    sign = lambda: int(rng.choice([1, -1]))
    u = lambda: float(rng.uniform(margin, 1.0 - margin))
    theta = float(rng.uniform(-np.pi, np.pi))
    if case == "mu_zero":
        return DihedralParams.mu_zero(u(), u(), sign(), sign(), theta)
    if case == "ze_zero":
        return DihedralParams.ze_zero(u(), u(), sign(), sign(), theta)
    if case == "zd_zero":
        return DihedralParams.zd_zero(u(), u(), sign(), sign(), theta)
    s2 = sign()
    if s2 == 1:
        q = float(rng.uniform(margin, 1.0 - 2.0 * margin))
        p = float(rng.uniform(q + margin / 2.0, 1.0 - margin))
    else:
        q = float(rng.uniform(margin, 1.0 - 2.0 * margin))
        p = float(rng.uniform(margin / 2.0, 1.0 - q - margin / 2.0))
    return DihedralParams.generic(p, q, u(), sign(), s2, sign(), theta)


def parity_class_coefficients(rng: np.random.Generator):
    """Random member of the rotated-mass class conjugated by a random basis:
    coefficients of U exp(i phi sigma_x) D_k U^dag."""
    phi = float(rng.uniform(-np.pi / 2, np.pi / 2))
    chi = float(rng.uniform(0.08, np.pi / 2 - 0.08))
    nu, mu = np.cos(chi), np.sin(chi)
    s = int(rng.choice([1, -1]))
    u = random_su2(rng)
    rot = np.cos(phi) * np.eye(2) + 1j * np.sin(phi) * SIGMA_X
    plus = u @ rot @ np.diag([nu, 0.0]).astype(complex) @ u.conj().T
    minus = u @ rot @ np.diag([0.0, nu]).astype(complex) @ u.conj().T
    stay = u @ rot @ (1j * s * mu * SIGMA_X) @ u.conj().T
    return plus, minus, stay, (phi, nu, mu, s, u)


def line_graph_with_stay():
    return build_cayley_graph(
        GroupFamily.free_abelian(1), [("+1", (1,)), ("-1", (-1,)), ("e", (0,))]
    )


def parity_class_walk(rng: np.random.Generator) -> QuantumWalk:
    plus, minus, stay, _ = parity_class_coefficients(rng)
    return QuantumWalk(
        line_graph_with_stay(), 2, {"+1": plus, "-1": minus, "e": stay}, allow_zero=True
    )


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240811)
