"""Constructed test states: products, GHZ and its dephasing, quantum Markov chains."""

from __future__ import annotations

import numpy as np

from .state import (
    DensityMatrix,
    SystemLayout,
    basis_vector,
    ghz_state,
    random_mixed_state,
    random_pure_vector,
    random_unitary,
    tensor_product,
    to_density,
)


def dephased_ghz(n: int) -> DensityMatrix:
    """``(|0..0><0..0| + |1..1><1..1|) / 2``."""
    d = 2**n
    m = np.zeros((d, d))
    m[0, 0] = m[-1, -1] = 0.5
    return DensityMatrix(m, [2] * n, check=False)


def ghz_minus(n: int) -> DensityMatrix:
    v = ghz_state(n).amplitudes.copy()
    v[-1] *= -1
    return DensityMatrix(np.outer(v, v.conj()), [2] * n, check=False)


def product_of(states) -> DensityMatrix:
    """Tensor product of single-site states placed on sites 0, 1, ..."""
    out = None
    for i, s in enumerate(states):
        s = s.on((i,))
        out = s if out is None else tensor_product(out, s)
    return out


def random_product_state(dims, seed=None, pure=False) -> DensityMatrix:
    rng = np.random.default_rng(seed)
    parts = []
    for d in dims:
        s = int(rng.integers(2**31))
        parts.append(to_density(random_pure_vector([d], s)) if pure else random_mixed_state([d], d, s))
    return product_of(parts)


def classical_markov_chain(n: int, d: int = 2, seed=None, rotate: bool = False) -> DensityMatrix:
    """``sum_x p(x_0) p(x_1|x_0) ... |x><x|`` with random transition matrices.

    With ``rotate`` every site is conjugated by its own Haar unitary, which
    leaves all conditional mutual informations at zero.
    """
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(d))
    for _ in range(n - 1):
        trans = rng.dirichlet(np.ones(d), size=d)  # trans[a, b] = p(b | a)
        p = p[..., None] * trans
    m = np.diag(p.ravel()).astype(complex)
    if rotate:
        u = np.eye(1)
        for _ in range(n):
            u = np.kron(u, random_unitary(d, int(rng.integers(2**31))))
        m = u @ m @ u.conj().T
    return DensityMatrix(0.5 * (m + m.conj().T), [d] * n, check=False)


def pair_product_chain(n: int, seed=None) -> DensityMatrix:
    """``sigma_{01} (x) sigma_{23} (x) ...`` with random entangled mixed pairs.

    Every ``I(0..k-2 : k | k-1)`` vanishes, so the line plan reconstructs it
    exactly although neighbouring pairs are entangled.
    """
    rng = np.random.default_rng(seed)
    out = None
    site = 0
    while site < n:
        width = 2 if site + 1 < n else 1
        piece = random_mixed_state([2] * width, 2, int(rng.integers(2**31)), sites=range(site, site + width))
        out = piece if out is None else tensor_product(out, piece)
        site += width
    return out


def split_shield_markov_state(seed=None, rank: int = 2) -> tuple[DensityMatrix, tuple, tuple, tuple]:
    """``rho_{A B1} (x) rho_{B2 C}`` on sites (A, B1, B2, C) = (0, 1, 2, 3).

    Returns the state and the regions ``A = (0,)``, ``B = (1, 2)``, ``C = (3,)``.
    """
    rng = np.random.default_rng(seed)
    left = random_mixed_state([2, 2], rank, int(rng.integers(2**31)), sites=(0, 1))
    right = random_mixed_state([2, 2], rank, int(rng.integers(2**31)), sites=(2, 3))
    return tensor_product(left, right), (0,), (1, 2), (3,)


def block_markov_state(seed=None) -> tuple[DensityMatrix, tuple, tuple, tuple]:
    """Direct sum over a classical label on B: ``sum_j p_j rho^j_{A B1} (x) |j><j|_B0 (x) rho^j_{B2 C}``.

    Sites: A = 0, B = (1, 2, 3) with site 1 carrying the label, C = 4.
    """
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(2))
    parts = []
    for j in range(2):
        left = random_mixed_state([2, 2], 2, int(rng.integers(2**31)), sites=(0, 2))
        label = to_density(basis_vector([2], [j], sites=(1,)))
        right = random_mixed_state([2, 2], 2, int(rng.integers(2**31)), sites=(3, 4))
        parts.append(tensor_product(tensor_product(left, label), right))
    m = p[0] * parts[0].data + p[1] * parts[1].data
    return DensityMatrix(m, parts[0].layout, parts[0].sites, check=False), (0,), (1, 2, 3), (4,)


def layout_of(n: int, d: int = 2) -> SystemLayout:
    return SystemLayout.from_dims([d] * n)
