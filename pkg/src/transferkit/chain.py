"""Translation-invariant chain models: interval Hamiltonians, rescaling, blocking."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import require_bytes
from .operator_core import assert_hermitian, hermitize, kron, op_norm, two_site_op

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
ID2 = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class ChainModel:
    """A 2-local translation-invariant chain: local dimension d, bond term h, inverse temperature beta.

    block_factor records how many original sites one model site represents
    (1 for plain models, >1 after blocking), so that per-original-site
    quantities can be recovered downstream.
    """

    local_dim: int
    h: np.ndarray
    beta: float = 1.0
    block_factor: int = 1
    h_norm: float = field(init=False)

    def __post_init__(self):
        d = self.local_dim
        if d < 2:
            raise ValueError(f"local_dim must be >= 2, got {d}")
        h = np.asarray(self.h, dtype=complex)
        if h.shape != (d * d, d * d):
            raise ValueError(f"h must be {d * d}x{d * d} for local_dim {d}, got {h.shape}")
        assert_hermitian(h, "bond term h")
        if not (self.beta > 0.0) or not np.isfinite(self.beta):
            raise ValueError(f"beta must be finite and positive, got {self.beta}")
        object.__setattr__(self, "h", hermitize(h))
        object.__setattr__(self, "h_norm", op_norm(self.h))


def build_interval_hamiltonian(model: ChainModel, a: int, b: int) -> np.ndarray:
    """H_[a,b] = sum of bond terms on (i, i+1), i = a..b-1.

    Translation covariant by construction: only the length b-a+1 enters.
    """
    if b < a + 1:
        raise ValueError(f"interval [{a},{b}] must contain at least 2 sites")
    n = b - a + 1
    d = model.local_dim
    dim = d**n
    require_bytes(2 * 16.0 * dim * dim, f"interval Hamiltonian on {n} sites (dim {dim})")
    h_full = np.zeros((dim, dim), dtype=complex)
    for i in range(n - 1):
        h_full += two_site_op(model.h, i, i + 1, n, d)
    return h_full


def rescale_to_unit_beta(model: ChainModel) -> ChainModel:
    """Fold beta into the bond term: f_beta(h) = (1/beta) f_1(beta*h).

    Downstream free energies computed from the returned model must be divided
    by the original beta.
    """
    if model.beta == 1.0:
        return model
    return ChainModel(model.local_dim, model.beta * model.h, beta=1.0, block_factor=model.block_factor)


def block_sites(h_terms, cell_size: int, local_dim: int | None = None, beta: float = 1.0) -> ChainModel:
    """Merge cell_size original sites into one blocked site of dimension d^cell_size.

    h_terms lists the 2-site bond terms of a periodic pattern: bond (j, j+1) of
    the original chain carries h_terms[(j-1) % len(h_terms)] (1-based j). The
    blocked bond term collects all intra-cell bonds of the left cell plus the
    single inter-cell bond, so the blocked chain on n' blocks reproduces the
    original chain on cell_size*n' sites up to the intra-cell bonds of the
    last block.
    """
    terms = [np.asarray(t, dtype=complex) for t in h_terms]
    if not terms:
        raise ValueError("h_terms must be non-empty")
    p = len(terms)
    b = int(cell_size)
    if b < 2 or b % 2 != 0:
        raise ValueError(f"cell_size must be even and >= 2, got {cell_size}")
    if b % p != 0:
        raise ValueError(f"pattern period {p} does not divide cell_size {b} (misaligned cell)")
    d = local_dim
    if d is None:
        d = int(round(np.sqrt(terms[0].shape[0])))
    for t in terms:
        if t.shape != (d * d, d * d):
            raise ValueError(f"each term must be {d * d}x{d * d}")
        assert_hermitian(t, "blocking bond term")
    dim_blocked = d**b
    require_bytes(2 * 16.0 * (dim_blocked**4), f"blocked bond term of dimension {dim_blocked**2}")
    h_blocked = np.zeros((dim_blocked**2, dim_blocked**2), dtype=complex)
    for j in range(1, b + 1):  # bonds (j, j+1) in a 2b-site window; j = b is the inter-cell bond
        h_blocked += two_site_op(terms[(j - 1) % p], j - 1, j, 2 * b, d)
    return ChainModel(dim_blocked, h_blocked, beta=beta, block_factor=b)


def zero_model(local_dim: int = 2, beta: float = 1.0) -> ChainModel:
    d = local_dim
    return ChainModel(d, np.zeros((d * d, d * d), dtype=complex), beta=beta)


def ising_model(coupling: float = 1.0, beta: float = 1.0) -> ChainModel:
    """Classical Ising chain, h = -J * sigma^z (x) sigma^z (diagonal bond term)."""
    return ChainModel(2, -coupling * kron(SIGMA_Z, SIGMA_Z), beta=beta)


def xy_coupling_term(strength: float) -> np.ndarray:
    """-(strength/4) (sigma^x sigma^x + sigma^y sigma^y), the spin-1/2 XY bond."""
    return -(strength / 4.0) * (kron(SIGMA_X, SIGMA_X) + kron(SIGMA_Y, SIGMA_Y))


def xy_model(beta_coupling: float, gamma: float = 1.0) -> ChainModel:
    """Dimerized XY chain with bond strengths alternating 1 : gamma, both scaled by beta_coupling.

    Follows the convention that the coupling carries the inverse temperature:
    the returned model is at beta = 1 and free energies computed from it are
    the log-partition function per site, beta*f_beta. For gamma != 1 the chain
    is 2-periodic and is returned blocked (local dimension 4, block_factor 2).
    """
    h1 = xy_coupling_term(beta_coupling)
    if gamma == 1.0:
        return ChainModel(2, h1, beta=1.0)
    h2 = xy_coupling_term(beta_coupling * gamma)
    return block_sites([h1, h2], cell_size=2, local_dim=2, beta=1.0)
