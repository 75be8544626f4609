"""Density matrices on blocks of chain sites."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .operator_core import assert_hermitian, hermitize, partial_trace

TRACE_TOL = 1e-12


@dataclass(frozen=True)
class DensityMatrix:
    """PSD, unit-trace operator on n_sites factors of dimension local_dim each."""

    matrix: np.ndarray
    n_sites: int
    local_dim: int

    def __post_init__(self):
        d, n = self.local_dim, self.n_sites
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (d**n, d**n):
            raise ValueError(f"matrix shape {m.shape} does not match {d}^{n}")
        assert_hermitian(m, "density matrix")
        m = hermitize(m)
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise DomainError(f"density matrix trace {tr} deviates from 1 beyond {TRACE_TOL}")
        w = np.linalg.eigvalsh(m)
        if w[0] < -1e-12 * (1.0 + w[-1]):
            raise DomainError(f"density matrix not PSD within tolerance: lambda_min = {w[0]:.3e}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.local_dim**self.n_sites

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def traced(self, traced_sites) -> "DensityMatrix":
        """Partial trace over the given sites (1-based)."""
        traced = sorted(set(traced_sites))
        out = partial_trace(self.matrix, self.local_dim, self.n_sites, traced)
        return DensityMatrix(out, self.n_sites - len(traced), self.local_dim)

    def keep(self, kept_sites) -> "DensityMatrix":
        """Marginal on the given sites (1-based), relative order preserved."""
        kept = set(kept_sites)
        return self.traced([s for s in range(1, self.n_sites + 1) if s not in kept])


def project_to_density(matrix: np.ndarray, n_sites: int, local_dim: int) -> tuple[DensityMatrix, float]:
    """Hermitize, clip negative eigenvalues, renormalize; also return the projection distance."""
    m = hermitize(np.asarray(matrix, dtype=complex))
    w, v = np.linalg.eigh(m)
    w_clip = np.clip(w, 0.0, None)
    tr = w_clip.sum()
    if tr <= 0:
        raise DomainError("matrix has no positive part; cannot project to a density matrix")
    proj = hermitize((v * (w_clip / tr)) @ v.conj().T)
    distance = float(np.sum(np.abs(w - w_clip)) + abs(tr - w.sum()))
    return DensityMatrix(proj, n_sites, local_dim), distance
