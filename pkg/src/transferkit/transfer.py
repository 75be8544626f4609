"""The finite-dimensional noncommutative transfer map and its spectral solver.

For a window of L sites the boundary expansional is

    E = exp(-H_[1,L]/2) * exp(+H_[2,L]/2),

and the transfer map acts on operators Q over L-1 sites as

    transfer(Q)  = tr_L( E (1 (x) Q) E^dag ),   Q placed on sites [2, L],
    adjoint(X)   = tr_1( E^dag (X (x) 1) E ),   X placed on sites [1, L-1],

with outputs read on sites [1, L-1] and [2, L] respectively; translation
invariance identifies both with the same (L-1)-site operator space, so no data
permutation is needed. In the commuting case E reduces to exp(-h_{12}/2) and
transfer(.) is the classical transfer matrix acting on the diagonal sector.

Both maps are applied in Kraus form: grouping the row index of E as
(sites 1..L-1, site L) and the column index as (site 1, sites 2..L) gives d^2
blocks G[a, s] with transfer(Q) = sum_{a,s} G[a,s] Q G[a,s]^dag, which keeps
the application positivity-preserving entrywise and costs O(d^2 n0^3) per call.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .chain import ChainModel, build_interval_hamiltonian
from .errors import NumericalBreakdownError, require_bytes
from .operator_core import hermitize, trace_norm
from .states import DensityMatrix

logger = logging.getLogger(__name__)

MATRIX_FREE = "matrix_free"
DENSE_SUPEROPERATOR = "dense_superoperator"

_EPS = np.finfo(float).eps


@dataclass
class TransferMap:
    """The transfer map for a rescaled (beta = 1) model at window size L."""

    model: ChainModel
    L: int
    G: np.ndarray                      # Kraus blocks, shape (d, d, n0, n0)
    sigma_min_bound: float             # analytic lower bound on sigma_min(E)
    mode: str = MATRIX_FREE
    _superop: list | None = field(default=None, repr=False)

    @property
    def d(self) -> int:
        return self.model.local_dim

    @property
    def n_op(self) -> int:
        """Dimension d^(L-1) of the operator space the map acts on."""
        return self.d ** (self.L - 1)

    @property
    def E(self) -> np.ndarray:
        """The boundary expansional as a dense d^L x d^L matrix."""
        n0, d = self.n_op, self.d
        return self.G.transpose(2, 0, 1, 3).reshape(n0 * d, d * n0)


@dataclass
class SpectralResult:
    radius: float
    eigenvector: DensityMatrix
    iterations: int
    residual: float
    hilbert_gap: float
    converged: bool
    gap_history: list[float] = field(default_factory=list)


def _right_mult_blocked(m: np.ndarray, f: np.ndarray, d: int, n0: int) -> np.ndarray:
    """m @ kron(I_d, f) using the block structure of the right factor."""
    n1 = d * n0
    return np.matmul(m.reshape(n1, d, n0), f).reshape(n1, n1)


def build_E(model: ChainModel, L: int) -> TransferMap:
    """Construct the transfer map for a beta=1 model at window size L.

    The two exponentials come from eigendecompositions of H_[1,L] and of
    H_[1,L-1] (the latter embedded as I (x) . by translation covariance). The
    product is accumulated in K steps E(t+s) = exp(-s H1) E(t) exp(+s H2) with
    s*||H|| <= 1/2, so intermediates stay at the scale of genuine E(t) factors
    instead of exp(||H||/2); this is exact in exact arithmetic and is what
    keeps large-beta runs at full precision.
    """
    if L < 2:
        raise ValueError(f"window size L must be >= 2, got {L}")
    if model.beta != 1.0:
        raise ValueError("build_E expects a rescaled model (beta = 1); use rescale_to_unit_beta")
    d = model.local_dim
    n1 = d**L
    n0 = d ** (L - 1)
    require_bytes(6 * 16.0 * n1 * n1, f"transfer map build at d={d}, L={L} (dim {n1})")

    if model.h_norm == 0.0:
        e_mat = np.eye(n1, dtype=complex)
        sigma_bound = 1.0
    else:
        h1 = build_interval_hamiltonian(model, 1, L)
        w1, v1 = np.linalg.eigh(h1)
        del h1
        if L >= 3:
            h0 = build_interval_hamiltonian(model, 1, L - 1)
            w0, v0 = np.linalg.eigh(h0)
            del h0
        else:
            w0 = np.zeros(d)
            v0 = np.eye(d, dtype=complex)
        scale = max(-w1[0], w0[-1], 1e-300)
        n_steps = max(1, math.ceil(scale))
        s = 0.5 / n_steps
        a_s = hermitize((v1 * np.exp(-s * w1)) @ v1.conj().T)
        f_s = hermitize((v0 * np.exp(s * w0)) @ v0.conj().T)
        del v1, v0
        e_mat = a_s.copy()
        e_mat = _right_mult_blocked(e_mat, f_s, d, n0)
        for _ in range(n_steps - 1):
            e_mat = a_s @ e_mat
            e_mat = _right_mult_blocked(e_mat, f_s, d, n0)
        sigma_bound = float(np.exp(-0.5 * w1[-1] + 0.5 * w0[0]))
        if sigma_bound == 0.0:
            logger.warning("invertibility bound for E underflowed at d=%d, L=%d", d, L)

    g = np.ascontiguousarray(e_mat.reshape(n0, d, d, n0).transpose(1, 2, 0, 3))
    return TransferMap(model=model, L=L, G=g, sigma_min_bound=sigma_bound)


def apply_transfer(t: TransferMap, q: np.ndarray) -> np.ndarray:
    """transfer(Q) = tr_L(E (1 (x) Q) E^dag) = sum_{a,s} G[a,s] Q G[a,s]^dag."""
    n0 = t.n_op
    if q.shape != (n0, n0):
        raise ValueError(f"operator must be {n0}x{n0} (L-1 = {t.L - 1} sites), got {q.shape}")
    if t.mode == DENSE_SUPEROPERATOR:
        m = dense_superoperator(t)
        return (m @ q.reshape(-1, order="F")).reshape(n0, n0, order="F")
    tmp = np.matmul(t.G, q)
    return np.matmul(tmp, t.G.conj().swapaxes(-1, -2)).sum(axis=(0, 1))


def apply_adjoint(t: TransferMap, x: np.ndarray) -> np.ndarray:
    """adjoint(X) = tr_1(E^dag (X (x) 1) E) = sum_{a,s} G[a,s]^dag X G[a,s]."""
    n0 = t.n_op
    if x.shape != (n0, n0):
        raise ValueError(f"operator must be {n0}x{n0} (L-1 = {t.L - 1} sites), got {x.shape}")
    if t.mode == DENSE_SUPEROPERATOR:
        m = dense_superoperator(t, adjoint=True)
        return (m @ x.reshape(-1, order="F")).reshape(n0, n0, order="F")
    tmp = np.matmul(t.G.conj().swapaxes(-1, -2), x)
    return np.matmul(tmp, t.G).sum(axis=(0, 1))


def dense_superoperator(t: TransferMap, adjoint: bool = False) -> np.ndarray:
    """Matrix M with M vec(Q) = vec(transfer(Q)) under column-stacking vec.

    vec stacks columns: vec(Q)[j*n + i] = Q[i, j], so vec(A Q B) =
    (B^T (x) A) vec(Q) and the Kraus form gives M = sum conj(G) (x) G.
    """
    cache_idx = 1 if adjoint else 0
    if t._superop is None:
        t._superop = [None, None]
    if t._superop[cache_idx] is None:
        n0 = t.n_op
        require_bytes(2 * 16.0 * (n0**4), f"dense superoperator of dimension {n0**2}")
        m = np.zeros((n0 * n0, n0 * n0), dtype=complex)
        for a in range(t.d):
            for s in range(t.d):
                g = t.G[a, s]
                if adjoint:
                    m += np.kron(g.T, g.conj().T)
                else:
                    m += np.kron(g.conj(), g)
        t._superop[cache_idx] = m
    return t._superop[cache_idx]


def _floored_gap(x_new: np.ndarray, x_old: np.ndarray, lmax_new: float, lmax_old: float, n: int) -> float:
    """Hilbert projective distance of the pencil with an eps-level spectral floor.

    At large beta*||h||*L the iterates' condition exceeds 1/eps and the raw
    metric is numerically undefined; the floor only binds in that regime.
    """
    delta_new = n * _EPS * max(lmax_new, 1e-300)
    delta_old = n * _EPS * max(lmax_old, 1e-300)
    eye = np.eye(n)
    try:
        w = scipy.linalg.eigh(x_new + delta_new * eye, x_old + delta_old * eye, eigvals_only=True)
    except (scipy.linalg.LinAlgError, np.linalg.LinAlgError):
        return math.inf
    if w[0] <= 0:
        return math.inf
    return float(np.log(w[-1] / w[0]))


def spectral_radius(t: TransferMap, tol: float = 1e-12, max_iter: int | None = None) -> SpectralResult:
    """Dominant eigenvalue and eigenvector of the transfer map by cone power iteration.

    Iterates x_{k+1} = transfer(x_k)/tr transfer(x_k) from the maximally mixed
    x_0, re-Hermitizing each step. Converged when both the trace-norm residual
    ||transfer(x) - r x||_1 <= tol*r and the Hilbert-metric gap between
    consecutive iterates is <= tol; each threshold is floored at its numerical
    attainability level (~n^1.5 eps r for the residual, ~n eps cond(x) for the
    gap), without which ill-conditioned eigenvectors at large beta could never
    report convergence. Non-convergence is reported in the result, not raised.
    """
    n = t.n_op
    if max_iter is None:
        max_iter = math.ceil(100 * t.L * math.log(t.d))
    x = np.eye(n, dtype=complex) / n
    lmax_old = 1.0 / n
    gap_history: list[float] = []
    radius = math.nan
    resid = math.inf
    gap = math.inf
    converged = False
    iterations = 0

    for iterations in range(1, max_iter + 1):
        y = hermitize(apply_transfer(t, x))
        radius = float(np.trace(y).real)
        if not np.isfinite(radius) or radius <= 0:
            raise NumericalBreakdownError(f"iterate trace {radius} at iteration {iterations}")
        resid = trace_norm(y - radius * x)
        x_new = y / radius
        w_new = np.linalg.eigvalsh(x_new)
        lmax_new = float(w_new[-1])
        if w_new[0] < -1e-12 * (1.0 + lmax_new):
            raise NumericalBreakdownError(
                f"iterate lost positive semidefiniteness: lambda_min = {w_new[0]:.3e}"
            )
        gap = _floored_gap(x_new, x, lmax_new, lmax_old, n)
        gap_history.append(gap)

        cond = lmax_new / max(float(w_new[0]), n * _EPS * lmax_new)
        resid_ok = resid <= max(tol, 10 * n**1.5 * _EPS) * radius
        gap_ok = gap <= max(tol, 10 * n * _EPS * cond)
        stalled = np.array_equal(x_new, x)
        x, lmax_old = x_new, lmax_new
        if resid_ok and gap_ok:
            converged = True
            break
        if stalled:
            logger.debug("power iteration stalled bitwise at iteration %d", iterations)
            break

    if not converged:
        logger.warning(
            "power iteration did not converge in %d iterations (residual %.3e, gap %.3e)",
            iterations, resid, gap,
        )
    eigenvector = DensityMatrix(x, t.L - 1, t.d)
    return SpectralResult(
        radius=radius,
        eigenvector=eigenvector,
        iterations=iterations,
        residual=resid,
        hilbert_gap=gap,
        converged=converged,
        gap_history=gap_history,
    )
