"""Dense complex-matrix primitives on tensor-product spaces.

Site convention (fixed globally): site 1 is the leftmost, slowest-varying
tensor factor in the row-major matrix representation. All Kronecker products,
partial traces and site permutations in the package compose under this rule.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import DomainError, HermiticityError, require_bytes

EXPM_TOL = 1e-9


def hermiticity_tol(x: np.ndarray) -> float:
    return 1e-10 * (1.0 + np.linalg.norm(x))


def psd_tol(x: np.ndarray) -> float:
    return 1e-12 * (1.0 + np.linalg.norm(x))


def hermitize(x: np.ndarray) -> np.ndarray:
    """Hermitian part (x + x†)/2."""
    return 0.5 * (x + x.conj().T)


def assert_hermitian(x: np.ndarray, name: str = "operator") -> None:
    """Raise HermiticityError if x deviates from x† beyond tolerance.

    The defect is measured in Frobenius norm, which upper-bounds the operator
    norm, so this check is conservative.
    """
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {x.shape}")
    defect = np.linalg.norm(x - x.conj().T)
    tol = hermiticity_tol(x)
    if defect > tol:
        i, j = np.unravel_index(np.argmax(np.abs(x - x.conj().T)), x.shape)
        raise HermiticityError(
            f"{name} is not Hermitian: ||X - X^dag|| = {defect:.3e} > {tol:.3e} "
            f"(largest asymmetry at entry ({i},{j}))"
        )


def op_norm(x: np.ndarray) -> float:
    """Operator (spectral) norm."""
    return float(np.linalg.norm(x, 2))


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with the left factor on the slower-varying index."""
    dim = a.shape[0] * b.shape[0]
    require_bytes(16.0 * dim * dim, f"kron product of dimension {dim}")
    return np.kron(a, b)


def kron_all(*mats: np.ndarray) -> np.ndarray:
    out = mats[0]
    for m in mats[1:]:
        out = kron(out, m)
    return out


def partial_trace(x: np.ndarray, local_dim: int, n_sites: int, traced_sites) -> np.ndarray:
    """Trace out the given sites (1-based) of an operator on n_sites factors.

    Kept sites retain their relative order. Trace-preserving, linear, and
    positivity-preserving.
    """
    d = local_dim
    if x.shape != (d**n_sites, d**n_sites):
        raise ValueError(f"matrix dim {x.shape} does not match {d}^{n_sites}")
    traced = sorted(set(int(s) for s in traced_sites))
    if any(s < 1 or s > n_sites for s in traced):
        raise ValueError(f"traced sites {traced} outside 1..{n_sites}")
    if not traced:
        return x.copy()
    keep = [s for s in range(1, n_sites + 1) if s not in set(traced)]
    tensor = x.reshape((d,) * (2 * n_sites))
    row = list(range(n_sites))
    col = [n_sites + i for i in range(n_sites)]
    for s in traced:
        col[s - 1] = row[s - 1]  # repeated label = contraction
    out_idx = [row[s - 1] for s in keep] + [col[s - 1] for s in keep]
    res = np.einsum(tensor, row + col, out_idx)
    dk = d ** len(keep)
    return res.reshape(dk, dk)


def herm_expm(h: np.ndarray, scale: float = 1.0) -> np.ndarray:
    """exp(scale*h) of a Hermitian h via full eigendecomposition."""
    assert_hermitian(h, "herm_expm input")
    if not np.any(h):
        return np.eye(h.shape[0], dtype=complex)
    w, v = np.linalg.eigh(h)
    return hermitize((v * np.exp(scale * w)) @ v.conj().T)


def _check_positive_definite(x: np.ndarray, name: str) -> np.ndarray:
    assert_hermitian(x, name)
    w = np.linalg.eigvalsh(x)
    if w[0] <= psd_tol(x):
        raise DomainError(f"{name} not positive definite: lambda_min = {w[0]:.3e}")
    return w


def hilbert_metric(x: np.ndarray, y: np.ndarray) -> float:
    """Hilbert projective distance log(sup(x/y)/inf(x/y)) on the PD cone.

    sup(x/y) is the largest eigenvalue of y^{-1/2} x y^{-1/2}, computed as the
    top generalized eigenvalue of the pencil (x, y); inf(x/y) is the smallest.
    """
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch {x.shape} vs {y.shape}")
    _check_positive_definite(x, "hilbert_metric x")
    _check_positive_definite(y, "hilbert_metric y")
    w = scipy.linalg.eigh(x, y, eigvals_only=True)
    return float(np.log(w[-1] / w[0]))


def trace_distance(x: np.ndarray, y: np.ndarray) -> float:
    """Trace norm ||x - y||_1 for Hermitian x, y (sum of |eigenvalues| of the difference)."""
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch {x.shape} vs {y.shape}")
    assert_hermitian(x, "trace_distance x")
    assert_hermitian(y, "trace_distance y")
    w = np.linalg.eigvalsh(hermitize(x - y))
    return float(np.sum(np.abs(w)))


def trace_norm(x: np.ndarray) -> float:
    """||x||_1 of a Hermitian matrix."""
    return float(np.sum(np.abs(np.linalg.eigvalsh(hermitize(x)))))


def permute_sites(x: np.ndarray, perm, local_dim: int) -> np.ndarray:
    """Reorder tensor factors: output site k is input site perm[k] (0-based)."""
    n = len(perm)
    d = local_dim
    if x.shape != (d**n, d**n):
        raise ValueError("matrix dim does not match permutation length")
    perm = list(perm)
    if sorted(perm) != list(range(n)):
        raise ValueError(f"not a permutation: {perm}")
    t = x.reshape((d,) * (2 * n))
    return t.transpose(perm + [p + n for p in perm]).reshape(d**n, d**n)


def two_site_op(h: np.ndarray, i: int, j: int, n_sites: int, local_dim: int) -> np.ndarray:
    """Embed a two-site operator with its first leg on site i, second on site j (0-based, i != j)."""
    d = local_dim
    if h.shape != (d * d, d * d):
        raise ValueError(f"two-site operator must be {d * d}x{d * d}")
    if i == j or not (0 <= i < n_sites) or not (0 <= j < n_sites):
        raise ValueError(f"invalid site pair ({i}, {j}) for {n_sites} sites")
    full = kron(h, np.eye(d ** (n_sites - 2), dtype=complex))
    # full currently has h's legs on factors 0 and 1; route them to i and j
    src = [i, j] + [s for s in range(n_sites) if s not in (i, j)]
    perm = [0] * n_sites
    for pos, s in enumerate(src):
        perm[s] = pos
    return permute_sites(full, perm, d)
