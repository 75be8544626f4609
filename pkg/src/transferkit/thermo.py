"""Top-level algorithms: free energy, Gibbs marginals, observables, entropic quantities."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

import numpy as np

from .chain import ChainModel, rescale_to_unit_beta
from .errors import mem_budget_bytes
from .operator_core import assert_hermitian, op_norm, permute_sites, two_site_op
from .states import DensityMatrix, project_to_density
from .transfer import SpectralResult, build_E, spectral_radius

logger = logging.getLogger(__name__)

PRACTICAL_C1 = 2.0
PRACTICAL_C2 = 0.75


@dataclass(frozen=True)
class FreeEnergyEstimate:
    """Free energy per site with the spectral diagnostics that produced it."""

    value: float
    L: int
    beta: float
    spectral: SpectralResult
    wall_time: float

    @property
    def converged(self) -> bool:
        return self.spectral.converged


def budget_window(local_dim: int) -> int:
    """Largest window L whose dense transfer build fits the memory budget."""
    budget = mem_budget_bytes()
    L = 2
    while 6 * 16.0 * local_dim ** (2 * (L + 1)) <= budget:
        L += 1
    return L


def choose_L(
    epsilon: float,
    beta: float = 1.0,
    mode: str = "practical",
    budget: int | None = None,
    local_dim: int = 2,
    c_const: float | None = None,
    g_const: float | None = None,
) -> int:
    """Window size for a target error epsilon in (0, 1/e).

    practical (default): ceil(c1 + c2*log10(1/eps)) capped at the memory
    budget's largest window. theoretical: the explicit formula
    ceil((log(1/eps)*(2 + 2 exp(2C-1)) + 2 log G) / log log(1/eps)) for
    user-supplied constants C and G, where C is understood for the rescaled
    coupling beta*h (no universal value exists).
    """
    if not (0.0 < epsilon < 1.0 / math.e):
        raise ValueError(f"epsilon must lie in (0, 1/e), got {epsilon}")
    if mode == "theoretical":
        if c_const is None or g_const is None:
            raise ValueError("theoretical mode needs explicit constants c_const and g_const")
        x = math.log(1.0 / epsilon)
        L = math.ceil((x * (2.0 + 2.0 * math.exp(2.0 * c_const - 1.0)) + 2.0 * math.log(g_const)) / math.log(x))
        return max(2, L)
    if mode != "practical":
        raise ValueError(f"unknown mode {mode!r}")
    cap = budget if budget is not None else budget_window(local_dim)
    L = math.ceil(PRACTICAL_C1 + PRACTICAL_C2 * math.log10(1.0 / epsilon))
    return max(2, min(L, cap))


def free_energy(model: ChainModel, L: int, tol: float = 1e-12, max_iter: int | None = None) -> FreeEnergyEstimate:
    """Free energy per site: rescale to beta=1, build the window-L transfer map,
    take -log(spectral radius)/beta. Solver non-convergence is reported inside
    the result, not raised."""
    t0 = time.perf_counter()
    rescaled = rescale_to_unit_beta(model)
    tmap = build_E(rescaled, L)
    spec = spectral_radius(tmap, tol=tol, max_iter=max_iter)
    value = -math.log(spec.radius) / model.beta
    wall = time.perf_counter() - t0
    envelope = model.h_norm + math.log(model.local_dim) / model.beta
    if abs(value) > envelope + 1e-9:
        logger.warning("free energy %.6g outside sanity envelope %.6g", value, envelope)
    return FreeEnergyEstimate(value=value, L=L, beta=model.beta, spectral=spec, wall_time=wall)


def gibbs_marginal(
    model: ChainModel,
    L: int,
    k: int,
    tol: float = 1e-12,
    max_iter: int | None = None,
    spectral: SpectralResult | None = None,
) -> DensityMatrix:
    """Marginal of the infinite-chain Gibbs state on the first k sites.

    Computed as the leading eigenvector of the window-L transfer map, traced
    down from L-1 to k sites, then projected to the PSD cone (negative
    eigenvalues clipped, renormalized). Pass a precomputed SpectralResult for
    the same (model, L) to reuse an existing solve.
    """
    if k >= L:
        raise ValueError(f"k must satisfy k <= L-1, got k={k}, L={L}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if spectral is None:
        rescaled = rescale_to_unit_beta(model)
        spectral = spectral_radius(build_E(rescaled, L), tol=tol, max_iter=max_iter)
    if not spectral.converged:
        logger.warning("marginal taken from a non-converged eigenvector (residual %.3e)", spectral.residual)
    vec = spectral.eigenvector
    if vec.n_sites != L - 1 or vec.local_dim != model.local_dim:
        raise ValueError(
            f"spectral result is for window {vec.n_sites + 1} at d={vec.local_dim}, "
            f"not L={L}, d={model.local_dim}"
        )
    reduced = vec.keep(range(1, k + 1)) if k < L - 1 else vec
    projected, distance = project_to_density(reduced.matrix, k, model.local_dim)
    if distance > 0:
        logger.debug("marginal PSD projection moved trace distance %.3e", distance)
    return projected


def two_sided_model(model: ChainModel) -> ChainModel:
    """Recast the two-sided infinite chain as a one-sided chain of doubled sites.

    Each new site carries an (up, down) pair of original sites; the new bond
    term is h' = h_{2u,1u} + h_{1d,2d} + h_{1u,1d} - h_{2u,2d}, so the summed
    chain winds at the first site and the one-sided Gibbs marginal, reordered
    by unwind_two_sided, reproduces the two-sided marginal.
    """
    d = model.local_dim
    h = model.h
    hp = (
        two_site_op(h, 2, 0, 4, d)      # bond (2u -> 1u) on the upper, reversed row
        + two_site_op(h, 1, 3, 4, d)    # bond (1d -> 2d) on the lower row
        + two_site_op(h, 0, 1, 4, d)    # winding bond (1u -> 1d), kept once
        - two_site_op(h, 2, 3, 4, d)    # cancels the (iu -> id) terms for i >= 2
    )
    return ChainModel(d * d, hp, beta=model.beta, block_factor=2 * model.block_factor)


def unwind_two_sided(rho: DensityMatrix, local_dim: int) -> DensityMatrix:
    """Reorder a k-site marginal of the recast chain into 2k physical sites.

    Input factors come in (iu, id) pairs for i = 1..k; the physical chain reads
    k_u, ..., 2_u, 1_u, 1_d, 2_d, ..., k_d from left to right.
    """
    k = rho.n_sites
    d2 = rho.local_dim
    if d2 != local_dim * local_dim:
        raise ValueError(f"recast local dimension {d2} is not {local_dim}^2")
    perm = [2 * (k - 1 - p) for p in range(k)] + [2 * (p - k) + 1 for p in range(k, 2 * k)]
    mat = permute_sites(rho.matrix, perm, local_dim)
    return DensityMatrix(mat, 2 * k, local_dim)


def pair_expectation(rho: DensityMatrix, op: np.ndarray, left_site: int) -> float:
    """<op> on the (left_site, left_site+1) pair of a density matrix (1-based)."""
    pair = rho.keep([left_site, left_site + 1])
    return float(np.trace(op @ pair.matrix).real)


def expectation_by_derivative(
    model: ChainModel,
    p: np.ndarray,
    L: int,
    epsilon: float | None = None,
    m2_bound: float = 10.0,
    tol: float = 1e-13,
    max_iter: int | None = None,
) -> float:
    """Thermal expectation of a normalized 2-site observable via a free-energy derivative.

    The perturbed chain h + eps'*p is solved at the same window and the forward
    difference (f(eps') - f(0))/eps' estimates the two-sided expectation value.
    The step balances truncation against error amplification,
    eps' = min(1, sqrt(2*delta_f/M2)) with delta_f the solver tolerance and M2
    a bound on the second derivative of the free energy (a knob: the provable
    bound is astronomically loose).
    """
    assert_hermitian(p, "observable")
    pnorm = op_norm(p)
    if pnorm > 1.0 + 1e-12:
        raise ValueError(f"observable norm {pnorm:.6g} exceeds 1; rescale it first")
    if m2_bound <= 0:
        raise ValueError("m2_bound must be positive")
    step = min(1.0, math.sqrt(2.0 * tol / m2_bound))
    predicted = 0.5 * step * m2_bound + 2.0 * tol / step
    if epsilon is not None:
        if epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if predicted > epsilon:
            logger.warning(
                "derivative step %0.3g predicts error %0.3g above target %0.3g", step, predicted, epsilon
            )
    base = free_energy(model, L, tol=tol, max_iter=max_iter)
    perturbed_model = ChainModel(
        model.local_dim, model.h + step * p, beta=model.beta, block_factor=model.block_factor
    )
    perturbed = free_energy(perturbed_model, L, tol=tol, max_iter=max_iter)
    return (perturbed.value - base.value) / step


def two_sided_energy(model: ChainModel, L: int, tol: float = 1e-12, spectral: SpectralResult | None = None) -> float:
    """Energy per bond of the two-sided chain from the recast-model marginal.

    Evaluates <h> on the winding pair (1u, 1d), the most central bond of the
    unwound marginal.
    """
    recast = two_sided_model(model)
    marg = gibbs_marginal(recast, L, 1, tol=tol, spectral=spectral)
    phys = unwind_two_sided(marg, model.local_dim)
    return pair_expectation(phys, model.h, 1)


_LOG_BASES = {"natural": 1.0, "two": math.log(2.0)}
ENTROPY_CLIP = 1e-14


def _entropy_eigs(w: np.ndarray, base: str) -> float:
    if base not in _LOG_BASES:
        raise ValueError(f"base must be one of {sorted(_LOG_BASES)}, got {base!r}")
    w = w[w > ENTROPY_CLIP]
    if w.size == 0:
        return 0.0
    return float(-(w * np.log(w)).sum() / _LOG_BASES[base])


def entropy(rho: DensityMatrix, base: str = "natural") -> float:
    """Von Neumann entropy -sum(lambda log lambda); eigenvalues below 1e-14 are treated as zero."""
    return _entropy_eigs(rho.eigenvalues(), base)


def mutual_information(rho: DensityMatrix, n_a: int, base: str = "natural") -> float:
    """I(A:B) = S(A) + S(B) - S(AB) for the split A = first n_a sites, B = the rest."""
    if not (1 <= n_a < rho.n_sites):
        raise ValueError(f"split must leave both groups nonempty, got n_a={n_a} of {rho.n_sites} sites")
    rho_a = rho.keep(range(1, n_a + 1))
    rho_b = rho.keep(range(n_a + 1, rho.n_sites + 1))
    return entropy(rho_a, base) + entropy(rho_b, base) - entropy(rho, base)


def conditional_mutual_information(
    rho: DensityMatrix,
    group_a,
    group_c,
    group_b=None,
    base: str = "natural",
) -> float:
    """I(A:C|B) = S(AB) + S(BC) - S(ABC) - S(B); B defaults to the complement of A and C.

    Nonnegative (strong subadditivity) up to numerical noise.
    """
    sites = set(range(1, rho.n_sites + 1))
    a = set(int(s) for s in group_a)
    c = set(int(s) for s in group_c)
    b = sites - a - c if group_b is None else set(int(s) for s in group_b)
    if not a or not c:
        raise ValueError("groups A and C must be nonempty")
    if a & c or a & b or c & b:
        raise ValueError("groups must be pairwise disjoint")
    if a | b | c != sites:
        raise ValueError("groups must cover all sites of the marginal")
    s_b = entropy(rho.keep(b), base) if b else 0.0
    s_ab = entropy(rho.keep(a | b), base)
    s_bc = entropy(rho.keep(b | c), base)
    s_abc = entropy(rho, base)
    return s_ab + s_bc - s_abc - s_b
