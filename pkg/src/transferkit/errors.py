"""Exception types and the shared memory-budget accounting."""

from __future__ import annotations

import os

DEFAULT_MEM_BUDGET_MB = 2048
_ENV_VAR = "TRANSFERKIT_MEM_BUDGET_MB"


class TransferKitError(Exception):
    """Base class for all package-specific errors."""


class HermiticityError(TransferKitError, ValueError):
    """An operator that must be Hermitian is not, beyond tolerance."""


class DomainError(TransferKitError, ValueError):
    """Input outside the mathematical domain (e.g. indefinite matrix where positive definite is required)."""


class ResourceBudgetError(TransferKitError, MemoryError):
    """A requested dense computation exceeds the configured memory budget."""


class NumericalBreakdownError(TransferKitError, ArithmeticError):
    """An iterate left the positive cone beyond tolerance or produced non-finite values."""


class OracleValidationError(TransferKitError, AssertionError):
    """A dual-validated reference oracle disagreed with its cross-check."""


def mem_budget_bytes() -> int:
    """Current memory budget in bytes; overridable via TRANSFERKIT_MEM_BUDGET_MB."""
    raw = os.environ.get(_ENV_VAR, "")
    try:
        mb = int(raw) if raw else DEFAULT_MEM_BUDGET_MB
    except ValueError:
        mb = DEFAULT_MEM_BUDGET_MB
    return mb * 2**20


def require_bytes(nbytes: float, what: str) -> None:
    """Raise ResourceBudgetError if nbytes exceeds the configured budget."""
    budget = mem_budget_bytes()
    if nbytes > budget:
        raise ResourceBudgetError(
            f"{what} needs ~{nbytes / 2**20:.0f} MiB, over the {budget / 2**20:.0f} MiB budget "
            f"(raise {_ENV_VAR} to override)"
        )
