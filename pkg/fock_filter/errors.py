"""Exceptions raised by fock-filter."""

from __future__ import annotations

from typing import Any


class FockFilterError(Exception):
    """Base class for all fock-filter errors."""


class ModeError(FockFilterError, ValueError):
    """Raised when a mode label is unknown or lacks a required partner."""

    def __init__(self, label: Any, reason: str) -> None:
        self.label = label
        self.reason = reason
        super().__init__(f"Mode {str(label)!r}: {reason}")


class NetworkError(FockFilterError, ValueError):
    """Raised for non-unitary networks or networks applied to the wrong modes."""


class ZeroHeraldError(FockFilterError):
    """Raised when post-selection in the circuit can never succeed."""

    def __init__(self, stage: str) -> None:
        self.stage = stage
        super().__init__(
            f"Herald probability is zero at stage {stage!r}. "
            f"Check the reflectivity and polarization settings."
        )


class UnboundedRatioError(FockFilterError, ZeroDivisionError):
    """Raised when a ratio has a vanishing denominator."""

    def __init__(self, quantity: str, detail: str) -> None:
        self.quantity = quantity
        super().__init__(f"{quantity} is unbounded: {detail}")


class DipFitError(FockFilterError):
    """Raised when scan data cannot be fitted at all."""


class ReconstructionError(FockFilterError):
    """Raised when maximum-likelihood reconstruction fails."""

    def __init__(
        self,
        message: str,
        *,
        iterations: int | None = None,
        loss: float | None = None,
        detail: str | None = None,
    ) -> None:
        self.iterations = iterations
        self.loss = loss
        self.detail = detail
        parts = [message]
        if iterations is not None:
            parts.append(f"iterations={iterations}")
        if loss is not None:
            parts.append(f"loss={loss:.6g}")
        if detail:
            parts.append(detail)
        super().__init__("; ".join(parts))
