"""Exception types raised by the simulation engine and mapped to CLI exit codes."""

from __future__ import annotations

from typing import Any, Iterable, Optional

__all__ = [
    "ConfigError",
    "SimulationError",
    "RatePoleError",
    "TruncationError",
    "NumericalAbort",
    "QuasiProbabilityError",
    "UndefinedObservableError",
    "exit_code_for",
]


class ConfigError(ValueError):
    """Invalid experiment description; carries every violation found."""

    def __init__(self, problems: Iterable[str]) -> None:
        self.problems = list(problems)
        super().__init__("; ".join(self.problems) or "invalid configuration")


class SimulationError(RuntimeError):
    """Base class for numerical failures during a run."""


class RatePoleError(SimulationError):
    def __init__(self, kind: str, t: float, pole_estimate: Optional[float] = None) -> None:
        self.kind = kind
        self.t = t
        self.pole_estimate = pole_estimate if pole_estimate is not None else t
        super().__init__(f"{kind} rate hits a pole near t={self.pole_estimate:.12g} (evaluated at t={t:.12g})")


class TruncationError(SimulationError):
    """Fock truncation too small for the requested state or dynamics."""


class NumericalAbort(SimulationError):
    def __init__(self, message: str, diagnostics: Optional[dict[str, Any]] = None) -> None:
        self.diagnostics = diagnostics or {}
        super().__init__(message)


class QuasiProbabilityError(SimulationError):
    """Quasi-probability evaluation left a non-negligible imaginary part."""


class UndefinedObservableError(ValueError):
    """Ratio observable requested on a (near-)vacuum cavity field."""


def exit_code_for(exc: BaseException) -> int:
    """CLI exit status: 1 for configuration, 2 for numerical, 3 for I/O failures."""

    if isinstance(exc, ConfigError):
        return 1
    if isinstance(exc, OSError):
        return 3
    return 2
