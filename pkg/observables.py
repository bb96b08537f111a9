"""Cavity photon statistics and spin excitations along a trajectory."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.stats import pearsonr

try:
    from .channels import ChannelSpec
    from .config import OBSERVABLE_DEFAULTS, SOLVER_DEFAULTS
    from .errors import UndefinedObservableError
    from .evolver import PhotonCorrelator, TimeGrid, evolve, heisenberg_photon_correlator, regression_photon_correlator
    from .hilbert import DensityMatrix, Operator, SpaceLayout, boson_ops, number_operator, spin_site_op
except ImportError:
    from channels import ChannelSpec
    from config import OBSERVABLE_DEFAULTS, SOLVER_DEFAULTS
    from errors import UndefinedObservableError
    from evolver import PhotonCorrelator, TimeGrid, evolve, heisenberg_photon_correlator, regression_photon_correlator
    from hilbert import DensityMatrix, Operator, SpaceLayout, boson_ops, number_operator, spin_site_op

logger = logging.getLogger(__name__)

__all__ = [
    "ObservableSeries",
    "CorrelationContext",
    "series_names",
    "photon_number",
    "spin_excitation",
    "total_excitation",
    "g2_zero",
    "g2_tau",
    "mandel_q",
    "bunching_indicator",
    "complementarity",
    "first_deviation_time",
]


@dataclass(slots=True)
class ObservableSeries:
    name: str
    times: NDArray[np.float64]
    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.times.shape != self.values.shape:
            raise ValueError(f"series {self.name!r}: {self.times.shape[0]} times but {self.values.shape[0]} values")
        if not np.all(np.isfinite(self.values)):
            raise ValueError(f"series {self.name!r} holds non-finite values")


def series_names(n_spins: int) -> list[str]:
    """Canonical column names of the photon/spin series."""

    return ["n_photon", *(f"exc_{k}" for k in range(1, n_spins + 1)), "exc_total", "g2_0", "mandel_q"]


@lru_cache(maxsize=16)
def _operators(layout: SpaceLayout) -> dict[str, Operator]:
    a, a_dag = boson_ops(layout)
    return {"n": number_operator(layout), "n2": a_dag @ a_dag @ a @ a}


@lru_cache(maxsize=16)
def _spin_operators(layout: SpaceLayout) -> tuple[Operator, ...]:
    return tuple(spin_site_op(layout, k, "plus") @ spin_site_op(layout, k, "minus") for k in range(1, layout.n_spins + 1))


def photon_number(rho: DensityMatrix, layout: SpaceLayout) -> float:
    return _operators(layout)["n"].expect(rho).real


def spin_excitation(rho: DensityMatrix, layout: SpaceLayout, k: int) -> float:
    """<sigma^+_k sigma^-_k> for spin ``k`` (1-based)."""

    if not 1 <= k <= layout.n_spins:
        raise IndexError(f"spin index {k} outside 1..{layout.n_spins}")
    return _spin_operators(layout)[k - 1].expect(rho).real


def total_excitation(rho: DensityMatrix, layout: SpaceLayout) -> float:
    spins = sum(op.expect(rho).real for op in _spin_operators(layout))
    return spins + (photon_number(rho, layout) if layout.has_cavity else 0.0)


def _checked_photon_number(rho: DensityMatrix, layout: SpaceLayout, threshold: float) -> float:
    n = photon_number(rho, layout)
    if n <= threshold:
        raise UndefinedObservableError(f"photon number {n:.3e} is below {threshold:.1e}; g2 is undefined")
    return n


def g2_zero(rho: DensityMatrix, layout: SpaceLayout, threshold: float = OBSERVABLE_DEFAULTS["g2_threshold"]) -> float:
    """<a^+ a^+ a a> / <a^+ a>^2."""

    n = _checked_photon_number(rho, layout, threshold)
    return _operators(layout)["n2"].expect(rho).real / (n * n)


def mandel_q(rho: DensityMatrix, layout: SpaceLayout, threshold: float = OBSERVABLE_DEFAULTS["g2_threshold"]) -> float:
    return photon_number(rho, layout) * (g2_zero(rho, layout, threshold) - 1.0)


@dataclass
class CorrelationContext:
    """Everything needed to evaluate two-time correlators of one run.

    States at grid times are cached; for time-independent channels the
    numerator comes from one Heisenberg-picture evolution per tau, otherwise
    from a regression evolution of a rho(t) a^+.
    """

    rho0: DensityMatrix
    H: Operator
    channel: ChannelSpec
    grid: TimeGrid
    layout: SpaceLayout
    rate_cap: float = SOLVER_DEFAULTS["rate_cap"]
    threshold: float = OBSERVABLE_DEFAULTS["g2_threshold"]
    _states: dict[int, DensityMatrix] = field(default_factory=dict, init=False, repr=False)
    _correlators: dict[float, PhotonCorrelator] = field(default_factory=dict, init=False, repr=False)

    def state_at(self, t: float) -> DensityMatrix:
        step = self.grid.step_of(t)
        if step in self._states:
            return self._states[step]
        earlier = [s for s in self._states if s < step]
        start = max(earlier) if earlier else 0
        rho = self._states.get(start, np.asarray(self.rho0, dtype=complex))
        if step > start:
            segment = TimeGrid(self.grid.time(start), t, self.grid.dt, step - start)
            rho = evolve(
                rho, self.H, self.channel, segment,
                keep_states=False, rate_cap=self.rate_cap, monitor_positivity=False,
            ).final_state
        self._states[step] = rho
        return rho

    def heisenberg(self, tau: float) -> Optional[PhotonCorrelator]:
        """Cached a^+ X(tau) a for constant channels, None otherwise."""

        if self.channel.time_dependent:
            return None
        if tau not in self._correlators:
            logger.info("building Heisenberg-picture correlator for tau=%g", tau)
            self._correlators[tau] = heisenberg_photon_correlator(
                self.H, self.channel, self.layout, tau, self.grid.dt, self.rate_cap
            )
        return self._correlators[tau]

    def correlator(self, t: float, tau: float, rho_t: Optional[DensityMatrix] = None) -> float:
        """<a^+(t) a^+(t+tau) a(t+tau) a(t)>."""

        if tau < 0:
            raise ValueError(f"tau must be non-negative, got {tau}")
        rho_t = self.state_at(t) if rho_t is None else rho_t
        if tau == 0:
            return _operators(self.layout)["n2"].expect(rho_t).real
        fast = self.heisenberg(tau)
        if fast is not None:
            return fast(rho_t)
        return regression_photon_correlator(
            rho_t, self.H, self.channel, self.layout, t, tau, self.grid.dt, self.rate_cap
        )


def g2_tau(context: CorrelationContext, t: float, tau: float, rho_t: Optional[DensityMatrix] = None) -> float:
    """Two-time correlator over <a^+ a (t)>^2."""

    rho_t = context.state_at(t) if rho_t is None else rho_t
    n = _checked_photon_number(rho_t, context.layout, context.threshold)
    return context.correlator(t, tau, rho_t) / (n * n)


def bunching_indicator(
    context: CorrelationContext, t: float, tau: float, rho_t: Optional[DensityMatrix] = None
) -> float:
    """g2(0) - g2(tau); negative means anti-bunched at (t, tau)."""

    rho_t = context.state_at(t) if rho_t is None else rho_t
    return g2_zero(rho_t, context.layout, context.threshold) - g2_tau(context, t, tau, rho_t)


def complementarity(times: Sequence[float], photon: Sequence[float], spin_total: Sequence[float]) -> float:
    """Pearson correlation of the time derivatives of two series."""

    times = np.asarray(times, dtype=float)
    d_photon = np.gradient(np.asarray(photon, dtype=float), times)
    d_spin = np.gradient(np.asarray(spin_total, dtype=float), times)
    if np.ptp(d_photon) == 0 or np.ptp(d_spin) == 0:
        raise UndefinedObservableError("a constant series has no correlation")
    return float(pearsonr(d_photon, d_spin)[0])


def first_deviation_time(series: ObservableSeries, threshold: float = 0.05) -> Optional[float]:
    """First sample time where |value - value(0)| exceeds ``threshold``."""

    if series.values.size == 0:
        return None
    hits = np.flatnonzero(np.abs(series.values - series.values[0]) > threshold)
    return float(series.times[hits[0]]) if hits.size else None
