"""Fixed-step RK4 integration of the matrix master equation.

The generator is never formed as a superoperator. Writing
K = -iH - 1/2 sum_k r_k L_k^+ L_k, the right-hand side is

    d rho/dt = K rho + rho K^+ + sum_k r_k L_k rho L_k^+ - (sum_deph r_k) rho

where dephasing-form terms (L = L^+, L^2 = 1) only contribute the jump and the
scalar shift.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Optional

import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray

try:
    from .channels import ChannelSpec
    from .config import SOLVER_DEFAULTS, TRUNCATION_DEFAULTS
    from .errors import NumericalAbort, RatePoleError, TruncationError
    from .hilbert import DensityMatrix, Operator, SpaceLayout, boson_ops, number_operator
except ImportError:
    from channels import ChannelSpec
    from config import SOLVER_DEFAULTS, TRUNCATION_DEFAULTS
    from errors import NumericalAbort, RatePoleError, TruncationError
    from hilbert import DensityMatrix, Operator, SpaceLayout, boson_ops, number_operator

logger = logging.getLogger(__name__)

__all__ = [
    "RATE_POLE_POLICIES",
    "TimeGrid",
    "TrajectoryDiagnostics",
    "Trajectory",
    "MasterEquation",
    "PhotonCorrelator",
    "ConvergenceReport",
    "generator_apply",
    "evolve",
    "evolve_heisenberg",
    "regression_photon_correlator",
    "two_time_photon_correlator",
    "heisenberg_photon_correlator",
    "dt_convergence",
]

Observer = Callable[[float, DensityMatrix], None]
MAX_RECORDED_CLAMPS = 1000
RATE_POLE_POLICIES = ("clamp", "raise")


@dataclass(frozen=True, slots=True)
class TimeGrid:
    t_start: float = SOLVER_DEFAULTS["t_start"]
    t_end: float = SOLVER_DEFAULTS["t_end"]
    dt: float = SOLVER_DEFAULTS["dt"]
    sample_stride: int = SOLVER_DEFAULTS["sample_stride"]

    def __post_init__(self) -> None:
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if not self.t_end > self.t_start:
            raise ValueError(f"t_end ({self.t_end}) must exceed t_start ({self.t_start})")
        if self.sample_stride < 1:
            raise ValueError(f"sample_stride must be >= 1, got {self.sample_stride}")
        span = self.t_end - self.t_start
        steps = round(span / self.dt)
        if abs(steps * self.dt - span) > 1e-9 * max(1.0, span):
            raise ValueError(f"dt={self.dt} does not divide the interval [{self.t_start}, {self.t_end}]")
        if steps % self.sample_stride:
            raise ValueError(f"{steps} steps are not a multiple of sample_stride={self.sample_stride}")

    @property
    def n_steps(self) -> int:
        return round((self.t_end - self.t_start) / self.dt)

    @property
    def n_samples(self) -> int:
        return self.n_steps // self.sample_stride + 1

    def time(self, step: int) -> float:
        return self.t_start + step * self.dt

    def sample_times(self) -> NDArray[np.float64]:
        return self.t_start + self.dt * np.arange(0, self.n_steps + 1, self.sample_stride)

    def step_of(self, t: float) -> int:
        """Grid step index of ``t``; ValueError when ``t`` is not a grid point."""

        step = round((t - self.t_start) / self.dt)
        if step < 0 or step > self.n_steps or abs(self.time(step) - t) > 1e-9 * max(1.0, abs(t)):
            raise ValueError(f"t={t} is not a point of {self}")
        return step

    def halved(self) -> "TimeGrid":
        return TimeGrid(self.t_start, self.t_end, self.dt / 2.0, self.sample_stride * 2)


@dataclass(slots=True)
class TrajectoryDiagnostics:
    steps: int = 0
    substeps: int = 0
    dt: float = 0.0
    max_trace_drift: float = 0.0
    max_hermiticity_drift: float = 0.0
    top_fock_population: Optional[float] = None
    min_eigenvalue: Optional[float] = None
    negative_eigenvalue_times: list[float] = field(default_factory=list)
    rate_clamp_count: int = 0
    rate_clamp_events: list[dict[str, Any]] = field(default_factory=list)
    rate_poles: list[dict[str, Any]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(slots=True)
class Trajectory:
    times: NDArray[np.float64]
    states: list[DensityMatrix]
    final_state: DensityMatrix
    diagnostics: TrajectoryDiagnostics


def _monomial(matrix: sp.csr_matrix) -> Optional[tuple[NDArray, NDArray]]:
    """(columns, values) if every row holds at most one non-zero, else None."""

    counts = np.diff(matrix.indptr)
    if counts.max(initial=0) > 1:
        return None
    columns = np.zeros(matrix.shape[0], dtype=np.intp)
    values = np.zeros(matrix.shape[0], dtype=complex)
    rows = np.flatnonzero(counts)
    columns[rows] = matrix.indices[matrix.indptr[rows]]
    values[rows] = matrix.data[matrix.indptr[rows]]
    return columns, values


class _PreparedTerm:
    __slots__ = ("label", "rate", "form", "L", "L_dag", "LdL", "columns", "values", "diagonal")

    def __init__(self, term) -> None:
        self.label = term.label
        self.rate = term.rate
        self.form = term.form
        self.L = term.operator.matrix
        self.L_dag = self.L.conj().T.tocsr()
        self.LdL = (self.L_dag @ self.L).tocsr()
        mono = _monomial(self.L)
        self.columns, self.values = mono if mono is not None else (None, None)
        self.diagonal = mono is not None and np.array_equal(self.columns, np.arange(self.L.shape[0]))

    def jump(self, rho: NDArray) -> NDArray:
        """L rho L^+."""

        if self.diagonal:
            return self.values[:, None] * rho * self.values.conj()[None, :]
        if self.columns is not None:
            c = self.columns
            return self.values[:, None] * rho[np.ix_(c, c)] * self.values.conj()[None, :]
        return np.asarray(self.L @ (self.L @ rho.conj().T).conj().T)

    def adjoint_jump(self, X: NDArray) -> NDArray:
        """L^+ X L."""

        return np.asarray(self.L_dag @ (self.L_dag @ X.conj().T).conj().T)


class MasterEquation:
    """Prepared generator for one Hamiltonian and channel.

    Constant Lindblad rates are folded into a sparse effective Hamiltonian once.
    Signed rates are clamped to ``rate_cap`` in magnitude and every clamp is
    recorded.
    """

    def __init__(self, H: Operator, channel: ChannelSpec, rate_cap: float = SOLVER_DEFAULTS["rate_cap"]) -> None:
        for term in channel.terms:
            if term.operator.dims != H.dims:
                raise ValueError(f"term {term.label!r} acts on {term.operator.dims}, Hamiltonian on {H.dims}")
        self.dims = H.dims
        self.dim = H.dim
        self.rate_cap = float(rate_cap)
        self.channel = channel
        self.terms = [_PreparedTerm(term) for term in channel.terms]
        self.clamp_count = 0
        self.clamp_events: list[dict[str, Any]] = []

        K0 = -1j * H.matrix
        self._constant_rates: dict[int, float] = {}
        self._varying: list[int] = []
        for index, term in enumerate(self.terms):
            if term.rate.is_constant:
                rate = self._clamp(term.rate(0.0), 0.0, term.label)
                self._constant_rates[index] = rate
                if term.form == "lindblad" and rate:
                    K0 = K0 - 0.5 * rate * term.LdL
            else:
                self._varying.append(index)
        self.K0 = sp.csr_matrix(K0)
        self.K0_dag = self.K0.conj().T.tocsr()

    @property
    def time_dependent(self) -> bool:
        return bool(self._varying)

    def _clamp(self, rate: float, t: float, label: str) -> float:
        if not math.isfinite(rate):
            raise NumericalAbort(f"rate of {label!r} is not finite at t={t}", {"t": t, "term": label})
        if abs(rate) <= self.rate_cap:
            return rate
        self.clamp_count += 1
        if len(self.clamp_events) < MAX_RECORDED_CLAMPS:
            self.clamp_events.append({"t": t, "term": label, "rate": rate})
        return math.copysign(self.rate_cap, rate)

    def substeps(self, t: float, dt: float, stiffness: float = 1.0) -> int:
        """RK4 substeps keeping max|rate| * dt below ``stiffness`` over [t, t + dt]."""

        peak = max((abs(r) for r in self._constant_rates.values()), default=0.0)
        for index in self._varying:
            rate = self.terms[index].rate
            for s in (t, t + 0.5 * dt, t + dt):
                try:
                    peak = max(peak, min(abs(rate(s)), self.rate_cap))
                except RatePoleError:
                    peak = self.rate_cap
        return max(1, math.ceil(peak * dt / stiffness))

    def rates(self, t: float) -> list[float]:
        rates = [0.0] * len(self.terms)
        for index, rate in self._constant_rates.items():
            rates[index] = rate
        for index in self._varying:
            term = self.terms[index]
            try:
                value = term.rate(t)
            except RatePoleError:
                # sign taken just past the pole
                value = math.copysign(2.0 * self.rate_cap, term.rate(t + 1e-9 * max(1.0, t)))
            rates[index] = self._clamp(value, t, term.label)
        return rates

    def _effective(self, K: sp.csr_matrix, rates: list[float], rho: NDArray) -> NDArray:
        out = K @ rho
        for index in self._varying:
            term = self.terms[index]
            if term.form == "lindblad" and rates[index]:
                out = out - (0.5 * rates[index]) * (term.LdL @ rho)
        return np.asarray(out)

    def apply(self, t: float, rho: NDArray, hermitian: bool = False) -> NDArray:
        """d rho/dt at time ``t``; ``hermitian`` promises rho == rho^+."""

        rates = self.rates(t)
        K_rho = self._effective(self.K0, rates, rho)
        if hermitian:
            out = K_rho + K_rho.conj().T
        else:
            out = K_rho + self._effective(self.K0, rates, rho.conj().T).conj().T
        shift = 0.0
        for term, rate in zip(self.terms, rates):
            if not rate:
                continue
            out += rate * term.jump(rho)
            if term.form == "dephasing":
                shift += rate
        if shift:
            out -= shift * rho
        return out

    def apply_adjoint(self, t: float, X: NDArray) -> NDArray:
        """Heisenberg-picture generator acting on an observable ``X``."""

        rates = self.rates(t)
        out = self._effective(self.K0_dag, rates, X)
        # X K = (K^+ X^+)^+
        out = out + self._effective(self.K0_dag, rates, X.conj().T).conj().T
        shift = 0.0
        for term, rate in zip(self.terms, rates):
            if not rate:
                continue
            out += rate * term.adjoint_jump(X)
            if term.form == "dephasing":
                shift += rate
        if shift:
            out -= shift * X
        return out


def generator_apply(
    H: Operator,
    channel: ChannelSpec,
    rho: DensityMatrix,
    t: float,
    debug_checks: bool = SOLVER_DEFAULTS["debug_checks"],
) -> NDArray[np.complex128]:
    """-i[H, rho] plus the channel dissipator at time ``t``."""

    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (H.dim, H.dim):
        raise ValueError(f"density matrix shape {rho.shape} does not match dimension {H.dim}")
    out = MasterEquation(H, channel).apply(t, rho)
    if debug_checks and np.allclose(rho, rho.conj().T, atol=1e-14):
        drift = np.abs(out - out.conj().T).max()
        if drift > 1e-10:
            raise NumericalAbort(f"generator broke Hermiticity by {drift:.3e} at t={t}", {"t": t})
    return out


def _rk4(f: Callable[[float, NDArray], NDArray], t: float, y: NDArray, dt: float) -> NDArray:
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + (0.5 * dt) * k1)
    k3 = f(t + 0.5 * dt, y + (0.5 * dt) * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _fock_populations(rho: NDArray, layout: SpaceLayout) -> NDArray[np.float64]:
    diagonal = np.real(np.diagonal(rho)).reshape(layout.spin_dim, layout.fock_dim)
    return diagonal.sum(axis=0)


def evolve(
    rho0: DensityMatrix,
    H: Operator,
    channel: ChannelSpec,
    grid: TimeGrid,
    *,
    layout: Optional[SpaceLayout] = None,
    observer: Optional[Observer] = None,
    keep_states: bool = True,
    equation: Optional[MasterEquation] = None,
    trace_tolerance: float = SOLVER_DEFAULTS["trace_tolerance"],
    rate_cap: float = SOLVER_DEFAULTS["rate_cap"],
    hermitian_projection: bool = SOLVER_DEFAULTS["hermitian_projection"],
    monitor_positivity: bool = SOLVER_DEFAULTS["monitor_positivity"],
    positivity_tolerance: float = SOLVER_DEFAULTS["positivity_tolerance"],
    top_fock_tolerance: Optional[float] = TRUNCATION_DEFAULTS["top_fock_tolerance"],
    rate_poles: str = SOLVER_DEFAULTS["rate_poles"],
    debug_checks: bool = SOLVER_DEFAULTS["debug_checks"],
) -> Trajectory:
    """Integrate rho0 over ``grid`` with classical RK4.

    Each sample is handed to ``observer(t, rho)`` (which must not mutate rho)
    and, with ``keep_states``, stored as a snapshot. Trace drift is measured
    relative to Tr rho0, so unnormalized inputs such as a rho a^+ are allowed.
    The top-Fock check sums the two highest Fock levels (one when n_max = 1)
    and only applies when ``layout`` has a cavity and rho0 has unit trace.
    Rate poles inside the grid are located before integrating; ``rate_poles``
    = "raise" turns the first one into a :class:`RatePoleError`, "clamp" logs
    them, records them in the diagnostics and lets the rate cap bound them.
    """

    rho = np.array(rho0, dtype=complex, copy=True)
    if rho.shape != (H.dim, H.dim):
        raise ValueError(f"initial state shape {rho.shape} does not match dimension {H.dim}")
    if rate_poles not in RATE_POLE_POLICIES:
        raise ValueError(f"rate_poles must be one of {RATE_POLE_POLICIES}, got {rate_poles!r}")
    equation = equation or MasterEquation(H, channel, rate_cap)
    hermitian = bool(np.allclose(rho, rho.conj().T, atol=1e-13))
    trace0 = np.trace(rho)
    trace_scale = max(abs(trace0), 1e-300)
    normalized = abs(trace0 - 1.0) < 1e-9
    check_fock = layout is not None and layout.has_cavity and normalized and top_fock_tolerance is not None

    diagnostics = TrajectoryDiagnostics(dt=grid.dt)
    poles = equation.channel.rate_poles(grid.t_start, grid.t_end)
    if poles:
        first = poles[0]
        if rate_poles == "raise":
            step = min(grid.n_steps, math.ceil((first.t - grid.t_start) / grid.dt))
            raise RatePoleError(first.kind, grid.time(step), first.t)
        diagnostics.rate_poles = [{"t": p.t, "term": p.label, "kind": p.kind} for p in poles]
        logger.warning(
            "%d rate pole(s) inside [%g, %g], first at t=%.10g on %r; rates there are capped at %g",
            len(poles), grid.t_start, grid.t_end, first.t, first.label, equation.rate_cap,
        )
    top_levels = 2 if layout is not None and layout.n_max >= 2 else 1
    times = grid.sample_times()
    states: list[DensityMatrix] = []

    def rhs(t: float, y: NDArray) -> NDArray:
        return equation.apply(t, y, hermitian=hermitian)

    def sample(step: int, hermiticity_drift: float) -> None:
        t = grid.time(step)
        drift = abs(np.trace(rho) - trace0) / trace_scale
        diagnostics.max_trace_drift = max(diagnostics.max_trace_drift, float(drift))
        diagnostics.max_hermiticity_drift = max(diagnostics.max_hermiticity_drift, hermiticity_drift)
        if drift > trace_tolerance:
            diagnostics.rate_clamp_count = equation.clamp_count
            raise NumericalAbort(
                f"trace drift {drift:.3e} exceeds tolerance {trace_tolerance:.1e} at t={t:.6g}",
                diagnostics.to_dict(),
            )
        if check_fock:
            top = float(_fock_populations(rho, layout)[-top_levels:].sum())
            diagnostics.top_fock_population = max(diagnostics.top_fock_population or 0.0, top)
        if monitor_positivity and hermitian:
            smallest = float(np.linalg.eigvalsh(rho)[0])
            if diagnostics.min_eigenvalue is None or smallest < diagnostics.min_eigenvalue:
                diagnostics.min_eigenvalue = smallest
            if smallest < -positivity_tolerance:
                diagnostics.negative_eigenvalue_times.append(t)
                logger.warning("state lost positivity at t=%.4g (min eigenvalue %.3e)", t, smallest)
        if keep_states:
            states.append(rho.copy())
        if observer is not None:
            observer(t, rho)

    sample(0, float(np.abs(rho - rho.conj().T).max()) if hermitian else 0.0)
    for step in range(grid.n_steps):
        t = grid.time(step)
        n_sub = equation.substeps(t, grid.dt) if equation.time_dependent else 1
        if n_sub == 1:
            rho = _rk4(rhs, t, rho, grid.dt)
        else:
            h = grid.dt / n_sub
            for sub in range(n_sub):
                rho = _rk4(rhs, t + sub * h, rho, h)
            diagnostics.substeps += n_sub
        is_sample = (step + 1) % grid.sample_stride == 0
        hermiticity_drift = 0.0
        if hermitian:
            if is_sample:
                hermiticity_drift = float(np.abs(rho - rho.conj().T).max())
            if hermitian_projection:
                rho = 0.5 * (rho + rho.conj().T)
        if debug_checks and not np.all(np.isfinite(rho)):
            raise NumericalAbort(f"non-finite state at t={grid.time(step + 1):.6g}", diagnostics.to_dict())
        if is_sample:
            sample(step + 1, hermiticity_drift)

    diagnostics.steps = grid.n_steps
    diagnostics.rate_clamp_count = equation.clamp_count
    diagnostics.rate_clamp_events = list(equation.clamp_events)
    if equation.clamp_count:
        logger.warning("rate clamped to +/-%g on %d evaluations", equation.rate_cap, equation.clamp_count)
    if check_fock and diagnostics.top_fock_population > top_fock_tolerance:
        raise TruncationError(
            f"population {diagnostics.top_fock_population:.3e} reached the top {top_levels} Fock level(s)"
            f" of n_max={layout.n_max}"
            f" (tolerance {top_fock_tolerance:.1e}); increase n_max"
        )
    return Trajectory(times=times, states=states, final_state=rho, diagnostics=diagnostics)


def evolve_heisenberg(
    op: Operator | NDArray,
    H: Operator,
    channel: ChannelSpec,
    tau: float,
    dt: float = SOLVER_DEFAULTS["dt"],
    rate_cap: float = SOLVER_DEFAULTS["rate_cap"],
) -> NDArray[np.complex128]:
    """X(tau) = exp(L^+ tau) X for a time-homogeneous channel."""

    if tau < 0:
        raise ValueError(f"tau must be non-negative, got {tau}")
    equation = MasterEquation(H, channel, rate_cap)
    if equation.time_dependent:
        raise ValueError("the Heisenberg-picture shortcut needs time-independent rates")
    X = op.toarray() if isinstance(op, Operator) else np.array(op, dtype=complex, copy=True)
    steps = round(tau / dt)
    if abs(steps * dt - tau) > 1e-9 * max(1.0, tau):
        raise ValueError(f"tau={tau} is not a multiple of dt={dt}")
    for _ in range(steps):
        X = _rk4(equation.apply_adjoint, 0.0, X, dt)
    return X


@dataclass(slots=True)
class PhotonCorrelator:
    """Y = a^+ X(tau) a, so that the g2 numerator at t is Re Tr[Y rho(t)]."""

    tau: float
    matrix: NDArray[np.complex128]

    def __call__(self, rho: DensityMatrix) -> float:
        return float(np.real(np.sum(self.matrix.T * rho)))


def heisenberg_photon_correlator(
    H: Operator,
    channel: ChannelSpec,
    layout: SpaceLayout,
    tau: float,
    dt: float = SOLVER_DEFAULTS["dt"],
    rate_cap: float = SOLVER_DEFAULTS["rate_cap"],
) -> PhotonCorrelator:
    """One adjoint evolution serving <a^+(t) a^+(t+tau) a(t+tau) a(t)> at every t."""

    a, a_dag = boson_ops(layout)
    X = evolve_heisenberg(number_operator(layout), H, channel, tau, dt, rate_cap)
    Y = np.asarray(a_dag.matrix @ (a_dag.matrix @ X.conj().T).conj().T)
    return PhotonCorrelator(tau=tau, matrix=Y)


def regression_photon_correlator(
    rho_t: DensityMatrix,
    H: Operator,
    channel: ChannelSpec,
    layout: SpaceLayout,
    t: float,
    tau: float,
    dt: float = SOLVER_DEFAULTS["dt"],
    rate_cap: float = SOLVER_DEFAULTS["rate_cap"],
) -> float:
    """Re Tr[a^+a E_{t->t+tau}(a rho(t) a^+)] under the same generator."""

    if tau < 0:
        raise ValueError(f"tau must be non-negative, got {tau}")
    a, a_dag = boson_ops(layout)
    conditional = np.asarray(a.matrix @ (a.matrix @ np.asarray(rho_t).conj().T).conj().T)
    if tau > 0:
        steps = round(tau / dt)
        if abs(steps * dt - tau) > 1e-9 * max(1.0, tau):
            raise ValueError(f"tau={tau} is not a multiple of dt={dt}")
        grid = TimeGrid(t, t + steps * dt, dt, steps)
        conditional = evolve(
            conditional, H, channel, grid,
            keep_states=False, rate_cap=rate_cap, monitor_positivity=False, top_fock_tolerance=None,
        ).final_state
    return float(number_operator(layout).expect(conditional).real)


def two_time_photon_correlator(
    rho0: DensityMatrix,
    H: Operator,
    channel: ChannelSpec,
    t: float,
    tau: float,
    grid: TimeGrid,
    layout: Optional[SpaceLayout] = None,
) -> float:
    """<a^+(t) a^+(t+tau) a(t+tau) a(t)> by the quantum regression procedure."""

    if layout is None:
        layout = SpaceLayout(len(H.dims) - 1, H.dims[-1])
    step = grid.step_of(t)
    rho_t = np.asarray(rho0, dtype=complex)
    if step:
        to_t = TimeGrid(grid.t_start, t, grid.dt, step)
        rho_t = evolve(rho_t, H, channel, to_t, keep_states=False, monitor_positivity=False).final_state
    return regression_photon_correlator(rho_t, H, channel, layout, t, tau, grid.dt)


@dataclass(slots=True)
class ConvergenceReport:
    dt: float
    max_relative_change: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_relative_change < self.tolerance


def dt_convergence(
    rho0: DensityMatrix,
    H: Operator,
    channel: ChannelSpec,
    grid: TimeGrid,
    observables: Callable[[DensityMatrix], NDArray],
    tolerance: float = 1e-6,
    **evolve_options: Any,
) -> ConvergenceReport:
    """Compare sampled observables at dt and dt/2 (same sample times)."""

    def collect(run_grid: TimeGrid) -> NDArray:
        values: list[NDArray] = []
        evolve(
            rho0, H, channel, run_grid,
            observer=lambda t, rho: values.append(np.atleast_1d(observables(rho))),
            keep_states=False, **evolve_options,
        )
        return np.array(values, dtype=float)

    coarse = collect(grid)
    fine = collect(grid.halved())
    scale = np.maximum(np.abs(fine).max(axis=0), 1e-12)
    change = float((np.abs(coarse - fine) / scale).max())
    logger.info("dt convergence: max relative change %.3e between dt=%g and dt=%g", change, grid.dt, grid.dt / 2)
    return ConvergenceReport(dt=grid.dt, max_relative_change=change, tolerance=tolerance)
