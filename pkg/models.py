"""Experiment descriptions and run summaries exchanged between agents."""

from __future__ import annotations

import dataclasses
import math
import typing
from dataclasses import asdict, dataclass, field
from typing import Any, ClassVar, Optional

try:
    from .channels import FAMILIES, CavityParams, ChannelParams, ChannelSpec, SqueezeParams, build_channel
    from .config import OBSERVABLE_DEFAULTS, QD_DEFAULTS, SOLVER_DEFAULTS, TRUNCATION_DEFAULTS
    from .errors import ConfigError
    from .evolver import RATE_POLE_POLICIES, TimeGrid
    from .hilbert import SpaceLayout, SystemParams
    from .quasiprob import QD_KINDS, AngleTuple
except ImportError:
    from channels import FAMILIES, CavityParams, ChannelParams, ChannelSpec, SqueezeParams, build_channel
    from config import OBSERVABLE_DEFAULTS, QD_DEFAULTS, SOLVER_DEFAULTS, TRUNCATION_DEFAULTS
    from errors import ConfigError
    from evolver import RATE_POLE_POLICIES, TimeGrid
    from hilbert import SpaceLayout, SystemParams
    from quasiprob import QD_KINDS, AngleTuple

__all__ = [
    "SerializableDataclass",
    "ChannelConfig",
    "CavityConfig",
    "SolverConfig",
    "QDConfig",
    "HeatmapConfig",
    "ObservablesConfig",
    "SimConfig",
    "RunSummary",
    "OBSERVABLE_NAMES",
]

OBSERVABLE_NAMES: tuple[str, ...] = ("n_photon", "exc", "exc_total", "g2_0", "mandel_q", "g2_tau", "bunching")
MAX_SPINS = 8


def _coerce(hint: Any, value: Any, path: str, problems: list[str]) -> Any:
    """Convert YAML scalars to the annotated type, recording mismatches."""

    origin, args = typing.get_origin(hint), typing.get_args(hint)
    if origin is typing.Union and type(None) in args:
        if value is None:
            return None
        inner = [a for a in args if a is not type(None)]
        return _coerce(inner[0], value, path, problems) if len(inner) == 1 else value
    if origin is list:
        if not isinstance(value, (list, tuple)):
            problems.append(f"{path}: expected a list, got {value!r}")
            return []
        item = args[0] if args else Any
        return [_coerce(item, v, f"{path}[{i}]", problems) for i, v in enumerate(value)]
    if hint is float:
        if isinstance(value, bool):
            problems.append(f"{path}: expected a number, got {value!r}")
            return 0.0
        try:
            return float(value)
        except (TypeError, ValueError):
            problems.append(f"{path}: expected a number, got {value!r}")
            return 0.0
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            problems.append(f"{path}: expected an integer, got {value!r}")
            return 0
        return value
    if hint is bool and not isinstance(value, bool):
        problems.append(f"{path}: expected true or false, got {value!r}")
        return False
    if hint is str and not isinstance(value, str):
        problems.append(f"{path}: expected a string, got {value!r}")
        return ""
    return value


@dataclass(slots=True)
class SerializableDataclass:
    """Mixin providing helpers to convert dataclasses to and from plain dicts."""

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict[str, Any]):
        problems: list[str] = []
        instance = cls._build(data, cls.__name__, problems)
        if problems:
            raise ConfigError(problems)
        return instance

    @classmethod
    def _build(cls, data: Any, path: str, problems: list[str]):
        if data is None:
            data = {}
        if not isinstance(data, dict):
            problems.append(f"{path}: expected a mapping, got {type(data).__name__}")
            return cls()
        hints = typing.get_type_hints(cls)
        names = {f.name for f in dataclasses.fields(cls)}
        for key in data:
            if key not in names:
                problems.append(f"{path}.{key}: unknown key")
        kwargs: dict[str, Any] = {}
        for name in sorted(names & set(data)):
            hint = hints.get(name)
            if isinstance(hint, type) and issubclass(hint, SerializableDataclass):
                kwargs[name] = hint._build(data[name], f"{path}.{name}", problems)
            else:
                kwargs[name] = _coerce(hint, data[name], f"{path}.{name}", problems)
        try:
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            problems.append(f"{path}: {exc}")
            return cls()


@dataclass(slots=True)
class ChannelConfig(SerializableDataclass):
    """Spin-channel parameters; each family reads its own keys."""

    gamma: list[float] = field(default_factory=list)
    temperature: float = 0.0
    r: float = 0.0
    Phi: float = 0.0
    nu: list[float] = field(default_factory=list)
    q: Optional[float] = None
    pcenm_dephasing_limit: bool = False
    gamma_prime: list[float] = field(default_factory=list)
    q_prime: Optional[float] = None
    gamma_tilde: list[float] = field(default_factory=list)
    s: Optional[float] = None

    def to_params(self, family: str) -> ChannelParams:
        squeeze = SqueezeParams(self.r, self.Phi, self.temperature) if family == "sgad" else None
        return ChannelParams(
            gamma=tuple(self.gamma),
            temperature=self.temperature,
            squeeze=squeeze,
            nu=tuple(self.nu),
            q=self.q,
            pcenm_dephasing_limit=self.pcenm_dephasing_limit,
            gamma_prime=tuple(self.gamma_prime),
            q_prime=self.q_prime,
            gamma_tilde=tuple(self.gamma_tilde),
            s=self.s,
        )


@dataclass(slots=True)
class CavityConfig(SerializableDataclass):
    model: str = "constant"
    kappa: float = 0.0
    kappa_prime: Optional[float] = None
    b: Optional[float] = None
    n_thermal: float = 0.0

    def to_params(self) -> CavityParams:
        return CavityParams(self.model, self.kappa, self.kappa_prime, self.b, self.n_thermal)


@dataclass(slots=True)
class SolverConfig(SerializableDataclass):
    t_start: float = SOLVER_DEFAULTS["t_start"]
    t_end: float = SOLVER_DEFAULTS["t_end"]
    dt: float = SOLVER_DEFAULTS["dt"]
    sample_stride: int = SOLVER_DEFAULTS["sample_stride"]
    trace_tolerance: float = SOLVER_DEFAULTS["trace_tolerance"]
    rate_cap: float = SOLVER_DEFAULTS["rate_cap"]
    hermitian_projection: bool = SOLVER_DEFAULTS["hermitian_projection"]
    monitor_positivity: bool = SOLVER_DEFAULTS["monitor_positivity"]
    positivity_tolerance: float = SOLVER_DEFAULTS["positivity_tolerance"]
    top_fock_tolerance: float = TRUNCATION_DEFAULTS["top_fock_tolerance"]
    rate_poles: str = SOLVER_DEFAULTS["rate_poles"]

    def grid(self) -> TimeGrid:
        return TimeGrid(self.t_start, self.t_end, self.dt, self.sample_stride)

    def evolve_options(self) -> dict[str, Any]:
        return {
            "trace_tolerance": self.trace_tolerance,
            "rate_cap": self.rate_cap,
            "hermitian_projection": self.hermitian_projection,
            "monitor_positivity": self.monitor_positivity,
            "positivity_tolerance": self.positivity_tolerance,
            "top_fock_tolerance": self.top_fock_tolerance,
            "rate_poles": self.rate_poles,
        }


@dataclass(slots=True)
class HeatmapConfig(SerializableDataclass):
    kind: str = "P"
    time: float = QD_DEFAULTS["heatmap_time"]
    theta_scalings: list[float] = field(default_factory=list)
    phi_scalings: list[float] = field(default_factory=list)
    theta_points: int = QD_DEFAULTS["heatmap_theta_points"]
    phi_points: int = QD_DEFAULTS["heatmap_phi_points"]


@dataclass(slots=True)
class QDConfig(SerializableDataclass):
    kinds: list[str] = field(default_factory=list)
    theta: list[float] = field(default_factory=list)
    phi: list[float] = field(default_factory=list)
    imag_tolerance: float = QD_DEFAULTS["imag_tolerance"]
    heatmap: Optional[HeatmapConfig] = None

    @classmethod
    def _build(cls, data: Any, path: str, problems: list[str]):
        data = dict(data or {}) if isinstance(data, dict) else data
        heatmap = None
        if isinstance(data, dict) and data.get("heatmap") is not None:
            heatmap = HeatmapConfig._build(data.pop("heatmap"), f"{path}.heatmap", problems)
        instance = super(QDConfig, cls)._build(data, path, problems)
        instance.heatmap = heatmap
        return instance


@dataclass(slots=True)
class ObservablesConfig(SerializableDataclass):
    names: list[str] = field(default_factory=list)
    tau_values: list[float] = field(default_factory=lambda: list(OBSERVABLE_DEFAULTS["tau_values"]))
    tau_stride: int = 1
    g2_threshold: float = OBSERVABLE_DEFAULTS["g2_threshold"]


@dataclass(slots=True)
class SimConfig(SerializableDataclass):
    """Complete, deterministic description of one simulation run."""

    name: str = "custom"
    description: str = ""
    n_spins: int = 4
    n_max: int = TRUNCATION_DEFAULTS["n_max"]
    omega: list[float] = field(default_factory=list)
    omega_c: float = 0.0
    g: list[float] = field(default_factory=list)
    mean_n: float = 6.0
    zeta: float = math.pi / 2
    spin_state: str = "ground"
    coherent_tail_tolerance: float = TRUNCATION_DEFAULTS["coherent_tail_tolerance"]
    family: str = "gksl_thermal"
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    cavity: CavityConfig = field(default_factory=CavityConfig)
    solver: SolverConfig = field(default_factory=SolverConfig)
    qd: QDConfig = field(default_factory=QDConfig)
    observables: ObservablesConfig = field(default_factory=ObservablesConfig)
    provenance: dict[str, str] = field(default_factory=dict)

    _INTEGER_KEYS: ClassVar[tuple[str, ...]] = ("n_spins", "n_max")

    def layout(self) -> SpaceLayout:
        return SpaceLayout.with_n_max(self.n_spins, self.n_max)

    def system_params(self) -> SystemParams:
        return SystemParams(tuple(self.omega), self.omega_c, tuple(self.g))

    def channel_spec(self, layout: Optional[SpaceLayout] = None) -> ChannelSpec:
        return build_channel(
            layout or self.layout(),
            self.family,
            self.channel.to_params(self.family),
            self.cavity.to_params(),
            tuple(self.omega),
        )

    def angles(self) -> Optional[AngleTuple]:
        if not self.qd.kinds:
            return None
        return AngleTuple(tuple(self.qd.theta), tuple(self.qd.phi))

    def validate(self) -> list[str]:
        """Every problem with this configuration, empty when it is runnable."""

        problems: list[str] = []
        for key in self._INTEGER_KEYS:
            value = getattr(self, key)
            if isinstance(value, bool) or not isinstance(value, int):
                problems.append(f"{key}: expected an integer, got {value!r}")
        if problems:
            return problems
        if not 1 <= self.n_spins <= MAX_SPINS:
            problems.append(f"n_spins: must lie in 1..{MAX_SPINS}, got {self.n_spins}")
        if self.n_max < 1:
            problems.append(f"n_max: must be >= 1, got {self.n_max}")
        for key in ("omega", "g"):
            if len(getattr(self, key)) != self.n_spins:
                problems.append(f"{key}: expected {self.n_spins} values, got {len(getattr(self, key))}")
        try:
            self.system_params()
        except (TypeError, ValueError) as exc:
            problems.append(f"system: {exc}")
        if self.mean_n < 0:
            problems.append(f"mean_n: must be non-negative, got {self.mean_n}")
        if self.spin_state not in ("ground", "excited"):
            problems.append(f"spin_state: expected 'ground' or 'excited', got {self.spin_state!r}")

        if self.family not in FAMILIES:
            problems.append(f"family: unknown channel family {self.family!r}; expected one of {list(FAMILIES)}")
        else:
            try:
                params = self.channel.to_params(self.family)
                problems.extend(f"channel: {p}" for p in params.problems_for(self.family, self.n_spins))
            except (TypeError, ValueError) as exc:
                problems.append(f"channel: {exc}")
        problems.extend(f"cavity: {p}" for p in self.cavity.to_params().problems())

        grid: Optional[TimeGrid] = None
        try:
            grid = self.solver.grid()
        except (TypeError, ValueError) as exc:
            problems.append(f"solver: {exc}")
        for key in ("trace_tolerance", "rate_cap", "positivity_tolerance", "top_fock_tolerance"):
            if not getattr(self.solver, key) > 0:
                problems.append(f"solver.{key}: must be positive, got {getattr(self.solver, key)}")
        if self.solver.rate_poles not in RATE_POLE_POLICIES:
            problems.append(
                f"solver.rate_poles: expected one of {list(RATE_POLE_POLICIES)}, got {self.solver.rate_poles!r}"
            )

        problems.extend(self._qd_problems(grid))
        problems.extend(self._observable_problems(grid))
        return problems

    def _qd_problems(self, grid: Optional[TimeGrid]) -> list[str]:
        problems = [f"qd.kinds: unknown distribution {k!r}" for k in self.qd.kinds if k not in QD_KINDS]
        if self.qd.kinds:
            if len(self.qd.theta) != self.n_spins or len(self.qd.phi) != self.n_spins:
                problems.append(f"qd: need {self.n_spins} theta and phi angles")
            else:
                try:
                    self.angles()
                except ValueError as exc:
                    problems.append(f"qd: {exc}")
        heatmap = self.qd.heatmap
        if heatmap is not None:
            if heatmap.kind not in QD_KINDS:
                problems.append(f"qd.heatmap.kind: unknown distribution {heatmap.kind!r}")
            if len(heatmap.theta_scalings) != self.n_spins or len(heatmap.phi_scalings) != self.n_spins:
                problems.append(f"qd.heatmap: need {self.n_spins} theta and phi scalings")
            if any(not 0 <= s <= 1 for s in heatmap.theta_scalings):
                problems.append("qd.heatmap.theta_scalings: must lie in [0, 1]")
            if heatmap.theta_points < 2 or heatmap.phi_points < 1:
                problems.append("qd.heatmap: need at least 2 theta points and 1 phi point")
            if grid is not None and not self._is_sample_time(grid, heatmap.time):
                problems.append(f"qd.heatmap.time: {heatmap.time} is not a sampled time")
        return problems

    def _observable_problems(self, grid: Optional[TimeGrid]) -> list[str]:
        obs = self.observables
        problems = [f"observables.names: unknown observable {n!r}" for n in obs.names if n not in OBSERVABLE_NAMES]
        if obs.tau_stride < 1:
            problems.append(f"observables.tau_stride: must be >= 1, got {obs.tau_stride}")
        if obs.g2_threshold <= 0:
            problems.append(f"observables.g2_threshold: must be positive, got {obs.g2_threshold}")
        for tau in obs.tau_values:
            if tau < 0:
                problems.append(f"observables.tau_values: tau must be non-negative, got {tau}")
            elif grid is not None and abs(round(tau / grid.dt) * grid.dt - tau) > 1e-9 * max(1.0, tau):
                problems.append(f"observables.tau_values: tau={tau} is not a multiple of dt={grid.dt}")
        if {"g2_tau", "bunching"} & set(obs.names) and not obs.tau_values:
            problems.append("observables.tau_values: g2_tau and bunching need at least one tau")
        return problems

    @staticmethod
    def _is_sample_time(grid: TimeGrid, t: float) -> bool:
        try:
            step = grid.step_of(t)
        except ValueError:
            return False
        return step % grid.sample_stride == 0

    def checked(self) -> "SimConfig":
        problems = self.validate()
        if problems:
            raise ConfigError(problems)
        return self


@dataclass(slots=True)
class RunSummary(SerializableDataclass):
    name: str
    success: bool
    output_dir: Optional[str] = None
    files: list[str] = field(default_factory=list)
    diagnostics: dict[str, Any] = field(default_factory=dict)
    wall_time: Optional[float] = None
    error_type: Optional[str] = None
    message: Optional[str] = None
    exit_code: int = 0
