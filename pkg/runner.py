"""Execute one experiment description and write its outputs."""

from __future__ import annotations

import logging
import math
import time
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path
from typing import Any, Optional

import numpy as np

try:
    from . import utils
    from .config import OUTPUT_DEFAULTS
    from .evolver import ConvergenceReport, dt_convergence, evolve
    from .hilbert import DensityMatrix, SpaceLayout, build_hamiltonian, initial_state, multipole_components
    from .models import RunSummary, SimConfig
    from .observables import (
        CorrelationContext,
        g2_zero,
        photon_number,
        spin_excitation,
        total_excitation,
    )
    from .plot_script import emit_plot_script
    from .quasiprob import SPIN_HALF, heatmap, qd_values, reduce_to_spins
except ImportError:
    import utils
    from config import OUTPUT_DEFAULTS
    from evolver import ConvergenceReport, dt_convergence, evolve
    from hilbert import DensityMatrix, SpaceLayout, build_hamiltonian, initial_state, multipole_components
    from models import RunSummary, SimConfig
    from observables import (
        CorrelationContext,
        g2_zero,
        photon_number,
        spin_excitation,
        total_excitation,
    )
    from plot_script import emit_plot_script
    from quasiprob import SPIN_HALF, heatmap, qd_values, reduce_to_spins

logger = logging.getLogger(__name__)

__all__ = ["CONVENTIONS", "SeriesRecorder", "code_version", "run_experiment"]

CONVENTIONS = {
    "W_prefactor": "((2j+1)/4pi)^(N/2), the form that integrates to one",
    "P_measure": "sin(theta) dtheta dphi",
    "basis": "spins then cavity; excited state first in each spin factor",
    "g2_tau_method": "quantum regression with the same generator (Heisenberg picture when rates are constant)",
    "g2_tau_denominator": "<a^+ a (t)>^2",
    "sgad_second_jump": "sqrt(gamma N_th) R^+",
    "cavity_nmad_spin_rate": "2 gamma_k, as the cavity equation is written",
}


def code_version() -> str:
    try:
        return version("tavis_cummings_qd")
    except PackageNotFoundError:
        return "0.0.0"


def _tau_label(tau: float, taus: list[float], stem: str) -> str:
    return stem if len(taus) == 1 else f"{stem}_{tau:g}"


class SeriesRecorder:
    """Trajectory observer collecting every requested series per sample."""

    def __init__(self, config: SimConfig, layout: SpaceLayout, context: CorrelationContext) -> None:
        self.config = config
        self.layout = layout
        self.context = context
        self.kinds = list(config.qd.kinds)
        if self.kinds:
            self.theta = np.array([config.qd.theta])
            self.phi = np.array([config.qd.phi])
        names = config.observables.names
        self.taus = list(config.observables.tau_values)
        self.wants_correlation = bool({"g2_tau", "bunching"} & set(names))
        self.stride = config.observables.tau_stride

        self.main_columns: list[str] = ["t", *self.kinds]
        self.correlation_columns: list[str] = ["t", "g2_0"] if self.stride > 1 else []
        target = self.correlation_columns if self.stride > 1 else self.main_columns
        for name in names:
            if name == "exc":
                self.main_columns.extend(f"exc_{k}" for k in range(1, layout.n_spins + 1))
            elif name in ("g2_tau", "bunching"):
                target.extend(_tau_label(tau, self.taus, name) for tau in self.taus)
            else:
                self.main_columns.append(name)
        self.data: dict[str, list[float]] = {c: [] for c in self.main_columns}
        self.correlation: dict[str, list[float]] = {c: [] for c in self.correlation_columns}

        self.heatmap_spins: Optional[DensityMatrix] = None
        self.samples = 0

    def _qd(self, rho: DensityMatrix) -> dict[str, float]:
        rho_spins = reduce_to_spins(rho, self.layout)
        components = multipole_components(rho_spins, self.layout.n_spins, SPIN_HALF)
        tolerance = self.config.qd.imag_tolerance
        return {kind: float(qd_values(components, self.theta, self.phi, kind, imag_tolerance=tolerance)[0]) for kind in self.kinds}

    def __call__(self, t: float, rho: DensityMatrix) -> None:
        row: dict[str, float] = {"t": t}
        if self.kinds:
            row.update(self._qd(rho))
        layout = self.layout
        threshold = self.config.observables.g2_threshold
        wanted = set(self.main_columns) | set(self.correlation_columns)
        if "n_photon" in wanted or "mandel_q" in wanted:
            row["n_photon"] = photon_number(rho, layout)
        for k in range(1, layout.n_spins + 1):
            if f"exc_{k}" in wanted:
                row[f"exc_{k}"] = spin_excitation(rho, layout, k)
        if "exc_total" in wanted:
            row["exc_total"] = total_excitation(rho, layout)
        if wanted & {"g2_0", "mandel_q"} or self.wants_correlation:
            row["g2_0"] = g2_zero(rho, layout, threshold)
        if "mandel_q" in wanted:
            row["mandel_q"] = row["n_photon"] * (row["g2_0"] - 1.0)

        correlate = self.wants_correlation and self.samples % self.stride == 0
        if correlate:
            n = photon_number(rho, layout)
            for tau in self.taus:
                g2 = self.context.correlator(t, tau, rho) / (n * n)
                row[_tau_label(tau, self.taus, "g2_tau")] = g2
                row[_tau_label(tau, self.taus, "bunching")] = row["g2_0"] - g2

        for column in self.main_columns:
            self.data[column].append(row[column])
        if correlate and self.correlation_columns:
            for column in self.correlation_columns:
                self.correlation[column].append(row[column])

        heatmap_config = self.config.qd.heatmap
        if heatmap_config is not None and math.isclose(t, heatmap_config.time, rel_tol=0.0, abs_tol=1e-9):
            self.heatmap_spins = reduce_to_spins(rho, layout)
        self.samples += 1


def _convergence_observable(recorder: SeriesRecorder, layout: SpaceLayout):
    def observable(rho: DensityMatrix) -> np.ndarray:
        values = [total_excitation(rho, layout)]
        if layout.has_cavity:
            values.append(photon_number(rho, layout))
        if recorder.kinds:
            values.extend(recorder._qd(rho).values())
        return np.array(values)

    return observable


def run_experiment(
    config: SimConfig,
    out_dir,
    *,
    check_convergence: bool = False,
    verbose: bool = True,
) -> RunSummary:
    """Integrate ``config`` and write CSV series, heatmap, metadata and plot script.

    Errors propagate; callers map them to exit codes with ``errors.exit_code_for``.
    """

    config = config.checked()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    files = OUTPUT_DEFAULTS
    log_path = out_dir / files["events_file"]

    def _log(stage: str, message: str, metadata: dict | None = None) -> None:
        utils.append_event_log(log_path, stage, message, metadata)
        if verbose:
            logger.info("[%s] %s: %s", config.name, stage, message)

    started = time.perf_counter()
    _log("start", f"running {config.name}", {"out_dir": str(out_dir)})
    utils.save_config(config, out_dir / files["config_file"])

    layout = config.layout()
    H = build_hamiltonian(layout, config.system_params())
    channel = config.channel_spec(layout)
    rho0 = initial_state(layout, config.spin_state, config.mean_n, config.zeta, config.coherent_tail_tolerance)
    grid = config.solver.grid()
    options = config.solver.evolve_options()
    context = CorrelationContext(
        rho0, H, channel, grid, layout, options["rate_cap"], config.observables.g2_threshold
    )
    _log(
        "prepared",
        f"dimension {layout.dim}, {len(channel.terms)} dissipator terms, {grid.n_steps} steps",
        {"channel": channel.label, "time_dependent": channel.time_dependent},
    )

    recorder = SeriesRecorder(config, layout, context)
    trajectory = evolve(rho0, H, channel, grid, layout=layout, observer=recorder, keep_states=False, **options)
    diagnostics = trajectory.diagnostics.to_dict()
    _log("evolved", "integration finished", {k: v for k, v in diagnostics.items() if k != "rate_clamp_events"})

    written: list[str] = []
    series_files: dict[str, list[str]] = {}
    if len(recorder.main_columns) > 1:
        name = files["timeseries_file"]
        utils.write_csv(out_dir / name, recorder.main_columns, [recorder.data[c] for c in recorder.main_columns])
        series_files[name] = recorder.main_columns
        written.append(name)
    if recorder.correlation_columns:
        name = "correlation.csv"
        columns = recorder.correlation_columns
        utils.write_csv(out_dir / name, columns, [recorder.correlation[c] for c in columns])
        series_files[name] = columns
        written.append(name)

    heatmap_files: dict[str, str] = {}
    heatmap_config = config.qd.heatmap
    if heatmap_config is not None and recorder.heatmap_spins is not None:
        result = heatmap(
            recorder.heatmap_spins,
            heatmap_config.theta_scalings,
            heatmap_config.phi_scalings,
            heatmap_config.kind,
            heatmap_config.theta_points,
            heatmap_config.phi_points,
        )
        name = files["heatmap_file"].format(kind=heatmap_config.kind)
        utils.write_heatmap_csv(out_dir / name, result.theta, result.phi, result.values)
        heatmap_files[heatmap_config.kind] = name
        written.append(name)

    convergence: Optional[ConvergenceReport] = None
    if check_convergence:
        _log("convergence", f"re-running with dt={grid.dt / 2:g}")
        convergence = dt_convergence(
            rho0, H, channel, grid, _convergence_observable(recorder, layout), layout=layout, **options
        )
        diagnostics["convergence_max_relative_change"] = convergence.max_relative_change
        diagnostics["convergence_passed"] = convergence.passed
        if not convergence.passed:
            logger.warning(
                "%s: halving dt changed observables by %.3e (tolerance %.1e)",
                config.name, convergence.max_relative_change, convergence.tolerance,
            )

    emit_plot_script(out_dir, config.name, series_files, heatmap_files, files["plot_file"])
    written.append(files["plot_file"])
    wall_time = time.perf_counter() - started
    metadata: dict[str, Any] = {
        "name": config.name,
        "description": config.description,
        "code_version": code_version(),
        "config": config.to_dict(),
        "provenance": config.provenance,
        "conventions": CONVENTIONS,
        "channel": {
            "label": channel.label,
            "time_dependent": channel.time_dependent,
            "terms": [{"label": term.label, "form": term.form, "rate": term.rate.kind} for term in channel.terms],
        },
        "grid": {"dt": grid.dt, "t_start": grid.t_start, "t_end": grid.t_end, "samples": grid.n_samples},
        "diagnostics": diagnostics,
        "files": written + [files["config_file"], files["events_file"]],
        "wall_time_s": wall_time,
    }
    utils.write_json(out_dir / files["metadata_file"], metadata)
    written.extend([files["metadata_file"], files["config_file"], files["events_file"]])
    _log("finished", f"wrote {len(written)} files in {wall_time:.1f}s")
    return RunSummary(
        name=config.name,
        success=True,
        output_dir=str(out_dir),
        files=written,
        diagnostics=diagnostics,
        wall_time=wall_time,
    )
