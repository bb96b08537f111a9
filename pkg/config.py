"""Default numerical settings for the Tavis-Cummings quasi-probability engine."""

# Fixed-step RK4 integration of the matrix master equation.
SOLVER_DEFAULTS = {
    "t_start": 0.0,
    "t_end": 25.0,
    "dt": 0.005,
    "sample_stride": 10,  # 5000 steps -> samples every 0.05
    "trace_tolerance": 1e-6,
    "rate_cap": 1e3,
    "hermitian_projection": True,
    "monitor_positivity": True,
    "positivity_tolerance": 1e-6,
    "debug_checks": False,
    "rate_poles": "clamp",  # "clamp" records located poles and caps the rate; "raise" aborts before integrating
}

TRUNCATION_DEFAULTS = {
    "n_max": 30,
    "coherent_tail_tolerance": 1e-9,
    "top_fock_tolerance": 1e-6,
}

QD_DEFAULTS = {
    "imag_tolerance": 1e-9,
    "quadrature_order": 8,
    "heatmap_theta_points": 61,
    "heatmap_phi_points": 121,
    "heatmap_time": 5.0,
}

OBSERVABLE_DEFAULTS = {
    "g2_threshold": 1e-9,
    "tau_values": [3.0],
}

OUTPUT_DEFAULTS = {
    "csv_digits": 17,
    "timeseries_file": "timeseries.csv",
    "heatmap_file": "heatmap_{kind}.csv",
    "metadata_file": "metadata.json",
    "events_file": "events.jsonl",
    "plot_file": "plot.gp",
    "config_file": "config.yaml",
}

BATCH_DEFAULTS = {
    "max_workers": 8,
}

__all__ = [
    "SOLVER_DEFAULTS",
    "TRUNCATION_DEFAULTS",
    "QD_DEFAULTS",
    "OBSERVABLE_DEFAULTS",
    "OUTPUT_DEFAULTS",
    "BATCH_DEFAULTS",
]
