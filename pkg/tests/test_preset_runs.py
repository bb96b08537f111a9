"""Full-size preset integrations; run with ``pytest --runslow``."""

import numpy as np
import pytest

import utils
from models import ObservablesConfig, QDConfig
from observables import ObservableSeries, complementarity, first_deviation_time
from presets import PRESETS, get_preset
from runner import run_experiment

pytestmark = pytest.mark.slow


def _run(name, tmp_path, config=None, **kwargs):
    config = config or get_preset(name)
    summary = run_experiment(config, tmp_path / name, verbose=False, **kwargs)
    assert summary.success
    return summary, tmp_path / name


def _series(out):
    return {k: np.asarray(v) for k, v in utils.read_csv_columns(out / "timeseries.csv").items()}


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_every_preset_keeps_trace_and_hermiticity(name, tmp_path):
    summary, _ = _run(name, tmp_path)
    assert summary.diagnostics["max_trace_drift"] < 1e-7
    assert summary.diagnostics["max_hermiticity_drift"] < 1e-9


def test_fig1a_shows_negativity_and_passes_the_dt_gate(tmp_path):
    summary, out = _run("fig1a", tmp_path, check_convergence=True)
    assert summary.diagnostics["top_fock_population"] < 1e-6
    assert summary.diagnostics["convergence_passed"]
    assert summary.diagnostics["convergence_max_relative_change"] < 1e-6
    columns = _series(out)
    for kind in ("P", "W"):
        assert np.count_nonzero(columns[kind] < -1e-3) >= 3
    assert columns["Q"].min() >= -1e-10


def test_squeezing_and_temperature_reduce_p_negativity(tmp_path):
    _, out_a = _run("fig1a", tmp_path)
    _, out_d = _run("fig1d", tmp_path)
    assert _series(out_d)["P"].min() > _series(out_a)["P"].min()


def test_fig2_heatmap_has_both_signs(tmp_path):
    _, out = _run("fig2", tmp_path)
    lines = (out / "heatmap_P.csv").read_text(encoding="utf-8").splitlines()[1:]
    values = np.array([[float(v) for v in line.split(",")[1:]] for line in lines])
    assert values.min() < 0 < values.max()


def test_excitation_number_is_conserved_without_dissipation(tmp_path):
    config = get_preset("fig4pure")
    config.qd = QDConfig()
    config.observables = ObservablesConfig(names=["exc_total"])
    _, out = _run("fig4pure", tmp_path, config)
    total = _series(out)["exc_total"]
    assert np.abs(total - 6.0).max() < 1e-5


def test_photon_and_spin_excitations_are_complementary(tmp_path):
    _, out = _run("fig5a", tmp_path)
    columns = _series(out)
    spins = sum(columns[f"exc_{k}"] for k in range(1, 5))
    assert complementarity(columns["t"], columns["n_photon"], spins) < -0.9


def test_non_markovian_cavity_loss_deviates_earlier(tmp_path):
    deviations = {}
    for name in ("fig6", "fig6ad"):
        _, out = _run(name, tmp_path)
        columns = _series(out)
        assert np.count_nonzero(columns["g2_0"] < 1.0) >= 3
        deviations[name] = first_deviation_time(ObservableSeries("g2_0", columns["t"], columns["g2_0"]), 0.05)
    assert deviations["fig6ad"] is not None
    assert deviations["fig6"] is not None and deviations["fig6"] < deviations["fig6ad"]


def test_fig7_antibunching_without_sub_poissonian_light(tmp_path):
    _, out = _run("fig7", tmp_path)
    columns = _series(out)
    bunching, g2 = columns["bunching"], columns["g2_0"]
    assert bunching.min() < 0 < bunching.max()
    assert np.any((bunching < 0) & (g2 >= 1.0))


def test_repeated_runs_write_identical_csv(tmp_path):
    _, first = _run("fig5a", tmp_path / "first")
    _, second = _run("fig5a", tmp_path / "second")
    assert (first / "timeseries.csv").read_bytes() == (second / "timeseries.csv").read_bytes()
