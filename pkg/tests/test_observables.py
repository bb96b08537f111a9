import math

import numpy as np
import pytest

from channels import CavityParams, ChannelParams, ChannelSpec, build_channel
from errors import UndefinedObservableError
from evolver import TimeGrid, evolve, regression_photon_correlator
from hilbert import SpaceLayout, SystemParams, build_hamiltonian, initial_state
from observables import (
    CorrelationContext,
    ObservableSeries,
    bunching_indicator,
    complementarity,
    first_deviation_time,
    g2_tau,
    g2_zero,
    mandel_q,
    photon_number,
    series_names,
    spin_excitation,
    total_excitation,
)

GROUND_SPIN = np.diag([0.0, 1.0]).astype(complex)
EXCITED_SPIN = np.diag([1.0, 0.0]).astype(complex)


def _with_field(layout, populations, spins=GROUND_SPIN):
    field = np.zeros((layout.fock_dim, layout.fock_dim), dtype=complex)
    field[np.arange(len(populations)), np.arange(len(populations))] = populations
    return np.kron(spins, field / np.trace(field))


@pytest.mark.parametrize("n", [1, 2, 5])
def test_fock_state_statistics(n):
    layout = SpaceLayout.with_n_max(1, 8)
    populations = np.zeros(n + 1)
    populations[n] = 1.0
    rho = _with_field(layout, populations)
    assert photon_number(rho, layout) == pytest.approx(n)
    assert g2_zero(rho, layout) == pytest.approx(1 - 1 / n, abs=1e-12)
    assert mandel_q(rho, layout) == pytest.approx(-1.0, abs=1e-12)


def test_thermal_field_is_bunched():
    layout = SpaceLayout.with_n_max(1, 60)
    n_bar = 0.5
    k = np.arange(layout.fock_dim)
    rho = _with_field(layout, (n_bar / (1 + n_bar)) ** k)
    assert photon_number(rho, layout) == pytest.approx(n_bar, rel=1e-10)
    assert g2_zero(rho, layout) == pytest.approx(2.0, rel=1e-9)
    assert mandel_q(rho, layout) == pytest.approx(n_bar, rel=1e-9)


def test_coherent_field_is_poissonian():
    layout = SpaceLayout.with_n_max(1, 30)
    rho = initial_state(layout, "ground", mean_n=6.0)
    assert photon_number(rho, layout) == pytest.approx(6.0, rel=1e-8)
    assert g2_zero(rho, layout) == pytest.approx(1.0, abs=1e-8)
    assert abs(mandel_q(rho, layout)) < 1e-7


def test_vacuum_makes_g2_undefined():
    layout = SpaceLayout.with_n_max(1, 4)
    rho = initial_state(layout, "excited", mean_n=0.0)
    assert photon_number(rho, layout) == 0.0
    with pytest.raises(UndefinedObservableError):
        g2_zero(rho, layout)
    with pytest.raises(UndefinedObservableError):
        mandel_q(rho, layout)
    with pytest.raises(ValueError):
        g2_zero(rho, layout)


def test_spin_excitations_and_total():
    layout = SpaceLayout.with_n_max(2, 6)
    spins = np.kron(EXCITED_SPIN, GROUND_SPIN)
    populations = np.zeros(3)
    populations[2] = 1.0
    rho = _with_field(layout, populations, spins)
    assert spin_excitation(rho, layout, 1) == pytest.approx(1.0)
    assert spin_excitation(rho, layout, 2) == pytest.approx(0.0)
    assert total_excitation(rho, layout) == pytest.approx(3.0)
    with pytest.raises(IndexError):
        spin_excitation(rho, layout, 3)


def test_total_excitation_without_cavity():
    layout = SpaceLayout(n_spins=2, fock_dim=1)
    rho = initial_state(layout, "excited")
    assert total_excitation(rho, layout) == pytest.approx(2.0)


def test_series_names():
    assert series_names(2) == ["n_photon", "exc_1", "exc_2", "exc_total", "g2_0", "mandel_q"]


def _damped_system():
    layout = SpaceLayout.with_n_max(1, 10)
    H = build_hamiltonian(layout, SystemParams((1.0,), 1.05, (0.3,)))
    channel = build_channel(layout, "gksl_thermal", ChannelParams(gamma=(0.05,)), CavityParams(kappa=0.1), (1.0,))
    rho0 = initial_state(layout, "ground", mean_n=0.5)
    return layout, H, channel, rho0


def test_context_reuses_cached_states():
    layout, H, channel, rho0 = _damped_system()
    grid = TimeGrid(0.0, 2.0, 0.01, 10)
    context = CorrelationContext(rho0, H, channel, grid, layout)
    direct = evolve(rho0, H, channel, TimeGrid(0.0, 1.0, 0.01, 100), monitor_positivity=False).final_state
    np.testing.assert_allclose(context.state_at(1.0), direct, atol=1e-12)
    assert context.state_at(1.0) is context.state_at(1.0)
    later = evolve(rho0, H, channel, TimeGrid(0.0, 1.5, 0.01, 150), monitor_positivity=False).final_state
    np.testing.assert_allclose(context.state_at(1.5), later, atol=1e-12)


def test_context_correlator_matches_regression():
    layout, H, channel, rho0 = _damped_system()
    grid = TimeGrid(0.0, 2.0, 0.01, 10)
    context = CorrelationContext(rho0, H, channel, grid, layout)
    expected = regression_photon_correlator(rho0, H, channel, layout, 0.0, 1.5, dt=0.01)
    assert context.heisenberg(1.5) is not None
    assert context.correlator(0.0, 1.5, rho0) == pytest.approx(expected, rel=1e-8)
    with pytest.raises(ValueError):
        context.correlator(0.0, -1.0, rho0)


def test_coherent_field_stays_uncorrelated():
    layout = SpaceLayout.with_n_max(1, 30)
    H = build_hamiltonian(layout, SystemParams((1.11,), 1.15, (0.0,)))
    rho0 = initial_state(layout, "ground", mean_n=6.0)
    context = CorrelationContext(rho0, H, ChannelSpec(()), TimeGrid(0.0, 1.0, 0.01, 10), layout)
    assert g2_tau(context, 0.0, 1.0) == pytest.approx(1.0, rel=1e-6)
    assert abs(bunching_indicator(context, 0.0, 1.0)) < 1e-6


def test_zero_lag_bunching_vanishes():
    layout, H, channel, rho0 = _damped_system()
    context = CorrelationContext(rho0, H, channel, TimeGrid(0.0, 1.0, 0.01, 10), layout)
    assert bunching_indicator(context, 0.5, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_complementarity_of_exchanged_excitation():
    times = np.linspace(0.0, 10.0, 201)
    photon = 3 + np.cos(times)
    spins = 1 - np.cos(times)
    assert complementarity(times, photon, spins) == pytest.approx(-1.0, abs=1e-12)
    with pytest.raises(UndefinedObservableError):
        complementarity(times, np.ones_like(times), spins)


def test_first_deviation_time():
    times = np.linspace(0.0, 1.0, 11)
    series = ObservableSeries("W", times, 0.1 * times**2)
    assert first_deviation_time(series, threshold=0.05) == pytest.approx(0.8)
    assert first_deviation_time(ObservableSeries("flat", times, np.zeros(11))) is None
    with pytest.raises(ValueError):
        ObservableSeries("bad", times, np.full(11, math.nan))
