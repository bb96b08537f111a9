import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

import channels
from channels import (
    CavityParams,
    ChannelParams,
    ChannelSpec,
    DissipatorTerm,
    RateFn,
    SqueezeParams,
    bose_occupation,
    build_channel,
    build_sgad_channel,
    decoherence_F,
    pole_times,
    rate_cavity_nmad,
    rate_nmad,
    rate_pcenm,
    rate_semimarkov,
)
from errors import NumericalAbort, RatePoleError
from evolver import generator_apply
from hilbert import SpaceLayout, SystemParams, build_hamiltonian, spin_site_op

OMEGA = (1.11, 1.15)


def test_pcenm_constant_rates():
    assert rate_pcenm(2.2, 0.75, "gain", 3.0) == pytest.approx(2.2 * 1.75)
    assert rate_pcenm(2.2, 0.75, "loss", 3.0) == pytest.approx(2.2 * 0.25)


@settings(max_examples=50, deadline=None)
@given(
    nu=st.floats(0.01, 5.0),
    q=st.floats(-0.99, 0.99),
    t=st.floats(0.0, 50.0),
)
def test_pcenm_gain_loss_sum_and_difference(nu, q, t):
    gain = rate_pcenm(nu, q, "gain", t)
    loss = rate_pcenm(nu, q, "loss", t)
    assert gain + loss == pytest.approx(2 * nu)
    assert gain - loss == pytest.approx(2 * nu * q, abs=1e-12)


def test_pcenm_dephasing_limits():
    assert rate_pcenm(2.2, 0.75, "dephase", 0.0) == 0.0
    nu = 2.4
    assert rate_pcenm(nu, 0.75, "dephase", 20.0 / nu) == pytest.approx(-nu / 2, abs=1e-8)
    for t in (0.0, 0.3, 5.0, 100.0):
        assert abs(rate_pcenm(1.0, 1 - 1e-12, "dephase", t)) < 1e-6


def test_pcenm_dephasing_matches_closed_form():
    nu, q, t = 0.7, 0.4, 1.3
    x = 2 * nu * t
    expected = -nu * (1 - q * q) * math.sinh(x) / (2 * (1 + q * q + (1 - q * q) * math.cosh(x)))
    assert rate_pcenm(nu, q, "dephase", t) == pytest.approx(expected, rel=1e-13)


def test_pcenm_rejects_bad_parameters():
    with pytest.raises(ValueError):
        rate_pcenm(1.0, 1.0, "gain", 0.0)
    with pytest.raises(ValueError):
        rate_pcenm(0.0, 0.5, "loss", 0.0)


def test_decoherence_function():
    assert decoherence_F(0.525, 0.05, 0.0) == pytest.approx(1.0)
    qp = 0.3
    for t in (0.5, 2.0, 7.0):
        expected = math.exp(-qp * t / 2) * (1 + qp * t / 2)
        assert decoherence_F(qp / 2, qp, t) == pytest.approx(expected, rel=1e-12)
    values = [decoherence_F(0.525, 0.05, t) for t in np.linspace(0, 20, 401)]
    assert min(values) < 0 < max(values)


def test_nmad_rate_limits_and_regimes():
    assert abs(rate_nmad(0.525, 0.05, 1e-8)) < 1e-6
    assert rate_nmad(0.525, 0.05, 0.0) == 0.0
    overdamped = [rate_nmad(0.1, 1.0, t) for t in np.linspace(0.0, 50.0, 2001)]
    assert min(overdamped) >= 0.0
    assert all(math.isfinite(v) for v in overdamped)
    underdamped = []
    for t in np.linspace(0.01, 50.0, 2001):
        try:
            underdamped.append(rate_nmad(0.525, 0.05, t))
        except RatePoleError:
            continue
    assert min(underdamped) < 0


def test_nmad_rate_equals_log_derivative_of_F():
    gp, qp, t, h = 0.3, 0.9, 1.7, 1e-5
    numeric = -2 * (decoherence_F(gp, qp, t + h) - decoherence_F(gp, qp, t - h)) / (2 * h) / decoherence_F(gp, qp, t)
    assert rate_nmad(gp, qp, t) == pytest.approx(numeric, rel=1e-6)


def test_coth_form_pole_is_reported():
    # ratio 2 with unit scale puts the pole where cot(t/2) = -1
    with pytest.raises(RatePoleError) as info:
        rate_nmad(1.0, 1.0, 1.5 * math.pi)
    assert info.value.kind == "nmad"
    assert info.value.pole_estimate == pytest.approx(1.5 * math.pi, abs=1e-12)


def test_decoherence_function_rejects_imaginary_residue(monkeypatch):
    monkeypatch.setattr(channels, "_sinhc", lambda z: 1.0 + 1e-3j)
    with pytest.raises(NumericalAbort, match="imaginary residue"):
        decoherence_F(0.525, 0.05, 2.0)


@pytest.mark.parametrize("gamma_prime, q_prime", [(1.0, 1.0), (0.525, 0.05), (0.3, 0.2)])
def test_nmad_poles_are_the_zeros_of_F(gamma_prime, q_prime):
    poles = pole_times(2 * gamma_prime / q_prime, q_prime, 0.0, 60.0)
    assert poles and poles == sorted(poles)
    for t in poles:
        root = brentq(lambda s: decoherence_F(gamma_prime, q_prime, s), t - 0.05, t + 0.05, xtol=1e-14)
        assert t == pytest.approx(root, abs=1e-10)
    assert pole_times(2.0, 1.0, 0.0, 6.0) == pytest.approx([1.5 * math.pi], abs=1e-14)


def test_pole_times_window_and_regimes():
    assert pole_times(0.5, 1.0, 0.0, 100.0) == []
    assert pole_times(1.0, 1.0, 0.0, 100.0) == []
    both = pole_times(2.0, 1.0, 0.0, 12.0)
    assert both == pytest.approx([1.5 * math.pi, 3.5 * math.pi])
    assert pole_times(2.0, 1.0, 5.0, 12.0) == pytest.approx([3.5 * math.pi])


@pytest.mark.parametrize(
    "rate",
    [
        RateFn("nmad", {"gamma_prime": 0.525, "q_prime": 0.05}),
        RateFn("semimarkov", {"gamma_tilde": 0.155, "s": 0.1}),
        RateFn("cavity_nmad", {"kappa_prime": 0.25, "b": 0.05}),
    ],
)
def test_located_poles_are_divergences(rate):
    poles = rate.poles(0.0, 40.0)
    assert poles
    for t in poles:
        assert abs(rate(t - 1e-7)) > 1e5
        assert abs(rate(t + 1e-7)) > 1e5
        assert abs(rate(t - 0.5)) < 1e2


def test_bounded_rates_have_no_poles():
    assert RateFn.constant(0.3).poles(0.0, 100.0) == []
    assert RateFn("pcenm_dephase", {"nu": 2.2, "q": 0.75}).poles(0.0, 100.0) == []
    assert RateFn("nmad", {"gamma_prime": 0.1, "q_prime": 1.0}).poles(0.0, 100.0) == []


def test_channel_lists_rate_poles_earliest_first():
    layout = SpaceLayout.with_n_max(2, 2)
    channel = build_channel(
        layout,
        "nmad",
        ChannelParams(gamma_prime=(1.0, 0.525), q_prime=1.0),
        CavityParams(model="cavity_nmad", kappa_prime=0.25, b=0.05),
        OMEGA,
    )
    poles = channel.rate_poles(0.0, 30.0)
    assert [p.t for p in poles] == sorted(p.t for p in poles)
    assert {p.kind for p in poles} == {"nmad", "cavity_nmad"}
    assert poles[0].t == pytest.approx(1.5 * math.pi)
    assert poles[0].label == "spin1:loss"


def test_semimarkov_rate():
    assert abs(rate_semimarkov(0.155, 0.1, 1e-8)) < 1e-6
    gt, s = 1e-4, 0.1
    for t in np.linspace(0.0, 100.0, 1001):
        value = rate_semimarkov(gt, s, t)
        assert -1e-15 <= value <= 2 * gt / s + 1e-15
    oscillating = []
    for t in np.linspace(0.01, 50.0, 2001):
        try:
            oscillating.append(rate_semimarkov(0.155, 0.1, t))
        except RatePoleError:
            continue
    assert min(oscillating) < 0


def test_cavity_nmad_rate():
    assert abs(rate_cavity_nmad(0.25, 0.05, 1e-8)) < 1e-6
    values = []
    for t in np.linspace(0.01, 50.0, 2001):
        try:
            values.append(rate_cavity_nmad(0.25, 0.05, t))
        except RatePoleError:
            continue
    assert min(values) < 0
    plateau = rate_cavity_nmad(0.1, 10.0, 20.0)
    b_root = math.sqrt(1 - 0.02)
    assert plateau == pytest.approx(2 * 0.1 / (b_root + 1), rel=1e-12)
    assert plateau > 0


def test_bose_occupation():
    assert bose_occupation(1.11, 0.0) == 0.0
    assert bose_occupation(1.11, 1.0) == pytest.approx(1 / (math.exp(1.11) - 1))
    assert bose_occupation(1.11, 1.0) == pytest.approx(0.4912, abs=1e-3)
    with pytest.raises(ValueError):
        bose_occupation(1.0, -1.0)


def test_rate_fn_dispatch_and_validation():
    assert RateFn.constant(0.3)(10.0) == 0.3
    assert RateFn.constant(0.3).is_constant
    assert RateFn("pcenm_gain", {"nu": 1.0, "q": 0.5}).is_constant
    dephase = RateFn("pcenm_dephase", {"nu": 1.0, "q": 0.5})
    assert not dephase.is_constant
    assert dephase(2.0) == rate_pcenm(1.0, 0.5, "dephase", 2.0)
    with pytest.raises(ValueError):
        RateFn("nmad", {"gamma_prime": 0.1})
    with pytest.raises(ValueError):
        RateFn("wiggle", {})
    with pytest.raises(TypeError):
        dephase.params["nu"] = 2.0


def test_dephasing_term_needs_hermitian_operator():
    layout = SpaceLayout.with_n_max(1, 2)
    with pytest.raises(ValueError):
        DissipatorTerm(spin_site_op(layout, 1, "minus"), RateFn.constant(1.0), "dephasing")


def _layout():
    return SpaceLayout.with_n_max(2, 3)


def test_gksl_thermal_zero_temperature_structure():
    channel = build_channel(
        _layout(), "gksl_thermal", ChannelParams(gamma=(0.01, 0.02)), CavityParams(kappa=0.01), OMEGA
    )
    labels = [term.label for term in channel.terms]
    assert labels == ["spin1:loss", "spin2:loss", "cavity:loss"]
    assert not channel.time_dependent


def test_gksl_thermal_positive_temperature_adds_gain():
    channel = build_channel(
        _layout(), "gksl_thermal", ChannelParams(gamma=(0.01, 0.02), temperature=1.0),
        CavityParams(kappa=0.01, n_thermal=0.2), OMEGA,
    )
    rates = dict(zip((t.label for t in channel.terms), channel.rates_at(0.0)))
    n1 = bose_occupation(1.11, 1.0)
    assert rates["spin1:loss"] == pytest.approx(0.01 * (n1 + 1))
    assert rates["spin1:gain"] == pytest.approx(0.01 * n1)
    assert rates["cavity:gain"] == pytest.approx(0.01 * 0.2)


def test_pcenm_structure():
    channel = build_channel(
        _layout(), "pcenm", ChannelParams(nu=(2.2, 2.4), q=0.75), CavityParams(kappa=0.01)
    )
    per_spin = [t for t in channel.terms if t.label.startswith("spin1:")]
    assert [t.rate.is_constant for t in per_spin] == [True, True, False]
    assert per_spin[2].form == "dephasing"
    assert channel.time_dependent


def test_pcenm_dephasing_limit_is_constant():
    channel = build_channel(
        _layout(), "pcenm", ChannelParams(nu=(2.2, 2.4), q=0.75, pcenm_dephasing_limit=True), CavityParams()
    )
    assert not channel.time_dependent
    rates = dict(zip((t.label for t in channel.terms), channel.rates_at(0.0)))
    assert rates["spin2:dephase"] == pytest.approx(-1.2)


def test_semimarkov_starts_hamiltonian_plus_cavity_loss():
    layout = _layout()
    channel = build_channel(layout, "semimarkov", ChannelParams(gamma_tilde=(0.155, 0.16), s=0.1), CavityParams(kappa=0.01))
    rates = dict(zip((t.label for t in channel.terms), channel.rates_at(0.0)))
    assert rates["spin1:dephase"] == 0.0 and rates["spin2:dephase"] == 0.0
    assert rates["cavity:loss"] == 0.01


def test_cavity_nmad_doubles_spin_rate():
    channel = build_channel(
        _layout(), "gksl_thermal", ChannelParams(gamma=(0.05, 0.05)),
        CavityParams(model="cavity_nmad", kappa=0.5, kappa_prime=0.25, b=0.05), OMEGA,
    )
    rates = dict(zip((t.label for t in channel.terms), channel.rates_at(1.0)))
    assert rates["spin1:loss"] == pytest.approx(0.1)
    assert "cavity:kappa'(t)" in rates
    assert channel.label == "gksl_thermal+cavity_nmad"


def test_build_channel_collects_every_problem():
    with pytest.raises(ValueError) as info:
        build_channel(_layout(), "pcenm", ChannelParams(nu=(1.0,), q=1.5), CavityParams(kappa=-1.0))
    message = str(info.value)
    assert "nu" in message and "|q| < 1" in message and "kappa" in message
    with pytest.raises(ValueError):
        build_channel(_layout(), "lindblad", ChannelParams(), CavityParams())


def test_sgad_without_squeezing_reduces_to_amplitude_damping():
    layout = _layout()
    gammas = (0.0055, 0.0052)
    sgad = build_sgad_channel(layout, gammas, SqueezeParams(r=0.0, Phi=math.pi / 4, T=0.0), OMEGA, CavityParams(kappa=0.01))
    gksl = build_channel(layout, "gksl_thermal", ChannelParams(gamma=gammas), CavityParams(kappa=0.01), OMEGA)
    assert len(sgad.terms) == len(gksl.terms) == 3
    H = build_hamiltonian(layout, SystemParams(OMEGA, 1.15, (0.55, 0.52)))
    from conftest import random_density_matrix

    rho = random_density_matrix(layout.dim, seed=11)
    np.testing.assert_allclose(generator_apply(H, sgad, rho, 0.0), generator_apply(H, gksl, rho, 0.0), atol=1e-15)


def test_sgad_thermal_without_squeezing_matches_thermal_gksl():
    layout = _layout()
    gammas = (0.05, 0.04)
    sgad = build_sgad_channel(layout, gammas, SqueezeParams(r=0.0, T=1.0), OMEGA, CavityParams(kappa=0.01))
    gksl = build_channel(layout, "gksl_thermal", ChannelParams(gamma=gammas, temperature=1.0), CavityParams(kappa=0.01), OMEGA)
    H = build_hamiltonian(layout, SystemParams(OMEGA, 1.15, (0.55, 0.52)))
    from conftest import random_density_matrix

    rho = random_density_matrix(layout.dim, seed=12)
    np.testing.assert_allclose(generator_apply(H, sgad, rho, 0.0), generator_apply(H, gksl, rho, 0.0), atol=1e-14)


def test_sgad_squeezed_jump_operator():
    layout = SpaceLayout.with_n_max(1, 1)
    r, phi = 1.0, math.pi / 4
    channel = build_sgad_channel(layout, (0.2,), SqueezeParams(r=r, Phi=phi, T=1.0), (1.11,))
    R1, R2 = (term.operator.toarray() for term in channel.terms)
    n_th = bose_occupation(1.11, 1.0)
    R = math.cosh(r) * spin_site_op(layout, 1, "minus").toarray() + np.exp(1j * phi) * math.sinh(r) * spin_site_op(layout, 1, "plus").toarray()
    np.testing.assert_allclose(R1, math.sqrt(0.2 * (n_th + 1)) * R)
    np.testing.assert_allclose(R2, math.sqrt(0.2 * n_th) * R.conj().T)
    with pytest.raises(ValueError):
        build_sgad_channel(layout, (-0.1,), SqueezeParams(), (1.11,))


def test_squeeze_params_validation():
    with pytest.raises(ValueError):
        SqueezeParams(r=-0.1)
    with pytest.raises(ValueError):
        SqueezeParams(T=-1.0)


def test_channel_spec_rejects_mixed_spaces():
    a = DissipatorTerm(spin_site_op(SpaceLayout.with_n_max(1, 2), 1, "minus"), RateFn.constant(1.0))
    b = DissipatorTerm(spin_site_op(SpaceLayout.with_n_max(1, 3), 1, "minus"), RateFn.constant(1.0))
    with pytest.raises(ValueError):
        ChannelSpec((a, b))


@pytest.mark.parametrize(
    "rate",
    [
        RateFn("pcenm_dephase", {"nu": 2.4, "q": 0.75}),
        RateFn("semimarkov", {"gamma_tilde": 0.0, "s": 0.1}),
        RateFn("semimarkov", {"gamma_tilde": 1e-4, "s": 0.1}),
        RateFn("nmad", {"gamma_prime": 0.1, "q_prime": 1.0}),
        RateFn("cavity_nmad", {"kappa_prime": 0.1, "b": 10.0}),
    ],
)
def test_rates_are_finite_on_dense_scan(rate):
    assert all(math.isfinite(rate(t)) for t in np.linspace(0.0, 50.0, 5001))
