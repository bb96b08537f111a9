import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_density_matrix
from errors import QuasiProbabilityError
from hilbert import SpaceLayout, coherent_state, multipole_components
from quasiprob import (
    SPIN_HALF,
    AngleTuple,
    heatmap,
    p_heatmap,
    p_reconstruct,
    qd_direct_Q,
    qd_normalization,
    qd_point,
    qd_values,
    qd_weights,
    reduce_to_spins,
)

FOUR_PI = 4 * math.pi
EXCITED = np.diag([1.0, 0.0]).astype(complex)


def _random_angles(rng, n):
    return AngleTuple(tuple(rng.uniform(0, math.pi, n)), tuple(rng.uniform(0, 2 * math.pi, n)))


def test_reduce_to_spins_of_product_state():
    layout = SpaceLayout.with_n_max(2, 20)
    rho_a = random_density_matrix(4, seed=1)
    field = coherent_state(2.0, 0.3, layout).vector
    rho = np.kron(rho_a, np.outer(field, field.conj()))
    reduced = reduce_to_spins(rho, layout)
    np.testing.assert_allclose(reduced, rho_a, atol=1e-14)
    assert np.trace(reduced) == pytest.approx(np.trace(rho), abs=1e-12)


def test_reduce_to_spins_of_entangled_pair():
    layout = SpaceLayout.with_n_max(1, 1)
    bell = np.zeros(4, dtype=complex)
    bell[0 * 2 + 0] = bell[1 * 2 + 1] = 1 / math.sqrt(2)
    np.testing.assert_allclose(reduce_to_spins(np.outer(bell, bell.conj()), layout), np.eye(2) / 2, atol=1e-15)


def test_reduce_to_spins_rejects_wrong_shape():
    with pytest.raises(ValueError):
        reduce_to_spins(np.eye(3), SpaceLayout.with_n_max(1, 2))


@pytest.mark.parametrize("kind", ["W", "P", "Q"])
def test_maximally_mixed_spin_is_flat(kind):
    rng = np.random.default_rng(0)
    for _ in range(5):
        angles = _random_angles(rng, 1)
        assert qd_point(np.eye(2) / 2, angles, kind) == pytest.approx(1 / FOUR_PI, abs=1e-14)
    angles = _random_angles(rng, 3)
    assert qd_point(np.eye(8) / 8, angles, kind) == pytest.approx(FOUR_PI**-3, rel=1e-12)


def test_excited_spin_q_at_the_poles():
    assert qd_point(EXCITED, AngleTuple((math.pi,), (0.4,)), "Q") == pytest.approx(2 / FOUR_PI)
    assert abs(qd_point(EXCITED, AngleTuple((0.0,), (0.4,)), "Q")) < 1e-15
    assert qd_direct_Q(EXCITED, AngleTuple((math.pi,), (0.4,))) == pytest.approx(2 / FOUR_PI)


def test_excited_spin_p_is_negative_somewhere():
    angles = AngleTuple((0.0,), (0.0,))
    assert qd_point(EXCITED, angles, "P") == pytest.approx(-2 / FOUR_PI)
    assert qd_point(EXCITED, angles, "Q") >= -1e-10


def test_q_matches_coherent_state_oracle_on_random_two_spin_states():
    rng = np.random.default_rng(42)
    for seed in range(100):
        rho = random_density_matrix(4, seed=seed)
        angles = _random_angles(rng, 2)
        assert qd_point(rho, angles, "Q") == pytest.approx(qd_direct_Q(rho, angles), abs=1e-9)


def test_q_matches_oracle_for_four_spins():
    rng = np.random.default_rng(3)
    rho = random_density_matrix(16, seed=8)
    for _ in range(10):
        angles = _random_angles(rng, 4)
        assert qd_point(rho, angles, "Q") == pytest.approx(qd_direct_Q(rho, angles), abs=1e-9)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000), n_spins=st.sampled_from([1, 2]), kind=st.sampled_from(["W", "P", "Q"]))
def test_every_distribution_is_normalized(seed, n_spins, kind):
    rho = random_density_matrix(2**n_spins, seed=seed)
    assert qd_normalization(rho, kind) == pytest.approx(1.0, abs=1e-8)


def test_normalization_four_spins_reduced_order():
    rho = random_density_matrix(16, seed=21)
    for kind in ("W", "P", "Q"):
        assert qd_normalization(rho, kind, quadrature_order=3) == pytest.approx(1.0, abs=1e-8)


def test_p_reconstructs_single_spin_state():
    for seed in range(5):
        rho = random_density_matrix(2, seed=seed)
        np.testing.assert_allclose(p_reconstruct(rho), rho, atol=1e-8)
    with pytest.raises(ValueError):
        p_reconstruct(np.eye(4) / 4)


def test_q_is_nonnegative_and_w_p_real_on_random_states():
    rng = np.random.default_rng(17)
    for seed in range(20):
        rho = random_density_matrix(4, seed=100 + seed)
        components = multipole_components(rho, 2)
        theta = rng.uniform(0, math.pi, (50, 2))
        phi = rng.uniform(0, 2 * math.pi, (50, 2))
        assert qd_values(components, theta, phi, "Q").min() >= -1e-10
        for kind in ("W", "P"):
            assert np.all(np.isfinite(qd_values(components, theta, phi, kind)))


def test_non_hermitian_input_is_rejected():
    coherence = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    with pytest.raises(QuasiProbabilityError):
        qd_point(coherence, AngleTuple((1.0,), (0.7,)), "Q")


def test_weights_and_angle_validation():
    np.testing.assert_allclose(qd_weights("W"), math.sqrt(2 / FOUR_PI))
    assert qd_weights("P")[0] == pytest.approx(math.sqrt(2) / math.sqrt(FOUR_PI))
    with pytest.raises(ValueError):
        qd_weights("R")
    with pytest.raises(ValueError):
        AngleTuple((0.1, 0.2), (0.3,))
    with pytest.raises(ValueError):
        AngleTuple((4.0,), (0.3,))
    with pytest.raises(ValueError):
        qd_point(np.eye(4) / 4, AngleTuple((0.1,), (0.2,)), "W")


def test_heatmap_of_maximally_mixed_state_is_constant():
    result = p_heatmap(np.eye(16) / 16, [1 / 4, 3 / 5, 2 / 3, 3 / 4], [3 / 4, 1 / 3, 1 / 4, 1 / 6], grid=(7, 9))
    assert result.values.shape == (7, 9)
    np.testing.assert_allclose(result.values, FOUR_PI**-4, rtol=1e-12)
    assert result.theta[0] == 0.0 and result.theta[-1] == pytest.approx(math.pi)
    assert result.phi[-1] < 2 * math.pi


def test_heatmap_theta_zero_row_ignores_scalings():
    rho = random_density_matrix(4, seed=2)
    result = heatmap(rho, [0.5, 0.25], [0.75, 1 / 3], "P", theta_points=5, phi_points=6)
    # at theta = 0 every theta_k vanishes and phi no longer matters
    np.testing.assert_allclose(result.values[0], result.values[0, 0], atol=1e-14)
    expected = qd_point(rho, AngleTuple((0.0, 0.0), (0.0, 0.0)), "P")
    assert result.values[0, 0] == pytest.approx(expected, abs=1e-14)


def test_heatmap_rejects_bad_scalings():
    with pytest.raises(ValueError):
        heatmap(np.eye(4) / 4, [0.5], [0.5], "P")
    with pytest.raises(ValueError):
        heatmap(np.eye(4) / 4, [1.5, 0.5], [0.5, 0.5], "P")


def test_spin_half_constant():
    assert SPIN_HALF.twice_value == 1
