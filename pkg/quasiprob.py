"""Spin quasi-probability distributions W, P and Q of the reduced spin state.

All three are expansions over the multipole components of rho,

    F(Omega_1..Omega_N) = sum_{mu, eta} rho_{mu_1 eta_1 ... mu_N eta_N}
                          prod_k w^F_{mu_k eta_k} Y_{mu_k eta_k}(theta_k, phi_k)

with a kind-specific weight ``w^F`` per spin. The component tensor is computed
once per state and contracted against harmonics for any number of angles.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache, reduce
from typing import Literal, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from numpy.typing import NDArray

try:
    from .angular import HalfInt, spherical_harmonic
    from .config import QD_DEFAULTS
    from .errors import QuasiProbabilityError
    from .hilbert import DensityMatrix, SpaceLayout, atomic_coherent_state, multipole_components, multipole_indices
except ImportError:
    from angular import HalfInt, spherical_harmonic
    from config import QD_DEFAULTS
    from errors import QuasiProbabilityError
    from hilbert import DensityMatrix, SpaceLayout, atomic_coherent_state, multipole_components, multipole_indices

logger = logging.getLogger(__name__)

__all__ = [
    "QDKind",
    "QD_KINDS",
    "AngleTuple",
    "Heatmap",
    "reduce_to_spins",
    "qd_weights",
    "qd_values",
    "qd_point",
    "qd_direct_Q",
    "qd_normalization",
    "p_reconstruct",
    "heatmap",
    "p_heatmap",
]

QDKind = Literal["W", "P", "Q"]
QD_KINDS: tuple[str, ...] = ("W", "P", "Q")
SPIN_HALF = HalfInt(1)


@dataclass(frozen=True, slots=True)
class AngleTuple:
    theta: tuple[float, ...]
    phi: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", tuple(float(x) for x in self.theta))
        object.__setattr__(self, "phi", tuple(float(x) for x in self.phi))
        if len(self.theta) != len(self.phi):
            raise ValueError(f"{len(self.theta)} polar angles but {len(self.phi)} azimuths")
        if any(not -1e-12 <= th <= math.pi + 1e-12 for th in self.theta):
            raise ValueError(f"polar angles must lie in [0, pi], got {self.theta}")

    def __len__(self) -> int:
        return len(self.theta)


@dataclass(slots=True)
class Heatmap:
    kind: str
    theta: NDArray[np.float64]
    phi: NDArray[np.float64]
    values: NDArray[np.float64]
    theta_scalings: tuple[float, ...] = ()
    phi_scalings: tuple[float, ...] = ()
    time: float | None = None
    metadata: dict = field(default_factory=dict)


def reduce_to_spins(rho: DensityMatrix, layout: SpaceLayout) -> DensityMatrix:
    """Partial trace over the cavity factor."""

    rho = np.asarray(rho)
    if rho.shape != (layout.dim, layout.dim):
        raise ValueError(f"density matrix shape {rho.shape} does not match layout dimension {layout.dim}")
    if not layout.has_cavity:
        return rho.copy()
    blocks = rho.reshape(layout.spin_dim, layout.fock_dim, layout.spin_dim, layout.fock_dim)
    return np.einsum("afbf->ab", blocks)


@lru_cache(maxsize=None)
def qd_weights(kind: str, tj: int = 1) -> NDArray[np.float64]:
    """Per-spin weights w_{mu eta} in :func:`multipole_indices` order."""

    if kind not in QD_KINDS:
        raise ValueError(f"unknown distribution {kind!r}; expected one of {QD_KINDS}")
    f = math.factorial
    inv_sqrt_4pi = 1.0 / math.sqrt(4.0 * math.pi)
    weights = []
    for mu, eta in multipole_indices(tj):
        sign = -1.0 if (mu - eta) % 2 else 1.0
        if kind == "W":
            # square-root prefactor so that W integrates to one
            weights.append(math.sqrt((tj + 1) / (4.0 * math.pi)))
        elif kind == "P":
            ratio = f(tj - mu) * f(tj + mu + 1) / f(tj) ** 2
            weights.append(inv_sqrt_4pi * sign * math.sqrt(ratio))
        else:
            ratio = f(tj) ** 2 / (f(tj - mu) * f(tj + mu + 1))
            weights.append(inv_sqrt_4pi * sign * (tj + 1) * math.sqrt(ratio))
    result = np.array(weights)
    result.setflags(write=False)
    return result


def _weighted_harmonics(kind: str, tj: int, theta: NDArray, phi: NDArray) -> NDArray[np.complex128]:
    indices = multipole_indices(tj)
    table = np.empty((theta.shape[0], len(indices)), dtype=complex)
    for column, (mu, eta) in enumerate(indices):
        table[:, column] = spherical_harmonic(mu, eta, theta, phi)
    return table * qd_weights(kind, tj)[None, :]


def _real_part(values: NDArray[np.complex128], tolerance: float) -> NDArray[np.float64]:
    residue = np.abs(values.imag)
    scale = np.maximum(1.0, np.abs(values.real))
    if residue.size and (residue / scale).max() > tolerance:
        raise QuasiProbabilityError(
            f"quasi-probability kept an imaginary part of {residue.max():.3e} (tolerance {tolerance:.1e})"
        )
    return values.real


def qd_values(
    components: NDArray[np.complex128],
    theta: NDArray,
    phi: NDArray,
    kind: QDKind,
    tj: int = 1,
    imag_tolerance: float = QD_DEFAULTS["imag_tolerance"],
) -> NDArray[np.float64]:
    """Evaluate a distribution at many angle tuples.

    ``theta`` and ``phi`` have shape (points, N); ``components`` comes from
    :func:`hilbert.multipole_components`.
    """

    theta = np.atleast_2d(np.asarray(theta, dtype=float))
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    n_spins = components.ndim
    if theta.shape != phi.shape or theta.shape[1] != n_spins:
        raise ValueError(f"angle arrays {theta.shape}/{phi.shape} do not fit {n_spins} spins")
    result = np.einsum(
        "pk,k...->p...", _weighted_harmonics(kind, tj, theta[:, 0], phi[:, 0]), components
    )
    for k in range(1, n_spins):
        result = np.einsum("pk,pk...->p...", _weighted_harmonics(kind, tj, theta[:, k], phi[:, k]), result)
    return _real_part(result, imag_tolerance)


def _n_spins_of(rho_spins: NDArray) -> int:
    dim = np.asarray(rho_spins).shape[0]
    n_spins = int(round(math.log2(dim))) if dim > 0 else 0
    if n_spins < 1 or 2**n_spins != dim or np.asarray(rho_spins).shape != (dim, dim):
        raise ValueError(f"spin density matrix must be 2^N x 2^N, got {np.asarray(rho_spins).shape}")
    return n_spins


def qd_point(rho_spins: DensityMatrix, angles: AngleTuple, kind: QDKind) -> float:
    """W, P or Q of the N-spin state at one angle tuple."""

    n_spins = _n_spins_of(rho_spins)
    if len(angles) != n_spins:
        raise ValueError(f"{len(angles)} angle pairs for {n_spins} spins")
    components = multipole_components(rho_spins, n_spins, SPIN_HALF)
    return float(qd_values(components, np.array([angles.theta]), np.array([angles.phi]), kind)[0])


def qd_direct_Q(rho_spins: DensityMatrix, angles: AngleTuple) -> float:
    """Q as (2/4pi)^N <Omega|rho|Omega> over a product of spin coherent states."""

    n_spins = _n_spins_of(rho_spins)
    if len(angles) != n_spins:
        raise ValueError(f"{len(angles)} angle pairs for {n_spins} spins")
    state = reduce(
        np.kron, [atomic_coherent_state(SPIN_HALF, th, ph) for th, ph in zip(angles.theta, angles.phi)]
    )
    overlap = np.vdot(state, np.asarray(rho_spins) @ state)
    return float((2.0 / (4.0 * math.pi)) ** n_spins * overlap.real)


def _sphere_rule(order: int, phi_points: int | None = None) -> tuple[NDArray, NDArray, NDArray]:
    """Gauss-Legendre in cos(theta) times a uniform azimuthal rule."""

    if order < 2:
        raise ValueError(f"quadrature order must be >= 2, got {order}")
    x, wx = leggauss(order)
    n_phi = phi_points or 2 * order + 1
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
    theta_grid, phi_grid = np.meshgrid(np.arccos(x), phi, indexing="ij")
    weights = np.outer(wx, np.full(n_phi, 2.0 * math.pi / n_phi))
    return theta_grid.ravel(), phi_grid.ravel(), weights.ravel()


def qd_normalization(
    rho_spins: DensityMatrix,
    kind: QDKind,
    quadrature_order: int = QD_DEFAULTS["quadrature_order"],
) -> float:
    """Integral of the distribution over all N spheres.

    The tensor-product rule factorizes, so each sphere's quadrature is applied
    to its own axis of the component tensor.
    """

    n_spins = _n_spins_of(rho_spins)
    theta, phi, weights = _sphere_rule(quadrature_order)
    per_sphere = weights @ _weighted_harmonics(kind, 1, theta, phi)
    tensor = multipole_components(rho_spins, n_spins, SPIN_HALF)
    for _ in range(n_spins):
        tensor = np.tensordot(per_sphere, tensor, axes=([0], [0]))
    return float(_real_part(np.atleast_1d(tensor), QD_DEFAULTS["imag_tolerance"])[0])


def p_reconstruct(
    rho_spin: DensityMatrix,
    quadrature_order: int = QD_DEFAULTS["quadrature_order"],
) -> NDArray[np.complex128]:
    """Single-spin integral of P(Omega) |Omega><Omega| over the sphere."""

    if np.asarray(rho_spin).shape != (2, 2):
        raise ValueError("P reconstruction is defined for a single spin-1/2")
    theta, phi, weights = _sphere_rule(quadrature_order)
    components = multipole_components(rho_spin, 1, SPIN_HALF)
    values = qd_values(components, theta[:, None], phi[:, None], "P")
    rebuilt = np.zeros((2, 2), dtype=complex)
    for th, ph, w, p in zip(theta, phi, weights, values):
        state = atomic_coherent_state(SPIN_HALF, th, ph)
        rebuilt += (w * p) * np.outer(state, state.conj())
    return rebuilt


def heatmap(
    rho_spins: DensityMatrix,
    theta_scalings: Sequence[float],
    phi_scalings: Sequence[float],
    kind: QDKind = "P",
    theta_points: int = QD_DEFAULTS["heatmap_theta_points"],
    phi_points: int = QD_DEFAULTS["heatmap_phi_points"],
) -> Heatmap:
    """Scan theta in [0, pi] and phi in [0, 2pi) with theta_k = s_k theta, phi_k = t_k phi."""

    n_spins = _n_spins_of(rho_spins)
    if len(theta_scalings) != n_spins or len(phi_scalings) != n_spins:
        raise ValueError(f"need {n_spins} theta and phi scalings")
    if any(not 0 <= s <= 1 for s in theta_scalings):
        raise ValueError(f"theta scalings must lie in [0, 1] to keep theta_k in [0, pi], got {list(theta_scalings)}")
    if theta_points < 2 or phi_points < 1:
        raise ValueError("heatmap needs at least 2 theta points and 1 phi point")
    theta = np.linspace(0.0, math.pi, theta_points)
    phi = np.linspace(0.0, 2.0 * math.pi, phi_points, endpoint=False)
    theta_grid, phi_grid = np.meshgrid(theta, phi, indexing="ij")
    theta_k = theta_grid.ravel()[:, None] * np.asarray(theta_scalings, dtype=float)[None, :]
    phi_k = phi_grid.ravel()[:, None] * np.asarray(phi_scalings, dtype=float)[None, :]
    components = multipole_components(rho_spins, n_spins, SPIN_HALF)
    values = qd_values(components, theta_k, phi_k, kind).reshape(theta_points, phi_points)
    return Heatmap(kind, theta, phi, values, tuple(theta_scalings), tuple(phi_scalings))


def p_heatmap(
    rho_spins: DensityMatrix,
    theta_scalings: Sequence[float],
    phi_scalings: Sequence[float],
    grid: tuple[int, int] = (QD_DEFAULTS["heatmap_theta_points"], QD_DEFAULTS["heatmap_phi_points"]),
) -> Heatmap:
    return heatmap(rho_spins, theta_scalings, phi_scalings, "P", *grid)
