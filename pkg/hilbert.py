"""States and operators on the composite spin_1 (x) ... (x) spin_N (x) cavity space."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache, reduce
from typing import Literal, Sequence, Union

import numpy as np
import scipy.sparse as sp
from numpy.typing import NDArray
from scipy.special import gammaln
from scipy.stats import poisson

try:
    from .angular import HalfInt, wigner_3j
    from .config import TRUNCATION_DEFAULTS
    from .errors import NumericalAbort, TruncationError
except ImportError:
    from angular import HalfInt, wigner_3j
    from config import TRUNCATION_DEFAULTS
    from errors import NumericalAbort, TruncationError

__all__ = [
    "DensityMatrix",
    "SpaceLayout",
    "Operator",
    "SystemParams",
    "CoherentState",
    "embed",
    "boson_ops",
    "number_operator",
    "spin_site_op",
    "excitation_number_operator",
    "build_hamiltonian",
    "coherent_state",
    "atomic_coherent_state",
    "multipole_indices",
    "multipole_operator",
    "multipole_component",
    "multipole_components",
    "initial_state",
]

DensityMatrix = NDArray[np.complex128]

# Excited state first within each spin factor, so sigma_z = diag(+1, -1).
EXCITED, GROUND = 0, 1
_SIGMA = {
    "z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
    "plus": np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex),
    "minus": np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex),
}
_SIGMA_ALIASES = {"+": "plus", "-": "minus", "p": "plus", "m": "minus", "sz": "z"}


@dataclass(frozen=True, slots=True)
class SpaceLayout:
    """Tensor layout spin_1 (x) ... (x) spin_N (x) cavity.

    ``fock_dim == 1`` describes a cavity-free (spins only) space.
    """

    n_spins: int
    fock_dim: int

    def __post_init__(self) -> None:
        if self.n_spins < 1:
            raise ValueError(f"need at least one spin, got n_spins={self.n_spins}")
        if self.fock_dim < 1:
            raise ValueError(f"fock_dim must be >= 1, got {self.fock_dim}")

    @classmethod
    def with_n_max(cls, n_spins: int, n_max: int) -> "SpaceLayout":
        if n_max < 1:
            raise ValueError(f"n_max must be >= 1, got {n_max}")
        return cls(n_spins=n_spins, fock_dim=n_max + 1)

    @property
    def has_cavity(self) -> bool:
        return self.fock_dim > 1

    @property
    def n_max(self) -> int:
        return self.fock_dim - 1

    @property
    def spin_dim(self) -> int:
        return 2**self.n_spins

    @property
    def dims(self) -> tuple[int, ...]:
        spins = (2,) * self.n_spins
        return spins + (self.fock_dim,) if self.has_cavity else spins

    @property
    def dim(self) -> int:
        return self.spin_dim * self.fock_dim


@dataclass(frozen=True, slots=True, eq=False)
class Operator:
    """Immutable sparse complex operator tagged with its tensor-factor dimensions."""

    matrix: sp.csr_matrix
    dims: tuple[int, ...]
    hermitian: bool = False

    def __post_init__(self) -> None:
        matrix = sp.csr_matrix(self.matrix, dtype=np.complex128, copy=True)
        matrix.sum_duplicates()
        matrix.eliminate_zeros()
        if matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"operator must be square, got shape {matrix.shape}")
        if math.prod(self.dims) != matrix.shape[0]:
            raise ValueError(f"dims {self.dims} do not match matrix dimension {matrix.shape[0]}")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dag(self) -> "Operator":
        return Operator(self.matrix.conj().T, self.dims, self.hermitian)

    def toarray(self) -> NDArray[np.complex128]:
        return self.matrix.toarray()

    def expect(self, rho: NDArray[np.complex128]) -> complex:
        """Tr[self @ rho] without forming the product."""

        return complex(self.matrix.multiply(np.asarray(rho).T).sum())

    def _check(self, other: "Operator") -> None:
        if other.dims != self.dims:
            raise ValueError(f"dimension mismatch: {self.dims} vs {other.dims}")

    def __matmul__(self, other):
        if isinstance(other, Operator):
            self._check(other)
            return Operator(self.matrix @ other.matrix, self.dims)
        return self.matrix @ other

    def __add__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.matrix + other.matrix, self.dims, self.hermitian and other.hermitian)

    def __sub__(self, other: "Operator") -> "Operator":
        self._check(other)
        return Operator(self.matrix - other.matrix, self.dims, self.hermitian and other.hermitian)

    def __mul__(self, scalar: complex) -> "Operator":
        real_scalar = np.isreal(scalar)
        return Operator(self.matrix * scalar, self.dims, self.hermitian and bool(real_scalar))

    __rmul__ = __mul__

    def __neg__(self) -> "Operator":
        return self * -1.0


@dataclass(frozen=True, slots=True)
class SystemParams:
    """Spin frequencies omega_k, cavity frequency omega_c and couplings g_k."""

    omega: tuple[float, ...]
    omega_c: float
    g: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "omega", tuple(float(w) for w in self.omega))
        object.__setattr__(self, "g", tuple(float(x) for x in self.g))
        object.__setattr__(self, "omega_c", float(self.omega_c))
        if len(self.omega) != len(self.g):
            raise ValueError(f"omega has {len(self.omega)} entries but g has {len(self.g)}")
        values = (*self.omega, self.omega_c, *self.g)
        if not all(math.isfinite(v) for v in values):
            raise ValueError("frequencies and couplings must be finite reals")

    @property
    def n_spins(self) -> int:
        return len(self.omega)


@dataclass(frozen=True, slots=True)
class CoherentState:
    vector: NDArray[np.complex128] = field(repr=False)
    tail: float
    mean_n: float
    zeta: float


def embed(layout: SpaceLayout, local: NDArray | sp.spmatrix, site: int) -> Operator:
    """Place ``local`` on tensor factor ``site`` (0-based; site n_spins is the cavity)."""

    dims = layout.dims
    if not 0 <= site < len(dims):
        raise IndexError(f"site {site} outside layout with {len(dims)} factors")
    local = sp.csr_matrix(local, dtype=np.complex128)
    if local.shape != (dims[site], dims[site]):
        raise ValueError(f"local operator shape {local.shape} does not fit factor of dimension {dims[site]}")
    factors = [local if i == site else sp.identity(d, dtype=np.complex128, format="csr") for i, d in enumerate(dims)]
    return Operator(reduce(lambda x, y: sp.kron(x, y, format="csr"), factors), dims)


def boson_ops(layout: SpaceLayout) -> tuple[Operator, Operator]:
    """Truncated annihilation and creation operators on the full space."""

    if layout.fock_dim < 2:
        raise ValueError("boson operators need a cavity factor with fock_dim >= 2")
    local = sp.diags(np.sqrt(np.arange(1, layout.fock_dim, dtype=float)), offsets=1, format="csr")
    a = embed(layout, local, layout.n_spins)
    return a, a.dag()


def number_operator(layout: SpaceLayout) -> Operator:
    local = sp.diags(np.arange(layout.fock_dim, dtype=float), format="csr")
    return Operator(embed(layout, local, layout.n_spins).matrix, layout.dims, hermitian=True)


def spin_site_op(layout: SpaceLayout, k: int, which: Literal["z", "plus", "minus"]) -> Operator:
    """Single-site Pauli operator sigma^z, sigma^+ or sigma^- on spin ``k`` (1-based)."""

    if not 1 <= k <= layout.n_spins:
        raise IndexError(f"spin index {k} outside 1..{layout.n_spins}")
    key = _SIGMA_ALIASES.get(which, which)
    if key not in _SIGMA:
        raise ValueError(f"unknown spin operator {which!r}; expected one of {sorted(_SIGMA)}")
    op = embed(layout, _SIGMA[key], k - 1)
    if key == "z":
        return Operator(op.matrix, op.dims, hermitian=True)
    return op


def excitation_number_operator(layout: SpaceLayout) -> Operator:
    """N_exc = sum_k sigma^+_k sigma^-_k + a^dagger a."""

    total = sp.csr_matrix((layout.dim, layout.dim), dtype=np.complex128)
    for k in range(1, layout.n_spins + 1):
        total = total + (spin_site_op(layout, k, "plus") @ spin_site_op(layout, k, "minus")).matrix
    if layout.has_cavity:
        total = total + number_operator(layout).matrix
    return Operator(total, layout.dims, hermitian=True)


def build_hamiltonian(layout: SpaceLayout, params: SystemParams) -> Operator:
    """Tavis-Cummings Hamiltonian under the rotating-wave approximation."""

    if params.n_spins != layout.n_spins:
        raise ValueError(f"parameters describe {params.n_spins} spins but layout has {layout.n_spins}")
    a, a_dag = boson_ops(layout)
    H = params.omega_c * number_operator(layout).matrix
    for k in range(1, layout.n_spins + 1):
        sz = spin_site_op(layout, k, "z").matrix
        sp_k = spin_site_op(layout, k, "plus").matrix
        sm_k = spin_site_op(layout, k, "minus").matrix
        H = H + 0.5 * params.omega[k - 1] * sz
        H = H + params.g[k - 1] * (sp_k @ a.matrix + sm_k @ a_dag.matrix)
    return _check_sparsity(Operator(H, layout.dims, hermitian=True), layout)


def _check_sparsity(hamiltonian: Operator, layout: SpaceLayout) -> Operator:
    """At most one diagonal and 2N hopping entries per row."""

    bound = layout.dim * (2 * layout.n_spins + 1)
    if hamiltonian.matrix.nnz > bound:
        raise NumericalAbort(
            f"Hamiltonian has {hamiltonian.matrix.nnz} non-zeros, above the bound {bound}",
            {"nnz": int(hamiltonian.matrix.nnz), "bound": bound},
        )
    return hamiltonian


def coherent_state(
    mean_n: float,
    zeta: float,
    layout: SpaceLayout,
    tolerance: float | None = None,
) -> CoherentState:
    """Truncated field coherent state with |alpha|^2 = mean_n and phase zeta."""

    if mean_n < 0:
        raise ValueError(f"mean photon number must be non-negative, got {mean_n}")
    if tolerance is None:
        tolerance = TRUNCATION_DEFAULTS["coherent_tail_tolerance"]
    n = np.arange(layout.fock_dim)
    if mean_n == 0:
        vector = np.zeros(layout.fock_dim, dtype=complex)
        vector[0] = 1.0
        return CoherentState(vector, 0.0, 0.0, zeta)

    tail = float(poisson.sf(layout.fock_dim - 1, mean_n))
    if tail > tolerance:
        raise TruncationError(
            f"coherent state with <n>={mean_n} loses {tail:.3e} probability above n_max={layout.fock_dim - 1}"
            f" (tolerance {tolerance:.1e}); increase n_max"
        )
    log_amplitude = -0.5 * mean_n + 0.5 * n * math.log(mean_n) - 0.5 * gammaln(n + 1)
    vector = np.exp(log_amplitude) * np.exp(1j * n * zeta)
    vector = vector / np.linalg.norm(vector)
    return CoherentState(vector.astype(complex), tail, float(mean_n), float(zeta))


def atomic_coherent_state(j, theta: float, phi: float) -> NDArray[np.complex128]:
    """|theta, phi> in the Dicke basis ordered m = j, j-1, ..., -j."""

    if not -1e-12 <= theta <= math.pi + 1e-12:
        raise ValueError(f"theta must lie in [0, pi], got {theta}")
    tj = HalfInt.of(j).twice_value
    s, c = math.sin(theta / 2.0), math.cos(theta / 2.0)
    state = np.empty(tj + 1, dtype=complex)
    for i in range(tj + 1):
        power = tj - i  # j + m for m = j - i
        state[i] = math.sqrt(math.comb(tj, power)) * s**power * c ** (tj - power) * np.exp(-1j * power * phi)
    return state


@lru_cache(maxsize=None)
def multipole_indices(tj: int) -> tuple[tuple[int, int], ...]:
    """Canonical (mu, eta) ordering for a spin with 2j = ``tj``."""

    return tuple((mu, eta) for mu in range(tj + 1) for eta in range(-mu, mu + 1))


@lru_cache(maxsize=None)
def _multipole_matrix(tj: int, mu: int, eta: int) -> NDArray[np.complex128]:
    d = tj + 1
    j = HalfInt(tj)
    matrix = np.zeros((d, d), dtype=complex)
    for row in range(d):
        m = HalfInt(tj - 2 * row)
        for col in range(d):
            m_prime = HalfInt(tj - 2 * col)
            value = wigner_3j(j, mu, j, -m, eta, m_prime)
            if value:
                matrix[row, col] = (-1) ** row * math.sqrt(2 * mu + 1) * value
    matrix.setflags(write=False)
    return matrix


def multipole_operator(j, mu: int, eta: int) -> Operator:
    """Multipole (irreducible tensor) operator T_{mu eta} for spin ``j``."""

    tj = HalfInt.of(j).twice_value
    if tj < 0:
        raise ValueError(f"spin must be non-negative, got {j}")
    if not 0 <= mu <= tj:
        raise ValueError(f"mu must lie in 0..2j={tj}, got {mu}")
    if not -mu <= eta <= mu:
        raise ValueError(f"eta must lie in -{mu}..{mu}, got {eta}")
    return Operator(_multipole_matrix(tj, int(mu), int(eta)), (tj + 1,), hermitian=eta == 0)


@lru_cache(maxsize=None)
def _conjugated_basis(tj: int) -> NDArray[np.complex128]:
    basis = np.array([_multipole_matrix(tj, mu, eta).conj() for mu, eta in multipole_indices(tj)])
    basis.setflags(write=False)
    return basis


def _check_spin_matrix(rho_spins: NDArray, n_spins: int, d: int) -> NDArray:
    rho_spins = np.asarray(rho_spins)
    expected = d**n_spins
    if rho_spins.shape != (expected, expected):
        raise ValueError(f"spin density matrix must be {expected}x{expected}, got {rho_spins.shape}")
    return rho_spins


def multipole_component(rho_spins: DensityMatrix, indices: Sequence[tuple[int, int]]) -> complex:
    """Tr[rho T^dagger_{mu_1 eta_1} (x) ... (x) T^dagger_{mu_N eta_N}] for spin-1/2 factors."""

    n_spins = len(indices)
    rho_spins = _check_spin_matrix(rho_spins, n_spins, 2)
    daggered = [multipole_operator(HalfInt(1), mu, eta).dag().toarray() for mu, eta in indices]
    return complex(np.trace(rho_spins @ reduce(np.kron, daggered)))


def multipole_components(rho_spins: DensityMatrix, n_spins: int, j=HalfInt(1)) -> NDArray[np.complex128]:
    """All components at once, shape (K,)*n_spins in :func:`multipole_indices` order."""

    tj = HalfInt.of(j).twice_value
    d = tj + 1
    rho_spins = _check_spin_matrix(rho_spins, n_spins, d)
    if 3 * n_spins > 52:
        raise ValueError(f"too many spins for a dense component tensor: {n_spins}")
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    rows = letters[:n_spins]
    cols = letters[n_spins : 2 * n_spins]
    outs = letters[2 * n_spins : 3 * n_spins]
    subscripts = rows + cols + "," + ",".join(o + r + c for o, r, c in zip(outs, rows, cols)) + "->" + outs
    basis = _conjugated_basis(tj)
    tensor = rho_spins.reshape((d,) * (2 * n_spins))
    return np.einsum(subscripts, tensor, *([basis] * n_spins), optimize=True)


SpinState = Union[Literal["ground", "excited"], NDArray]


def initial_state(
    layout: SpaceLayout,
    spin_state: SpinState = "ground",
    mean_n: float = 6.0,
    zeta: float = math.pi / 2,
    tolerance: float | None = None,
) -> DensityMatrix:
    """rho(0) = rho_spins (x) |alpha><alpha| (spins only for a cavity-free layout)."""

    if isinstance(spin_state, str):
        if spin_state not in {"ground", "excited"}:
            raise ValueError(f"unknown spin state {spin_state!r}")
        local = np.zeros(2, dtype=complex)
        local[GROUND if spin_state == "ground" else EXCITED] = 1.0
        spins = reduce(np.kron, [local] * layout.n_spins)
        rho_spins = np.outer(spins, spins.conj())
    else:
        spin_array = np.asarray(spin_state, dtype=complex)
        if spin_array.shape == (layout.spin_dim,):
            rho_spins = np.outer(spin_array, spin_array.conj()) / np.vdot(spin_array, spin_array).real
        elif spin_array.shape == (layout.spin_dim, layout.spin_dim):
            rho_spins = spin_array / np.trace(spin_array).real
        else:
            raise ValueError(f"spin state has shape {spin_array.shape}, expected {layout.spin_dim} or square")

    if not layout.has_cavity:
        return np.ascontiguousarray(rho_spins)
    field_state = coherent_state(mean_n, zeta, layout, tolerance).vector
    return np.kron(rho_spins, np.outer(field_state, field_state.conj()))
