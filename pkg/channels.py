"""Dissipators of the Tavis-Cummings master equations.

A :class:`ChannelSpec` is a list of jump operators with signed, possibly
time-dependent rates. Two term forms exist: ``lindblad`` terms contribute
``r(t) (L rho L^+ - 1/2 {L^+ L, rho})`` and ``dephasing`` terms contribute
``r(t) (L rho L - rho)`` for a Hermitian involution ``L``.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Literal, Mapping, Optional, Sequence

import numpy as np

try:
    from .errors import NumericalAbort, RatePoleError
    from .hilbert import Operator, SpaceLayout, boson_ops, spin_site_op
except ImportError:
    from errors import NumericalAbort, RatePoleError
    from hilbert import Operator, SpaceLayout, boson_ops, spin_site_op

logger = logging.getLogger(__name__)

__all__ = [
    "RateKind",
    "TermForm",
    "Family",
    "RateFn",
    "RatePole",
    "DissipatorTerm",
    "ChannelSpec",
    "SqueezeParams",
    "ChannelParams",
    "CavityParams",
    "FAMILIES",
    "bose_occupation",
    "rate_pcenm",
    "decoherence_F",
    "rate_nmad",
    "rate_semimarkov",
    "rate_cavity_nmad",
    "pole_times",
    "build_sgad_channel",
    "build_channel",
]

RateKind = Literal["constant", "pcenm_gain", "pcenm_loss", "pcenm_dephase", "nmad", "semimarkov", "cavity_nmad"]
TermForm = Literal["lindblad", "dephasing"]
Family = Literal["gksl_thermal", "sgad", "pcenm", "nmad", "semimarkov"]
FAMILIES: tuple[str, ...] = ("gksl_thermal", "sgad", "pcenm", "nmad", "semimarkov")

_SERIES_RADIUS = 1e-4
_POLE_TOLERANCE = 1e-13


def bose_occupation(omega: float, temperature: float) -> float:
    """Thermal occupation 1/(exp(omega/T) - 1), zero at T = 0."""

    if temperature < 0:
        raise ValueError(f"temperature must be non-negative, got {temperature}")
    if temperature == 0:
        return 0.0
    if omega <= 0:
        raise ValueError(f"mode frequency must be positive for a thermal occupation, got {omega}")
    return 1.0 / math.expm1(omega / temperature)


def rate_pcenm(nu: float, q: float, which: Literal["gain", "loss", "dephase"], t: float) -> float:
    """Phase-covariant eternal non-Markovian rates: gain, loss and pure dephasing."""

    if nu <= 0:
        raise ValueError(f"nu must be positive, got {nu}")
    if abs(q) >= 1:
        raise ValueError(f"|q| must be below 1, got {q}")
    if which == "gain":
        return nu * (1.0 + q)
    if which == "loss":
        return nu * (1.0 - q)
    if which != "dephase":
        raise ValueError(f"unknown phase-covariant rate {which!r}")
    if t < 0:
        raise ValueError(f"rates are defined for t >= 0, got {t}")
    x = 2.0 * nu * t
    # divide through by cosh(x) so large nu*t does not overflow
    sech = 2.0 * math.exp(-x) / (1.0 + math.exp(-2.0 * x))
    one_minus = 1.0 - q * q
    return -nu * one_minus * math.tanh(x) / (2.0 * ((1.0 + q * q) * sech + one_minus))


def _sinhc(z: complex) -> complex:
    if abs(z) < _SERIES_RADIUS:
        z2 = z * z
        return 1.0 + z2 / 6.0 + z2 * z2 / 120.0
    return cmath.sinh(z) / z


def decoherence_F(gamma_prime: float, q_prime: float, t: float) -> float:
    """Decoherence function of the non-Markovian amplitude damping channel."""

    if t < 0:
        raise ValueError(f"F(t) is defined for t >= 0, got {t}")
    l = cmath.sqrt(q_prime * q_prime - 2.0 * gamma_prime * q_prime)
    z = 0.5 * l * t
    value = math.exp(-0.5 * q_prime * t) * (q_prime * 0.5 * t * _sinhc(z) + cmath.cosh(z))
    scale = max(1.0, abs(value))
    if abs(value.imag) > 1e-12 * scale:
        raise NumericalAbort(
            f"decoherence function left imaginary residue {value.imag:.3e} at t={t}",
            {"t": t, "gamma_prime": gamma_prime, "q_prime": q_prime},
        )
    return value.real


def _coth_form_rate(kind: str, amplitude: float, ratio: float, scale: float, t: float) -> float:
    """2 Re(A / (B coth(scale t B / 2) + 1)) with B = sqrt(1 - ratio).

    The three non-Markovian rates share this shape; t <= 0 gives 0.
    """

    if t <= 0:
        return 0.0
    root = cmath.sqrt(1.0 - ratio)
    y = 0.5 * scale * t * root
    if abs(y) < _SERIES_RADIUS:
        y2 = y * y
        b_coth = (2.0 / (scale * t)) * (1.0 + y2 / 3.0 - y2 * y2 / 45.0)
    else:
        # principal sqrt keeps Re(y) >= 0, so exp(-2y) is bounded
        decay = cmath.exp(-2.0 * y)
        denominator = 1.0 - decay
        if denominator == 0:
            return 0.0
        b_coth = root * (1.0 + decay) / denominator
    total = b_coth + 1.0
    if abs(total) < _POLE_TOLERANCE * max(1.0, abs(b_coth)):
        poles = pole_times(ratio, scale, 0.0, 2.0 * t)
        estimate = min(poles, key=lambda p: abs(p - t)) if poles else t
        raise RatePoleError(kind, t, estimate)
    return 2.0 * (amplitude / total).real


def pole_times(ratio: float, scale: float, t_start: float, t_end: float) -> list[float]:
    """Times in (t_start, t_end] where B coth(scale t B / 2) + 1 vanishes.

    The denominator is proportional to cosh(y) + (scale t / 2) sinhc(y). For
    ratio <= 1 that stays positive. Above it, with beta = scale sqrt(ratio - 1) / 2,
    it is cos(beta t) + (scale / 2 beta) sin(beta t), whose zeros are
    beta t = pi - atan(2 beta / scale) + k pi.
    """

    if ratio <= 1.0 or scale <= 0 or t_end <= t_start:
        return []
    beta = 0.5 * scale * math.sqrt(ratio - 1.0)
    first = (math.pi - math.atan(2.0 * beta / scale)) / beta
    period = math.pi / beta
    k = max(0, math.ceil((t_start - first) / period))
    poles = []
    while (t := first + k * period) <= t_end:
        if t > t_start:
            poles.append(t)
        k += 1
    return poles


def rate_nmad(gamma_prime: float, q_prime: float, t: float) -> float:
    """Time-dependent decay rate of the non-Markovian amplitude damping channel."""

    if q_prime <= 0:
        raise ValueError(f"q' must be positive, got {q_prime}")
    return _coth_form_rate("nmad", gamma_prime, 2.0 * gamma_prime / q_prime, q_prime, t)


def rate_semimarkov(gamma_tilde: float, s: float, t: float) -> float:
    """Dephasing rate of the semi-Markov channel."""

    if s <= 0:
        raise ValueError(f"s must be positive, got {s}")
    return _coth_form_rate("semimarkov", gamma_tilde / s, 8.0 * gamma_tilde / (s * s), s, t)


def rate_cavity_nmad(kappa_prime: float, b: float, t: float) -> float:
    """Non-Markovian cavity loss rate."""

    if b <= 0:
        raise ValueError(f"b must be positive, got {b}")
    return _coth_form_rate("cavity_nmad", kappa_prime, 2.0 * kappa_prime / b, b, t)


_RATE_PARAMS: dict[str, tuple[str, ...]] = {
    "constant": ("value",),
    "pcenm_gain": ("nu", "q"),
    "pcenm_loss": ("nu", "q"),
    "pcenm_dephase": ("nu", "q"),
    "nmad": ("gamma_prime", "q_prime"),
    "semimarkov": ("gamma_tilde", "s"),
    "cavity_nmad": ("kappa_prime", "b"),
}


@dataclass(frozen=True, slots=True)
class RateFn:
    """A named, parameterized rate r(t)."""

    kind: RateKind
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.kind not in _RATE_PARAMS:
            raise ValueError(f"unknown rate kind {self.kind!r}")
        missing = [name for name in _RATE_PARAMS[self.kind] if name not in self.params]
        if missing:
            raise ValueError(f"{self.kind} rate is missing parameters {missing}")
        frozen = {name: float(value) for name, value in self.params.items()}
        if not all(math.isfinite(v) for v in frozen.values()):
            raise ValueError(f"{self.kind} rate parameters must be finite: {frozen}")
        object.__setattr__(self, "params", MappingProxyType(frozen))

    @classmethod
    def constant(cls, value: float) -> "RateFn":
        return cls("constant", {"value": value})

    @property
    def is_constant(self) -> bool:
        return self.kind in {"constant", "pcenm_gain", "pcenm_loss"}

    def _pole_shape(self) -> Optional[tuple[float, float]]:
        p = self.params
        if self.kind == "nmad" and p["q_prime"] > 0:
            return 2.0 * p["gamma_prime"] / p["q_prime"], p["q_prime"]
        if self.kind == "semimarkov" and p["s"] > 0:
            return 8.0 * p["gamma_tilde"] / (p["s"] * p["s"]), p["s"]
        if self.kind == "cavity_nmad" and p["b"] > 0:
            return 2.0 * p["kappa_prime"] / p["b"], p["b"]
        return None

    def poles(self, t_start: float, t_end: float) -> list[float]:
        """Divergences of r(t) in (t_start, t_end]; empty for bounded kinds."""

        shape = self._pole_shape()
        return pole_times(*shape, t_start, t_end) if shape else []

    def __call__(self, t: float) -> float:
        p = self.params
        if self.kind == "constant":
            return p["value"]
        if self.kind == "pcenm_gain":
            return rate_pcenm(p["nu"], p["q"], "gain", t)
        if self.kind == "pcenm_loss":
            return rate_pcenm(p["nu"], p["q"], "loss", t)
        if self.kind == "pcenm_dephase":
            return rate_pcenm(p["nu"], p["q"], "dephase", t)
        if self.kind == "nmad":
            return rate_nmad(p["gamma_prime"], p["q_prime"], t)
        if self.kind == "semimarkov":
            return rate_semimarkov(p["gamma_tilde"], p["s"], t)
        return rate_cavity_nmad(p["kappa_prime"], p["b"], t)


@dataclass(frozen=True, slots=True)
class DissipatorTerm:
    operator: Operator
    rate: RateFn
    form: TermForm = "lindblad"
    label: str = ""

    def __post_init__(self) -> None:
        if self.form not in ("lindblad", "dephasing"):
            raise ValueError(f"unknown dissipator form {self.form!r}")
        if self.form == "dephasing":
            skew = self.operator.matrix - self.operator.matrix.conj().T
            if skew.nnz and abs(skew).max() > 1e-14:
                raise ValueError(f"dephasing-form term {self.label!r} needs a Hermitian operator")


@dataclass(frozen=True, slots=True)
class ChannelSpec:
    terms: tuple[DissipatorTerm, ...]
    label: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "terms", tuple(self.terms))
        dims = {term.operator.dims for term in self.terms}
        if len(dims) > 1:
            raise ValueError(f"channel {self.label!r} mixes operators on different spaces: {sorted(dims)}")

    @property
    def time_dependent(self) -> bool:
        return any(not term.rate.is_constant for term in self.terms)

    def check_layout(self, layout: SpaceLayout) -> None:
        for term in self.terms:
            if term.operator.dims != layout.dims:
                raise ValueError(
                    f"term {term.label!r} acts on {term.operator.dims}, layout is {layout.dims}"
                )

    def rates_at(self, t: float) -> list[float]:
        return [term.rate(t) for term in self.terms]

    def rate_poles(self, t_start: float, t_end: float) -> list["RatePole"]:
        """Every rate divergence in (t_start, t_end], earliest first."""

        found = [
            RatePole(term.label, term.rate.kind, t)
            for term in self.terms
            for t in term.rate.poles(t_start, t_end)
        ]
        return sorted(found, key=lambda pole: pole.t)


@dataclass(frozen=True, slots=True)
class RatePole:
    label: str
    kind: str
    t: float


@dataclass(frozen=True, slots=True)
class SqueezeParams:
    r: float = 0.0
    Phi: float = 0.0
    T: float = 0.0

    def __post_init__(self) -> None:
        if self.r < 0:
            raise ValueError(f"squeezing magnitude r must be >= 0, got {self.r}")
        if self.T < 0:
            raise ValueError(f"temperature T must be >= 0, got {self.T}")


@dataclass(frozen=True, slots=True)
class ChannelParams:
    """Parameters of every spin-channel family; each family reads its own fields."""

    gamma: tuple[float, ...] = ()
    temperature: float = 0.0
    squeeze: Optional[SqueezeParams] = None
    nu: tuple[float, ...] = ()
    q: Optional[float] = None
    pcenm_dephasing_limit: bool = False
    gamma_prime: tuple[float, ...] = ()
    q_prime: Optional[float] = None
    gamma_tilde: tuple[float, ...] = ()
    s: Optional[float] = None

    def __post_init__(self) -> None:
        for name in ("gamma", "nu", "gamma_prime", "gamma_tilde"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))

    def problems_for(self, family: str, n_spins: int) -> list[str]:
        """Every reason these parameters cannot build ``family`` on ``n_spins`` spins."""

        if family not in FAMILIES:
            return [f"unknown channel family {family!r}; expected one of {list(FAMILIES)}"]
        problems: list[str] = []

        def per_spin(name: str, nonnegative: bool = True) -> None:
            values = getattr(self, name)
            if len(values) != n_spins:
                problems.append(f"{family} needs {n_spins} values for {name}, got {len(values)}")
            elif nonnegative and any(v < 0 for v in values):
                problems.append(f"{name} must be non-negative, got {list(values)}")

        if family == "gksl_thermal":
            per_spin("gamma")
            if self.temperature < 0:
                problems.append(f"temperature must be non-negative, got {self.temperature}")
        elif family == "sgad":
            per_spin("gamma")
            if self.squeeze is None:
                problems.append("sgad needs squeeze parameters (r, Phi, T)")
        elif family == "pcenm":
            per_spin("nu")
            if any(v <= 0 for v in self.nu):
                problems.append(f"nu must be positive, got {list(self.nu)}")
            if self.q is None or abs(self.q) >= 1:
                problems.append(f"pcenm needs q with |q| < 1, got {self.q}")
        elif family == "nmad":
            per_spin("gamma_prime")
            if self.q_prime is None or self.q_prime <= 0:
                problems.append(f"nmad needs q_prime > 0, got {self.q_prime}")
        elif family == "semimarkov":
            per_spin("gamma_tilde")
            if self.s is None or self.s <= 0:
                problems.append(f"semimarkov needs s > 0, got {self.s}")
        return problems


@dataclass(frozen=True, slots=True)
class CavityParams:
    """Cavity loss: constant ``kappa`` or the non-Markovian ``kappa'(t)``.

    ``n_thermal`` is only honoured by the thermal GKSL family; the other
    master equations damp the cavity at zero temperature.
    """

    model: Literal["constant", "cavity_nmad"] = "constant"
    kappa: float = 0.0
    kappa_prime: Optional[float] = None
    b: Optional[float] = None
    n_thermal: float = 0.0

    def problems(self) -> list[str]:
        problems: list[str] = []
        if self.model not in ("constant", "cavity_nmad"):
            problems.append(f"unknown cavity model {self.model!r}")
        if self.kappa < 0:
            problems.append(f"kappa must be non-negative, got {self.kappa}")
        if self.n_thermal < 0:
            problems.append(f"cavity n_thermal must be non-negative, got {self.n_thermal}")
        if self.model == "cavity_nmad":
            if self.kappa_prime is None:
                problems.append("cavity_nmad needs kappa_prime")
            if self.b is None or self.b <= 0:
                problems.append(f"cavity_nmad needs b > 0, got {self.b}")
        return problems


def _constant_term(operator: Operator, rate: float, label: str) -> Optional[DissipatorTerm]:
    if rate == 0:
        return None
    return DissipatorTerm(operator, RateFn.constant(rate), "lindblad", label)


def _cavity_terms(layout: SpaceLayout, cavity: CavityParams, thermal: bool) -> list[DissipatorTerm]:
    a, a_dag = boson_ops(layout)
    if cavity.model == "cavity_nmad":
        rate = RateFn("cavity_nmad", {"kappa_prime": cavity.kappa_prime, "b": cavity.b})
        return [DissipatorTerm(a, rate, "lindblad", "cavity:kappa'(t)")]
    n_c = cavity.n_thermal if thermal else 0.0
    terms = [
        _constant_term(a, cavity.kappa * (n_c + 1.0), "cavity:loss"),
        _constant_term(a_dag, cavity.kappa * n_c, "cavity:gain"),
    ]
    return [term for term in terms if term is not None]


def build_sgad_channel(
    layout: SpaceLayout,
    gammas: Sequence[float],
    squeeze: SqueezeParams,
    omega_k: Sequence[float],
    cavity: Optional[CavityParams] = None,
) -> ChannelSpec:
    """Squeezed generalized amplitude damping on every spin plus cavity loss.

    Per spin, R = sigma^- cosh r + e^{i Phi} sigma^+ sinh r with jump operators
    sqrt(gamma (N_th + 1)) R and sqrt(gamma N_th) R^+. Constant rates are folded
    into the operators.
    """

    if len(gammas) != layout.n_spins or len(omega_k) != layout.n_spins:
        raise ValueError(f"need {layout.n_spins} values of gamma and omega, got {len(gammas)} and {len(omega_k)}")
    if any(g < 0 for g in gammas):
        raise ValueError(f"gamma must be non-negative, got {list(gammas)}")
    cosh_r, sinh_r = math.cosh(squeeze.r), math.sinh(squeeze.r)
    phase = cmath.exp(1j * squeeze.Phi)
    terms: list[DissipatorTerm] = []
    for k in range(1, layout.n_spins + 1):
        gamma = gammas[k - 1]
        n_th = bose_occupation(omega_k[k - 1], squeeze.T)
        R = cosh_r * spin_site_op(layout, k, "minus") + (phase * sinh_r) * spin_site_op(layout, k, "plus")
        for weight, op, label in (
            (gamma * (n_th + 1.0), R, f"spin{k}:R1"),
            (gamma * n_th, R.dag(), f"spin{k}:R2"),
        ):
            if weight > 0:
                terms.append(DissipatorTerm(math.sqrt(weight) * op, RateFn.constant(1.0), "lindblad", label))
    terms.extend(_cavity_terms(layout, cavity or CavityParams(), thermal=False))
    return ChannelSpec(tuple(terms), label="sgad")


def build_channel(
    layout: SpaceLayout,
    family: Family,
    params: ChannelParams,
    cavity: CavityParams,
    omega: Sequence[float] = (),
) -> ChannelSpec:
    """Assemble the dissipator of one master equation.

    With the non-Markovian cavity model the thermal family follows the
    cavity equation, whose spin terms read gamma (2 sigma^- rho sigma^+ - {..}),
    i.e. a Lindblad rate of 2 gamma.
    """

    problems = params.problems_for(family, layout.n_spins) + cavity.problems()
    if family in ("gksl_thermal", "sgad") and len(omega) != layout.n_spins:
        problems.append(f"{family} needs {layout.n_spins} spin frequencies, got {len(omega)}")
    if problems:
        raise ValueError("; ".join(problems))

    if family == "sgad":
        return build_sgad_channel(layout, params.gamma, params.squeeze, omega, cavity)

    terms: list[Optional[DissipatorTerm]] = []
    for k in range(1, layout.n_spins + 1):
        lower = spin_site_op(layout, k, "minus")
        raise_ = spin_site_op(layout, k, "plus")
        sz = spin_site_op(layout, k, "z")
        i = k - 1
        if family == "gksl_thermal":
            factor = 2.0 if cavity.model == "cavity_nmad" else 1.0
            n_th = bose_occupation(omega[i], params.temperature)
            terms.append(_constant_term(lower, factor * params.gamma[i] * (n_th + 1.0), f"spin{k}:loss"))
            terms.append(_constant_term(raise_, factor * params.gamma[i] * n_th, f"spin{k}:gain"))
        elif family == "pcenm":
            nu_q = {"nu": params.nu[i], "q": params.q}
            terms.append(DissipatorTerm(raise_, RateFn("pcenm_gain", nu_q), "lindblad", f"spin{k}:gain"))
            terms.append(DissipatorTerm(lower, RateFn("pcenm_loss", nu_q), "lindblad", f"spin{k}:loss"))
            if params.pcenm_dephasing_limit:
                dephase = RateFn.constant(-0.5 * params.nu[i])
            else:
                dephase = RateFn("pcenm_dephase", nu_q)
            terms.append(DissipatorTerm(sz, dephase, "dephasing", f"spin{k}:dephase"))
        elif family == "nmad":
            rate = RateFn("nmad", {"gamma_prime": params.gamma_prime[i], "q_prime": params.q_prime})
            terms.append(DissipatorTerm(lower, rate, "lindblad", f"spin{k}:loss"))
        else:
            rate = RateFn("semimarkov", {"gamma_tilde": params.gamma_tilde[i], "s": params.s})
            terms.append(DissipatorTerm(sz, rate, "dephasing", f"spin{k}:dephase"))

    spec_terms = [term for term in terms if term is not None]
    spec_terms.extend(_cavity_terms(layout, cavity, thermal=family == "gksl_thermal"))
    channel = ChannelSpec(tuple(spec_terms), label=family if cavity.model == "constant" else f"{family}+cavity_nmad")
    logger.debug("built %s channel with %d terms", channel.label, len(channel.terms))
    return channel
