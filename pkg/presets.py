"""Figure presets of the four-spin Tavis-Cummings study.

Every preset shares the emitter/cavity geometry below. ``provenance`` records
where each channel value comes from; values not printed in any caption are
marked ``assumed``.
"""

from __future__ import annotations

import math
from typing import Callable

try:
    from .models import CavityConfig, ChannelConfig, HeatmapConfig, ObservablesConfig, QDConfig, SimConfig
except ImportError:
    from models import CavityConfig, ChannelConfig, HeatmapConfig, ObservablesConfig, QDConfig, SimConfig

__all__ = [
    "OMEGA",
    "OMEGA_C",
    "COUPLINGS",
    "MEAN_N",
    "ZETA",
    "QD_THETA",
    "QD_PHI",
    "HEATMAP_THETA_SCALINGS",
    "HEATMAP_PHI_SCALINGS",
    "PRESETS",
    "list_presets",
    "get_preset",
]

OMEGA = [1.11, 1.15, 1.15, 1.11]
OMEGA_C = 1.15
COUPLINGS = [0.55, 0.52, 0.5, 0.55]
MEAN_N = 6.0
ZETA = math.pi / 2
QD_THETA = [math.pi / 4, 3 * math.pi / 5, 2 * math.pi / 3, 3 * math.pi / 4]
QD_PHI = [3 * math.pi / 4, math.pi / 3, math.pi / 4, math.pi / 6]
HEATMAP_THETA_SCALINGS = [1 / 4, 3 / 5, 2 / 3, 3 / 4]
HEATMAP_PHI_SCALINGS = [3 / 4, 1 / 3, 1 / 4, 1 / 6]

CAPTION = "caption"
CHOICE = "assumed"

QD_SERIES = ["W", "P", "Q"]
PHOTON_SERIES = ["n_photon", "exc", "exc_total"]


def _scaled(factor: float) -> list[float]:
    return [factor * g for g in COUPLINGS]


def _base(name: str, description: str, family: str, channel: ChannelConfig, kappa: float, **extra) -> SimConfig:
    return SimConfig(
        name=name,
        description=description,
        omega=list(OMEGA),
        omega_c=OMEGA_C,
        g=list(COUPLINGS),
        mean_n=MEAN_N,
        zeta=ZETA,
        family=family,
        channel=channel,
        cavity=CavityConfig(kappa=kappa),
        provenance={"geometry": CAPTION, "initial_state": "text: <n> = 6, spins in the ground state"},
        **extra,
    )


def _qd(config: SimConfig) -> SimConfig:
    config.qd = QDConfig(kinds=list(QD_SERIES), theta=list(QD_THETA), phi=list(QD_PHI))
    config.provenance["qd_angles"] = CAPTION
    return config


def _photons(config: SimConfig) -> SimConfig:
    config.observables = ObservablesConfig(names=list(PHOTON_SERIES))
    return config


def _fig1(name: str, r: float, temperature: float, source: str) -> SimConfig:
    config = _base(
        name,
        f"W, P, Q under squeezed generalized amplitude damping (r={r}, T={temperature})",
        "sgad",
        ChannelConfig(gamma=_scaled(0.01), r=r, Phi=math.pi / 4, temperature=temperature),
        kappa=0.01,
    )
    config.provenance.update({"gamma": CAPTION, "Phi": CAPTION, "kappa": CAPTION, "r": source, "temperature": source})
    return _qd(config)


def fig1a() -> SimConfig:
    return _fig1("fig1a", 0.0, 0.0, "text: r and T equal to zero")


def fig1b() -> SimConfig:
    return _fig1("fig1b", 0.5, 0.0, CHOICE)


def fig1c() -> SimConfig:
    return _fig1("fig1c", 0.0, 1.0, CHOICE)


def fig1d() -> SimConfig:
    return _fig1("fig1d", 0.5, 1.0, CHOICE)


def fig2() -> SimConfig:
    config = _fig1("fig2", 0.0, 0.0, CAPTION)
    config.description = "P heatmap over the scaled angle manifold at a fixed time"
    config.qd = QDConfig(
        heatmap=HeatmapConfig(
            kind="P",
            theta_scalings=list(HEATMAP_THETA_SCALINGS),
            phi_scalings=list(HEATMAP_PHI_SCALINGS),
        )
    )
    config.provenance.pop("qd_angles", None)
    config.provenance.update({"heatmap_scalings": CAPTION, "heatmap_time": CHOICE})
    return config


def fig3() -> SimConfig:
    config = _base(
        "fig3",
        "W, P, Q under the phase-covariant eternal non-Markovian channel",
        "pcenm",
        ChannelConfig(nu=[2.2, 2.4, 2.2, 2.4], q=0.75),
        kappa=0.01,
    )
    config.provenance.update({"nu": CAPTION, "q": CAPTION, "kappa": CHOICE})
    return _qd(config)


def fig3_limit() -> SimConfig:
    config = fig3()
    config.name = "fig3_limit"
    config.description = "phase-covariant channel with the dephasing rate fixed at its long-time limit -nu/2"
    config.channel.pcenm_dephasing_limit = True
    config.provenance["pcenm_dephasing_limit"] = CAPTION
    return config


def _fig4_gamma() -> list[float]:
    return [0.31, 0.32, 0.31, 0.32]


def fig4ad() -> SimConfig:
    config = _base(
        "fig4ad",
        "W, P, Q under Lindblad amplitude damping",
        "gksl_thermal",
        ChannelConfig(gamma=_fig4_gamma()),
        kappa=0.01,
    )
    config.provenance.update({"gamma": CAPTION, "kappa": CAPTION})
    return _qd(config)


def fig4sm() -> SimConfig:
    config = _base(
        "fig4sm",
        "W, P, Q under semi-Markov dephasing",
        "semimarkov",
        ChannelConfig(gamma_tilde=[g / 2 for g in _fig4_gamma()], s=0.1),
        kappa=0.01,
    )
    config.provenance.update({"gamma_tilde": CAPTION, "s": CAPTION, "kappa": CAPTION})
    return _qd(config)


def fig4pure() -> SimConfig:
    config = _base(
        "fig4pure",
        "W, P, Q under pure Hamiltonian evolution",
        "semimarkov",
        ChannelConfig(gamma_tilde=[0.0] * 4, s=0.1),
        kappa=0.0,
    )
    config.provenance.update({"gamma_tilde": CAPTION, "kappa": CAPTION})
    return _qd(config)


def nmad_ad() -> SimConfig:
    config = _base(
        "nmad_ad",
        "W, P, Q under Lindblad amplitude damping (reference for the NMAD channel)",
        "gksl_thermal",
        ChannelConfig(gamma=[0.5 + g for g in COUPLINGS]),
        kappa=0.01,
    )
    config.provenance.update({"gamma": CAPTION, "kappa": CAPTION})
    return _qd(config)


def nmad() -> SimConfig:
    config = _base(
        "nmad",
        "W, P, Q under non-Markovian amplitude damping",
        "nmad",
        ChannelConfig(gamma_prime=[(0.5 + g) / 2 for g in COUPLINGS], q_prime=0.05),
        kappa=0.01,
    )
    config.provenance.update({"gamma_prime": CAPTION, "q_prime": CAPTION, "kappa": CAPTION})
    return _qd(config)


def fig5a() -> SimConfig:
    config = _base(
        "fig5a", "photon number and spin excitation under GKSL damping", "gksl_thermal",
        ChannelConfig(gamma=_scaled(0.01)), kappa=0.01,
    )
    config.provenance.update({"gamma": CAPTION, "kappa": CAPTION})
    return _photons(config)


def fig5b() -> SimConfig:
    config = _base(
        "fig5b", "photon number and spin excitation under the phase-covariant channel", "pcenm",
        ChannelConfig(nu=_scaled(0.02), q=0.75), kappa=0.01,
    )
    config.provenance.update({"nu": CAPTION, "q": CHOICE, "kappa": CAPTION})
    return _photons(config)


def fig5c() -> SimConfig:
    config = _base(
        "fig5c", "photon number and spin excitation under non-Markovian amplitude damping", "nmad",
        ChannelConfig(gamma_prime=[0.5 + g / 2 for g in COUPLINGS], q_prime=0.05), kappa=0.01,
    )
    config.provenance.update({"gamma_prime": CAPTION, "q_prime": CAPTION, "kappa": CAPTION})
    return _photons(config)


def fig5d() -> SimConfig:
    config = _base(
        "fig5d", "photon number and spin excitation under semi-Markov dephasing", "semimarkov",
        ChannelConfig(gamma_tilde=[0.31 / 2, 0.32 / 2, 0.31 / 2, 0.32 / 2], s=0.1), kappa=0.01,
    )
    config.provenance.update({"gamma_tilde": CAPTION, "s": CAPTION, "kappa": CAPTION})
    return _photons(config)


def _g2_series(config: SimConfig) -> SimConfig:
    config.observables = ObservablesConfig(names=["n_photon", "g2_0", "mandel_q"])
    return config


def fig6() -> SimConfig:
    config = _base(
        "fig6", "g2(0) with a non-Markovian cavity loss", "gksl_thermal",
        ChannelConfig(gamma=_scaled(0.1)), kappa=0.5,
    )
    config.cavity = CavityConfig(model="cavity_nmad", kappa=0.5, kappa_prime=0.25, b=0.05)
    config.provenance.update({"gamma": CAPTION, "kappa": CAPTION, "kappa_prime": CAPTION, "b": CAPTION})
    return _g2_series(config)


def fig6ad() -> SimConfig:
    config = _base(
        "fig6ad", "g2(0) with Lindblad cavity loss (reference for fig6)", "gksl_thermal",
        ChannelConfig(gamma=_scaled(0.1)), kappa=0.5,
    )
    config.provenance.update({"gamma": CAPTION, "kappa": CAPTION})
    return _g2_series(config)


def fig7() -> SimConfig:
    config = _base(
        "fig7", "Mandel Q, g2(0), g2(tau) and the bunching indicator under GKSL damping", "gksl_thermal",
        ChannelConfig(gamma=_scaled(0.01)), kappa=0.1,
    )
    config.observables = ObservablesConfig(names=["mandel_q", "g2_0", "g2_tau", "bunching"], tau_values=[3.0])
    config.provenance.update({"gamma": CAPTION, "kappa": CAPTION, "tau_values": CAPTION})
    return config


PRESETS: dict[str, Callable[[], SimConfig]] = {
    "fig1a": fig1a,
    "fig1b": fig1b,
    "fig1c": fig1c,
    "fig1d": fig1d,
    "fig2": fig2,
    "fig3": fig3,
    "fig3_limit": fig3_limit,
    "fig4ad": fig4ad,
    "fig4sm": fig4sm,
    "fig4pure": fig4pure,
    "fig5a": fig5a,
    "fig5b": fig5b,
    "fig5c": fig5c,
    "fig5d": fig5d,
    "fig6": fig6,
    "fig6ad": fig6ad,
    "fig7": fig7,
    "nmad_ad": nmad_ad,
    "nmad": nmad,
}


def list_presets() -> list[tuple[str, str]]:
    return [(name, builder().description) for name, builder in PRESETS.items()]


def get_preset(name: str) -> SimConfig:
    """A fresh copy of the named preset; KeyError names the known presets."""

    try:
        builder = PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; known presets: {', '.join(PRESETS)}") from None
    return builder()
