"""Open Tavis-Cummings dynamics with spin quasi-probabilities and photon statistics."""

from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("tavis_cummings_qd")
except PackageNotFoundError:  # pragma: no cover - package not installed
    __version__ = "0.0.0"

__all__ = ["__version__"]
