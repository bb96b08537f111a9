import sys
from pathlib import Path

import numpy as np
import pytest

ROOT = Path(__file__).resolve().parents[1]
if str(ROOT) not in sys.path:
    sys.path.insert(0, str(ROOT))


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run full-size preset integrations")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-size preset integrations (run with --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def small_layout():
    from hilbert import SpaceLayout

    return SpaceLayout.with_n_max(2, 4)


@pytest.fixture
def small_params():
    from hilbert import SystemParams

    return SystemParams(omega=(1.0, 1.1), omega_c=1.05, g=(0.3, 0.25))


def random_density_matrix(dim: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = x @ x.conj().T
    return rho / np.trace(rho).real
