import warnings

import numpy as np
import pytest

warnings.filterwarnings("ignore", message=".*TBB threading layer.*")

from swaphedge.engine import TrainConfig, fit_hedge  # noqa: E402
from swaphedge.instruments import spec_from_label  # noqa: E402
from swaphedge.termstructure import GaussianModel  # noqa: E402


@pytest.fixture(scope="session")
def hw():
    return GaussianModel.hull_white(0.01, 0.01, 0.03)


@pytest.fixture(scope="session")
def g2():
    return GaussianModel.g2pp(0.07, 0.08, 0.015, 0.008, -0.6, 0.03)


@pytest.fixture(scope="session")
def small_config():
    # cheap but well-behaved: enough for structural tests, not for accuracy
    return TrainConfig(n_paths=4000, q=16, epochs=60, seed=3)


@pytest.fixture(scope="session")
def hedge_1f(hw, small_config):
    spec = spec_from_label(hw, "1Yx5Y", strike_ratio=1.0)
    return fit_hedge(hw, spec, small_config)


@pytest.fixture(scope="session")
def hedge_2f(g2, small_config):
    spec = spec_from_label(g2, "1Yx5Y", strike_ratio=1.0)
    cfg = TrainConfig(**{**small_config.__dict__, "design": "locally_connected"})
    return fit_hedge(g2, spec, cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


# criterion number -> (passed, detail), filled in by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
