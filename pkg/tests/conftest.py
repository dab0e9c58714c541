import numpy as np
import pytest

from qdsld.model import DotParams, GaussianProfile, ModeSet, PumpParams, SystemParams, WaveguideParams

# three-level dot rates used throughout the reference cases
DOT = DotParams(gamma21=0.1, gamma10=1.0)


def single_mode_params(R=0.5):
    return SystemParams(ModeSet.single(1.0), DOT, PumpParams(R, 1000))


def centred_band_params(R=0.3):
    modes = ModeSet.uniform_grid(30, 1.0, GaussianProfile(1.0, 0.0, 1.0))
    return SystemParams(modes, DOT, PumpParams(R, 10_000))


def shifted_band_params(R=0.5):
    modes = ModeSet.uniform_grid(30, 1.0, GaussianProfile(1.0, 3.0, 6.0))
    return SystemParams(modes, DOT, PumpParams(R, 10_000))


def random_homogeneous(rng, n_modes=None, thermal=False):
    """A random parameter point in the regime where every solver applies."""
    N = int(rng.integers(1, 6)) if n_modes is None else n_modes
    g10 = rng.uniform(0.5, 2.0)
    dot = DotParams(
        gamma21=rng.uniform(0.01, 0.3) * g10,
        gamma10=g10,
        gamma20=rng.uniform(0, 0.1) if thermal else 0.0,
        n21=rng.uniform(0, 0.2) if thermal else 0.0,
        n10=rng.uniform(0, 0.2) if thermal else 0.0,
    )
    d = np.sort(rng.uniform(-5, 5, N)) + 1e-3 * np.arange(N)
    g = rng.uniform(0.05, 1.0, N)
    pump = PumpParams(rng.uniform(0.0, 1.0), int(rng.integers(10, 5000)))
    return SystemParams(ModeSet(tuple(d), tuple(g)), dot, pump, WaveguideParams())


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])
