import numpy as np
import pytest

from spinboson.bath import fourier_coefficients
from spinboson.model import SimulationParams
from spinboson.sse import run_ensemble


def desk_params(**changes) -> SimulationParams:
    base = dict(delta=2.0, alpha=0.1, omega_c=100.0, t_max=20.0, n_traj=10_000, seed=0)
    base.update(changes)
    return SimulationParams(**base)


class EnsembleCache:
    """Session-wide cache so expensive desk-scale ensembles are simulated once."""

    def __init__(self):
        self._bases = {}
        self._series = {}

    def basis(self, p: SimulationParams):
        key = (p.alpha, p.omega_c, p.t_max, p.m_max)
        if key not in self._bases:
            self._bases[key] = fourier_coefficients(p)
        return self._bases[key]

    def ensemble(self, p: SimulationParams):
        if p not in self._series:
            self._series[p] = run_ensemble(p, self.basis(p))
        return self._series[p]

    @property
    def series(self) -> dict:
        return self._series


@pytest.fixture(scope="session")
def cache():
    return EnsembleCache()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_REPORT = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def acceptance_report(request):
    return request.config.stash.setdefault(_REPORT, {})


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    report = config.stash.get(_REPORT, {})
    if not report:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(report):
        ok, detail = report[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
