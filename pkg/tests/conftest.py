import dataclasses

import numpy as np
import pytest

from blurguard.blur import SIGMA_MIN
from blurguard.compose import compose
from blurguard.fixtures import texture_fixture
from blurguard.image import canonicalize_masks
from blurguard.objectives import RefEncoder
from blurguard.protect import ProtectConfig, initial_noise, protect
from blurguard.spectrum import l_freq

N_FIXTURES = 20


def central_diff(f, x, h):
    """Central finite-difference gradient of scalar `f` over every element of `x`."""
    x = np.array(x, dtype=np.float64)
    g = np.zeros_like(x)
    for i in np.ndindex(x.shape):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2 * h)
    return g


def rel_err(analytic, numeric):
    """Largest absolute deviation relative to the largest numeric component."""
    analytic = np.asarray(analytic, dtype=np.float64)
    numeric = np.asarray(numeric, dtype=np.float64)
    return float(np.max(np.abs(analytic - numeric)) / max(np.max(np.abs(numeric)), 1e-300))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


class SuiteRuns:
    """Lazily computed protection runs over the 20 texture fixtures, shared per session."""

    configs = {
        "default": ProtectConfig(),
        "unblurred": ProtectConfig(lam=0.0, fixed_sigma=SIGMA_MIN),
        "no_spectrum_reg": ProtectConfig(lam=0.0),
    }

    def __init__(self):
        self.encoder = RefEncoder(seed=0)
        self.fixtures = []
        for seed in range(N_FIXTURES):
            x, raw = texture_fixture(seed)
            self.fixtures.append((x, canonicalize_masks(raw, x.shape[:2])))
        self._runs = {}

    def runs(self, name):
        if name not in self._runs:
            cfg = self.configs[name]
            self._runs[name] = [protect(x, m, self.encoder, cfg) for x, m in self.fixtures]
        return self._runs[name]

    def stage1_final(self, i, result, cfg=None):
        cfg = cfg or self.configs["default"]
        x, m = self.fixtures[i]
        return l_freq(compose(x, initial_noise(x.shape, cfg), m, result.omega, cfg.k), x, cfg.B)


@pytest.fixture(scope="session")
def suite():
    return SuiteRuns()


def replace(cfg, **kw):
    return dataclasses.replace(cfg, **kw)


# one PASS/FAIL line per acceptance criterion, printed after the run
_criteria = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        name = report.nodeid.split("::")[-1][len("test_criterion_"):]
        _criteria[name] = "PASS" if report.outcome == "passed" else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_criteria):
        num, _, label = name.partition("_")
        terminalreporter.write_line(f"criterion {int(num):2d} {_criteria[name]}  {label.replace('_', ' ')}")
