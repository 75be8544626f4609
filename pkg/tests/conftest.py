import numpy as np
import pytest

import transferkit as tk

# Heavy shared computations (the L=10 XY solve, the two-sided recast solve and
# the 12-site brute-force Gibbs state) are session fixtures so the unit tests
# and the acceptance criteria reuse a single run each.


@pytest.fixture(scope="session")
def xy1():
    return tk.xy_model(1.0, 1.0)


@pytest.fixture(scope="session")
def xy1_L10(xy1):
    tmap = tk.build_E(tk.rescale_to_unit_beta(xy1), 10)
    return tk.spectral_radius(tmap)


@pytest.fixture(scope="session")
def recast6(xy1):
    recast = tk.two_sided_model(xy1)
    tmap = tk.build_E(tk.rescale_to_unit_beta(recast), 6)
    return recast, tk.spectral_radius(tmap)


@pytest.fixture(scope="session")
def thermal12(xy1):
    return tk.thermal_state(xy1, 12)


def random_hermitian(rng, dim, scale=1.0):
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * (m + m.conj().T) / 2


def random_psd(rng, dim, scale=1.0):
    m = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * (m @ m.conj().T)


def random_density(rng, dim):
    m = random_psd(rng, dim)
    return m / np.trace(m).real


# ---------------------------------------------------------------------------
# acceptance reporting: one pass/fail line per criterion at session end

_ACCEPTANCE_RESULTS = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call" or "test_acceptance" not in str(item.fspath):
        return
    marker = item.get_closest_marker("criterion")
    if marker:
        _ACCEPTANCE_RESULTS[marker.args[0]] = report.outcome


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion label")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE_RESULTS):
        status = "PASS" if _ACCEPTANCE_RESULTS[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}")
