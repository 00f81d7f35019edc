import numpy as np
import pytest

from ou_calculus.oumodel import build_model, rotating_model

J = np.array([[0.0, 1.0], [-1.0, 0.0]])


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: end-to-end acceptance criteria (slow)")


@pytest.fixture(scope="session")
def rotating():
    return rotating_model(1.0)


@pytest.fixture(scope="session")
def symmetric1d():
    return build_model([[2.0]], [[1.0]], label="symmetric(n=1)")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(RESULTS):
        ok, elapsed, budget, detail = RESULTS[num]
        verdict = "PASS" if ok and elapsed < budget else "FAIL"
        terminalreporter.write_line(f"criterion {num:2d}: {verdict}  ({elapsed:6.1f}s / {budget:.0f}s)  {detail}")
