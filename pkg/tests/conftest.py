import numpy as np
import pytest

from tilepath.problem import Problem, decompose


def random_problem(m, n, seed, ensemble="gaussian"):
    rng = np.random.default_rng(seed)
    if ensemble == "gaussian":
        A = rng.standard_normal((m, n)) / np.sqrt(m)
    else:
        A = rng.standard_normal((m, n)) / rng.gamma(1.0, 1.0, size=m)[:, None]
    y = rng.standard_normal(m)
    return Problem(A, y)


@pytest.fixture
def identity2():
    return decompose(Problem(np.eye(2), np.array([1.0, 0.5])))


@pytest.fixture
def scalar():
    return decompose(Problem(np.array([[1.0]]), np.array([1.0])))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    verdicts = getattr(mod, "VERDICTS", None)
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(verdicts):
        terminalreporter.write_line(verdicts[k])
