import numpy as np
import pytest

from mimicshape.classifiers import CallableOracle

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def constant_oracle(values, shape=None):
    values = np.asarray(values, dtype=np.float64)
    labels = [f"l{i}" for i in range(len(values))]
    return CallableOracle(lambda X: np.tile(values, (len(X), 1)), labels, shape)


def indicator_oracle(v=0, t=0, shape=None):
    """P(l0) = 1 when coordinate (v, t) of the (positive) input survived masking."""

    def fn(X):
        hit = (X[:, v, t] != 0).astype(np.float64)
        return np.stack([hit, 1.0 - hit], axis=1)

    return CallableOracle(fn, ["l0", "l1"], shape)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
