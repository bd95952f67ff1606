import sys

import numpy as np
import pytest

from nashbo import games, gp


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_surrogate_pair(seed: int = 0, t: int = 9, dims=(1, 1), v: float = 0.02):
    """Two fitted-by-hand surrogates sharing one training design.

    Smooth distinct payoff surfaces per player on the unit box; kernel
    parameters are fixed (not fitted) so tests stay fast and exact.
    """
    rng = np.random.default_rng(seed)
    space = games.ActionSpace.unit(dims)
    X = rng.uniform(size=(t, space.n_joint))
    surrogates = []
    for i in range(space.players):
        y = np.sin(3.0 * X[:, 0] + i) + 0.5 * np.cos(2.0 * X[:, -1] - i)
        params = gp.KernelParams(v=v, c=1.0 + 0.3 * i,
                                 d=rng.uniform(1.0, 8.0, size=space.n_joint))
        surrogates.append(gp.PlayerSurrogate.from_data(params, X, y))
    return surrogates, space


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance verdict lines after the run.

    Capture hides stdout of passing tests, so without this only failing
    criteria would show their one-line reports.
    """
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "REPORT_LINES", None) if mod else None
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
