import numpy as np
import pytest
from scipy.linalg import block_diag

import srblab

# closed-form constants of the [[2,1],[1,1]] torus automorphism
LAM_U = (3.0 + np.sqrt(5.0)) / 2.0
LAM_S = (3.0 - np.sqrt(5.0)) / 2.0
LOG_LAM_U = np.log(LAM_U)
V_U = np.array([1.0, (np.sqrt(5.0) - 1.0) / 2.0])
V_U /= np.linalg.norm(V_U)
V_S = np.array([1.0, -(1.0 + np.sqrt(5.0)) / 2.0])
V_S /= np.linalg.norm(V_S)


@pytest.fixture(scope="session")
def cat():
    return srblab.build("cat")


@pytest.fixture(scope="session")
def pcat():
    return srblab.build("perturbed_cat", eps=0.01)


@pytest.fixture(scope="session")
def sol():
    return srblab.build("solenoid", c=0.25, d=0.5)


@pytest.fixture(scope="session")
def dfa():
    return srblab.build("dfa")


@pytest.fixture(scope="session")
def cat4():
    """4-D product of two cat blocks: dim F = 2, exercises the 2-D disk ops."""
    a = np.array([[2.0, 1.0], [1.0, 1.0]])
    m = block_diag(a, a)
    e_dirs = np.column_stack([np.concatenate([V_S, [0, 0]]),
                              np.concatenate([[0, 0], V_S])])
    f_dirs = np.column_stack([np.concatenate([V_U, [0, 0]]),
                              np.concatenate([[0, 0], V_U])])
    return srblab.linear_torus_system(m, e_dirs, f_dirs, name="cat4")


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo the acceptance-criterion verdict lines into the run summary."""
    try:
        from . import test_acceptance
    except ImportError:
        return
    lines = getattr(test_acceptance, "RESULT_LINES", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
