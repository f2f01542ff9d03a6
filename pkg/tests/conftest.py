import sys

import numpy as np
import pytest

from uplink_maxmin import NetworkInstance


@pytest.fixture
def pair():
    """Symmetric two-user, two-BS SISO network with unit noise and budgets."""
    return NetworkInstance.siso([[2.0, 0.5], [0.5, 2.0]], [1.0, 1.0], [1.0, 1.0])


@pytest.fixture
def orthogonal_pair():
    """One two-antenna BS serving two users on orthogonal channels, budget 5."""
    h = np.array([[[1.0, 0.0], [0.0, 1.0]]], dtype=complex)
    return NetworkInstance.simo(h, [1.0], [5.0, 5.0])


def pytest_terminal_summary(terminalreporter):
    lines = [line for mod in list(sys.modules.values()) for line in getattr(mod, "ACCEPTANCE_LINES", [])]
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
