import math
import sys

import numpy as np
import pytest

from hplyap.io import parse_system
from hplyap.systems import LtiSystem, UncertainSystem, stiff_system


@pytest.fixture
def ex1():
    return parse_system("example1")


@pytest.fixture
def ex4():
    return parse_system("example4")


@pytest.fixture
def ex5():
    return parse_system("example5")


@pytest.fixture
def ex6():
    return parse_system("example6")


@pytest.fixture
def stiff100():
    return stiff_system(2, 100)


def random_hurwitz(rng, n, margin=0.1):
    a = rng.normal(size=(n, n))
    shift = max(0.0, float(np.max(np.linalg.eigvals(a).real))) + margin + rng.uniform(0, 0.5)
    return a - shift * np.eye(n)


def random_lti(rng, n):
    return LtiSystem(random_hurwitz(rng, n), rng.normal(size=n), rng.normal(size=n))


SQRT2 = math.sqrt(2.0)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
