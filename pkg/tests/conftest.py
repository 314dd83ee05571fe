import numpy as np
import pytest

from polyqn.polysys import PolySystem, ProblemFile


@pytest.hookimpl(tryfirst=True, hookwrapper=True)
def pytest_runtest_makereport(item, call):
    # expose per-phase outcomes to fixtures (used by the acceptance suite
    # to print one pass/fail line per criterion)
    outcome = yield
    report = outcome.get_result()
    setattr(item, "report_" + report.when, report)


@pytest.fixture
def s1():
    """Scalar quadratic f(x) = x^2 - 4: one degree-2 entry, b = [-4]."""
    return PolySystem(1, 2, [-4.0], [(2, 0, (0, 0), 1.0)])


@pytest.fixture
def s1_problem(s1):
    return ProblemFile(s1, np.array([1.0]), np.array([2.0]), "s1")
