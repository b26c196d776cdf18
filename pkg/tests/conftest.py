import pytest

from rssm import BernoulliMeasure, PerturbationDistribution, SelfSimilarIFS

ACCEPTANCE_LINES = []


@pytest.fixture
def fractal013():
    """Three maps of ratio 0.45 with translations 0, 1, 3 (similarity dimension ~1.376)."""
    return SelfSimilarIFS([0.45, 0.45, 0.45], [0.0, 1.0, 3.0])


@pytest.fixture
def natural013(fractal013):
    return BernoulliMeasure.natural(fractal013)


@pytest.fixture
def spline3():
    return PerturbationDistribution.spline(3, 0.1)


@pytest.fixture
def halves():
    """Two maps of ratio 1/2 with translations 0 and 1; the attractor is [0, 2]."""
    return SelfSimilarIFS([0.5, 0.5], [0.0, 1.0])


@pytest.fixture
def no_perturbation():
    return PerturbationDistribution.uniform(0.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
