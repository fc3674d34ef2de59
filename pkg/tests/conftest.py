import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from graphon_ldp.core import ColoredStepGraphon, StepGraphon

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def sym(rng, m):
    v = rng.random((m, m))
    return np.triu(v) + np.triu(v, 1).T


def rand_graphon(rng, m, equal=False):
    w = np.full(m, 1.0 / m) if equal else rng.dirichlet(np.ones(m))
    return StepGraphon(w, sym(rng, m))


@st.composite
def graphons(draw, max_parts=5, min_parts=1):
    seed = draw(st.integers(0, 2**32 - 1))
    m = draw(st.integers(min_parts, max_parts))
    return rand_graphon(np.random.default_rng(seed), m)


@st.composite
def colored_pairs(draw, max_parts=5, max_k=3):
    seed = draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    m = draw(st.integers(1, max_parts))
    k = draw(st.integers(1, max_k))
    w = rng.dirichlet(np.ones(m))
    X = ColoredStepGraphon(StepGraphon(w, sym(rng, m)), rng.integers(0, k, m), k)
    Y = ColoredStepGraphon(StepGraphon(w, sym(rng, m)), rng.integers(0, k, m), k)
    return X, Y


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep
