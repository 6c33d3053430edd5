import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from depdisc import datasets
from depdisc.model import Relation

settings.register_profile(
    "default", max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def fig2a():
    return datasets.fig2a()


@pytest.fixture(scope="session")
def tax():
    return datasets.tax()


def relation_from(data, prefix="c"):
    data = np.asarray(data)
    m = data.shape[1] if data.ndim == 2 else 1
    return Relation.from_rows([f"{prefix}{a}" for a in range(m)], [[f"v{x}" for x in row] for row in data.tolist()])


@st.composite
def small_relations(draw, max_n=30, max_m=5, max_card=4, min_n=0):
    n = draw(st.integers(min_n, max_n))
    m = draw(st.integers(1, max_m))
    card = draw(st.integers(1, max_card))
    cells = draw(st.lists(st.lists(st.integers(0, card - 1), min_size=m, max_size=m), min_size=n, max_size=n))
    return Relation.from_rows([f"c{a}" for a in range(m)], [[f"v{x}" for x in row] for row in cells])


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
