import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st

from lisfdr import EdgeClass, Graph, ModelParams, EmissionParams

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


def random_forest(gen: np.random.Generator, m: int, keep: float = 0.85) -> Graph:
    """Random recursive tree on m nodes with some edges dropped (so forests too)."""
    edges = []
    for v in range(1, m):
        if gen.random() < keep:
            edges.append((int(gen.integers(0, v)), v, int(gen.integers(0, 4))))
    return Graph.from_edges(m, edges)


def random_loopy(gen: np.random.Generator, m: int) -> Graph:
    """Random tree plus at least one extra edge, so at least one cycle."""
    assert m >= 3
    edges = {(int(gen.integers(0, v)), v) for v in range(1, m)}
    free = m * (m - 1) // 2 - len(edges)
    extra = min(1 + int(gen.integers(0, 3)), free)
    while extra:
        i, j = sorted(int(a) for a in gen.choice(m, size=2, replace=False))
        if (i, j) not in edges:
            edges.add((i, j))
            extra -= 1
    return Graph.from_edges(m, sorted(edges))


def random_params(gen: np.random.Generator, phi_range=2.0, h_range=1.0) -> ModelParams:
    phi = {c: float(gen.uniform(-phi_range, phi_range)) for c in EdgeClass}
    return ModelParams(
        phi,
        float(gen.uniform(-h_range, h_range)),
        EmissionParams(float(gen.uniform(0.5, 3.0)), float(gen.uniform(0.5, 2.0))),
    )


@st.composite
def forests(draw, max_m=12):
    m = draw(st.integers(1, max_m))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_forest(np.random.default_rng(seed), m)


@st.composite
def loopy_graphs(draw, max_m=10):
    m = draw(st.integers(3, max_m))
    seed = draw(st.integers(0, 2**32 - 1))
    return random_loopy(np.random.default_rng(seed), m)


@pytest.fixture
def gen():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    """One line per acceptance criterion, collected from the tests' user properties."""
    lines = []
    for reports in terminalreporter.stats.values():
        for rep in reports:
            props = dict(getattr(rep, "user_properties", ()) or ())
            if "criterion" in props and getattr(rep, "when", None) == "call":
                lines.append((props["criterion"], "PASS" if rep.passed else "FAIL", props.get("detail", "")))
    if lines:
        terminalreporter.section("acceptance criteria")
        for n, status, detail in sorted(lines):
            terminalreporter.write_line(f"criterion {n:>2}: {status}  {detail}")
