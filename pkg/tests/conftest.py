import json
import random
import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from lttext.geometry import Polygon
from lttext.synth import random_simple_polygon

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

FIXTURES = Path(__file__).parent / "fixtures"


@st.composite
def simple_polygons(draw, min_vertices=3, max_vertices=12, span=500.0):
    """Star-shaped simple polygons, convex or concave, anywhere in a span-sized window."""
    seed = draw(st.integers(0, 2**32 - 1))
    n = draw(st.integers(min_vertices, max_vertices))
    rng = random.Random(seed)
    cx, cy = rng.uniform(0, span), rng.uniform(0, span)
    r = rng.uniform(5, span / 4)
    return random_simple_polygon(rng, n, cx, cy, r, concave=draw(st.booleans()))


@st.composite
def boxes(draw, span=200):
    x0 = draw(st.integers(0, span))
    y0 = draw(st.integers(0, span))
    w = draw(st.integers(1, span))
    h = draw(st.integers(1, span))
    return Polygon.box(x0, y0, x0 + w, y0 + h)


@pytest.fixture
def matching_dir() -> Path:
    return FIXTURES / "matching"


@pytest.fixture
def expected_matching(matching_dir) -> dict:
    return json.loads((matching_dir / "expected.json").read_text())


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
