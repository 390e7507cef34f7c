from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from hierdecode import build_from_edges

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

DATA = Path(__file__).parent / "data"

FIVE_EDGES = [("r", "A"), ("A", "a1"), ("A", "a2"), ("r", "b")]


@pytest.fixture
def five():
    """r -> {A -> {a1, a2}, b}."""
    return build_from_edges(FIVE_EDGES)


@pytest.fixture
def p_five():
    return np.array([0.4, 0.3, 0.3])


@pytest.fixture
def data_dir():
    return DATA


def write_five(path: Path) -> Path:
    path.write_text("".join(f"{a}\t{b}\n" for a, b in FIVE_EDGES))
    return path


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
