from fractions import Fraction

import pytest

from gspkit.gsp import CostFunction, Job, make_instance
from gspkit.rcp import RcpInstance, Ray, Rect


def tard(w, d):
    return CostFunction("weighted-tardiness", weight=w, due=d)


def small_pair():
    """a(r=0, p=2, w=1, d=2) and b(r=1, p=1, w=2, d=1)."""
    return make_instance([Job(0, 0, 2, tard(1, 2)), Job(1, 1, 1, tard(2, 1))])


def two_rows():
    """Upper row: two cost-1 rectangles of value 3.  Lower row: one cost-2
    rectangle of value 2.  One ray at column 2 reaching the upper row asks for 5.
    """
    rects = (
        Rect(0, 0, 2, 1, Fraction(1), 3),
        Rect(1, 2, 4, 1, Fraction(1), 3),
        Rect(2, 1, 3, 0, Fraction(2), 2),
    )
    return RcpInstance(rects, (Ray(1, 2, 5),))


@pytest.fixture
def pair():
    return small_pair()


@pytest.fixture
def rows2():
    return two_rows()


ACCEPTANCE_LINES = []


def record(line):
    """Print an acceptance line now and repeat it in the terminal summary."""
    print(line)
    ACCEPTANCE_LINES.append(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
