from fractions import Fraction

import pytest
from hypothesis import strategies as st

from trotterpath.gridpath import LatticePath


@st.composite
def lattice_paths(draw, max_side=7):
    p = draw(st.integers(1, max_side))
    q = draw(st.integers(1, max_side))
    steps = draw(st.permutations([0] * p + [1] * q))
    return LatticePath((p, q), tuple(steps))


def column_oracle(path: LatticePath):
    """Area and first moments by integrating column by column.

    Independent of the edge-sum formulas: over column ``[i-1, i]`` the path
    sits at the height ``h`` where its i-th A step was taken, and the region
    between path and diagonal is integrated in closed form.
    """
    P, Q = path.targets
    s = Fraction(Q, P)
    area = m1 = m2 = Fraction(0)
    i = j = 0
    for step in path.steps:
        if step == 1:
            j += 1
            continue
        i += 1
        h = j
        d1 = Fraction(i**2 - (i - 1) ** 2, 2)
        d2 = Fraction(i**3 - (i - 1) ** 3, 3)
        area += s * d1 - h
        m1 += s * d2 - h * d1
        m2 += s * s * d2 / 2 - Fraction(h * h, 2)
    return area, m1, m2


@pytest.fixture
def tfi2():
    from trotterpath.linalg import tfi_two_term

    return tfi_two_term(2)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
