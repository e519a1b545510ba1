import math

import pytest

from wittenlab.complex import (
    MorseProfile1D,
    blended_morse_function_1d,
    build_circle_complex,
    build_torus_complex,
    product_morse_function_2d,
)
from wittenlab.spectral import SpectrumCache


@pytest.fixture(scope="session")
def cache():
    return SpectrumCache()


@pytest.fixture(scope="session")
def circle_fine():
    """2048-cell circle with wide quadratic windows (shipped example)."""
    cx = build_circle_complex(2048)
    return cx, blended_morse_function_1d(cx, math.pi / 2, 3 * math.pi / 2, 0.6, 1.0)


@pytest.fixture(scope="session")
def circle_narrow():
    """2048-cell circle with narrow windows, used for the convergence sweep."""
    cx = build_circle_complex(2048)
    return cx, blended_morse_function_1d(cx, math.pi / 2, 3 * math.pi / 2, 0.15, 1.0)


@pytest.fixture(scope="session")
def circle_512():
    cx = build_circle_complex(512)
    return cx, blended_morse_function_1d(cx, math.pi / 2, 3 * math.pi / 2, 0.6, 1.0)


@pytest.fixture(scope="session")
def circle_small():
    cx = build_circle_complex(64)
    return cx, blended_morse_function_1d(cx, math.pi / 2, 3 * math.pi / 2, 0.6, 1.0)


@pytest.fixture(scope="session")
def torus_32():
    cx = build_torus_complex(32, 32)
    prof = MorseProfile1D(2 * math.pi, math.pi / 2, 3 * math.pi / 2, 0.6, 1.0)
    return cx, product_morse_function_2d(cx, prof, prof)


@pytest.fixture(scope="session")
def torus_small():
    cx = build_torus_complex(12, 10, 2 * math.pi, 5.0)
    px = MorseProfile1D(2 * math.pi, math.pi / 2, 3 * math.pi / 2, 0.6, 1.0)
    py = MorseProfile1D(5.0, 1.25, 3.75, 0.5, 1.0)
    return cx, product_morse_function_2d(cx, px, py)


ACCEPTANCE_LINES = []


def record_criterion(number, passed, detail):
    line = f"CRITERION {number:>2} {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
