import random
from fractions import Fraction

import pytest
from hypothesis import settings

from isoplex import PolySystem, parse_polys, solve, variables
from isoplex.driver import SolveParams

settings.register_profile("ci", deadline=None, max_examples=60)
settings.load_profile("ci")


def ternary(text):
    return parse_polys(text, nvars=3)


@pytest.fixture(scope="session")
def xyt():
    return variables(3)


@pytest.fixture(scope="session")
def conic_ps():
    return ternary("x0^2 + x1^2 - x2^2")


@pytest.fixture(scope="session")
def sphere_ps():
    return ternary("x0^2 + x1^2 + x2^2")


@pytest.fixture(scope="session")
def conic_outcome(conic_ps):
    return solve(conic_ps, SolveParams())


@pytest.fixture(scope="session")
def sphere_outcome(sphere_ps):
    return solve(sphere_ps, SolveParams())


@pytest.fixture(scope="session")
def peps_half_outcome():
    from isoplex.cli import p_eps
    return solve(PolySystem([p_eps(Fraction(1, 2))]), SolveParams())


def random_form(rng: random.Random, nvars, degree, lo=-5, hi=5, den=4):
    from isoplex.poly import HomogeneousPoly, multi_indices
    terms = {a: Fraction(rng.randint(lo, hi), rng.randint(1, den)) for a in multi_indices(nvars, degree)}
    if not any(terms.values()):
        terms[(degree,) + (0,) * (nvars - 1)] = Fraction(1)
    return HomogeneousPoly(nvars, terms, degree=degree)


# one PASS/FAIL line per acceptance criterion, repeated in the summary
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
