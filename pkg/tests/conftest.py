from functools import lru_cache

import pytest

from biplate.discretize import BCKind, Resolution, assemble
from biplate.eigensolve import solve_lowest
from biplate.geometry import DomainSpec
from biplate.traces import extract_trace

# Independent reference values (scipy.special zeros, mpmath findroot on the
# Bessel determinants) frozen at 13 digits.
J01 = 2.404825557695773
NAVIER_DISK_1 = 33.44523988202471
CLAMPED_DISK_1 = 104.3631055588443
CLAMPED_DISK_M1 = 452.0045101331737
SUPPORTED_DISK_03 = 24.35569607242801
SUPPORTED_DISK_005 = 20.548677451632
SUPPORTED_DISK_095 = 32.86235234311477
SUPPORTED_DISK_M1_03 = 193.1589923977119
SQUARE_NAVIER = 389.63636413600966


@lru_cache(maxsize=None)
def lowest(domain: str, bc: str, n: int, m: int, k: int = 1):
    """Cached lowest eigenpairs; tests must not mutate them."""
    op = assemble(DomainSpec.parse(domain), BCKind.parse(bc), Resolution(n, m))
    return tuple(solve_lowest(op, k))


@lru_cache(maxsize=None)
def pair_and_trace(domain: str, bc: str, n: int = 64, m: int = 32):
    pair = lowest(domain, bc, n, m)[0]
    return pair, extract_trace(pair)


@pytest.fixture(scope="session")
def navier_disk():
    return pair_and_trace("disk:1", "navier")


@pytest.fixture(scope="session")
def clamped_disk():
    return pair_and_trace("disk:1", "dirichlet")


@pytest.fixture(scope="session")
def supported_disk():
    return pair_and_trace("disk:1", "supported:0.3")


# -- acceptance summary ---------------------------------------------------

ACCEPTANCE: dict = {}


def record(criterion: int, passed: bool, detail: str):
    """Store one acceptance verdict; the terminal summary prints them in order."""
    ACCEPTANCE[criterion] = (bool(passed), detail)
    print(f"criterion {criterion}: {'PASS' if passed else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        passed, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if passed else 'FAIL'}  {detail}")
