import math

import numpy as np
import pytest

from biplate.geometry import DomainSpec
from biplate.oracles import (
    DiskMode,
    RectangleMode,
    bessel_i,
    bessel_i_derivative,
    bessel_j,
    bessel_j_derivative,
    bessel_j_zero,
    bisect,
    disk_dirichlet_eigenvalue,
    disk_navier_eigenvalue,
    disk_spectrum,
    disk_supported_eigenvalue,
    nth_root,
    oracle_trace,
    rectangle_navier_eigenvalue,
    rectangle_navier_spectrum,
)

from conftest import (
    CLAMPED_DISK_1,
    CLAMPED_DISK_M1,
    J01,
    NAVIER_DISK_1,
    SQUARE_NAVIER,
    SUPPORTED_DISK_03,
    SUPPORTED_DISK_M1_03,
)

# scipy.special.jv / iv / jvp / ivp at the same arguments
BESSEL_POINTS = [
    (bessel_j, 0, 2.5, -0.04838377646819792),
    (bessel_j, 3, 7.1, -0.1896411340478548),
    (bessel_i, 2, 1.7, 0.4564984142685663),
    (bessel_j_derivative, 1, 3.3, -0.41116397342471533),
    (bessel_i_derivative, 0, 2.0, 1.590636854637329),
]


@pytest.mark.parametrize("fn, m, x, expected", BESSEL_POINTS)
def test_bessel_values(fn, m, x, expected):
    assert float(fn(m, x)) == pytest.approx(expected, rel=1e-12)


def test_bessel_zeros():
    assert bessel_j_zero(0, 1) == pytest.approx(J01, rel=1e-12)
    assert bessel_j_zero(0, 2) == pytest.approx(5.520078110286311, rel=1e-12)
    assert bessel_j_zero(1, 1) == pytest.approx(3.831705970207512, rel=1e-12)


def test_bessel_arrays():
    x = np.linspace(0.1, 20, 50)
    assert bessel_j(2, x).shape == x.shape
    assert float(bessel_j(0, 0.0)) == 1.0
    assert float(bessel_j(3, 0.0)) == 0.0


def test_disk_eigenvalues():
    assert disk_navier_eigenvalue(0, 1) == pytest.approx(NAVIER_DISK_1, rel=1e-12)
    assert disk_dirichlet_eigenvalue(0, 1) == pytest.approx(CLAMPED_DISK_1, rel=1e-12)
    assert disk_dirichlet_eigenvalue(1, 1) == pytest.approx(CLAMPED_DISK_M1, rel=1e-12)
    assert disk_supported_eigenvalue(0, 0.3, 1) == pytest.approx(SUPPORTED_DISK_03, rel=1e-12)
    assert disk_supported_eigenvalue(1, 0.3, 1) == pytest.approx(SUPPORTED_DISK_M1_03, rel=1e-12)


def test_disk_scaling():
    assert disk_navier_eigenvalue(0, 1, R=2.0) == pytest.approx(NAVIER_DISK_1 / 16, rel=1e-12)


def test_supported_between_limits():
    # supported lies below hinged and above zero
    for mu in (0.05, 0.5, 0.95):
        assert 0 < disk_supported_eigenvalue(0, mu, 1) < NAVIER_DISK_1


def test_rectangle():
    assert rectangle_navier_eigenvalue(1, 1, 1, 1) == pytest.approx(SQUARE_NAVIER, rel=1e-14)
    spec = rectangle_navier_spectrum(1, 1, 3)
    assert [s[1:] for s in spec] == [(1, 1), (1, 2), (2, 1)]
    with pytest.raises(ValueError):
        rectangle_navier_eigenvalue(1, 1, 0, 1)


def test_disk_spectrum_doublets():
    spec = disk_spectrum("dirichlet", count=3)
    assert [(m, n) for _, m, n in spec] == [(0, 1), (1, 1), (1, 1)]
    with pytest.raises(ValueError):
        disk_spectrum("free", count=2)


def test_root_finding_helpers():
    assert bisect(lambda x: x * x - 2, 0, 2) == pytest.approx(math.sqrt(2), abs=1e-11)
    assert nth_root(math.sin, 2, start=0.1) == pytest.approx(2 * math.pi, abs=1e-10)
    with pytest.raises(ValueError):
        nth_root(math.sin, 0)
    with pytest.raises(ValueError):
        bisect(lambda x: x * x + 1, 0, 1)


@pytest.mark.parametrize("bc", ["navier", "dirichlet", "supported"])
def test_disk_mode_satisfies_bc(bc):
    mode = DiskMode.build(bc, m=1, n=1, mu=0.3)
    tr = oracle_trace(mode, DomainSpec.disk(1.0), m=64)
    scale = np.max(np.abs(tr.u_nunu))
    assert np.max(np.abs(tr.u)) / scale < 1e-12
    if bc == "dirichlet":
        assert np.max(np.abs(tr.u_nu)) / scale < 1e-10
    elif bc == "navier":
        assert np.max(np.abs(tr.laplacian)) / scale < 1e-10
    else:
        assert np.max(np.abs(tr.laplacian - 0.7 * tr.u_nu)) / scale < 1e-10


def test_rectangle_mode():
    mode = RectangleMode(1.0, 2.0, 1, 1)
    assert mode.norm_squared() == pytest.approx(0.5)
    tr = oracle_trace(mode, m=64)
    assert np.max(np.abs(tr.u)) < 1e-14
    assert tr.eigenvalue == pytest.approx(rectangle_navier_eigenvalue(1, 2, 1, 1))
