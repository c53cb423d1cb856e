import numpy as np
import pytest

from biplate.discretize import BCKind, Resolution, assemble
from biplate.eigensolve import (
    backward_error,
    match_modes,
    rayleigh_clamped_hinged,
    rayleigh_supported,
    solve_lowest,
)
from biplate.errors import BoundaryConditionError
from biplate.geometry import DomainSpec

from conftest import (
    CLAMPED_DISK_1,
    CLAMPED_DISK_M1,
    NAVIER_DISK_1,
    SQUARE_NAVIER,
    SUPPORTED_DISK_03,
    lowest,
)


@pytest.mark.parametrize("bc, expected", [
    ("navier", NAVIER_DISK_1),
    ("dirichlet", CLAMPED_DISK_1),
    ("supported:0.3", SUPPORTED_DISK_03),
])
def test_disk_lowest_close_to_oracle(bc, expected):
    pair = lowest("disk:1", bc, 64, 32)[0]
    assert pair.value == pytest.approx(expected, rel=5e-3)
    assert pair.residual < 1e-8


def test_doublet_grouped_and_ordered():
    pairs = lowest("disk:1", "dirichlet", 64, 32, 3)
    values = [p.value for p in pairs]
    assert values == sorted(values)
    assert [p.multiplicity_group for p in pairs] == [0, 1, 1]
    assert pairs[1].value == pytest.approx(CLAMPED_DISK_M1, rel=5e-3)
    assert pairs[1].mode == (1, 0) and pairs[2].mode == (1, 1)


def test_modal_and_2d_agree():
    dom = DomainSpec.disk(1.0)
    a = solve_lowest(assemble(dom, BCKind.navier(), Resolution(24, 16), method="modal"), 1)[0]
    b = solve_lowest(assemble(dom, BCKind.navier(), Resolution(24, 16), method="2d"), 1)[0]
    assert a.value == pytest.approx(b.value, rel=1e-9)


def test_second_order_convergence():
    errs = [abs(lowest("disk:1", "dirichlet", n, 16)[0].value - CLAMPED_DISK_1) for n in (32, 64, 128)]
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 1.8)


def test_square_navier():
    pair = lowest("rect:1,1", "navier", 40, 40)[0]
    assert pair.value == pytest.approx(SQUARE_NAVIER, rel=1e-2)


def test_ellipse_converges():
    vals = [lowest("ellipse:1.5,1", "navier", n, 32)[0].value for n in (20, 40)]
    # frozen from the 80-node run (17.286); the error shrinks by about 4
    assert abs(vals[1] - 17.286) < abs(vals[0] - 17.286) / 3


def test_normalization():
    pair = lowest("disk:1", "navier", 64, 32)[0]
    assert pair.grid.integrate(pair.field**2) == pytest.approx(1.0, rel=1e-10)
    assert pair.field[0, 0] > 0


def test_rayleigh_quotients():
    nav = lowest("disk:1", "navier", 64, 32)[0]
    assert rayleigh_clamped_hinged(nav) == pytest.approx(nav.value, rel=1e-3)
    sup = lowest("disk:1", "supported:0.3", 64, 32)[0]
    assert rayleigh_supported(sup) == pytest.approx(sup.value, rel=1e-3)
    with pytest.raises(BoundaryConditionError):
        rayleigh_supported(nav)
    with pytest.raises(BoundaryConditionError):
        rayleigh_clamped_hinged(sup)


def test_rayleigh_scale_invariant():
    pair = lowest("disk:1", "dirichlet", 64, 32)[0]
    assert rayleigh_clamped_hinged(pair.scaled(-3.5)) == pytest.approx(rayleigh_clamped_hinged(pair), rel=1e-12)


def test_k_bounds():
    op = assemble(DomainSpec.disk(1.0), BCKind.navier(), Resolution(16, 16))
    with pytest.raises(ValueError):
        solve_lowest(op, 0)
    with pytest.raises(ValueError):
        solve_lowest(op, 21)


def test_backward_error_zero_for_exact_pair():
    A = np.diag([1.0, 2.0])
    x = np.array([0.0, 1.0])
    assert backward_error(A @ x, 2.0, x, 2.0) == 0.0
    assert backward_error(A @ x, 2.5, x, 2.0) == pytest.approx(0.5 / 4.5)


def test_match_modes_identity_and_swap():
    pairs = list(lowest("disk:1", "dirichlet", 32, 16, 4))
    same = match_modes(pairs, pairs)
    assert same.mapping == (0, 1, 1, 3)
    assert not same.ambiguous
    assert min(same.overlaps) == pytest.approx(1.0, abs=1e-10)
