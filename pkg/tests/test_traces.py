import io

import numpy as np
import pytest

from biplate.discretize import BCKind
from biplate.errors import TraceError
from biplate.geometry import DomainSpec
from biplate.oracles import DiskMode, oracle_trace
from biplate.traces import TRACE_FIELDS, cartesian_hessian, extract_trace, verify_bc_residual

from conftest import pair_and_trace

FIELDS = ("u_nu", "u_nunu", "laplacian", "laplacian_nu", "x_grad")


def trace_errors(bc, n):
    pair, tr = pair_and_trace("disk:1", bc, n, 32)
    mode = DiskMode.build(bc.split(":")[0], 0, 1, mu=0.3)
    ref = oracle_trace(mode, boundary=tr.boundary)
    scale = np.sqrt(tr.norm_squared / ref.norm_squared)
    return {f: np.max(np.abs(getattr(tr, f) / scale - getattr(ref, f))) for f in FIELDS}, ref


@pytest.mark.parametrize("bc", ["navier", "dirichlet", "supported:0.3"])
def test_traces_converge_to_oracle(bc):
    coarse, ref = trace_errors(bc, 64)
    fine, _ = trace_errors(bc, 128)
    for f in FIELDS:
        magnitude = np.max(np.abs(getattr(ref, f))) + 1.0
        assert fine[f] < 0.05 * magnitude
        if coarse[f] > 1e-9 * magnitude:
            assert np.log2(coarse[f] / fine[f]) > 1.7, f


def test_oracle_trace_values():
    # hinged disk mode J0(j r) - J0(j) I0(j r) / I0(j): normal derivative and
    # normal derivative of the Laplacian at r = 1 (normalization of DiskMode)
    _, ref = trace_errors("navier", 64)
    assert ref.u_nu[0] == pytest.approx(-1.2484591696955065, rel=1e-10)
    assert ref.laplacian_nu[0] == pytest.approx(7.220071545498495, rel=1e-10)


@pytest.mark.parametrize("bc", ["navier", "dirichlet", "supported:0.3"])
def test_bc_residuals(bc):
    _, tr = pair_and_trace("disk:1", bc, 64, 32)
    res = verify_bc_residual(tr, BCKind.parse(bc))
    assert res.passed, res.components


def test_bc_residual_detects_wrong_condition():
    _, tr = pair_and_trace("disk:1", "dirichlet", 64, 32)
    assert not verify_bc_residual(tr, BCKind.navier()).passed


def test_trace_consistency_flag():
    _, tr = pair_and_trace("disk:1", "navier", 64, 32)
    assert tr.consistent
    assert tr.consistency_gap < 5e-2


def test_rectangle_trace():
    pair, tr = pair_and_trace("rect:1,1", "navier", 40, 40)
    assert tr.curvature is None
    assert np.max(np.abs(tr.u)) == 0.0
    # x . grad u = (x . nu) u_nu on the edges since u vanishes there
    np.testing.assert_allclose(tr.x_grad, tr.support * tr.u_nu, atol=1e-12)


def test_x_grad_equals_support_times_u_nu():
    _, tr = pair_and_trace("ellipse:1.5,1", "navier", 40, 32)
    np.testing.assert_allclose(tr.x_grad, tr.support * tr.u_nu, rtol=1e-10, atol=1e-12)


def test_csv_columns():
    _, tr = pair_and_trace("disk:1", "navier", 64, 32)
    buf = io.StringIO()
    tr.to_csv(buf)
    header = buf.getvalue().splitlines()[0].split(",")
    assert header[:7] == ["node", "s", "x", "y", "support", "arc_weight", "curvature"]
    assert set(TRACE_FIELDS) <= set(header)
    assert len(buf.getvalue().splitlines()) == 1 + len(tr.boundary)


def test_cartesian_hessian_trace_is_laplacian():
    pair, _ = pair_and_trace("disk:1", "navier", 64, 32)
    hxx, hxy, hyy = cartesian_hessian(pair)
    from biplate.traces import sigma_field

    sigma = sigma_field(pair)
    inner = slice(2, -2)
    np.testing.assert_allclose((hxx + hyy)[inner], sigma[inner], atol=1e-6 * np.max(np.abs(sigma)))


def test_stencil_order_three():
    pair, tr2 = pair_and_trace("disk:1", "navier", 64, 32)
    tr3 = extract_trace(pair, stencil_order=3)
    assert np.max(np.abs(tr3.u_nu - tr2.u_nu)) < 1e-2 * np.max(np.abs(tr2.u_nu))
    with pytest.raises(ValueError):
        extract_trace(pair, stencil_order=5)


def test_extract_trace_domain_mismatch():
    pair, _ = pair_and_trace("disk:1", "navier", 64, 32)
    with pytest.raises(TraceError):
        extract_trace(pair, domain=DomainSpec.disk(2.0))
