import math

import numpy as np
import pytest

from biplate.discretize import BCKind, Resolution
from biplate.errors import BoundaryConditionError
from biplate.geometry import DomainSpec
from biplate.identities import (
    IdentityReport,
    PolynomialField,
    adjudicate_supported_sign,
    appendix_normal_identity,
    convergence_study,
    cross_condition_margin,
    evaluate,
    green_identity,
    observed_slope,
    oracle_green_study,
    relative_residual,
    reports_to_csv,
    rellich_dirichlet,
    rellich_general,
    rellich_navier,
    rellich_supported,
    rellich_supported_both,
    study_from_reports,
    uniqueness_margin,
)
from biplate.oracles import DiskMode, RectangleMode, oracle_trace

from conftest import pair_and_trace


def test_relative_residual():
    assert relative_residual(1.0, 1.0) == 0.0
    assert relative_residual(2.0, 1.0) == 0.5
    assert relative_residual(0.0, 0.0) == 0.0


def test_report_row_and_csv():
    rep = IdentityReport("green", 2.0, 1.0, variant="x", flags=("a", "b"))
    assert rep.abs_residual == 1.0 and rep.rel_residual == 0.5
    assert rep.row()["flags"] == "a;b"
    text = reports_to_csv([rep])
    assert text.splitlines()[0].startswith("identity_id,variant")


def test_square_navier_analytic_closes():
    tr = oracle_trace(RectangleMode(1.0, 1.0), m=256)
    rep = rellich_navier(None, tr)
    assert rep.rel_residual < 1e-12
    assert rep.details["form_gap"] < 1e-12


@pytest.mark.parametrize("bc", ["navier", "dirichlet", "supported"])
def test_disk_oracle_identities_close(bc):
    mode = DiskMode.build(bc, 0, 1, mu=0.3)
    tr = oracle_trace(mode, DomainSpec.disk(1.0), m=128)
    assert rellich_general(None, tr).rel_residual < 1e-10
    assert green_identity(mode, tr).rel_residual < 1e-10


def test_oracle_green_study_at_floor():
    st = oracle_green_study(RectangleMode(1.0, 2.0))
    assert st.at_floor
    assert st.slope is None


def test_rellich_dirichlet_discrete(clamped_disk):
    pair, tr = clamped_disk
    rep = rellich_dirichlet(pair, tr)
    assert rep.rel_residual < 2e-3
    assert rep.resolution == "64x32"


def test_rellich_navier_forms_agree(navier_disk):
    pair, tr = navier_disk
    a = rellich_navier(pair, tr, "x.grad")
    b = rellich_navier(pair, tr, "support")
    assert a.rhs == pytest.approx(b.rhs, rel=1e-10)
    with pytest.raises(ValueError):
        rellich_navier(pair, tr, "other")


def test_identity_bc_checks(navier_disk, clamped_disk):
    with pytest.raises(BoundaryConditionError):
        rellich_dirichlet(*navier_disk)
    with pytest.raises(BoundaryConditionError):
        rellich_navier(*clamped_disk)
    with pytest.raises(BoundaryConditionError):
        rellich_supported(*navier_disk)


def test_supported_variants(supported_disk):
    pair, tr = supported_disk
    reps = {r.variant: r for r in rellich_supported_both(pair, tr)}
    assert set(reps) == {"+", "-", "general"}
    assert reps["general"].rel_residual < 1e-3
    # the two sign variants differ only in the dc0/dnu term
    assert reps["+"].details["dc0_term"] == reps["-"].details["dc0_term"]
    assert reps["+"].rhs - reps["-"].rhs == pytest.approx(
        reps["+"].details["dc0_term"] / (2 * tr.norm_squared), rel=1e-12)
    with pytest.raises(ValueError):
        rellich_supported(pair, tr, sign_variant="*")


def test_supported_singular_limit_flag(navier_disk):
    pair, tr = navier_disk
    rep = rellich_supported(pair, tr, mu=0.99999)
    assert "singular-limit" in rep.flags


def test_trivial_trace_flag(clamped_disk):
    _, tr = clamped_disk
    from dataclasses import replace

    rep = rellich_dirichlet(None, replace(tr, u_nunu=np.zeros_like(tr.u_nunu)))
    assert "trivial-trace" in rep.flags


def test_evaluate_dispatch(navier_disk):
    pair, tr = navier_disk
    assert evaluate("rellich.navier", pair, tr, "support").variant == "support"
    assert evaluate("green", pair, tr).identity_id == "green"
    with pytest.raises(ValueError):
        evaluate("nope", pair, tr)


def test_observed_slope():
    hs = [0.1, 0.05, 0.025]
    assert observed_slope(hs, [h**2 for h in hs]) == pytest.approx(2.0)


def test_study_requires_three_reports():
    rep = IdentityReport("green", 1.0, 1.1)
    with pytest.raises(ValueError):
        study_from_reports([rep, rep], [0.1, 0.05])


def test_convergence_study_dirichlet():
    st = convergence_study("rellich.dirichlet", DomainSpec.disk(1.0), BCKind.dirichlet(),
                           [Resolution(n, 16) for n in (16, 32, 64)])
    assert st.monotone
    assert st.slope > 1.8
    assert all(r.convergence_slope == st.slope for r in st.reports)


def test_convergence_study_rejects_wrong_bc():
    with pytest.raises(BoundaryConditionError):
        convergence_study("rellich.navier", DomainSpec.disk(1.0), BCKind.dirichlet(),
                          [Resolution(n, 16) for n in (16, 32, 64)])


@pytest.mark.parametrize("text, value", [
    ("poly:x3y", 2.0**3 * 3.0),
    ("poly:x2+y2", 13.0),
    ("poly:2*x3y-0.5*y4", 2 * 24.0 - 0.5 * 81.0),
    ("x", 2.0),
])
def test_polynomial_parse(text, value):
    assert PolynomialField.parse(text)(2.0, 3.0) == pytest.approx(value)


def test_polynomial_parse_rejects():
    with pytest.raises(ValueError):
        PolynomialField.parse("poly:x^3")
    with pytest.raises(ValueError):
        PolynomialField.parse("poly:")


def test_polynomial_hessian_and_normal_derivative():
    f = PolynomialField.parse("poly:x3y")
    hxx, hxy, hyy = f.hessian(1.0, 2.0)
    assert (hxx, hxy, hyy) == (12.0, 3.0, 0.0)
    # along (1, 0): d2/dt2 (1+t)^3 * 2 = 12
    assert f.normal_second_derivative((1.0, 2.0), (1.0, 0.0)) == pytest.approx(12.0)


@pytest.mark.parametrize("domain", ["disk:1", "ellipse:2,1", "star:1,0,0,0.1,0"])
@pytest.mark.parametrize("field_", ["poly:x3y", "poly:x2+y2", "poly:x4-3*x2y2+y3"])
def test_appendix_identity(domain, field_):
    gu, gt = appendix_normal_identity(field_, DomainSpec.parse(domain))
    assert gu.details["max_abs_gap"] <= 1e-10
    assert gt.details["max_abs_gap"] <= 1e-12


def test_appendix_rejects_rectangle():
    with pytest.raises(BoundaryConditionError):
        appendix_normal_identity("poly:x", DomainSpec.rectangle(1, 1))


def test_uniqueness_margins(navier_disk, clamped_disk, supported_disk):
    for (pair, tr), bc in [(navier_disk, "navier"), (clamped_disk, "dirichlet"),
                           (supported_disk, "supported:0.3")]:
        m = uniqueness_margin(tr, BCKind.parse(bc))
        assert m.passed and m.value > 0.01


def test_clamped_mode_is_not_hinged(clamped_disk):
    _, tr = clamped_disk
    m = cross_condition_margin(tr, BCKind.navier())
    assert m.passed and m.quantity == "laplacian"


def test_sign_adjudication_small():
    adj = adjudicate_supported_sign(resolutions=[Resolution(n, 16) for n in (16, 32, 64)])
    # neither sign of the dc0/dnu term closes; the general form does
    assert adj.verdict == "none"
    assert all("general" in acc for acc in adj.accepted.values())
    rows = adj.rows()
    assert {r["variant"] for r in rows} == {"+", "-", "general"}
    assert math.isfinite(rows[0]["rel_residual"])
