import io
import math

import numpy as np
import pytest

from biplate.discretize import Resolution
from biplate.errors import BoundaryConditionError
from biplate.geometry import DomainSpec
from biplate.elasticity import (
    Material,
    adjudicate_birman,
    energies_to_csv,
    flexural_rigidity,
    formula_check,
    hessian_boundary_identity,
    natural_frequency,
    poisson_sweep,
    strain_energy_boundary,
    strain_energy_volume,
)

from conftest import SUPPORTED_DISK_005, SUPPORTED_DISK_095, pair_and_trace


def test_material_and_rigidity():
    m = Material(0.3)
    assert m.rigidity == pytest.approx(1.0 / (1 - 0.09))
    assert flexural_rigidity(Material(0.3, E=200.0, thickness=0.01)) == pytest.approx(
        200.0 * 1e-6 / (12 * 0.91))
    assert m.with_mu(0.5).mu == 0.5
    for bad in (0.0, 1.0, -0.2):
        with pytest.raises(ValueError):
            Material(bad)
    with pytest.raises(ValueError):
        Material(0.3, thickness=0.0)


def test_near_singular_warning(caplog):
    Material(0.995)
    assert "near-singular" in caplog.text


def test_natural_frequency():
    m = Material(0.3, mass_per_area=2.0)
    assert natural_frequency(24.0, m) == pytest.approx(math.sqrt(24.0 * m.rigidity / 2.0))
    with pytest.raises(ValueError):
        natural_frequency(-1.0, m)


def test_energy_volume_scales_quadratically(navier_disk):
    pair, _ = navier_disk
    e1 = strain_energy_volume(pair, Material(0.3))
    e2 = strain_energy_volume(pair.scaled(2.0), Material(0.3))
    assert e2 == pytest.approx(4 * e1, rel=1e-12)
    assert strain_energy_volume(pair.scaled(0.0), Material(0.3)) == 0.0


@pytest.mark.parametrize("fixture, tol", [("clamped_disk", 0.01), ("navier_disk", 0.01)])
def test_energy_boundary_matches_volume(fixture, tol, request):
    pair, tr = request.getfixturevalue(fixture)
    rep = strain_energy_boundary(pair, tr, Material(0.3))
    assert rep.rel_gap < tol


def test_supported_energy_variants(supported_disk):
    pair, tr = supported_disk
    rep = strain_energy_boundary(pair, tr, Material(0.3))
    assert rep.variant == "-,kappa"
    gaps = {k: abs(v - rep.E_volume) / rep.E_volume for k, v in rep.alternatives.items()}
    assert gaps["general,kappa"] < 0.01
    with pytest.raises(ValueError):
        strain_energy_boundary(pair, tr, Material(0.4))


def test_clamped_cross_term_small(clamped_disk):
    pair, tr = clamped_disk
    rep = strain_energy_boundary(pair, tr, Material(0.3))
    assert rep.cross_term_fraction < 1e-3


def test_energy_csv(navier_disk):
    pair, tr = navier_disk
    rep = strain_energy_boundary(pair, tr, Material(0.3))
    text = energies_to_csv([rep])
    assert text.splitlines()[0] == "bc,mu,variant,primary,E_volume,E_boundary,rel_gap"
    assert len(text.splitlines()) == 1 + len(rep.alternatives)
    assert rep.to_dict()["variant"] == "kappa"


def test_birman_disk_two_discriminates():
    pair, tr = pair_and_trace("disk:2", "navier", 64, 32)
    adj = adjudicate_birman(pair, tr)
    assert adj.verdict == "kappa"
    assert adj.reports["1/kappa"].rel_residual > 0.5


def test_birman_unit_disk_control(navier_disk):
    assert adjudicate_birman(*navier_disk).verdict == "both"


def test_birman_rejects_bad_variant(navier_disk):
    with pytest.raises(ValueError):
        hessian_boundary_identity(*navier_disk, variant="kappa^2")


@pytest.fixture(scope="module")
def small_sweep():
    return poisson_sweep(DomainSpec.disk(1.0), Resolution(48, 16), mu_grid=[0.05, 0.2, 0.3, 0.5, 0.95], k=2)


def test_sweep_monotone(small_sweep):
    s = small_sweep
    assert s.strictly_increasing() == [True, True]
    assert s.omega_increasing() == [True, True]
    assert s.below_navier() == [True, True]
    assert s.multiplicity == [1, 2]
    assert s.gamma[0, 0] == pytest.approx(SUPPORTED_DISK_005, rel=5e-3)
    assert s.gamma[-1, 0] == pytest.approx(SUPPORTED_DISK_095, rel=5e-3)


def test_sweep_reports(small_sweep):
    buf = io.StringIO()
    small_sweep.to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0].startswith("mu,mode,multiplicity,gamma")
    assert len(lines) == 1 + 5 * 2
    d = small_sweep.to_dict()
    assert set(d["verdicts"]["formula_gaps"]) == {"0.2", "0.3", "0.5"}
    with pytest.raises(ValueError):
        small_sweep.formula_gap(0.25)


def test_sweep_threads_match(small_sweep):
    other = poisson_sweep(DomainSpec.disk(1.0), Resolution(48, 16), mu_grid=[0.05, 0.2, 0.3, 0.5, 0.95], k=2,
                          threads=2)
    np.testing.assert_array_equal(other.gamma, small_sweep.gamma)


def test_sweep_input_checks():
    with pytest.raises(ValueError):
        poisson_sweep(DomainSpec.disk(1.0), mu_grid=[0.3, 0.2])
    with pytest.raises(ValueError):
        poisson_sweep(DomainSpec.disk(1.0), mu_grid=[0.0, 0.5])
    with pytest.raises(BoundaryConditionError):
        poisson_sweep(DomainSpec.rectangle(1, 1), mu_grid=[0.2, 0.3])
    with pytest.raises(BoundaryConditionError):
        poisson_sweep(DomainSpec.star((1.0, 0, 0, 0, 0, 0, 0, 0, 0.12)), mu_grid=[0.2, 0.3])


def test_formula_check():
    out = formula_check(DomainSpec.disk(1.0), 0.3, Resolution(48, 16))
    assert out["rel_gap"] < 0.02
    assert out["fd"] > 0


def test_interior_comparison_shapes_agree_inside():
    from biplate.elasticity import interior_comparison

    rows = interior_comparison(DomainSpec.disk(1.0), 0.3, Resolution(48, 16))
    dist = [r["rel_l2_distance"] for r in rows]
    assert dist == sorted(dist)
    assert dist[0] < 0.05 < dist[-1]
    with pytest.raises(ValueError):
        interior_comparison(DomainSpec.disk(1.0), 0.3, Resolution(16, 16), fractions=(1.5,))
