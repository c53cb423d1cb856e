"""Thin-plate quantities: rigidity, frequencies, strain energies, Poisson sweeps."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .discretize import BCKind, Resolution, assemble
from .eigensolve import match_modes, solve_lowest, SOLVER_TOL
from .errors import BoundaryConditionError, SolverError
from .geometry import DomainSpec, build_boundary
from .identities import IdentityReport, general_rellich_rhs, relative_residual
from .reports import write_csv
from .traces import BoundaryTrace, cartesian_hessian, extract_trace

log = logging.getLogger(__name__)

NEAR_SINGULAR_MU = 0.99
BIRMAN_VARIANTS = ("1/kappa", "kappa")
DEFAULT_MU_GRID = tuple(np.round(np.linspace(0.05, 0.95, 19), 10))


@dataclass(frozen=True)
class Material:
    """Isotropic plate: Poisson ratio, Young's modulus, thickness, mass per unit area."""

    mu: float
    E: float = 12.0
    thickness: float = 1.0
    mass_per_area: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.mu < 1.0:
            raise ValueError(f"Poisson ratio must lie in (0, 1), got {self.mu}")
        if self.E <= 0 or self.thickness <= 0 or self.mass_per_area <= 0:
            raise ValueError("modulus, thickness and mass per area must be positive")
        if self.mu > NEAR_SINGULAR_MU:
            log.warning("Poisson ratio %.4g is near 1: flexural rigidity is near-singular", self.mu)

    @property
    def rigidity(self) -> float:
        return flexural_rigidity(self)

    def with_mu(self, mu: float) -> "Material":
        return replace(self, mu=mu)


def flexural_rigidity(material: Material) -> float:
    """``D = E h^3 / (12 (1 - mu^2))``."""
    mu = material.mu
    return material.E * material.thickness**3 / (12.0 * (1.0 - mu * mu))


def natural_frequency(gamma: float, material: Material) -> float:
    """``omega = sqrt(gamma D / m)``."""
    if gamma <= 0:
        raise ValueError(f"eigenvalue must be positive, got {gamma}")
    return math.sqrt(gamma * flexural_rigidity(material) / material.mass_per_area)


# -- volume energy --------------------------------------------------------

def hessian_integrals(pair) -> dict:
    """``int (Lap u)^2`` and ``int (u_xx u_yy - u_xy^2)`` from the grid Hessian."""
    hxx, hxy, hyy = cartesian_hessian(pair)
    grid = pair.grid
    return {"laplacian_sq": grid.integrate((hxx + hyy) ** 2),
            "det": grid.integrate(hxx * hyy - hxy**2)}


def strain_energy_volume(pair, material: Material) -> float:
    """``(D/2) int [(Lap u)^2 - 2 (1 - mu)(u_xx u_yy - u_xy^2)] dOmega``."""
    if not np.any(pair.field):
        return 0.0
    ints = hessian_integrals(pair)
    D = flexural_rigidity(material)
    return 0.5 * D * (ints["laplacian_sq"] - 2 * (1 - material.mu) * ints["det"])


# -- Birman identity ------------------------------------------------------

def _curvature_factor(trace: BoundaryTrace, variant: str) -> np.ndarray:
    kappa = trace.boundary.require_curvature()
    if variant == "1/kappa":
        return 1.0 / kappa
    if variant == "kappa":
        return kappa
    raise ValueError(f"unknown variant {variant!r}; choose from {BIRMAN_VARIANTS}")


def hessian_boundary_identity(pair, trace: BoundaryTrace, variant: str = "kappa") -> IdentityReport:
    """``2 int (u_xx u_yy - u_xy^2)`` against ``oint f(kappa) u_nu^2`` for ``u = 0`` on the edge.

    ``variant`` selects ``f = 1/kappa`` or ``f = kappa``.  Clamped modes make
    both sides vanish; ``details["relative_to_energy"]`` then measures the
    volume integral against ``int (Lap u)^2``.
    """
    factor = _curvature_factor(trace, variant)
    ints = hessian_integrals(pair)
    lhs = 2 * ints["det"]
    rhs = trace.integrate(factor * trace.u_nu**2)
    return IdentityReport("birman", lhs, rhs, variant=variant, resolution=pair.operator.resolution.label(),
                          h=trace.h, provenance=trace.provenance,
                          details={"relative_to_energy": abs(lhs - rhs) / max(ints["laplacian_sq"], 1e-300)})


@dataclass
class BirmanAdjudication:
    reports: dict
    matching: list
    tolerance: float

    @property
    def verdict(self) -> str:
        if len(self.matching) == 1:
            return self.matching[0]
        return "both" if len(self.matching) == 2 else "none"


def adjudicate_birman(pair, trace, tolerance: float = 0.01) -> BirmanAdjudication:
    reports = {v: hessian_boundary_identity(pair, trace, v) for v in BIRMAN_VARIANTS}
    matching = [v for v, r in reports.items() if r.rel_residual <= tolerance]
    return BirmanAdjudication(reports=reports, matching=matching, tolerance=tolerance)


# -- boundary energy ------------------------------------------------------

@dataclass
class EnergyReport:
    """Volume strain energy against a boundary-integral form."""

    bc: str
    material: Material
    E_volume: float
    E_boundary: float
    variant: str
    cross_term: float
    alternatives: dict = field(default_factory=dict)

    @property
    def rel_gap(self) -> float:
        return relative_residual(self.E_volume, self.E_boundary)

    @property
    def cross_term_fraction(self) -> float:
        return abs(self.cross_term) / max(abs(self.E_volume), 1e-300)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["rel_gap"] = self.rel_gap
        out["cross_term_fraction"] = self.cross_term_fraction
        out["alternatives"] = {k: {"E_boundary": v, "rel_gap": relative_residual(self.E_volume, v)}
                               for k, v in self.alternatives.items()}
        return out

    def rows(self) -> list:
        base = {"bc": self.bc, "mu": self.material.mu, "E_volume": self.E_volume}
        out = [dict(base, variant=self.variant, E_boundary=self.E_boundary, rel_gap=self.rel_gap,
                    primary=True)]
        for k, v in self.alternatives.items():
            if k != self.variant:
                out.append(dict(base, variant=k, E_boundary=v,
                                rel_gap=relative_residual(self.E_volume, v), primary=False))
        return out


ENERGY_COLUMNS = ("bc", "mu", "variant", "primary", "E_volume", "E_boundary", "rel_gap")


def energies_to_csv(reports, handle=None) -> str:
    return write_csv([row for r in reports for row in r.rows()], ENERGY_COLUMNS, handle)


def strain_energy_boundary(pair, trace: BoundaryTrace, material: Material,
                           birman_variant: str = "kappa", sign_variant: str = "-") -> EnergyReport:
    """Boundary-integral strain energy for the pair's edge condition.

    Clamped: ``(D/8) oint (x.nu) U_nunu^2``.  Hinged:
    ``-(D/2) oint [1/2 (x.nu) V_nu dLapV/dnu + (1 - mu) f(kappa) V_nu^2]``.
    Supported: ``-(D/8) oint (x.nu)(c0 W_nu)^2 -/+ (D/4) oint (x.nu)(dc0/dnu) W_nu^2
    + (D/2) oint c0 W_nu^2 - (D/2)(1 - mu) oint f(kappa) W_nu^2``, where the
    middle sign follows ``sign_variant`` of the supported Rellich identity
    (``"-"`` is the closed-form energy).  Every combination of variants
    is kept in ``alternatives``; supported edges also get ``general``, which
    uses the general Rellich representation of ``gamma int W^2``.
    """
    if pair.bc.kind == "supported" and not math.isclose(pair.bc.mu, material.mu, abs_tol=1e-12):
        raise ValueError(f"material ratio {material.mu} differs from the edge ratio {pair.bc.mu}")
    D = flexural_rigidity(material)
    mu = material.mu
    E_vol = strain_energy_volume(pair, material)
    ints = hessian_integrals(pair)
    cross = D * (1 - mu) * ints["det"]
    kind = pair.bc.kind
    xn, unu = trace.support, trace.u_nu
    alts = {}
    if kind == "dirichlet":
        primary = "clamped"
        alts[primary] = D / 8 * trace.integrate(xn * trace.u_nunu**2)
    elif kind == "navier":
        lead = trace.integrate(0.5 * xn * unu * trace.laplacian_nu)
        for v in BIRMAN_VARIANTS:
            f = _curvature_factor(trace, v)
            alts[v] = -D / 2 * (lead + (1 - mu) * trace.integrate(f * unu**2))
        primary = birman_variant
    else:
        from .geometry import extend_c0

        c0 = extend_c0(trace.boundary.domain, pair.bc.mu, boundary=trace.boundary)
        t1 = -D / 8 * trace.integrate(xn * (c0.values * unu) ** 2)
        t2 = D / 4 * trace.integrate(xn * c0.normal_derivative * unu**2)
        t3 = D / 2 * trace.integrate(c0.values * unu**2)
        general = D / 2 * general_rellich_rhs(trace) * trace.norm_squared
        for v in BIRMAN_VARIANTS:
            t4 = -D / 2 * (1 - mu) * trace.integrate(_curvature_factor(trace, v) * unu**2)
            alts[f"+,{v}"] = t1 + t2 + t3 + t4
            alts[f"-,{v}"] = t1 - t2 + t3 + t4
            alts[f"general,{v}"] = general + t3 + t4
        primary = f"{sign_variant},{birman_variant}"
    if primary not in alts:
        raise ValueError(f"unknown variant {primary!r}")
    return EnergyReport(bc=pair.bc.label(), material=material, E_volume=E_vol, E_boundary=alts[primary],
                        variant=primary, cross_term=cross, alternatives=alts)


# -- Poisson-ratio sweep --------------------------------------------------

OVERLAP_MIN = 0.99
MAX_HALVINGS = 4
FORMULA_POINTS = (0.2, 0.3, 0.5)
FORMULA_TOL = 0.02


@dataclass
class SweepResult:
    """Tracked supported eigenvalues over a grid of Poisson ratios.

    ``gamma[i, k]`` is the value of tracked group ``k`` at ``mu_grid[i]``;
    ``dgamma_fd`` holds central differences on the grid (NaN at the ends)
    and ``dgamma_formula`` the boundary formula ``oint kappa W_nu^2 / int W^2``.
    """

    domain: str
    resolution: str
    mu_grid: np.ndarray
    gamma: np.ndarray
    dgamma_fd: np.ndarray
    dgamma_formula: np.ndarray
    omega: np.ndarray
    rigidity: np.ndarray
    multiplicity: list
    overlaps: np.ndarray
    navier_limit: np.ndarray
    material: Material
    halvings: int = 0
    margin_tol: float = 10 * SOLVER_TOL

    @property
    def n_modes(self) -> int:
        return self.gamma.shape[1]

    def strictly_increasing(self) -> list:
        """Per mode: every step rises by more than ``margin_tol`` (relative)."""
        d = np.diff(self.gamma, axis=0)
        return [bool(np.all(d[:, k] > self.margin_tol * np.abs(self.gamma[1:, k]))) for k in range(self.n_modes)]

    def min_margin(self) -> list:
        d = np.diff(self.gamma, axis=0) / np.abs(self.gamma[1:])
        return [float(np.min(d[:, k])) for k in range(self.n_modes)]

    def omega_increasing(self) -> list:
        d = np.diff(self.omega, axis=0)
        return [bool(np.all(d[:, k] > 0)) for k in range(self.n_modes)]

    def below_navier(self) -> list:
        """Per mode: ``gamma < lambda`` everywhere and the gap shrinks as ``mu`` grows."""
        gap = self.navier_limit[None, :] - self.gamma
        return [bool(np.all(gap[:, k] > 0) and np.all(np.diff(gap[:, k]) < 0)) for k in range(self.n_modes)]

    def formula_gap(self, mu: float, mode: int = 0) -> float:
        i = int(np.argmin(np.abs(self.mu_grid - mu)))
        if not math.isclose(self.mu_grid[i], mu, abs_tol=1e-9):
            raise ValueError(f"mu = {mu} is not on the sweep grid")
        return relative_residual(self.dgamma_fd[i, mode], self.dgamma_formula[i, mode])

    def verdicts(self) -> dict:
        interior = [i for i in range(1, len(self.mu_grid) - 1)]
        gaps = [relative_residual(self.dgamma_fd[i, k], self.dgamma_formula[i, k])
                for i in interior for k in range(self.n_modes)]
        return {
            "strictly_increasing": self.strictly_increasing(),
            "omega_increasing": self.omega_increasing(),
            "below_navier": self.below_navier(),
            "tracking_overlap_min": float(np.min(self.overlaps)) if self.overlaps.size else 1.0,
            "max_formula_gap": float(max(gaps)) if gaps else 0.0,
            "formula_gaps": self.checkpoint_gaps(),
        }

    def checkpoint_gaps(self) -> dict:
        """Formula gaps at the checkpoint ratios that lie inside the grid (worst over modes)."""
        out = {}
        for mu in FORMULA_POINTS:
            i = int(np.argmin(np.abs(self.mu_grid - mu)))
            if math.isclose(self.mu_grid[i], mu, abs_tol=1e-9) and 0 < i < len(self.mu_grid) - 1:
                out[f"{mu:g}"] = max(self.formula_gap(mu, k) for k in range(self.n_modes))
        return out

    def passed(self) -> bool:
        v = self.verdicts()
        return (all(v["strictly_increasing"]) and all(v["omega_increasing"]) and all(v["below_navier"])
                and v["tracking_overlap_min"] >= OVERLAP_MIN
                and all(g <= FORMULA_TOL for g in v["formula_gaps"].values()))

    def rows(self) -> list:
        out = []
        for i, mu in enumerate(self.mu_grid):
            for k in range(self.n_modes):
                out.append({"mu": float(mu), "mode": k + 1, "multiplicity": self.multiplicity[k],
                            "gamma": self.gamma[i, k], "dgamma_fd": self.dgamma_fd[i, k],
                            "dgamma_formula": self.dgamma_formula[i, k], "omega": self.omega[i, k],
                            "D": self.rigidity[i], "overlap": self.overlaps[i, k],
                            "navier": self.navier_limit[k]})
        return out

    def to_csv(self, handle=None) -> str:
        return write_csv(self.rows(), SWEEP_COLUMNS, handle)

    def to_dict(self) -> dict:
        return {"domain": self.domain, "resolution": self.resolution, "material": asdict(self.material),
                "mu_grid": self.mu_grid, "halvings": self.halvings, "verdicts": self.verdicts(),
                "min_margin": self.min_margin(), "passed": self.passed(), "rows": self.rows()}


SWEEP_COLUMNS = ("mu", "mode", "multiplicity", "gamma", "dgamma_fd", "dgamma_formula", "omega", "D",
                 "overlap", "navier")


def _groups(pairs):
    groups = {}
    for p in pairs:
        groups.setdefault(p.multiplicity_group, []).append(p)
    return [groups[g] for g in sorted(groups)]


def _solve_groups(domain, bc, resolution, n_groups):
    """Lowest ``n_groups`` complete multiplicity groups (a group cut by ``k`` is dropped)."""
    k = min(20, 2 * n_groups + 2)
    pairs = solve_lowest(assemble(domain, bc, resolution), k)
    groups = _groups(pairs)
    if len(groups) <= n_groups and len(pairs) == k:
        groups = groups[:-1]
    if len(groups) < n_groups:
        raise SolverError(f"only {len(groups)} complete groups among {k} pairs")
    return pairs, groups[: n_groups + 1] if len(groups) > n_groups else groups


def _formula(pairs) -> float:
    """``oint kappa W_nu^2 / int W^2`` averaged over a degenerate group."""
    vals = []
    for p in pairs:
        tr = extract_trace(p)
        vals.append(tr.integrate(tr.boundary.curvature * tr.u_nu**2) / tr.norm_squared)
    return float(np.mean(vals))


def _track(prev_groups, next_pairs, next_groups):
    """Map each previous group to a next group; returns (indices, overlaps, ambiguous)."""
    prev_flat = [p for g in prev_groups for p in g]
    pairing = match_modes(prev_flat, next_pairs)
    index_of = {}
    for gi, g in enumerate(next_groups):
        for p in g:
            index_of[p.index] = gi
    out, ov = [], []
    pos = 0
    for g in prev_groups:
        target = pairing.mapping[pos]
        out.append(index_of.get(target, -1))
        ov.append(pairing.overlaps[pos])
        pos += len(g)
    bad = pairing.ambiguous or min(ov) < OVERLAP_MIN or len(set(out)) < len(out) or -1 in out
    return out, ov, bad


def poisson_sweep(domain: DomainSpec, resolution: Resolution = None, mu_grid: Sequence[float] = None,
                  k: int = 2, material: Material = None, threads: int = 1) -> SweepResult:
    """Track the lowest ``k`` supported eigenvalue groups across ``mu_grid``.

    Groups are followed by subspace overlap between neighbouring ratios; when
    the pairing is ambiguous or the overlap drops below 0.99 the step is
    halved (up to four times) through intermediate ratios.  With
    ``threads > 1`` the grid ratios are solved concurrently up front.
    """
    mu_grid = np.asarray(DEFAULT_MU_GRID if mu_grid is None else mu_grid, dtype=float)
    if mu_grid.ndim != 1 or len(mu_grid) < 2 or np.any(np.diff(mu_grid) <= 0):
        raise ValueError("mu grid must be strictly increasing with at least 2 points")
    if mu_grid[0] <= 0 or mu_grid[-1] >= 1:
        raise ValueError("mu grid must lie inside (0, 1)")
    if not domain.smooth:
        raise BoundaryConditionError("the sweep needs a smooth convex domain")
    kappa = build_boundary(domain, 256).curvature
    if np.min(kappa) <= 0:
        raise BoundaryConditionError(f"the sweep needs kappa > 0 everywhere; min kappa = {np.min(kappa):.3g}")
    if material is None:
        material = Material(mu=float(mu_grid[0]))
    if resolution is None:
        from .discretize import default_resolution

        resolution = default_resolution(domain)

    cache = {}

    def solve(mu):
        key = float(mu)
        if key not in cache:
            cache[key] = _solve_groups(domain, BCKind.supported(key), resolution, k)
        return cache[key]

    if threads > 1:
        from .config import parallel_map

        solved = parallel_map(lambda m: _solve_groups(domain, BCKind.supported(float(m)), resolution, k),
                              mu_grid, threads)
        cache.update({float(m): r for m, r in zip(mu_grid, solved)})

    pairs, groups = solve(mu_grid[0])
    tracked = groups[:k]
    gamma = np.zeros((len(mu_grid), k))
    formula = np.zeros((len(mu_grid), k))
    overlaps = np.ones((len(mu_grid), k))
    multiplicity = [len(g) for g in tracked]
    halvings = 0

    def record(i, grp):
        for j, g in enumerate(grp):
            gamma[i, j] = np.mean([p.value for p in g])
            formula[i, j] = _formula(g)

    record(0, tracked)
    for i in range(1, len(mu_grid)):
        mus = [mu_grid[i]]
        current = tracked
        last_mu = mu_grid[i - 1]
        depth = 0
        while mus:
            target = mus[0]
            nxt_pairs, nxt_groups = solve(target)
            idx, ov, bad = _track(current, nxt_pairs, nxt_groups)
            if bad and depth < MAX_HALVINGS:
                mus.insert(0, 0.5 * (last_mu + target))
                depth += 1
                halvings += 1
                log.info("mode tracking ambiguous at mu=%.6g; halving the step", target)
                continue
            if bad:
                raise SolverError(f"mode tracking failed near mu = {target:.6g} after {MAX_HALVINGS} halvings")
            current = [nxt_groups[j] for j in idx]
            last_mu = target
            mus.pop(0)
            if not mus:
                overlaps[i] = ov
        tracked = current
        if [len(g) for g in tracked] != multiplicity:
            log.warning("multiplicity changed at mu=%.6g: %s", mu_grid[i], [len(g) for g in tracked])
        record(i, tracked)

    dgamma_fd = np.full_like(gamma, np.nan)
    dgamma_fd[1:-1] = (gamma[2:] - gamma[:-2]) / (mu_grid[2:, None] - mu_grid[:-2, None])
    rig = np.array([flexural_rigidity(material.with_mu(float(m))) for m in mu_grid])
    omega = np.sqrt(gamma * rig[:, None] / material.mass_per_area)
    nav_pairs = solve_lowest(assemble(domain, BCKind.navier(), resolution), min(20, 2 * k + 2))
    nav = np.array([np.mean([p.value for p in g]) for g in _groups(nav_pairs)[:k]])
    return SweepResult(domain=domain.label(), resolution=resolution.label(), mu_grid=mu_grid, gamma=gamma,
                       dgamma_fd=dgamma_fd, dgamma_formula=formula, omega=omega, rigidity=rig,
                       multiplicity=multiplicity, overlaps=overlaps, navier_limit=nav, material=material,
                       halvings=halvings)


def formula_check(domain: DomainSpec, mu: float, resolution: Resolution = None, delta: float = 1e-3,
                  mode: int = 0) -> dict:
    """Central difference of ``gamma`` with a small step against the boundary formula."""
    if resolution is None:
        from .discretize import default_resolution

        resolution = default_resolution(domain)
    vals = []
    for m in (mu - delta, mu + delta):
        pairs, groups = _solve_groups(domain, BCKind.supported(m), resolution, mode + 1)
        vals.append(np.mean([p.value for p in groups[mode]]))
    _, groups = _solve_groups(domain, BCKind.supported(mu), resolution, mode + 1)
    fd = (vals[1] - vals[0]) / (2 * delta)
    f = _formula(groups[mode])
    return {"mu": mu, "fd": fd, "formula": f, "rel_gap": relative_residual(fd, f)}


def interior_comparison(domain: DomainSpec, mu: float, resolution: Resolution = None,
                        fractions: Sequence[float] = (0.25, 0.5, 0.75, 1.0)) -> list:
    """Clamped against supported fundamental modes on inner regions ``s <= f``.

    Each mode is renormalized to unit mass on the region and signed to
    agree; the row holds the relative L2 distance.  This is a qualitative
    diagnostic: no threshold is asserted.
    """
    if not domain.smooth:
        raise BoundaryConditionError("the comparison uses the boundary-fitted polar grid")
    clamped = solve_lowest(assemble(domain, BCKind.dirichlet(), resolution), 1)[0]
    supported = solve_lowest(assemble(domain, BCKind.supported(mu), resolution), 1)[0]
    grid = clamped.grid
    w = grid.weights()
    rows = []
    for f in fractions:
        if not 0 < f <= 1:
            raise ValueError(f"region fraction must lie in (0, 1], got {f}")
        mask = (grid.s <= f + 1e-12)[:, None] * np.ones(grid.shape)
        u, v = clamped.field * mask, supported.field * mask
        nu, nv = math.sqrt(np.sum(w * u * u)), math.sqrt(np.sum(w * v * v))
        cos = float(np.sum(w * u * v) / (nu * nv))
        dist = math.sqrt(max(0.0, 2.0 - 2.0 * abs(cos)))
        rows.append({"fraction": float(f), "overlap": abs(cos), "rel_l2_distance": dist,
                     "clamped": clamped.value, "supported": supported.value})
    return rows
