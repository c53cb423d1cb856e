"""Batch command line for the plate eigenvalue lab.

Usage::

    biplate solve --domain disk:1 --bc navier --modes 4
    biplate verify --id rellich.dirichlet --domain disk:1
    biplate verify --id rellich.supported --both-signs
    biplate verify --id appendix.G --field poly:x3y --domain ellipse:2,1
    biplate sweep --domain ellipse:1.5,1 --modes 2
    biplate energy --domain disk:1 --bc supported --mu 0.3
    biplate oracle --domain disk:1 --bc dirichlet --count 6
    biplate study --domain disk:1 --bc dirichlet --doublings 3

Every command takes ``--config FILE`` (flat ``key = value``); explicit flags
override the file.  With ``--out DIR`` a command writes ``<command>.csv`` and
``<command>.json``; otherwise the CSV table goes to stdout.  Exit status is
0 when every verdict passes, 2 when a verdict fails and 1 on errors.  The
``BIPLATE_THREADS`` environment variable sets the worker count for
independent solves.
"""

from __future__ import annotations

import logging
import math
import sys
from pathlib import Path

import click
import numpy as np

from . import identities as ids
from .config import RunConfig, load_config, parallel_map, thread_count
from .discretize import BCKind, assemble
from .eigensolve import solve_lowest
from .elasticity import (
    Material,
    adjudicate_birman,
    energies_to_csv,
    natural_frequency,
    poisson_sweep,
    strain_energy_boundary,
)
from .errors import BiplateError
from .geometry import DomainSpec
from .oracles import disk_spectrum, rectangle_navier_spectrum
from .reports import dump_json, write_csv
from .traces import extract_trace, verify_bc_residual

log = logging.getLogger("biplate")

EXIT_OK, EXIT_ERROR, EXIT_VERDICT = 0, 1, 2
ENERGY_TOL = {"dirichlet": 0.01, "navier": 0.01, "supported": 0.02}
CROSS_TERM_TOL = 1e-3


class VerdictFailure(Exception):
    """Raised after outputs are written when some verdict failed."""


def _config(ctx_config, **flags) -> RunConfig:
    base = load_config(ctx_config) if ctx_config else RunConfig()
    cfg = base.merged(**flags).validate()
    env = thread_count(default=0)
    if env:
        from dataclasses import replace

        cfg = replace(cfg, threads=env)
    return cfg


def _emit(command: str, cfg: RunConfig, csv_text: str, payload: dict, out: str = None):
    out = out or cfg.output
    payload = {"command": command, "config": cfg.as_dict(), **payload}
    if out:
        path = Path(out)
        path.mkdir(parents=True, exist_ok=True)
        (path / f"{command}.csv").write_text(csv_text, encoding="utf-8")
        (path / f"{command}.json").write_text(dump_json(payload) + "\n", encoding="utf-8")
        click.echo(f"wrote {path / (command + '.csv')} and {path / (command + '.json')}", err=True)
    else:
        click.echo(csv_text, nl=False)


def _finish(passed: bool, summary: str):
    click.echo(("PASS " if passed else "FAIL ") + summary, err=True)
    if not passed:
        raise VerdictFailure(summary)


def _oracle_values(domain: DomainSpec, bc: BCKind, count: int):
    """Oracle eigenvalues (ascending, doublets repeated) or ``None`` when no oracle exists."""
    if domain.kind == "disk":
        rows = disk_spectrum(bc.kind, R=domain.params[0], mu=bc.mu, count=count)
        return [r[0] for r in rows]
    if domain.kind == "rectangle" and bc.kind == "navier":
        return [r[0] for r in rectangle_navier_spectrum(*domain.params, count=count)]
    return None


common_options = [
    click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                 help="Flat key = value run configuration."),
    click.option("--domain", help="disk:R, ellipse:a,b, star:c0,a1,b1,... or rect:a,b."),
    click.option("--resolution", help="Grid as NxM (radial x angular, or nx x ny) or a refinement factor like 2x."),
    click.option("--out", "out", type=click.Path(file_okay=False), help="Directory for CSV and JSON reports."),
]


def with_options(options):
    def deco(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn
    return deco


def _run(fn):
    """Map outcomes onto exit codes."""
    try:
        fn()
    except VerdictFailure:
        sys.exit(EXIT_VERDICT)
    except (BiplateError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(EXIT_ERROR)
    sys.exit(EXIT_OK)


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="Log progress to stderr.")
def cli(verbose):
    """Eigenvalues, boundary identities and strain energies of vibrating thin plates."""
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")


# -- solve ----------------------------------------------------------------

SOLVE_COLUMNS = ("index", "group", "mode_m", "mode_parity", "value", "oracle", "oracle_rel_delta",
                 "residual", "bc_residual", "rayleigh")


@cli.command()
@with_options(common_options)
@click.option("--bc", help="dirichlet | navier | supported[:mu] (aliases clamped, hinged).")
@click.option("--mu", type=float, help="Poisson ratio for supported edges.")
@click.option("--modes", type=int, help="Number of eigenpairs (1..20).")
@click.option("--method", type=click.Choice(["auto", "modal", "2d"]), help="Disk solver path.")
def solve(config_path, domain, resolution, out, bc, mu, modes, method):
    """Lowest eigenpairs with residuals and oracle deltas."""
    def body():
        from .eigensolve import rayleigh_clamped_hinged, rayleigh_supported

        cfg = _config(config_path, domain=domain, resolution=resolution, bc=bc, mu=mu, modes=modes,
                      method=method, output=out)
        dom, bck, res = cfg.domain_spec, cfg.bc_kind, cfg.resolution_spec
        op = assemble(dom, bck, res, method=cfg.method)
        pairs = solve_lowest(op, cfg.modes, tol=cfg.tolerance)
        oracle = _oracle_values(dom, bck, cfg.modes)
        rows, ok = [], True
        for p in pairs:
            tr = extract_trace(p, stencil_order=cfg.stencil_order)
            bcr = verify_bc_residual(tr, bck)
            ray = rayleigh_supported(p) if bck.kind == "supported" else rayleigh_clamped_hinged(p)
            row = {"index": p.index + 1, "group": p.multiplicity_group + 1, "value": p.value,
                   "residual": p.residual, "bc_residual": bcr.worst, "rayleigh": ray,
                   "mode_m": p.mode[0] if p.mode else None, "mode_parity": p.mode[1] if p.mode else None}
            if oracle is not None:
                row["oracle"] = oracle[p.index]
                row["oracle_rel_delta"] = abs(p.value - oracle[p.index]) / oracle[p.index]
            ok &= bcr.passed and p.value > 0
            rows.append(row)
        _emit("solve", cfg, write_csv(rows, SOLVE_COLUMNS),
              {"resolution": res.label(), "eigenpairs": rows, "passed": ok}, out)
        _finish(ok, f"solve {dom.label()} {bck.label()} {res.label()}: lambda_1 = {pairs[0].value:.10g}")
    _run(body)


# -- verify ---------------------------------------------------------------

VERIFY_COLUMNS = ("identity_id", "variant", "domain", "bc", "resolution", "h", "lhs", "rhs",
                  "abs_residual", "rel_residual", "convergence_slope", "verdict", "adjudication", "note")


def _default_bc(identity_id: str, given: str, mu):
    expected = ids.IDENTITY_BC.get(identity_id)
    if given:
        return BCKind.parse(given, mu=mu)
    if expected == "supported":
        return BCKind.supported(0.3 if mu is None else mu)
    return BCKind.parse(expected or "navier", mu=mu)


@cli.command()
@with_options(common_options)
@click.option("--id", "identity", multiple=True,
              help="Identity id (repeatable): green, rellich.dirichlet, rellich.navier, rellich.supported, "
                   "rellich.general, appendix.G.")
@click.option("--bc", help="Edge condition; defaults to the one the identity needs.")
@click.option("--mu", type=float, help="Poisson ratio for supported edges.")
@click.option("--doublings", type=int, help="Number of refinements after the base resolution (>= 2).")
@click.option("--both-signs", is_flag=True, help="Evaluate both sign variants of rellich.supported and adjudicate.")
@click.option("--field", "field_", help="Manufactured field for appendix.G, e.g. poly:x3y.")
def verify(config_path, domain, resolution, out, identity, bc, mu, doublings, both_signs, field_):
    """Evaluate boundary identities over a refinement sequence."""
    def body():
        cfg = _config(config_path, domain=domain, resolution=resolution, output=out, identities=tuple(identity),
                      mu=mu, doublings=doublings, field=field_,
                      sign_variant="both" if both_signs else None)
        dom = cfg.domain_spec
        base = cfg.resolution_spec
        resolutions = [base.doubled(i) for i in range(cfg.doublings + 1)]
        rows, ok = [], True
        selected = cfg.identities or ("rellich.dirichlet",)
        for iid in selected:
            if iid == "appendix.G":
                for rep in ids.appendix_normal_identity(cfg.field, dom):
                    gap = rep.details["max_abs_gap"]
                    good = gap <= 1e-10
                    ok &= good
                    rows.append({**rep.row(), "domain": dom.label(), "bc": "", "abs_residual": gap,
                                 "verdict": "pass" if good else "fail", "note": cfg.field})
                continue
            if iid not in ids.IDENTITY_IDS:
                rows.append({"identity_id": iid, "verdict": "skip", "note": "unknown identity id"})
                continue
            bck = _default_bc(iid, bc or (None if iid in ids.IDENTITY_BC else cfg.bc), cfg.mu)
            expected = ids.IDENTITY_BC.get(iid)
            if expected and bck.kind != expected:
                rows.append({"identity_id": iid, "domain": dom.label(), "bc": bck.label(), "verdict": "skip",
                             "note": f"needs {expected} edges"})
                continue
            if iid == "rellich.supported":
                variants = ("+", "-", "general") if cfg.sign_variant == "both" else (cfg.sign_variant,)
            elif iid == "rellich.navier":
                variants = ("x.grad", "support")
            else:
                variants = (None,)
            try:
                pairs = parallel_map(lambda r: solve_lowest(assemble(dom, bck, r), 1, tol=cfg.tolerance)[0],
                                     resolutions, cfg.threads)
            except BiplateError as exc:
                rows.append({"identity_id": iid, "domain": dom.label(), "bc": bck.label(), "verdict": "skip",
                             "note": str(exc)})
                continue
            traces = [extract_trace(p, stencil_order=cfg.stencil_order) for p in pairs]
            studies = {}
            for v in variants:
                reps = [ids.evaluate(iid, p, t, v) for p, t in zip(pairs, traces)]
                studies[v] = ids.study_from_reports(reps, [t.h for t in traces])
            accepted = [v for v, s in studies.items()
                        if s.monotone and s.residuals[-1] <= cfg.identity_tolerance]
            signs = [v for v in accepted if v in ("+", "-")]
            adjudication = ""
            if iid == "rellich.supported" and len(variants) > 1:
                adjudication = signs[0] if len(signs) == 1 else ("none" if not signs else "ambiguous")
                ok &= len(signs) == 1
            for v, study in studies.items():
                good = v in accepted
                if iid != "rellich.supported" or len(variants) == 1:
                    ok &= good
                for rep in study.reports:
                    rows.append({**rep.row(), "domain": dom.label(), "bc": bck.label(),
                                 "verdict": "pass" if good else "fail", "adjudication": adjudication,
                                 "note": "" if study.monotone else "non-monotone residuals"})
        _emit("verify", cfg, write_csv(rows, VERIFY_COLUMNS), {"rows": rows, "passed": ok}, out)
        _finish(ok, f"verify {', '.join(selected)} on {dom.label()}")
    _run(body)


# -- sweep ----------------------------------------------------------------

@cli.command()
@with_options(common_options)
@click.option("--modes", type=int, help="Number of tracked eigenvalue groups.")
@click.option("--mu-grid", help="start:stop:count or comma list (default 0.05:0.95:19).")
@click.option("--E", "E", type=float, help="Young's modulus.")
@click.option("--thickness", type=float, help="Plate thickness.")
@click.option("--mass-per-area", type=float, help="Mass per unit area.")
def sweep(config_path, domain, resolution, out, modes, mu_grid, E, thickness, mass_per_area):
    """Track supported eigenvalues and frequencies across Poisson ratios."""
    def body():
        cfg = _config(config_path, domain=domain, resolution=resolution, output=out, modes=modes,
                      mu_grid=mu_grid, E=E, thickness=thickness, mass_per_area=mass_per_area)
        grid = cfg.mu_values
        material = Material(mu=grid[0], E=cfg.E, thickness=cfg.thickness, mass_per_area=cfg.mass_per_area)
        result = poisson_sweep(cfg.domain_spec, cfg.resolution_spec, grid, k=cfg.modes, material=material,
                               threads=cfg.threads)
        _emit("sweep", cfg, result.to_csv(), result.to_dict(), out)
        v = result.verdicts()
        _finish(result.passed(), f"sweep {cfg.domain_spec.label()}: increasing={v['strictly_increasing']} "
                                 f"max formula gap={v['max_formula_gap']:.3g}")
    _run(body)


# -- energy ---------------------------------------------------------------

@cli.command()
@with_options(common_options)
@click.option("--bc", help="dirichlet | navier | supported[:mu].")
@click.option("--mu", type=float, help="Poisson ratio (material and supported edge).")
@click.option("--birman", "birman_variant", type=click.Choice(["kappa", "1/kappa"]),
              help="Curvature factor in the Hessian boundary identity.")
@click.option("--E", "E", type=float, help="Young's modulus.")
@click.option("--thickness", type=float, help="Plate thickness.")
@click.option("--mass-per-area", type=float, help="Mass per unit area.")
def energy(config_path, domain, resolution, out, bc, mu, birman_variant, E, thickness, mass_per_area):
    """Volume strain energy against its boundary-integral forms."""
    def body():
        cfg = _config(config_path, domain=domain, resolution=resolution, output=out, bc=bc, mu=mu,
                      birman_variant=birman_variant, E=E, thickness=thickness, mass_per_area=mass_per_area)
        bck = cfg.bc_kind
        mu_val = bck.mu if bck.kind == "supported" else (cfg.mu if cfg.mu is not None else 0.3)
        material = Material(mu=mu_val, E=cfg.E, thickness=cfg.thickness, mass_per_area=cfg.mass_per_area)
        pair = solve_lowest(assemble(cfg.domain_spec, bck, cfg.resolution_spec), 1, tol=cfg.tolerance)[0]
        trace = extract_trace(pair, stencil_order=cfg.stencil_order)
        sign = "-" if bck.kind == "supported" else None
        report = strain_energy_boundary(pair, trace, material, birman_variant=cfg.birman_variant,
                                        **({"sign_variant": sign} if sign else {}))
        ok = report.rel_gap <= ENERGY_TOL[bck.kind]
        if bck.kind == "dirichlet":
            ok &= report.cross_term_fraction <= CROSS_TERM_TOL
        payload = {"energy": report.to_dict(), "omega": natural_frequency(pair.value, material),
                   "passed": ok}
        if cfg.domain_spec.smooth and bck.kind != "dirichlet":
            adj = adjudicate_birman(pair, trace)
            payload["birman"] = {"verdict": adj.verdict,
                                 "residuals": {k: r.rel_residual for k, r in adj.reports.items()}}
        _emit("energy", cfg, energies_to_csv([report]), payload, out)
        _finish(ok, f"energy {bck.label()}: volume {report.E_volume:.8g} boundary {report.E_boundary:.8g} "
                    f"gap {report.rel_gap:.3g}")
    _run(body)


# -- oracle ---------------------------------------------------------------

@cli.command()
@with_options(common_options)
@click.option("--bc", help="dirichlet | navier | supported[:mu].")
@click.option("--mu", type=float, help="Poisson ratio for supported edges.")
@click.option("--count", type=int, default=6, show_default=True, help="Number of oracle values.")
def oracle(config_path, domain, resolution, out, bc, mu, count):
    """Semi-analytic eigenvalues (Bessel roots on disks, separation on rectangles)."""
    def body():
        cfg = _config(config_path, domain=domain, output=out, bc=bc, mu=mu)
        dom, bck = cfg.domain_spec, cfg.bc_kind
        if dom.kind == "disk":
            rows = [{"index": i + 1, "value": v, "m": m, "n": n, "k": v**0.25 * dom.params[0]}
                    for i, (v, m, n) in enumerate(disk_spectrum(bck.kind, dom.params[0], bck.mu, count))]
        elif dom.kind == "rectangle" and bck.kind == "navier":
            rows = [{"index": i + 1, "value": v, "m": m, "n": n}
                    for i, (v, m, n) in enumerate(rectangle_navier_spectrum(*dom.params, count=count))]
        else:
            raise ValueError(f"no oracle for {dom.label()} with {bck.label()} edges")
        _emit("oracle", cfg, write_csv(rows, ("index", "value", "m", "n", "k")), {"rows": rows}, out)
        _finish(True, f"oracle {dom.label()} {bck.label()}: {rows[0]['value']:.12g}")
    _run(body)


# -- study ----------------------------------------------------------------

STUDY_COLUMNS = ("resolution", "h", "value", "reference", "rel_error", "observed_order")


@cli.command()
@with_options(common_options)
@click.option("--bc", help="dirichlet | navier | supported[:mu].")
@click.option("--mu", type=float, help="Poisson ratio for supported edges.")
@click.option("--doublings", type=int, help="Number of refinements after the base resolution (>= 2).")
def study(config_path, domain, resolution, out, bc, mu, doublings):
    """Eigenvalue convergence table under repeated doubling."""
    def body():
        cfg = _config(config_path, domain=domain, resolution=resolution, output=out, bc=bc, mu=mu,
                      doublings=doublings)
        dom, bck = cfg.domain_spec, cfg.bc_kind
        base = cfg.resolution_spec
        resolutions = [base.doubled(i) for i in range(cfg.doublings + 1)]
        pairs = parallel_map(lambda r: solve_lowest(assemble(dom, bck, r), 1, tol=cfg.tolerance)[0],
                             resolutions, cfg.threads)
        values = [p.value for p in pairs]
        hs = [getattr(p.grid, "h", None) or p.grid.hx for p in pairs]
        oracle = _oracle_values(dom, bck, 1)
        if oracle is not None:
            ref = oracle[0]
        else:
            # Richardson extrapolation of the two finest values (second order)
            ref = (4 * values[-1] - values[-2]) / 3
        errors = [abs(v - ref) / abs(ref) for v in values]
        rows = []
        for i, (r, h, v, e) in enumerate(zip(resolutions, hs, values, errors)):
            order = math.log(errors[i - 1] / e) / math.log(hs[i - 1] / h) if i and e > 0 and errors[i - 1] > 0 else None
            rows.append({"resolution": r.label(), "h": h, "value": v, "reference": ref,
                         "rel_error": e, "observed_order": order})
        orders = [r["observed_order"] for r in rows if r["observed_order"] is not None]
        ok = bool(orders) and min(orders) >= 1.5
        _emit("study", cfg, write_csv(rows, STUDY_COLUMNS),
              {"rows": rows, "reference_kind": "oracle" if oracle else "richardson", "passed": ok}, out)
        _finish(ok, f"study {dom.label()} {bck.label()}: observed orders {np.round(orders, 2).tolist()}")
    _run(body)


def main():  # pragma: no cover - console entry point
    cli()


if __name__ == "__main__":  # pragma: no cover
    main()
