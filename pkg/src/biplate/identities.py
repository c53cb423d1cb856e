"""Boundary-integral identities for the three plate problems.

Each evaluator compares an eigenvalue (or a volume integral) with its
boundary-integral representation built from a :class:`BoundaryTrace`, and
returns an :class:`IdentityReport`.  Identity ids are stable strings:

``green``
    ``alpha int u^2 = oint u d(Lap u)/dnu - oint u_nu Lap u + int (Lap u)^2``.
``rellich.dirichlet``
    ``Lambda = oint (x.nu) U_nunu^2 / (4 int U^2)``.
``rellich.navier``
    ``lambda = -oint (x.grad V) d(Lap V)/dnu / (2 int V^2)``.
``rellich.supported``
    ``gamma = [-oint (x.nu)(c0 W_nu)^2 +/- 2 oint (x.nu)(dc0/dnu) W_nu^2] / (4 int W^2)``
    in both sign variants, plus a ``general`` variant (see
    :func:`rellich_general`).
``appendix.G``
    ``nu^T Hess(u) nu = d2u/dnu2`` on the boundary, and ``G t = 0`` for the
    distance function.
"""

from __future__ import annotations

import logging
import math
import re
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .discretize import BCKind, Resolution, assemble
from .eigensolve import solve_lowest
from .errors import BoundaryConditionError
from .geometry import Boundary, C0Field, DomainSpec, build_boundary, extend_c0
from .reports import write_csv
from .traces import BoundaryTrace, extract_trace, sigma_field

log = logging.getLogger(__name__)

EPS = 1e-300
MARGIN_FLOOR = 0.01
RESIDUAL_FLOOR = 1e-7  # below this a residual is at round-off and refinement cannot lower it
IDENTITY_IDS = ("green", "rellich.dirichlet", "rellich.navier", "rellich.supported",
                "rellich.general", "appendix.G")
REPORT_COLUMNS = ("identity_id", "variant", "resolution", "h", "lhs", "rhs", "abs_residual",
                  "rel_residual", "convergence_slope", "provenance", "flags")


def relative_residual(lhs: float, rhs: float) -> float:
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), EPS)


@dataclass
class IdentityReport:
    """Both sides of one identity and their mismatch."""

    identity_id: str
    lhs: float
    rhs: float
    variant: str = ""
    resolution: str = ""
    h: Optional[float] = None
    convergence_slope: Optional[float] = None
    provenance: str = "discrete"
    flags: tuple = ()
    details: dict = field(default_factory=dict)

    @property
    def abs_residual(self) -> float:
        return abs(self.lhs - self.rhs)

    @property
    def rel_residual(self) -> float:
        return relative_residual(self.lhs, self.rhs)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["abs_residual"] = self.abs_residual
        out["rel_residual"] = self.rel_residual
        out["flags"] = ";".join(self.flags)
        return out

    def row(self) -> dict:
        return {k: v for k, v in self.to_dict().items() if k in REPORT_COLUMNS}


def reports_to_csv(reports, handle=None) -> str:
    return write_csv([r.row() for r in reports], REPORT_COLUMNS, handle)


# -- helpers --------------------------------------------------------------

def _norm_squared(trace: BoundaryTrace) -> float:
    n2 = float(trace.norm_squared)
    if not n2 > 0:
        raise ValueError("trace of a zero field")
    return n2


def _eigenvalue(pair, trace) -> float:
    return float(trace.eigenvalue if pair is None else pair.value)


def _common(trace, pair) -> dict:
    res = ""
    if pair is not None and hasattr(pair, "operator"):
        res = pair.operator.resolution.label()
    elif trace.provenance != "discrete":
        res = f"m{len(trace.boundary)}"
    return dict(resolution=res, h=trace.h, provenance=trace.provenance)


def laplacian_energy(source) -> float:
    """``int (Lap u)^2 dOmega`` for an eigenpair (grid quadrature) or an oracle mode (exact)."""
    from .oracles import DiskMode, RectangleMode

    if isinstance(source, RectangleMode):
        p, q = source.wavenumbers
        return (p * p + q * q) ** 2 * source.norm_squared()
    if isinstance(source, DiskMode):
        xg, wg = np.polynomial.legendre.leggauss(200)
        r = 0.5 * source.R * (xg + 1.0)
        w = 0.5 * source.R * wg
        ang = 2 * np.pi if source.m == 0 else np.pi
        return float(ang * np.sum(w * r * source.radial_laplacian(r) ** 2))
    return source.grid.integrate(sigma_field(source) ** 2)


# -- Green ----------------------------------------------------------------

def green_identity(pair, trace: BoundaryTrace) -> IdentityReport:
    """``alpha int u^2`` against the Green decomposition of ``int u Lap^2 u``.

    ``pair`` is an :class:`EigenPair` or an oracle mode (``DiskMode`` /
    ``RectangleMode``), which supplies the volume term in closed form.
    """
    alpha = float(pair.value) if hasattr(pair, "value") else float(trace.eigenvalue)
    lhs = alpha * _norm_squared(trace)
    b1 = trace.integrate(trace.u * trace.laplacian_nu)
    b2 = trace.integrate(trace.u_nu * trace.laplacian)
    vol = laplacian_energy(pair)
    info = _common(trace, pair if hasattr(pair, "operator") else None)
    return IdentityReport("green", lhs, b1 - b2 + vol, **info,
                          details={"boundary_u_dlap": b1, "boundary_unu_lap": b2, "volume": vol})


# -- Rellich --------------------------------------------------------------

def rellich_dirichlet(pair, trace: BoundaryTrace) -> IdentityReport:
    """Clamped-plate Rellich identity."""
    if trace.bc is not None and trace.bc.kind != "dirichlet":
        raise BoundaryConditionError("rellich.dirichlet needs a clamped eigenfunction")
    rhs = trace.integrate(trace.support * trace.u_nunu**2) / (4 * _norm_squared(trace))
    flags = ()
    if not rhs > 0:
        flags = ("trivial-trace",)
        log.warning("U_nunu vanishes on the boundary: the eigenfunction would be trivial")
    return IdentityReport("rellich.dirichlet", _eigenvalue(pair, trace), rhs, flags=flags,
                          **_common(trace, pair))


def rellich_navier(pair, trace: BoundaryTrace, form: str = "x.grad") -> IdentityReport:
    """Hinged-plate Rellich identity in the ``x.grad`` form or the ``support`` form.

    Both forms are always computed; ``details`` carries the other one.
    """
    if trace.bc is not None and trace.bc.kind != "navier":
        raise BoundaryConditionError("rellich.navier needs a hinged eigenfunction")
    n2 = _norm_squared(trace)
    forms = {
        "x.grad": -trace.integrate(trace.x_grad * trace.laplacian_nu) / (2 * n2),
        "support": -trace.integrate(trace.support * trace.u_nu * trace.laplacian_nu) / (2 * n2),
    }
    if form not in forms:
        raise ValueError(f"unknown form {form!r}; choose from {sorted(forms)}")
    return IdentityReport("rellich.navier", _eigenvalue(pair, trace), forms[form], variant=form,
                          details={"forms": forms, "form_gap": relative_residual(*forms.values())},
                          **_common(trace, pair))


def general_rellich_rhs(trace: BoundaryTrace) -> float:
    """Rellich representation valid for any edge condition with ``u = 0``.

    ``2 alpha int u^2 = -1/2 oint (x.nu)(Lap u)^2 - oint (x.nu) u_nu d(Lap u)/dnu
    + oint (x.nu) u_nunu Lap u + oint (x.tau) (d u_nu/ds) Lap u``.
    """
    xn, xt = trace.support, trace.tangential_support
    lap = trace.laplacian
    total = (-0.5 * trace.integrate(xn * lap**2)
             - trace.integrate(xn * trace.u_nu * trace.laplacian_nu)
             + trace.integrate(xn * trace.u_nunu * lap)
             + trace.integrate(xt * trace.u_nu_s * lap))
    return total / (2 * _norm_squared(trace))


def rellich_general(pair, trace: BoundaryTrace) -> IdentityReport:
    return IdentityReport("rellich.general", _eigenvalue(pair, trace), general_rellich_rhs(trace),
                          variant=trace.bc.label() if trace.bc is not None else "",
                          **_common(trace, pair))


def _c0_field(trace: BoundaryTrace, mu: float, c0: Optional[C0Field]) -> C0Field:
    if c0 is not None:
        if len(c0.values) != len(trace.boundary):
            raise ValueError("c0 field and trace have different node counts")
        return c0
    if trace.boundary.curvature is None:
        raise BoundaryConditionError("rellich.supported needs curvature and dc0/dnu; rectangles are excluded")
    return extend_c0(trace.boundary.domain, mu, boundary=trace.boundary)


def rellich_supported(pair, trace: BoundaryTrace, c0: Optional[C0Field] = None,
                      sign_variant: str = "+", mu: float = None) -> IdentityReport:
    """Supported-plate Rellich identity.

    ``sign_variant`` is ``"+"`` or ``"-"`` (the sign of the ``dc0/dnu``
    term) or ``"general"``, which uses :func:`general_rellich_rhs` with
    ``Lap W = c0 W_nu`` already built into the trace.
    """
    bc = trace.bc
    if mu is None:
        if bc is None or bc.kind != "supported":
            raise BoundaryConditionError("rellich.supported needs a supported eigenfunction (or explicit mu)")
        mu = bc.mu
    field_c0 = _c0_field(trace, mu, c0)
    info = _common(trace, pair)
    flags = ()
    if np.max(np.abs(field_c0.values)) < 1e-3 * np.max(np.abs(trace.boundary.curvature)):
        flags = ("singular-limit",)
    if sign_variant == "general":
        return IdentityReport("rellich.supported", _eigenvalue(pair, trace), general_rellich_rhs(trace),
                              variant="general", flags=flags, **info)
    if sign_variant not in ("+", "-"):
        raise ValueError("sign_variant must be '+', '-' or 'general'")
    sign = 1.0 if sign_variant == "+" else -1.0
    xn, wnu = trace.support, trace.u_nu
    t1 = -trace.integrate(xn * (field_c0.values * wnu) ** 2)
    t2 = 2 * trace.integrate(xn * field_c0.normal_derivative * wnu**2)
    rhs = (t1 + sign * t2) / (4 * _norm_squared(trace))
    return IdentityReport("rellich.supported", _eigenvalue(pair, trace), rhs, variant=sign_variant,
                          flags=flags, details={"c0_term": t1, "dc0_term": t2,
                                                "extension": field_c0.extension}, **info)


def rellich_supported_both(pair, trace, c0=None, mu=None, include_general=True) -> list:
    variants = ["+", "-"] + (["general"] if include_general else [])
    return [rellich_supported(pair, trace, c0=c0, sign_variant=v, mu=mu) for v in variants]


# -- uniqueness margins ---------------------------------------------------

@dataclass(frozen=True)
class MarginReport:
    """Max-norm of the boundary quantity whose vanishing would force ``u = 0``."""

    bc: str
    quantity: str
    value: float
    floor: float
    alternatives: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.value > self.floor


def uniqueness_margin(trace: BoundaryTrace, bc: BCKind, floor: float = MARGIN_FLOOR) -> MarginReport:
    """Normalized boundary margin (the trace is rescaled to ``int u^2 = 1``)."""
    scale = 1.0 / math.sqrt(_norm_squared(trace))
    if bc.kind == "dirichlet":
        alts = {"U_nunu": float(np.max(np.abs(trace.u_nunu))) * scale}
    elif bc.kind == "navier":
        alts = {"dLapV_dnu": float(np.max(np.abs(trace.laplacian_nu))) * scale,
                "support_V_nu": float(np.max(np.abs(trace.support * trace.u_nu))) * scale}
    else:
        alts = {"W_nu": float(np.max(np.abs(trace.u_nu))) * scale}
    name = min(alts, key=alts.get)
    report = MarginReport(bc=bc.label(), quantity=name, value=alts[name], floor=floor, alternatives=alts)
    if not report.passed:
        log.warning("uniqueness margin %s = %.3e below floor %.3g: probable discretization failure",
                    name, report.value, floor)
    return report


def cross_condition_margin(trace: BoundaryTrace, other: BCKind, floor: float = MARGIN_FLOOR) -> MarginReport:
    """How far an eigenfunction of one problem is from meeting the edge rows of ``other``.

    Feeding a clamped mode to the hinged rows measures ``max |Lap U|`` on the
    boundary, which must stay away from zero.
    """
    scale = 1.0 / math.sqrt(_norm_squared(trace))
    if other.kind == "navier":
        alts = {"laplacian": float(np.max(np.abs(trace.laplacian))) * scale}
    elif other.kind == "dirichlet":
        alts = {"u_nu": float(np.max(np.abs(trace.u_nu))) * scale}
    else:
        c0 = (1.0 - other.mu) * trace.boundary.require_curvature()
        alts = {"laplacian_minus_c0_u_nu": float(np.max(np.abs(trace.laplacian - c0 * trace.u_nu))) * scale}
    name = next(iter(alts))
    return MarginReport(bc=other.label(), quantity=name, value=alts[name], floor=floor, alternatives=alts)


# -- appendix identity ----------------------------------------------------

_MONOMIAL = re.compile(r"^\s*([-+]?\d*\.?\d*(?:e[-+]?\d+)?)\*?(x\d*)?(y\d*)?\s*$")


@dataclass(frozen=True)
class PolynomialField:
    """``sum c_ij x^i y^j`` with exact derivatives and exact line restrictions."""

    coefficients: np.ndarray  # c[i, j]
    label: str = ""

    @classmethod
    def parse(cls, text: str) -> "PolynomialField":
        """Parse ``poly:x3y``, ``poly:x2+y2``, ``poly:2*x3y-0.5*y4``."""
        body = text.split(":", 1)[1] if text.startswith("poly:") else text
        # a sign right after an exponent marker belongs to the number, not a new term
        terms = re.findall(r"[-+]?(?:(?<=\de)[-+]|[^-+])+", body.replace(" ", "").lower())
        if not terms:
            raise ValueError(f"empty polynomial {text!r}")
        parsed = []
        for term in terms:
            m = _MONOMIAL.match(term)
            if not m or not (m.group(1) or m.group(2) or m.group(3)):
                raise ValueError(f"cannot parse monomial {term!r} in {text!r}")
            c = m.group(1)
            coef = float(c + "1") if c in ("", "+", "-") else float(c)
            px = 0 if not m.group(2) else int(m.group(2)[1:] or 1)
            py = 0 if not m.group(3) else int(m.group(3)[1:] or 1)
            parsed.append((coef, px, py))
        deg = max(max(p, q) for _, p, q in parsed)
        C = np.zeros((deg + 1, deg + 1))
        for coef, p, q in parsed:
            C[p, q] += coef
        return cls(C, label=text)

    def __call__(self, x, y):
        return np.polynomial.polynomial.polyval2d(x, y, self.coefficients)

    def hessian(self, x, y):
        P = np.polynomial.polynomial
        C = self.coefficients
        hxx = P.polyval2d(x, y, P.polyder(C, 2, axis=0))
        hyy = P.polyval2d(x, y, P.polyder(C, 2, axis=1))
        hxy = P.polyval2d(x, y, P.polyder(P.polyder(C, 1, axis=0), 1, axis=1))
        return hxx, hxy, hyy

    def normal_second_derivative(self, point, normal) -> float:
        """``d2/dt2 u(point + t normal)`` at ``t = 0`` from the exact 1D restriction."""
        P = np.polynomial.polynomial
        lx = np.array([point[0], normal[0]])
        ly = np.array([point[1], normal[1]])
        g = np.zeros(1)
        C = self.coefficients
        for i in range(C.shape[0]):
            for j in range(C.shape[1]):
                if C[i, j]:
                    g = P.polyadd(g, C[i, j] * P.polymul(P.polypow(lx, i), P.polypow(ly, j)))
        return 2.0 * g[2] if len(g) > 2 else 0.0


def distance_hessian(boundary: Boundary):
    """Hessian of the inward distance ``t`` on the boundary: ``-kappa tau tau^T``.

    For a disk this is the Hessian of ``R - r`` evaluated at ``r = R``.
    """
    kappa = boundary.require_curvature()
    tx, ty = -boundary.normals[:, 1], boundary.normals[:, 0]
    return -kappa * tx * tx, -kappa * tx * ty, -kappa * ty * ty


def _disk_distance_hessian(points):
    x, y = points[:, 0], points[:, 1]
    r3 = np.hypot(x, y) ** 3
    # t = R - r
    return -y * y / r3, x * y / r3, -x * x / r3


def _g_operator(boundary, hxx, hxy, hyy):
    nx, ny = boundary.normals[:, 0], boundary.normals[:, 1]
    return nx * nx * hxx + 2 * nx * ny * hxy + ny * ny * hyy


def appendix_normal_identity(field_, domain: DomainSpec, m: int = 256) -> list:
    """Check ``G u = d2u/dnu2`` for a manufactured field and ``G t = 0``.

    ``G u`` uses the Cartesian Hessian; ``d2u/dnu2`` comes from the exact
    restriction of the polynomial to the normal line.  Returns two
    reports: ``variant="Gu"`` and ``variant="Gt"``.  Each stores the
    values at the worst node, so ``abs_residual`` is the max-norm gap.
    """
    if isinstance(field_, str):
        field_ = PolynomialField.parse(field_)
    if not domain.smooth:
        raise BoundaryConditionError("the appendix identity needs a smooth boundary")
    boundary = build_boundary(domain, m)
    pts, nrm = boundary.points, boundary.normals
    G = _g_operator(boundary, *field_.hessian(pts[:, 0], pts[:, 1]))
    unn = np.array([field_.normal_second_derivative(p, n) for p, n in zip(pts, nrm)])
    i = int(np.argmax(np.abs(G - unn)))
    scale = float(np.max(np.abs(unn)))
    rep_u = IdentityReport("appendix.G", float(G[i]), float(unn[i]), variant="Gu", resolution=f"m{m}",
                           provenance="analytic", details={"max_abs_gap": float(np.max(np.abs(G - unn))),
                                                           "scale": scale, "field": field_.label})
    if domain.kind == "disk":
        ht = _disk_distance_hessian(pts)
    else:
        ht = distance_hessian(boundary)
    Gt = _g_operator(boundary, *ht)
    j = int(np.argmax(np.abs(Gt)))
    rep_t = IdentityReport("appendix.G", float(Gt[j]), 0.0, variant="Gt", resolution=f"m{m}",
                           provenance="analytic", details={"max_abs_gap": float(np.max(np.abs(Gt)))})
    return [rep_u, rep_t]


# -- convergence studies --------------------------------------------------

EVALUATORS: dict = {
    "green": green_identity,
    "rellich.dirichlet": rellich_dirichlet,
    "rellich.navier": rellich_navier,
    "rellich.general": rellich_general,
}

IDENTITY_BC = {"rellich.dirichlet": "dirichlet", "rellich.navier": "navier", "rellich.supported": "supported"}


def evaluate(identity_id: str, pair, trace, variant: str = None) -> IdentityReport:
    """Dispatch by id; ``variant`` selects the Navier form or the supported sign."""
    if identity_id == "rellich.supported":
        return rellich_supported(pair, trace, sign_variant=variant or "+")
    if identity_id == "rellich.navier" and variant:
        return rellich_navier(pair, trace, form=variant)
    if identity_id not in EVALUATORS:
        raise ValueError(f"unknown identity {identity_id!r}")
    return EVALUATORS[identity_id](pair, trace)


@dataclass
class StudyReport:
    """Residuals of one identity over a refinement sequence."""

    identity_id: str
    variant: str
    reports: list
    slope: Optional[float]
    monotone: bool

    @property
    def reliable(self) -> bool:
        return self.monotone

    @property
    def at_floor(self) -> bool:
        return all(r <= RESIDUAL_FLOOR for r in self.residuals)

    @property
    def residuals(self) -> list:
        return [r.rel_residual for r in self.reports]

    @property
    def final(self) -> IdentityReport:
        return self.reports[-1]


def observed_slope(hs: Sequence[float], residuals: Sequence[float]) -> float:
    """Least-squares slope of ``log(residual)`` against ``log(h)``."""
    hs = np.asarray(hs, dtype=float)
    res = np.maximum(np.asarray(residuals, dtype=float), EPS)
    return float(np.polyfit(np.log(hs), np.log(res), 1)[0])


def _decreasing(res, floor):
    return all(b < a or max(a, b) <= floor for a, b in zip(res, res[1:]))


def study_from_reports(reports: list, hs: Sequence[float], floor: float = RESIDUAL_FLOOR) -> StudyReport:
    """Attach the observed slope; pairs already below ``floor`` do not break monotonicity."""
    if len(reports) < 3:
        raise ValueError("a convergence study needs at least 3 resolutions")
    res = [r.rel_residual for r in reports]
    # at round-off the fitted slope is noise, so none is reported
    slope = None if all(r <= floor for r in res) else observed_slope(hs, res)
    monotone = _decreasing(res, floor)
    if not monotone:
        log.warning("non-monotone residuals for %s: slope %s is unreliable", reports[0].identity_id, slope)
    reports = [replace(r, convergence_slope=slope) for r in reports]
    return StudyReport(reports[0].identity_id, reports[0].variant, reports, slope, monotone)


def convergence_study(identity_id: str, domain: DomainSpec, bc: BCKind, resolutions: Sequence[Resolution],
                      variant: str = None, mode_index: int = 0,
                      solve: Callable = None) -> StudyReport:
    """Evaluate ``identity_id`` on the ``mode_index``-th eigenpair at each resolution.

    ``solve(domain, bc, resolution)`` may be supplied to reuse eigenpairs.
    """
    if len(resolutions) < 3:
        raise ValueError("a convergence study needs at least 3 resolutions")
    expected = IDENTITY_BC.get(identity_id)
    if expected and bc.kind != expected:
        raise BoundaryConditionError(f"{identity_id} needs {expected} edges, got {bc.label()}")
    reports, hs = [], []
    for res in resolutions:
        if solve is None:
            pair = solve_lowest(assemble(domain, bc, res), mode_index + 1)[mode_index]
        else:
            pair = solve(domain, bc, res)
        trace = extract_trace(pair)
        reports.append(evaluate(identity_id, pair, trace, variant))
        hs.append(trace.h)
    return study_from_reports(reports, hs)


def oracle_green_study(mode, counts=(64, 128, 256)) -> StudyReport:
    """Green identity on analytic traces at increasing boundary node counts."""
    from .oracles import oracle_trace

    reports, hs = [], []
    for m in counts:
        trace = oracle_trace(mode, m=m)
        rep = green_identity(mode, trace)
        reports.append(rep)
        hs.append(trace.boundary.perimeter / m)
    return study_from_reports(reports, hs)


# -- sign adjudication for the supported identity ------------------------

@dataclass
class SignAdjudication:
    """Refinement behaviour of each supported-identity variant on several radii.

    A variant is accepted on a domain when its residual decreases under
    every refinement and ends below ``accept_tol``.  ``verdict`` names the
    unique accepted sign variant (``"+"`` or ``"-"``) when the same one is
    accepted on every domain, otherwise ``"none"`` or ``"ambiguous"``.
    """

    mu: float
    studies: dict  # (domain label, variant) -> StudyReport
    accepted: dict  # domain label -> list of accepted variants
    verdict: str
    stable: bool
    accept_tol: float

    def rows(self) -> list:
        out = []
        for (label, variant), study in self.studies.items():
            for rep in study.reports:
                row = rep.row()
                row.update(domain=label, decreasing=study.monotone,
                           accepted=variant in self.accepted[label], verdict=self.verdict)
                out.append(row)
        return out


def adjudicate_supported_sign(mu: float = 0.3, radii: Sequence[float] = (1.0, 2.0),
                              resolutions: Sequence[Resolution] = None,
                              accept_tol: float = 1e-2) -> SignAdjudication:
    if resolutions is None:
        resolutions = [Resolution(32, 32), Resolution(64, 32), Resolution(128, 32)]
    bc = BCKind.supported(mu)
    variants = ("+", "-", "general")
    studies, accepted = {}, {}
    for R in radii:
        domain = DomainSpec.disk(R)
        label = domain.label()
        reports = {v: [] for v in variants}
        hs = []
        for res in resolutions:
            pair = solve_lowest(assemble(domain, bc, res), 1)[0]
            trace = extract_trace(pair)
            hs.append(trace.h)
            for v in variants:
                reports[v].append(rellich_supported(pair, trace, sign_variant=v))
        accepted[label] = []
        for v in variants:
            study = study_from_reports(reports[v], hs)
            studies[(label, v)] = study
            if study.monotone and study.residuals[-1] <= accept_tol:
                accepted[label].append(v)
    sign_sets = [tuple(a for a in acc if a in ("+", "-")) for acc in accepted.values()]
    stable = len(set(sign_sets)) == 1
    if stable and len(sign_sets[0]) == 1:
        verdict = sign_sets[0][0]
    elif stable and not sign_sets[0]:
        verdict = "none"
    else:
        verdict = "ambiguous"
    return SignAdjudication(mu=mu, studies=studies, accepted=accepted, verdict=verdict,
                            stable=stable, accept_tol=accept_tol)
