"""Boundary traces of discrete eigenfunctions.

Every boundary-integral identity is built from a handful of node-wise
quantities on the edge: ``u``, ``du/dnu``, ``d2u/dnu2``, ``Lap u``,
``d(Lap u)/dnu`` and ``x . grad u``.  This module extracts them from a
solved :class:`~biplate.eigensolve.EigenPair` with one-sided stencils along
the grid lines that end on the boundary.

On a boundary-fitted polar grid those lines are rays, not normals, so
derivatives are assembled in ``(s, theta)`` and pushed through the exact
metric.  Since ``u = 0`` on the edge, ``u_theta = u_thetatheta = 0`` there and
only ``u_s``, ``u_ss`` and ``u_stheta`` are needed for the Hessian.

The boundary value of ``Lap u`` is taken from the discrete closure (``0``
for hinged, ``c0 u_nu`` for supported edges); for clamped edges it is
``u_nunu``.  The independent route (``u_nunu + kappa u_nu``, or for clamped
edges the extrapolated interior ``sigma``) is kept in ``laplacian_alt``.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .discretize import (
    ONE_SIDED_D1,
    ONE_SIDED_D1_ORDER3,
    ONE_SIDED_D2,
    BCKind,
    _combine,
    _polar_sigma_boundary,
)
from .errors import TraceError
from .geometry import Boundary, PolarGrid, RectGrid

log = logging.getLogger(__name__)

# fourth-order-accurate one-sided second derivative (boundary, 1 in, ...)
ONE_SIDED_D2_ORDER3 = np.array([35.0, -104.0, 114.0, -56.0, 11.0]) / 12.0
EXTRAPOLATE_3 = np.array([3.0, -3.0, 1.0])
CONSISTENCY_TOL = 5e-2

TRACE_FIELDS = ("u", "u_nu", "u_nunu", "laplacian", "laplacian_nu", "x_grad",
                "laplacian_alt", "x_hess_nu", "u_nu_s")


@dataclass(eq=False)
class BoundaryTrace:
    """Node-wise boundary data of one eigenfunction.

    ``x_hess_nu`` is ``sum_ij x_i nu_j u_ij``; ``u_nu_s`` is the arc-length
    derivative of ``u_nu``.  ``provenance`` is ``"discrete"`` or
    ``"analytic-oracle"``.
    """

    boundary: Boundary
    u: np.ndarray
    u_nu: np.ndarray
    u_nunu: np.ndarray
    laplacian: np.ndarray
    laplacian_nu: np.ndarray
    x_grad: np.ndarray
    u_nu_s: np.ndarray
    laplacian_alt: np.ndarray
    norm_squared: float
    eigenvalue: float
    provenance: str = "discrete"
    bc: Optional[BCKind] = None
    c0: Optional[np.ndarray] = None
    x_hess_nu: Optional[np.ndarray] = None
    h: Optional[float] = None
    consistency_gap: float = 0.0
    consistent: bool = True
    meta: dict = field(default_factory=dict)

    @property
    def support(self) -> np.ndarray:
        return self.boundary.support

    @property
    def arc_weight(self) -> np.ndarray:
        return self.boundary.weights

    @property
    def tangential_support(self) -> np.ndarray:
        """``x . tau`` with ``tau`` the counter-clockwise unit tangent."""
        nx, ny = self.boundary.normals[:, 0], self.boundary.normals[:, 1]
        return -self.boundary.points[:, 0] * ny + self.boundary.points[:, 1] * nx

    @property
    def curvature(self) -> Optional[np.ndarray]:
        return self.boundary.curvature

    def integrate(self, values) -> float:
        return self.boundary.integrate(values)

    def to_csv(self, handle=None) -> str:
        """Write one row per node (index, arc length, position, every trace field)."""
        out = io.StringIO() if handle is None else handle
        writer = csv.writer(out, lineterminator="\n")
        cols = ["node", "s", "x", "y", "support", "arc_weight", "curvature"] + list(TRACE_FIELDS)
        writer.writerow(cols)
        b = self.boundary
        kappa = b.curvature if b.curvature is not None else np.full(len(b), np.nan)
        data = [getattr(self, name) if getattr(self, name) is not None else np.full(len(b), np.nan)
                for name in TRACE_FIELDS]
        for i in range(len(b)):
            row = [i, b.arclength[i], b.points[i, 0], b.points[i, 1], b.support[i], b.weights[i], kappa[i]]
            row += [d[i] for d in data]
            writer.writerow([row[0]] + [f"{v:.12g}" for v in row[1:]])
        return out.getvalue() if handle is None else ""


# -- sigma field ----------------------------------------------------------

def _rect_lines(grid: RectGrid, depth: int):
    """Flat indices of the non-corner edge nodes and the ``depth`` grid lines inside each."""
    nx, ny = grid.nx, grid.ny
    idx = np.arange((nx + 1) * (ny + 1)).reshape(nx + 1, ny + 1)
    xs, ys = slice(1, nx), slice(ny - 1, 0, -1)
    xr = slice(nx - 1, 0, -1)
    out = []
    for k in range(depth + 1):
        out.append(np.concatenate([idx[xs, k], idx[nx - k, 1:ny], idx[xr, ny - k], idx[k, ys]]))
    return out  # out[0] boundary, out[k] k cells in


def _rect_steps(grid: RectGrid):
    nx, ny = grid.nx, grid.ny
    return np.concatenate([np.full(nx - 1, grid.hy), np.full(ny - 1, grid.hx),
                           np.full(nx - 1, grid.hy), np.full(ny - 1, grid.hx)])


def sigma_field(pair) -> np.ndarray:
    """``Lap u`` on the full grid as seen by the discrete system.

    Interior nodes hold ``L u``; boundary nodes hold the closure value of
    ``sigma`` (corners of a rectangle get ``0``).
    """
    op = pair.operator
    grid = op.grid
    u = pair.field
    if isinstance(grid, PolarGrid):
        L = op.polar_laplacian()
        N, M = grid.shape
        sig = np.empty((N, M))
        sig[:-1] = (L @ u.ravel()).reshape(N - 1, M)
        S = op.sigma_boundary
        if S is None:
            S = _polar_sigma_boundary(grid, op.bc, op.c0, op.boundary)
        sig[-1] = S @ u[:-1].ravel()
        return sig
    if isinstance(grid, RectGrid):
        flat = u.ravel()
        sig = np.zeros(flat.size)
        sig[op.dof_map] = op.laplacian @ flat
        lines = _rect_lines(grid, 0)
        sig[lines[0]] = op.sigma_boundary @ flat[op.dof_map]
        return sig.reshape(grid.shape)
    raise TraceError(f"unsupported grid type {type(grid).__name__}")


# -- extraction -----------------------------------------------------------

def _one_sided(values_inward, h, stencil):
    """Apply a one-sided stencil to samples ordered boundary, 1 in, 2 in, ..."""
    return sum(c * values_inward[k] for k, c in enumerate(stencil)) / h


def _fft_derivative(values, order=1):
    m = values.shape[-1]
    k = np.fft.fftfreq(m, d=1.0 / m)
    if m % 2 == 0 and order % 2:
        k[m // 2] = 0.0
    return np.real(np.fft.ifft((1j * k) ** order * np.fft.fft(values, axis=-1), axis=-1))


def extract_trace(pair, domain=None, stencil_order: int = 2,
                  consistency_tol: float = CONSISTENCY_TOL) -> BoundaryTrace:
    """Boundary trace of a solved eigenpair.

    Parameters
    ----------
    pair : EigenPair
        Converged eigenpair; its operator fixes the grid and the closure.
    domain : DomainSpec, optional
        Must match the operator's domain when given.
    stencil_order : {2, 3}
        Accuracy of the one-sided normal stencils.  The default matches
        the discrete closure, so imposed boundary rows hold to round-off.
    consistency_tol : float
        Allowed gap, relative to ``max |u_nunu|``, between the two routes
        to ``Lap u``; larger gaps are logged and flagged on the trace.
    """
    op = pair.operator
    if domain is not None and domain != op.domain:
        raise TraceError(f"trace domain {domain.label()} does not match operator {op.domain.label()}")
    if stencil_order not in (2, 3):
        raise ValueError("stencil_order must be 2 or 3")
    if isinstance(op.grid, PolarGrid):
        trace = _polar_trace(pair, stencil_order)
    elif isinstance(op.grid, RectGrid):
        trace = _rect_trace(pair, stencil_order)
    else:
        raise TraceError(f"unsupported grid type {type(op.grid).__name__}")
    scale = max(float(np.max(np.abs(trace.u_nunu))), 1e-300)
    gap = float(np.max(np.abs(trace.laplacian - trace.laplacian_alt))) / scale
    trace.consistency_gap = gap
    trace.consistent = gap <= 10 * consistency_tol
    if not trace.consistent:
        log.warning("trace routes to Lap u disagree: relative gap %.3e", gap)
    return trace


def _stencils(order):
    if order == 2:
        return ONE_SIDED_D1, ONE_SIDED_D2
    return ONE_SIDED_D1_ORDER3, ONE_SIDED_D2_ORDER3


def _polar_trace(pair, order) -> BoundaryTrace:
    op = pair.operator
    grid: PolarGrid = op.grid
    bc = op.bc
    h = grid.h
    u = pair.field
    rings = u[::-1]  # rings[k] = k steps inside the boundary
    d1, d2 = _stencils(order)
    boundary = op.boundary if op.boundary is not None else grid.boundary()
    g = {k: v[0] for k, v in grid.metric(np.array([1.0])).items()}
    nx, ny = boundary.normals[:, 0], boundary.normals[:, 1]

    u_s = np.zeros(grid.n_theta) if bc.kind == "dirichlet" else _one_sided(rings, h, d1)
    u_ss = _one_sided(rings, h * h, d2)
    u_st = _fft_derivative(u_s)
    zero = np.zeros_like(u_s)
    hess = _combine(g, {"s": u_s, "ss": u_ss, "st": u_st, "t": zero, "tt": zero}, lambda c, v: c * v)
    H = np.array([[hess["xx"], hess["xy"]], [hess["xy"], hess["yy"]]])
    grad = np.array([g["sx"] * u_s, g["sy"] * u_s])
    nu = np.array([nx, ny])
    x = boundary.points.T
    u_nu = np.einsum("in,in->n", grad, nu)
    u_nunu = np.einsum("in,ijn,jn->n", nu, H, nu)
    x_hess_nu = np.einsum("in,ijn,jn->n", x, H, nu)
    x_grad = np.einsum("in,in->n", x, grad)
    kappa = boundary.curvature

    sig = sigma_field(pair)
    sig_rings = sig[::-1].copy()
    if bc.kind == "dirichlet":
        sig_rings[0] = EXTRAPOLATE_3 @ sig_rings[1:4]
        laplacian = u_nunu + kappa * u_nu
        laplacian_alt = sig_rings[0]
    else:
        laplacian = sig_rings[0]
        laplacian_alt = u_nunu + kappa * u_nu
    sig_s = _one_sided(sig_rings, h, ONE_SIDED_D1_ORDER3)
    sig_t = _fft_derivative(sig_rings[0])
    dlap = (g["sx"] * sig_s + g["tx"] * sig_t) * nx + (g["sy"] * sig_s + g["ty"] * sig_t) * ny

    speed = boundary.weights / (2 * np.pi / grid.n_theta)
    return BoundaryTrace(
        boundary=boundary,
        u=rings[0].copy(),
        u_nu=u_nu,
        u_nunu=u_nunu,
        laplacian=laplacian,
        laplacian_nu=dlap,
        x_grad=x_grad,
        u_nu_s=_fft_derivative(u_nu) / speed,
        laplacian_alt=laplacian_alt,
        norm_squared=grid.integrate(u**2),
        eigenvalue=pair.value,
        provenance="discrete",
        bc=bc,
        c0=op.c0,
        x_hess_nu=x_hess_nu,
        h=h,
        meta={"stencil_order": order, "resolution": op.resolution.label()},
    )


def _rect_boundary(grid: RectGrid) -> Boundary:
    nx, ny = grid.nx, grid.ny
    X, Y = np.meshgrid(grid.x, grid.y, indexing="ij")
    b = _rect_lines(grid, 0)[0]
    points = np.column_stack([X.ravel()[b], Y.ravel()[b]])
    counts = [nx - 1, ny - 1, nx - 1, ny - 1]
    normals = np.repeat(np.array([[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]]), counts, axis=0)
    edge = np.repeat(np.arange(4), counts)
    weights = np.concatenate([np.full(nx - 1, grid.hx), np.full(ny - 1, grid.hy),
                              np.full(nx - 1, grid.hx), np.full(ny - 1, grid.hy)])
    angles = np.repeat(np.array([0.0, 0.5, 1.0, -0.5]) * np.pi, counts)
    return Boundary(
        domain=grid.domain,
        theta=edge + 0.0,
        points=points,
        normals=normals,
        tangent_angle=angles,
        curvature=None,
        support=np.einsum("ij,ij->i", points, normals),
        weights=weights,
        arclength=np.cumsum(weights) - 0.5 * weights,
        edge=edge,
    )


def _rect_trace(pair, order) -> BoundaryTrace:
    op = pair.operator
    grid: RectGrid = op.grid
    bc = op.bc
    lines = _rect_lines(grid, 5)
    h = _rect_steps(grid)
    flat = pair.field.ravel()
    vals = [flat[line] for line in lines]
    d1, d2 = _stencils(order)
    u_nu = np.zeros(len(h)) if bc.kind == "dirichlet" else _one_sided(vals, h, d1)
    u_nunu = _one_sided(vals, h * h, d2)
    sig = sigma_field(pair).ravel()
    sig_lines = [sig[line] for line in lines]
    if bc.kind == "dirichlet":
        sig_lines[0] = EXTRAPOLATE_3 @ np.array(sig_lines[1:4])
        laplacian, laplacian_alt = u_nunu.copy(), sig_lines[0]
    else:
        laplacian, laplacian_alt = sig_lines[0], u_nunu.copy()
    dlap = _one_sided(sig_lines, h, ONE_SIDED_D1_ORDER3)
    boundary = _rect_boundary(grid)
    u_nu_s = np.concatenate([np.gradient(u_nu[boundary.edge == e], boundary.arclength[boundary.edge == e])
                             for e in range(4)])
    tau_support = -boundary.points[:, 0] * boundary.normals[:, 1] + boundary.points[:, 1] * boundary.normals[:, 0]
    return BoundaryTrace(
        boundary=boundary,
        u=vals[0].copy(),
        u_nu=u_nu,
        u_nunu=u_nunu,
        laplacian=laplacian,
        laplacian_nu=dlap,
        x_grad=boundary.support * u_nu,
        u_nu_s=u_nu_s,
        laplacian_alt=laplacian_alt,
        norm_squared=grid.integrate(pair.field**2),
        eigenvalue=pair.value,
        provenance="discrete",
        bc=bc,
        x_hess_nu=boundary.support * u_nunu + tau_support * u_nu_s,
        h=float(max(grid.hx, grid.hy)),
        meta={"stencil_order": order, "resolution": op.resolution.label()},
    )


# -- boundary-condition residuals ----------------------------------------

BC_TOLERANCE = {"dirichlet": 1e-8, "navier": 1e-8, "supported": 1e-6}


@dataclass(frozen=True)
class BCResidual:
    """Max-norm residual of each imposed boundary row."""

    bc: str
    components: dict
    tolerance: float

    @property
    def worst(self) -> float:
        return max(self.components.values())

    @property
    def passed(self) -> bool:
        return self.worst <= self.tolerance


def verify_bc_residual(trace: BoundaryTrace, bc: BCKind, tolerance: float = None) -> BCResidual:
    """Residuals of ``u = 0`` and the second boundary row of ``bc`` on ``trace``.

    Values are relative to ``max |u_nunu|`` so they do not depend on the
    eigenfunction's normalization.  A trace taken from a different problem
    (e.g. a clamped mode checked against hinged rows) simply reports a
    large residual.
    """
    scale = max(float(np.max(np.abs(trace.u_nunu))), float(np.max(np.abs(trace.u_nu))), 1e-300)
    comps = {"u": float(np.max(np.abs(trace.u))) / scale}
    if bc.kind == "dirichlet":
        comps["u_nu"] = float(np.max(np.abs(trace.u_nu))) / scale
    elif bc.kind == "navier":
        comps["laplacian"] = float(np.max(np.abs(trace.laplacian))) / scale
    else:
        if trace.boundary.curvature is None:
            raise TraceError("supported residual needs curvature")
        c0 = (1.0 - bc.mu) * trace.boundary.curvature
        comps["laplacian_minus_c0_u_nu"] = float(np.max(np.abs(trace.laplacian - c0 * trace.u_nu))) / scale
    tol = BC_TOLERANCE[bc.kind] if tolerance is None else tolerance
    return BCResidual(bc=bc.label(), components=comps, tolerance=tol)


# -- volume Hessian -------------------------------------------------------

def cartesian_hessian(pair, stencil_order: int = 2):
    """``(u_xx, u_xy, u_yy)`` on the full grid.

    Polar grids differentiate in ``(s, theta)`` (centered in ``s`` with the
    axis ghost, Fourier in ``theta``, one-sided on the boundary ring) and map
    through the exact metric.  Rectangles use centered differences inside and
    one-sided normal stencils on the edges.
    """
    op = pair.operator
    grid = op.grid
    u = pair.field
    d1, d2 = _stencils(stencil_order)
    if isinstance(grid, PolarGrid):
        from .discretize import polar_axis_ghost

        h = grid.h
        opp, w0, w1 = polar_axis_ghost(grid)
        ghost = w0 * u[0, opp] + w1 * u[1, opp]
        ext = np.vstack([ghost, u])
        u_s = np.empty_like(u)
        u_ss = np.empty_like(u)
        u_s[:-1] = (ext[2:] - ext[:-2]) / (2 * h)
        u_ss[:-1] = (ext[2:] - 2 * ext[1:-1] + ext[:-2]) / h**2
        rings = u[::-1]
        u_s[-1] = 0.0 if op.bc.kind == "dirichlet" else _one_sided(rings, h, d1)
        u_ss[-1] = _one_sided(rings, h * h, d2)
        ops = {"s": u_s, "ss": u_ss, "t": _fft_derivative(u), "tt": _fft_derivative(u, 2),
               "st": _fft_derivative(u_s)}
        hess = _combine(grid.metric(), ops, lambda c, v: c * v)
        return hess["xx"], hess["xy"], hess["yy"]
    if isinstance(grid, RectGrid):
        hx, hy = grid.hx, grid.hy
        uxx = np.zeros_like(u)
        uyy = np.zeros_like(u)
        uxx[1:-1] = (u[2:] - 2 * u[1:-1] + u[:-2]) / hx**2
        uyy[:, 1:-1] = (u[:, 2:] - 2 * u[:, 1:-1] + u[:, :-2]) / hy**2
        uxx[0] = sum(c * u[i] for i, c in enumerate(d2)) / hx**2
        uxx[-1] = sum(c * u[-1 - i] for i, c in enumerate(d2)) / hx**2
        uyy[:, 0] = sum(c * u[:, i] for i, c in enumerate(d2)) / hy**2
        uyy[:, -1] = sum(c * u[:, -1 - i] for i, c in enumerate(d2)) / hy**2
        ux = np.gradient(u, hx, axis=0, edge_order=2)
        if op.bc.kind == "dirichlet":
            ux[[0, -1]] = 0.0
        uxy = np.gradient(ux, hy, axis=1, edge_order=2)
        return uxx, uxy, uyy
    raise TraceError(f"unsupported grid type {type(grid).__name__}")
