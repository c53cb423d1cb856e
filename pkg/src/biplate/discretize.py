"""Finite-difference assembly of ``Lap^2 u = alpha u`` under three edge conditions.

Every problem is written as the coupled second-order system

    sigma = Lap u   at interior nodes,   u = 0 on the boundary,
    Lap sigma = alpha u   at interior nodes,

closed by the boundary value of ``sigma``:

* hinged (Navier): ``sigma = 0``;
* simply supported: ``sigma = c0 * du/dnu`` with ``c0 = (1 - mu) kappa``;
* clamped (Dirichlet): ``sigma`` is the Laplacian on the boundary ring
  computed with the mirror ghost ``u(1 + h) = u(1 - h)``, which enforces
  ``du/dnu = 0``.

Eliminating ``sigma`` gives the strong-form matrix ``A_s = L_II L_II +
L_IB S`` (``S`` maps interior values to boundary ``sigma``); the stored
pencil is ``(W A_s, W)`` with ``W`` the area quadrature weights.

Smooth domains use the boundary-fitted map ``x = s rho(theta) e_r`` with a
staggered radial grid (no node on the axis), centered differences in ``s``
and Fourier differentiation in ``theta``.  On a disk the angular modes
decouple and each is solved as a radial problem.  Rectangles use the
five-point Laplacian on a tensor grid.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .errors import AssemblyError, BoundaryConditionError
from .geometry import Boundary, DomainSpec, PolarGrid, RectGrid, extend_c0

DEFAULT_DOF_CAP = 20000
MAX_MODES = 20


@dataclass(frozen=True)
class BCKind:
    """Edge condition: ``dirichlet`` (clamped), ``navier`` (hinged) or ``supported``."""

    kind: str
    mu: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("dirichlet", "navier", "supported"):
            raise BoundaryConditionError(f"unknown boundary condition {self.kind!r}")
        if self.kind == "supported":
            if self.mu is None or not 0.0 < self.mu < 1.0:
                raise BoundaryConditionError(f"supported edges need 0 < mu < 1, got {self.mu}")
        elif self.mu is not None:
            object.__setattr__(self, "mu", None)

    @classmethod
    def dirichlet(cls):
        return cls("dirichlet")

    @classmethod
    def navier(cls):
        return cls("navier")

    @classmethod
    def supported(cls, mu):
        return cls("supported", float(mu))

    @classmethod
    def parse(cls, text: str, mu=None) -> "BCKind":
        name, _, rest = text.strip().lower().partition(":")
        aliases = {"clamped": "dirichlet", "hinged": "navier", "simply-supported": "supported"}
        name = aliases.get(name, name)
        if name == "supported":
            value = float(rest) if rest else mu
            if value is None:
                value = 0.3
            return cls.supported(value)
        return cls(name)

    def label(self) -> str:
        return f"supported:{self.mu:g}" if self.kind == "supported" else self.kind


@dataclass(frozen=True)
class Resolution:
    """Grid parameters: ``(n_radial, n_theta)`` for smooth domains, ``(nx, ny)`` for rectangles."""

    n: int
    m: int

    def doubled(self, times: int = 1) -> "Resolution":
        f = 2**times
        return Resolution(self.n * f, self.m * f)

    def label(self) -> str:
        return f"{self.n}x{self.m}"


def default_resolution(domain: DomainSpec) -> Resolution:
    if domain.kind == "disk":
        return Resolution(128, 64)
    if domain.kind == "rectangle":
        return Resolution(40, 40)
    return Resolution(40, 48)


# -- stencils -------------------------------------------------------------

def fourier_matrices(m: int):
    """Periodic spectral differentiation matrices (first, second) on ``m`` equispaced nodes."""
    h = 2 * np.pi / m
    k = np.arange(m)
    d1 = np.zeros(m)
    d2 = np.zeros(m)
    d1[1:] = 0.5 * (-1.0) ** k[1:] / np.tan(0.5 * k[1:] * h)
    d2[0] = -np.pi**2 / (3 * h * h) - 1.0 / 6.0
    d2[1:] = -0.5 * (-1.0) ** k[1:] / np.sin(0.5 * k[1:] * h) ** 2
    idx = (k[:, None] - k[None, :]) % m
    return d1[idx], d2[idx]


# one-sided weights at the boundary (node order: boundary, 1 in, 2 in, ...)
ONE_SIDED_D1 = np.array([3.0, -4.0, 1.0]) / 2.0
ONE_SIDED_D1_ORDER3 = np.array([11.0, -18.0, 9.0, -2.0]) / 6.0
ONE_SIDED_D2 = np.array([2.0, -5.0, 4.0, -1.0])


@dataclass(frozen=True)
class AxisStencil:
    """Axis closure for one angular mode on the staggered radial grid."""

    mode: int
    parity: int  # ghost u(-h/2) = parity * u(h/2)
    ghost_coefficient: float  # weight of the ghost in the first Laplacian row


def polar_axis_regularization(mode: int, s: np.ndarray) -> AxisStencil:
    """Ghost reflection across the axis for angular mode ``mode``.

    A mode ``cos(m theta)`` is even (``m`` even) or odd under ``r -> -r``;
    the first radial node sits at ``h/2`` so the ghost lies at ``-h/2``.  With
    the centered ``u'' + u'/s`` stencil the ghost weight is
    ``1/h^2 - 1/(2 h s_0) = 0``, so no value is ever evaluated on the axis.
    """
    h = s[1] - s[0]
    coef = 1.0 / h**2 - 1.0 / (2.0 * h * s[0])
    return AxisStencil(mode=mode, parity=(-1) ** mode, ghost_coefficient=coef)


def _combine(metric, ops, scale):
    """Cartesian second derivatives from derivatives in ``(s, theta)``.

    ``ops`` maps ``s, ss, t, tt, st`` to operators (arrays or matrices);
    ``scale(coef, op)`` multiplies a node-wise coefficient into an operator.
    """
    g = metric
    out = {}
    for name, (a, b) in {"xx": ("x", "x"), "yy": ("y", "y"), "xy": ("x", "y")}.items():
        sa, sb, ta, tb = g["s" + a], g["s" + b], g["t" + a], g["t" + b]
        s2, t2 = g["s" + name], g["t" + name]
        out[name] = (scale(sa * sb, ops["ss"]) + scale(sa * tb + ta * sb, ops["st"])
                     + scale(ta * tb, ops["tt"]) + scale(s2, ops["s"]) + scale(t2, ops["t"]))
    return out


def polar_axis_ghost(grid: PolarGrid):
    """Ghost ring at ``s = -h/2``: indices and weights on rings 0 and 1 at ``theta + pi``."""
    M = grid.n_theta
    th = grid.theta
    opp = (np.arange(M) + M // 2) % M
    rho, _, _ = grid.domain.radius(th)
    rho_opp = rho[opp]
    s0, h = grid.s[0], grid.h
    s_img = s0 * rho / rho_opp
    w = (s_img - s0) / h
    return opp, 1.0 - w, w


@functools.lru_cache(maxsize=16)
def polar_laplacian_matrix(grid: PolarGrid) -> sp.csr_matrix:
    """Sparse Laplacian with rows at interior nodes, columns at all nodes (ring-major)."""
    N, M = grid.shape
    h = grid.h
    n_int = N - 1
    rows = np.arange(n_int)
    e0 = sp.csr_matrix((np.ones(n_int), (rows, rows)), shape=(n_int, N))
    ep = sp.csr_matrix((np.ones(n_int), (rows, rows + 1)), shape=(n_int, N))
    em = sp.csr_matrix((np.ones(n_int - 1), (rows[1:], rows[1:] - 1)), shape=(n_int, N))
    I_M = sp.identity(M, format="csr")
    E0, Ep, Em = (sp.kron(e, I_M, format="csr") for e in (e0, ep, em))
    opp, w0, w1 = polar_axis_ghost(grid)
    j = np.arange(M)
    ghost = sp.csr_matrix(
        (np.concatenate([w0, w1]), (np.concatenate([j, j]), np.concatenate([opp, M + opp]))),
        shape=(n_int * M, N * M),
    )
    Em = Em + ghost
    D1, D2 = fourier_matrices(M)
    Us = (Ep - Em) / (2 * h)
    Uss = (Ep - 2 * E0 + Em) / h**2
    Dt = sp.kron(sp.identity(n_int), sp.csr_matrix(D1), format="csr")
    ops = {
        "s": Us,
        "ss": Uss,
        "t": sp.kron(e0, sp.csr_matrix(D1), format="csr"),
        "tt": sp.kron(e0, sp.csr_matrix(D2), format="csr"),
        "st": Dt @ Us,
    }
    metric = grid.metric(grid.s[:-1])

    def scale(c, op):
        return sp.diags(np.ravel(c)) @ op

    hess = _combine(metric, ops, scale)
    return (hess["xx"] + hess["yy"]).tocsr()


def rect_laplacian_matrix(grid: RectGrid) -> sp.csr_matrix:
    """Five-point Laplacian, rows at interior nodes, columns at all nodes (x-major)."""
    nx, ny = grid.nx, grid.ny
    hx, hy = grid.hx, grid.hy
    idx = np.arange((nx + 1) * (ny + 1)).reshape(nx + 1, ny + 1)
    I, J = np.meshgrid(np.arange(1, nx), np.arange(1, ny), indexing="ij")
    row = (I - 1) * (ny - 1) + (J - 1)
    r, c, v = [], [], []
    for di, dj, val in [(0, 0, -2 / hx**2 - 2 / hy**2), (1, 0, 1 / hx**2), (-1, 0, 1 / hx**2),
                        (0, 1, 1 / hy**2), (0, -1, 1 / hy**2)]:
        r.append(row.ravel())
        c.append(idx[I + di, J + dj].ravel())
        v.append(np.full(row.size, val))
    n_int = (nx - 1) * (ny - 1)
    return sp.csr_matrix((np.concatenate(v), (np.concatenate(r), np.concatenate(c))),
                         shape=(n_int, idx.size))


def rect_index(grid: RectGrid):
    """Flat indices of interior nodes and of the non-corner edge nodes (bottom, right, top, left)."""
    nx, ny = grid.nx, grid.ny
    idx = np.arange((nx + 1) * (ny + 1)).reshape(nx + 1, ny + 1)
    interior = idx[1:nx, 1:ny].ravel()
    edges = [idx[1:nx, 0], idx[nx, 1:ny], idx[nx - 1:0:-1, ny], idx[0, ny - 1:0:-1]]
    # inward neighbours: one and two cells in
    inner1 = [idx[1:nx, 1], idx[nx - 1, 1:ny], idx[nx - 1:0:-1, ny - 1], idx[1, ny - 1:0:-1]]
    return interior, edges, inner1


# -- operator -------------------------------------------------------------

@dataclass(eq=False)
class ModeOperator:
    """Radial problem for one angular mode of a disk."""

    mode: int
    laplacian: np.ndarray  # (N-1, N), rows interior
    sigma_boundary: np.ndarray  # (N-1,)
    strong: np.ndarray  # (N-1, N-1)
    weights: np.ndarray  # (N-1,)


@dataclass(eq=False)
class DiscreteOperator:
    """Discrete pencil ``(stiffness, mass)`` plus the pieces traces need.

    ``strong`` is the eliminated strong-form matrix ``A_s`` with
    ``stiffness = diag(mass) @ A_s``.  For disks solved mode by mode,
    ``modes`` holds the radial problems and ``strong`` is ``None``.
    """

    domain: DomainSpec
    bc: BCKind
    resolution: Resolution
    grid: object
    mass: np.ndarray  # interior quadrature weights (flattened)
    dof_map: np.ndarray  # flat node index of each unknown
    boundary: Optional[Boundary]
    c0: Optional[np.ndarray] = None
    strong: Optional[object] = None
    sigma_boundary: Optional[object] = None  # boundary sigma as a linear map of interior values
    laplacian: Optional[object] = None  # rows interior, columns all nodes
    modes: dict = field(default_factory=dict)
    method: str = "2d"

    @property
    def n_dof(self) -> int:
        return len(self.dof_map)

    @property
    def stiffness(self):
        if self.strong is None:
            raise AttributeError("modal operator: use .modes")
        if sp.issparse(self.strong):
            return (sp.diags(self.mass) @ self.strong).tocsr()
        return self.mass[:, None] * self.strong

    def full_field(self, interior_values) -> np.ndarray:
        """Scatter interior values into a full grid array (boundary = 0)."""
        out = np.zeros(int(np.prod(self.grid.shape)))
        out[self.dof_map] = interior_values
        return out.reshape(self.grid.shape)

    def mode_operator(self, m: int) -> ModeOperator:
        if m not in self.modes:
            self.modes[m] = _disk_mode_operator(self.grid, self.bc, m, self.c0)
        return self.modes[m]

    def polar_laplacian(self):
        if self.laplacian is None and isinstance(self.grid, PolarGrid):
            self.laplacian = polar_laplacian_matrix(self.grid)
        return self.laplacian


def _disk_mode_operator(grid: PolarGrid, bc: BCKind, m: int, c0) -> ModeOperator:
    N = grid.n_radial
    R = grid.domain.params[0]
    s, h = grid.s, grid.h
    axis = polar_axis_regularization(m, s)
    L = np.zeros((N - 1, N))
    for i in range(N - 1):
        lo = 1.0 / h**2 - 1.0 / (2 * h * s[i])
        hi = 1.0 / h**2 + 1.0 / (2 * h * s[i])
        L[i, i] = -2.0 / h**2 - m * m / s[i] ** 2
        L[i, i + 1] = hi
        if i > 0:
            L[i, i - 1] = lo
        else:
            L[0, 0] += axis.parity * axis.ghost_coefficient
    L /= R * R
    sig = np.zeros(N - 1)
    if bc.kind == "supported":
        # sigma_B = c0 * u_r, u_r = u_s / R from the one-sided stencil (u_B = 0)
        sig[N - 2] = ONE_SIDED_D1[1] / h
        sig[N - 3] = ONE_SIDED_D1[2] / h
        sig *= c0[0] / R
    elif bc.kind == "dirichlet":
        sig[N - 2] = 2.0 / (h * h * R * R)
    strong = L[:, :-1] @ L[:, :-1] + np.outer(L[:, -1], sig)
    weights = s[:-1] * h * R * R
    return ModeOperator(mode=m, laplacian=L, sigma_boundary=sig, strong=strong, weights=weights)


def _polar_sigma_boundary(grid: PolarGrid, bc: BCKind, c0, boundary: Boundary) -> sp.csr_matrix:
    N, M = grid.shape
    h = grid.h
    n_int = (N - 1) * M
    j = np.arange(M)
    ring = lambda k: (N - 1 - k) * M + j  # noqa: E731  ring k steps inside the boundary
    if bc.kind == "navier":
        return sp.csr_matrix((M, n_int))
    if bc.kind == "supported":
        coef = c0 / boundary.support / h
        rows = np.concatenate([j, j])
        cols = np.concatenate([ring(1), ring(2)])
        vals = np.concatenate([ONE_SIDED_D1[1] * coef, ONE_SIDED_D1[2] * coef])
        return sp.csr_matrix((vals, (rows, cols)), shape=(M, n_int))
    g = grid.metric(np.array([1.0]))
    gss = (g["sx"] ** 2 + g["sy"] ** 2)[0]
    return sp.csr_matrix((2.0 * gss / h**2, (j, ring(1))), shape=(M, n_int))


def _rect_sigma_boundary(grid: RectGrid, bc: BCKind):
    interior, edges, inner1 = rect_index(grid)
    pos = {int(g): k for k, g in enumerate(interior)}
    edge_nodes = np.concatenate(edges)
    if bc.kind == "navier":
        return sp.csr_matrix((len(edge_nodes), len(interior))), edge_nodes
    h2 = [grid.hy**2, grid.hx**2, grid.hy**2, grid.hx**2]
    rows, cols, vals = [], [], []
    k = 0
    for e in range(4):
        for nb in inner1[e]:
            rows.append(k)
            cols.append(pos[int(nb)])
            vals.append(2.0 / h2[e])
            k += 1
    return sp.csr_matrix((vals, (rows, cols)), shape=(len(edge_nodes), len(interior))), edge_nodes


def assemble(domain: DomainSpec, bc: BCKind, resolution: Resolution = None, method: str = "auto",
             dof_cap: int = DEFAULT_DOF_CAP) -> DiscreteOperator:
    """Build the discrete pencil for ``Lap^2 u = alpha u`` on ``domain``.

    ``method`` is ``auto`` (modal for disks, 2D otherwise), ``modal`` or
    ``2d``.
    """
    if resolution is None:
        resolution = default_resolution(domain)
    if bc.kind == "supported":
        if not domain.smooth:
            raise BoundaryConditionError(
                f"supported edges need a smooth convex boundary; {domain.label()} has corners")
    if domain.kind == "rectangle":
        return _assemble_rect(domain, bc, resolution, dof_cap)
    grid = PolarGrid(domain, resolution.n, resolution.m)
    if grid.n_interior > dof_cap:
        raise AssemblyError(f"{grid.n_interior} unknowns exceed the cap of {dof_cap} "
                            f"(resolution {resolution.label()})")
    boundary = grid.boundary()
    c0 = None
    if bc.kind == "supported":
        kappa = boundary.require_curvature()
        if np.min(kappa) < 0:
            bad = int(np.argmin(kappa))
            raise BoundaryConditionError(f"supported edges need a convex domain; kappa < 0 at node {bad}")
        c0 = extend_c0(domain, bc.mu, boundary=boundary).values
    if method == "auto":
        method = "modal" if domain.kind == "disk" else "2d"
    N, M = grid.shape
    weights = grid.weights()[:-1].ravel()
    dof_map = np.arange((N - 1) * M)
    op = DiscreteOperator(domain=domain, bc=bc, resolution=resolution, grid=grid, mass=weights,
                          dof_map=dof_map, boundary=boundary, c0=c0, method=method)
    if method == "modal":
        if domain.kind != "disk":
            raise AssemblyError("modal decomposition needs a disk")
        return op
    L = polar_laplacian_matrix(grid)
    S = _polar_sigma_boundary(grid, bc, c0, boundary)
    L_II, L_IB = L[:, : (N - 1) * M], L[:, (N - 1) * M:]
    op.laplacian = L
    op.sigma_boundary = S
    op.strong = (L_II @ L_II + L_IB @ S).tocsc()
    return op


def _assemble_rect(domain, bc, resolution, dof_cap):
    if bc.kind == "supported":
        raise BoundaryConditionError("supported edges need curvature; rectangles are not admissible")
    grid = RectGrid(domain, resolution.n, resolution.m)
    if grid.n_interior > dof_cap:
        raise AssemblyError(f"{grid.n_interior} unknowns exceed the cap of {dof_cap}")
    interior, edges, _ = rect_index(grid)
    L = rect_laplacian_matrix(grid)
    S, edge_nodes = _rect_sigma_boundary(grid, bc)
    L_II = L[:, interior]
    L_IB = L[:, edge_nodes]
    strong = (L_II @ L_II + L_IB @ S).tocsc()
    mass = grid.weights().ravel()[interior]
    return DiscreteOperator(domain=domain, bc=bc, resolution=resolution, grid=grid, mass=mass,
                            dof_map=interior, boundary=None, strong=strong, sigma_boundary=S,
                            laplacian=L, method="2d")
