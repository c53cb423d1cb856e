"""Star-shaped planar domains, boundary nodes, curvature and quadrature.

Smooth domains (disk, ellipse, star) are described by a periodic radius
function ``rho(theta)`` about the origin.  Boundary nodes are placed at
equispaced polar angles so that the trapezoidal rule in ``theta`` is the
boundary quadrature; for smooth periodic integrands it converges
spectrally.  Rectangles are centered at the origin and use Gauss-Legendre
nodes on each edge; they carry no curvature.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional

import numpy as np

from .errors import BoundaryConditionError, DomainError

SMOOTH_KINDS = ("disk", "ellipse", "star")
KINDS = SMOOTH_KINDS + ("rectangle",)


@dataclass(frozen=True)
class DomainSpec:
    """A 2D domain centered at the origin.

    Parameters
    ----------
    kind : str
        One of ``disk``, ``ellipse``, ``star``, ``rectangle``.
    params : tuple of float
        ``(R,)`` for a disk, ``(a, b)`` semi-axes for an ellipse,
        ``(c0, a1, b1, a2, b2, ...)`` Fourier coefficients of the radius
        for a star, ``(a, b)`` side lengths for a rectangle.
    """

    kind: str
    params: tuple
    dimension: int = 2

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown domain kind {self.kind!r}; expected one of {KINDS}")
        params = tuple(float(p) for p in self.params)
        object.__setattr__(self, "params", params)
        if self.dimension != 2:
            raise DomainError("only two-dimensional domains are computed")
        expected = {"disk": 1, "ellipse": 2, "rectangle": 2}
        if self.kind in expected and len(params) != expected[self.kind]:
            raise DomainError(f"{self.kind} takes {expected[self.kind]} parameter(s), got {len(params)}")
        if self.kind == "star" and (len(params) < 1 or len(params) % 2 == 0):
            raise DomainError("star takes c0 followed by (a_k, b_k) pairs")
        if self.kind in ("disk", "ellipse", "rectangle") and min(params) <= 0:
            raise DomainError(f"{self.kind} parameters must be positive")

    # -- constructors -----------------------------------------------------
    @classmethod
    def disk(cls, R=1.0):
        return cls("disk", (R,))

    @classmethod
    def ellipse(cls, a, b):
        return cls("ellipse", (a, b))

    @classmethod
    def star(cls, coefficients):
        return cls("star", tuple(coefficients))

    @classmethod
    def rectangle(cls, a, b):
        return cls("rectangle", (a, b))

    @classmethod
    def parse(cls, text: str) -> "DomainSpec":
        """Parse ``disk:1``, ``ellipse:2,1``, ``star:1,0,0.1`` or ``rect:1,1``."""
        try:
            kind, _, rest = text.strip().partition(":")
            kind = kind.strip().lower()
            kind = {"rect": "rectangle", "circle": "disk"}.get(kind, kind)
            values = tuple(float(v) for v in rest.split(",")) if rest.strip() else ()
        except ValueError as exc:
            raise DomainError(f"cannot parse domain {text!r}: {exc}") from None
        if kind == "disk" and not values:
            values = (1.0,)
        return cls(kind, values)

    def label(self) -> str:
        short = "rect" if self.kind == "rectangle" else self.kind
        return f"{short}:" + ",".join(f"{p:g}" for p in self.params)

    # -- geometry ---------------------------------------------------------
    @property
    def smooth(self) -> bool:
        return self.kind in SMOOTH_KINDS

    @property
    def centrally_symmetric(self) -> bool:
        if self.kind != "star":
            return True
        odd = self.params[1:][0::4] + self.params[2:][0::4]
        return all(c == 0.0 for c in odd)

    def radius(self, theta):
        """Return ``(rho, rho', rho'')`` at polar angles ``theta``."""
        if not self.smooth:
            raise DomainError("rectangle has no smooth radius function")
        theta = np.asarray(theta, dtype=float)
        if self.kind == "disk":
            R = self.params[0]
            return np.full_like(theta, R), np.zeros_like(theta), np.zeros_like(theta)
        if self.kind == "ellipse":
            a, b = self.params
            c, s = np.cos(theta), np.sin(theta)
            q = b * b * c * c + a * a * s * s
            dq = (a * a - b * b) * np.sin(2 * theta)
            d2q = 2 * (a * a - b * b) * np.cos(2 * theta)
            rho = a * b * q ** -0.5
            drho = -0.5 * a * b * q ** -1.5 * dq
            d2rho = a * b * (0.75 * q ** -2.5 * dq * dq - 0.5 * q ** -1.5 * d2q)
            return rho, drho, d2rho
        c0 = self.params[0]
        rho = np.full_like(theta, c0)
        drho = np.zeros_like(theta)
        d2rho = np.zeros_like(theta)
        coeffs = self.params[1:]
        for k in range(1, len(coeffs) // 2 + 1):
            ak, bk = coeffs[2 * k - 2], coeffs[2 * k - 1]
            ck, sk = np.cos(k * theta), np.sin(k * theta)
            rho = rho + ak * ck + bk * sk
            drho = drho + k * (-ak * sk + bk * ck)
            d2rho = d2rho - k * k * (ak * ck + bk * sk)
        return rho, drho, d2rho

    def curvature_at(self, theta):
        rho, d1, d2 = self.radius(theta)
        return (rho * rho + 2 * d1 * d1 - rho * d2) / (rho * rho + d1 * d1) ** 1.5


@dataclass(frozen=True)
class BoundaryNode:
    position: tuple
    tangent_angle: float
    normal: tuple
    curvature: Optional[float]
    support: float
    arc_weight: float
    arclength: float


@dataclass(frozen=True, eq=False)
class Boundary:
    """Boundary nodes stored column-wise (counter-clockwise order)."""

    domain: DomainSpec
    theta: np.ndarray  # polar angle (smooth) or edge parameter (rectangle)
    points: np.ndarray  # (m, 2)
    normals: np.ndarray  # (m, 2), outward unit
    tangent_angle: np.ndarray
    curvature: Optional[np.ndarray]  # None on rectangles
    support: np.ndarray  # x . nu
    weights: np.ndarray  # arc-length quadrature weights
    arclength: np.ndarray
    edge: Optional[np.ndarray] = None  # rectangle edge index 0..3

    def __len__(self):
        return len(self.weights)

    def __getitem__(self, i) -> BoundaryNode:
        kappa = None if self.curvature is None else float(self.curvature[i])
        return BoundaryNode(
            position=tuple(self.points[i]),
            tangent_angle=float(self.tangent_angle[i]),
            normal=tuple(self.normals[i]),
            curvature=kappa,
            support=float(self.support[i]),
            arc_weight=float(self.weights[i]),
            arclength=float(self.arclength[i]),
        )

    def __iter__(self) -> Iterator[BoundaryNode]:
        for i in range(len(self)):
            yield self[i]

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    @property
    def perimeter(self) -> float:
        return float(self.weights.sum())

    def require_curvature(self) -> np.ndarray:
        if self.curvature is None:
            raise BoundaryConditionError(
                f"{self.domain.label()} has corners; curvature-dependent quantities are undefined"
            )
        return self.curvature


def polar_boundary(domain: DomainSpec, theta: np.ndarray) -> Boundary:
    """Boundary data of a smooth domain at the given polar angles."""
    rho, d1, d2 = domain.radius(theta)
    bad = np.flatnonzero(rho <= 0)
    if bad.size:
        raise DomainError(f"radius function is not positive at node {bad[0]}", node_index=int(bad[0]))
    c, s = np.cos(theta), np.sin(theta)
    points = np.column_stack([rho * c, rho * s])
    tx = d1 * c - rho * s
    ty = d1 * s + rho * c
    speed = np.hypot(tx, ty)
    normals = np.column_stack([ty / speed, -tx / speed])
    support = np.einsum("ij,ij->i", points, normals)
    bad = np.flatnonzero(support <= 0)
    if bad.size:
        raise DomainError(f"domain is not star-shaped about the origin at node {bad[0]}",
                          node_index=int(bad[0]))
    kappa = (rho * rho + 2 * d1 * d1 - rho * d2) / speed**3
    dtheta = 2 * np.pi / len(theta)
    weights = speed * dtheta
    arclength = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * dtheta)])
    return Boundary(
        domain=domain,
        theta=theta,
        points=points,
        normals=normals,
        tangent_angle=np.arctan2(ty, tx),
        curvature=kappa,
        support=support,
        weights=weights,
        arclength=arclength,
    )


def _rectangle_boundary(domain: DomainSpec, m: int) -> Boundary:
    a, b = domain.params
    per_edge = max(m // 4, 4)
    xg, wg = np.polynomial.legendre.leggauss(per_edge)
    t = 0.5 * (xg + 1.0)  # (0, 1)
    w = 0.5 * wg
    # counter-clockwise: bottom, right, top, left
    corners = np.array([[-a / 2, -b / 2], [a / 2, -b / 2], [a / 2, b / 2], [-a / 2, b / 2]])
    normals_edge = np.array([[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]])
    lengths = np.array([a, b, a, b])
    pts, nrm, wts, arc, par, edge, ang = [], [], [], [], [], [], []
    offset = 0.0
    for e in range(4):
        p0, p1 = corners[e], corners[(e + 1) % 4]
        pts.append(p0 + np.outer(t, p1 - p0))
        nrm.append(np.tile(normals_edge[e], (per_edge, 1)))
        wts.append(w * lengths[e])
        arc.append(offset + t * lengths[e])
        par.append(e + t)
        edge.append(np.full(per_edge, e))
        d = p1 - p0
        ang.append(np.full(per_edge, math.atan2(d[1], d[0])))
        offset += lengths[e]
    points = np.vstack(pts)
    normals = np.vstack(nrm)
    return Boundary(
        domain=domain,
        theta=np.concatenate(par),
        points=points,
        normals=normals,
        tangent_angle=np.concatenate(ang),
        curvature=None,
        support=np.einsum("ij,ij->i", points, normals),
        weights=np.concatenate(wts),
        arclength=np.concatenate(arc),
        edge=np.concatenate(edge),
    )


def build_boundary(domain: DomainSpec, m: int) -> Boundary:
    """Place ``m`` boundary nodes counter-clockwise on ``domain``.

    Smooth domains use equispaced polar angles and analytic derivatives of
    the radius function; rectangles use ``m // 4`` Gauss points per edge
    (corners excluded, curvature absent).
    """
    if m < 16:
        raise DomainError(f"need at least 16 boundary nodes, got {m}")
    if domain.kind == "rectangle":
        return _rectangle_boundary(domain, m)
    theta = 2 * np.pi * np.arange(m) / m
    return polar_boundary(domain, theta)


# -- supported boundary coefficient --------------------------------------

def parallel_c0_derivative(kappa, mu):
    """Normal derivative of ``(1 - mu) * kappa`` under the distance-function extension.

    Inside the domain at distance ``t`` the parallel curve has curvature
    ``kappa / (1 - t kappa)``; differentiating along the outward normal
    (``d/dnu = -d/dt``) at ``t = 0`` gives ``-(1 - mu) kappa**2``.
    """
    return -(1.0 - mu) * np.asarray(kappa) ** 2


@dataclass(frozen=True, eq=False)
class C0Field:
    mu: float
    values: np.ndarray
    normal_derivative: np.ndarray
    extension: str = "parallel"
    boundary: Optional[Boundary] = field(default=None, repr=False)


def extend_c0(
    domain: DomainSpec,
    mu: float,
    boundary: Optional[Boundary] = None,
    m: int = 128,
    extension="parallel",
    band: float = 1e-3,
) -> C0Field:
    """Supported-edge coefficient ``c0 = (1 - mu) kappa`` and its normal derivative.

    ``extension`` is ``"parallel"`` (distance-function extension) or a
    callable ``f(boundary, mu) -> array`` supplying ``d c0 / d nu`` directly.
    ``band`` is the inward depth over which the parallel extension must stay
    regular (``1 - band * kappa > 0``).
    """
    if not 0.0 < mu < 1.0:
        raise ValueError(f"Poisson ratio must lie in (0, 1), got {mu}")
    if not domain.smooth:
        raise BoundaryConditionError("c0 needs curvature; rectangles have corners")
    if boundary is None:
        boundary = build_boundary(domain, m)
    kappa = boundary.require_curvature()
    values = (1.0 - mu) * kappa
    if extension == "parallel":
        worst = np.flatnonzero(1.0 - band * kappa <= 0)
        if worst.size:
            raise DomainError(
                f"parallel-curve extension singular within band {band} at node {worst[0]}; reduce band width",
                node_index=int(worst[0]),
            )
        dnu = parallel_c0_derivative(kappa, mu)
        name = "parallel"
    elif callable(extension):
        dnu = np.asarray(extension(boundary, mu), dtype=float)
        name = getattr(extension, "__name__", "custom")
    else:
        raise ValueError(f"unknown c0 extension {extension!r}")
    return C0Field(mu=mu, values=values, normal_derivative=dnu, extension=name, boundary=boundary)


def parallel_c0_profile(kappa: float, mu: float, t):
    """``c0`` on the parallel curve at inward distance ``t``."""
    t = np.asarray(t, dtype=float)
    return (1.0 - mu) * kappa / (1.0 - t * kappa)


# -- interior grids -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PolarGrid:
    """Boundary-fitted grid ``x = s * rho(theta) * (cos theta, sin theta)``.

    Radial nodes are staggered, ``s_i = (i + 1/2) h`` with ``h = 1/(N - 1/2)``
    so the last node sits on the boundary and none on the axis.  Angular
    nodes are equispaced (``M`` even).
    """

    domain: DomainSpec
    n_radial: int
    n_theta: int

    def __post_init__(self):
        if not self.domain.smooth:
            raise DomainError("polar grids need a smooth star-shaped domain")
        if self.n_radial < 6:
            raise DomainError("need at least 6 radial nodes")
        if self.n_theta < 4 or self.n_theta % 2:
            raise DomainError("angular node count must be even and >= 4")

    @property
    def h(self) -> float:
        return 1.0 / (self.n_radial - 0.5)

    @property
    def s(self) -> np.ndarray:
        return (np.arange(self.n_radial) + 0.5) * self.h

    @property
    def theta(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.n_theta) / self.n_theta

    @property
    def shape(self):
        return (self.n_radial, self.n_theta)

    @property
    def n_interior(self) -> int:
        return (self.n_radial - 1) * self.n_theta

    def boundary(self) -> Boundary:
        return polar_boundary(self.domain, self.theta)

    def coordinates(self):
        rho, _, _ = self.domain.radius(self.theta)
        r = np.outer(self.s, rho)
        return r * np.cos(self.theta), r * np.sin(self.theta)

    def weights(self) -> np.ndarray:
        """Area quadrature weights on all nodes (boundary ring gets the half cell)."""
        rho, _, _ = self.domain.radius(self.theta)
        ds = np.full(self.n_radial, self.h)
        ds[-1] = 0.5 * self.h
        return np.outer(self.s * ds, rho * rho) * (2 * np.pi / self.n_theta)

    def integrate(self, values) -> float:
        return float(np.sum(self.weights() * values))

    def metric(self, s=None):
        """First and second Cartesian derivatives of the coordinates ``(s, theta)``.

        Returns a dict of arrays of shape ``(len(s), M)``.
        """
        s = self.s if s is None else np.atleast_1d(np.asarray(s, dtype=float))
        th = self.theta
        rho, d1, d2 = self.domain.radius(th)
        phi = 1.0 / rho
        dphi = -d1 / rho**2
        d2phi = -d2 / rho**2 + 2 * d1 * d1 / rho**3
        c, sn = np.cos(th), np.sin(th)
        r = np.outer(s, rho)
        rx, ry = c, sn
        rxx, ryy, rxy = sn * sn / r, c * c / r, -sn * c / r
        tx, ty = -sn / r, c / r
        txx, tyy, txy = 2 * sn * c / r**2, -2 * sn * c / r**2, (sn * sn - c * c) / r**2
        sx = rx * phi + r * dphi * tx
        sy = ry * phi + r * dphi * ty
        sxx = rxx * phi + 2 * rx * dphi * tx + r * d2phi * tx * tx + r * dphi * txx
        syy = ryy * phi + 2 * ry * dphi * ty + r * d2phi * ty * ty + r * dphi * tyy
        sxy = rxy * phi + dphi * (rx * ty + ry * tx) + r * d2phi * tx * ty + r * dphi * txy
        return dict(sx=sx, sy=sy, tx=tx, ty=ty, sxx=sxx, syy=syy, sxy=sxy,
                    txx=txx, tyy=tyy, txy=txy)


@dataclass(frozen=True, eq=False)
class RectGrid:
    """Tensor grid with ``nx`` by ``ny`` cells on a centered rectangle."""

    domain: DomainSpec
    nx: int
    ny: int

    def __post_init__(self):
        if self.domain.kind != "rectangle":
            raise DomainError("RectGrid needs a rectangle domain")
        if min(self.nx, self.ny) < 4:
            raise DomainError("need at least 4 cells per direction")

    @property
    def hx(self) -> float:
        return self.domain.params[0] / self.nx

    @property
    def hy(self) -> float:
        return self.domain.params[1] / self.ny

    @property
    def x(self) -> np.ndarray:
        return -self.domain.params[0] / 2 + self.hx * np.arange(self.nx + 1)

    @property
    def y(self) -> np.ndarray:
        return -self.domain.params[1] / 2 + self.hy * np.arange(self.ny + 1)

    @property
    def shape(self):
        return (self.nx + 1, self.ny + 1)

    @property
    def n_interior(self) -> int:
        return (self.nx - 1) * (self.ny - 1)

    def weights(self) -> np.ndarray:
        wx = np.full(self.nx + 1, self.hx)
        wx[[0, -1]] *= 0.5
        wy = np.full(self.ny + 1, self.hy)
        wy[[0, -1]] *= 0.5
        return np.outer(wx, wy)

    def integrate(self, values) -> float:
        return float(np.sum(self.weights() * values))



def turning_number_residual(boundary: Boundary) -> float:
    """``sum(kappa * w) - 2 pi`` (zero for a closed convex curve)."""
    return boundary.integrate(boundary.require_curvature()) - 2 * np.pi

