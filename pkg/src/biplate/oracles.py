"""Semi-analytic eigenpairs for disks and rectangles.

Bessel functions are evaluated here rather than borrowed: power series for
small arguments, Miller's backward recurrence (normalized by
``J_0 + 2 sum J_2k = 1``) for moderate ones, and the all-positive series for
``I_m``.  Accuracy is ~1e-14 absolute for ``x < 30``, which is all the disk
oracles need.  Roots are bracketed on a fixed scan and bisected.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .discretize import BCKind
from .geometry import Boundary, DomainSpec, build_boundary

SERIES_CUTOFF = 5.0


def _series_j(m: int, x: np.ndarray) -> np.ndarray:
    half = 0.5 * x
    term = half**m / math.factorial(m)
    total = term.copy()
    q = -half * half
    for k in range(1, 80):
        term = term * q / (k * (k + m))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1e-300)):
            break
    return total


def _miller_j(orders: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``J_n(x)`` for every ``n`` in ``orders`` (non-negative), ``x > 0``."""
    top = int(max(orders.max(), x.max())) + 40
    top += top % 2
    jp1 = np.zeros_like(x)
    j = np.full_like(x, 1e-30)
    out = np.zeros((len(orders), len(x)))
    norm = np.zeros_like(x)
    want = {int(n): i for i, n in enumerate(orders)}
    for n in range(top, 0, -1):
        jm1 = (2.0 * n / x) * j - jp1
        jp1, j = j, jm1
        # j now holds J_{n-1}
        if n - 1 in want:
            out[want[n - 1]] = j
        if (n - 1) % 2 == 0 and n - 1 > 0:
            norm += 2.0 * j
        big = np.abs(j) > 1e250
        if np.any(big):
            scale = np.where(big, 1e-250, 1.0)
            j, jp1, norm, out = j * scale, jp1 * scale, norm * scale, out * scale
    norm += j
    return out / norm


def bessel_j(m: int, x) -> np.ndarray:
    """Bessel function of the first kind ``J_m(x)`` for integer ``m``."""
    x = np.asarray(x, dtype=float)
    sign = 1.0
    if m < 0:
        m = -m
        sign = (-1.0) ** m
    flat = np.atleast_1d(x).ravel()
    neg = flat < 0
    ax = np.abs(flat)
    out = np.empty_like(ax)
    small = ax <= SERIES_CUTOFF
    if np.any(small):
        out[small] = _series_j(m, ax[small])
    if np.any(~small):
        out[~small] = _miller_j(np.array([m]), ax[~small])[0]
    out = np.where(neg, (-1.0) ** m * out, out)
    return (sign * out).reshape(x.shape)


def bessel_i(m: int, x) -> np.ndarray:
    """Modified Bessel function ``I_m(x)`` for integer ``m``."""
    x = np.asarray(x, dtype=float)
    m = abs(m)
    half = 0.5 * x
    term = half**m / math.factorial(m)
    total = np.array(term, dtype=float)
    q = half * half
    for k in range(1, 200):
        term = term * q / (k * (k + m))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.abs(total)):
            break
    return total


def bessel_j_derivative(m: int, x, order: int = 1):
    """Derivatives of ``J_m`` from the three-term recurrences."""
    if order == 0:
        return bessel_j(m, x)
    if order == 1:
        return 0.5 * (bessel_j(m - 1, x) - bessel_j(m + 1, x))
    if order == 2:
        return 0.25 * (bessel_j(m - 2, x) - 2 * bessel_j(m, x) + bessel_j(m + 2, x))
    if order == 3:
        return 0.125 * (bessel_j(m - 3, x) - 3 * bessel_j(m - 1, x)
                        + 3 * bessel_j(m + 1, x) - bessel_j(m + 3, x))
    raise ValueError("order must be 0..3")


def bessel_i_derivative(m: int, x, order: int = 1):
    if order == 0:
        return bessel_i(m, x)
    if order == 1:
        return 0.5 * (bessel_i(m - 1, x) + bessel_i(m + 1, x))
    if order == 2:
        return 0.25 * (bessel_i(m - 2, x) + 2 * bessel_i(m, x) + bessel_i(m + 2, x))
    if order == 3:
        return 0.125 * (bessel_i(m - 3, x) + 3 * bessel_i(m - 1, x)
                        + 3 * bessel_i(m + 1, x) + bessel_i(m + 3, x))
    raise ValueError("order must be 0..3")


# -- root finding ---------------------------------------------------------

def bisect(f, a: float, b: float, tol: float = 1e-12, maxiter: int = 200) -> float:
    fa, fb = f(a), f(b)
    if fa == 0:
        return a
    if fb == 0:
        return b
    if fa * fb > 0:
        raise ValueError(f"root not bracketed on [{a}, {b}]")
    for _ in range(maxiter):
        mid = 0.5 * (a + b)
        fm = f(mid)
        if fm == 0 or 0.5 * (b - a) < tol:
            return mid
        if fa * fm < 0:
            b, fb = mid, fm
        else:
            a, fa = mid, fm
    return 0.5 * (a + b)


def first_roots(f, n: int, start: float = 0.05, step: float = 0.05, limit: float = 200.0) -> list:
    """Up to ``n`` positive sign changes of ``f`` below ``limit``, in one scan."""
    roots = []
    a, fa = start, f(start)
    while a < limit and len(roots) < n:
        b = a + step
        fb = f(b)
        if fa == 0 or fa * fb < 0:
            roots.append(bisect(f, a, b))
        a, fa = b, fb
    return roots


def nth_root(f, n: int, start: float = 0.05, step: float = 0.05, limit: float = 200.0) -> float:
    """The ``n``-th positive sign change of ``f`` found by scanning, then bisected."""
    if n < 1:
        raise ValueError("root index starts at 1")
    roots = first_roots(f, n, start, step, limit)
    if len(roots) < n:
        raise ValueError(f"only {len(roots)} roots below {limit}; widen the bracket")
    return roots[-1]


def bessel_j_zero(m: int, n: int) -> float:
    """``j_{m,n}``, the ``n``-th positive zero of ``J_m``."""
    return nth_root(lambda x: float(bessel_j(m, x)), n, start=max(0.05, 0.5 * m))


def _clamped_determinant(m):
    def f(k):
        return float(bessel_j(m, k) * bessel_i_derivative(m, k) - bessel_i(m, k) * bessel_j_derivative(m, k))
    return f


def _supported_determinant(m, mu):
    def f(k):
        J, I = bessel_j(m, k), bessel_i(m, k)
        dJ, dI = bessel_j_derivative(m, k), bessel_i_derivative(m, k)
        return float(2 * k * J * I - (1.0 - mu) * (J * dI - I * dJ))
    return f


def clamped_disk_root(m: int, n: int) -> float:
    return nth_root(_clamped_determinant(m), n, start=0.1)


def supported_disk_root(m: int, mu: float, n: int) -> float:
    if not 0.0 < mu < 1.0:
        raise ValueError("Poisson ratio must lie in (0, 1)")
    return nth_root(_supported_determinant(m, mu), n, start=0.1)


# -- eigenvalues ----------------------------------------------------------

def disk_navier_eigenvalue(m: int, n: int, R: float = 1.0) -> float:
    """Hinged disk: ``(j_{m,n} / R)**4``."""
    _check_mode(m, n, R)
    return (bessel_j_zero(m, n) / R) ** 4


def disk_dirichlet_eigenvalue(m: int, n: int, R: float = 1.0) -> float:
    """Clamped disk: ``(k / R)**4`` with ``J_m I_m' - I_m J_m' = 0``."""
    _check_mode(m, n, R)
    return (clamped_disk_root(m, n) / R) ** 4


def disk_supported_eigenvalue(m: int, mu: float, n: int, R: float = 1.0) -> float:
    """Simply supported disk, ``W(R) = 0`` and ``Lap W = (1 - mu) W_r / R``."""
    _check_mode(m, n, R)
    return (supported_disk_root(m, mu, n) / R) ** 4


def rectangle_navier_eigenvalue(a: float, b: float, m: int, n: int) -> float:
    if a <= 0 or b <= 0 or m < 1 or n < 1:
        raise ValueError("need a, b > 0 and m, n >= 1")
    return ((m * math.pi / a) ** 2 + (n * math.pi / b) ** 2) ** 2


def _check_mode(m, n, R):
    if m < 0 or n < 1 or R <= 0:
        raise ValueError(f"invalid mode (m={m}, n={n}, R={R})")


def _disk_root_function(bc: str, m: int, mu):
    if bc == "navier":
        return (lambda x: float(bessel_j(m, x))), max(0.05, 0.5 * m)
    if bc == "dirichlet":
        return _clamped_determinant(m), 0.1
    if bc == "supported":
        if mu is None or not 0.0 < mu < 1.0:
            raise ValueError("Poisson ratio must lie in (0, 1)")
        return _supported_determinant(m, mu), 0.1
    raise ValueError(f"unknown boundary condition {bc!r}")


def disk_spectrum(bc: str, R: float = 1.0, mu: float = None, count: int = 10, m_max: int = 12):
    """Lowest ``count`` oracle values as ``(value, m, n)``, doublets listed twice."""
    if R <= 0 or count < 1:
        raise ValueError("need R > 0 and count >= 1")
    rows = []
    limit = 200.0
    for m in range(m_max + 1):
        f, start = _disk_root_function(bc, m, mu)
        if start >= limit:
            break
        roots = first_roots(f, count, start=start, limit=limit)
        if not roots:
            break
        for n, k in enumerate(roots, start=1):
            rows.extend([((k / R) ** 4, m, n)] * (1 if m == 0 else 2))
        rows.sort()
        if len(rows) >= count:
            # roots grow with m, so higher orders only matter below the current cut
            limit = min(limit, rows[count - 1][0] ** 0.25 * R + 1e-9)
    return rows[:count]


def rectangle_navier_spectrum(a: float, b: float, count: int = 10):
    rows = [(rectangle_navier_eigenvalue(a, b, m, n), m, n)
            for m in range(1, count + 2) for n in range(1, count + 2)]
    rows.sort()
    return rows[:count]


# -- oracle eigenfunctions -------------------------------------------------

@dataclass(frozen=True)
class DiskMode:
    """``u = (A J_m(k r) + B I_m(k r)) cos(m theta + phase)`` on a disk of radius ``R``."""

    bc: str
    m: int
    k: float  # in units of 1/R
    A: float
    B: float
    R: float = 1.0
    phase: float = 0.0
    mu: float = None

    @property
    def eigenvalue(self) -> float:
        return self.k**4

    @classmethod
    def build(cls, bc, m=0, n=1, R=1.0, mu=None, phase=0.0):
        if bc == "navier":
            k1 = bessel_j_zero(m, n)
            A, B = 1.0, 0.0
        elif bc == "dirichlet":
            k1 = clamped_disk_root(m, n)
            A, B = float(bessel_i(m, k1)), -float(bessel_j(m, k1))
        elif bc == "supported":
            k1 = supported_disk_root(m, mu, n)
            A, B = float(bessel_i(m, k1)), -float(bessel_j(m, k1))
        else:
            raise ValueError(f"unknown boundary condition {bc!r}")
        return cls(bc=bc, m=m, k=k1 / R, A=A, B=B, R=R, phase=phase, mu=mu)

    def radial(self, r, order=0):
        """``d^order/dr^order`` of the radial profile."""
        kr = self.k * np.asarray(r, dtype=float)
        scale = self.k**order
        return scale * (self.A * bessel_j_derivative(self.m, kr, order)
                        + self.B * bessel_i_derivative(self.m, kr, order))

    def radial_laplacian(self, r, order=0):
        """Profile of ``Lap u`` (``Lap J_m(kr) = -k^2 J_m``, ``Lap I_m(kr) = k^2 I_m``)."""
        kr = self.k * np.asarray(r, dtype=float)
        scale = self.k ** (order + 2)
        return scale * (-self.A * bessel_j_derivative(self.m, kr, order)
                        + self.B * bessel_i_derivative(self.m, kr, order))

    def angular(self, theta, order=0):
        arg = self.m * np.asarray(theta) + self.phase
        return [np.cos(arg), -self.m * np.sin(arg), -self.m**2 * np.cos(arg)][order]

    def __call__(self, x, y):
        r, th = np.hypot(x, y), np.arctan2(y, x)
        return self.radial(r) * self.angular(th)

    def norm_squared(self, n_quad: int = 200) -> float:
        """``int u^2 dOmega`` by Gauss-Legendre in ``r`` (exact in ``theta``)."""
        xg, wg = np.polynomial.legendre.leggauss(n_quad)
        r = 0.5 * self.R * (xg + 1.0)
        w = 0.5 * self.R * wg
        ang = 2 * np.pi if self.m == 0 else np.pi
        return float(ang * np.sum(w * r * self.radial(r) ** 2))


@dataclass(frozen=True)
class RectangleMode:
    """``sin(m pi (x + a/2) / a) sin(n pi (y + b/2) / b)`` on a centered rectangle."""

    a: float
    b: float
    m: int = 1
    n: int = 1

    @property
    def eigenvalue(self) -> float:
        return rectangle_navier_eigenvalue(self.a, self.b, self.m, self.n)

    @property
    def wavenumbers(self):
        return self.m * math.pi / self.a, self.n * math.pi / self.b

    def __call__(self, x, y):
        p, q = self.wavenumbers
        return np.sin(p * (x + self.a / 2)) * np.sin(q * (y + self.b / 2))

    def gradient(self, x, y):
        p, q = self.wavenumbers
        X, Y = p * (x + self.a / 2), q * (y + self.b / 2)
        return p * np.cos(X) * np.sin(Y), q * np.sin(X) * np.cos(Y)

    def hessian(self, x, y):
        p, q = self.wavenumbers
        X, Y = p * (x + self.a / 2), q * (y + self.b / 2)
        return (-p * p * np.sin(X) * np.sin(Y), p * q * np.cos(X) * np.cos(Y),
                -q * q * np.sin(X) * np.sin(Y))

    def laplacian_gradient(self, x, y):
        p, q = self.wavenumbers
        c = -(p * p + q * q)
        gx, gy = self.gradient(x, y)
        return c * gx, c * gy

    def norm_squared(self) -> float:
        return self.a * self.b / 4.0


def oracle_trace(mode, domain: DomainSpec = None, boundary: Boundary = None, m: int = 256):
    """Analytic boundary trace of an oracle eigenfunction.

    Returns a :class:`biplate.traces.BoundaryTrace` with
    ``provenance='analytic-oracle'`` and ``norm_squared`` set from
    quadrature of the analytic profile.
    """
    from .traces import BoundaryTrace

    if domain is None:
        domain = DomainSpec.disk(mode.R) if isinstance(mode, DiskMode) else DomainSpec.rectangle(mode.a, mode.b)
    if boundary is None:
        boundary = build_boundary(domain, m)
    x, y = boundary.points[:, 0], boundary.points[:, 1]
    nx, ny = boundary.normals[:, 0], boundary.normals[:, 1]
    if isinstance(mode, DiskMode):
        th = np.arctan2(y, x)
        R = mode.R
        ang = mode.angular(th)
        u = mode.radial(R) * ang
        u_nu = mode.radial(R, 1) * ang
        u_nunu = mode.radial(R, 2) * ang
        lap = mode.radial_laplacian(R) * ang
        dlap = mode.radial_laplacian(R, 1) * ang
        x_grad = R * u_nu
        x_hess_nu = R * u_nunu
        kappa = boundary.curvature
        bc = {"navier": BCKind.navier(), "dirichlet": BCKind.dirichlet()}.get(mode.bc)
        c0 = None
        if mode.bc == "supported":
            bc = BCKind.supported(mode.mu)
            c0 = (1.0 - mode.mu) * kappa
        u_nu_s = _tangential_derivative(boundary, u_nu)
        alt = u_nunu + kappa * u_nu
    else:
        u = mode(x, y)
        gx, gy = mode.gradient(x, y)
        hxx, hxy, hyy = mode.hessian(x, y)
        lx, ly = mode.laplacian_gradient(x, y)
        u_nu = gx * nx + gy * ny
        u_nunu = nx * nx * hxx + 2 * nx * ny * hxy + ny * ny * hyy
        lap = hxx + hyy
        dlap = lx * nx + ly * ny
        x_grad = x * gx + y * gy
        x_hess_nu = (x * hxx + y * hxy) * nx + (x * hxy + y * hyy) * ny
        tx, ty = -ny, nx
        u_nu_s = (tx * hxx + ty * hxy) * nx + (tx * hxy + ty * hyy) * ny
        alt = u_nunu
        bc, c0 = BCKind.navier(), None
    return BoundaryTrace(
        boundary=boundary,
        u=np.asarray(u, dtype=float),
        u_nu=np.asarray(u_nu, dtype=float),
        u_nunu=np.asarray(u_nunu, dtype=float),
        laplacian=np.asarray(lap, dtype=float),
        laplacian_nu=np.asarray(dlap, dtype=float),
        x_grad=np.asarray(x_grad, dtype=float),
        u_nu_s=np.asarray(u_nu_s, dtype=float),
        laplacian_alt=np.asarray(alt, dtype=float),
        norm_squared=mode.norm_squared(),
        eigenvalue=mode.eigenvalue,
        provenance="analytic-oracle",
        bc=bc,
        c0=c0,
        x_hess_nu=np.asarray(x_hess_nu, dtype=float),
    )


def _tangential_derivative(boundary: Boundary, values):
    """``d/ds`` of a periodic boundary field sampled at equispaced polar angles."""
    m = len(values)
    k = np.fft.fftfreq(m, d=1.0 / m)
    if m % 2 == 0:
        k[m // 2] = 0.0
    dtheta = np.real(np.fft.ifft(1j * k * np.fft.fft(values)))
    speed = boundary.weights / (2 * np.pi / m)
    return dtheta / speed
