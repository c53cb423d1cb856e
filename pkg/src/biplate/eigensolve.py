"""Lowest eigenpairs of the discrete pencil and the Rayleigh quotients.

Disks are solved one angular mode at a time with dense LAPACK; other
domains with ARPACK in shift-invert mode about zero.  Eigenfunctions are
normalized to ``int u^2 dOmega = 1`` and their sign fixed so that the first
non-negligible interior sample is positive.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .discretize import MAX_MODES, BCKind, DiscreteOperator
from .errors import BoundaryConditionError, SolverError

log = logging.getLogger(__name__)

SOLVER_TOL = 1e-8
DEGENERACY_GAP = 1e-6
IMAG_TOL = 1e-8


@dataclass(eq=False)
class EigenPair:
    """One eigenvalue with its eigenfunction sampled on the full grid.

    ``mode`` is ``(m, parity)`` for modal disk solutions (parity 0 for
    cosine, 1 for sine) and ``None`` otherwise.
    """

    value: float
    field: np.ndarray
    bc: BCKind
    operator: DiscreteOperator = field(repr=False)
    index: int = 0
    multiplicity_group: int = 0
    mode: Optional[tuple] = None
    residual: float = 0.0
    normalized: bool = True

    @property
    def interior(self) -> np.ndarray:
        return self.field.ravel()[self.operator.dof_map]

    @property
    def grid(self):
        return self.operator.grid

    def scaled(self, factor: float) -> "EigenPair":
        return EigenPair(self.value, self.field * factor, self.bc, self.operator, self.index,
                         self.multiplicity_group, self.mode, self.residual, normalized=False)


def backward_error(Ax, value, x, a_norm) -> float:
    """``|A x - alpha x| / ((|A| + |alpha|) |x|)``, the normwise backward error."""
    return float(np.linalg.norm(Ax - value * x) / ((a_norm + abs(value)) * np.linalg.norm(x)))


def _fix_normalization(op: DiscreteOperator, full: np.ndarray) -> np.ndarray:
    norm2 = op.grid.integrate(full**2)
    if norm2 <= 0:
        raise SolverError("eigenvector has zero norm")
    full = full / np.sqrt(norm2)
    flat = full.ravel()[op.dof_map]
    big = np.flatnonzero(np.abs(flat) > 1e-6 * np.max(np.abs(flat)))
    if flat[big[0]] < 0:
        full = -full
    return full


def _check_values(values, vectors_imag=None, context=""):
    values = np.asarray(values)
    if np.iscomplexobj(values):
        bad = np.abs(values.imag) > IMAG_TOL * np.maximum(np.abs(values.real), 1.0)
        if np.any(bad):
            log.warning("complex Ritz values discarded%s: %s", context, values[bad])
        values = values.real
    return values


def _modal_pairs(op: DiscreteOperator, k: int):
    grid = op.grid
    theta = grid.theta
    found = []  # (value, m, parity, radial)
    m = 0
    while True:
        mop = op.mode_operator(m)
        A = mop.weights[:, None] * mop.strong
        if op.bc.kind == "supported":
            vals, vecs = sla.eig(A, np.diag(mop.weights))
            vals = _check_values(vals, context=f" (mode {m})")
            vecs = vecs.real
        else:
            A = 0.5 * (A + A.T)
            vals, vecs = sla.eigh(A, np.diag(mop.weights))
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]
        if vals[0] <= 0:
            raise SolverError(f"non-positive Ritz value {vals[0]:.6g} in mode {m}: discretization bug")
        current = sorted(v for v, *_ in found)
        if len(current) >= k and vals[0] > current[k - 1] * (1 + 1e-9):
            break
        for j in range(min(k, len(vals))):
            for parity in ((0,) if m == 0 else (0, 1)):
                found.append((vals[j], m, parity, vecs[:, j], mop))
        m += 1
        if 2 * m >= grid.n_theta:
            raise SolverError(f"angular resolution {grid.n_theta} too coarse for {k} modes")
    found.sort(key=lambda t: (t[0], t[1], t[2]))
    pairs = []
    for value, m, parity, radial, mop in found[:k]:
        full_radial = np.append(radial, 0.0)
        ang = np.cos(m * theta) if parity == 0 else np.sin(m * theta)
        full = np.outer(full_radial, ang)
        res = backward_error(mop.strong @ radial, value, radial, np.linalg.norm(mop.strong, 1))
        pairs.append((value, full, (m, parity), res))
    return pairs


def _sparse_pairs(op: DiscreteOperator, k: int):
    A = op.strong
    n = A.shape[0]
    nev = min(k + 4, n - 2)
    v0 = np.ones(n) / np.sqrt(n)
    try:
        vals, vecs = spla.eigs(A, k=nev, sigma=0.0, which="LM", v0=v0, tol=1e-13, maxiter=5000)
    except spla.ArpackNoConvergence as exc:
        raise SolverError(f"ARPACK did not converge: {exc}", iterations=5000) from None
    keep = np.abs(vals.imag) <= IMAG_TOL * np.maximum(np.abs(vals.real), 1.0)
    if not np.all(keep):
        log.warning("complex Ritz values discarded: %s", vals[~keep])
    vals, vecs = vals.real[keep], vecs[:, keep]
    order = np.argsort(vals)
    vals, vecs = vals[order], vecs[:, order]
    if vals[0] <= 0:
        raise SolverError(f"non-positive Ritz value {vals[0]:.6g}: discretization bug")
    a_norm = spla.norm(A, 1)
    pairs = []
    for j in range(min(k, len(vals))):
        vec = vecs[:, j]
        # fix complex phase from ARPACK
        vec = vec * np.exp(-1j * np.angle(vec[np.argmax(np.abs(vec))]))
        vec = vec.real
        full = op.full_field(vec)
        res = backward_error(A @ vec, vals[j], vec, a_norm)
        pairs.append((vals[j], full, None, res))
    return pairs


def solve_lowest(op: DiscreteOperator, k: int = 1, tol: float = SOLVER_TOL) -> list:
    """Lowest ``k`` eigenpairs in ascending order, degenerate ones grouped.

    Ties are broken by angular mode index on disks.
    """
    if not 1 <= k <= MAX_MODES:
        raise ValueError(f"k must lie in 1..{MAX_MODES}, got {k}")
    raw = _modal_pairs(op, k) if op.method == "modal" else _sparse_pairs(op, k)
    pairs = []
    group = 0
    for idx, (value, full, mode, res) in enumerate(raw):
        if value <= 0:
            raise SolverError(f"non-positive eigenvalue {value}")
        if res > tol:
            raise SolverError(f"eigen residual {res:.3e} exceeds tolerance {tol:.1e} for pair {idx}")
        if idx > 0 and abs(value - pairs[-1].value) > DEGENERACY_GAP * abs(value):
            group += 1
        full = _fix_normalization(op, full)
        pairs.append(EigenPair(value=float(value), field=full, bc=op.bc, operator=op, index=idx,
                               multiplicity_group=group, mode=mode, residual=float(res)))
    return pairs


# -- Rayleigh quotients ---------------------------------------------------

def volume_laplacian(pair: EigenPair) -> np.ndarray:
    """``Lap u`` on the full grid: discrete ``sigma`` inside, its boundary value on the edge."""
    from .traces import sigma_field

    return sigma_field(pair)


def _norm2(pair):
    n2 = pair.grid.integrate(pair.field**2)
    if not np.isfinite(n2) or n2 <= 1e-300:
        raise ValueError("zero field is not an eigenfunction")
    return n2


def rayleigh_clamped_hinged(pair: EigenPair) -> float:
    """``int (Lap u)^2 / int u^2`` for clamped or hinged eigenfunctions."""
    if pair.bc.kind not in ("dirichlet", "navier"):
        raise BoundaryConditionError("this quotient applies to clamped or hinged edges only")
    n2 = _norm2(pair)
    lap = volume_laplacian(pair)
    return pair.grid.integrate(lap**2) / n2


def rayleigh_supported(pair: EigenPair, c0=None) -> float:
    """``(int (Lap W)^2 - oint c0 W_nu^2) / int W^2`` for supported eigenfunctions."""
    from .traces import extract_trace

    if pair.bc.kind != "supported":
        raise BoundaryConditionError("this quotient applies to supported edges only")
    if pair.operator.boundary is None:
        raise BoundaryConditionError("supported quotient needs curvature (smooth boundary)")
    n2 = _norm2(pair)
    trace = extract_trace(pair)
    c0_values = trace.boundary.curvature * (1 - pair.bc.mu) if c0 is None else c0.values
    lap = volume_laplacian(pair)
    boundary_term = trace.boundary.integrate(c0_values * trace.u_nu**2)
    return (pair.grid.integrate(lap**2) - boundary_term) / n2


# -- mode tracking --------------------------------------------------------

@dataclass(frozen=True)
class ModePairing:
    """``mapping[i]`` is the index in ``next`` of the group containing ``prev[i]``."""

    mapping: tuple
    overlaps: tuple
    ambiguous: bool


def _groups(pairs):
    out = {}
    for i, p in enumerate(pairs):
        out.setdefault(p.multiplicity_group, []).append(i)
    return [out[g] for g in sorted(out)]


def _subspace_overlap(pairs_a, idx_a, pairs_b, idx_b, weights):
    Ua = np.column_stack([pairs_a[i].interior for i in idx_a])
    Ub = np.column_stack([pairs_b[i].interior for i in idx_b])
    G = Ua.T @ (weights[:, None] * Ub)
    sv = np.linalg.svd(G, compute_uv=False)
    # mean squared cosine of the principal angles of the smaller subspace
    return float(np.sqrt(np.sum(sv**2) / min(len(idx_a), len(idx_b))))


def match_modes(prev: list, nxt: list, ambiguity: float = 1e-3) -> ModePairing:
    """Pair eigenfunction groups across a parameter step by mass-weighted overlap.

    Degenerate groups are matched as subspaces.  The pairing is ambiguous
    when a group's best and second-best overlaps differ by less than
    ``ambiguity``.
    """
    if not prev or not nxt:
        raise ValueError("empty eigenpair list")
    weights = prev[0].operator.mass
    ga, gb = _groups(prev), _groups(nxt)
    score = np.array([[_subspace_overlap(prev, a, nxt, b, weights) for b in gb] for a in ga])
    mapping = [None] * len(prev)
    overlaps = [0.0] * len(prev)
    ambiguous = False
    taken = set()
    for gi in np.argsort(-score.max(axis=1)):
        order = np.argsort(-score[gi])
        choice = next((c for c in order if c not in taken), order[0])
        taken.add(choice)
        if len(order) > 1 and score[gi, order[0]] - score[gi, order[1]] < ambiguity:
            ambiguous = True
        for i in ga[gi]:
            mapping[i] = gb[choice][0]
            overlaps[i] = float(score[gi, choice])
    return ModePairing(mapping=tuple(mapping), overlaps=tuple(overlaps), ambiguous=ambiguous)
