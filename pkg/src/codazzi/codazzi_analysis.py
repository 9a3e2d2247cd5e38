"""Codazzi residuals, generalized eigenstructure of T against g, and the
Codazzi/Ricci commutation check."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chart import DiffScheme, Grid, ScalarField, as_batch, derivative_stack, unbatch
from .curvature import christoffel_from_stack, covariant_derivative_sym2
from .errors import DegenerateMetricError
from .report import CheckResult, residual_row

CLUSTER_ATOL = 1e-6
CLUSTER_RTOL = 1e-8


@dataclass(frozen=True)
class CodazziResidual:
    points: np.ndarray
    tensor: np.ndarray  # [..., k, i, j] = nabla_k T_ij - nabla_j T_ik
    norm: np.ndarray


def codazzi_from_nabla(nabla):
    """``C_kij = nabla_k T_ij - nabla_j T_ik`` from ``nabla[..., k, i, j]``."""
    return nabla - np.swapaxes(nabla, -3, -1)


def codazzi_deviation(T, g, p, scheme: DiffScheme | None = None) -> CodazziResidual:
    pts, single = as_batch(p, g.dim)
    gamma = christoffel_from_stack(derivative_stack(g, pts, 1, scheme))
    t_stack = derivative_stack(T, pts, 1, scheme)
    c = codazzi_from_nabla(covariant_derivative_sym2(t_stack[0], t_stack[1], gamma))
    norm = np.abs(c).reshape(len(pts), -1).max(axis=-1)
    return CodazziResidual(unbatch(pts, single), unbatch(c, single), unbatch(norm, single))


def _points_of(grid):
    return grid.points if isinstance(grid, Grid) else np.atleast_2d(np.asarray(grid, dtype=float))


def max_codazzi_residual(T, g, grid, scheme=None, tolerance=1e-6, check_id="codazzi",
                         anchor="(nabla_X T)(Y,Z) = (nabla_Y T)(X,Z)", relation="<=") -> CheckResult:
    pts = _points_of(grid)
    res = codazzi_deviation(T, g, pts, scheme)
    return residual_row(check_id, res.norm, pts, tolerance, anchor, relation)


# -- eigenstructure -------------------------------------------------------


@dataclass(frozen=True)
class EigenStructure:
    eigenvalues: np.ndarray
    vectors: np.ndarray          # columns, g-orthonormal
    clusters: tuple              # tuple of index tuples into eigenvalues
    cluster_values: tuple
    multiplicities: tuple
    tolerance: float

    @property
    def n(self):
        return len(self.eigenvalues)

    @property
    def two_valued(self):
        """True when the clusters have multiplicities 1 and n-1."""
        return len(self.clusters) == 2 and sorted(self.multiplicities) == [1, self.n - 1]

    def _cluster(self, mult):
        if not self.two_valued or (self.n == 2):
            return None
        return self.multiplicities.index(mult)

    @property
    def rho(self):
        c = self._cluster(1)
        return None if c is None else self.cluster_values[c]

    @property
    def sigma(self):
        c = self._cluster(self.n - 1)
        return None if c is None else self.cluster_values[c]

    @property
    def rho_vector(self):
        c = self._cluster(1)
        return None if c is None else self.vectors[:, self.clusters[c][0]]


def _cluster_sorted(lam, atol, rtol):
    scale = np.abs(lam).max() if lam.size else 0.0
    tol = atol + rtol * scale
    groups = [[0]]
    for i in range(1, len(lam)):
        if lam[i] - lam[i - 1] <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups, tol


def _reduce(T_val, g_val):
    """Cholesky congruence: returns (L, L^-1 T L^-T)."""
    try:
        chol = np.linalg.cholesky(g_val)
    except np.linalg.LinAlgError:
        raise DegenerateMetricError(np.linalg.eigvalsh(g_val)[..., 0].min()) from None
    a = np.linalg.solve(chol, T_val)
    a = np.swapaxes(np.linalg.solve(chol, np.swapaxes(a, -1, -2)), -1, -2)
    return chol, 0.5 * (a + np.swapaxes(a, -1, -2))


def generalized_eigenstructure(T_val, g_val, cluster_atol=CLUSTER_ATOL,
                               cluster_rtol=CLUSTER_RTOL) -> EigenStructure:
    """Solve ``T v = lambda g v`` at one point and cluster the eigenvalues."""
    T_val = np.asarray(T_val, dtype=float)
    g_val = np.asarray(g_val, dtype=float)
    chol, a = _reduce(T_val, g_val)
    lam, u = np.linalg.eigh(a)
    vecs = np.linalg.solve(chol.T, u)
    for j in range(vecs.shape[1]):
        k = int(np.argmax(np.abs(vecs[:, j])))
        if vecs[k, j] < 0:
            vecs[:, j] = -vecs[:, j]
    groups, tol = _cluster_sorted(lam, cluster_atol, cluster_rtol)
    values = tuple(float(lam[g].mean()) for g in groups)
    return EigenStructure(lam, vecs, tuple(tuple(g) for g in groups), values,
                          tuple(len(g) for g in groups), tol)


def generalized_eigenvalues(T_val, g_val):
    """Ascending generalized eigenvalues for a batch of points."""
    _, a = _reduce(np.asarray(T_val, dtype=float), np.asarray(g_val, dtype=float))
    return np.linalg.eigvalsh(a)


def split_two_valued(lam):
    """Given ascending eigenvalues of a (1, n-1) pattern, return ``(rho, sigma)`` arrays.

    The n-1 fold cluster is whichever end block of n-1 values has the smaller spread.
    """
    lam = np.asarray(lam)
    low, high = lam[..., :-1], lam[..., 1:]
    low_spread = low.max(axis=-1) - low.min(axis=-1)
    high_spread = high.max(axis=-1) - high.min(axis=-1)
    sigma_low = low_spread <= high_spread
    sigma = np.where(sigma_low, low.mean(axis=-1), high.mean(axis=-1))
    rho = np.where(sigma_low, lam[..., -1], lam[..., 0])
    return rho, sigma


def eigenvalue_field(T, g, which="sigma") -> ScalarField:
    """The rho or sigma eigenfunction as a scalar field (differentiated by finite differences)."""
    if which not in ("rho", "sigma"):
        raise ValueError("which must be 'rho' or 'sigma'")

    def fn(*coords):
        pts = np.stack(np.broadcast_arrays(*coords), axis=-1)
        rho, sigma = split_two_valued(generalized_eigenvalues(T(pts), g(pts)))
        return sigma if which == "sigma" else rho

    return ScalarField(fn, T.box, jet_order=0, name=f"{which}[{T.name}]")


def ricci_commutator_residual(T_val, ric_val, g_inv):
    """``max |g^{kl} T_ik Ric_lj - g^{kl} Ric_ik T_lj|`` (batched)."""
    a = np.einsum("...ik,...kl,...lj->...ij", T_val, g_inv, ric_val)
    b = np.einsum("...ik,...kl,...lj->...ij", ric_val, g_inv, T_val)
    d = np.abs(a - b)
    return d.reshape(d.shape[:-2] + (-1,)).max(axis=-1)
