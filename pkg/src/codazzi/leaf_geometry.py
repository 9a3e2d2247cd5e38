"""Geometry of the hypersurfaces {x0 = const} in a chart adapted to a two-valued
Codazzi tensor: second fundamental form, umbilicity, mean-curvature identities,
warping, the Gauss relation for the leaves, and a zone classifier.

Axis 0 is always the normal direction; leaf indices are 1..n-1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chart import (DiffScheme, Grid, ScalarField, as_batch, derivative_stack, fd_partial,
                    metric_inverse, partial_derivative, unbatch)
from .codazzi_analysis import eigenvalue_field, generalized_eigenvalues, split_two_valued
from .curvature import christoffel_from_stack, curvature_from_stack
from .errors import AssumptionViolation, DegenerateMetricError, DimensionError

WARPED = "WarpedZone"
GEODESIC = "TotallyGeodesicZone"
BAND = "BoundaryBand"


@dataclass(frozen=True)
class AdaptedChartAssumption:
    """Axis 0 spans the simple eigendirection: ``g_0j = 0`` and ``T_0j = 0`` for j >= 1."""

    normal_axis: int = 0
    g_tol: float = 1e-12
    t_tol: float = 1e-10

    def validate(self, g_val, t_val=None, points=None):
        checks = [("g", g_val, self.g_tol)] + ([("T", t_val, self.t_tol)] if t_val is not None else [])
        for name, val, tol in checks:
            off = np.abs(np.asarray(val)[..., 0, 1:])
            bad = off.reshape(-1, off.shape[-1]).max(axis=-1) > tol
            if bad.any():
                i = int(np.argmax(bad))
                where = "" if points is None else f" at {np.atleast_2d(points)[i].tolist()}"
                raise AssumptionViolation(f"chart is not adapted: |{name}_0j| = "
                                          f"{off.reshape(-1, off.shape[-1])[i].max():.3e}{where}")


def check_adapted_chart(g, points, T=None, assumption=AdaptedChartAssumption()):
    pts, _ = as_batch(points, g.dim)
    assumption.validate(g(pts), None if T is None else T(pts), pts)


@dataclass(frozen=True)
class LeafData:
    point: np.ndarray
    h: np.ndarray         # [..., i, j], leaf indices
    H: np.ndarray
    umbilicity: np.ndarray
    g_sigma: np.ndarray


def _umbilicity(h, H, g_sigma):
    m = g_sigma.shape[-1]
    d = np.abs(h - (np.asarray(H)[..., None, None] / m) * g_sigma)
    return d.reshape(d.shape[:-2] + (-1,)).max(axis=-1)


def _leaf_from_stack(stack):
    g = stack[0]
    g00 = g[..., 0, 0]
    if not np.all(g00 > 0):
        raise DegenerateMetricError(np.min(g00), "g_00 must be positive on an adapted chart")
    gamma = christoffel_from_stack(stack)
    h = -gamma[..., 0, 1:, 1:] * np.sqrt(g00)[..., None, None]
    g_sigma = g[..., 1:, 1:]
    H = np.einsum("...ij,...ij->...", metric_inverse(g_sigma), h)
    return h, H, g_sigma


def second_fundamental_form(g, p, scheme: DiffScheme | None = None, validate=True) -> LeafData:
    """``h_ij = -Gamma^0_ij sqrt(g_00)`` on the leaf through ``p`` and its trace ``H``."""
    pts, single = as_batch(p, g.dim)
    stack = derivative_stack(g, pts, 1, scheme)
    if validate:
        AdaptedChartAssumption().validate(stack[0], points=pts)
    h, H, g_sigma = _leaf_from_stack(stack)
    umb = _umbilicity(h, H, g_sigma)
    return LeafData(*(unbatch(x, single) for x in (pts, h, H, umb, g_sigma)))


def umbilicity_residual(leaf: LeafData):
    """``max |h_ij - H/(n-1) g^sigma_ij|``, recomputed from the leaf's data."""
    return _umbilicity(np.asarray(leaf.h, dtype=float), leaf.H, np.asarray(leaf.g_sigma, dtype=float))


def mean_curvature_field(g, scheme: DiffScheme | None = None) -> ScalarField:
    """``H`` as a scalar field on the chart (its own derivatives go through finite differences)."""

    def fn(*coords):
        pts = np.stack(np.broadcast_arrays(*coords), axis=-1)
        flat = pts.reshape(-1, g.dim)
        H = _leaf_from_stack(derivative_stack(g, flat, 1, scheme))[1]
        return H.reshape(pts.shape[:-1])

    return ScalarField(fn, g.box, jet_order=0, name=f"H[{g.name}]")


def fiber_variation(field: ScalarField, p, scheme: DiffScheme | None = None):
    """``max_{j >= 1} |d_j field|`` per point."""
    scheme = scheme or DiffScheme()
    pts, single = as_batch(p, field.dim)
    d = [np.abs(partial_derivative(field, pts, (j,), scheme)) for j in range(1, field.dim)]
    return unbatch(np.max(d, axis=0), single)


@dataclass(frozen=True)
class MeanCurvatureCheck:
    H: np.ndarray
    predicted: np.ndarray   # (n-1) d_0 sigma / ((rho - sigma) sqrt(g_00))
    literal: np.ndarray     # d_0 sigma / (rho - sigma), valid only when g_00 = 1 and n = 2
    residual: np.ndarray


def mean_curvature_identity_residual(g, T, p, scheme: DiffScheme | None = None,
                                     sigma_field: ScalarField | None = None,
                                     separation=1e-8) -> MeanCurvatureCheck:
    """Compare the leaf mean curvature with the value forced by the Codazzi equation.

    For ``T`` with eigenvalues ``rho`` (on d_0) and ``sigma`` (multiplicity n-1)
    the Codazzi equation gives ``H = (n-1) d_0 sigma / ((rho - sigma) sqrt(g_00))``.
    """
    scheme = scheme or DiffScheme()
    pts, single = as_batch(p, g.dim)
    n = g.dim
    gv = g(pts)
    rho, sigma = split_two_valued(generalized_eigenvalues(T(pts), gv))
    gap = rho - sigma
    if np.any(np.abs(gap) <= separation):
        raise AssumptionViolation("rho and sigma coincide; the identity needs two distinct eigenvalues")
    sigma_field = sigma_field or eigenvalue_field(T, g, "sigma")
    dsig = np.asarray(partial_derivative(sigma_field, pts, (0,), scheme))
    H = _leaf_from_stack(derivative_stack(g, pts, 1, scheme))[1]
    predicted = (n - 1) * dsig / (gap * np.sqrt(gv[:, 0, 0]))
    literal = dsig / gap
    res = np.abs(H - predicted)
    return MeanCurvatureCheck(*(unbatch(x, single) for x in (H, predicted, literal, res)))


def traced_codazzi_mainardi_residual(g, p, scheme: DiffScheme | None = None):
    """``max_{j>=1} |(n-2)/(n-1) d_j H + Ric_0j / sqrt(g_00)|`` for umbilic leaves."""
    scheme = scheme or DiffScheme()
    pts, single = as_batch(p, g.dim)
    n = g.dim
    bundle = curvature_from_stack(derivative_stack(g, pts, 2, scheme), pts)
    hfield = mean_curvature_field(g, scheme)
    dH = np.stack([fd_partial(hfield, pts, (j,), scheme) for j in range(1, n)], axis=-1)
    ric0 = bundle.ricci[:, 0, 1:] / np.sqrt(bundle.g[:, 0, 0])[:, None]
    res = np.abs((n - 2) / (n - 1) * dH + ric0).max(axis=-1)
    return unbatch(res, single)


def _warping_ratios(stack):
    g, dg = stack[0], stack[1]
    gs = g[..., 1:, 1:]
    d0 = dg[..., 1:, 1:, 0]
    live = np.abs(gs) > 1e-14
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(live, d0 / np.where(live, gs, 1.0), np.nan)
    broken = (~live) & (np.abs(d0) > 1e-14)
    return r, broken


def warping_rate(g, p, scheme: DiffScheme | None = None):
    """``phi`` with ``d_0 g_ij = phi g_ij``: the mean of the ratios over nonzero leaf entries."""
    pts, single = as_batch(p, g.dim)
    r, _ = _warping_ratios(derivative_stack(g, pts, 1, scheme))
    flat = r.reshape(len(pts), -1)
    return unbatch(np.nanmean(flat, axis=-1), single)


def warped_product_residual(g, p, scheme: DiffScheme | None = None):
    """``(residual, phi)``: spread of ``d_0 g_ij / g_ij`` plus its largest leaf-direction derivative.

    A zero entry with a nonzero x0-derivative gives an infinite residual.
    """
    scheme = scheme or DiffScheme()
    pts, single = as_batch(p, g.dim)
    r, broken = _warping_ratios(derivative_stack(g, pts, 1, scheme))
    flat = r.reshape(len(pts), -1)
    spread = np.nanmax(flat, axis=-1) - np.nanmin(flat, axis=-1)
    phi = np.nanmean(flat, axis=-1)
    phi_field = ScalarField(lambda *c: warping_rate(g, np.stack(np.broadcast_arrays(*c), axis=-1), scheme),
                            g.box, jet_order=0, name="phi")
    drift = fiber_variation(phi_field, pts, scheme)
    res = spread + drift
    res = np.where(broken.reshape(len(pts), -1).any(axis=-1), np.inf, res)
    return unbatch(res, single), unbatch(phi, single)


def reconstruct_warping(g, t_values, fiber_point, scheme: DiffScheme | None = None, substeps=64):
    """``psi`` along the x0-line through ``fiber_point``, with ``psi' = phi`` and ``psi(t_values[0]) = 0``.

    Trapezoid rule on ``substeps`` uniform sub-intervals per interval of ``t_values``.
    """
    t_values = np.asarray(t_values, dtype=float)
    fiber_point = np.asarray(fiber_point, dtype=float)
    pieces = [np.linspace(a, b, substeps + 1)[:-1] for a, b in zip(t_values[:-1], t_values[1:])]
    fine = np.concatenate(pieces + [t_values[-1:]])
    pts = np.column_stack([fine, np.broadcast_to(fiber_point, (len(fine), len(fiber_point)))])
    phi = warping_rate(g, pts, scheme)
    steps = np.diff(fine) * 0.5 * (phi[1:] + phi[:-1])
    psi_fine = np.concatenate([[0.0], np.cumsum(steps)])
    return psi_fine[::substeps]


def induced_scalar_curvature_gauss(g, p, scheme: DiffScheme | None = None):
    """``(R_gauss, R_direct, |difference|)`` for the leaves of a 3D adapted chart.

    ``R_gauss = R - 2 Ric(nu, nu) + H^2 / 2`` (umbilic leaves) and ``R_direct``
    is the scalar curvature of the 2D leaf metric.
    """
    if g.dim != 3:
        raise DimensionError("the leaf Gauss relation is implemented for n = 3")
    pts, single = as_batch(p, 3)
    stack = derivative_stack(g, pts, 2, scheme)
    AdaptedChartAssumption().validate(stack[0], points=pts)
    amb = curvature_from_stack(stack, pts)
    H = _leaf_from_stack(stack)[1]
    ric_nn = amb.ricci[:, 0, 0] / amb.g[:, 0, 0]
    gauss = amb.scalar - 2.0 * ric_nn + 0.5 * H ** 2
    leaf = [stack[0][:, 1:, 1:], stack[1][:, 1:, 1:, 1:], stack[2][:, 1:, 1:, 1:, 1:]]
    direct = curvature_from_stack(leaf).scalar
    return tuple(unbatch(x, single) for x in (gauss, direct, np.abs(gauss - direct)))


# -- zones ----------------------------------------------------------------


@dataclass(frozen=True)
class ZoneLabel:
    label: str
    dsigma: float
    threshold: float
    consistent: bool | None = None   # outcome of the optional geometric cross-check


def classify_zones(sigma_field: ScalarField, grid: Grid, threshold=1e-4, scheme=None,
                   g=None, fiber_tol=1e-10, warped_tol=1e-7, geodesic_tol=1e-8):
    """Label grid points by ``|d_0 sigma|``.

    WarpedZone above ``threshold``; TotallyGeodesicZone where the point and its
    axis-0 grid neighbours are all at or below it; BoundaryBand otherwise.  With
    ``g`` given, each warped label is checked against the warped-product residual
    and each geodesic label against ``max |h|``.
    """
    scheme = scheme or DiffScheme()
    pts = grid.points
    fib = fiber_variation(sigma_field, pts, scheme)
    if np.any(fib > fiber_tol):
        i = int(np.argmax(fib > fiber_tol))
        raise AssumptionViolation(f"sigma varies along the leaf at {pts[i].tolist()} "
                                  f"(|d_j sigma| = {fib[i]:.3e})")
    ds = np.abs(np.asarray(partial_derivative(sigma_field, pts, (0,), scheme)))
    big = (ds > threshold).reshape(grid.shape)
    quiet = ~big
    calm = quiet.copy()
    calm[1:] &= quiet[:-1]
    calm[:-1] &= quiet[1:]
    labels = np.where(big, WARPED, np.where(calm, GEODESIC, BAND)).reshape(-1)

    consistent = np.full(len(pts), None, dtype=object)
    if g is not None:
        w = labels == WARPED
        if w.any():
            consistent[w] = warped_product_residual(g, pts[w], scheme)[0] <= warped_tol
        z = labels == GEODESIC
        if z.any():
            h = second_fundamental_form(g, pts[z], scheme).h
            consistent[z] = np.abs(h).reshape(int(z.sum()), -1).max(axis=-1) <= geodesic_tol
    return [(pts[i], ZoneLabel(str(labels[i]), float(ds[i]), float(threshold),
                               None if consistent[i] is None else bool(consistent[i])))
            for i in range(len(pts))]


def zone_components(labels, t_values, zone=WARPED):
    """Maximal runs of consecutive axis-0 indices carrying ``zone`` (per 1D label list)."""
    runs, start = [], None
    for i, lab in enumerate(list(labels) + [None]):
        if lab == zone and start is None:
            start = i
        elif lab != zone and start is not None:
            runs.append(np.asarray(t_values)[start:i])
            start = None
    return runs
