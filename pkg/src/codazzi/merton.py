"""A Codazzi tensor with two eigenvalues whose rho-eigenfunction is not constant
along the sigma-leaves, on R x S^1 x S^1.

    g = (sigma - rho)^-2 dt^2 + sigma dx^2 + sigma dy^2
    T = rho (sigma - rho)^-2 dt^2 + sigma^2 dx^2 + sigma^2 dy^2

sigma(t) climbs from 1 to 2 on (-inf, -1], stays 2 on [-1, 1] and climbs from
2 to 3 on [1, inf).  rho = 3 sigma + A b(t)(sin x + sin y) with a bump b
supported in (-1, 1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets
from .chart import (CoordinateBox, Grid, MetricField, ScalarField, Sym2Field,
                    as_batch, derivative_stack, sample_grid, unbatch)
from .codazzi_analysis import codazzi_deviation
from .curvature import christoffel_from_stack
from .report import residual_row

# below this the bump is exactly 0; exp(-1/u) < 1e-200 there anyway
_BUMP_CUTOFF = 2e-3


def bump(u):
    """``exp(-1/u)`` for ``u > 0``, else 0 (works on arrays and jets)."""
    live = jets.value(u) > _BUMP_CUTOFF
    safe = jets.where(live, u, 1.0)
    return jets.where(live, jets.exp(-1.0 / safe), 0.0)


def smooth_step(u):
    """C-infinity step: 0 for ``u <= 0``, 1 for ``u >= 1``, strictly increasing between."""
    a = bump(u)
    return a / (a + bump(1.0 - u))


@dataclass(frozen=True)
class MertonParams:
    amplitude: float = 1.0     # size of the fiber-dependent part of rho
    rate: float = 1.0          # speed of the exponential maps feeding the steps
    t_min: float = -4.0
    t_max: float = 4.0


def sigma_profile(t, params: MertonParams = MertonParams()):
    k = params.rate
    left = smooth_step(jets.exp(k * (t + 1.0)))
    right = smooth_step(1.0 - jets.exp(-k * (t - 1.0)))
    return 1.0 + left + right


def rho_bump(t):
    return bump(1.0 - t * t)


def rho_profile(t, x, y, params: MertonParams = MertonParams()):
    return 3.0 * sigma_profile(t, params) + params.amplitude * rho_bump(t) * (jets.sin(x) + jets.sin(y))


@dataclass(frozen=True)
class MertonMetric:
    params: MertonParams
    box: CoordinateBox
    g: MetricField
    T: Sym2Field
    sigma: ScalarField   # sigma lifted to the 3D chart
    rho: ScalarField

    def default_grid(self, nt=61, nx=8, ny=8, t_half=3.0) -> Grid:
        inner = CoordinateBox.from_bounds([(-t_half, t_half), (0, 2 * np.pi), (0, 2 * np.pi)],
                                          [False, True, True], ["t", "x", "y"])
        grid = sample_grid(inner, (nt, nx, ny), margin=0.0)
        self.box.check_reach(grid.points, 0.0)
        return grid


def build_profiles(params: MertonParams = MertonParams()):
    """``(sigma, rho)`` as scalar fields on the chart ``[t_min, t_max] x S^1 x S^1``."""
    two_pi = 2 * np.pi
    box = CoordinateBox.from_bounds([(params.t_min, params.t_max), (0, two_pi), (0, two_pi)],
                                    [False, True, True], ["t", "x", "y"])
    sigma = ScalarField(lambda t, x, y: sigma_profile(t, params) + 0.0 * x, box, name="sigma")
    rho = ScalarField(lambda t, x, y: rho_profile(t, x, y, params), box, name="rho")
    return sigma, rho


def merton_metric(params: MertonParams = MertonParams()) -> MertonMetric:
    sigma, rho = build_profiles(params)
    box = sigma.box

    def g_fn(t, x, y):
        s = sigma_profile(t, params)
        d = s - rho_profile(t, x, y, params)
        return [[d ** -2, 0.0, 0.0], [0.0, s, 0.0], [0.0, 0.0, s]]

    def t_fn(t, x, y):
        s = sigma_profile(t, params)
        r = rho_profile(t, x, y, params)
        return [[r * (s - r) ** -2, 0.0, 0.0], [0.0, s * s, 0.0], [0.0, 0.0, s * s]]

    return MertonMetric(params, box, MetricField(g_fn, box, name="merton g"),
                        Sym2Field(t_fn, box, name="merton T"), sigma, rho)


def broken_tensor(m: MertonMetric, factor=2.0) -> Sym2Field:
    """Negative control: ``rho dt^2 + sigma dx^2 + factor*sigma dy^2``; not Codazzi."""
    p = m.params

    def fn(t, x, y):
        s = sigma_profile(t, p)
        return [[rho_profile(t, x, y, p), 0.0, 0.0], [0.0, s, 0.0], [0.0, 0.0, factor * s]]

    return Sym2Field(fn, m.box, name=f"broken T (c={factor:.4g})")


def _profile_values(m: MertonMetric, pts):
    s = m.sigma.jets(pts, 1)
    r = m.rho.jets(pts, 1)
    return s[0], s[1][:, 0], r[0], r[1]


def closed_form_christoffel(m: MertonMetric, points):
    """Closed-form Christoffel symbols ``gamma[..., k, i, j]`` of the metric (t=0, x=1, y=2)."""
    pts, single = as_batch(points, 3)
    sig, dsig, rho, drho = _profile_values(m, pts)
    d = sig - rho
    gam = np.zeros((len(pts), 3, 3, 3))
    gam[:, 0, 0, 0] = -(dsig - drho[:, 0]) / d
    for i in (1, 2):
        gam[:, 0, i, 0] = gam[:, 0, 0, i] = drho[:, i] / d
        gam[:, 0, i, i] = -d ** 2 * dsig / 2.0
        gam[:, i, 0, 0] = -drho[:, i] / (d ** 3 * sig)
        gam[:, i, 0, i] = gam[:, i, i, 0] = dsig / (2.0 * sig)
    return unbatch(gam, single)


def christoffel_table_residual(m: MertonMetric, grid, scheme=None, tolerance=1e-8,
                               table_sign=1.0, check_id="christoffel_table", relation="<="):
    """Numeric Christoffel symbols against the closed-form table, max over index triples.

    ``table_sign=-1`` flips the table (negative control).
    """
    pts = grid.points if isinstance(grid, Grid) else as_batch(grid, 3)[0]
    numeric = christoffel_from_stack(derivative_stack(m.g, pts, 1, scheme))
    diff = np.abs(numeric - table_sign * closed_form_christoffel(m, pts)).reshape(len(pts), -1).max(axis=-1)
    return residual_row(check_id, diff, pts, tolerance,
                        "Gamma^t_tt = -(sigma-rho)^-1 (sigma' - d_t rho), ...", relation)


def formula_residual_tTxx(m: MertonMetric, p, scheme=None):
    """``(lhs, rhs, |lhs - rhs|)`` for ``nabla_t T_xx - nabla_x T_tx = (3 sigma - rho) sigma' / 2``."""
    pts, single = as_batch(p, 3)
    c = codazzi_deviation(m.T, m.g, pts, scheme).tensor
    lhs = c[:, 0, 1, 1]
    sig, dsig, rho, _ = _profile_values(m, pts)
    rhs = (3.0 * sig - rho) * dsig / 2.0
    return unbatch(lhs, single), unbatch(rhs, single), unbatch(np.abs(lhs - rhs), single)


T_, X_, Y_ = 0, 1, 2

# C[k, i, j] = nabla_k T_ij - nabla_j T_ik; each family lists its index triples
CODAZZI_FAMILIES = {
    "yx_xx": ("nabla_y T_xx - nabla_x T_yx", [(Y_, X_, X_), (X_, Y_, Y_)]),
    "tx_xx": ("nabla_t T_xx - nabla_x T_tx", [(T_, X_, X_), (T_, Y_, Y_)]),
    "xt_tt": ("nabla_x T_tt - nabla_t T_xt", [(X_, T_, T_), (Y_, T_, T_)]),
    "ty_xy": ("nabla_t T_xy - nabla_x T_ty", [(T_, Y_, X_), (T_, X_, Y_)]),
    "xy_yt": ("nabla_x T_yt - nabla_y T_xt", [(X_, T_, Y_), (Y_, T_, X_)]),
}


def verify_all_codazzi_components(m: MertonMetric, grid, scheme=None, tolerance=1e-6, T=None):
    """One row per displayed residual family plus the global Codazzi maximum."""
    T = T or m.T
    pts = grid.points if isinstance(grid, Grid) else as_batch(grid, 3)[0]
    c = codazzi_deviation(T, m.g, pts, scheme).tensor
    rows = []
    for key, (anchor, triples) in CODAZZI_FAMILIES.items():
        vals = np.max([np.abs(c[:, k, i, j]) for k, i, j in triples], axis=0)
        rows.append(residual_row(f"codazzi_{key}", vals, pts, tolerance, anchor))
    norm = np.abs(c).reshape(len(pts), -1).max(axis=-1)
    rows.append(residual_row("codazzi_global", norm, pts, tolerance,
                             "(nabla_X T)(Y,Z) = (nabla_Y T)(X,Z)"))
    return rows


def perturbed_metric(m: MertonMetric, eps=0.2) -> MetricField:
    """Negative control: ``g_yy`` scaled by ``exp(eps t sin x)``, so the leaves stop being umbilic."""
    p = m.params

    def fn(t, x, y):
        s = sigma_profile(t, p)
        d = s - rho_profile(t, x, y, p)
        return [[d ** -2, 0.0, 0.0], [0.0, s, 0.0], [0.0, 0.0, s * jets.exp(eps * t * jets.sin(x))]]

    return MetricField(fn, m.box, name=f"perturbed g (eps={eps:.3g})")
