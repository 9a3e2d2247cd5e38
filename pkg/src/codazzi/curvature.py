"""Pointwise curvature of a metric given in coordinates.

Sign conventions (fixed here, used everywhere):

* ``R(X, Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z``
* ``riemann[..., i, j, k, l] = g(R(d_i, d_j) d_k, d_l)``
* ``ricci[..., j, k] = g^{il} R_{ijkl}`` (unit 3-sphere: ``Ric = 2 g``)

With these, a sectional curvature is ``K(d_i, d_j) = R_{ijji} / |d_i ^ d_j|^2``.
Array layouts: ``gamma[..., k, i, j] = Gamma^k_ij`` and covariant derivatives
``nabla[..., k, i, j] = nabla_k T_ij``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chart import DiffScheme, as_batch, derivative_stack, metric_inverse, unbatch
from .errors import DimensionError


@dataclass(frozen=True)
class CurvatureBundle:
    points: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    gamma: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: np.ndarray
    dg: np.ndarray
    # only present when third metric derivatives were supplied
    d_gamma: np.ndarray | None = None
    d_ricci: np.ndarray | None = None
    d_scalar: np.ndarray | None = None

    @property
    def dim(self):
        return self.g.shape[-1]


def _first_kind(dg):
    # [l, i, j] = 1/2 (d_i g_jl + d_j g_il - d_l g_ij); dg[a, b, c] = d_c g_ab
    return 0.5 * (np.einsum("...jli->...lij", dg) + np.einsum("...ilj->...lij", dg)
                  - np.einsum("...ijl->...lij", dg))


def _first_kind_d(ddg):
    # same, with one more trailing derivative index m
    return 0.5 * (np.einsum("...jlim->...lijm", ddg) + np.einsum("...iljm->...lijm", ddg)
                  - np.einsum("...ijlm->...lijm", ddg))


def _first_kind_dd(dddg):
    return 0.5 * (np.einsum("...jlimn->...lijmn", dddg) + np.einsum("...iljmn->...lijmn", dddg)
                  - np.einsum("...ijlmn->...lijmn", dddg))


def christoffel_from_stack(stack):
    g, dg = stack[0], stack[1]
    g_inv = metric_inverse(g)
    return np.einsum("...kl,...lij->...kij", g_inv, _first_kind(dg))


def _antisym_ij(a):
    # a[..., l, i, j, k] -> a - (i <-> j)
    return a - np.swapaxes(a, -3, -2)


def curvature_from_stack(stack, points=None) -> CurvatureBundle:
    """Curvature from a metric derivative stack ``[g, dg, d2g(, d3g)]`` (batched).

    With a third-derivative entry the bundle also carries ``d_gamma``,
    ``d_ricci`` and ``d_scalar``.
    """
    g, dg, ddg = stack[0], stack[1], stack[2]
    g_inv = metric_inverse(g)
    c1 = _first_kind(dg)
    dc1 = _first_kind_d(ddg)
    dginv = -np.einsum("...ka,...abm,...bl->...klm", g_inv, dg, g_inv)
    gamma = np.einsum("...kl,...lij->...kij", g_inv, c1)
    d_gamma = (np.einsum("...klm,...lij->...kijm", dginv, c1)
               + np.einsum("...kl,...lijm->...kijm", g_inv, dc1))

    # A[l, i, j, k] = d_i Gamma^l_jk + Gamma^l_im Gamma^m_jk
    a = np.einsum("...ljki->...lijk", d_gamma) + np.einsum("...lim,...mjk->...lijk", gamma, gamma)
    r_up = _antisym_ij(a)
    riemann = np.einsum("...lm,...mijk->...ijkl", g, r_up)
    ricci = np.einsum("...iijk->...jk", r_up)
    ricci = 0.5 * (ricci + np.swapaxes(ricci, -1, -2))
    scalar = np.einsum("...jk,...jk->...", g_inv, ricci)

    extra = {}
    if len(stack) > 3:
        dddg = stack[3]
        ddc1 = _first_kind_dd(dddg)
        ddginv = -(np.einsum("...kan,...abm,...bl->...klmn", dginv, dg, g_inv)
                   + np.einsum("...ka,...abmn,...bl->...klmn", g_inv, ddg, g_inv)
                   + np.einsum("...ka,...abm,...bln->...klmn", g_inv, dg, dginv))
        dd_gamma = (np.einsum("...klmn,...lij->...kijmn", ddginv, c1)
                    + np.einsum("...klm,...lijn->...kijmn", dginv, dc1)
                    + np.einsum("...kln,...lijm->...kijmn", dginv, dc1)
                    + np.einsum("...kl,...lijmn->...kijmn", g_inv, ddc1))
        da = (np.einsum("...ljkin->...lijkn", dd_gamma)
              + np.einsum("...limn,...mjk->...lijkn", d_gamma, gamma)
              + np.einsum("...lim,...mjkn->...lijkn", gamma, d_gamma))
        dr_up = da - np.swapaxes(da, -4, -3)
        d_ricci = np.einsum("...iijkn->...jkn", dr_up)
        d_ricci = 0.5 * (d_ricci + np.swapaxes(d_ricci, -2, -3))
        d_scalar = (np.einsum("...jkn,...jk->...n", dginv, ricci)
                    + np.einsum("...jk,...jkn->...n", g_inv, d_ricci))
        extra = dict(d_gamma=d_gamma, d_ricci=d_ricci, d_scalar=d_scalar)
    return CurvatureBundle(points=points, g=g, g_inv=g_inv, gamma=gamma, riemann=riemann,
                           ricci=ricci, scalar=scalar, dg=dg, **extra)


def curvature_bundle(g, points, scheme: DiffScheme | None = None, order=2) -> CurvatureBundle:
    """Batched curvature of metric field ``g``; ``order=3`` adds derivatives of Ric and R."""
    pts, _ = as_batch(points, g.dim)
    stack = derivative_stack(g, pts, order, scheme)
    return curvature_from_stack(stack, pts)


def christoffel(g, p, scheme: DiffScheme | None = None):
    pts, single = as_batch(p, g.dim)
    return unbatch(christoffel_from_stack(derivative_stack(g, pts, 1, scheme)), single)


def riemann(g, p, scheme: DiffScheme | None = None):
    pts, single = as_batch(p, g.dim)
    return unbatch(curvature_bundle(g, pts, scheme).riemann, single)


def ricci(bundle: CurvatureBundle):
    return bundle.ricci


def scalar_curvature(bundle: CurvatureBundle):
    return bundle.scalar


def hessian_from_stack(f_stack, gamma):
    """``nabla^2 f_ij = d_i d_j f - Gamma^k_ij d_k f``."""
    hess = f_stack[2] - np.einsum("...kij,...k->...ij", gamma, f_stack[1])
    return 0.5 * (hess + np.swapaxes(hess, -1, -2))


def hessian_scalar(f, g, p, scheme: DiffScheme | None = None):
    pts, single = as_batch(p, g.dim)
    gamma = christoffel_from_stack(derivative_stack(g, pts, 1, scheme))
    return unbatch(hessian_from_stack(derivative_stack(f, pts, 2, scheme), gamma), single)


def covariant_derivative_sym2(t, dt, gamma):
    """``nabla_k T_ij = d_k T_ij - Gamma^p_ki T_pj - Gamma^p_kj T_ip``.

    ``dt[..., i, j, k] = d_k T_ij``; result indexed ``[..., k, i, j]``.
    """
    return (np.einsum("...ijk->...kij", dt)
            - np.einsum("...pki,...pj->...kij", gamma, t)
            - np.einsum("...pkj,...ip->...kij", gamma, t))


def cov_deriv_sym2(T, g, p, scheme: DiffScheme | None = None):
    pts, single = as_batch(p, g.dim)
    gamma = christoffel_from_stack(derivative_stack(g, pts, 1, scheme))
    t_stack = derivative_stack(T, pts, 1, scheme)
    return unbatch(covariant_derivative_sym2(t_stack[0], t_stack[1], gamma), single)


def cov_deriv_ricci(bundle: CurvatureBundle):
    """``nabla_k Ric_ij`` from a bundle computed with third metric derivatives."""
    if bundle.d_ricci is None:
        raise ValueError("bundle lacks third-derivative data; use order=3")
    return covariant_derivative_sym2(bundle.ricci, bundle.d_ricci, bundle.gamma)


def riemann_3d_from_ricci(ric, scalar, g):
    """Riemann tensor of a 3-manifold rebuilt from Ricci (Weyl vanishes in 3D).

    Returns ``R_kjip`` in this module's convention, i.e. the negative of::

        Ric_ik g_jp - Ric_kp g_ij + Ric_jp g_ik - Ric_ij g_kp
            - R/2 (g_ik g_jp - g_ij g_kp)

    which is the same expression written for the opposite sign of ``R_ijkl``.
    """
    ric = np.asarray(ric, dtype=float)
    g = np.asarray(g, dtype=float)
    if g.shape[-1] != 3:
        raise DimensionError("the Ricci decomposition of Riemann holds only in dimension 3")
    scalar = np.asarray(scalar, dtype=float)[..., None, None, None, None]
    expr = (np.einsum("...ik,...jp->...kjip", ric, g) - np.einsum("...kp,...ij->...kjip", ric, g)
            + np.einsum("...jp,...ik->...kjip", ric, g) - np.einsum("...ij,...kp->...kjip", ric, g)
            - 0.5 * scalar * (np.einsum("...ik,...jp->...kjip", g, g)
                              - np.einsum("...ij,...kp->...kjip", g, g)))
    return -expr


def contracted_bianchi_residual(bundle: CurvatureBundle):
    """``max_k |d_k R - 2 g^{ij} nabla_i Ric_jk|`` per point."""
    nabla_ric = cov_deriv_ricci(bundle)
    div = np.einsum("...ij,...ijk->...k", bundle.g_inv, nabla_ric)
    return np.abs(bundle.d_scalar - 2.0 * div).max(axis=-1)


def riemann_symmetry_residual(riem):
    """Max violation of the pair symmetries and the first Bianchi identity, per point."""
    r = np.asarray(riem)
    anti1 = r + np.swapaxes(r, -4, -3)
    anti2 = r + np.swapaxes(r, -2, -1)
    pair = r - np.einsum("...klij->...ijkl", r)
    # R_ijkl + R_jkil + R_kijl
    bianchi = r + np.einsum("...jkil->...ijkl", r) + np.einsum("...kijl->...ijkl", r)
    parts = [np.abs(x).reshape(x.shape[:-4] + (-1,)).max(axis=-1) for x in (anti1, anti2, pair, bianchi)]
    return np.maximum.reduce(parts)
