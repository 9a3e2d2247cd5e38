"""Gradient Ricci solitons ``Ric + Hess f = lambda g`` in three dimensions: the
residual and its two differential consequences, the Codazzi tensor
``(Ric - R g / 2) e^-f`` and a small catalog of exact examples."""

from __future__ import annotations

from dataclasses import dataclass, replace
from collections import Counter

import numpy as np

from . import jets
from .chart import (CoordinateBox, DerivedSym2Field, DiffScheme, Grid, MetricField, ScalarField,
                    as_batch, derivative_stack, sample_grid, unbatch)
from .codazzi_analysis import codazzi_from_nabla, generalized_eigenstructure
from .curvature import (covariant_derivative_sym2, curvature_from_stack, hessian_from_stack)
from .report import residual_row


@dataclass(frozen=True)
class SolitonInstance:
    name: str
    g: MetricField
    f: ScalarField
    lam: float
    box: CoordinateBox
    resolution: tuple = (8, 8, 8)
    lemma_tol: float = 1e-4
    pattern: tuple = (1, 2)      # expected eigenvalue multiplicities of Ric and T

    @property
    def kind(self):
        if self.lam > 0:
            return "shrinking"
        return "steady" if self.lam == 0 else "expanding"

    def default_grid(self, scheme: DiffScheme | None = None) -> Grid:
        return sample_grid(self.box, self.resolution, scheme=scheme)

    def shifted(self, c):
        """Same soliton with potential ``f + c``."""
        f = self.f
        return replace(self, f=ScalarField(lambda *x: f.fn(*x) + c, f.box, f.jet_order, f"{f.name}+{c:g}"))


def _r2(*xs):
    out = 0.0
    for x in xs:
        out = out + x * x
    return out


def gaussian_shrinker():
    box = CoordinateBox.from_bounds([(-2, 2)] * 3, names=["x", "y", "z"])
    one = lambda x: 1.0 + 0.0 * x
    g = MetricField(lambda x, y, z: [[one(x), 0.0, 0.0], [0.0, one(x), 0.0], [0.0, 0.0, one(x)]],
                    box, name="flat")
    f = ScalarField(lambda x, y, z: _r2(x, y, z) / 4.0, box, name="|x|^2/4")
    return SolitonInstance("gaussian", g, f, 0.5, box, lemma_tol=0.0, pattern=(3,))


def round_s3():
    box = CoordinateBox.from_bounds([(-0.8, 0.8)] * 3, names=["u1", "u2", "u3"])

    def g_fn(a, b, c):
        w = 4.0 * (1.0 + _r2(a, b, c)) ** -2
        return [[w, 0.0, 0.0], [0.0, w, 0.0], [0.0, 0.0, w]]

    f = ScalarField(lambda a, b, c: 0.0 * a, box, name="0")
    return SolitonInstance("s3", MetricField(g_fn, box, name="unit S^3 (conformal chart)"), f, 2.0, box,
                           lemma_tol=1e-8, pattern=(3,))


def cylinder():
    box = CoordinateBox((
        *CoordinateBox.from_bounds([(-2, 2), (0.4, np.pi - 0.4)], names=["t", "theta"]).axes,
        *CoordinateBox.from_bounds([(0, 2 * np.pi)], [True], ["phi"]).axes))

    def g_fn(t, th, ph):
        s = jets.sin(th)
        return [[1.0 + 0.0 * t, 0.0, 0.0], [0.0, 1.0 + 0.0 * t, 0.0], [0.0, 0.0, s * s]]

    f = ScalarField(lambda t, th, ph: t * t / 2.0, box, name="t^2/2")
    return SolitonInstance("cylinder", MetricField(g_fn, box, name="R x S^2"), f, 1.0, box)


def cigar_line():
    box = CoordinateBox.from_bounds([(-2, 2)] * 3, names=["x", "y", "z"])

    def g_fn(x, y, z):
        w = 1.0 / (1.0 + _r2(x, y))
        return [[w, 0.0, 0.0], [0.0, w, 0.0], [0.0, 0.0, 1.0 + 0.0 * z]]

    f = ScalarField(lambda x, y, z: -jets.log(1.0 + _r2(x, y)), box, name="-log(1+x^2+y^2)")
    return SolitonInstance("cigar-line", MetricField(g_fn, box, name="cigar x R"), f, 0.0, box)


def catalog():
    return {s.name: s for s in (gaussian_shrinker(), round_s3(), cylinder(), cigar_line())}


# -- residuals --------------------------------------------------------------


def _data(s: SolitonInstance, p, scheme, order):
    pts, single = as_batch(p, s.g.dim)
    bundle = curvature_from_stack(derivative_stack(s.g, pts, order, scheme), pts)
    fs = derivative_stack(s.f, pts, min(order, 2), scheme)
    return pts, single, bundle, fs


def _df_up(bundle, fs):
    return np.einsum("...pq,...q->...p", bundle.g_inv, fs[1])


def soliton_residual(s: SolitonInstance, p, scheme: DiffScheme | None = None):
    """``max |Ric + Hess f - lambda g|`` per point."""
    pts, single, b, fs = _data(s, p, scheme, 2)
    r = np.abs(b.ricci + hessian_from_stack(fs, b.gamma) - s.lam * b.g).reshape(len(pts), -1).max(axis=-1)
    return unbatch(r, single)


def scalar_gradient_identity_residual(s: SolitonInstance, p, scheme: DiffScheme | None = None):
    """``max_k |d_k R - 2 Ric(grad f, d_k)|`` per point."""
    pts, single, b, fs = _data(s, p, scheme, 3)
    rhs = 2.0 * np.einsum("...p,...pk->...k", _df_up(b, fs), b.ricci)
    return unbatch(np.abs(b.d_scalar - rhs).max(axis=-1), single)


def ricci_codazzi_identity_residual(s: SolitonInstance, p, scheme: DiffScheme | None = None, sign=1.0):
    """``max |nabla_k R_ij - nabla_j R_ik - sign * R_kjip grad^p f|`` per point.

    With this package's Riemann convention the identity holds for ``sign=+1``.
    """
    pts, single, b, fs = _data(s, p, scheme, 3)
    nabla = covariant_derivative_sym2(b.ricci, b.d_ricci, b.gamma)
    lhs = codazzi_from_nabla(nabla)
    rhs = sign * np.einsum("...kjip,...p->...kij", b.riemann, _df_up(b, fs))
    return unbatch(np.abs(lhs - rhs).reshape(len(pts), -1).max(axis=-1), single)


# -- the Codazzi tensor -----------------------------------------------------


def _lemma_parts(s, pts, scheme):
    """Stack ``[T, dT]`` and the two brackets whose sum is ``C_kij`` of T."""
    b = curvature_from_stack(derivative_stack(s.g, pts, 3, scheme), pts)
    fs = derivative_stack(s.f, pts, 1, scheme)
    w = np.exp(-fs[0])[:, None, None]
    R = b.scalar[:, None, None]
    einstein = b.ricci - 0.5 * R * b.g
    T = einstein * w
    d_einstein = (b.d_ricci - 0.5 * np.einsum("...k,...ij->...ijk", b.d_scalar, b.g)
                  - 0.5 * R[..., None] * b.dg)
    dT = d_einstein * w[..., None] - np.einsum("...ij,...k->...ijk", T, fs[1])
    # brackets indexed [k, i, j]
    nabla_ric = covariant_derivative_sym2(b.ricci, b.d_ricci, b.gamma)
    dR, df, g, ric = b.d_scalar, fs[1], b.g, b.ricci
    curv = (codazzi_from_nabla(nabla_ric)
            - 0.5 * (np.einsum("...k,...ij->...kij", dR, g) - np.einsum("...j,...ik->...kij", dR, g)))
    fpart = (0.5 * R[..., None] * (np.einsum("...k,...ij->...kij", df, g) - np.einsum("...j,...ik->...kij", df, g))
             - np.einsum("...k,...ij->...kij", df, ric) + np.einsum("...j,...ik->...kij", df, ric))
    return [T, dT], curv * w[..., None], fpart * w[..., None], b.gamma


def soliton_codazzi_tensor(s: SolitonInstance) -> DerivedSym2Field:
    """``(Ric - R g / 2) e^-f`` as a field; its first derivatives use third metric derivatives."""

    def stack_fn(pts, order, scheme):
        return _lemma_parts(s, pts, scheme)[0][:order + 1]

    return DerivedSym2Field(stack_fn, s.box, jet_order=1, name=f"T[{s.name}]")


def verify_lemma(s: SolitonInstance, grid, scheme: DiffScheme | None = None, decomposition_tol=1e-8):
    """Codazzi residual of ``(Ric - R g / 2) e^-f`` and the check that the curvature
    bracket plus the potential bracket reproduce it."""
    pts = grid.points if isinstance(grid, Grid) else as_batch(grid, s.g.dim)[0]
    (T, dT), curv, fpart, gamma = _lemma_parts(s, pts, scheme)
    c = codazzi_from_nabla(covariant_derivative_sym2(T, dT, gamma))
    flat = lambda a: np.abs(a).reshape(len(pts), -1).max(axis=-1)
    scale = np.maximum(1.0, np.maximum(flat(curv), flat(fpart)))
    return [
        residual_row("lemma_codazzi", flat(c), pts, s.lemma_tol,
                     "nabla_k T_ij = nabla_j T_ik for T = (Ric - R g/2) e^-f"),
        residual_row("lemma_bracket_sum", flat(curv + fpart - c) / scale, pts, decomposition_tol,
                     "curvature bracket + potential bracket = nabla_k T_ij - nabla_j T_ik",
                     note="relative to max(1, bracket size)"),
    ]


# -- eigenvalue pattern -----------------------------------------------------


@dataclass(frozen=True)
class TwoValueSummary:
    ricci_patterns: Counter
    tensor_patterns: Counter
    sigma_range: tuple | None
    rho_range: tuple | None
    alignment: float | None       # min |g(v_rho, e)| for the product direction e, if given

    @property
    def sigma_constant(self):
        return self.sigma_range is not None and self.sigma_range[1] - self.sigma_range[0] <= 1e-8


PRODUCT_AXIS = {"cylinder": 0, "cigar-line": 2}


def eigen_two_value_check(s: SolitonInstance, grid, scheme: DiffScheme | None = None) -> TwoValueSummary:
    """Multiplicity patterns of Ric and T relative to g, and the range of their values."""
    pts = grid.points if isinstance(grid, Grid) else as_batch(grid, s.g.dim)[0]
    (T, _), *_ = _lemma_parts(s, pts, scheme)
    b = curvature_from_stack(derivative_stack(s.g, pts, 2, scheme), pts)
    ric_pat, t_pat = Counter(), Counter()
    sig, rho, align = [], [], []
    axis = PRODUCT_AXIS.get(s.name)
    for i in range(len(pts)):
        ric_pat[tuple(sorted(generalized_eigenstructure(b.ricci[i], b.g[i]).multiplicities))] += 1
        es = generalized_eigenstructure(T[i], b.g[i])
        t_pat[tuple(sorted(es.multiplicities))] += 1
        if es.two_valued:
            sig.append(es.sigma)
            rho.append(es.rho)
            if axis is not None:
                e = np.zeros(3)
                e[axis] = 1.0 / np.sqrt(b.g[i][axis, axis])
                align.append(abs(es.rho_vector @ b.g[i] @ e))
    rng = lambda v: (float(min(v)), float(max(v))) if v else None
    return TwoValueSummary(ric_pat, t_pat, rng(sig), rng(rho), float(min(align)) if align else None)
