"""Coordinate charts, fields and the differentiation engine.

Points are plain float arrays: a single point has shape ``(n,)`` and a batch
of points ``(N, n)``.  Every routine in the package accepts either form and
returns results with the matching leading shape.

Derivative stacks follow one layout throughout: for a field whose value has
shape ``S`` the k-th entry of a stack has shape ``(N,) + S + (n,) * k`` and
holds all k-th partial derivatives, the differentiation axes last.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from . import jets
from .errors import ConfigurationError, DegenerateMetricError, DomainError


# -- charts ---------------------------------------------------------------


@dataclass(frozen=True)
class Axis:
    lower: float
    upper: float
    periodic: bool = False
    name: str = ""

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ConfigurationError(f"axis {self.name or '?'}: lower must be < upper")

    @property
    def period(self):
        return self.upper - self.lower if self.periodic else None


@dataclass(frozen=True)
class CoordinateBox:
    axes: tuple[Axis, ...]

    @classmethod
    def from_bounds(cls, bounds, periodic=None, names=None):
        periodic = periodic or [False] * len(bounds)
        names = names or [""] * len(bounds)
        return cls(tuple(Axis(float(lo), float(hi), bool(p), nm)
                         for (lo, hi), p, nm in zip(bounds, periodic, names)))

    @property
    def dim(self):
        return len(self.axes)

    @property
    def names(self):
        return tuple(a.name or f"x{i}" for i, a in enumerate(self.axes))

    def wrap(self, points):
        """Reduce periodic coordinates into ``[lower, upper)``."""
        points = np.asarray(points, dtype=float)
        if not any(a.periodic for a in self.axes):
            return points
        out = points.copy()
        for i, a in enumerate(self.axes):
            if a.periodic:
                out[..., i] = a.lower + np.mod(out[..., i] - a.lower, a.period)
        return out

    def check_reach(self, points, reach):
        """Raise :class:`DomainError` if ``points +- reach`` leaves a non-periodic axis."""
        points = np.asarray(points, dtype=float)
        reach = np.broadcast_to(np.asarray(reach, dtype=float), (self.dim,))
        for i, a in enumerate(self.axes):
            if a.periodic:
                continue
            lo = points[..., i].min() - reach[i]
            hi = points[..., i].max() + reach[i]
            slack = 1e-12 * max(1.0, abs(a.lower), abs(a.upper))
            if lo < a.lower - slack or hi > a.upper + slack:
                raise DomainError(
                    f"stencil on axis {a.name or i} spans [{lo:.6g}, {hi:.6g}], "
                    f"outside [{a.lower:.6g}, {a.upper:.6g}]")


@dataclass(frozen=True)
class Grid:
    points: np.ndarray
    shape: tuple[int, ...]
    axis_values: tuple[np.ndarray, ...]
    names: tuple[str, ...] = ()

    def __len__(self):
        return len(self.points)

    def index_grid(self):
        """Multi-indices of the points, in the same (row-major) order."""
        return np.array(list(np.ndindex(*self.shape)))


def sample_grid(box: CoordinateBox, resolution, margin=None, scheme=None) -> Grid:
    """Uniform tensor grid over ``box`` in row-major order.

    Periodic axes are partitioned without repeating the endpoint; non-periodic
    axes are inset by ``margin`` (default: the stencil reach of ``scheme``).
    """
    if np.ndim(resolution) == 0:
        resolution = (int(resolution),) * box.dim
    resolution = tuple(int(r) for r in resolution)
    if len(resolution) != box.dim:
        raise ConfigurationError("one resolution per axis is required")
    if any(r < 2 for r in resolution):
        raise ConfigurationError("resolution must be at least 2 on every axis")
    if margin is None:
        margin = (scheme or DiffScheme()).reach()
    margin = np.broadcast_to(np.asarray(margin, dtype=float), (box.dim,))
    values = []
    for a, r, m in zip(box.axes, resolution, margin):
        if a.periodic:
            values.append(np.linspace(a.lower, a.upper, r, endpoint=False))
        else:
            if a.lower + m >= a.upper - m:
                raise ConfigurationError(f"margin {m} leaves no room on axis {a.name}")
            values.append(np.linspace(a.lower + m, a.upper - m, r))
    mesh = np.meshgrid(*values, indexing="ij")
    pts = np.stack([c.reshape(-1) for c in mesh], axis=-1)
    return Grid(pts, resolution, tuple(values), box.names)


# -- differentiation scheme ----------------------------------------------


@lru_cache(maxsize=None)
def central_weights(deriv: int, accuracy: int):
    """Offsets and exact weights of the central stencil for ``d^deriv/dx^deriv``."""
    if deriv == 0:
        return np.array([0]), np.array([1.0])
    if accuracy % 2 or accuracy < 2:
        raise ConfigurationError("stencil order must be a positive even number")
    npts = 2 * ((deriv + 1) // 2) - 1 + accuracy
    r = npts // 2
    offsets = list(range(-r, r + 1))
    # exact rational solve of the moment (Vandermonde) system
    a = [[Fraction(o) ** q for o in offsets] + [Fraction(math.factorial(deriv) if q == deriv else 0)]
         for q in range(npts)]
    for col in range(npts):
        piv = next(i for i in range(col, npts) if a[i][col] != 0)
        a[col], a[piv] = a[piv], a[col]
        for i in range(npts):
            if i != col and a[i][col] != 0:
                f = a[i][col] / a[col][col]
                a[i] = [x - f * y for x, y in zip(a[i], a[col])]
    w = [a[i][npts] / a[i][i] for i in range(npts)]
    return np.array(offsets), np.array([float(x) for x in w])


@dataclass(frozen=True)
class DiffScheme:
    """Central differences with optional one-level Richardson extrapolation.

    ``h`` is the base step (scalar or per axis) for derivative orders 1-2;
    order-3 derivatives use ``high_order_factor * h`` to keep roundoff
    amplification (~ulp/h^3) in check.
    """

    h: float | tuple[float, ...] = 1e-2
    stencil_order: int = 4
    richardson: int = 1
    max_order: int = 3
    high_order_factor: float = 2.0
    use_jets: bool = True

    def __post_init__(self):
        if np.any(np.asarray(self.h, dtype=float) <= 0):
            raise ConfigurationError("step h must be positive")
        if self.stencil_order not in (2, 4):
            raise ConfigurationError("stencil order must be 2 or 4")
        if self.richardson not in (0, 1):
            raise ConfigurationError("Richardson levels must be 0 or 1")
        if not 1 <= self.max_order <= 3:
            raise ConfigurationError("max derivative order must be between 1 and 3")
        if self.high_order_factor <= 0:
            raise ConfigurationError("high_order_factor must be positive")

    @property
    def effective_order(self):
        return self.stencil_order + 2 * self.richardson

    def step(self, order, n):
        h = np.broadcast_to(np.asarray(self.h, dtype=float), (n,)).copy()
        return h * self.high_order_factor if order >= 3 else h

    def reach(self, n=1):
        """Largest coordinate offset any stencil of this scheme uses."""
        best = 0.0
        for k in range(1, self.max_order + 1):
            offsets, _ = central_weights(k, self.stencil_order)
            best = max(best, offsets.max() * self.step(k, n).max())
        return best


# -- fields ---------------------------------------------------------------


def as_batch(points, n=None):
    """Return ``(points as (N, n) array, was_single)``."""
    arr = np.asarray(points, dtype=float)
    single = arr.ndim == 1
    arr = np.atleast_2d(arr)
    if n is not None and arr.shape[-1] != n:
        raise ConfigurationError(f"expected {n}-dimensional points, got {arr.shape[-1]}")
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError("point coordinates must be finite")
    return arr, single


def unbatch(x, single):
    return x[0] if single else x


def _stack_matrix(entries, batch, n, order):
    rows = [[jets.to_arrays(e, batch, n, order) for e in row] for row in entries]
    m = len(rows)
    out = []
    for k in range(order + 1):
        out.append(np.stack([np.stack([rows[i][j][k] for j in range(m)], axis=1)
                             for i in range(m)], axis=1))
    return out


@dataclass(frozen=True, eq=False)
class Field:
    """Pure map from points to values.

    ``fn`` receives one coordinate array per axis and must be written with the
    helpers of :mod:`codazzi.jets`; it then also yields exact derivatives up
    to ``jet_order`` (set ``jet_order=0`` for numpy-only functions).
    """

    fn: Callable
    box: CoordinateBox
    jet_order: int = 3
    name: str = ""
    value_shape = ()

    @property
    def dim(self):
        return self.box.dim

    def _stack(self, raw, batch, order):
        return [np.asarray(x, dtype=float) for x in jets.to_arrays(raw, batch, self.dim, order)]

    def __call__(self, points):
        pts, single = as_batch(points, self.dim)
        pts = self.box.wrap(pts)
        raw = self.fn(*[pts[:, a] for a in range(self.dim)])
        return unbatch(np.array(self._stack(raw, pts.shape[:1], 0)[0]), single)

    def jets(self, points, order):
        """Exact derivative stack ``[value, d1, ..., d_order]`` (batched)."""
        if order > self.jet_order:
            raise ConfigurationError(
                f"field {self.name!r} declares exact jets only to order {self.jet_order}")
        pts, _ = as_batch(points, self.dim)
        pts = self.box.wrap(pts)
        coords = jets.seed([pts[:, a] for a in range(self.dim)], order)
        return [np.array(x) for x in self._stack(self.fn(*coords), pts.shape[:1], order)]


class ScalarField(Field):
    pass


class Sym2Field(Field):
    """Covariant symmetric 2-tensor; ``fn`` returns an n x n nested sequence."""

    @property
    def value_shape(self):
        return (self.dim, self.dim)

    def _stack(self, raw, batch, order):
        if isinstance(raw, np.ndarray) and raw.ndim >= 2 and order == 0:
            return [np.moveaxis(np.broadcast_to(raw, (self.dim, self.dim) + batch), (0, 1), (-2, -1))]
        return _stack_matrix(raw, batch, self.dim, order)


class MetricField(Sym2Field):
    def check_positive(self, points):
        """Raise :class:`DegenerateMetricError` where the metric is not SPD."""
        metric_inverse(self(points))


class DerivedSym2Field(Sym2Field):
    """Sym2 field whose value and derivatives come from a callable pipeline.

    ``stack_fn(points, order, scheme)`` returns the derivative stack.  Such
    fields differentiate through their own pipeline regardless of
    ``scheme.use_jets``; the pipeline decides how its inputs are obtained.
    """

    def __init__(self, stack_fn, box, jet_order=1, name=""):
        object.__setattr__(self, "fn", None)
        object.__setattr__(self, "box", box)
        object.__setattr__(self, "jet_order", jet_order)
        object.__setattr__(self, "name", name)
        object.__setattr__(self, "stack_fn", stack_fn)

    def __call__(self, points):
        pts, single = as_batch(points, self.dim)
        return unbatch(self.stack_fn(pts, 0, DiffScheme())[0], single)

    def derived_stack(self, points, order, scheme):
        if order > self.jet_order:
            raise ConfigurationError(f"derived field {self.name!r} supports order <= {self.jet_order}")
        return self.stack_fn(points, order, scheme)


# -- finite differences ---------------------------------------------------


def fd_partial(field: Field, points, axes: Sequence[int], scheme: "DiffScheme"):
    """Central-difference partial derivative along ``axes`` (batched points)."""
    pts, single = as_batch(points, field.dim)
    n = field.dim
    k = len(axes)
    if k == 0:
        return unbatch(field(pts), single)
    counts = Counter(axes)
    h = scheme.step(k, n)
    stencils = [(axis, *central_weights(c, scheme.stencil_order)) for axis, c in sorted(counts.items())]
    reach = np.zeros(n)
    for axis, offsets, _ in stencils:
        reach[axis] = offsets.max() * h[axis]
    field.box.check_reach(pts, reach)

    def estimate(step):
        total = 0.0
        for choice in itertools.product(*[range(len(o)) for _, o, _ in stencils]):
            w = 1.0
            shift = np.zeros(n)
            for (axis, offsets, weights), j in zip(stencils, choice):
                w *= weights[j] / step[axis] ** counts[axis]
                shift[axis] += offsets[j] * step[axis]
            if w == 0.0:
                continue
            total = total + w * field(pts + shift)
        return total

    d = estimate(h)
    if scheme.richardson:
        f = 2.0 ** scheme.stencil_order
        d = (f * estimate(h / 2.0) - d) / (f - 1.0)
    return unbatch(np.asarray(d), single)


def _fd_stack(field, pts, order, scheme):
    n = field.dim
    stack = [np.asarray(field(pts))]
    for k in range(1, order + 1):
        out = np.zeros(stack[0].shape + (n,) * k)
        for combo in itertools.combinations_with_replacement(range(n), k):
            val = fd_partial(field, pts, combo, scheme)
            for perm in set(itertools.permutations(combo)):
                out[(Ellipsis,) + perm] = val
        stack.append(out)
    return stack


def derivative_stack(field: Field, points, order: int, scheme: DiffScheme | None = None):
    """``[value, d1, ..., d_order]`` for a batch of points.

    Exact jets are used when the scheme allows it and the field declares them
    to sufficient order; otherwise central differences.
    """
    scheme = scheme or DiffScheme()
    if order > scheme.max_order:
        raise ConfigurationError(
            f"derivative order {order} exceeds scheme capability {scheme.max_order}")
    pts, _ = as_batch(points, field.dim)
    if isinstance(field, DerivedSym2Field):
        return field.derived_stack(pts, order, scheme)
    if scheme.use_jets and field.jet_order >= order:
        return field.jets(pts, order)
    return _fd_stack(field, pts, order, scheme)


def partial_derivative(field: Field, points, multi_index: Sequence[int], scheme: DiffScheme | None = None):
    """Partial derivative along the axes listed in ``multi_index``.

    ``(0,)`` is d/dx0, ``(0, 0, 2)`` is d3/dx0^2 dx2.
    """
    scheme = scheme or DiffScheme()
    multi_index = tuple(int(a) for a in multi_index)
    k = len(multi_index)
    if k > scheme.max_order:
        raise ConfigurationError(
            f"derivative order {k} exceeds scheme capability {scheme.max_order}")
    pts, single = as_batch(points, field.dim)
    if k == 0:
        return unbatch(np.asarray(field(pts)), single)
    if isinstance(field, DerivedSym2Field) or (scheme.use_jets and field.jet_order >= k):
        d = derivative_stack(field, pts, k, scheme)[k]
        return unbatch(d[(Ellipsis,) + multi_index], single)
    return unbatch(fd_partial(field, pts, multi_index, scheme), single)


# -- linear algebra helpers ----------------------------------------------


def metric_inverse(g_val):
    """Inverse of a (batch of) symmetric positive definite matrices."""
    g = np.asarray(g_val, dtype=float)
    lam = np.linalg.eigvalsh(0.5 * (g + np.swapaxes(g, -1, -2)))
    smallest = lam[..., 0].min() if lam.size else 0.0
    if not smallest > 0.0:
        raise DegenerateMetricError(smallest)
    inv = np.linalg.inv(g)
    return 0.5 * (inv + np.swapaxes(inv, -1, -2))
