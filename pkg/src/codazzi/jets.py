"""Truncated multivariate Taylor arithmetic (forward-mode jets up to order 3).

A :class:`Jet` carries the value of a scalar quantity together with its
partial derivatives, batched over an arbitrary leading shape::

    d[0]  shape B
    d[1]  shape B + (n,)          d[1][..., i]       = d/dx_i
    d[2]  shape B + (n, n)        d[2][..., i, j]    = d2/dx_i dx_j
    d[3]  shape B + (n, n, n)

Field functions written with the module-level helpers (:func:`exp`,
:func:`sin`, :func:`where`, ...) run unchanged on plain numpy arrays and
on jets, which is how closed-form fields get derivatives exact to
rounding.
"""

from __future__ import annotations

import numpy as np

MAX_ORDER = 3


def _expand(c, k):
    """Append ``k`` singleton axes to a batch-shaped array or scalar."""
    c = np.asarray(c, dtype=float)
    if c.ndim == 0 or k == 0:
        return c
    return c.reshape(c.shape + (1,) * k)


def _sym3(t):
    # t[..., i, j, k] symmetric in (i, j); returns t_ijk + t_ikj + t_jki
    return t + np.swapaxes(t, -1, -2) + np.moveaxis(t, -1, -3)


class Jet:
    __slots__ = ("d",)
    __array_priority__ = 1000

    def __init__(self, d):
        if not 1 <= len(d) <= MAX_ORDER + 1:
            raise ValueError(f"jet order must be between 0 and {MAX_ORDER}")
        self.d = [np.asarray(x, dtype=float) for x in d]

    @classmethod
    def variable(cls, values, axis, n, order):
        values = np.asarray(values, dtype=float)
        d = [values]
        if order >= 1:
            d1 = np.zeros(values.shape + (n,))
            d1[..., axis] = 1.0
            d.append(d1)
        for k in range(2, order + 1):
            d.append(np.zeros(values.shape + (n,) * k))
        return cls(d)

    @classmethod
    def constant(cls, values, n, order, shape=None):
        values = np.asarray(values, dtype=float)
        if shape is not None:
            values = np.broadcast_to(values, shape).copy()
        return cls([values] + [np.zeros(values.shape + (n,) * k) for k in range(1, order + 1)])

    @property
    def order(self):
        return len(self.d) - 1

    @property
    def n(self):
        return self.d[1].shape[-1] if self.order >= 1 else 0

    @property
    def value(self):
        return self.d[0]

    def __repr__(self):
        return f"Jet(order={self.order}, n={self.n}, shape={self.d[0].shape})"

    # -- arithmetic -------------------------------------------------------

    def __neg__(self):
        return Jet([-x for x in self.d])

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet([a + b for a, b in zip(self.d, other.d)])
        d0 = self.d[0] + np.asarray(other, dtype=float)
        nb = self.d[0].ndim
        return Jet([d0] + [np.broadcast_to(x, d0.shape + x.shape[nb:]) for x in self.d[1:]])

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet([x * _expand(other, k) for k, x in enumerate(self.d)])
        a, b = self.d, other.d
        out = [a[0] * b[0]]
        if self.order >= 1:
            out.append(a[1] * b[0][..., None] + a[0][..., None] * b[1])
        if self.order >= 2:
            cross = a[1][..., :, None] * b[1][..., None, :]
            out.append(a[2] * _expand(b[0], 2) + cross + np.swapaxes(cross, -1, -2)
                       + _expand(a[0], 2) * b[2])
        if self.order >= 3:
            t21 = a[2][..., :, :, None] * b[1][..., None, None, :]
            t12 = b[2][..., :, :, None] * a[1][..., None, None, :]
            out.append(a[3] * _expand(b[0], 3) + _sym3(t21) + _sym3(t12)
                       + _expand(a[0], 3) * b[3])
        return Jet(out)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, Jet):
            raise TypeError("jet exponents are not supported")
        p = float(p)
        a = self.d[0]
        f, c = [], 1.0
        for k in range(MAX_ORDER + 1):
            # integer powers terminate; avoid 0 * inf at a == 0
            f.append(np.zeros_like(a) if c == 0.0 else c * a ** (p - k))
            c *= p - k
        return self._compose(f)

    def reciprocal(self):
        a = self.d[0]
        inv = 1.0 / a
        return self._compose([inv, -inv ** 2, 2.0 * inv ** 3, -6.0 * inv ** 4])

    # -- univariate composition (Faa di Bruno up to order 3) ---------------

    def _compose(self, f):
        """Return phi(self) given ``f = [phi, phi', phi'', phi''']`` at the value."""
        a = self.d
        out = [np.asarray(f[0], dtype=float)]
        if self.order >= 1:
            out.append(_expand(f[1], 1) * a[1])
        if self.order >= 2:
            out.append(_expand(f[2], 2) * a[1][..., :, None] * a[1][..., None, :]
                       + _expand(f[1], 2) * a[2])
        if self.order >= 3:
            a111 = a[1][..., :, None, None] * a[1][..., None, :, None] * a[1][..., None, None, :]
            t21 = a[2][..., :, :, None] * a[1][..., None, None, :]
            out.append(_expand(f[3], 3) * a111 + _expand(f[2], 3) * _sym3(t21)
                       + _expand(f[1], 3) * a[3])
        return Jet(out)


# -- dispatching helpers --------------------------------------------------


def value(x):
    """Primal value of a jet, or the input itself."""
    return x.d[0] if isinstance(x, Jet) else x


def exp(x):
    if isinstance(x, Jet):
        e = np.exp(x.d[0])
        return x._compose([e, e, e, e])
    return np.exp(x)


def log(x):
    if isinstance(x, Jet):
        a = x.d[0]
        return x._compose([np.log(a), 1.0 / a, -1.0 / a ** 2, 2.0 / a ** 3])
    return np.log(x)


def sin(x):
    if isinstance(x, Jet):
        s, c = np.sin(x.d[0]), np.cos(x.d[0])
        return x._compose([s, c, -s, -c])
    return np.sin(x)


def cos(x):
    if isinstance(x, Jet):
        s, c = np.sin(x.d[0]), np.cos(x.d[0])
        return x._compose([c, -s, -c, s])
    return np.cos(x)


def sqrt(x):
    if isinstance(x, Jet):
        return x ** 0.5
    return np.sqrt(x)


def where(cond, a, b):
    """Elementwise select; derivative parts follow the selected branch."""
    cond = np.asarray(cond, dtype=bool)
    if not isinstance(a, Jet) and not isinstance(b, Jet):
        return np.where(cond, a, b)
    ref = a if isinstance(a, Jet) else b
    n, order = ref.n, ref.order
    shape = np.broadcast_shapes(cond.shape, ref.d[0].shape)
    if not isinstance(a, Jet):
        a = Jet.constant(a, n, order, shape)
    if not isinstance(b, Jet):
        b = Jet.constant(b, n, order, shape)
    return Jet([np.where(_expand(cond, k), x, y) for k, (x, y) in enumerate(zip(a.d, b.d))])


def seed(coords, order):
    """Independent variables as jets: ``coords`` is a sequence of n arrays."""
    n = len(coords)
    return [Jet.variable(c, a, n, order) for a, c in enumerate(coords)]


def to_arrays(v, batch_shape, n, order):
    """Normalize a jet or constant into the list ``[d0, d1, ...]`` of arrays."""
    if isinstance(v, Jet):
        return [np.broadcast_to(x, batch_shape + (n,) * k) for k, x in enumerate(v.d)]
    v = np.broadcast_to(np.asarray(v, dtype=float), batch_shape)
    return [v] + [np.zeros(batch_shape + (n,) * k) for k in range(1, order + 1)]
