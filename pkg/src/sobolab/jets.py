"""Truncated forward-mode Taylor (jet) arithmetic.

Nested dual numbers, generalized to a small multivariate truncation: a
:class:`Jet` stores Taylor coefficients in ``m`` infinitesimals, each
truncated at a per-axis order.  Every coefficient is a numpy array over an
arbitrary batch of evaluation points, so a whole quadrature grid is
differentiated in one vectorized sweep.

Only the operations the bump machinery needs exist here: ring operations,
and analytic functions (reciprocal, exp) built from nilpotent series.  In
the truncated algebra any product of more than ``sum(orders)`` infinitesimal
parts vanishes, so those series are exact, not approximations.
"""

from __future__ import annotations

import math

import numpy as np


class Jet:
    """Taylor coefficients c[i1, ..., im] of f(x + sum_j eps_j e_j).

    ``coef`` has shape ``(orders[0]+1, ..., orders[-1]+1) + batch_shape``;
    entry ``c[alpha]`` equals ``D^alpha f / alpha!`` evaluated on the batch.
    """

    __slots__ = ("orders", "coef")

    def __init__(self, orders, coef):
        self.orders = tuple(int(o) for o in orders)
        self.coef = np.asarray(coef, dtype=float)

    # -- constructors -----------------------------------------------------

    @classmethod
    def constant(cls, value, orders, batch_shape=None):
        value = np.asarray(value, dtype=float)
        if batch_shape is None:
            batch_shape = value.shape
        shape = tuple(o + 1 for o in orders) + tuple(batch_shape)
        coef = np.zeros(shape)
        coef[(0,) * len(orders)] = value
        return cls(orders, coef)

    @classmethod
    def variable(cls, value, order):
        """Univariate seed ``value + eps`` truncated at ``order``."""
        value = np.asarray(value, dtype=float)
        coef = np.zeros((order + 1,) + value.shape)
        coef[0] = value
        if order >= 1:
            coef[1] = 1.0
        return cls((order,), coef)

    # -- basics ------------------------------------------------------------

    @property
    def value(self):
        return self.coef[(0,) * len(self.orders)]

    @property
    def total_order(self):
        return sum(self.orders)

    def nilpotent(self):
        """Copy with the constant term dropped."""
        coef = self.coef.copy()
        coef[(0,) * len(self.orders)] = 0.0
        return Jet(self.orders, coef)

    def _index_space(self):
        return np.ndindex(*(o + 1 for o in self.orders))

    # -- ring operations ----------------------------------------------------

    def __add__(self, other):
        if isinstance(other, Jet):
            return Jet(self.orders, self.coef + other.coef)
        coef = self.coef.copy()
        coef[(0,) * len(self.orders)] += other
        return Jet(self.orders, coef)

    __radd__ = __add__

    def __neg__(self):
        return Jet(self.orders, -self.coef)

    def __sub__(self, other):
        if isinstance(other, Jet):
            return Jet(self.orders, self.coef - other.coef)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return Jet(self.orders, self.coef * other)
        out = np.zeros(np.broadcast_shapes(self.coef.shape, other.coef.shape))
        for i in self._index_space():
            a = self.coef[i]
            for j in other._index_space():
                k = tuple(ii + jj for ii, jj in zip(i, j))
                if all(kk <= o for kk, o in zip(k, self.orders)):
                    out[k] += a * other.coef[j]
        return Jet(self.orders, out)

    __rmul__ = __mul__


def nilpotent_series(coeffs, g):
    """Evaluate sum_k coeffs[k] * g**k for a nilpotent jet ``g``.

    ``coeffs`` is a sequence of batch arrays (or scalars), ``coeffs[k]``
    multiplying ``g**k``.  Exact once ``len(coeffs) > g.total_order``.
    """
    out = Jet.constant(np.asarray(coeffs[0], dtype=float), g.orders,
                       batch_shape=g.coef.shape[len(g.orders):])
    power = None
    for k in range(1, len(coeffs)):
        power = g if power is None else power * g
        out = out + power * coeffs[k]
    return out


def jet_recip(a):
    """1/a for a jet whose constant term is nonzero on every batch lane."""
    a0 = a.value
    g = a.nilpotent()
    s = g.total_order
    inv = 1.0 / a0
    coeffs = [inv * (-inv) ** k for k in range(s + 1)]
    return nilpotent_series(coeffs, g)


def jet_exp(a):
    """exp(a) via the (exact) truncated exponential series."""
    a0 = a.value
    g = a.nilpotent()
    s = g.total_order
    e = np.exp(a0)
    coeffs = [e / math.factorial(k) for k in range(s + 1)]
    return nilpotent_series(coeffs, g)
