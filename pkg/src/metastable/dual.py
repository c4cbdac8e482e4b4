"""Forward-mode dual numbers that nest, for exact first and second derivatives.

A :class:`Dual` carries ``real + eps * ε`` with ``ε² = 0``.  Both parts may
themselves be duals, so ``Dual(Dual(x, 1), Dual(1, 0))`` differentiates twice.
Parts may also be numpy arrays, which lets one evaluation cover many points.
"""

import numpy as np

from .errors import DomainError


class Dual:
    __slots__ = ("real", "eps")
    # make numpy defer to the reflected dual operators instead of broadcasting
    __array_ufunc__ = None

    def __init__(self, real, eps=0.0):
        self.real = real
        self.eps = eps

    def __repr__(self):
        return f"Dual({self.real!r}, {self.eps!r})"

    def __add__(self, other):
        if isinstance(other, Dual):
            return Dual(self.real + other.real, self.eps + other.eps)
        return Dual(self.real + other, self.eps)

    __radd__ = __add__

    def __neg__(self):
        return Dual(-self.real, -self.eps)

    def __sub__(self, other):
        if isinstance(other, Dual):
            return Dual(self.real - other.real, self.eps - other.eps)
        return Dual(self.real - other, self.eps)

    def __rsub__(self, other):
        return Dual(other - self.real, -self.eps)

    def __mul__(self, other):
        if isinstance(other, Dual):
            return Dual(self.real * other.real,
                        self.real * other.eps + self.eps * other.real)
        return Dual(self.real * other, self.eps * other)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Dual):
            inv = reciprocal(other)
            return self * inv
        return Dual(self.real / other, self.eps / other)

    def __rtruediv__(self, other):
        return reciprocal(self) * other


def real_part(v):
    """Innermost real value of a (possibly nested) dual."""
    while isinstance(v, Dual):
        v = v.real
    return v


def _check_finite(v, what):
    r = real_part(v)
    if not np.all(np.isfinite(r)):
        raise DomainError(f"non-finite value in {what}")


def reciprocal(v):
    if isinstance(v, Dual):
        inv = reciprocal(v.real)
        return Dual(inv, -v.eps * inv * inv)
    if np.any(np.asarray(v) == 0):
        raise DomainError("division by zero")
    return 1.0 / v


def exp(v):
    if isinstance(v, Dual):
        e = exp(v.real)
        return Dual(e, e * v.eps)
    with np.errstate(over="ignore"):
        out = np.exp(v)
    _check_finite(out, "exp")
    return out


def log(v):
    if isinstance(v, Dual):
        return Dual(log(v.real), v.eps * reciprocal(v.real))
    if np.any(np.asarray(v) <= 0):
        raise DomainError("ln of a non-positive number")
    return np.log(v)


def sin(v):
    if isinstance(v, Dual):
        return Dual(sin(v.real), cos(v.real) * v.eps)
    return np.sin(v)


def cos(v):
    if isinstance(v, Dual):
        return Dual(cos(v.real), -sin(v.real) * v.eps)
    return np.cos(v)


def sqrt(v):
    if isinstance(v, Dual):
        s = sqrt(v.real)
        return Dual(s, v.eps * reciprocal(2.0 * s))
    if np.any(np.asarray(v) < 0):
        raise DomainError("sqrt of a negative number")
    return np.sqrt(v)


def power(base, exponent):
    """``base ** exponent`` for a constant real exponent.

    Integer exponents accept any base; other exponents need a non-negative
    base.  A variable exponent goes through ``exp(exponent * log(base))``.
    """
    if isinstance(exponent, Dual):
        return exp(exponent * log(base))
    p = float(exponent)
    if isinstance(base, Dual):
        if p == 0.0:
            return Dual(power(base.real, 0.0), 0.0 * base.eps)
        return Dual(power(base.real, p), p * power(base.real, p - 1.0) * base.eps)
    if not p.is_integer() and np.any(np.asarray(base) < 0):
        raise DomainError("non-integer power of a negative base")
    if p < 0 and np.any(np.asarray(base) == 0):
        raise DomainError("negative power of zero")
    if p.is_integer() and p >= 0:
        return _int_power(base, int(p))
    return np.power(base, p)


def _int_power(base, n):
    # repeated squaring keeps integer powers of negative bases exact in sign
    result = np.ones_like(np.asarray(base, dtype=float)) if np.ndim(base) else 1.0
    b = base
    while n:
        if n & 1:
            result = result * b
        b = b * b
        n >>= 1
    return result


def seed(point, i, j):
    """Nested-dual coordinates for the second derivative along axes ``i`` and ``j``.

    Returns a tuple with one entry per coordinate; evaluate the function on it
    and read ``value.real.real`` (f), ``value.real.eps`` (∂_i f),
    ``value.eps.real`` (∂_j f) and ``value.eps.eps`` (∂_i ∂_j f).
    """
    coords = []
    for k, xk in enumerate(point):
        inner = Dual(xk, 1.0 if k == i else 0.0)
        outer = Dual(1.0 if k == j else 0.0, 0.0)
        coords.append(Dual(inner, outer))
    return tuple(coords)
