"""Truncated forward-mode jets over numpy arrays.

A :class:`Jet` carries an array value together with its first and
(optionally) second partial derivatives with respect to a fixed list of
``n`` seed variables.  Tangent axes are stored in front of the value axes,
so ``grad`` has shape ``(n,) + shape`` and ``hess`` has ``(n, n) + shape``.

Order 2 jets carry value, gradient and Hessian; order 1 jets drop the
Hessian; order 0 jets are plain values.  Mixing orders truncates to the
lowest one.  Plain numpy arrays and floats act as exact constants.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np

_TANGENT_LETTERS = "YZ"


class Jet:
    __slots__ = ("val", "grad", "hess")
    __array_ufunc__ = None  # make numpy defer to the reflected jet operators

    def __init__(self, val, grad=None, hess=None):
        self.val = np.asarray(val, dtype=float)
        self.grad = None if grad is None else np.asarray(grad, dtype=float)
        self.hess = None if hess is None or grad is None else np.asarray(hess, dtype=float)

    # -- construction -----------------------------------------------------
    @classmethod
    def seed(cls, values: Sequence[float], order: int = 2) -> "Jet":
        """Independent variables: ``values[k]`` has unit derivative along axis k."""
        values = np.asarray(values, dtype=float)
        n = values.shape[0]
        if order <= 0:
            return cls(values)
        grad = np.eye(n)
        hess = np.zeros((n, n, n)) if order >= 2 else None
        return cls(values, grad, hess)

    @classmethod
    def constant(cls, value, n: int, order: int = 2) -> "Jet":
        value = np.asarray(value, dtype=float)
        grad = np.zeros((n,) + value.shape) if order >= 1 else None
        hess = np.zeros((n, n) + value.shape) if order >= 2 else None
        return cls(value, grad, hess)

    # -- introspection ----------------------------------------------------
    @property
    def order(self) -> int:
        if self.grad is None:
            return 0
        return 1 if self.hess is None else 2

    @property
    def nvars(self) -> int:
        return 0 if self.grad is None else self.grad.shape[0]

    @property
    def shape(self) -> tuple:
        return self.val.shape

    @property
    def ndim(self) -> int:
        return self.val.ndim

    def truncate(self, order: int) -> "Jet":
        if order >= self.order:
            return self
        if order <= 0:
            return Jet(self.val)
        return Jet(self.val, self.grad)

    def derivative(self) -> "Jet":
        """Jet of the partial derivatives; the new leading axis indexes the variable."""
        if self.grad is None:
            raise ValueError("jet carries no derivative information")
        return Jet(self.grad, self.hess)

    def __repr__(self) -> str:
        return f"Jet(shape={self.shape}, order={self.order}, nvars={self.nvars})"

    # -- structural ops ---------------------------------------------------
    def _map(self, fn: Callable[[np.ndarray, int], np.ndarray]) -> "Jet":
        """Apply a linear structural map to value, gradient and Hessian alike."""
        grad = None if self.grad is None else fn(self.grad, 1)
        hess = None if self.hess is None else fn(self.hess, 2)
        return Jet(fn(self.val, 0), grad, hess)

    def __getitem__(self, idx) -> "Jet":
        if not isinstance(idx, tuple):
            idx = (idx,)
        return self._map(lambda a, k: a[(slice(None),) * k + idx])

    def transpose(self, *axes) -> "Jet":
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        if not axes:
            axes = tuple(reversed(range(self.ndim)))
        return self._map(lambda a, k: a.transpose(tuple(range(k)) + tuple(x + k for x in axes)))

    @property
    def T(self) -> "Jet":
        return self.transpose()

    def swapaxes(self, i: int, j: int) -> "Jet":
        i, j = i % self.ndim, j % self.ndim
        return self._map(lambda a, k: np.swapaxes(a, i + k, j + k))

    def moveaxis(self, source: int, destination: int) -> "Jet":
        return self._map(lambda a, k: np.moveaxis(a, source + k, destination + k))

    def reshape(self, *shape) -> "Jet":
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return self._map(lambda a, k: a.reshape(a.shape[:k] + tuple(shape)))

    def sum(self, axis=None) -> "Jet":
        if axis is None:
            axis = tuple(range(self.ndim))
        if not isinstance(axis, tuple):
            axis = (axis,)
        axis = tuple(x % self.ndim for x in axis)
        return self._map(lambda a, k: a.sum(axis=tuple(x + k for x in axis)))

    # -- arithmetic -------------------------------------------------------
    def _expand(self, ndim: int) -> "Jet":
        """Insert leading value axes so tangent axes never meet value axes in broadcasting."""
        missing = ndim - self.ndim
        if missing <= 0:
            return self
        return self._map(lambda a, k: a.reshape(a.shape[:k] + (1,) * missing + a.shape[k:]))

    def __add__(self, other):
        other = _as_operand(other)
        if not isinstance(other, Jet):
            ndim = max(self.ndim, np.ndim(other))
            a = self._expand(ndim)
            return Jet(a.val + other, a.grad, a.hess)
        order = min(self.order, other.order)
        ndim = max(self.ndim, other.ndim)
        a, b = self.truncate(order)._expand(ndim), other.truncate(order)._expand(ndim)
        grad = None if order < 1 else a.grad + b.grad
        hess = None if order < 2 else a.hess + b.hess
        return Jet(a.val + b.val, grad, hess)

    __radd__ = __add__

    def __neg__(self):
        return self._map(lambda a, k: -a)

    def __pos__(self):
        return self

    def __sub__(self, other):
        return self + (-_as_operand(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = _as_operand(other)
        if not isinstance(other, Jet):
            a = self._expand(np.ndim(other))
            return a._map(lambda arr, k: arr * other)
        order = min(self.order, other.order)
        ndim = max(self.ndim, other.ndim)
        a, b = self.truncate(order)._expand(ndim), other.truncate(order)._expand(ndim)
        val = a.val * b.val
        if order == 0:
            return Jet(val)
        grad = a.grad * b.val + a.val * b.grad
        hess = None
        if order == 2:
            ga = a.grad[:, None]
            gb = b.grad[None, :]
            hess = a.hess * b.val + ga * gb + np.swapaxes(ga * gb, 0, 1) + a.val * b.hess
        return Jet(val, grad, hess)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_operand(other)
        if not isinstance(other, Jet):
            return self * (1.0 / other)
        return self * reciprocal(other)

    def __rtruediv__(self, other):
        return reciprocal(self) * other

    def __pow__(self, exponent: float):
        e = float(exponent)
        return _unary(self, lambda x: x**e, lambda x: e * x ** (e - 1), lambda x: e * (e - 1) * x ** (e - 2))


def _as_operand(x):
    if isinstance(x, Jet):
        return x
    return np.asarray(x, dtype=float)


def _unary(x, f, df, d2f):
    if not isinstance(x, Jet):
        return f(np.asarray(x, dtype=float))
    v = x.val
    val = f(v)
    if x.order == 0:
        return Jet(val)
    d1 = df(v)
    grad = d1 * x.grad
    hess = None
    if x.order == 2:
        hess = d2f(v) * (x.grad[:, None] * x.grad[None, :]) + d1 * x.hess
    return Jet(val, grad, hess)


def sin(x):
    return _unary(x, np.sin, np.cos, lambda v: -np.sin(v))


def cos(x):
    return _unary(x, np.cos, lambda v: -np.sin(v), lambda v: -np.cos(v))


def exp(x):
    return _unary(x, np.exp, np.exp, np.exp)


def sqrt(x):
    return _unary(x, np.sqrt, lambda v: 0.5 / np.sqrt(v), lambda v: -0.25 / (v * np.sqrt(v)))


def reciprocal(x):
    return _unary(x, lambda v: 1.0 / v, lambda v: -1.0 / v**2, lambda v: 2.0 / v**3)


def absolute(x):
    return _unary(x, np.abs, np.sign, np.zeros_like)


def value(x) -> np.ndarray:
    """Plain value of a jet or array."""
    return x.val if isinstance(x, Jet) else np.asarray(x, dtype=float)


def order_of(x) -> int:
    return x.order if isinstance(x, Jet) else 99


# -- einsum ----------------------------------------------------------------

def _parse(spec: str, count: int) -> tuple[list[str], str]:
    inputs, output = spec.replace(" ", "").split("->")
    parts = inputs.split(",")
    if len(parts) != count:
        raise ValueError(f"einsum spec {spec!r} expects {len(parts)} operands, got {count}")
    return parts, output


def einsum(spec: str, *operands):
    """Einstein summation with exact propagation of first and second derivatives.

    Subscripts must use lowercase letters and ``X``; the letters ``Y`` and ``Z``
    are reserved for tangent axes.
    """
    parts, output = _parse(spec, len(operands))
    ops = [_as_operand(o) for o in operands]
    jets = [k for k, o in enumerate(ops) if isinstance(o, Jet)]
    vals = [value(o) for o in ops]
    val = np.einsum(spec, *vals)
    if not jets:
        return val
    if any(ops[k].order == 0 for k in jets):
        return Jet(val)
    order = min(ops[k].order for k in jets)
    y, z = _TANGENT_LETTERS

    def contract(replacements: dict[int, tuple[np.ndarray, str]], prefix: str) -> np.ndarray:
        subs, arrays = [], []
        for k, part in enumerate(parts):
            if k in replacements:
                arr, letters = replacements[k]
                subs.append(letters + part)
                arrays.append(arr)
            else:
                subs.append(part)
                arrays.append(vals[k])
        return np.einsum(",".join(subs) + "->" + prefix + output, *arrays)

    grad = 0.0
    for k in jets:
        grad = grad + contract({k: (ops[k].grad, y)}, y)
    hess = None
    if order == 2:
        hess = 0.0
        for k in jets:
            hess = hess + contract({k: (ops[k].hess, y + z)}, y + z)
        for a in jets:
            for b in jets:
                if a != b:
                    hess = hess + contract({a: (ops[a].grad, y), b: (ops[b].grad, z)}, y + z)
    return Jet(val, grad, hess)


# -- linear algebra and assembly -------------------------------------------

def inv(m):
    """Matrix inverse over the last two axes."""
    if not isinstance(m, Jet):
        return np.linalg.inv(m)
    b = np.linalg.inv(m.val)
    if m.order == 0:
        return Jet(b)
    # d(B) = -B dA B
    db = -np.einsum("ij,yjk,kl->yil", b, m.grad, b)
    hess = None
    if m.order == 2:
        t = np.einsum("ij,yjk->yik", b, m.grad)  # B dA
        two = np.einsum("yij,zjk,kl->yzil", t, t, b)
        hess = two + np.swapaxes(two, 0, 1) - np.einsum("ij,yzjk,kl->yzil", b, m.hess, b)
    return Jet(b, db, hess)


def stack(items: Iterable, axis: int = 0):
    items = [_as_operand(i) for i in items]
    if not any(isinstance(i, Jet) for i in items):
        return np.stack(items, axis=axis)
    jets = [i for i in items if isinstance(i, Jet)]
    order = min(j.order for j in jets)
    n = jets[0].nvars
    lifted = [(i if isinstance(i, Jet) else Jet.constant(i, n, order)).truncate(order) for i in items]
    ndim = lifted[0].ndim + 1
    axis = axis % ndim
    val = np.stack([j.val for j in lifted], axis=axis)
    grad = np.stack([j.grad for j in lifted], axis=axis + 1) if order >= 1 else None
    hess = np.stack([j.hess for j in lifted], axis=axis + 2) if order >= 2 else None
    return Jet(val, grad, hess)


def zeros_like_jet(shape: tuple, like) -> Jet | np.ndarray:
    if isinstance(like, Jet):
        return Jet.constant(np.zeros(shape), like.nvars, like.order)
    return np.zeros(shape)


def as_jet(x, n: int, order: int = 2) -> Jet:
    return x if isinstance(x, Jet) else Jet.constant(x, n, order)


def embed(x, nvars: int, offset: int = 0):
    """Re-express a jet in a larger variable list.

    The variables of ``x`` become variables ``offset .. offset + x.nvars - 1``
    of the new list; derivatives along the other variables are zero.
    """
    if not isinstance(x, Jet) or x.order == 0:
        return x
    n = x.nvars
    grad = np.zeros((nvars,) + x.shape)
    grad[offset:offset + n] = x.grad
    hess = None
    if x.order == 2:
        hess = np.zeros((nvars, nvars) + x.shape)
        hess[offset:offset + n, offset:offset + n] = x.hess
    return Jet(x.val, grad, hess)
