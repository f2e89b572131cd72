"""Dense component arithmetic for forms, multivectors and mixed tensors.

Forms and multivectors are stored as their full antisymmetric component
arrays, ``F[a, b] = F(e_a, e_b)``, with the determinant convention for the
wedge product: ``(alpha ^ beta)(X, Y) = alpha(X) beta(Y) - alpha(Y) beta(X)``.
A coordinate expansion written as ``A_ab d^a ^ d^b`` therefore has full
components ``A - A.T`` (see :func:`expansion_to_full`).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import jet as J
from .scales import DIMENSIONLESS, ScaleDim, require_same

CO = "co"
CONTRA = "contra"


class ShapeError(ValueError):
    pass


class ContractionError(ValueError):
    pass


# -- permutations ------------------------------------------------------------

def permutation_sign(perm: Sequence[int]) -> int:
    perm = list(perm)
    sign = 1
    seen = [False] * len(perm)
    for start in range(len(perm)):
        if seen[start]:
            continue
        length = 0
        k = start
        while not seen[k]:
            seen[k] = True
            k = perm[k]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def shuffles(p: int, q: int):
    """Yield ``(sign, order)`` for every (p, q)-shuffle of ``range(p + q)``."""
    n = p + q
    for first in itertools.combinations(range(n), p):
        rest = [k for k in range(n) if k not in first]
        order = list(first) + rest
        yield permutation_sign(order), order


# -- array kernels -----------------------------------------------------------

def alt_array(a: np.ndarray, axes: Sequence[int] | None = None) -> np.ndarray:
    """Antisymmetrize over ``axes`` with the 1/p! normalization."""
    a = np.asarray(a, dtype=float)
    axes = list(range(a.ndim)) if axes is None else [x % a.ndim for x in axes]
    lengths = {a.shape[x] for x in axes}
    if len(lengths) > 1:
        raise ShapeError(f"cannot antisymmetrize axes of unequal lengths {sorted(lengths)}")
    p = len(axes)
    if p < 2:
        return a.copy()
    out = np.zeros_like(a)
    for perm in itertools.permutations(range(p)):
        order = list(range(a.ndim))
        for slot, src in zip(axes, perm):
            order[slot] = axes[src]
        out += permutation_sign(perm) * np.transpose(a, order)
    return out / math.factorial(p)


def sym_array(a: np.ndarray, axes: Sequence[int] | None = None) -> np.ndarray:
    """Symmetrize over ``axes`` with the 1/p! normalization."""
    a = np.asarray(a, dtype=float)
    axes = list(range(a.ndim)) if axes is None else [x % a.ndim for x in axes]
    p = len(axes)
    out = np.zeros_like(a)
    for perm in itertools.permutations(range(p)):
        order = list(range(a.ndim))
        for slot, src in zip(axes, perm):
            order[slot] = axes[src]
        out += np.transpose(a, order)
    return out / math.factorial(p)


def shuffle_sum(product, p: int, q: int):
    """Turn an outer product ``a (x) b`` of antisymmetric arrays into ``a ^ b``.

    ``product`` has ``p + q`` leading axes (it may be a :class:`Jet`).
    """
    n = p + q
    if n == 0:
        return product
    if p == 0 or q == 0:
        return product
    total = None
    for sign, order in shuffles(p, q):
        axes = list(np.argsort(order))
        if isinstance(product, J.Jet):
            term = product.transpose(axes + list(range(n, product.ndim)))
        else:
            term = np.transpose(product, axes + list(range(n, np.ndim(product))))
        term = term * float(sign)
        total = term if total is None else total + term
    return total


def _outer(a, b):
    a_nd, b_nd = np.ndim(J.value(a)), np.ndim(J.value(b))
    letters = "abcdefghijklmnopqrstuvw"
    sa, sb = letters[:a_nd], letters[a_nd:a_nd + b_nd]
    return J.einsum(f"{sa},{sb}->{sa}{sb}", a, b)


def wedge_array(a, b):
    """Wedge product of full antisymmetric arrays (jets allowed)."""
    p, q = np.ndim(J.value(a)), np.ndim(J.value(b))
    if p == 0 or q == 0:
        return a * b
    dim = J.value(a).shape[0]
    if p + q > dim:
        shape = (dim,) * (p + q)
        return np.zeros(shape)
    return shuffle_sum(_outer(a, b), p, q)


def wedge_many(*arrays):
    out = arrays[0]
    for arr in arrays[1:]:
        out = wedge_array(out, arr)
    return out


def wedge_component(arrays: Sequence[np.ndarray], index: Sequence[int]) -> float:
    """A single component of ``a_1 ^ ... ^ a_k`` evaluated by Laplace expansion.

    Cheap for top-degree products where the full array would be huge.
    """
    arrays = [np.asarray(J.value(a), dtype=float) for a in arrays]
    index = tuple(index)
    if not arrays:
        return 1.0
    first, rest = arrays[0], arrays[1:]
    p = first.ndim
    if p == 0:
        return float(first) * wedge_component(rest, index)
    total = 0.0
    n = len(index)
    for chosen in itertools.combinations(range(n), p):
        remaining = [k for k in range(n) if k not in chosen]
        sign = permutation_sign(list(chosen) + remaining)
        head = first[tuple(index[k] for k in chosen)]
        if head == 0.0:
            continue
        total += sign * head * wedge_component(rest, [index[k] for k in remaining])
    return total


def expansion_to_full(coeff):
    """Full 2-form components of the expansion ``coeff_ab d^a ^ d^b``."""
    return coeff - coeff.swapaxes(0, 1) if isinstance(coeff, J.Jet) else coeff - np.swapaxes(coeff, 0, 1)


def expansion3_to_full(coeff):
    """Full 3-form components of ``coeff_abc d^a ^ d^b ^ d^c`` (3! alt of the coefficient)."""
    return 6.0 * alt_array(J.value(coeff))


def expand_wedge(coeff, *bases):
    """Full components of ``coeff_{a b ..} U_a ^ V_b ^ ..``.

    Each basis is a ``(k, dim)`` array (or jet) whose rows are the chart
    components of the factors; two factors are allowed for jets.
    """
    p = len(bases)
    letters = "abcdefgh"[:p]
    outs = "pqrstuvw"[:p]
    spec = letters + "," + ",".join(f"{l}{o}" for l, o in zip(letters, outs)) + "->" + outs
    prod = J.einsum(spec, coeff, *bases)
    if p == 2:
        return prod - prod.swapaxes(0, 1) if isinstance(prod, J.Jet) else prod - prod.T
    return math.factorial(p) * alt_array(J.value(prod))


def pair(multivector: np.ndarray, form: np.ndarray) -> float:
    """Total contraction ``i_A F = (1/p!) A^{a..} F_{a..}`` of equal degrees."""
    a, f = np.asarray(J.value(multivector)), np.asarray(J.value(form))
    if a.shape != f.shape:
        raise ContractionError(f"degree mismatch {a.shape} vs {f.shape}")
    return float(np.sum(a * f)) / math.factorial(a.ndim)


def insert_vector(vector, form):
    """``i_X F``: contraction of ``X`` into the first slot of ``F``."""
    nd = np.ndim(J.value(form))
    letters = "abcdefgh"[:nd]
    return J.einsum(f"{letters[0]},{letters}->{letters[1:]}", vector, form)


def insert_covector(covector, multivector):
    """``i_alpha A``: contraction into the first slot of a multivector."""
    return insert_vector(covector, multivector)


def exterior_derivative(form_jet: J.Jet, dim: int | None = None) -> np.ndarray:
    """Coordinate exterior derivative from a first-order jet of full components."""
    if form_jet.order < 1:
        raise ValueError("exterior derivative needs a jet with first derivatives")
    grad = form_jet.grad
    dim = grad.shape[0] if dim is None else dim
    grad = grad[:dim]
    p = form_jet.ndim
    out = np.zeros(grad.shape)
    for k in range(p + 1):
        out += (-1) ** k * np.moveaxis(grad, 0, k)
    return out


def exterior_derivative_jet(form_jet: J.Jet) -> J.Jet:
    """Exterior derivative keeping one order of derivatives (input must be order 2)."""
    d = form_jet.derivative()
    out = d
    for k in range(1, form_jet.ndim + 1):
        out = out + d.moveaxis(0, k) * float((-1) ** k)
    return out


def schouten(a: J.Jet, b: J.Jet, sign: float = 1.0) -> np.ndarray:
    """Schouten bracket of multivector fields given as first-order jets.

    Uses ``[A, B] = sum_k A_r^k ^ d_k B - (-1)^{(a-1)(b-1)} B_r^k ^ d_k A`` with
    ``A_r^k`` the contraction of ``dx^k`` into the last slot.  For a vector
    field ``X`` this gives ``[X, B] = L_X B``.  ``sign`` multiplies the
    bracket of two multivectors of degree >= 2 and selects between the two
    conventions that both extend the Lie derivative.
    """
    pa, pb = a.ndim, b.ndim
    if pa < 1 or pb < 1:
        raise ValueError("Schouten bracket is implemented for degrees >= 1")
    av, bv = a.val, b.val
    ag, bg = a.grad, b.grad
    first = _right_slot_product(av, bg)
    second = _right_slot_product(bv, ag)
    term1 = shuffle_sum(first, pa - 1, pb)
    term2 = shuffle_sum(second, pb - 1, pa)
    out = term1 - (-1) ** ((pa - 1) * (pb - 1)) * term2
    if pa >= 2 and pb >= 2:
        out = sign * out
    return out


def _right_slot_product(m: np.ndarray, grad: np.ndarray) -> np.ndarray:
    """``sum_k m[..., k] (x) grad[k, ...]``."""
    p = m.ndim
    q = grad.ndim - 1
    letters = "abcdefghij"
    sm, sg = letters[:p - 1], letters[p - 1:p - 1 + q]
    return np.einsum(f"{sm}k,k{sg}->{sm}{sg}", m, grad)


def lie_derivative_form(vector: J.Jet, form: J.Jet) -> np.ndarray:
    """``L_X F`` for first-order jets ``X`` and ``F`` (Cartan formula in coordinates)."""
    x, f = vector.val, form.val
    p = form.ndim
    out = np.einsum("k,k...->...", x, form.grad)
    letters = "abcdefgh"[:p]
    for slot in range(p):
        src = letters[:slot] + "k" + letters[slot + 1:]
        out = out + np.einsum(f"{src},{letters[slot]}k->{letters}", f, vector.grad)
    return out


def lie_derivative_multivector(vector: J.Jet, mv: J.Jet) -> np.ndarray:
    """``L_X A`` for a multivector field ``A``."""
    x, a = vector.val, mv.val
    p = mv.ndim
    out = np.einsum("k,k...->...", x, mv.grad)
    letters = "abcdefgh"[:p]
    for slot in range(p):
        src = letters[:slot] + "k" + letters[slot + 1:]
        out = out - np.einsum(f"{src},k{letters[slot]}->{letters}", a, vector.grad)
    return out


# -- typed wrapper -------------------------------------------------------------

@dataclass(frozen=True)
class Components:
    """Dense component array with per-axis variance and a scale dimension.

    ``symmetry`` is ``"antisymmetric"``, ``"symmetric"`` or ``None``; flagged
    arrays are validated on construction.
    """

    data: np.ndarray
    variance: tuple[str, ...]
    scale: ScaleDim = DIMENSIONLESS
    symmetry: str | None = None
    atol: float = field(default=1e-12, compare=False)

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        object.__setattr__(self, "data", data)
        if len(self.variance) != data.ndim:
            raise ShapeError(f"{data.ndim} axes but {len(self.variance)} variance flags")
        if any(v not in (CO, CONTRA) for v in self.variance):
            raise ShapeError(f"unknown variance flag in {self.variance}")
        if self.symmetry == "antisymmetric" and data.ndim >= 2:
            if not np.allclose(alt_array(data), data, atol=self.atol, rtol=0):
                raise ShapeError("array flagged antisymmetric is not antisymmetric")
        if self.symmetry == "symmetric" and data.ndim >= 2:
            if not np.allclose(sym_array(data), data, atol=self.atol, rtol=0):
                raise ShapeError("array flagged symmetric is not symmetric")

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @classmethod
    def form(cls, data, scale: ScaleDim = DIMENSIONLESS) -> "Components":
        data = np.asarray(data, dtype=float)
        return cls(data, (CO,) * data.ndim, scale, "antisymmetric" if data.ndim >= 2 else None)

    @classmethod
    def multivector(cls, data, scale: ScaleDim = DIMENSIONLESS) -> "Components":
        data = np.asarray(data, dtype=float)
        return cls(data, (CONTRA,) * data.ndim, scale, "antisymmetric" if data.ndim >= 2 else None)

    def __add__(self, other: "Components") -> "Components":
        if self.variance != other.variance or self.shape != other.shape:
            raise ShapeError("cannot add components of different type")
        require_same(self.scale, other.scale, "addition")
        sym = self.symmetry if self.symmetry == other.symmetry else None
        return Components(self.data + other.data, self.variance, self.scale, sym)

    def scaled(self, k: float, scale: ScaleDim = DIMENSIONLESS) -> "Components":
        return Components(self.data * k, self.variance, self.scale + scale, self.symmetry)


def alt(t: Components, axes: Sequence[int] | None = None) -> Components:
    """Antisymmetrization with 1/p! normalization; the identity on antisymmetric input."""
    axes = list(range(t.data.ndim)) if axes is None else list(axes)
    if len({t.variance[x] for x in axes}) > 1:
        raise ShapeError("antisymmetrized axes must share variance")
    data = alt_array(t.data, axes)
    full = len(axes) == t.data.ndim
    return Components(data, t.variance, t.scale, "antisymmetric" if full else None)


def wedge(a: Components, b: Components) -> Components:
    """Graded-antisymmetric product of two forms (or two multivectors)."""
    if a.data.ndim and b.data.ndim and a.variance[0] != b.variance[0]:
        raise ShapeError("wedge needs two forms or two multivectors")
    if a.data.ndim and b.data.ndim and a.shape[0] != b.shape[0]:
        raise ShapeError("wedge factors live on charts of different dimension")
    variance = (a.variance + b.variance)
    data = wedge_array(a.data, b.data)
    return Components(np.asarray(data), variance, a.scale + b.scale, "antisymmetric")


def contract(a: Components, b: Components, axes: Sequence[tuple[int, int]]) -> Components:
    """Sum over paired axes; each pair must join a covariant and a contravariant axis."""
    for i, j in axes:
        if a.variance[i] == b.variance[j]:
            raise ContractionError(f"axis {i} and axis {j} have the same variance")
        if a.shape[i] != b.shape[j]:
            raise ContractionError(f"axis {i} and axis {j} differ in length")
    ia = [i for i, _ in axes]
    ib = [j for _, j in axes]
    data = np.tensordot(a.data, b.data, axes=(ia, ib))
    variance = tuple(v for k, v in enumerate(a.variance) if k not in ia) + tuple(
        v for k, v in enumerate(b.variance) if k not in ib
    )
    return Components(data, variance, a.scale + b.scale)


def full_contract(a: Components, b: Components) -> float:
    """``i_A F`` for a p-vector and a p-form, with the 1/p! normalization."""
    if len(a.variance) != len(b.variance) or any(x == y for x, y in zip(a.variance, b.variance)):
        raise ContractionError("full contraction needs a p-vector and a p-form")
    return pair(a.data, b.data)
