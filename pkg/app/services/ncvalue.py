"""
Noncommutative-value calculus

An observable β at a state z is carried as the triple {f, V, M}:
f = z̄ M z, V_n = Σ_m z̄_m M_mn − f z̄_n, and M the matrix itself. Values multiply
through the star product, re-express under basis changes, and expose the spread
Σ|V_n|² as the uncertainty.
"""

from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg

from app.config import settings
from app.services.statekit import (
    BasisLayout,
    Matrix,
    Operator,
    State,
    adjoint,
    combine,
    compose,
    matvec,
    max_abs_gap,
    pad_to_layout,
    to_dense,
)
from app.utils.errors import (
    BadBipartition,
    BasisMismatch,
    DimensionMismatch,
    NotNormalized,
    NotUnitary,
)


def basis_id_of(layout: BasisLayout) -> str:
    return layout.describe()


@dataclass(frozen=True, eq=False)
class NCValue:
    f: complex
    V: np.ndarray
    M: Matrix
    basis_id: str

    @property
    def dimension(self) -> int:
        return self.V.size


@dataclass(frozen=True, eq=False)
class KTilde:
    k: np.ndarray
    basis_id: str


def _require_normalized(s: State):
    if not s.normalized:
        raise NotNormalized(f"state norm {s.norm:.15g} is not 1 within tolerance")


def expectation(op: Operator, s: State) -> complex:
    op = pad_to_layout(op, s.layout)
    _require_normalized(s)
    z = s.amplitudes
    f = complex(np.vdot(z, matvec(op.matrix, z)))
    return complex(f.real, 0.0) if op.hermitian else f


def ncvalue_of(op: Operator, s: State) -> NCValue:
    op = pad_to_layout(op, s.layout)
    if not op.is_endomorphism:
        raise DimensionMismatch("noncommutative values need an operator acting within one layout")
    _require_normalized(s)
    z = s.amplitudes
    f = complex(np.vdot(z, matvec(op.matrix, z)))
    if op.hermitian:
        f = complex(f.real, 0.0)
    V = np.conj(matvec(adjoint(op.matrix), z)) - f * np.conj(z)
    return NCValue(f, V, op.matrix, basis_id_of(s.layout))


def _check_basis(s: Optional[State], *values: NCValue):
    ids = {v.basis_id for v in values}
    if s is not None:
        ids.add(basis_id_of(s.layout))
    if len(ids) != 1:
        raise BasisMismatch(f"values expressed in different bases: {sorted(ids)}")


def star(a: NCValue, b: NCValue, s: State) -> NCValue:
    """Noncommutative product [a]⋆[b] at the generating state s"""
    _check_basis(s, a, b)
    z = s.amplitudes
    # (M_b − f_b) z; equals conj(V_b) when b is Hermitian
    w = matvec(b.M, z) - b.f * z
    f = a.f * b.f + complex(np.sum(a.V * w))
    M = compose(a.M, b.M)
    V = np.conj(matvec(adjoint(M), z)) - f * np.conj(z)
    return NCValue(f, V, M, a.basis_id)


def star_commutator(a: NCValue, b: NCValue, s: State) -> NCValue:
    return linear_combine([1.0, -1.0], [star(a, b, s), star(b, a, s)])


def uncertainty(v: NCValue) -> float:
    return float(np.sum(np.abs(v.V) ** 2))


def linear_combine(coeffs: Sequence[complex], values: Sequence[NCValue]) -> NCValue:
    if len(coeffs) != len(values) or not values:
        raise DimensionMismatch("need one coefficient per value")
    _check_basis(None, *values)
    f = complex(sum(c * v.f for c, v in zip(coeffs, values)))
    V = sum(c * v.V for c, v in zip(coeffs, values))
    M = combine(list(coeffs), [v.M for v in values])
    return NCValue(f, np.asarray(V, dtype=complex), M, values[0].basis_id)


def reexpress(v: NCValue, u: Operator, basis_id: Optional[str] = None) -> NCValue:
    """Components in the basis z' = u z: V' = V·u†, M' = u M u†, f unchanged.

    The result is labelled with u's codomain layout, so a unitary within one
    layout keeps the label and re-expressing back with u† lands on the original
    value. `basis_id` overrides the label for callers tracking a named basis.
    """
    if not u.unitary:
        raise NotUnitary(f"re-expression needs a unitary, {u.name or 'operator'} is not flagged unitary")
    if v.basis_id != basis_id_of(u.layout):
        raise BasisMismatch(f"value in basis {v.basis_id}, map acts on {basis_id_of(u.layout)}")
    V = np.conj(matvec(u.matrix, np.conj(v.V)))
    M = compose(compose(u.matrix, v.M), adjoint(u.matrix))
    return NCValue(v.f, V, M, basis_id or basis_id_of(u.codomain))


def ktilde_of(op: Operator, s: State) -> KTilde:
    """k̃_{m̄n} = ∂_n ∂_m̄ f in closed form: M − f δ − z_m V_n − W_m z̄_n with W = (M − f) z"""
    v = ncvalue_of(op, s)
    z = s.amplitudes
    M = to_dense(v.M)
    w = M @ z - v.f * z
    k = M - v.f * np.eye(z.size) - np.outer(z, v.V) - np.outer(w, np.conj(z))
    return KTilde(k, v.basis_id)


def reconstruct_matrix(k: KTilde, v: NCValue, s: State) -> np.ndarray:
    """M from (f, V, k̃) for a Hermitian observable"""
    _check_basis(s, v)
    z = s.amplitudes
    return k.k + v.f * np.eye(z.size) + np.outer(z, v.V) + np.outer(np.conj(v.V), np.conj(z))


def ktilde_finite_difference(op: Operator, s: State, step: float = 1e-5) -> np.ndarray:
    """Numerical ∂_n ∂_m̄ of the homogeneous expectation z̄Mz / z̄z at s.

    The observable is shifted by −f·I first; k̃ does not change under the shift
    and the stencil values stay O(step).
    """
    _require_normalized(s)
    M = to_dense(pad_to_layout(op, s.layout).matrix)
    z0 = s.amplitudes
    n = z0.size
    f0 = np.vdot(z0, M @ z0)
    shifted = M - f0 * np.eye(n)

    # expanded around z0 so the O(1) parts cancel exactly between stencil points
    q0, n0, sz0 = np.vdot(z0, shifted @ z0), np.vdot(z0, z0), shifted @ z0

    def g(d: np.ndarray) -> complex:
        num = q0 + np.vdot(z0, shifted @ d) + np.vdot(d, sz0) + np.vdot(d, shifted @ d)
        den = n0 + np.vdot(z0, d) + np.vdot(d, z0) + np.vdot(d, d)
        return num / den

    # real coordinates: x_0..x_{n-1}, y_0..y_{n-1}
    directions = np.concatenate([np.eye(n), 1j * np.eye(n)]).astype(complex)
    hess = np.zeros((2 * n, 2 * n), dtype=complex)
    for a in range(2 * n):
        for b in range(a, 2 * n):
            da, db = step * directions[a], step * directions[b]
            val = (g(da + db) - g(da - db) - g(-da + db) + g(-da - db)) / (4 * step * step)
            hess[a, b] = hess[b, a] = val
    xx, xy = hess[:n, :n], hess[:n, n:]
    yx, yy = hess[n:, :n], hess[n:, n:]
    return 0.25 * (xx - 1j * xy + 1j * yx + yy)


def factor_rank(values: np.ndarray, shape: Optional[Tuple[int, int]] = None, tol: Optional[float] = None) -> int:
    """Schmidt rank of `values` over a bipartition d1 × d2.

    Counts singular values above tol·σ_max. An all-zero input has rank 0.
    """
    tol = settings.FACTOR_TOL if tol is None else tol
    arr = np.asarray(values, dtype=complex)
    if shape is None:
        if arr.ndim != 2:
            raise BadBipartition("a flat vector needs an explicit (d1, d2) bipartition")
        shape = arr.shape
    d1, d2 = shape
    if d1 <= 0 or d2 <= 0 or d1 * d2 != arr.size:
        raise BadBipartition(f"cannot split {arr.size} components as {d1} × {d2}")
    sv = linalg.svdvals(arr.reshape(d1, d2))
    if sv[0] == 0.0:
        return 0
    return int(np.count_nonzero(sv > tol * sv[0]))


def value_gap(a: NCValue, b: NCValue, support: Optional[np.ndarray] = None) -> Dict[str, float]:
    """Component-wise max-abs differences between two values in the same basis"""
    _check_basis(None, a, b)
    dv = np.abs(a.V - b.V)
    if support is not None:
        dv = dv[np.asarray(support, dtype=bool)]
    return {
        "f": float(abs(a.f - b.f)),
        "V": float(np.max(dv)) if dv.size else 0.0,
        "M": max_abs_gap(a.M, b.M, support=support),
    }
