"""
Finite-dimensional Hilbert-space core

States, operators, tensor products and subsystem role bookkeeping. A reference
frame is carried in a layout as an amplitude-free "frame slot" factor: it has
dimension 0, contributes nothing to the amplitude vector, and names the physical
system (A or B) currently serving as the frame. Quantum reference frame
transformations relabel roles instead of touching a zero amplitude vector.

Operator matrices come in three storage kinds: dense numpy arrays, scipy.sparse
matrices, and scipy.sparse.linalg.LinearOperator (matrix-free). Every function in
this module accepts all three.
"""

from dataclasses import dataclass, field
from enum import Enum
from math import prod
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import LinearOperator, aslinearoperator

from app.config import settings
from app.utils.errors import (
    BadLayout,
    DimensionMismatch,
    NotHermitian,
    NotUnitary,
    RoleCollision,
    UnknownRole,
    ZeroVectorInput,
)

FLAG_TOL = 1e-12
NORM_TOL = 1e-12

Matrix = Union[np.ndarray, sparse.spmatrix, LinearOperator]


class Role(str, Enum):
    FRAME_SLOT = "FrameSlot"
    A = "A"
    B = "B"
    C = "C"
    GENERIC = "Generic"


_CANONICAL_ORDER = {Role.A: 0, Role.B: 1, Role.C: 2, Role.GENERIC: 3}


@dataclass(frozen=True)
class Factor:
    """One tensor factor of a layout.

    For the frame slot, `role` is FRAME_SLOT, `dimension` is 0 and `system`
    names which physical system is the frame.
    """

    role: Role
    dimension: int
    labels: Tuple[float, ...] = ()
    system: Optional[Role] = None

    def __post_init__(self):
        if self.role is Role.FRAME_SLOT:
            if self.dimension != 0 or self.labels:
                raise BadLayout("frame slot carries no amplitudes (dimension 0, no labels)")
            if self.system not in (Role.A, Role.B, Role.C):
                raise BadLayout(f"frame slot must name system A, B or C, got {self.system}")
            return
        if self.dimension <= 0:
            raise BadLayout(f"factor {self.role.value} needs a positive dimension")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(float(j) for j in range(self.dimension)))
        if len(self.labels) != self.dimension:
            raise BadLayout(
                f"factor {self.role.value}: {len(self.labels)} labels for dimension {self.dimension}"
            )
        object.__setattr__(self, "labels", tuple(float(x) for x in self.labels))

    @property
    def is_frame(self) -> bool:
        return self.role is Role.FRAME_SLOT

    @property
    def system_role(self) -> Role:
        return self.system if self.is_frame else self.role

    def relabeled(self, mapping: Dict[Role, Role]) -> "Factor":
        new_system = mapping.get(self.system_role, self.system_role)
        if self.is_frame:
            return Factor(Role.FRAME_SLOT, 0, (), new_system)
        return Factor(new_system, self.dimension, self.labels)


def _sort_key(factor: Factor) -> int:
    return _CANONICAL_ORDER[factor.system_role]


@dataclass(frozen=True)
class BasisLayout:
    factors: Tuple[Factor, ...]

    def __post_init__(self):
        frames = [f for f in self.factors if f.is_frame]
        if len(frames) != 1:
            raise BadLayout(f"exactly one frame slot required, found {len(frames)}")
        systems = [f.system_role for f in self.factors]
        if len(set(systems)) != len(systems):
            raise RoleCollision(f"duplicate roles in layout: {[s.value for s in systems]}")
        if not self.active:
            raise BadLayout("layout has no active factor")
        if list(self.factors) != sorted(self.factors, key=_sort_key):
            raise BadLayout("factors must be in canonical order A, B, C, Generic")

    @classmethod
    def build(cls, frame: Role, factors: Iterable[Factor]) -> "BasisLayout":
        """Assemble a layout from active factors plus a frame slot, sorted canonically"""
        slot = Factor(Role.FRAME_SLOT, 0, (), frame)
        return cls(tuple(sorted([slot, *factors], key=_sort_key)))

    @property
    def active(self) -> Tuple[Factor, ...]:
        return tuple(f for f in self.factors if not f.is_frame)

    @property
    def frame(self) -> Role:
        return next(f.system for f in self.factors if f.is_frame)

    @property
    def roles(self) -> Tuple[Role, ...]:
        return tuple(f.role for f in self.active)

    @property
    def dims(self) -> Tuple[int, ...]:
        return tuple(f.dimension for f in self.active)

    @property
    def dimension(self) -> int:
        return prod(self.dims)

    def has_role(self, role: Role) -> bool:
        return role in self.roles

    def index_of(self, role: Role) -> int:
        """Axis of an active role in the amplitude tensor"""
        if role not in self.roles:
            raise UnknownRole(f"role {getattr(role, 'value', role)} is not active in layout {self.describe()}")
        return self.roles.index(role)

    def factor(self, role: Role) -> Factor:
        return self.active[self.index_of(role)]

    def swapped(self, r1: Role, r2: Role) -> Tuple["BasisLayout", Tuple[int, ...]]:
        """Exchange two roles. Returns the new layout and the axis permutation
        taking the old amplitude tensor to the new one."""
        present = [f.system_role for f in self.factors]
        r1 = self.frame if r1 is Role.FRAME_SLOT else r1
        r2 = self.frame if r2 is Role.FRAME_SLOT else r2
        for r in (r1, r2):
            if r not in present:
                raise UnknownRole(f"role {getattr(r, 'value', r)} not present in layout {self.describe()}")
        mapping = {r1: r2, r2: r1}
        renamed = [f.relabeled(mapping) for f in self.active]
        order = sorted(range(len(renamed)), key=lambda i: _sort_key(renamed[i]))
        frame = mapping.get(self.frame, self.frame)
        new_layout = BasisLayout.build(frame, [renamed[i] for i in order])
        return new_layout, tuple(order)

    def describe(self) -> str:
        parts = []
        for f in self.factors:
            parts.append(f"FrameSlot({f.system.value})" if f.is_frame else f"{f.role.value}[{f.dimension}]")
        return " ⊗ ".join(parts)


def qubit_layout(frame: Role = Role.A, roles: Sequence[Role] = (Role.B, Role.C)) -> BasisLayout:
    return BasisLayout.build(frame, [Factor(r, 2) for r in roles])


def generic_layout(dimension: int) -> BasisLayout:
    """Single generic factor; system A sits in the frame slot"""
    return BasisLayout.build(Role.A, [Factor(Role.GENERIC, dimension)])


@dataclass(frozen=True, eq=False)
class State:
    layout: BasisLayout
    amplitudes: np.ndarray
    normalized: bool

    @property
    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.dims)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=complex, copy=True)
    arr.setflags(write=False)
    return arr


def make_state(layout: BasisLayout, amplitudes: Sequence[complex], normalize: bool = False) -> State:
    arr = np.asarray(amplitudes, dtype=complex).reshape(-1)
    if arr.size != layout.dimension:
        raise DimensionMismatch(
            f"{arr.size} amplitudes for layout {layout.describe()} of dimension {layout.dimension}"
        )
    norm = np.linalg.norm(arr)
    if norm == 0.0:
        raise ZeroVectorInput("all-zero amplitudes do not define a state")
    if normalize:
        arr = arr / norm
        norm = np.linalg.norm(arr)
    return State(layout, _frozen(arr), abs(norm ** 2 - 1.0) <= NORM_TOL)


def basis_state(layout: BasisLayout, indices: Dict[Role, int]) -> State:
    """|j_1 j_2 ...⟩ from an index per active role"""
    amps = np.zeros(layout.dims, dtype=complex)
    try:
        amps[tuple(indices[r] for r in layout.roles)] = 1.0
    except KeyError as e:
        raise UnknownRole(f"no index given for role {e.args[0]}") from e
    return make_state(layout, amps.reshape(-1))


def tensor_states(a: State, b: State) -> State:
    if a.layout.frame != b.layout.frame:
        raise RoleCollision(
            f"frame slots differ: {a.layout.frame.value} vs {b.layout.frame.value}"
        )
    clash = set(a.layout.roles) & set(b.layout.roles)
    if clash:
        raise RoleCollision(f"roles present on both sides: {sorted(r.value for r in clash)}")
    factors = list(a.layout.active) + list(b.layout.active)
    order = sorted(range(len(factors)), key=lambda i: _sort_key(factors[i]))
    layout = BasisLayout.build(a.layout.frame, [factors[i] for i in order])
    joint = np.multiply.outer(a.tensor, b.tensor).transpose(order)
    return State(layout, _frozen(joint.reshape(-1)), a.normalized and b.normalized)


def swap_roles(s: State, r1: Role, r2: Role) -> State:
    layout, order = s.layout.swapped(r1, r2)
    amps = s.tensor.transpose(order).reshape(-1)
    return State(layout, _frozen(amps), s.normalized)


# ---------------------------------------------------------------------------
# Matrix storage helpers
# ---------------------------------------------------------------------------

def is_matrix_free(m: Matrix) -> bool:
    return isinstance(m, LinearOperator)


def adjoint(m: Matrix) -> Matrix:
    if is_matrix_free(m):
        return m.H
    if sparse.issparse(m):
        return m.conj().T.tocsr()
    return m.conj().T


def _common_kind(mats: Sequence[Matrix]) -> List[Matrix]:
    if any(is_matrix_free(m) for m in mats):
        return [aslinearoperator(m) for m in mats]
    if any(sparse.issparse(m) for m in mats):
        return [sparse.csr_matrix(m) for m in mats]
    return [np.asarray(m) for m in mats]


def compose(a: Matrix, b: Matrix) -> Matrix:
    a, b = _common_kind([a, b])
    out = a @ b
    return out.tocsr() if sparse.issparse(out) else out


def combine(coeffs: Sequence[complex], mats: Sequence[Matrix]) -> Matrix:
    mats = _common_kind(list(mats))
    out = mats[0] * coeffs[0]
    for c, m in zip(coeffs[1:], mats[1:]):
        out = out + m * c
    return out.tocsr() if sparse.issparse(out) else out


def matvec(m: Matrix, v: np.ndarray) -> np.ndarray:
    return np.asarray(m @ v).reshape(-1)


def to_dense(m: Matrix) -> np.ndarray:
    if is_matrix_free(m):
        return m @ np.eye(m.shape[1], dtype=complex)
    if sparse.issparse(m):
        return m.toarray()
    return np.asarray(m)


def _max_abs(m: Matrix) -> float:
    if sparse.issparse(m):
        return float(abs(m).max()) if m.nnz else 0.0
    return float(np.max(np.abs(m))) if np.size(m) else 0.0


def max_abs_gap(
    a: Matrix,
    b: Matrix,
    support: Optional[np.ndarray] = None,
    samples: int = 4,
    seed: int = 0,
) -> float:
    """max |a - b| over entries, optionally restricted to rows/columns in `support`.

    Explicit matrices are compared entrywise. Once either side is matrix-free the
    gap is estimated from the action on random unit vectors supported on `support`.
    """
    if not is_matrix_free(a) and not is_matrix_free(b):
        diff = combine([1.0, -1.0], [a, b])
        if support is not None:
            idx = np.flatnonzero(support)
            diff = diff[idx][:, idx]
        return _max_abs(diff)
    rng = np.random.default_rng(seed)
    dim = a.shape[1]
    mask = np.ones(dim, dtype=bool) if support is None else np.asarray(support, dtype=bool)
    worst = 0.0
    for _ in range(samples):
        v = (rng.standard_normal(dim) + 1j * rng.standard_normal(dim)) * mask
        v /= np.linalg.norm(v)
        d = matvec(a, v) - matvec(b, v)
        if support is not None:
            d = d * mask
        worst = max(worst, float(np.max(np.abs(d))))
    return worst


def _hermiticity_error(m: Matrix) -> float:
    if is_matrix_free(m):
        return max_abs_gap(m, m.H, samples=2)
    return _max_abs(combine([1.0, -1.0], [m, adjoint(m)]))


def _unitarity_error(m: Matrix) -> float:
    if is_matrix_free(m):
        rng = np.random.default_rng(0)
        v = rng.standard_normal(m.shape[1]) + 1j * rng.standard_normal(m.shape[1])
        v /= np.linalg.norm(v)
        return float(np.max(np.abs(m.H @ (m @ v) - v)))
    ident = sparse.identity(m.shape[0], dtype=complex, format="csr")
    return _max_abs(combine([1.0, -1.0], [compose(m, adjoint(m)), ident]))


# ---------------------------------------------------------------------------
# Operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Operator:
    """Linear map from `layout` to `codomain` (equal unless the map relabels roles)"""

    layout: BasisLayout
    matrix: Matrix
    hermitian: bool = False
    unitary: bool = False
    codomain: Optional[BasisLayout] = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if self.codomain is None:
            object.__setattr__(self, "codomain", self.layout)
        matrix = self.matrix
        if not is_matrix_free(matrix) and not sparse.issparse(matrix):
            matrix = np.asarray(matrix, dtype=complex)
            object.__setattr__(self, "matrix", matrix)
        expected = (self.codomain.dimension, self.layout.dimension)
        if tuple(matrix.shape) != expected:
            raise DimensionMismatch(
                f"operator {self.name or ''} has shape {matrix.shape}, layouts need {expected}"
            )
        scale = max(1.0, _max_abs(matrix)) if not is_matrix_free(matrix) else 1.0
        if self.hermitian:
            if self.codomain != self.layout:
                raise NotHermitian(f"operator {self.name} changes layout and cannot be Hermitian")
            err = _hermiticity_error(matrix)
            if err >= FLAG_TOL * scale:
                raise NotHermitian(f"operator {self.name} flagged Hermitian, ‖M − M†‖ = {err:.3e}")
        if self.unitary:
            err = _unitarity_error(matrix)
            if err >= FLAG_TOL:
                raise NotUnitary(f"operator {self.name} flagged unitary, ‖UU† − I‖ = {err:.3e}")

    @property
    def is_endomorphism(self) -> bool:
        return self.codomain == self.layout

    def dagger(self) -> "Operator":
        return Operator(
            self.codomain,
            adjoint(self.matrix),
            hermitian=self.hermitian,
            unitary=self.unitary,
            codomain=self.layout,
            name=f"{self.name}†" if self.name else "",
        )

    def dense(self) -> np.ndarray:
        return to_dense(self.matrix)


def identity(layout: BasisLayout) -> Operator:
    if layout.dimension <= settings.DENSE_DIM_LIMIT:
        matrix: Matrix = np.eye(layout.dimension, dtype=complex)
    else:
        matrix = sparse.identity(layout.dimension, dtype=complex, format="csr")
    return Operator(layout, matrix, hermitian=True, unitary=True, name="I")


def product(a: Operator, b: Operator, name: str = "") -> Operator:
    """Operator product a·b (b acts first)"""
    if b.codomain != a.layout:
        raise DimensionMismatch(
            f"cannot compose {a.layout.describe()} after {b.codomain.describe()}"
        )
    return Operator(
        b.layout,
        compose(a.matrix, b.matrix),
        unitary=a.unitary and b.unitary,
        codomain=a.codomain,
        name=name or f"{a.name}·{b.name}",
    )


def linear_combination(
    coeffs: Sequence[complex], ops: Sequence[Operator], name: str = "", hermitian: Optional[bool] = None
) -> Operator:
    layout = ops[0].layout
    for op in ops:
        if op.layout != layout or op.codomain != ops[0].codomain:
            raise DimensionMismatch("linear combination of operators on different layouts")
    if hermitian is None:
        hermitian = all(op.hermitian for op in ops) and all(complex(c).imag == 0 for c in coeffs)
    return Operator(
        layout,
        combine(list(coeffs), [op.matrix for op in ops]),
        hermitian=hermitian,
        codomain=ops[0].codomain,
        name=name,
    )


def commutator(a: Operator, b: Operator) -> Operator:
    ab = product(a, b)
    ba = product(b, a)
    return linear_combination([1.0, -1.0], [ab, ba], name=f"[{a.name},{b.name}]", hermitian=False)


def _factor_linear_operator(local: np.ndarray, left: int, dim: int, right: int) -> LinearOperator:
    local_h = local.conj().T

    def _apply(mat: np.ndarray, v: np.ndarray) -> np.ndarray:
        t = np.asarray(v).reshape(left, dim, right)
        return np.einsum("ij,ajb->aib", mat, t).reshape(-1)

    total = left * dim * right
    return LinearOperator(
        (total, total),
        matvec=lambda v: _apply(local, v),
        rmatvec=lambda v: _apply(local_h, v),
        dtype=complex,
    )


def embed_matrix(local: Matrix, role: Role, layout: BasisLayout) -> Matrix:
    """Kronecker embedding of a single-factor matrix, identities on the other factors"""
    k = layout.index_of(role)
    dims = layout.dims
    if tuple(local.shape) != (dims[k], dims[k]):
        raise DimensionMismatch(
            f"local operator of shape {local.shape} does not fit factor {role.value}[{dims[k]}]"
        )
    left, right = prod(dims[:k]), prod(dims[k + 1:])
    if layout.dimension <= settings.DENSE_DIM_LIMIT:
        dense = to_dense(local)
        return np.kron(np.kron(np.eye(left), dense), np.eye(right))
    nnz = local.nnz if sparse.issparse(local) else int(np.count_nonzero(to_dense(local)))
    if nnz * left * right <= settings.SPARSE_NNZ_LIMIT:
        blk = sparse.csr_matrix(local)
        out = sparse.kron(sparse.identity(left, format="csr"), blk, format="csr")
        return sparse.kron(out, sparse.identity(right, format="csr"), format="csr")
    return _factor_linear_operator(to_dense(local), left, dims[k], right)


def operator_on_factor(local: Union[Operator, Matrix], role: Role, layout: BasisLayout) -> Operator:
    if role is Role.FRAME_SLOT or not layout.has_role(role):
        raise UnknownRole(f"role {getattr(role, 'value', role)} is not an active factor of {layout.describe()}")
    if isinstance(local, Operator):
        if len(local.layout.active) != 1:
            raise DimensionMismatch("operator_on_factor expects a single-factor operator")
        return Operator(
            layout,
            embed_matrix(local.matrix, role, layout),
            hermitian=local.hermitian,
            unitary=local.unitary,
            name=f"{local.name}_{role.value}" if local.name else "",
        )
    matrix = local if (sparse.issparse(local) or is_matrix_free(local)) else np.asarray(local, dtype=complex)
    return Operator(layout, embed_matrix(matrix, role, layout))


def pad_to_layout(op: Operator, layout: BasisLayout) -> Operator:
    if op.layout == layout:
        return op
    if op.is_endomorphism and len(op.layout.active) == 1:
        role = op.layout.roles[0]
        if layout.has_role(role) and layout.factor(role).dimension == op.layout.dims[0]:
            return operator_on_factor(op, role, layout)
    raise DimensionMismatch(
        f"operator on {op.layout.describe()} cannot act on {layout.describe()}"
    )


def apply(op: Operator, s: State) -> State:
    op = pad_to_layout(op, s.layout)
    amps = matvec(op.matrix, s.amplitudes)
    norm = np.linalg.norm(amps)
    return State(op.codomain, _frozen(amps), abs(norm ** 2 - 1.0) <= NORM_TOL)


def conjugate(u: Operator, op: Operator) -> Operator:
    """u·op·u†"""
    if not u.unitary:
        raise NotUnitary(f"conjugation needs a unitary, {u.name or 'operator'} is not flagged unitary")
    op = pad_to_layout(op, u.layout)
    if not op.is_endomorphism:
        raise DimensionMismatch("conjugate expects an operator acting within one layout")
    matrix = compose(compose(u.matrix, op.matrix), adjoint(u.matrix))
    return Operator(
        u.codomain,
        matrix,
        hermitian=op.hermitian,
        unitary=op.unitary,
        name=f"U{op.name}U†" if op.name else "",
    )


def permutation_matrix(targets: np.ndarray, dimension: int) -> Matrix:
    """Matrix sending basis vector j to basis vector targets[j]"""
    targets = np.asarray(targets, dtype=int)
    cols = np.arange(dimension)
    matrix = sparse.csr_matrix(
        (np.ones(dimension, dtype=complex), (targets, cols)), shape=(dimension, dimension)
    )
    return matrix.toarray() if dimension <= settings.DENSE_DIM_LIMIT else matrix


def relabel_operator(layout: BasisLayout, r1: Role, r2: Role) -> Operator:
    """Unitary from `layout` to the layout with r1 and r2 exchanged (swap_roles as an operator)"""
    new_layout, order = layout.swapped(r1, r2)
    source = np.arange(layout.dimension).reshape(layout.dims).transpose(order).reshape(-1)
    targets = np.empty_like(source)
    targets[source] = np.arange(layout.dimension)
    return Operator(
        layout,
        permutation_matrix(targets, layout.dimension),
        unitary=True,
        codomain=new_layout,
        name=f"S[{getattr(r1, 'value', r1)}↔{getattr(r2, 'value', r2)}]",
    )
