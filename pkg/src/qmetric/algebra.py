"""Block matrix algebras A = M_{n1} (+) ... (+) M_{nK} and their tensor powers.

Elements are dense complex matrices with an enforced block-support pattern:
order-1 elements are block diagonal in M_D with D = sum(n_k), order-2
elements live in M_{D^2} supported on pairs of blocks, order-3 elements in
M_{D^3} on triples.  The structure maps used by the rest of the package are
defined here: the leg swap (flip), the embedding that inserts an identity
tensor leg in the middle, the multiplication map a (x) b -> ab, and the
projector onto the quantum diagonal.

All values are immutable after construction and every operation is a pure
function, so everything here is safe to share between threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import ClassVar, Sequence

import numpy as np

# An element is accepted as self-adjoint when ||x - x*|| <= HERM_TOL * max(1, ||x||).
HERM_TOL = 1e-10


class SupportError(ValueError):
    """Matrix data has nonzero entries outside the admissible block pattern."""


class ShapeMismatchError(ValueError):
    """Operands belong to different algebra shapes or tensor orders."""


@dataclass(frozen=True)
class AlgebraShape:
    """Block dimensions (n1, ..., nK) of the algebra (+)_k M_{n_k}."""

    blocks: tuple[int, ...]

    def __post_init__(self) -> None:
        blocks = tuple(int(n) for n in self.blocks)
        if not blocks:
            raise ValueError("an algebra shape needs at least one block")
        if any(n < 1 for n in blocks):
            raise ValueError(f"block dimensions must be >= 1, got {blocks}")
        object.__setattr__(self, "blocks", blocks)

    @property
    def dim(self) -> int:
        """Dimension D of the defining representation space C^D."""
        return sum(self.blocks)

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)

    @property
    def is_classical(self) -> bool:
        """True when every block is 1x1, i.e. the algebra is commutative."""
        return all(n == 1 for n in self.blocks)

    def block_ranges(self) -> list[tuple[int, int]]:
        """Half-open index ranges [start, stop) of each block inside C^D."""
        out, start = [], 0
        for n in self.blocks:
            out.append((start, start + n))
            start += n
        return out

    def block_labels(self) -> np.ndarray:
        """Block index of every coordinate of C^D."""
        lab = np.empty(self.dim, dtype=np.intp)
        for k, (a, b) in enumerate(self.block_ranges()):
            lab[a:b] = k
        return lab


def as_shape(shape: AlgebraShape | Sequence[int]) -> AlgebraShape:
    if isinstance(shape, AlgebraShape):
        return shape
    return AlgebraShape(tuple(shape))


@lru_cache(maxsize=None)
def support_mask(blocks: tuple[int, ...], order: int) -> np.ndarray:
    """Boolean admissibility mask for order-fold tensor elements.

    Entry ((r1..rm), (c1..cm)) is admissible iff block(r_i) == block(c_i)
    for every leg i.
    """
    if order not in (1, 2, 3):
        raise ValueError("only tensor orders 1, 2, 3 are supported")
    lab = AlgebraShape(blocks).block_labels()
    m1 = lab[:, None] == lab[None, :]
    mask = m1
    for _ in range(order - 1):
        mask = np.kron(mask, m1)
    mask.setflags(write=False)
    return mask


def _validate_data(shape: AlgebraShape, order: int, data) -> np.ndarray:
    d = shape.dim**order
    arr = np.asarray(data, dtype=complex)
    if arr.shape != (d, d):
        raise ShapeMismatchError(
            f"expected a {d}x{d} matrix for order {order} over blocks "
            f"{shape.blocks}, got {arr.shape}"
        )
    mask = support_mask(shape.blocks, order)
    off = arr[~mask]
    if off.size and np.any(off != 0):
        worst = np.max(np.abs(off))
        raise SupportError(
            f"entries outside the order-{order} block pattern must be exactly "
            f"zero (largest offender {worst:.3e})"
        )
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class _Element:
    shape: AlgebraShape
    data: np.ndarray

    order: ClassVar[int] = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "shape", as_shape(self.shape))
        object.__setattr__(self, "data", _validate_data(self.shape, self.order, self.data))

    @classmethod
    def zeros(cls, shape: AlgebraShape | Sequence[int]):
        shape = as_shape(shape)
        d = shape.dim**cls.order
        return cls(shape, np.zeros((d, d), dtype=complex))

    def _like(self, data: np.ndarray):
        return type(self)(self.shape, data)

    def _check_same(self, other) -> None:
        if type(other) is not type(self) or other.shape != self.shape:
            raise ShapeMismatchError(
                f"cannot combine {type(self).__name__} over {self.shape.blocks} "
                f"with {type(other).__name__}"
            )

    @property
    def adjoint(self):
        return self._like(self.data.conj().T)

    def is_selfadjoint(self, tol: float = HERM_TOL) -> bool:
        scale = max(1.0, op_norm(self))
        return op_norm_array(self.data - self.data.conj().T) <= tol * scale

    def __add__(self, other):
        self._check_same(other)
        return self._like(self.data + other.data)

    def __sub__(self, other):
        self._check_same(other)
        return self._like(self.data - other.data)

    def __mul__(self, scalar):
        return self._like(self.data * complex(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return self._like(-self.data)

    def __matmul__(self, other):
        self._check_same(other)
        return self._like(self.data @ other.data)

    def allclose(self, other, tol: float = 1e-12) -> bool:
        self._check_same(other)
        return bool(np.all(np.abs(self.data - other.data) <= tol))

    def __repr__(self) -> str:
        return (
            f"{type(self).__name__}(blocks={self.shape.blocks}, "
            f"dim={self.shape.dim ** self.order})"
        )


class AlgebraElement(_Element):
    """Element of A, a block diagonal D x D complex matrix."""

    order = 1


class BiElement(_Element):
    """Element of A (x) A, a D^2 x D^2 complex matrix on the pair-block pattern."""

    order = 2


class TriElement(_Element):
    """Element of A (x) A (x) A, a D^3 x D^3 complex matrix on the triple-block pattern."""

    order = 3


_ELEMENT_BY_ORDER = {1: AlgebraElement, 2: BiElement, 3: TriElement}


def element_type(order: int):
    return _ELEMENT_BY_ORDER[order]


def identity(shape: AlgebraShape | Sequence[int]) -> AlgebraElement:
    """The unit 1_A, the D x D identity matrix."""
    shape = as_shape(shape)
    return AlgebraElement(shape, np.eye(shape.dim, dtype=complex))


def permute_legs(mat: np.ndarray, perm: Sequence[int], dims: Sequence[int]) -> np.ndarray:
    """Reorder the tensor legs of a matrix on C^{d1} (x) ... (x) C^{dm}.

    Output leg j carries input leg perm[j], applied to rows and columns
    simultaneously, so a1 (x) ... (x) am maps to a_{perm[0]} (x) ... (x) a_{perm[m-1]}.
    """
    m = len(perm)
    dims = tuple(int(d) for d in dims)
    total = int(np.prod(dims))
    tensor = mat.reshape(dims + dims)
    axes = tuple(perm) + tuple(m + p for p in perm)
    return np.ascontiguousarray(tensor.transpose(axes)).reshape(total, total)


def tensor2(x: AlgebraElement, y: AlgebraElement) -> BiElement:
    """Kronecker product x (x) y with lexicographic leg ordering."""
    if x.shape != y.shape:
        raise ShapeMismatchError("tensor2 requires both factors over the same shape")
    return BiElement(x.shape, np.kron(x.data, y.data))


def flip(r: BiElement) -> BiElement:
    """The leg swap a (x) b -> b (x) a, extended linearly."""
    d = r.shape.dim
    return BiElement(r.shape, permute_legs(r.data, (1, 0), (d, d)))


def mid_embed(r: BiElement) -> TriElement:
    """The unital *-homomorphism a (x) b -> a (x) 1 (x) b."""
    d = r.shape.dim
    wide = np.kron(r.data, np.eye(d, dtype=complex))
    return TriElement(r.shape, permute_legs(wide, (0, 2, 1), (d, d, d)))


def mult_map(r: BiElement) -> AlgebraElement:
    """The multiplication map a (x) b -> ab, extended linearly.

    In coordinates: out[p, t] = sum_q r[(p, q), (q, t)].
    """
    d = r.shape.dim
    folded = r.data.reshape(d, d, d, d)
    return AlgebraElement(r.shape, np.einsum("pqqt->pt", folded))


def swap_matrix(n: int) -> np.ndarray:
    """The swap unitary on C^n (x) C^n."""
    s = np.zeros((n * n, n * n), dtype=complex)
    for i in range(n):
        for j in range(n):
            s[i * n + j, j * n + i] = 1.0
    return s


@lru_cache(maxsize=None)
def _diag_projector_cached(blocks: tuple[int, ...]) -> BiElement:
    shape = AlgebraShape(blocks)
    d = shape.dim
    out = np.zeros((d * d, d * d), dtype=complex)
    for a, b in shape.block_ranges():
        n = b - a
        idx = [i * d + j for i in range(a, b) for j in range(a, b)]
        out[np.ix_(idx, idx)] = (np.eye(n * n, dtype=complex) + swap_matrix(n)) / 2.0
    return BiElement(shape, out)


def diag_projector(shape: AlgebraShape | Sequence[int]) -> BiElement:
    """Projector onto the quantum diagonal of A (x) A.

    Block-wise it is the symmetric-subspace projector (I + S_i)/2 on the
    (i, i) cell, with S_i the swap on C^{n_i} (x) C^{n_i}, and zero on every
    cross cell.  For an all-ones shape this reduces to the 0/1 indicator of
    the classical diagonal.
    """
    return _diag_projector_cached(as_shape(shape).blocks)


def _as_array(x) -> np.ndarray:
    if isinstance(x, _Element):
        return x.data
    return np.asarray(x, dtype=complex)


def op_norm_array(arr: np.ndarray) -> float:
    if arr.size == 0:
        return 0.0
    return float(np.linalg.norm(arr, 2))


def op_norm(x) -> float:
    """Operator norm (largest singular value)."""
    return op_norm_array(_as_array(x))


def min_eig(x, tol: float = HERM_TOL) -> tuple[float, np.ndarray]:
    """Smallest eigenvalue of a self-adjoint element, with a unit eigenvector.

    Raises ValueError when the input fails the self-adjointness tolerance.
    """
    arr = _as_array(x)
    gap = op_norm_array(arr - arr.conj().T)
    if gap > tol * max(1.0, op_norm_array(arr)):
        raise ValueError(f"input is not self-adjoint within tolerance (defect {gap:.3e})")
    sym = (arr + arr.conj().T) / 2.0
    vals, vecs = np.linalg.eigh(sym)
    return float(vals[0]), vecs[:, 0]


def random_element(
    shape: AlgebraShape | Sequence[int],
    order: int,
    rng: np.random.Generator,
    hermitian: bool = False,
) -> _Element:
    """Random supported element with independent standard complex entries."""
    shape = as_shape(shape)
    d = shape.dim**order
    raw = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    raw[~support_mask(shape.blocks, order)] = 0.0
    if hermitian:
        raw = (raw + raw.conj().T) / 2.0
    return element_type(order)(shape, raw)


def hermitian_param_basis(shape: AlgebraShape | Sequence[int], order: int) -> np.ndarray:
    """Orthonormal real basis of the supported hermitian matrices, stacked.

    Frobenius-orthonormal: one matrix per diagonal support entry, two
    (real and imaginary) per off-diagonal support pair.
    """
    shape = as_shape(shape)
    d = shape.dim**order
    mask = support_mask(shape.blocks, order)
    mats = []
    inv_sqrt2 = 1.0 / np.sqrt(2.0)
    for a in range(d):
        for b in range(a, d):
            if not mask[a, b]:
                continue
            m = np.zeros((d, d), dtype=complex)
            if a == b:
                m[a, a] = 1.0
                mats.append(m)
            else:
                m[a, b] = inv_sqrt2
                m[b, a] = inv_sqrt2
                mats.append(m)
                m2 = np.zeros((d, d), dtype=complex)
                m2[a, b] = 1j * inv_sqrt2
                m2[b, a] = -1j * inv_sqrt2
                mats.append(m2)
    return np.stack(mats)


def zero_clip(arr: np.ndarray, threshold: float = 1e-14) -> np.ndarray:
    """Copy of arr with entries of magnitude below threshold set to exact zero."""
    out = arr.copy()
    out.real[np.abs(out.real) < threshold] = 0.0
    out.imag[np.abs(out.imag) < threshold] = 0.0
    return out
