"""Dense GF(2) linear algebra on bit-packed rows.

Rows are stored as Python integers (bit ``j`` holds column ``j``), so XOR of
two rows is a single big-int operation regardless of the row width. Vectors
that cross the public API are plain ``numpy.uint8`` arrays of zeros and ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


def as_bits(values, length: int | None = None) -> np.ndarray:
    """Return ``values`` as a 1-D uint8 array of zeros and ones."""
    if isinstance(values, str):
        values = [int(c) for c in values.strip()]
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise ValueError(f"expected a 1-D bit vector, got shape {arr.shape}")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise ValueError("bit vectors may only contain 0 and 1")
    arr = arr.astype(np.uint8)
    if length is not None and arr.size != length:
        raise ValueError(f"expected {length} bits, got {arr.size}")
    return arr


def pack_bits(bits: Iterable[int]) -> int:
    word = 0
    for j, b in enumerate(bits):
        if b:
            word |= 1 << j
    return word


def unpack_bits(word: int, length: int) -> np.ndarray:
    out = np.zeros(length, dtype=np.uint8)
    j = 0
    while word:
        if word & 1:
            out[j] = 1
        word >>= 1
        j += 1
    return out


class BitMatrix:
    """Immutable binary matrix with bit-packed rows."""

    __slots__ = ("_rows", "_ncols")

    def __init__(self, rows: Sequence[int], ncols: int):
        ncols = int(ncols)
        if ncols < 0:
            raise ValueError("ncols must be nonnegative")
        limit = 1 << ncols
        packed = tuple(int(r) for r in rows)
        for r in packed:
            if r < 0 or r >= limit:
                raise ValueError("row has bits outside the column range")
        self._rows = packed
        self._ncols = ncols

    @classmethod
    def from_array(cls, array, ncols: int | None = None) -> "BitMatrix":
        arr = np.asarray(array)
        if arr.size == 0:
            if ncols is None:
                ncols = arr.shape[1] if arr.ndim == 2 else 0
            return cls((), ncols)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D array, got shape {arr.shape}")
        if not np.isin(arr, (0, 1)).all():
            raise ValueError("matrix entries must be 0 or 1")
        return cls([pack_bits(row) for row in arr.astype(np.uint8)], arr.shape[1])

    @classmethod
    def from_strings(cls, rows: Sequence[str]) -> "BitMatrix":
        rows = [r.strip() for r in rows]
        if not rows:
            raise ValueError("at least one row is needed to infer the width")
        return cls.from_array(np.array([[int(c) for c in r] for r in rows]))

    @classmethod
    def coerce(cls, m) -> "BitMatrix":
        return m if isinstance(m, cls) else cls.from_array(m)

    @property
    def rows(self) -> tuple[int, ...]:
        return self._rows

    @property
    def nrows(self) -> int:
        return len(self._rows)

    @property
    def ncols(self) -> int:
        return self._ncols

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self._ncols)

    def to_array(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=np.uint8)
        for i, r in enumerate(self._rows):
            out[i] = unpack_bits(r, self._ncols)
        return out

    def vstack(self, other: "BitMatrix") -> "BitMatrix":
        if other.ncols != self._ncols:
            raise ValueError(f"column mismatch: {self._ncols} vs {other.ncols}")
        return BitMatrix(self._rows + other.rows, self._ncols)

    def mul_vec(self, v) -> np.ndarray:
        """Return ``self @ v`` over GF(2) (i.e. ``v @ self.T`` as a row)."""
        word = pack_bits(as_bits(v, self._ncols))
        return np.array([(r & word).bit_count() & 1 for r in self._rows], dtype=np.uint8)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BitMatrix):
            return NotImplemented
        return self._rows == other._rows and self._ncols == other._ncols

    def __hash__(self) -> int:
        return hash((self._rows, self._ncols))

    def __repr__(self) -> str:
        return f"BitMatrix({self.nrows}x{self._ncols})"


def _rref(rows: list[int], ncols: int) -> tuple[list[int], list[int]]:
    """Reduced row echelon form over the first ``ncols`` columns.

    Extra high bits (e.g. an augmented right-hand side stored at bit
    ``ncols``) ride along with the row operations but are never pivots.
    Returns the nonzero reduced rows and their pivot columns, in order.
    """
    work = list(rows)
    pivots: list[int] = []
    r = 0
    for col in range(ncols):
        bit = 1 << col
        pivot = None
        for i in range(r, len(work)):
            if work[i] & bit:
                pivot = i
                break
        if pivot is None:
            continue
        work[r], work[pivot] = work[pivot], work[r]
        prow = work[r]
        for i in range(len(work)):
            if i != r and work[i] & bit:
                work[i] ^= prow
        pivots.append(col)
        r += 1
        if r == len(work):
            break
    return work[:r] + [w for w in work[r:] if w], pivots


def rank(m) -> int:
    m = BitMatrix.coerce(m)
    _, pivots = _rref(list(m.rows), m.ncols)
    return len(pivots)


def _nullspace_from_rref(reduced: list[int], pivots: list[int], ncols: int) -> list[int]:
    mask = (1 << ncols) - 1
    pivot_set = set(pivots)
    basis = []
    for free in range(ncols):
        if free in pivot_set:
            continue
        vec = 1 << free
        for row, pc in zip(reduced, pivots):
            if (row & mask) >> free & 1:
                vec |= 1 << pc
        basis.append(vec)
    return basis


def nullspace(m) -> BitMatrix:
    """Basis of ``{x : m x^T = 0}``, one basis vector per row."""
    m = BitMatrix.coerce(m)
    reduced, pivots = _rref(list(m.rows), m.ncols)
    return BitMatrix(_nullspace_from_rref(reduced, pivots, m.ncols), m.ncols)


@dataclass(frozen=True)
class AffineSolution:
    """Solution set of ``a x^T = b^T``: ``particular + span(nullspace)``."""

    consistent: bool
    particular: np.ndarray | None
    nullspace: BitMatrix

    @property
    def dimension(self) -> int | None:
        return self.nullspace.nrows if self.consistent else None


def solve_affine(a, b) -> AffineSolution:
    a = BitMatrix.coerce(a)
    b = as_bits(b)
    if b.size != a.nrows:
        raise ValueError(f"rhs has {b.size} entries but the system has {a.nrows} rows")
    n = a.ncols
    rhs_bit = 1 << n
    aug = [row | (rhs_bit if bi else 0) for row, bi in zip(a.rows, b)]
    reduced, pivots = _rref(aug, n)
    mask = rhs_bit - 1
    kernel = BitMatrix(_nullspace_from_rref(reduced, pivots, n), n)
    if any((row & mask) == 0 and row & rhs_bit for row in reduced):
        return AffineSolution(False, None, kernel)
    x = np.zeros(n, dtype=np.uint8)
    for row, pc in zip(reduced, pivots):
        if row & rhs_bit:
            x[pc] = 1
    return AffineSolution(True, x, kernel)


def parity_check_from_generator(g) -> BitMatrix:
    """Parity-check matrix ``H`` with ``g H^T = 0`` and ``n - k`` independent rows.

    The rows come from the systematic completion of the reduced echelon form:
    one check per non-pivot column, expressed in the original column order.
    """
    g = BitMatrix.coerce(g)
    k, n = g.shape
    reduced, pivots = _rref(list(g.rows), n)
    if len(pivots) != k:
        raise ValueError(f"generator is rank deficient: rank {len(pivots)} < {k} rows")
    return BitMatrix(_nullspace_from_rref(reduced, pivots, n), n)


def generator_from_parity_check(h) -> BitMatrix:
    return nullspace(h)


def syndrome(h, v) -> np.ndarray:
    """``v H^T`` for a single vector ``v``."""
    return BitMatrix.coerce(h).mul_vec(v)


def linear_intersection_dim(h0, h1) -> int:
    h0 = BitMatrix.coerce(h0)
    h1 = BitMatrix.coerce(h1)
    if h0.ncols != h1.ncols:
        raise ValueError(f"parity-check widths differ: {h0.ncols} vs {h1.ncols}")
    return h0.ncols - rank(h0.vstack(h1))


@dataclass(frozen=True)
class CosetIntersection:
    """Certificate for the intersection of two coset codes.

    ``empty`` is True when the stacked affine system has no solution; then
    ``dimension`` is None. Otherwise ``witness`` is a common codeword.
    """

    empty: bool
    dimension: int | None
    witness: np.ndarray | None = None

    @property
    def size(self) -> int:
        return 0 if self.empty else 1 << self.dimension

    def __str__(self) -> str:
        return "empty" if self.empty else f"nonempty, dim {self.dimension}"


def coset_intersection(h0, s0, h1, s1) -> CosetIntersection:
    h0 = BitMatrix.coerce(h0)
    h1 = BitMatrix.coerce(h1)
    if h0.ncols != h1.ncols:
        raise ValueError(f"parity-check widths differ: {h0.ncols} vs {h1.ncols}")
    s0 = as_bits(s0, h0.nrows)
    s1 = as_bits(s1, h1.nrows)
    sol = solve_affine(h0.vstack(h1), np.concatenate([s0, s1]))
    if not sol.consistent:
        return CosetIntersection(True, None)
    return CosetIntersection(False, sol.dimension, sol.particular)
