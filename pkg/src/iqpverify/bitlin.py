"""Packed GF(2) linear algebra: bit vectors, bit matrices, spans, transforms.

Vectors are stored as Python ints (bit i of the int is coordinate i), so a
dot product is one AND plus one popcount.  String form puts coordinate 0
leftmost, matching the qubit-1-leftmost convention used in program files.
"""

from __future__ import annotations

from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import CapacityError, DimensionError, ValidationError

__all__ = [
    "BitVector",
    "BitMatrix",
    "SPAN_CAP",
    "dot",
    "rank",
    "column_space_basis",
    "nullspace_basis",
    "enumerate_span",
    "span_weights",
    "add_column",
    "walsh_hadamard",
]

# Spans larger than 2**SPAN_CAP elements are refused outright: enumerating
# 2**26 vectors is seconds of work, 2**32 is not.
SPAN_CAP = 26


class BitVector:
    """Immutable GF(2) vector of fixed length."""

    __slots__ = ("_length", "_bits")

    def __init__(self, length: int, bits: int = 0):
        if length < 0:
            raise DimensionError("vector length must be non-negative")
        if bits < 0 or bits >> length:
            raise ValidationError(f"bits 0x{bits:x} do not fit in {length} coordinates")
        self._length = length
        self._bits = bits

    @classmethod
    def from_string(cls, text: str) -> BitVector:
        """Parse '1100' (leftmost character is coordinate 0)."""
        bits = 0
        for i, ch in enumerate(text):
            if ch == "1":
                bits |= 1 << i
            elif ch != "0":
                raise ValidationError(f"invalid bit character {ch!r} in {text!r}")
        return cls(len(text), bits)

    @classmethod
    def from_support(cls, length: int, positions: Iterable[int]) -> BitVector:
        bits = 0
        for p in positions:
            if not 0 <= p < length:
                raise DimensionError(f"position {p} outside vector of length {length}")
            bits |= 1 << p
        return cls(length, bits)

    @property
    def bits(self) -> int:
        return self._bits

    def __len__(self) -> int:
        return self._length

    def __getitem__(self, i: int) -> int:
        if not 0 <= i < self._length:
            raise IndexError(i)
        return (self._bits >> i) & 1

    def __xor__(self, other: BitVector) -> BitVector:
        if self._length != len(other):
            raise DimensionError("xor of vectors with different lengths")
        return BitVector(self._length, self._bits ^ other.bits)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BitVector)
            and other._length == self._length
            and other._bits == self._bits
        )

    def __hash__(self) -> int:
        return hash((self._length, self._bits))

    def weight(self) -> int:
        return self._bits.bit_count()

    def is_zero(self) -> bool:
        return self._bits == 0

    def support(self) -> tuple[int, ...]:
        return tuple(i for i in range(self._length) if (self._bits >> i) & 1)

    def to01(self) -> str:
        return "".join("1" if (self._bits >> i) & 1 else "0" for i in range(self._length))

    def __repr__(self) -> str:
        return f"BitVector('{self.to01()}')"


def dot(u: BitVector, v: BitVector) -> int:
    """GF(2) inner product: parity of the AND of the two bit sets."""
    if len(u) != len(v):
        raise DimensionError(f"dot of lengths {len(u)} and {len(v)}")
    return (u.bits & v.bits).bit_count() & 1


class BitMatrix:
    """Immutable m-by-n GF(2) matrix stored as a tuple of row BitVectors."""

    __slots__ = ("_rows", "_cols")

    def __init__(self, rows: Iterable[BitVector], cols: int | None = None):
        rows = tuple(rows)
        if cols is None:
            if not rows:
                raise DimensionError("empty matrix needs an explicit column count")
            cols = len(rows[0])
        if cols < 1:
            raise DimensionError("matrix must have at least one column")
        for r in rows:
            if len(r) != cols:
                raise DimensionError(f"row of length {len(r)} in matrix with {cols} columns")
        self._rows = rows
        self._cols = cols

    @classmethod
    def from_strings(cls, rows: Sequence[str]) -> BitMatrix:
        return cls([BitVector.from_string(r) for r in rows])

    @property
    def num_rows(self) -> int:
        return len(self._rows)

    @property
    def num_cols(self) -> int:
        return self._cols

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self._rows), self._cols)

    @property
    def rows(self) -> tuple[BitVector, ...]:
        return self._rows

    def row(self, i: int) -> BitVector:
        return self._rows[i]

    def column(self, j: int) -> BitVector:
        if not 0 <= j < self._cols:
            raise DimensionError(f"column {j} outside matrix with {self._cols} columns")
        bits = 0
        for i, r in enumerate(self._rows):
            bits |= ((r.bits >> j) & 1) << i
        return BitVector(len(self._rows), bits)

    def columns(self) -> Iterator[BitVector]:
        return (self.column(j) for j in range(self._cols))

    def transpose(self) -> BitMatrix:
        if not self._rows:
            raise DimensionError("cannot transpose a matrix with no rows")
        return BitMatrix(list(self.columns()), cols=len(self._rows))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, BitMatrix)
            and other._cols == self._cols
            and other._rows == self._rows
        )

    def __hash__(self) -> int:
        return hash((self._rows, self._cols))

    def __repr__(self) -> str:
        body = ", ".join(f"'{r.to01()}'" for r in self._rows)
        return f"BitMatrix([{body}], cols={self._cols})"


def rank(matrix: BitMatrix) -> int:
    """Rank over GF(2) by elimination on the packed row ints."""
    pivots: list[int] = []
    for r in matrix.rows:
        work = r.bits
        for p in pivots:
            low = p & -p
            if work & low:
                work ^= p
        if work:
            pivots.append(work)
    return len(pivots)


def column_space_basis(matrix: BitMatrix) -> list[BitVector]:
    """Greedy maximal independent subset of the *actual columns*, left to right.

    Returns length-m column vectors of ``matrix``, not reduced combinations,
    so callers can point back at concrete columns.
    """
    basis: list[BitVector] = []
    reduced: list[int] = []
    for col in matrix.columns():
        work = col.bits
        for p in reduced:
            low = p & -p
            if work & low:
                work ^= p
        if work:
            basis.append(col)
            reduced.append(work)
    return basis


def nullspace_basis(matrix: BitMatrix) -> list[BitVector]:
    """Basis of {v : row . v = 0 for every row}, as length-n vectors."""
    n = matrix.num_cols
    # Row-reduce, remembering each pivot's column.
    echelon: list[int] = []
    pivot_cols: list[int] = []
    for r in matrix.rows:
        work = r.bits
        for row_bits, pc in zip(echelon, pivot_cols):
            if (work >> pc) & 1:
                work ^= row_bits
        if work:
            pc = (work & -work).bit_length() - 1
            # Back-substitute so each pivot column appears in one row only.
            echelon = [e ^ work if (e >> pc) & 1 else e for e in echelon]
            echelon.append(work)
            pivot_cols.append(pc)
    free_cols = [j for j in range(n) if j not in pivot_cols]
    basis = []
    for f in free_cols:
        bits = 1 << f
        for row_bits, pc in zip(echelon, pivot_cols):
            if (row_bits >> f) & 1:
                bits |= 1 << pc
        basis.append(BitVector(n, bits))
    return basis


def enumerate_span(
    basis: Sequence[BitVector], *, length: int | None = None
) -> Iterator[BitVector]:
    """Yield every element of the span exactly once, zero vector first.

    Walks a Gray code over the 2**d combinations so each step is one xor.
    ``length`` is only needed when ``basis`` is empty.
    """
    vecs = list(basis)
    d = len(vecs)
    if d > SPAN_CAP:
        raise CapacityError(f"span dimension {d} exceeds cap {SPAN_CAP}")
    if vecs:
        length = len(vecs[0])
        for v in vecs:
            if len(v) != length:
                raise DimensionError("span basis vectors differ in length")
    elif length is None:
        raise DimensionError("empty basis needs an explicit length")
    current = 0
    yield BitVector(length, 0)
    for k in range(1, 1 << d):
        # Gray code: element k differs from k-1 in bit ctz(k).
        current ^= vecs[(k & -k).bit_length() - 1].bits
        yield BitVector(length, current)


_CHUNK = 16  # doubling table size; offsets iterate over the remaining dims


def span_weights(basis: Sequence[BitVector], *, length: int | None = None) -> np.ndarray:
    """Hamming weights of all 2**d span elements, order unspecified.

    Same span walk as :func:`enumerate_span` but vectorised: the span is built
    as word-packed numpy columns in chunks of 2**16 and popcounted in bulk, so
    dimensions near the cap stay in the seconds range.
    """
    vecs = list(basis)
    d = len(vecs)
    if d > SPAN_CAP:
        raise CapacityError(f"span dimension {d} exceeds cap {SPAN_CAP}")
    if vecs:
        length = len(vecs[0])
        for v in vecs:
            if len(v) != length:
                raise DimensionError("span basis vectors differ in length")
    elif length is None:
        raise DimensionError("empty basis needs an explicit length")
    nwords = max(1, (length + 63) // 64)

    def words_of(bits: int) -> list[int]:
        return [(bits >> (64 * w)) & 0xFFFFFFFFFFFFFFFF for w in range(nwords)]

    base_d = min(d, _CHUNK)
    table = np.zeros((1 << base_d, nwords), dtype=np.uint64)
    size = 1
    for v in vecs[:base_d]:
        w = np.array(words_of(v.bits), dtype=np.uint64)
        table[size : 2 * size] = table[:size] ^ w
        size *= 2

    out = np.empty(1 << d, dtype=np.int64)
    rest = vecs[base_d:]
    offset_bits = 0
    for k in range(1 << len(rest)):
        if k:
            offset_bits ^= rest[(k & -k).bit_length() - 1].bits
        chunk = table ^ np.array(words_of(offset_bits), dtype=np.uint64)
        out[k << base_d : (k + 1) << base_d] = np.bitwise_count(chunk).sum(
            axis=1, dtype=np.int64
        )
    return out


def add_column(matrix: BitMatrix, src: int, dst: int) -> BitMatrix:
    """Return a copy with column ``dst`` replaced by dst xor src."""
    n = matrix.num_cols
    if not (0 <= src < n and 0 <= dst < n):
        raise DimensionError(f"column indices ({src}, {dst}) outside 0..{n - 1}")
    if src == dst:
        raise ValidationError("column addition needs two distinct columns")
    rows = [
        BitVector(n, r.bits ^ (((r.bits >> src) & 1) << dst)) for r in matrix.rows
    ]
    return BitMatrix(rows, cols=n)


def walsh_hadamard(values: np.ndarray) -> np.ndarray:
    """Unnormalised Walsh-Hadamard transform g[s] = sum_x f[x] * (-1)^(s.x).

    Accepts any real or complex array of power-of-two length; applying it
    twice multiplies the input by the length.
    """
    a = np.array(values, copy=True)
    if a.ndim != 1:
        raise DimensionError("walsh_hadamard expects a 1-d array")
    size = a.shape[0]
    if size == 0 or size & (size - 1):
        raise DimensionError(f"length {size} is not a power of two")
    h = 1
    while h < size:
        pairs = a.reshape(-1, 2, h)
        top = pairs[:, 0, :] + pairs[:, 1, :]
        bottom = pairs[:, 0, :] - pairs[:, 1, :]
        a = np.concatenate((top[:, None, :], bottom[:, None, :]), axis=1).reshape(size)
        h *= 2
    return a
