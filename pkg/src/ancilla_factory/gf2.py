"""Bit-packed GF(2) linear algebra on integer bitsets.

Rows are plain Python ints; bit i of a row is coordinate i. The heavy
kernels (codeword enumeration) hand off to numpy uint64 arrays.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_ENUM_CHUNK = 1 << 16


def popcount(x: int) -> int:
    return x.bit_count()


def parity(x: int) -> int:
    return x.bit_count() & 1


def mask_to_tuple(mask: int) -> tuple[int, ...]:
    """Support of a bitmask as ascending coordinate indices."""
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


@dataclass(frozen=True)
class BitMatrix:
    """Immutable GF(2) matrix, row-major packed into ints (bit i = column i)."""

    rows: tuple[int, ...]
    cols: int

    def __post_init__(self):
        limit = 1 << self.cols
        for i, r in enumerate(self.rows):
            if r < 0 or r >= limit:
                raise ValueError(f"row {i} does not fit in {self.cols} columns")

    @property
    def nrows(self) -> int:
        return len(self.rows)

    def row_weights(self) -> list[int]:
        return [r.bit_count() for r in self.rows]

    def transpose(self) -> "BitMatrix":
        out = []
        for c in range(self.cols):
            v = 0
            for i, r in enumerate(self.rows):
                v |= ((r >> c) & 1) << i
            out.append(v)
        return BitMatrix(tuple(out), len(self.rows))

    def matmul_transpose(self, other: "BitMatrix") -> "BitMatrix":
        """Self @ other^T over GF(2): entry (i, j) = parity(row_i & other_row_j)."""
        if self.cols != other.cols:
            raise ValueError("column counts differ")
        out = []
        for r in self.rows:
            v = 0
            for j, s in enumerate(other.rows):
                v |= parity(r & s) << j
            out.append(v)
        return BitMatrix(tuple(out), len(other.rows))

    def is_zero(self) -> bool:
        return all(r == 0 for r in self.rows)

    def mul_vector(self, vec: int) -> int:
        """Matrix-vector product: bit j of result = parity(row_j & vec)."""
        out = 0
        for j, r in enumerate(self.rows):
            out |= parity(r & vec) << j
        return out

    def rref(self) -> tuple["BitMatrix", tuple[int, ...]]:
        """Reduced row echelon form and its pivot columns."""
        work = list(self.rows)
        done: list[int] = []
        pivots: list[int] = []
        for col in range(self.cols):
            hit = next((i for i, r in enumerate(work) if (r >> col) & 1), None)
            if hit is None:
                continue
            piv = work.pop(hit)
            work = [r ^ piv if (r >> col) & 1 else r for r in work]
            done = [r ^ piv if (r >> col) & 1 else r for r in done]
            done.append(piv)
            pivots.append(col)
            if not work:
                break
        return BitMatrix(tuple(done), self.cols), tuple(pivots)

    def rank(self) -> int:
        return len(self.rref()[1])

    def nullspace(self) -> "BitMatrix":
        """Basis of {v : row . v = 0 for every row}, in standard form."""
        red, pivots = self.rref()
        pivot_set = set(pivots)
        free = [c for c in range(self.cols) if c not in pivot_set]
        basis = []
        for f in free:
            v = 1 << f
            for row, p in zip(red.rows, pivots):
                if (row >> f) & 1:
                    v |= 1 << p
            basis.append(v)
        return BitMatrix(tuple(basis), self.cols)

    def in_rowspan(self, vec: int) -> bool:
        red, pivots = self.rref()
        for row, p in zip(red.rows, pivots):
            if (vec >> p) & 1:
                vec ^= row
        return vec == 0


def subset_xor_table(rows: list[int] | tuple[int, ...]) -> np.ndarray:
    """All 2^k XOR combinations of rows as a uint64 array (needs <= 58 columns).

    Index bit i selects row i, so table[0] = 0 and the layout is deterministic.
    """
    k = len(rows)
    if k > 28:
        raise ValueError(f"2^{k} combinations exceed the enumeration bound (k <= 28)")
    table = np.zeros(1 << k, dtype=np.uint64)
    for i, r in enumerate(rows):
        step = 1 << i
        table[step : 2 * step] = table[:step] ^ np.uint64(r)
    return table


def weight_counts(rows: list[int] | tuple[int, ...], ncols: int) -> np.ndarray:
    """Exact weight histogram of the row span, meet-in-the-middle chunked.

    Splits the generators in two halves so peak memory stays near
    2^(k/2) uint64 plus one chunk, even for k = 28 (2.7e8 codewords).
    """
    k = len(rows)
    if k > 28:
        raise ValueError(f"2^{k} combinations exceed the enumeration bound (k <= 28)")
    if ncols > 58:
        raise ValueError("weight_counts packs rows into uint64")
    k_lo = min(k, 16)
    lo = subset_xor_table(rows[:k_lo])
    hist = np.zeros(ncols + 1, dtype=np.int64)
    if k == k_lo:
        hist += np.bincount(np.bitwise_count(lo), minlength=ncols + 1)
        return hist
    hi = subset_xor_table(rows[k_lo:])
    for start in range(0, len(hi), 256):
        block = hi[start : start + 256, None] ^ lo[None, :]
        hist += np.bincount(np.bitwise_count(block).ravel(), minlength=ncols + 1)
    return hist
