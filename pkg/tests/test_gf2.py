import random

import numpy as np
import pytest

from ancilla_factory.gf2 import BitMatrix, parity, subset_xor_table, weight_counts


def random_matrix(rng, rows, cols):
    return BitMatrix(tuple(rng.getrandbits(cols) for _ in range(rows)), cols)


def test_rank_identity():
    m = BitMatrix((1, 2, 4, 8), 4)
    assert m.rank() == 4


def test_rank_dependent_rows():
    m = BitMatrix((0b011, 0b101, 0b110), 3)
    assert m.rank() == 2


def test_rref_is_idempotent():
    rng = random.Random(5)
    for _ in range(25):
        m = random_matrix(rng, 6, 10)
        red, piv = m.rref()
        again, piv2 = red.rref()
        assert red.rows == again.rows
        assert piv == piv2


def test_rref_pivots_are_standard_form():
    rng = random.Random(9)
    for _ in range(25):
        m = random_matrix(rng, 5, 9)
        red, piv = m.rref()
        for i, row in enumerate(red.rows):
            for j, p in enumerate(piv):
                assert (row >> p) & 1 == (1 if i == j else 0)


def test_nullspace_annihilates():
    rng = random.Random(11)
    for _ in range(20):
        m = random_matrix(rng, 4, 9)
        ns = m.nullspace()
        assert ns.nrows == 9 - m.rank()
        for v in ns.rows:
            assert all(parity(r & v) == 0 for r in m.rows)


def test_in_rowspan():
    m = BitMatrix((0b0011, 0b0101), 4)
    assert m.in_rowspan(0b0110)
    assert not m.in_rowspan(0b1000)
    assert m.in_rowspan(0)


def test_matmul_transpose_orthogonality():
    g = BitMatrix((0b0111, 0b1011), 4)
    h = BitMatrix((0b0110,), 4)
    prod = g.matmul_transpose(h)
    # parity(0b0111 & 0b0110) = 0, parity(0b1011 & 0b0110) = 1
    assert prod.rows == (0, 1)


def test_transpose_round_trip():
    m = BitMatrix((0b101, 0b011), 3)
    assert m.transpose().transpose().rows == m.rows


def test_row_width_guard():
    with pytest.raises(ValueError):
        BitMatrix((0b1000,), 3)


def test_subset_xor_table_enumerates_span():
    rows = [0b0011, 0b0101]
    table = subset_xor_table(rows)
    assert sorted(int(t) for t in table) == sorted({0, 0b0011, 0b0101, 0b0110})


def test_subset_xor_table_refuses_large_k():
    with pytest.raises(ValueError):
        subset_xor_table([1] * 29)


def test_weight_counts_matches_brute_force():
    rng = random.Random(3)
    rows = [rng.getrandbits(12) for _ in range(6)]
    hist = weight_counts(rows, 12)
    brute = np.zeros(13, dtype=int)
    for mask in range(64):
        v = 0
        for i in range(6):
            if (mask >> i) & 1:
                v ^= rows[i]
        brute[bin(v).count("1")] += 1
    assert list(hist) == list(brute)


def test_weight_counts_total_is_power_of_two():
    rng = random.Random(4)
    rows = [rng.getrandbits(20) for _ in range(17)]
    hist = weight_counts(rows, 20)
    assert hist.sum() == 1 << 17
