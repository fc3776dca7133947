"""Classical code catalog and the punctured CSS construction.

The catalog holds doubly even self-dual binary codes; puncturing one
coordinate turns each into an [[n, 1, d]] quantum CSS code described by a
nested pair of classical codes. Internally a codeword is an int with bit i
as coordinate i; the catalog file uses big-endian hex (coordinate 0 is the
leftmost bit).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .gf2 import BitMatrix, parity, subset_xor_table, weight_counts

ENUMERATION_MAX_K = 28
DECODER_MAX_ENTRIES = 1 << 22
FINAL_CHECK_SEARCH_BUDGET = 1 << 20


class ConstructionError(ValueError):
    """A code or CSS construction invariant failed."""


class CatalogFormatError(ValueError):
    """The code-data file is malformed."""


class DecoderSizeError(ValueError):
    """Syndrome table would exceed the memory bound."""


@dataclass(frozen=True)
class ClassicalCode:
    """Binary linear [n, k, d] code with generator and check matrices."""

    name: str
    n: int
    k: int
    d: int
    verified: bool
    generator: BitMatrix
    check: BitMatrix

    def __post_init__(self):
        if self.generator.cols != self.n or self.check.cols != self.n:
            raise ConstructionError(f"{self.name}: matrix width != n")
        if not self.generator.matmul_transpose(self.check).is_zero():
            raise ConstructionError(f"{self.name}: generator . check^T != 0")
        if self.generator.rank() != self.k:
            raise ConstructionError(f"{self.name}: generator rank != k")
        if self.check.rank() != self.n - self.k:
            raise ConstructionError(f"{self.name}: check rank != n - k")

    def contains(self, word: int) -> bool:
        return all(parity(row & word) == 0 for row in self.check.rows)

    def syndrome(self, word: int) -> int:
        return self.check.mul_vector(word)

    def codewords(self) -> np.ndarray:
        """All 2^k codewords as uint64 (k <= 28)."""
        return subset_xor_table(list(self.generator.rows))


@dataclass(frozen=True)
class CodeProperties:
    self_dual: bool
    doubly_even: bool
    doubly_even_by: str  # "enumeration" | "generator-certificate" | "none"
    min_distance_checked: bool
    min_distance: int | None
    weight_distribution: dict[int, int] | None


@dataclass(frozen=True)
class CssCode:
    """[[n, 1, d]] CSS code from puncturing a doubly even self-dual code.

    c_small spans the encoded-zero superposition, c_big = c_small plus its
    complement coset. When the parent distance is only trusted (not
    enumerated) no weight-w generator basis can be certified and the
    matrices are withheld from network building and simulation.
    """

    name: str
    parent: ClassicalCode
    punctured_coordinate: int
    n: int
    d: int
    matrices_available: bool
    c_small: ClassicalCode | None = None
    c_big: ClassicalCode | None = None
    seed_columns: tuple[int, ...] = ()
    final_check: int = 0
    _codeword_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def t(self) -> int:
        return (self.d - 1) // 2

    @property
    def m(self) -> int:
        return (self.n - 1) // 2

    @property
    def w(self) -> int:
        return self.d + 1

    @property
    def ones(self) -> int:
        return (1 << self.n) - 1

    @property
    def generator_rows(self) -> tuple[int, ...]:
        if not self.matrices_available:
            raise ConstructionError(f"{self.name}: matrices unavailable")
        return self.c_small.generator.rows

    def small_codewords(self) -> np.ndarray:
        """All 2^m codewords of c_small; materialized only for m <= 24."""
        if self.m > 24:
            raise ConstructionError(
                f"{self.name}: 2^{self.m} codeword table would need "
                f"{(1 << self.m) * 8 / 1e9:.1f} GB; exact coset weights are "
                f"limited to m <= 24"
            )
        if "words" not in self._codeword_cache:
            self._codeword_cache["words"] = subset_xor_table(list(self.generator_rows))
        return self._codeword_cache["words"]

    def in_c_small(self, word: int) -> bool:
        return self.c_small.contains(word)

    def in_c_big(self, word: int) -> bool:
        return self.c_big.contains(word)

    def x_syndrome(self, word: int) -> int:
        """m-bit syndrome of a bit-error pattern (check matrix of c_big)."""
        return self.c_big.check.mul_vector(word)

    def coset_weight(self, word: int) -> int:
        """Minimum weight of word + c over c in c_small."""
        words = self.small_codewords()
        return int(np.bitwise_count(words ^ np.uint64(word)).min())


def weight_distribution(code: ClassicalCode) -> dict[int, int]:
    """Exact weight -> count map by enumerating all 2^k codewords."""
    if code.k > ENUMERATION_MAX_K:
        raise ConstructionError(
            f"{code.name}: weight enumeration needs k <= {ENUMERATION_MAX_K}, got k={code.k}"
        )
    hist = weight_counts(list(code.generator.rows), code.n)
    return {w: int(c) for w, c in enumerate(hist) if c}


def _generator_doubly_even_certificate(gen: BitMatrix) -> bool:
    """Row weights divisible by 4 plus pairwise even overlap certify that
    every codeword weight is divisible by 4 (weights add mod 4 under XOR
    when overlaps are even)."""
    rows = gen.rows
    if any(r.bit_count() % 4 for r in rows):
        return False
    return all(
        parity(rows[i] & rows[j]) == 0
        for i in range(len(rows))
        for j in range(i + 1, len(rows))
    )


def verify_code_properties(code: ClassicalCode) -> CodeProperties:
    """Self-duality, double evenness, and (when feasible) the minimum distance."""
    self_dual = (
        2 * code.k == code.n
        and code.generator.matmul_transpose(code.generator).is_zero()
    )
    if code.k <= ENUMERATION_MAX_K:
        dist = weight_distribution(code)
        doubly_even = all(w % 4 == 0 for w in dist)
        dmin = min((w for w in dist if w), default=None)
        return CodeProperties(self_dual, doubly_even, "enumeration", True, dmin, dist)
    cert = _generator_doubly_even_certificate(code.generator)
    # the certificate is only sound together with pairwise orthogonality,
    # which self-duality supplies
    return CodeProperties(self_dual, cert and self_dual, "generator-certificate" if cert else "none", False, None, None)


def _shorten(rows: tuple[int, ...], coord: int) -> list[int]:
    """Basis of {codewords with bit `coord` = 0}, coordinate dropped."""
    with_one = [r for r in rows if (r >> coord) & 1]
    kept = [r for r in rows if not ((r >> coord) & 1)]
    if with_one:
        piv = with_one[0]
        kept.extend(r ^ piv for r in with_one[1:])
    lo_mask = (1 << coord) - 1
    return [(r & lo_mask) | ((r >> (coord + 1)) << coord) for r in kept]


def _find_final_check(rows: tuple[int, ...], n: int, m: int) -> int:
    """Weight-m member of the complement coset: the all-ones vector XOR a
    weight-(m+1) word of c_small, scanned in subset-index order."""
    ones = (1 << n) - 1
    target = m + 1
    sums = {0: 0}
    for idx in range(1, min(1 << len(rows), FINAL_CHECK_SEARCH_BUDGET)):
        low = idx & -idx
        word = sums[idx ^ low] ^ rows[low.bit_length() - 1]
        sums[idx] = word
        if word.bit_count() == target:
            return ones ^ word
    raise ConstructionError(f"no weight-{m} final parity check found in budget")


def construct_css(parent: ClassicalCode, punctured_coordinate: int = 0) -> CssCode:
    """Puncture a doubly even self-dual [n+1, (n+1)/2, w] code into [[n, 1, w-1]].

    The shortened code's basis is re-based onto the lexicographically first
    information set whose standard-form rows all have weight w; the pivots
    double as the seed qubits of the preparation network.
    """
    # cheap sound checks only: self-duality plus the generator certificate
    # (rows divisible by 4 with even overlaps) pin double evenness without
    # enumerating codewords; distance enumeration stays with verify/--verify
    self_dual = (
        2 * parent.k == parent.n
        and parent.generator.matmul_transpose(parent.generator).is_zero()
    )
    if not self_dual:
        raise ConstructionError(f"{parent.name}: parent is not self-dual")
    if not _generator_doubly_even_certificate(parent.generator):
        raise ConstructionError(f"{parent.name}: parent is not doubly even")
    if parent.n % 2 or not (0 <= punctured_coordinate < parent.n):
        raise ConstructionError(f"{parent.name}: bad length or puncture coordinate")

    n = parent.n - 1
    w = parent.d
    d = w - 1
    m = (n - 1) // 2
    name = f"css{n}"
    if not parent.verified:
        # trusted-distance parent: no certified weight-w basis, parameters only
        return CssCode(name, parent, punctured_coordinate, n, d, False)

    short_rows = _shorten(parent.generator.rows, punctured_coordinate)
    reduced, pivots = BitMatrix(tuple(short_rows), n).rref()
    if len(pivots) != m:
        raise ConstructionError(f"{parent.name}: shortened rank {len(pivots)} != m={m}")
    rows = _weight_w_standard_basis(reduced, pivots, n, m, w, parent.name)

    ones = (1 << n) - 1
    gen_small = BitMatrix(rows, n)
    gen_big = BitMatrix(rows + (ones,), n)
    c_small = ClassicalCode(f"{parent.name}~small", n, m, w, parent.verified, gen_small, gen_big)
    c_big = ClassicalCode(f"{parent.name}~big", n, m + 1, d, False, gen_big, gen_small)
    final = _find_final_check(rows, n, m)
    return CssCode(
        name, parent, punctured_coordinate, n, d, True,
        c_small=c_small, c_big=c_big,
        seed_columns=pivots, final_check=final,
    )


def _weight_w_standard_basis(
    reduced: BitMatrix, pivots: tuple[int, ...], n: int, m: int, w: int, pname: str
) -> tuple[int, ...]:
    rows = tuple(reduced.rows)
    if all(r.bit_count() == w for r in rows):
        return rows
    # fall back to searching other information sets among the weight-w words
    if m > ENUMERATION_MAX_K:
        raise ConstructionError(f"{pname}: no weight-{w} basis found (RREF pivots fail, k too large to search)")
    words = subset_xor_table(list(rows))
    cand = np.sort(words[np.bitwise_count(words) == w])
    found = _info_set_search(cand, n, m)
    if found is None:
        raise ConstructionError(f"{pname}: no weight-{w} standard-form basis exists")
    return found


def _info_set_search(
    cand: np.ndarray, n: int, m: int, budget: int = 2_000_000
) -> tuple[int, ...] | None:
    """Depth-first search for the lexicographically first information set whose
    standard-form rows are all drawn from `cand` (the minimum-weight words).

    A word is live while it has at most one 1 inside the chosen pivot set,
    and every chosen pivot must keep at least one word that hits it alone.
    """
    nodes = 0

    def dfs(col: int, pivots: list[int], live: np.ndarray):
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise ConstructionError("weight-w basis search budget exhausted")
        if len(pivots) == m:
            rows = []
            pivot_mask = np.uint64(sum(1 << p for p in pivots))
            for p in pivots:
                sel = live[(live & pivot_mask) == np.uint64(1 << p)]
                if len(sel) == 0:
                    return None
                rows.append(int(np.sort(sel)[0]))
            mat = BitMatrix(tuple(rows), n)
            return tuple(rows) if mat.rank() == m else None
        if n - col < m - len(pivots):
            return None
        for c in range(col, n):
            hit = (live >> np.uint64(c)) & np.uint64(1) == 1
            pivot_mask = np.uint64(sum(1 << p for p in pivots))
            solo = live[hit & ((live & pivot_mask) == 0)]
            if len(solo) == 0:
                continue
            # words with a second 1 inside the set can no longer be rows
            stay = live[~hit | ((live & pivot_mask) == 0)]
            res = dfs(c + 1, pivots + [c], stay)
            if res is not None:
                return res
        return None

    return dfs(0, [], np.sort(cand))


# ---------------------------------------------------------------------------
# syndrome decoding


@dataclass(frozen=True)
class SyndromeDecoder:
    """Coset-leader lookup for all error patterns up to weight t."""

    code: CssCode
    t: int
    syndromes: np.ndarray
    leaders: np.ndarray

    def decode(self, syndrome: int) -> int | None:
        i = int(np.searchsorted(self.syndromes, np.uint64(syndrome)))
        if i < len(self.syndromes) and int(self.syndromes[i]) == syndrome:
            return int(self.leaders[i])
        return None

    @property
    def table_size(self) -> int:
        return len(self.syndromes)


def build_syndrome_decoder(css: CssCode) -> SyndromeDecoder:
    if not css.matrices_available:
        raise ConstructionError(f"{css.name}: matrices unavailable")
    n, t = css.n, css.t
    entries = sum(math.comb(n, i) for i in range(t + 1))
    if entries > DECODER_MAX_ENTRIES:
        need = entries * 16
        raise DecoderSizeError(
            f"{css.name}: syndrome table needs {entries} entries (~{need / 1e9:.1f} GB), "
            f"over the {DECODER_MAX_ENTRIES} bound"
        )
    col_synd = np.array([css.x_syndrome(1 << q) for q in range(n)], dtype=np.uint64)
    synds = np.empty(entries, dtype=np.uint64)
    leads = np.empty(entries, dtype=np.uint64)
    synds[0], leads[0] = 0, 0
    pos = 1
    import itertools

    for wt in range(1, t + 1):
        for combo in itertools.combinations(range(n), wt):
            s = np.uint64(0)
            e = 0
            for q in combo:
                s ^= col_synd[q]
                e |= 1 << q
            synds[pos] = s
            leads[pos] = e
            pos += 1
    # keep the first (lowest-weight, then lexicographic) leader per syndrome
    uniq, first = np.unique(synds, return_index=True)
    return SyndromeDecoder(css, t, uniq, leads[first])


# ---------------------------------------------------------------------------
# catalog I/O


def _hex_to_mask(hexstr: str, n: int) -> int:
    value = int(hexstr, 16)
    width = 4 * len(hexstr)
    mask = 0
    for coord in range(n):
        if (value >> (width - 1 - coord)) & 1:
            mask |= 1 << coord
    return mask


def _mask_to_hex(mask: int, n: int) -> str:
    width = 4 * ((n + 3) // 4)
    value = 0
    for coord in range(n):
        if (mask >> coord) & 1:
            value |= 1 << (width - 1 - coord)
    return f"{value:0{width // 4}x}"


def load_code_catalog(path: str | Path) -> list[ClassicalCode]:
    """Parse a code-data file; structural invariants are checked on the spot."""
    codes = []
    header: tuple | None = None
    rows: list[int] = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if fields[0] == "code":
                if header is not None:
                    raise CatalogFormatError(f"line {lineno}: 'code' before previous 'end'")
                if len(fields) != 6:
                    raise CatalogFormatError(f"line {lineno}: header needs 6 fields")
                try:
                    header = (fields[1], int(fields[2]), int(fields[3]), int(fields[4]), fields[5])
                except ValueError as exc:
                    raise CatalogFormatError(f"line {lineno}: {exc}") from exc
                if header[4] not in ("0", "1"):
                    raise CatalogFormatError(f"line {lineno}: verified flag must be 0 or 1")
                rows = []
            elif fields[0] == "end":
                if header is None:
                    raise CatalogFormatError(f"line {lineno}: 'end' without 'code'")
                name, n, k, d, flag = header
                if len(rows) != k:
                    raise CatalogFormatError(f"line {lineno}: {name} has {len(rows)} rows, expected {k}")
                gen = BitMatrix(tuple(rows), n)
                check = gen.nullspace()
                try:
                    codes.append(ClassicalCode(name, n, k, d, flag == "1", gen, check))
                except ConstructionError as exc:
                    raise CatalogFormatError(f"line {lineno}: {exc}") from exc
                header = None
            else:
                if header is None:
                    raise CatalogFormatError(f"line {lineno}: row outside a code block")
                expect = (header[1] + 3) // 4
                if len(fields[0]) != expect:
                    raise CatalogFormatError(
                        f"line {lineno}: row has {len(fields[0])} hex digits, expected {expect}"
                    )
                try:
                    rows.append(_hex_to_mask(fields[0], header[1]))
                except ValueError as exc:
                    raise CatalogFormatError(f"line {lineno}: {exc}") from exc
    if header is not None:
        raise CatalogFormatError("unterminated code block at end of file")
    return codes


def builtin_catalog_path() -> Path:
    return Path(resources.files("ancilla_factory").joinpath("data/codes.txt"))


_CSS_BY_NAME: dict[str, CssCode] = {}
_PARENTS: dict[str, ClassicalCode] = {}


def parent_catalog() -> dict[str, ClassicalCode]:
    if not _PARENTS:
        for code in load_code_catalog(builtin_catalog_path()):
            _PARENTS[code.name] = code
    return _PARENTS


def css_catalog() -> dict[str, CssCode]:
    """The four shipped CSS codes, constructed on first use."""
    if not _CSS_BY_NAME:
        for code in parent_catalog().values():
            css = construct_css(code)
            _CSS_BY_NAME[css.name] = css
    return _CSS_BY_NAME


def get_css(name: str) -> CssCode:
    cat = css_catalog()
    if name not in cat:
        raise KeyError(f"unknown code {name!r}; catalog has {sorted(cat)}")
    return cat[name]
