"""Stochastic and deterministic Pauli-fault propagation through the networks.

Frames track X and Z masks as packed integers; numpy batches carry one mask
per trial so a whole chunk of Monte Carlo trials advances per gate. Trials
are grouped into fixed-size chunks, each owning a counter-based Philox
stream, so tallies are bit-identical for any worker count.

Depolarizing noise: a single-qubit fault site draws X, Y or Z with
probability gamma/3 each; a two-qubit site draws one of the 15 nontrivial
Pauli pairs with gamma/15 each; a measurement flips its recorded bit with
probability gamma; every idle qubit-timestep draws a 3-way epsilon fault,
except during the two steps with no free evolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from multiprocessing import Pool

import numpy as np

from .codes import CssCode, SyndromeDecoder, build_syndrome_decoder, get_css
from .network import (
    GENERATION,
    VERIFICATION,
    CorrectionSchedule,
    Gate,
    PrepNetwork,
    build_correction_schedule,
    build_prep_network,
)

CHUNK = 4096

# two-qubit Pauli pairs indexed 0..14: pair k+1 = (P[k+1 >> 2], P[k+1 & 3]),
# P = (I, X, Y, Z); tables give the X/Z components on control and target
_PAIR = np.arange(1, 16)
_CX1 = np.isin(_PAIR >> 2, (1, 2)).astype(np.uint64)
_CZ1 = np.isin(_PAIR >> 2, (2, 3)).astype(np.uint64)
_CX2 = np.isin(_PAIR & 3, (1, 2)).astype(np.uint64)
_CZ2 = np.isin(_PAIR & 3, (2, 3)).astype(np.uint64)

_SINGLE_X = {"X": 1, "Y": 1, "Z": 0}
_SINGLE_Z = {"X": 0, "Y": 1, "Z": 1}


class PreparationError(ValueError):
    """Candidate network does not prepare the encoded zero state."""


@dataclass(frozen=True)
class PauliFrame:
    x: int = 0
    z: int = 0


@dataclass(frozen=True)
class NoiseModel:
    gamma: float
    epsilon: float

    def __post_init__(self):
        if not (0 <= self.gamma <= 1 and 0 <= self.epsilon <= 1):
            raise ValueError("probabilities must lie in [0, 1]")

    @classmethod
    def from_ratio(cls, gamma: float, ratio: float, n: int) -> "NoiseModel":
        """Fix the memory error by the n*epsilon/gamma ratio used in reports."""
        return cls(gamma, ratio * gamma / n)


@dataclass(frozen=True)
class RunOutcome:
    accepted: bool
    residual_x: int
    residual_z: int
    measurement_record: tuple[int, ...]


def propagate(gate: Gate, frame: PauliFrame) -> PauliFrame:
    """Conjugate an X/Z error frame through one Clifford gate.

    H swaps X and Z on its qubit; XOR copies X from control to target and Z
    from target to control; preparation clears both masks; measurement
    leaves the frame alone (the X bit decides the outcome flip).
    """
    x, z = frame.x, frame.z
    if gate.kind == "P":
        keep = ~(1 << gate.q)
        return PauliFrame(x & keep, z & keep)
    if gate.kind == "H":
        bit = 1 << gate.q
        xq, zq = x & bit, z & bit
        return PauliFrame((x & ~bit) | zq, (z & ~bit) | xq)
    if gate.kind == "X":
        if (x >> gate.q) & 1:
            x ^= 1 << gate.target
        if (z >> gate.target) & 1:
            z ^= 1 << gate.q
        return PauliFrame(x, z)
    return frame  # MeasureZ


def measurement_outcome(gate: Gate, frame: PauliFrame) -> int:
    return (frame.x >> gate.q) & 1


# ---------------------------------------------------------------------------
# deterministic single-fault machinery


@dataclass(frozen=True)
class FaultLocation:
    step: int
    kind: str  # "gate" | "idle" | "measure"
    gate: Gate | None = None
    qubit: int | None = None


@dataclass(frozen=True)
class SingleFaultReport:
    location: FaultLocation
    pauli: str
    detected: bool
    bit_residual: int         # pre-Hadamard bit-error pattern at hand-off
    syndrome_residual: int    # hand-off X mask (invalidates the syndrome)
    residual_coset_weight: int
    syndrome_invalidating: bool


def _replay_step(net: PrepNetwork, idx: int, x: int, z: int, record: list[int]):
    """Noise-free propagation of one timestep on packed int masks.

    Measured qubits are reused as fresh |0>, so both masks clear there.
    """
    for gate in net.steps[idx]:
        if gate.kind == "M":
            record.append((x >> gate.q) & 1)
            keep = ~(1 << gate.q)
            x &= keep
            z &= keep
        elif gate.kind == "H":
            bit = 1 << gate.q
            xq, zq = x & bit, z & bit
            x = (x & ~bit) | zq
            z = (z & ~bit) | xq
        elif gate.kind == "X":
            x ^= ((x >> gate.q) & 1) << gate.target
            z ^= ((z >> gate.target) & 1) << gate.q
        else:  # P
            keep = ~(1 << gate.q)
            x &= keep
            z &= keep
    return x, z


def _replay(net: PrepNetwork, from_step: int, x: int, z: int):
    """Noise-free propagation from a step boundary; returns (record, x, z)."""
    record: list[int] = []
    for idx in range(from_step, len(net.steps)):
        x, z = _replay_step(net, idx, x, z, record)
    return record, x, z


def run_with_faults(net: PrepNetwork, faults) -> RunOutcome:
    """Deterministic replay with Pauli faults forced at step boundaries.

    `faults` is an iterable of (step_index, x_mask, z_mask); each mask is
    injected after the gates of its step have acted.
    """
    by_step: dict[int, tuple[int, int]] = {}
    for step, fx, fz in faults:
        ox, oz = by_step.get(step, (0, 0))
        by_step[step] = (ox ^ fx, oz ^ fz)
    record: list[int] = []
    x = z = 0
    for idx in range(len(net.steps)):
        x, z = _replay_step(net, idx, x, z, record)
        if idx in by_step:
            fx, fz = by_step[idx]
            x ^= fx
            z ^= fz
    mask = (1 << net.n) - 1
    return RunOutcome(not any(record), x & mask, z & mask, tuple(record))


def fault_locations(net: PrepNetwork) -> list[FaultLocation]:
    """Every gate, measurement, and idle qubit-timestep slot, exactly once."""
    out: list[FaultLocation] = []
    skip = set(net.no_evolution_steps)
    for idx, step in enumerate(net.steps):
        busy = set()
        for gate in step:
            busy.update(gate.qubits)
            if gate.kind == "M":
                out.append(FaultLocation(idx, "measure", gate))
            else:
                out.append(FaultLocation(idx, "gate", gate))
        if idx not in skip:
            for q in range(net.n_qubits):
                if q not in busy:
                    out.append(FaultLocation(idx, "idle", qubit=q))
    return out


def _pauli_choices(loc: FaultLocation):
    if loc.kind == "measure":
        return ("flip",)
    if loc.kind == "gate" and loc.gate.kind == "X":
        return tuple(f"{a}{b}" for a in "IXYZ" for b in "IXYZ")[1:]
    return ("X", "Y", "Z")


def _fault_masks(loc: FaultLocation, pauli: str) -> tuple[int, int]:
    if loc.kind == "idle":
        return _SINGLE_X[pauli] << loc.qubit, _SINGLE_Z[pauli] << loc.qubit
    gate = loc.gate
    if gate.kind == "X":
        a, b = pauli
        fx = (_SINGLE_X.get(a, 0) << gate.q) | (_SINGLE_X.get(b, 0) << gate.target)
        fz = (_SINGLE_Z.get(a, 0) << gate.q) | (_SINGLE_Z.get(b, 0) << gate.target)
        return fx, fz
    return _SINGLE_X[pauli] << gate.q, _SINGLE_Z[pauli] << gate.q


def enumerate_single_faults(net: PrepNetwork) -> list[SingleFaultReport]:
    """Propagate every single fault with the rest of the network noise-free.

    The bit-error content at hand-off is the Z mask (the closing Hadamard
    already swapped it); its minimum weight over the c_small coset is the
    quantity the verification is supposed to pin at <= 1. Hand-off X content
    only corrupts the extracted syndrome, flagged separately.
    """
    css = net.css
    words = css.small_codewords()
    reports: list[SingleFaultReport] = []
    mask = (1 << css.n) - 1
    for loc in fault_locations(net):
        for pauli in _pauli_choices(loc):
            if loc.kind == "measure":
                # a flipped verifier record rejects the run outright
                reports.append(SingleFaultReport(loc, pauli, True, 0, 0, 0, False))
                continue
            fx, fz = _fault_masks(loc, pauli)
            record, x, z = _replay(net, loc.step + 1, fx, fz)
            detected = any(record)
            bit_res = z & mask
            syn_res = x & mask
            coset = int(np.bitwise_count(words ^ np.uint64(bit_res)).min())
            reports.append(
                SingleFaultReport(
                    loc, pauli, detected, bit_res, syn_res, coset,
                    css.x_syndrome(syn_res) != 0,
                )
            )
    return reports


@dataclass(frozen=True)
class ReducedNetworkCheck:
    passed: bool
    counterexample: SingleFaultReport | None


def _generation_end(net: PrepNetwork) -> int:
    for idx, step in enumerate(net.steps):
        if any(g.phase == VERIFICATION for g in step):
            return idx
    return len(net.steps)


def verify_prepared_state(net: PrepNetwork, css: CssCode | None = None) -> None:
    """Raise PreparationError unless the generation phase builds the encoded
    zero of `css` (default: the network's own code)."""
    css = css or net.css
    record, _x, _z = _replay(net, 0, 0, 0)
    if any(record):
        raise PreparationError("error-free replay trips a verifier measurement")
    gen_end = _generation_end(net)
    patterns = []
    for idx in range(gen_end):
        for gate in net.steps[idx]:
            if gate.kind == "H" and gate.phase == GENERATION:
                x = 1 << gate.q
                for later in range(idx, gen_end):
                    start = net.steps[later]
                    for g in (g for g in start if g.kind == "X"):
                        x ^= ((x >> g.q) & 1) << g.target
                patterns.append(x)
    mask = (1 << css.n) - 1
    pats = [p & mask for p in patterns]
    if len(pats) != css.m or any(not css.in_c_small(p) for p in pats):
        raise PreparationError("generation phase does not span the encoded-zero code")
    from .gf2 import BitMatrix

    if BitMatrix(tuple(pats), css.n).rank() != css.m:
        raise PreparationError("generation phase spans a smaller code")


def check_reduced_network(candidate: PrepNetwork, css: CssCode | None = None) -> ReducedNetworkCheck:
    """Single-fault safety check: pass iff every fault is detected or leaves a
    bit-error coset weight of at most 1. The candidate must first prepare the
    right state in the error-free frame."""
    verify_prepared_state(candidate, css)
    for rep in enumerate_single_faults(candidate):
        if not rep.detected and rep.residual_coset_weight > 1:
            return ReducedNetworkCheck(False, rep)
    return ReducedNetworkCheck(True, None)


# ---------------------------------------------------------------------------
# exhaustive acceptance set (bit-sliced over all 2^n patterns)

_LOW_PLANES = [
    0xAAAAAAAAAAAAAAAA, 0xCCCCCCCCCCCCCCCC, 0xF0F0F0F0F0F0F0F0,
    0xFF00FF00FF00FF00, 0xFFFF0000FFFF0000, 0xFFFFFFFF00000000,
]


def acceptance_set(net: PrepNetwork) -> set[int]:
    """Bit-error patterns injected right before verification that survive it.

    Every one of the 2^n patterns is propagated individually; they are packed
    64 per machine word so the whole [[23,1,7]] space runs in seconds.
    """
    n = net.n
    if n > 23:
        raise ValueError(f"exhaustive acceptance set needs n <= 23, got {n}")
    nwords = max(1, 1 << (n - 6)) if n >= 6 else 1
    planes = np.zeros((net.n_qubits, nwords), dtype=np.uint64)
    idx = np.arange(nwords, dtype=np.uint64)
    for q in range(n):
        if q < 6:
            planes[q, :] = np.uint64(_LOW_PLANES[q])
        else:
            planes[q, :] = np.where((idx >> np.uint64(q - 6)) & np.uint64(1), np.uint64(~np.uint64(0)), np.uint64(0))
    if n < 6:
        lim = np.uint64((1 << (1 << n)) - 1)
        planes &= lim
    rejected = np.zeros(nwords, dtype=np.uint64)
    for step_idx in range(_generation_end(net), len(net.steps)):
        for gate in net.steps[step_idx]:
            if gate.kind == "X":
                planes[gate.target] ^= planes[gate.q]
            elif gate.kind == "M":
                rejected |= planes[gate.q]
                planes[gate.q, :] = 0
    accepted = ~rejected
    if n < 6:
        accepted &= np.uint64((1 << (1 << n)) - 1)
    bits = np.unpackbits(accepted.view(np.uint8), bitorder="little")[: 1 << n]
    return {int(i) for i in np.nonzero(bits)[0]}


# ---------------------------------------------------------------------------
# chunked Monte Carlo engine


class _PrepProgram:
    """Execution plan for one network: fault sites grouped per timestep."""

    def __init__(self, net: PrepNetwork):
        self.net = net
        self.n = net.n
        self.n_measure = sum(1 for _i, g in net.gates() if g.kind == "M")
        plan = []
        skip = set(net.no_evolution_steps)
        for idx, step in enumerate(net.steps):
            gates = tuple(step)
            singles = tuple(g.q for g in step if g.kind in ("P", "H"))
            xors = tuple((g.q, g.target) for g in step if g.kind == "X")
            measures = tuple(g.q for g in step if g.kind == "M")
            busy = {q for g in step for q in g.qubits}
            idle = () if idx in skip else tuple(
                q for q in range(net.n_qubits) if q not in busy
            )
            plan.append((gates, singles, xors, measures, idle))
        self.plan = plan


def _depolarize_single(x, z, qubits, p, rng, shift_extra=0):
    """3-way fault on each listed qubit; one uniform per (trial, qubit)."""
    if not qubits:
        return
    u = rng.random((x.shape[0], len(qubits)))
    if p == 0:
        return
    for j, q in enumerate(qubits):
        col = u[:, j]
        x ^= (col < 2 * p / 3).astype(np.uint64) << np.uint64(q + shift_extra)
        z ^= ((col >= p / 3) & (col < p)).astype(np.uint64) << np.uint64(q + shift_extra)


def _fault_two_qubit(x, z, c, t, p, rng):
    u = rng.random(x.shape[0])
    if p == 0:
        return
    hit = u < p
    if not hit.any():
        return
    k = np.minimum((u[hit] * (15 / p)).astype(np.int64), 14)
    xh = np.zeros(x.shape[0], dtype=np.uint64)
    zh = np.zeros(z.shape[0], dtype=np.uint64)
    xh[hit] = (_CX1[k] << np.uint64(c)) | (_CX2[k] << np.uint64(t))
    zh[hit] = (_CZ1[k] << np.uint64(c)) | (_CZ2[k] << np.uint64(t))
    x ^= xh
    z ^= zh


def run_prep_batch(program: _PrepProgram, noise: NoiseModel, rng, size: int):
    """One pass of the preparation network over `size` trials.

    Returns (accepted, handoff_x, handoff_z, record); hand-off masks are the
    per-trial residuals on the n ancilla qubits after the closing Hadamard.
    """
    gamma, eps = noise.gamma, noise.epsilon
    x = np.zeros(size, dtype=np.uint64)
    z = np.zeros(size, dtype=np.uint64)
    rejected = np.zeros(size, dtype=bool)
    record = np.zeros(size, dtype=np.uint64)
    rec_idx = 0
    one = np.uint64(1)
    for gates, singles, xors, measures, idle in program.plan:
        for q in measures:
            out = (x >> np.uint64(q)) & one
            flips = rng.random(size) < gamma
            out ^= flips.astype(np.uint64)
            record |= out << np.uint64(rec_idx)
            rejected |= out.astype(bool)
            keep = ~(one << np.uint64(q))
            x &= keep
            z &= keep
            rec_idx += 1
        for gate in gates:
            if gate.kind == "X":
                c, t = np.uint64(gate.q), np.uint64(gate.target)
                x ^= ((x >> c) & one) << t
                z ^= ((z >> t) & one) << c
            elif gate.kind == "H":
                bit = one << np.uint64(gate.q)
                xq = x & bit
                zq = z & bit
                x = (x & ~bit) | zq
                z = (z & ~bit) | xq
            elif gate.kind == "P":
                keep = ~(one << np.uint64(gate.q))
                x &= keep
                z &= keep
        _depolarize_single(x, z, singles, gamma, rng)
        for c, t in xors:
            _fault_two_qubit(x, z, c, t, gamma, rng)
        _depolarize_single(x, z, idle, eps, rng)
    mask = np.uint64((1 << program.n) - 1)
    return ~rejected, x & mask, z & mask, record


def run_prep_once(net: PrepNetwork, noise: NoiseModel, rng) -> RunOutcome:
    """Single stochastic pass; the restart-on-1 decision is the caller's."""
    program = _PrepProgram(net)
    accepted, hx, hz, record = run_prep_batch(program, noise, rng, 1)
    bits = tuple((int(record[0]) >> i) & 1 for i in range(program.n_measure))
    return RunOutcome(bool(accepted[0]), int(hx[0]), int(hz[0]), bits)


@dataclass
class CycleStats:
    code: str
    mode: str
    r: int
    gamma: float
    epsilon: float
    trials: int
    failures: int
    rejections: int
    prep_attempts: int
    ambiguous: int
    seed: int
    partial: bool = False

    @property
    def logical_failure_rate(self) -> float:
        return self.failures / self.trials if self.trials else 0.0

    @property
    def alpha_measured(self) -> float:
        return self.rejections / self.prep_attempts if self.prep_attempts else 0.0

    @property
    def ambiguous_rate(self) -> float:
        return self.ambiguous / self.trials if self.trials else 0.0

    def ci95(self) -> tuple[float, float]:
        p = self.logical_failure_rate
        if self.trials == 0:
            return (0.0, 0.0)
        half = 1.96 * math.sqrt(max(p * (1 - p), 1e-300) / self.trials)
        return (max(0.0, p - half), min(1.0, p + half))

    def merge(self, other: "CycleStats") -> "CycleStats":
        return CycleStats(
            self.code, self.mode, self.r, self.gamma, self.epsilon,
            self.trials + other.trials, self.failures + other.failures,
            self.rejections + other.rejections,
            self.prep_attempts + other.prep_attempts,
            self.ambiguous + other.ambiguous, self.seed,
            self.partial or other.partial,
        )

    def to_json(self) -> dict:
        lo, hi = self.ci95()
        return {
            "code": self.code,
            "mode": self.mode,
            "r": self.r,
            "gamma": self.gamma,
            "epsilon": self.epsilon,
            "trials": self.trials,
            "failures": self.failures,
            "logical_failure_rate": self.logical_failure_rate,
            "alpha_measured": self.alpha_measured,
            "ambiguous_rate": self.ambiguous_rate,
            "ci95": [lo, hi],
            "seed": self.seed,
            "partial": self.partial,
        }


def _chunk_rng(seed: int, chunk_index: int):
    return np.random.Generator(np.random.Philox(key=seed, counter=chunk_index * (1 << 128)))


class _CycleEngine:
    """Per-chunk simulation of full correction cycles for one parameter set."""

    def __init__(self, css: CssCode, noise: NoiseModel, r: int, mode: str):
        self.css = css
        self.noise = noise
        self.r = r
        self.mode = mode
        self.schedule = build_correction_schedule(css, r, mode)
        self.program = _PrepProgram(self.schedule.network)
        self.decoder = build_syndrome_decoder(css)
        self.n = css.n
        self.m = css.m
        self.T = len(self.schedule.network.steps)
        rows = css.generator_rows
        self.row_masks = np.array(rows, dtype=np.uint64)
        self.final_mask = np.uint64(css.final_check)

    # syndrome of packed bit patterns, vectorized over trials
    def syndromes(self, y: np.ndarray) -> np.ndarray:
        s = np.zeros(y.shape[0], dtype=np.uint64)
        for j, row in enumerate(self.row_masks):
            s |= (np.bitwise_count(y & row) & np.uint64(1)) << np.uint64(j)
        return s

    def decode_batch(self, synd: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        pos = np.searchsorted(self.decoder.syndromes, synd)
        pos = np.minimum(pos, len(self.decoder.syndromes) - 1)
        found = self.decoder.syndromes[pos] == synd
        leaders = np.where(found, self.decoder.leaders[pos], np.uint64(0))
        return found, leaders

    def in_c_small(self, y: np.ndarray) -> np.ndarray:
        ok = self.syndromes(y) == 0
        ok &= (np.bitwise_count(y & self.final_mask) & np.uint64(1)) == 0
        return ok

    def prep_accepted(self, rng, size):
        """Preparation with restart-until-accepted; returns residuals and
        (attempts, rejects) tallies. Waiting-time idle noise is settled by
        the caller via the per-trial attempt counts."""
        hx = np.zeros(size, dtype=np.uint64)
        hz = np.zeros(size, dtype=np.uint64)
        attempts = np.zeros(size, dtype=np.int64)
        pending = np.arange(size)
        while len(pending):
            acc, px, pz, _rec = run_prep_batch(self.program, self.noise, rng, len(pending))
            attempts[pending] += 1
            done = pending[acc]
            hx[done] = px[acc]
            hz[done] = pz[acc]
            pending = pending[~acc]
        return hx, hz, attempts

    def interaction_round(self, rng, bx, bz, ax_x, ax_z, az_x, az_z, idle_lanes):
        """Transversal XOR of both ancillas against the block, then measure.

        Returns the round's (bit, sign) syndromes. `idle_lanes` holds mask
        arrays for not-yet-consumed parallel lanes that sit idle meanwhile.
        """
        n = self.n
        size = bx.shape[0]
        gamma, eps = self.noise.gamma, self.noise.epsilon
        one = np.uint64(1)
        for q in range(n):
            qq = np.uint64(q)
            ax_x ^= ((bx >> qq) & one) << qq
            bz ^= ((ax_z >> qq) & one) << qq
            _fault_two_qubit_pair(bx, bz, ax_x, ax_z, q, q, gamma, rng)
            _depolarize_single(bx, bz, tuple(p for p in range(n) if p != q), eps, rng)
            _depolarize_single(ax_x, ax_z, tuple(p for p in range(n) if p != q), eps, rng)
            _depolarize_single(az_x, az_z, tuple(range(n)), eps, rng)
            for lx, lz in idle_lanes:
                _depolarize_single(lx, lz, tuple(range(n)), eps, rng)
        for q in range(n):
            qq = np.uint64(q)
            bx ^= ((az_x >> qq) & one) << qq
            az_z ^= ((bz >> qq) & one) << qq
            _fault_two_qubit_pair(az_x, az_z, bx, bz, q, q, gamma, rng)
            _depolarize_single(bx, bz, tuple(p for p in range(n) if p != q), eps, rng)
            _depolarize_single(az_x, az_z, tuple(p for p in range(n) if p != q), eps, rng)
            _depolarize_single(ax_x, ax_z, tuple(range(n)), eps, rng)
            for lx, lz in idle_lanes:
                _depolarize_single(lx, lz, tuple(range(n)), eps, rng)
        # measure both ancilla blocks; faulty readout flips recorded bits
        flips_x = _flip_mask(rng, size, n, gamma)
        flips_z = _flip_mask(rng, size, n, gamma)
        y_bit = ax_x ^ flips_x
        y_sign = az_z ^ flips_z
        _depolarize_single(bx, bz, tuple(range(n)), eps, rng)
        for lx, lz in idle_lanes:
            _depolarize_single(lx, lz, tuple(range(n)), eps, rng)
        return self.syndromes(y_bit), self.syndromes(y_sign)

    def run_chunk(self, rng, size: int) -> tuple[int, int, int, int]:
        n, r = self.n, self.r
        gamma, eps = self.noise.gamma, self.noise.epsilon
        bx = np.zeros(size, dtype=np.uint64)
        bz = np.zeros(size, dtype=np.uint64)
        rejects = 0
        attempts_total = 0
        # one transversal computational step's worth of gate noise on b
        _depolarize_single(bx, bz, tuple(range(n)), gamma, rng)

        synds_x = np.zeros((size, r), dtype=np.uint64)
        synds_z = np.zeros((size, r), dtype=np.uint64)

        # serial: rounds one after another; parallel: all preps first
        if self.mode == "serial":
            for j in range(r):
                hx1, hz1, att1 = self.prep_accepted(rng, size)
                hx2, hz2, att2 = self.prep_accepted(rng, size)
                attempts = np.maximum(att1, att2)
                attempts_total += int(att1.sum() + att2.sum())
                rejects += int((att1 - 1).sum() + (att2 - 1).sum())
                # block idles for the whole prep window, waiters for the gap
                _aggregate_depolarize(bx, bz, n, (attempts * self.T)[:, None], eps, rng)
                _aggregate_depolarize(hx1, hz1, n, ((attempts - att1) * self.T)[:, None], eps, rng)
                _aggregate_depolarize(hx2, hz2, n, ((attempts - att2) * self.T)[:, None], eps, rng)
                az_x, az_z = hz2, hx2
                sx, sz = self.interaction_round(rng, bx, bz, hx1, hz1, az_x, az_z, [])
                synds_x[:, j] = sx
                synds_z[:, j] = sz
        else:
            lanes = []
            att_all = np.zeros((size, 2 * r), dtype=np.int64)
            for j in range(2 * r):
                hx, hz, att = self.prep_accepted(rng, size)
                att_all[:, j] = att
                attempts_total += int(att.sum())
                rejects += int((att - 1).sum())
                lanes.append((hx, hz))
            window = att_all.max(axis=1)
            _aggregate_depolarize(bx, bz, n, (window * self.T)[:, None], eps, rng)
            for j, (hx, hz) in enumerate(lanes):
                _aggregate_depolarize(hx, hz, n, ((window - att_all[:, j]) * self.T)[:, None], eps, rng)
            for j in range(r):
                ax_x, ax_z = lanes[2 * j]
                hz2x, hz2z = lanes[2 * j + 1]
                az_x, az_z = hz2z, hz2x
                idle_lanes = [lanes[k] for k in range(2 * j + 2, 2 * r)]
                sx, sz = self.interaction_round(rng, bx, bz, ax_x, ax_z, az_x, az_z, idle_lanes)
                synds_x[:, j] = sx
                synds_z[:, j] = sz

        # decode every round, then settle the correction decision per stream
        corr_x = self._decode_rounds(synds_x)
        corr_z = self._decode_rounds(synds_z)
        ex = self._decide(corr_x)
        ez = self._decide(corr_z)

        # extra rounds for unresolved trials, one full round at a time
        pending = np.nonzero((ex < 0) | (ez < 0))[0]
        extra = 0
        hist_x = [list(row) for row in corr_x[pending]] if len(pending) else []
        hist_z = [list(row) for row in corr_z[pending]] if len(pending) else []
        while len(pending) and extra < r:
            sub = len(pending)
            hx1, hz1, att1 = self.prep_accepted(rng, sub)
            hx2, hz2, att2 = self.prep_accepted(rng, sub)
            attempts_total += int(att1.sum() + att2.sum())
            rejects += int((att1 - 1).sum() + (att2 - 1).sum())
            attempts = np.maximum(att1, att2)
            sbx, sbz = bx[pending].copy(), bz[pending].copy()
            _aggregate_depolarize(sbx, sbz, n, (attempts * self.T)[:, None], eps, rng)
            az_x, az_z = hz2, hx2
            sx, sz = self.interaction_round(rng, sbx, sbz, hx1, hz1, az_x, az_z, [])
            bx[pending], bz[pending] = sbx, sbz
            fx, lx = self.decode_batch(sx)
            fz, lz = self.decode_batch(sz)
            cx = np.where(fx, lx.astype(np.int64), -1)
            cz = np.where(fz, lz.astype(np.int64), -1)
            keep = []
            for row_i, trial in enumerate(pending):
                hist_x[row_i].append(int(cx[row_i]))
                hist_z[row_i].append(int(cz[row_i]))
                dx = _decide_sequence(hist_x[row_i])
                dz = _decide_sequence(hist_z[row_i])
                if ex[trial] < 0 and dx is not None:
                    ex[trial] = dx
                if ez[trial] < 0 and dz is not None:
                    ez[trial] = dz
                if ex[trial] < 0 or ez[trial] < 0:
                    keep.append(row_i)
            pending = pending[keep]
            hist_x = [hist_x[i] for i in keep]
            hist_z = [hist_z[i] for i in keep]
            extra += 1
        # budget exhausted: majority, otherwise ambiguous
        for row_i, trial in enumerate(pending):
            if ex[trial] < 0:
                ex[trial] = _majority(hist_x[row_i])
            if ez[trial] < 0:
                ez[trial] = _majority(hist_z[row_i])
        ambiguous = (ex < 0) | (ez < 0)
        apply_x = np.where(ex > 0, ex, 0).astype(np.uint64)
        apply_z = np.where(ez > 0, ez, 0).astype(np.uint64)
        bx ^= apply_x
        bz ^= apply_z

        fail = ambiguous.copy()
        for arr in (bx, bz):
            s = self.syndromes(arr)
            found, leader = self.decode_batch(s)
            ok = found & self.in_c_small(arr ^ leader)
            fail |= ~ok
        return int(fail.sum()), int(ambiguous.sum()), rejects, attempts_total

    def _decode_rounds(self, synds: np.ndarray) -> np.ndarray:
        size, rounds = synds.shape
        out = np.empty((size, rounds), dtype=np.int64)
        for j in range(rounds):
            found, leaders = self.decode_batch(synds[:, j])
            out[:, j] = np.where(found, leaders.astype(np.int64), -1)
        return out

    def _decide(self, corr: np.ndarray) -> np.ndarray:
        """Consistency rule: up to one change point applies the last decision;
        otherwise the trial is left at -1 for the extra-round loop."""
        changes = (corr[:, 1:] != corr[:, :-1]).sum(axis=1)
        usable = (corr >= 0).all(axis=1)
        resolved = usable & (changes <= 1)
        return np.where(resolved, corr[:, -1], -1)


def _decide_sequence(seq: list[int]) -> int | None:
    if any(c < 0 for c in seq):
        return None
    changes = sum(1 for a, b in zip(seq, seq[1:]) if a != b)
    return seq[-1] if changes <= 1 else None


def _majority(seq: list[int]) -> int:
    vals = [c for c in seq if c >= 0]
    if not vals:
        return -1
    best = max(set(vals), key=vals.count)
    return best if vals.count(best) * 2 > len(seq) else -1


def _flip_mask(rng, size, n, gamma):
    u = rng.random((size, n))
    out = np.zeros(size, dtype=np.uint64)
    for q in range(n):
        out |= (u[:, q] < gamma).astype(np.uint64) << np.uint64(q)
    return out


def _fault_two_qubit_pair(x1, z1, x2, z2, q1, q2, p, rng):
    """15-way fault across two registers (control in 1, target in 2)."""
    u = rng.random(x1.shape[0])
    if p == 0:
        return
    hit = u < p
    if not hit.any():
        return
    k = np.minimum((u[hit] * (15 / p)).astype(np.int64), 14)
    m1x = np.zeros(x1.shape[0], dtype=np.uint64)
    m1z = np.zeros(x1.shape[0], dtype=np.uint64)
    m2x = np.zeros(x1.shape[0], dtype=np.uint64)
    m2z = np.zeros(x1.shape[0], dtype=np.uint64)
    m1x[hit] = _CX1[k] << np.uint64(q1)
    m1z[hit] = _CZ1[k] << np.uint64(q1)
    m2x[hit] = _CX2[k] << np.uint64(q2)
    m2z[hit] = _CZ2[k] << np.uint64(q2)
    x1 ^= m1x
    z1 ^= m1z
    x2 ^= m2x
    z2 ^= m2z


def _aggregate_depolarize(x, z, n_qubits, slots, eps, rng):
    """Compose `slots` idle steps per qubit into one draw (slots per trial)."""
    if n_qubits == 0:
        return
    u = rng.random((x.shape[0], n_qubits))
    if eps == 0:
        return
    p = 0.75 * (1.0 - np.power(1.0 - 4 * eps / 3, slots.astype(np.float64)))
    for q in range(n_qubits):
        col = u[:, q]
        pq = p[:, 0] if p.shape[1] == 1 else p[:, q]
        x ^= (col < 2 * pq / 3).astype(np.uint64) << np.uint64(q)
        z ^= ((col >= pq / 3) & (col < pq)).astype(np.uint64) << np.uint64(q)


def extract_and_decode(block_frame: PauliFrame, schedule: CorrectionSchedule,
                       decoder: SyndromeDecoder, noise: NoiseModel, rng) -> dict:
    """Single-trial syndrome extraction record for one correction cycle.

    Runs the schedule's rounds on a block starting in `block_frame`, decodes
    each round, and settles the per-stream decision: identical decisions (or
    a single change point, read as one error arriving between rounds) apply
    the final decision; anything else draws up to r extra rounds and then a
    majority, with `ambiguous` flagged when even that fails.
    """
    engine = _CycleEngine(schedule.css, noise, schedule.r, schedule.mode)
    size = 1
    n, r = engine.n, schedule.r
    bx = np.array([block_frame.x], dtype=np.uint64)
    bz = np.array([block_frame.z], dtype=np.uint64)
    synx, synz, corrx, corrz = [], [], [], []

    def one_round():
        hx1, hz1, a1 = engine.prep_accepted(rng, size)
        hx2, hz2, a2 = engine.prep_accepted(rng, size)
        attempts = np.maximum(a1, a2)
        _aggregate_depolarize(bx, bz, n, (attempts * engine.T)[:, None], noise.epsilon, rng)
        _aggregate_depolarize(hx1, hz1, n, ((attempts - a1) * engine.T)[:, None], noise.epsilon, rng)
        _aggregate_depolarize(hx2, hz2, n, ((attempts - a2) * engine.T)[:, None], noise.epsilon, rng)
        sx, sz = engine.interaction_round(rng, bx, bz, hx1, hz1, hz2, hx2, [])
        synx.append(int(sx[0]))
        synz.append(int(sz[0]))
        fx, lx = engine.decode_batch(sx)
        fz, lz = engine.decode_batch(sz)
        corrx.append(int(lx[0]) if fx[0] else None)
        corrz.append(int(lz[0]) if fz[0] else None)

    for _ in range(r):
        one_round()
    extra = 0
    dx = _decide_sequence([c if c is not None else -1 for c in corrx])
    dz = _decide_sequence([c if c is not None else -1 for c in corrz])
    while (dx is None or dz is None) and extra < r:
        one_round()
        extra += 1
        dx = _decide_sequence([c if c is not None else -1 for c in corrx])
        dz = _decide_sequence([c if c is not None else -1 for c in corrz])
    ambiguous = False
    if dx is None:
        dx = _majority([c if c is not None else -1 for c in corrx])
        ambiguous |= dx < 0
    if dz is None:
        dz = _majority([c if c is not None else -1 for c in corrz])
        ambiguous |= dz < 0
    return {
        "syndromes_x": synx,
        "syndromes_z": synz,
        "corrections_x": corrx,
        "corrections_z": corrz,
        "decision_x": None if dx is None or dx < 0 else dx,
        "decision_z": None if dz is None or dz < 0 else dz,
        "extra_rounds": extra,
        "ambiguous": bool(ambiguous),
        "block_x": int(bx[0]),
        "block_z": int(bz[0]),
    }


_WORKER_CACHE: dict = {}


def _cycle_worker(args):
    css_name, gamma, eps, r, mode, seed, chunk_index, size = args
    key = (css_name, gamma, eps, r, mode)
    if key not in _WORKER_CACHE:
        _WORKER_CACHE[key] = _CycleEngine(get_css(css_name), NoiseModel(gamma, eps), r, mode)
    engine = _WORKER_CACHE[key]
    rng = _chunk_rng(seed, chunk_index)
    return engine.run_chunk(rng, size)


def simulate_block_cycle(css: CssCode, noise: NoiseModel, r: int, mode: str,
                         trials: int, seed: int = 0, threads: int = 1,
                         on_progress=None) -> CycleStats:
    """Monte Carlo over full correction cycles; failure means the corrected
    block holds a bit- or sign-error coset heavier than t, or the decision
    stayed ambiguous after the extra-round budget.

    An interrupt flushes the chunks finished so far with partial=True.
    """
    if trials <= 0:
        raise ValueError("trials must be positive")
    if not css.matrices_available:
        raise ValueError(f"{css.name}: matrices unavailable")
    sizes = [CHUNK] * (trials // CHUNK)
    if trials % CHUNK:
        sizes.append(trials % CHUNK)
    jobs = [
        (css.name, noise.gamma, noise.epsilon, r, mode, seed, i, s)
        for i, s in enumerate(sizes)
    ]
    results = []
    partial = False
    try:
        if threads > 1:
            with Pool(threads) as pool:
                for rr in pool.imap(_cycle_worker, jobs):
                    results.append(rr)
                    if on_progress:
                        on_progress(len(results), len(jobs))
        else:
            for job in jobs:
                results.append(_cycle_worker(job))
                if on_progress:
                    on_progress(len(results), len(jobs))
    except KeyboardInterrupt:
        partial = True
    done = sum(sizes[: len(results)])
    fails = sum(rr[0] for rr in results)
    ambiguous = sum(rr[1] for rr in results)
    rejects = sum(rr[2] for rr in results)
    attempts = sum(rr[3] for rr in results)
    return CycleStats(css.name, mode, r, noise.gamma, noise.epsilon,
                      done, fails, rejects, attempts, ambiguous, seed, partial)


def _prep_worker(args):
    css_name, gamma, eps, seed, chunk_index, size = args
    key = ("prep", css_name)
    if key not in _WORKER_CACHE:
        _WORKER_CACHE[key] = _PrepProgram(build_prep_network(get_css(css_name)))
    program = _WORKER_CACHE[key]
    rng = _chunk_rng(seed, chunk_index)
    accepted, _x, _z, _rec = run_prep_batch(program, NoiseModel(gamma, eps), rng, size)
    return int((~accepted).sum())


def measure_rejection_rate(css: CssCode, noise: NoiseModel, trials: int,
                           seed: int = 0, threads: int = 1) -> tuple[float, int]:
    """Fraction of single preparation passes rejected by the verifier."""
    sizes = [CHUNK] * (trials // CHUNK)
    if trials % CHUNK:
        sizes.append(trials % CHUNK)
    jobs = [(css.name, noise.gamma, noise.epsilon, seed, i, s) for i, s in enumerate(sizes)]
    if threads > 1:
        with Pool(threads) as pool:
            rejected = sum(pool.map(_prep_worker, jobs))
    else:
        rejected = sum(_prep_worker(j) for j in jobs)
    return rejected / trials, rejected
