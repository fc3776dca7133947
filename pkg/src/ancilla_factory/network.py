"""Timestep-scheduled gate networks: encoded-ancilla preparation with inline
verification, and whole correction cycles in serial or parallel syndrome mode.

Within one block at most one two-qubit gate may run per timestep; single-qubit
gates ride along freely. The preparation layout is: prepare everything, one
Hadamard step on the seed qubits, one XOR per step fanning each generator row
out of its seed, then the verifier cycles through the parity checks, and the
closing Hadamard on the whole block shares the last measurement step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .codes import ConstructionError, CssCode
from .gf2 import mask_to_tuple

GENERATION = "generation"
VERIFICATION = "verification"
FINAL_HADAMARD = "final_hadamard"


@dataclass(frozen=True)
class Gate:
    kind: str  # "P" prepare |0>, "H" Hadamard, "X" xor/cnot, "M" measure Z
    q: int
    target: int | None = None
    phase: str = GENERATION

    def __post_init__(self):
        if self.kind not in ("P", "H", "X", "M"):
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if (self.kind == "X") != (self.target is not None):
            raise ValueError("exactly two-qubit gates take a target")
        if self.kind == "X" and self.q == self.target:
            raise ValueError("xor control equals target")

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.q,) if self.target is None else (self.q, self.target)

    def token(self) -> str:
        if self.kind == "X":
            return f"X({self.q}>{self.target})"
        return f"{self.kind}({self.q})"


Step = tuple[Gate, ...]


@dataclass(frozen=True)
class PrepNetwork:
    """Generation + verification network for one encoded-zero ancilla block."""

    css: CssCode
    n_qubits: int            # n ancilla qubits plus the verifier
    verifier: int
    steps: tuple[Step, ...]
    checks: tuple[int, ...]  # parity masks in measurement order
    no_evolution_steps: tuple[int, ...]

    @property
    def n(self) -> int:
        return self.n_qubits - 1

    def gates(self):
        for idx, step in enumerate(self.steps):
            for gate in step:
                yield idx, gate

    def dump(self) -> str:
        return "\n".join(" ".join(g.token() for g in step) for step in self.steps)


def build_prep_network(css: CssCode) -> PrepNetwork:
    """Build the standard ancilla network for a catalog code.

    Verification measures the m generator rows of c_small and one closing
    weight-m parity from the complement coset, so the accepted bit-error
    patterns are exactly the codewords of c_small.
    """
    if not css.matrices_available:
        raise ConstructionError(f"{css.name}: matrices unavailable")
    n, m, w = css.n, css.m, css.w
    verifier = n
    rows = css.generator_rows
    seeds = css.seed_columns

    steps: list[list[Gate]] = []
    steps.append([Gate("P", q) for q in range(n + 1)])
    steps.append([Gate("H", s) for s in seeds])
    for row, seed in zip(rows, seeds):
        for q in mask_to_tuple(row):
            if q != seed:
                steps.append([Gate("X", seed, q)])

    checks = tuple(rows) + (css.final_check,)
    for check in checks:
        for q in mask_to_tuple(check):
            steps.append([Gate("X", q, verifier, phase=VERIFICATION)])
        steps.append([Gate("M", verifier, phase=VERIFICATION)])
    # the closing transversal Hadamard shares the last measurement's timestep
    steps[-1].extend(Gate("H", q, phase=FINAL_HADAMARD) for q in range(n))

    expected = m * (2 * w + 1) + 3
    if len(steps) != expected:
        raise ConstructionError(
            f"{css.name}: built {len(steps)} timesteps, expected m(2w+1)+3 = {expected}"
        )
    return PrepNetwork(
        css=css,
        n_qubits=n + 1,
        verifier=verifier,
        steps=tuple(tuple(s) for s in steps),
        checks=checks,
        no_evolution_steps=(0, len(steps) - 1),
    )


@dataclass(frozen=True)
class ResourceCount:
    ops_total: int
    ops_by_kind: dict[str, int]
    timesteps: int
    idle_qubit_timesteps: int
    final_check_weight: int


def count_resources(net: PrepNetwork | None) -> ResourceCount:
    """Operation and timestep census plus the free-evolution slot count.

    Idle slots exclude the two no-free-evolution steps (the all-qubit
    preparation and the closing Hadamard-and-measure step).
    """
    if net is None or not net.steps:
        return ResourceCount(0, {}, 0, 0, 0)
    by_kind: dict[str, int] = {"P": 0, "H": 0, "X": 0, "M": 0}
    idle = 0
    skip = set(net.no_evolution_steps)
    for idx, step in enumerate(net.steps):
        busy = set()
        for gate in step:
            by_kind[gate.kind] += 1
            busy.update(gate.qubits)
        if idx not in skip:
            idle += net.n_qubits - len(busy)
    return ResourceCount(
        ops_total=sum(by_kind.values()),
        ops_by_kind=by_kind,
        timesteps=len(net.steps),
        idle_qubit_timesteps=idle,
        final_check_weight=net.checks[-1].bit_count() if net.checks else 0,
    )


def check_schedule_legality(steps, blocks: dict[int, int] | None = None) -> list[str]:
    """Violations of the parallelism rules; empty list when legal.

    `blocks` maps qubit -> block id (one shared block when omitted).
    """
    violations = []
    for idx, step in enumerate(steps):
        seen: set[int] = set()
        two_qubit_blocks: list[int] = []
        for gate in step:
            for q in gate.qubits:
                if q in seen:
                    violations.append(f"step {idx}: qubit {q} used twice")
                seen.add(q)
            if gate.kind == "X":
                touched = {blocks[q] if blocks else 0 for q in gate.qubits}
                two_qubit_blocks.extend(touched)
        counted = set()
        for b in two_qubit_blocks:
            if b in counted:
                violations.append(f"step {idx}: block {b} sees two two-qubit gates")
            counted.add(b)
    return violations


# ---------------------------------------------------------------------------
# full correction cycles (two ancilla roles per syndrome round)


@dataclass(frozen=True)
class Lane:
    index: int
    role: str          # "bit" (a_x) or "sign" (a_z, conjugate-basis replay)
    qubit_base: int    # first absolute qubit index of the lane register


@dataclass(frozen=True)
class RoundPlan:
    bit_lane: int
    sign_lane: int
    prep_steps: tuple[int, int]      # [start, end) in the global timeline
    interact_steps: tuple[int, int]  # n + n xor steps plus one measure step


@dataclass(frozen=True)
class CorrectionSchedule:
    """One full correction of a data block, r syndrome rounds in the chosen mode."""

    css: CssCode
    r: int
    mode: str
    eta: int
    network: PrepNetwork
    lanes: tuple[Lane, ...]
    rounds: tuple[RoundPlan, ...]
    steps: tuple[Step, ...]
    blocks: dict[int, int] = field(repr=False, default=None)

    @property
    def n(self) -> int:
        return self.css.n

    @property
    def interaction_steps_per_round(self) -> int:
        return 2 * self.n + 1

    def gate_multiset(self) -> dict[tuple, int]:
        out: dict[tuple, int] = {}
        for step in self.steps:
            for g in step:
                key = (g.kind, g.q, g.target)
                out[key] = out.get(key, 0) + 1
        return out


def build_correction_schedule(css: CssCode, r: int, mode: str) -> CorrectionSchedule:
    """Lay out the lanes and global timeline for one corrected block.

    Serial mode reuses one bit-role and one sign-role lane r times; parallel
    mode prepares 2r lanes in a single window and interacts round by round.
    The data block occupies qubits [0, n); each lane holds n + 1 qubits.
    """
    if r < 1:
        raise ValueError(f"syndrome repetitions must be >= 1, got {r}")
    if mode not in ("serial", "parallel"):
        raise ValueError(f"mode must be serial or parallel, got {mode!r}")
    net = build_prep_network(css)
    n = css.n
    lane_count = 2 if mode == "serial" else 2 * r
    lanes = tuple(
        Lane(i, "bit" if i % 2 == 0 else "sign", n + i * (n + 1))
        for i in range(lane_count)
    )
    blocks = {q: 0 for q in range(n)}
    for lane in lanes:
        for q in range(n + 1):
            blocks[lane.qubit_base + q] = 1 + lane.index

    def shifted(lane: Lane) -> list[Step]:
        return [
            tuple(
                Gate(g.kind, g.q + lane.qubit_base,
                     None if g.target is None else g.target + lane.qubit_base,
                     phase=g.phase)
                for g in step
            )
            for step in net.steps
        ]

    steps: list[Step] = []
    rounds: list[RoundPlan] = []

    def interaction(bit_lane: Lane, sign_lane: Lane) -> list[Step]:
        out: list[Step] = []
        for q in range(n):
            out.append((Gate("X", q, bit_lane.qubit_base + q, phase="interact"),))
        for q in range(n):
            out.append((Gate("X", sign_lane.qubit_base + q, q, phase="interact"),))
        out.append(tuple(
            Gate("M", lane.qubit_base + q, phase="interact")
            for lane in (bit_lane, sign_lane)
            for q in range(n)
        ))
        return out

    if mode == "serial":
        for _ in range(r):
            p0 = len(steps)
            ax, az = shifted(lanes[0]), shifted(lanes[1])
            steps.extend(tuple(a + b) for a, b in zip(ax, az))
            i0 = len(steps)
            steps.extend(interaction(lanes[0], lanes[1]))
            rounds.append(RoundPlan(0, 1, (p0, i0), (i0, len(steps))))
    else:
        p0 = len(steps)
        all_lanes = [shifted(lane) for lane in lanes]
        for step_parts in zip(*all_lanes):
            steps.append(tuple(g for part in step_parts for g in part))
        prep_end = len(steps)
        for j in range(r):
            i0 = len(steps)
            steps.extend(interaction(lanes[2 * j], lanes[2 * j + 1]))
            rounds.append(RoundPlan(2 * j, 2 * j + 1, (p0, prep_end), (i0, len(steps))))

    return CorrectionSchedule(
        css=css, r=r, mode=mode, eta=css.w, network=net,
        lanes=lanes, rounds=tuple(rounds), steps=tuple(steps), blocks=blocks,
    )
