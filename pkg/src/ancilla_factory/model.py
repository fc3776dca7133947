"""Analytic failure and overhead model for block-coded correction.

Closed forms for the preparation cost, the wrong-syndrome probability, the
per-correction failure probability P, block and concatenated overheads, and
the bisection solver for the largest tolerable gate error rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .codes import CssCode


@dataclass(frozen=True)
class CodeParams:
    """Parameters of an [[n, 1, d]] code as the model consumes them.

    Defaults follow the safe choices: r = t + 1 syndrome repetitions and
    eta = w computational steps per whole-computer correction.
    """

    n: int
    d: int
    r: int | None = None
    eta: int | None = None

    def __post_init__(self):
        if self.n < 3 or self.n % 2 == 0:
            raise ValueError("block length must be odd and >= 3")
        if self.d % 2 == 0:
            raise ValueError("distance must be odd")
        if self.repetitions < 1 or self.steps_per_correction < 1:
            raise ValueError("r and eta must be >= 1")

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
    def repetitions(self) -> int:
        return self.r if self.r is not None else self.t + 1

    @property
    def steps_per_correction(self) -> int:
        return self.eta if self.eta is not None else self.w

    @classmethod
    def from_css(cls, css: CssCode, r: int | None = None, eta: int | None = None) -> "CodeParams":
        return cls(css.n, css.d, r, eta)


@dataclass(frozen=True)
class NoisePoint:
    gamma: float
    epsilon: float

    def __post_init__(self):
        if self.gamma < 0 or self.epsilon < 0:
            raise ValueError("noise rates must be non-negative")

    @classmethod
    def from_ratio(cls, gamma: float, ratio: float, n: int) -> "NoisePoint":
        return cls(gamma, ratio * gamma / n)


@dataclass(frozen=True)
class Scenario:
    """Computation-scale inputs: K logical qubits for Q computational steps."""

    K: int
    Q: float
    mode: str = "serial"
    epsilon_ratio: float = 0.5
    gamma0: float | None = None
    eta: int | None = None
    r: int | None = None

    def __post_init__(self):
        if self.K < 1 or self.Q < 1:
            raise ValueError("K and Q must be >= 1")
        if self.mode not in ("serial", "parallel"):
            raise ValueError("mode must be serial or parallel")

    def target(self, eta: int) -> float:
        """Failure budget per block per correction: P < eta / (K Q)."""
        return (self.eta or eta) / (self.K * self.Q)

    @classmethod
    def from_json(cls, data: dict) -> "Scenario":
        known = {"K", "Q", "mode", "epsilon_ratio", "gamma0", "eta", "r"}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown scenario fields: {sorted(extra)}")
        missing = {"K", "Q"} - set(data)
        if missing:
            raise ValueError(f"scenario is missing fields: {sorted(missing)}")
        return cls(**data)


@dataclass(frozen=True)
class OverheadReport:
    gamma: float | None
    epsilon: float | None
    P: float | None
    alpha: float | None
    wrong_syndrome_prob: float | None
    scale_up: float
    slow_down: float
    N: float
    T: float
    parallelism: float
    flags: tuple[str, ...] = ()


def prep_timesteps(p: CodeParams) -> int:
    """Timesteps to prepare and verify one ancilla block: m(2w+1)+3."""
    return p.m * (2 * p.w + 1) + 3


def prep_timesteps_alt(p: CodeParams) -> int:
    """Equivalent closed form n w + (n+5)/2 - w."""
    return p.n * p.w + (p.n + 5) // 2 - p.w


def alpha_analytic(p: CodeParams, noise: NoisePoint) -> float:
    """Probability the extracted syndrome is corrupted.

    1 - alpha = (1 - 2 gamma/3)^(2(mw + 2n + m + 1)) (1 - eps/3)^((n-1) T):
    every gate, preparation, measurement and transversal-extraction slot
    carries 2 gamma/3, and n - 1 resting qubits carry eps/3 per timestep.
    """
    gate_slots = 2 * (p.m * p.w + 2 * p.n + p.m + 1)
    idle_slots = (p.n - 1) * prep_timesteps(p)
    ok = (1 - 2 * noise.gamma / 3) ** gate_slots * (1 - noise.epsilon / 3) ** idle_slots
    return 1.0 - ok


def gate_opportunities(p: CodeParams) -> int:
    """Independent gate-error slots per corrected basis: g = n(4r + 1)."""
    return p.n * (4 * p.repetitions + 1)


def storage_serial(p: CodeParams) -> float:
    """Storage-error slots with r serial syndrome rounds."""
    return p.n * ((p.n - 1) * p.w + 2.5 * p.n + 3.5) * p.repetitions


def storage_parallel(p: CodeParams) -> float:
    """Storage-error slots with 2r ancillas prepared in parallel."""
    return p.n * ((p.n - 1) * p.w + 0.5 * p.n + 3.5 + 2 * p.n * p.repetitions)


def _storage(p: CodeParams, mode: str) -> float:
    return storage_serial(p) if mode == "serial" else storage_parallel(p)


def error_argument(p: CodeParams, noise: NoisePoint, mode: str) -> float:
    """Per-slot error strength x = (2/3) gamma + (s/g)(2/3) epsilon."""
    g = gate_opportunities(p)
    return (2 / 3) * noise.gamma + (_storage(p, mode) / g) * (2 / 3) * noise.epsilon


def failure_probability(p: CodeParams, noise: NoisePoint, mode: str,
                        bounded: bool = False, rel_cutoff: float = 1e-3) -> float:
    """Per-block per-correction failure: too many bit or sign errors.

    P = 2 sum_{i=t+1}^{g} C(g, i) x^i, evaluated in the log domain with the
    sum cut off once a term drops below `rel_cutoff` of the partial sum
    (relative truncation error below rel_cutoff/(1-ratio)). `bounded=True`
    multiplies in the binomial (1-x)^(g-i) factor, which keeps the result a
    probability for large x; the plain printed form is the default output.
    """
    g = gate_opportunities(p)
    x = error_argument(p, noise, mode)
    if x <= 0:
        return 0.0
    if x >= 1:
        return 1.0
    log_x = math.log(x)
    log_1mx = math.log1p(-x) if bounded else 0.0
    total = 0.0
    for i in range(p.t + 1, g + 1):
        log_term = (
            math.lgamma(g + 1) - math.lgamma(i + 1) - math.lgamma(g - i + 1)
            + i * log_x + (g - i) * log_1mx
        )
        term = math.exp(log_term)
        total += term
        if term < rel_cutoff * total:
            break
    return min(1.0, 2 * total)


def wrong_syndrome_probability(p: CodeParams, noise: NoisePoint) -> float:
    """Chance of r consistent but wrong syndromes: about 2n (alpha/n)^r."""
    alpha = alpha_analytic(p, noise)
    return 2 * p.n * (alpha / p.n) ** p.repetitions


def block_overheads(p: CodeParams, scenario: Scenario,
                    noise: NoisePoint | None = None) -> OverheadReport:
    """Scale-up, slow-down and parallelism for ancilla-factory block coding."""
    r = scenario.r if scenario.r is not None else p.repetitions
    pp = replace(p, r=r)
    eta = scenario.eta if scenario.eta is not None else pp.steps_per_correction
    n = pp.n
    if scenario.mode == "serial":
        scale = n + 2 * (n + 1)
        parallelism = 3 * scenario.K
    else:
        scale = n + 2 * r * (n + 1)
        parallelism = scenario.K * (1 + 2 * r)
    slow = ((n - 1) * pp.w + 5 * n) * 2 * r * scenario.K / eta
    P = alpha = wrong = None
    gamma = epsilon = None
    if noise is not None:
        gamma, epsilon = noise.gamma, noise.epsilon
        P = failure_probability(pp, noise, scenario.mode)
        alpha = alpha_analytic(pp, noise)
        wrong = wrong_syndrome_probability(pp, noise)
    return OverheadReport(
        gamma=gamma, epsilon=epsilon, P=P, alpha=alpha, wrong_syndrome_prob=wrong,
        scale_up=scale, slow_down=slow,
        N=scale * scenario.K, T=slow * scenario.Q, parallelism=parallelism,
    )


CAT_STATE_OPS_FACTOR = 576  # replaces 480 when syndromes come from cat states


def concat_overheads_from_level(L: int, scenario: Scenario, eta: int = 8,
                                cat_state: bool = False) -> OverheadReport:
    """Concatenated 7-qubit-code overheads at a fixed level count L.

    T/Q = 7^(L-1) 480 K / eta (two corrections per level, two ancillas and
    two syndrome extractions each); parallelism = 2 K 7^(L-1).
    """
    if L < 1:
        raise ValueError("level count must be >= 1")
    eta = scenario.eta if scenario.eta is not None else eta
    factor = CAT_STATE_OPS_FACTOR if cat_state else 480
    scale = 7.0 ** L
    slow = 7 ** (L - 1) * factor * scenario.K / eta
    return OverheadReport(
        gamma=None, epsilon=None, P=None, alpha=None, wrong_syndrome_prob=None,
        scale_up=scale, slow_down=slow,
        N=scale * scenario.K, T=slow * scenario.Q,
        parallelism=2 * scenario.K * 7 ** (L - 1),
        flags=("scale-up at fixed L is the bare 7^L",),
    )


def concat_overheads(gamma: float, gamma0: float, scenario: Scenario,
                     eta: int = 8, cat_state: bool = False) -> OverheadReport:
    """Concatenated-code overheads: N/K = (log(gamma0 Q)/log(gamma0/gamma))^log2(7).

    gamma0 is the threshold error rate and must exceed gamma; it has no
    default because no numeric value is pinned anywhere in the model.
    """
    if gamma >= gamma0:
        raise ValueError(f"gamma {gamma} must lie below the threshold gamma0 {gamma0}")
    if gamma0 * scenario.Q <= 1:
        raise ValueError("gamma0 * Q must exceed 1 for a positive level count")
    eta = scenario.eta if scenario.eta is not None else eta
    scale = (math.log(gamma0 * scenario.Q) / math.log(gamma0 / gamma)) ** math.log2(7)
    L = max(1, math.ceil(math.log(scale) / math.log(7)))
    factor = CAT_STATE_OPS_FACTOR if cat_state else 480
    slow = 7 ** (L - 1) * factor * scenario.K / eta
    return OverheadReport(
        gamma=gamma, epsilon=None, P=None, alpha=None, wrong_syndrome_prob=None,
        scale_up=scale, slow_down=slow,
        N=scale * scenario.K, T=slow * scenario.Q,
        parallelism=2 * scenario.K * 7 ** (L - 1),
        flags=(f"levels={L}",),
    )


def solve_max_gamma(p: CodeParams, scenario: Scenario,
                    bounded: bool = True, rel_tol: float = 1e-3) -> tuple[float, float]:
    """Largest gamma with P(gamma, epsilon = ratio gamma / n) below eta/(K Q).

    Bisection on log gamma against the monotone failure probability, down to
    |P - target| / target < rel_tol. The probability-bounded tail is the
    default here: the plain printed form overshoots the published operating
    points by up to ~10% at the largest block sizes (see failure_probability).
    Returns (gamma*, epsilon*).
    """
    eta = scenario.eta if scenario.eta is not None else p.steps_per_correction
    target = scenario.target(eta)
    ratio = scenario.epsilon_ratio

    def P_of(gamma: float) -> float:
        noise = NoisePoint.from_ratio(gamma, ratio, p.n)
        return failure_probability(p, noise, scenario.mode, bounded=bounded)

    lo, hi = 0.0, 0.1
    if P_of(hi) < target:
        raise ValueError(f"target {target:g} not reachable within gamma <= {hi}")
    lo_pos = 1e-18
    for _ in range(500):
        mid = math.sqrt(lo_pos * hi) if lo == 0.0 else 0.5 * (lo + hi)
        val = P_of(mid)
        if abs(val - target) / target < rel_tol:
            return mid, ratio * mid / p.n
        if val > target:
            hi = mid
        else:
            lo = mid
            lo_pos = mid
    raise ArithmeticError("bisection failed to converge")
