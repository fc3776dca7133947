"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see every line. The
Monte Carlo rejection-rate comparison (criterion 7a) is implemented at its
stated tolerance and is expected to fail: the analytic wrong-syndrome budget
counts fault classes the verifier cannot see (details in the test body).
"""

import json
import math
import time

import pytest

from ancilla_factory.codes import (
    ConstructionError,
    css_catalog,
    parent_catalog,
    weight_distribution,
)
from ancilla_factory.model import (
    CodeParams,
    NoisePoint,
    Scenario,
    alpha_analytic,
    concat_overheads_from_level,
    error_argument,
    failure_probability,
    gate_opportunities,
    solve_max_gamma,
    storage_parallel,
    storage_serial,
)
from ancilla_factory.network import build_prep_network, count_resources
from ancilla_factory.pauli_sim import (
    NoiseModel,
    acceptance_set,
    enumerate_single_faults,
    measure_rejection_rate,
    simulate_block_cycle,
)

SHOR = Scenario(K=2150, Q=2e10)


def report(num: int, name: str, ok: bool, detail: str) -> bool:
    print(f"criterion {num} ({name}): {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


def test_criterion_1_network_counts():
    cat = css_catalog()  # warm the catalog; the budget covers the counting
    t0 = time.time()
    details = []
    ok = True
    net7 = build_prep_network(cat["css7"])
    rc7 = count_resources(net7)
    ok &= rc7.ops_total == 46 and rc7.timesteps == 30
    details.append(f"css7 ops={rc7.ops_total} steps={rc7.timesteps}")
    for name in ("css7", "css23", "css55"):
        css = cat[name]
        rc = count_resources(build_prep_network(css))
        ok &= rc.timesteps == css.m * (2 * css.w + 1) + 3
        ok &= rc.ops_total == 2 * (css.n + css.m + 1) + 2 * css.m * css.w
    # the trusted-distance code has no matrices: the builder refuses and the
    # two closed timestep forms stand in for the builder identity
    css87 = cat["css87"]
    with pytest.raises(ConstructionError):
        build_prep_network(css87)
    from ancilla_factory.model import prep_timesteps, prep_timesteps_alt

    p87 = CodeParams.from_css(css87)
    ok &= prep_timesteps(p87) == prep_timesteps_alt(p87) == 1422
    details.append("css23/css55 formulas exact; css87 closed forms agree")
    ok &= time.time() - t0 < 1.0
    assert report(1, "network counts", ok, "; ".join(details))


def test_criterion_2_golay_weight_distribution():
    golay = parent_catalog()["golay24"]
    t0 = time.time()
    dist = weight_distribution(golay)
    expected = {0: 1, 8: 759, 12: 2576, 16: 759, 24: 1}
    ok = dist == expected and time.time() - t0 < 1.0
    assert report(2, "Golay validation", ok, f"distribution={dist}")


def test_criterion_3_verification_filter_theorem():
    cat = css_catalog()
    ok = True
    details = []
    for name, budget in (("css7", 60.0), ("css23", 60.0)):
        css = cat[name]
        t0 = time.time()
        acc = acceptance_set(build_prep_network(css))
        dt = time.time() - t0
        words = {int(w) for w in css.small_codewords()}
        good = acc == words and len(acc) == 1 << css.m and dt < budget
        ok &= good
        details.append(f"{name}: 2^{css.n} patterns, |accepted|={len(acc)}, {dt:.1f}s")
    assert report(3, "verification filter", ok, "; ".join(details))


def test_criterion_4_single_fault_property():
    cat = css_catalog()
    ok = True
    details = []
    t0 = time.time()
    for name in ("css7", "css23"):
        reports = enumerate_single_faults(build_prep_network(cat[name]))
        bad = [r for r in reports
               if not r.detected and r.residual_coset_weight > 1]
        ok &= not bad
        details.append(f"{name}: {len(reports)} faults, {len(bad)} violations")
    ok &= time.time() - t0 < 300.0
    assert report(4, "single-fault property", ok,
                  "; ".join(details) + f"; {time.time() - t0:.1f}s")


TABLE_GAMMAS = {
    "serial": {23: 2.2e-6, 55: 9e-6, 87: 17e-6},
    "parallel": {23: 1.7e-6, 55: 8e-6, 87: 19e-6},
}
TABLE_EPSILONS = {
    "serial": {23: 0.05e-6, 55: 0.08e-6, 87: 0.1e-6},
    "parallel": {23: 0.15e-6, 55: 0.3e-6, 87: 0.44e-6},
}
TABLE_T = {23: 0.3e16, 55: 2e16, 87: 3.9e16}


def test_criterion_5_table_reproduction():
    from ancilla_factory.model import block_overheads

    t0 = time.time()
    ok = True
    details = []
    for mode, ratio in (("serial", 0.5), ("parallel", 2.0)):
        for n, d in ((23, 7), (55, 11), (87, 15)):
            p = CodeParams(n, d)
            sc = Scenario(SHOR.K, SHOR.Q, mode, ratio)
            gamma, eps = solve_max_gamma(p, sc)
            g_ok = abs(gamma / TABLE_GAMMAS[mode][n] - 1) <= 0.10
            e_ok = abs(eps / TABLE_EPSILONS[mode][n] - 1) <= 0.10
            rep = block_overheads(p, sc)
            if mode == "serial":
                n_ok = rep.scale_up == n + 2 * (n + 1)
                p_ok = rep.parallelism == 3 * SHOR.K
            else:
                n_ok = rep.scale_up == n + 2 * p.repetitions * (n + 1)
                p_ok = rep.parallelism == SHOR.K * (1 + 2 * p.repetitions)
            t_ok = 1 / 5 <= rep.T / TABLE_T[n] <= 5
            ok &= g_ok and e_ok and n_ok and p_ok and t_ok
            details.append(
                f"{mode}[[{n}]]: gamma {gamma*1e6:.2f} ({'ok' if g_ok else 'MISS'}) "
                f"eps {eps*1e6:.3f} ({'ok' if e_ok else 'MISS'}) "
                f"T x{rep.T / TABLE_T[n]:.1f}"
            )
    ok &= time.time() - t0 < 10.0
    assert report(5, "table reproduction", ok, "; ".join(details))


def test_criterion_6_concatenated_reference():
    rep = concat_overheads_from_level(3, SHOR, eta=8)
    p_ok = abs(rep.parallelism / 2e5 - 1) <= 0.10
    t_ok = 1 / 3 <= rep.T / 1e17 <= 3
    ok = p_ok and t_ok
    assert report(6, "concatenated reference", ok,
                  f"parallelism={rep.parallelism:.3g} T={rep.T:.3g}")


def test_criterion_7a_rejection_rate_vs_alpha():
    """Stated tolerance: within 3 sigma and within 20 percent of the
    analytic alpha. The faithful simulation rejects at 0.66-0.68 of that
    budget, so this criterion records a FAIL: the analytic budget also
    counts the 2n transversal-extraction slots and the sign-type faults
    that corrupt only the syndrome, none of which can trip a verifier
    measurement, and the simulation samples correlated two-qubit faults
    (8/15 marginal) that the budget rounds up to 2/3."""
    css7 = css_catalog()["css7"]
    p7 = CodeParams(7, 3)
    trials = 10 ** 6
    ok = True
    details = []
    for gamma in (1e-4, 3e-4, 1e-3):
        noise = NoiseModel(gamma, 0.5 * gamma / 7)
        rate, _ = measure_rejection_rate(css7, noise, trials, seed=2024, threads=4)
        alpha = alpha_analytic(p7, NoisePoint(noise.gamma, noise.epsilon))
        sigma = math.sqrt(alpha * (1 - alpha) / trials)
        within_3sigma = abs(rate - alpha) <= 3 * sigma
        within_20pct = abs(rate - alpha) <= 0.20 * alpha
        ok &= within_3sigma and within_20pct
        details.append(f"gamma={gamma:.0e}: measured/alpha={rate / alpha:.3f}")
    report(7, "MC rejection vs analytic alpha", ok, "; ".join(details))
    assert ok, ("rejection rate tracks 0.66-0.68 of the analytic budget; "
                "see decision ledger for the fault-class accounting")


def test_criterion_7b_cycle_failure_vs_analytic():
    css7 = css_catalog()["css7"]
    noise = NoiseModel(1e-3, 0.5e-3 / 7)
    stats = simulate_block_cycle(css7, noise, r=2, mode="serial",
                                 trials=10 ** 6, seed=2024, threads=4)
    P = failure_probability(CodeParams(7, 3), NoisePoint(noise.gamma, noise.epsilon), "serial")
    ratio = stats.logical_failure_rate / P
    ok = 0.1 <= ratio <= 10
    assert report(7, "MC cycle failure vs analytic P", ok,
                  f"measured={stats.logical_failure_rate:.3e} analytic={P:.3e} "
                  f"ratio={ratio:.2f}")


def test_criterion_8_figure4_structure():
    t0 = time.time()
    grid = [10 ** (-7 + 4 * i / 60) for i in range(61)]
    codes = [CodeParams(7, 3), CodeParams(23, 7), CodeParams(55, 11), CodeParams(87, 15)]
    ok = True
    for mode, ratio in (("serial", 0.5), ("parallel", 2.0)):
        for p in codes:
            vals = [
                failure_probability(p, NoisePoint(g, ratio * g / p.n), mode)
                for g in grid
            ]
            ok &= all(b >= a for a, b in zip(vals, vals[1:]))
    p23, p87 = codes[1], codes[3]

    def pr(p, g):
        return failure_probability(p, NoisePoint(g, 0.5 * g / p.n), "serial")

    dominance = all(pr(p87, g) < pr(p23, g) for g in grid if g <= 1e-6)
    crossing = any(pr(p87, g) > pr(p23, g) for g in grid)
    ok &= dominance and crossing
    for p in codes:
        term_s = (storage_serial(p) / gate_opportunities(p)) * 0.5 / p.n
        term_p = (storage_parallel(p) / gate_opportunities(p)) * 2.0 / p.n
        for g in grid:
            xs = error_argument(p, NoisePoint(g, 0.5 * g / p.n), "serial")
            xp = error_argument(p, NoisePoint(g, 2.0 * g / p.n), "parallel")
            ok &= (xp > xs) == (term_p > term_s)
    ok &= time.time() - t0 < 5.0
    assert report(8, "figure-4 structure", ok,
                  f"monotone; dominance at small gamma; crossing found={crossing}")


def test_criterion_9_thread_determinism():
    css7 = css_catalog()["css7"]
    noise = NoiseModel(1e-3, 0.5e-3 / 7)
    payloads = []
    for threads in (1, 4, 16):
        stats = simulate_block_cycle(css7, noise, r=2, mode="serial",
                                     trials=30_000, seed=7, threads=threads)
        payloads.append(json.dumps(stats.to_json(), sort_keys=True))
    ok = payloads[0] == payloads[1] == payloads[2]
    assert report(9, "thread determinism", ok,
                  "bit-identical JSON for threads 1, 4, 16")
