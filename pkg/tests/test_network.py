import re

import pytest

from ancilla_factory.codes import ConstructionError
from ancilla_factory.network import (
    CorrectionSchedule,
    Gate,
    build_correction_schedule,
    build_prep_network,
    check_schedule_legality,
    count_resources,
)


def census(css):
    return 2 * (css.n + css.m + 1) + 2 * css.m * css.w


def formula_steps(css):
    return css.m * (2 * css.w + 1) + 3


def test_css7_counts(net7):
    rc = count_resources(net7)
    assert rc.ops_total == 46
    assert rc.timesteps == 30
    assert rc.ops_by_kind == {"P": 8, "H": 10, "X": 24, "M": 4}


def test_css23_counts(net23, css23):
    rc = count_resources(net23)
    assert rc.timesteps == 11 * 17 + 3 == 190
    assert rc.ops_total == census(css23) == 246


def test_css55_counts(css55):
    rc = count_resources(build_prep_network(css55))
    assert rc.timesteps == 27 * 25 + 3 == 678
    assert rc.ops_total == census(css55)


def test_builder_matches_closed_forms(css7, css23, css55):
    for css in (css7, css23, css55):
        rc = count_resources(build_prep_network(css))
        assert rc.timesteps == formula_steps(css)
        assert rc.ops_total == census(css)


def test_idle_tracks_model_exponent(net7, net23, css7, css23):
    # the (n-1) * timesteps exponent treats n-1 qubits as always resting;
    # the literal count sits within ten percent of it
    for net, css in ((net7, css7), (net23, css23)):
        rc = count_resources(net)
        model = (css.n - 1) * rc.timesteps
        assert abs(rc.idle_qubit_timesteps - model) <= 0.1 * model


def test_empty_network_counts():
    rc = count_resources(None)
    assert rc.ops_total == 0 and rc.timesteps == 0 and rc.idle_qubit_timesteps == 0


def test_builder_refuses_without_matrices(css87):
    with pytest.raises(ConstructionError, match="unavailable"):
        build_prep_network(css87)


def test_final_check_weight_counted(net23, css23):
    assert count_resources(net23).final_check_weight == css23.m


def test_builder_output_is_legal(net7, net23, css55):
    assert check_schedule_legality(net7.steps) == []
    assert check_schedule_legality(net23.steps) == []
    assert check_schedule_legality(build_prep_network(css55).steps) == []


def test_two_xors_in_one_step_is_flagged():
    steps = [(Gate("X", 0, 1), Gate("X", 2, 3))]
    violations = check_schedule_legality(steps)
    assert len(violations) == 1 and "two two-qubit" in violations[0]


def test_qubit_used_twice_is_flagged():
    steps = [(Gate("H", 0), Gate("P", 0))]
    violations = check_schedule_legality(steps)
    assert len(violations) == 1 and "twice" in violations[0]


def test_gate_validation():
    with pytest.raises(ValueError):
        Gate("X", 1, 1)
    with pytest.raises(ValueError):
        Gate("Q", 0)
    with pytest.raises(ValueError):
        Gate("H", 0, 1)


def test_dump_format(net7):
    dump = net7.dump()
    lines = dump.splitlines()
    assert len(lines) == 30
    assert lines[0] == "P(0) P(1) P(2) P(3) P(4) P(5) P(6) P(7)"
    token = re.compile(r"^([PHM]\(\d+\)|X\(\d+>\d+\))$")
    for line in lines:
        for tok in line.split():
            assert token.match(tok), tok


def test_phase_tags(net7):
    phases = [g.phase for _i, g in net7.gates()]
    assert phases.count("final_hadamard") == 7
    assert all(p in ("generation", "verification", "final_hadamard") for p in phases)


# -- correction schedules ----------------------------------------------------

def test_serial_schedule_css7(css7):
    sch = build_correction_schedule(css7, 2, "serial")
    assert len(sch.lanes) == 2
    assert len(sch.rounds) == 2
    for rnd in sch.rounds:
        assert rnd.interact_steps[1] - rnd.interact_steps[0] == 2 * css7.n + 1 == 15
    assert check_schedule_legality(sch.steps, sch.blocks) == []


def test_parallel_schedule_lane_count(css23):
    sch = build_correction_schedule(css23, 4, "parallel")
    assert len(sch.lanes) == 8
    assert check_schedule_legality(sch.steps, sch.blocks) == []


def test_r1_modes_coincide(css7):
    serial = build_correction_schedule(css7, 1, "serial").gate_multiset()
    parallel = build_correction_schedule(css7, 1, "parallel").gate_multiset()
    assert serial == parallel


def test_schedule_rejects_bad_args(css7):
    with pytest.raises(ValueError):
        build_correction_schedule(css7, 0, "serial")
    with pytest.raises(ValueError):
        build_correction_schedule(css7, 2, "zigzag")


def test_lane_roles_alternate(css7):
    sch = build_correction_schedule(css7, 3, "parallel")
    roles = [lane.role for lane in sch.lanes]
    assert roles == ["bit", "sign"] * 3


def test_schedule_eta_defaults_to_w(css7, css23):
    assert build_correction_schedule(css7, 2, "serial").eta == css7.w
    assert build_correction_schedule(css23, 4, "serial").eta == css23.w
