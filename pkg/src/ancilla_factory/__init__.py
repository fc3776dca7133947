"""Encoded-ancilla factory analysis: CSS code construction, preparation and
verification networks, Pauli-frame fault simulation, and the analytic
failure/overhead model, with a reporting CLI."""

from .codes import (
    ClassicalCode,
    CssCode,
    SyndromeDecoder,
    build_syndrome_decoder,
    construct_css,
    css_catalog,
    load_code_catalog,
    parent_catalog,
    verify_code_properties,
    weight_distribution,
)
from .model import (
    CodeParams,
    NoisePoint,
    OverheadReport,
    Scenario,
    alpha_analytic,
    block_overheads,
    concat_overheads,
    failure_probability,
    solve_max_gamma,
    wrong_syndrome_probability,
)
from .network import (
    CorrectionSchedule,
    Gate,
    PrepNetwork,
    build_correction_schedule,
    build_prep_network,
    check_schedule_legality,
    count_resources,
)
from .pauli_sim import (
    NoiseModel,
    PauliFrame,
    RunOutcome,
    acceptance_set,
    check_reduced_network,
    enumerate_single_faults,
    extract_and_decode,
    propagate,
    run_prep_once,
    simulate_block_cycle,
)

__version__ = "0.1.0"
