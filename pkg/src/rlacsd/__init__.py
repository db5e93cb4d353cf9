"""Risk-limiting audit engine with card-style-data targeted sampling."""

from .engine import (
    AuditConfig,
    AuditMethod,
    AuditState,
    ContestStatus,
    Interpretation,
    SamplingMode,
    audit_status,
    finalize_round,
    initialize_audit,
    plan_round,
    record_interpretation,
    run_audit,
    score_comparison,
)
from .errors import AuditError
from .formulas import (
    GAMMA_DEFAULT,
    DiscrepancyCounts,
    Layout,
    ObservedBallot,
    S4Params,
    TwoContestConfig,
    bravo_asn,
    bravo_expected_draws,
    bravo_savings,
    bravo_sprt_update,
    km_risk,
    rho,
    s4_sample_size,
    s4_savings,
    s4_with_csd,
    s4_without_csd,
)
from .model import (
    CardRef,
    CardStyleTable,
    Contest,
    Cvr,
    Manifest,
    MarginSet,
    contest_margins,
    parse_contests,
    parse_csd,
    parse_cvrs,
    parse_manifest,
    validate_election,
)
from .sampling import (
    ContestSample,
    SeededAssignment,
    assign_numbers,
    consistent_sample,
    retrieval_list,
    with_replacement_draws,
)
from .session import Session

__version__ = "0.1.0"
