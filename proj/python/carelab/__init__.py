"""Deterministic elderly-care simulation with auditable closed-loop policy control."""

from ._core import (
    AgentState,
    BackendUnavailable,
    Condition,
    ControlConfig,
    ControlDecision,
    Diagnosis,
    InsufficientSample,
    IntegrityError,
    InvalidConfiguration,
    MacroStats,
    PolicyParams,
    RunResult,
    SchemaViolation,
    World,
    aggregate,
    closed_loop_update,
    cohens_d,
    heuristic_diagnose,
    init_world,
    llm_mapping_update,
    mean_loneliness,
    parse_audit_log,
    parse_response,
    read_audit_log,
    replay_verify,
    run_condition,
    run_suite,
    step_day,
    t_test,
)

__all__ = [name for name in dir() if not name.startswith("_")]
