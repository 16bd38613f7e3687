"""Python bindings for the vrsim simulator core."""

from ._vrsim import (
    PROTO_VERSION,
    Config,
    ConfigError,
    ContractViolation,
    Environment,
    ParseError,
    ScenarioAborted,
    SequencingError,
    Session,
    canonical_json,
    equal_allocation,
    golden_transcript,
    pf_select,
    reference_config_v1,
    reference_script_v1,
    run_scenario,
    transition_penalty,
    urgency_allocation,
)

__all__ = [
    "PROTO_VERSION",
    "Config",
    "ConfigError",
    "ContractViolation",
    "Environment",
    "ParseError",
    "ScenarioAborted",
    "SequencingError",
    "Session",
    "canonical_json",
    "equal_allocation",
    "golden_transcript",
    "pf_select",
    "reference_config_v1",
    "reference_script_v1",
    "run_scenario",
    "transition_penalty",
    "urgency_allocation",
]
