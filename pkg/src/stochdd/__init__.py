"""Stochastic simulation of noisy quantum circuits on decision diagrams."""

from .circuit import Circuit, GateOp, generate_ghz, generate_qft, to_qasm, validate
from .dd import Arena, MatrixDD, StateDD
from .errors import (
    CircuitValidationError,
    InvalidArgumentError,
    NumericDegeneracyError,
    ResourceLimitError,
    RunError,
    StochDDError,
    UnsupportedGateError,
)
from .estimator import StochasticSimulator
from .noise import NoiseSpec, insert_noise
from .qasm import QasmError, QasmSyntaxError, QasmUnsupportedError, load_qasm, parse_qasm
from .sampler import (
    Aggregate,
    PropertySpec,
    RunResult,
    SamplingPlan,
    estimate_error_bars,
    plan_samples,
    run_ensemble,
    run_once,
)

__version__ = "0.1.0"

__all__ = [
    "Aggregate",
    "Arena",
    "Circuit",
    "CircuitValidationError",
    "GateOp",
    "InvalidArgumentError",
    "MatrixDD",
    "NoiseSpec",
    "NumericDegeneracyError",
    "PropertySpec",
    "QasmError",
    "QasmSyntaxError",
    "QasmUnsupportedError",
    "ResourceLimitError",
    "RunError",
    "RunResult",
    "SamplingPlan",
    "StateDD",
    "StochDDError",
    "StochasticSimulator",
    "UnsupportedGateError",
    "estimate_error_bars",
    "generate_ghz",
    "generate_qft",
    "insert_noise",
    "load_qasm",
    "parse_qasm",
    "plan_samples",
    "run_ensemble",
    "run_once",
    "to_qasm",
    "validate",
]
