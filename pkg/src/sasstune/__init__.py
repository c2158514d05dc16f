"""Schedule tuning for GPU machine-code dumps.

Parse a SASS-style kernel listing, build its dependence graph, and search
for a faster legal instruction order by annealed adjacent swaps, pricing
each candidate on a scoreboard model or an external measurement command
and vetting it by differential execution on random inputs.
"""
from .anneal import (
    AnnealConfig,
    AnnealState,
    HistoryRecord,
    InvalidBaseline,
    accept_move,
    anneal,
    feedback,
)
from .backends import (
    BackendDescriptor,
    CostSample,
    ExternalCommandBackend,
    MeasurementFailed,
    SimulatorBackend,
    make_backend,
)
from .deps import DepEdge, DepGraph, DepKind, build_depgraph, mem_refs, reads_writes, swap_legal
from .difftest import (
    BufferSpec,
    FailureDetail,
    TestPlan,
    TestVerdict,
    first_failure_index,
    pass_curve,
    run_tests,
)
from .driver import ChainOutcome, SearchReport, run_search
from .estimator import ScheduleTuner, as_kernel
from .ir import ControlCode, ControlError, Instruction, InstrClass, Kernel, Operand, OperandKind, classify
from .machine import (
    CompiledKernel,
    MachineConfig,
    OutOfBoundsAccess,
    SimReport,
    UninitializedRead,
    UnsupportedInstruction,
    interpret,
    simulate,
)
from .perturb import Action, CandidateSet, Direction, MoveRejected, NoCandidatesError, apply_action, candidates, sample_action
from .sasstext import ParseDiagnostic, ParseError, parse_control, parse_kernel, serialize_kernel
from .store import ResultStore, input_hash

__version__ = "0.1.0"

__all__ = [
    "Action",
    "AnnealConfig",
    "AnnealState",
    "BackendDescriptor",
    "BufferSpec",
    "CandidateSet",
    "ChainOutcome",
    "CompiledKernel",
    "ControlCode",
    "ControlError",
    "CostSample",
    "DepEdge",
    "DepGraph",
    "DepKind",
    "Direction",
    "ExternalCommandBackend",
    "FailureDetail",
    "HistoryRecord",
    "Instruction",
    "InstrClass",
    "InvalidBaseline",
    "Kernel",
    "MachineConfig",
    "MeasurementFailed",
    "MoveRejected",
    "NoCandidatesError",
    "Operand",
    "OperandKind",
    "OutOfBoundsAccess",
    "ParseDiagnostic",
    "ParseError",
    "ResultStore",
    "ScheduleTuner",
    "SearchReport",
    "SimReport",
    "SimulatorBackend",
    "TestPlan",
    "TestVerdict",
    "UninitializedRead",
    "UnsupportedInstruction",
    "accept_move",
    "anneal",
    "apply_action",
    "as_kernel",
    "build_depgraph",
    "candidates",
    "classify",
    "feedback",
    "first_failure_index",
    "input_hash",
    "interpret",
    "make_backend",
    "mem_refs",
    "parse_control",
    "parse_kernel",
    "pass_curve",
    "reads_writes",
    "run_search",
    "run_tests",
    "sample_action",
    "serialize_kernel",
    "simulate",
    "swap_legal",
]
