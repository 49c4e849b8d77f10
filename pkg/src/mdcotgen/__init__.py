"""Generate multi-file code projects from a structured task prompt.

The work is split into three reasoning tiers (modules, functions, code), each
step optionally verified and rectified by the model under a decaying
verification probability, and the assembled project is checked for
cross-unit conflicts that the model is asked to repair.
"""

__version__ = "0.1.0"

from .assembler import Manifest, write_project
from .backtracker import (
    IntegrationResult,
    detect_conflicts_llm,
    detect_conflicts_static,
    integrate,
    merge_module,
    resolve,
)
from .config import RunConfig
from .errors import GeneratorError
from .evaluator import (
    EvalScores,
    aggregate_lengths,
    code_length,
    judge,
    load_dataset,
    weighted_sum,
)
from .models import (
    Category,
    ConflictKind,
    ConflictReport,
    ConflictScope,
    Dimension,
    DimensionWeightState,
    FunctionRationale,
    GeneratedFunction,
    ModuleNode,
    ModuleRationale,
    ProjectTree,
    TaskPrompt,
    VerificationResult,
    validate_task_prompt,
)
from .pipeline import (
    decompose_strategic,
    decompose_tactical,
    generate_function,
    run_pipeline,
)
from .provider import HTTPProvider, MockProvider, ProviderProfile, load_mock_script
from .rectification import attenuate, guard, rectify, should_verify, verify
from .session import Session
from .trace import RunTrace, TraceEvent, read_trace

__all__ = [
    "Category",
    "ConflictKind",
    "ConflictReport",
    "ConflictScope",
    "Dimension",
    "DimensionWeightState",
    "EvalScores",
    "FunctionRationale",
    "GeneratedFunction",
    "GeneratorError",
    "HTTPProvider",
    "IntegrationResult",
    "Manifest",
    "MockProvider",
    "ModuleNode",
    "ModuleRationale",
    "ProjectTree",
    "ProviderProfile",
    "RunConfig",
    "RunTrace",
    "Session",
    "TaskPrompt",
    "TraceEvent",
    "VerificationResult",
    "aggregate_lengths",
    "attenuate",
    "code_length",
    "decompose_strategic",
    "decompose_tactical",
    "detect_conflicts_llm",
    "detect_conflicts_static",
    "generate_function",
    "guard",
    "integrate",
    "judge",
    "load_dataset",
    "load_mock_script",
    "merge_module",
    "read_trace",
    "rectify",
    "resolve",
    "run_pipeline",
    "should_verify",
    "validate_task_prompt",
    "verify",
    "weighted_sum",
    "write_project",
    "__version__",
]
