"""Static C code generation for small sequential float32 networks.

The package turns a layer-chain description plus trained weights into
portable ANSI C with a fixed scratch arena, and ships the planning,
profiling, and validation tooling needed to trust the result: a float32
reference interpreter, a buffer-lifetime memory planner, a MACC-based
complexity profiler, and bit-level cross-validation of the compiled C
against the interpreter.
"""
from .errors import (
    BlobMismatch,
    CompileFailure,
    DegenerateFeatureWarning,
    EmptyScores,
    EmptyStream,
    IncompleteWeights,
    InvalidIdentifier,
    InvalidLayer,
    LengthMismatch,
    NegativeVariance,
    Nn2cError,
    NonFiniteActivation,
    NonFiniteWeight,
    NonPositiveRated,
    ParseError,
    ShapeMismatch,
    ShortCycle,
    UnknownMcu,
    UnsupportedLayer,
    UsageError,
    VectorFileError,
)
from .graph import (
    ACTIVATIONS,
    LSTM_GATE_ORDER,
    BatchNorm,
    Conv1D,
    Dense,
    Graph,
    Lstm,
    MaxPool1D,
    TensorShape,
    WeightStore,
    infer_shapes,
    layer_maccs,
    layer_param_counts,
    layer_stored_param_counts,
    macc_count,
    param_count,
    weight_layout,
)
from .fixtures import build_fixture, load_bundled
from .interpreter import forward, run_batch
from .memory_planner import FlashPlan, MemoryPlan, check_plan, plan_flash, plan_memory
from .model_format import dumps_model, load_model, loads_model, parse_manifest, save_model
from .profiler import MCUS, Mcu, estimate_time_ms, find_mcu, load_mcus, profile_graph
from .validator import (
    CrossAccuracyReport,
    cross_validate,
    generate_vectors,
    validate_generated,
)
from .vectorfile import read_vectors, write_vectors

__version__ = "0.1.0"

__all__ = [
    "ACTIVATIONS",
    "LSTM_GATE_ORDER",
    "MCUS",
    "BatchNorm",
    "BlobMismatch",
    "CompileFailure",
    "Conv1D",
    "CrossAccuracyReport",
    "DegenerateFeatureWarning",
    "Dense",
    "EmptyScores",
    "EmptyStream",
    "FlashPlan",
    "Graph",
    "IncompleteWeights",
    "InvalidIdentifier",
    "InvalidLayer",
    "LengthMismatch",
    "Lstm",
    "MaxPool1D",
    "Mcu",
    "MemoryPlan",
    "NegativeVariance",
    "Nn2cError",
    "NonFiniteActivation",
    "NonFiniteWeight",
    "NonPositiveRated",
    "ParseError",
    "ShapeMismatch",
    "ShortCycle",
    "TensorShape",
    "UnknownMcu",
    "UnsupportedLayer",
    "UsageError",
    "VectorFileError",
    "WeightStore",
    "build_fixture",
    "check_plan",
    "cross_validate",
    "dumps_model",
    "estimate_time_ms",
    "find_mcu",
    "forward",
    "generate_vectors",
    "infer_shapes",
    "layer_maccs",
    "layer_param_counts",
    "layer_stored_param_counts",
    "load_bundled",
    "load_mcus",
    "load_model",
    "loads_model",
    "macc_count",
    "param_count",
    "parse_manifest",
    "plan_flash",
    "plan_memory",
    "profile_graph",
    "read_vectors",
    "run_batch",
    "save_model",
    "validate_generated",
    "weight_layout",
    "write_vectors",
]
