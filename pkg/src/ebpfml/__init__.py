"""ebpfml: train tiny detectors, quantize them to Q47.16 fixed point, and
compile them into verifier-shaped restricted C, with a replay harness that
checks the float, fixed-point, and generated-code inference paths agree."""

from ._kernels import BACKEND
from .fixedpoint import (
    FX_MAX,
    FX_MIN,
    FX_ONE,
    FX_SHIFT,
    FxDomainError,
    from_fixed,
    fx_add,
    fx_log2,
    fx_mul,
    fx_sub,
    to_fixed,
)
from .features import (
    FEATURE_NAMES,
    N_FEATURES,
    Event,
    EventKind,
    ProcessState,
    StateTable,
    chi_squared,
    shannon_entropy,
)
from .models import (
    FixedModel,
    MlpModel,
    ModelFormatError,
    TreeModel,
    load_model,
    save_model,
)
from .training import (
    Dataset,
    DatasetFormatError,
    TrainConfig,
    TrainingError,
    load_dataset,
    save_dataset,
    train_mlp,
    train_tree,
)
from .compiler import (
    EmitError,
    EmitMode,
    GeneratedSource,
    LintParseError,
    QuantizationError,
    emit,
    interpret_generated,
    lint_restricted,
    pack_blob,
    quantize,
    support_source,
)

__version__ = "0.1.0"


def backend():
    """Active kernel backend: "numba" or "pure"."""
    return BACKEND


__all__ = [
    "BACKEND",
    "Dataset",
    "DatasetFormatError",
    "EmitError",
    "EmitMode",
    "Event",
    "EventKind",
    "FEATURE_NAMES",
    "FX_MAX",
    "FX_MIN",
    "FX_ONE",
    "FX_SHIFT",
    "FixedModel",
    "FxDomainError",
    "GeneratedSource",
    "LintParseError",
    "MlpModel",
    "ModelFormatError",
    "N_FEATURES",
    "ProcessState",
    "QuantizationError",
    "StateTable",
    "TrainConfig",
    "TrainingError",
    "TreeModel",
    "backend",
    "chi_squared",
    "emit",
    "from_fixed",
    "fx_add",
    "fx_log2",
    "fx_mul",
    "fx_sub",
    "interpret_generated",
    "lint_restricted",
    "load_dataset",
    "load_model",
    "pack_blob",
    "quantize",
    "save_dataset",
    "save_model",
    "shannon_entropy",
    "to_fixed",
    "train_mlp",
    "train_tree",
]
