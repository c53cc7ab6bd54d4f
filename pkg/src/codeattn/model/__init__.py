from .config import ModelConfig, codebert_base
from .forward import (
    DecompositionRecord,
    ForwardError,
    SequenceTooLong,
    UnknownTokenId,
    compute_attention,
    compute_value_transform,
    decompose_layer,
    encoder_forward,
    iter_decompositions,
    reformulated_mha_output,
)
from .weights import (
    LayerWeights,
    MissingTensor,
    NonFiniteWeight,
    ShapeMismatch,
    WeightError,
    WeightStore,
    load_weights,
    tensor_manifest,
)

__all__ = [
    "ModelConfig",
    "codebert_base",
    "DecompositionRecord",
    "ForwardError",
    "SequenceTooLong",
    "UnknownTokenId",
    "compute_attention",
    "compute_value_transform",
    "decompose_layer",
    "encoder_forward",
    "iter_decompositions",
    "reformulated_mha_output",
    "LayerWeights",
    "MissingTensor",
    "NonFiniteWeight",
    "ShapeMismatch",
    "WeightError",
    "WeightStore",
    "load_weights",
    "tensor_manifest",
]
