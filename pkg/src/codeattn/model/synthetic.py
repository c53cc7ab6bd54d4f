"""Seeded random checkpoints in the published naming schema.

Used by the test-suite and for dry runs of the CLI when the real checkpoint
is not at hand.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from safetensors.numpy import save_file

from .config import ModelConfig
from .weights import expected_shapes


def synthetic_tensors(config: ModelConfig, seed: int = 0, scale: float = 0.02) -> dict[str, np.ndarray]:
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in expected_shapes(config).items():
        if name.endswith("LayerNorm.weight"):
            t = 1.0 + 0.1 * rng.standard_normal(shape, dtype=np.float32)
        elif name.endswith("LayerNorm.bias") or name.endswith(".bias"):
            t = 0.02 * rng.standard_normal(shape, dtype=np.float32)
        elif "self.query" in name or "self.key" in name:
            # sharper logits than a plain init so attention is not near-uniform
            t = 3 * scale * rng.standard_normal(shape, dtype=np.float32)
        else:
            t = scale * rng.standard_normal(shape, dtype=np.float32)
        tensors[name] = np.ascontiguousarray(t, dtype=np.float32)
    return tensors


def write_synthetic_archive(path: str | Path, config: ModelConfig, seed: int = 0, scale: float = 0.02) -> Path:
    path = Path(path)
    save_file(synthetic_tensors(config, seed, scale), str(path), metadata={"format": "pt"})
    return path


def write_synthetic_checkpoint(directory: str | Path, config: ModelConfig, seed: int = 0, scale: float = 0.02) -> Path:
    """Write ``model.safetensors`` plus a Hugging Face style ``config.json`` into ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_synthetic_archive(directory / "model.safetensors", config, seed, scale)
    hf = {
        "model_type": "roberta",
        "num_hidden_layers": config.num_layers,
        "num_attention_heads": config.num_heads,
        "hidden_size": config.hidden_dim,
        "intermediate_size": config.intermediate_dim,
        "vocab_size": config.vocab_size,
        "max_position_embeddings": config.max_positions,
        "type_vocab_size": config.type_vocab_size,
        "layer_norm_eps": config.layernorm_epsilon,
        "pad_token_id": config.position_offset - 1,
        "hidden_act": "gelu",
    }
    (directory / "config.json").write_text(json.dumps(hf, indent=2) + "\n", encoding="utf-8")
    return directory
