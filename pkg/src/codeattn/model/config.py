from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path


@dataclass(frozen=True)
class ModelConfig:
    """Shape constants of a RoBERTa-style encoder.

    ``position_offset`` is the first position id used for real tokens. RoBERTa
    checkpoints reserve ids ``0..padding_idx`` so the offset is ``padding_idx + 1``.
    """

    num_layers: int = 12
    num_heads: int = 12
    head_dim: int = 64
    vocab_size: int = 50265
    max_positions: int = 514
    intermediate_dim: int = 3072
    type_vocab_size: int = 1
    layernorm_epsilon: float = 1e-5
    position_offset: int = 2

    def __post_init__(self) -> None:
        for name in (
            "num_layers",
            "num_heads",
            "head_dim",
            "vocab_size",
            "max_positions",
            "intermediate_dim",
            "type_vocab_size",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if self.position_offset < 0 or self.position_offset >= self.max_positions:
            raise ValueError(f"position_offset {self.position_offset} outside [0, {self.max_positions})")
        if self.layernorm_epsilon <= 0:
            raise ValueError("layernorm_epsilon must be positive")

    @property
    def hidden_dim(self) -> int:
        return self.num_heads * self.head_dim

    @property
    def max_sequence_length(self) -> int:
        return self.max_positions - self.position_offset

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        return cls(**d)

    @classmethod
    def from_hf_config(cls, path: str | Path) -> "ModelConfig":
        """Read a Hugging Face style ``config.json``."""
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        hidden = raw["hidden_size"]
        heads = raw["num_attention_heads"]
        if hidden % heads:
            raise ValueError(f"hidden_size {hidden} not divisible by {heads} heads")
        return cls(
            num_layers=raw["num_hidden_layers"],
            num_heads=heads,
            head_dim=hidden // heads,
            vocab_size=raw["vocab_size"],
            max_positions=raw["max_position_embeddings"],
            intermediate_dim=raw["intermediate_size"],
            type_vocab_size=raw.get("type_vocab_size", 1),
            layernorm_epsilon=raw.get("layer_norm_eps", 1e-5),
            position_offset=raw.get("pad_token_id", 1) + 1,
        )


def codebert_base() -> ModelConfig:
    """Configuration of the published ``microsoft/codebert-base`` checkpoint."""
    return ModelConfig()
