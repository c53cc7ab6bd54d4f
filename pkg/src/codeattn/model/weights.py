"""Checkpoint loading into an immutable, shape-checked weight store.

Archives use the safetensors layout. Tensor names follow the versioned
manifest in ``data/roberta_tensor_names.v1.txt``. Linear kernels are stored
``(out, in)`` in the archive and transposed on load so that every projection
in this package is written ``x @ W + b``.
"""
from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
from safetensors import safe_open

from .config import ModelConfig

MANIFEST_VERSION = 1
_PREFIXES = ("", "roberta.", "model.")


class WeightError(Exception):
    pass


class MissingTensor(WeightError):
    def __init__(self, name: str):
        super().__init__(f"tensor {name!r} not found in archive")
        self.name = name


class ShapeMismatch(WeightError):
    def __init__(self, name: str, expected: tuple, got: tuple):
        super().__init__(f"tensor {name!r}: expected shape {expected}, got {got}")
        self.name = name
        self.expected = expected
        self.got = got


class NonFiniteWeight(WeightError):
    def __init__(self, name: str):
        super().__init__(f"tensor {name!r} contains NaN or Inf")
        self.name = name


def tensor_manifest(num_layers: int) -> list[str]:
    """Expand the shipped name manifest for ``num_layers`` layers."""
    text = resources.files("codeattn.model").joinpath(
        f"data/roberta_tensor_names.v{MANIFEST_VERSION}.txt"
    ).read_text(encoding="utf-8")
    names: list[str] = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "{layer}" in line:
            names.extend(line.format(layer=i) for i in range(num_layers))
        else:
            names.append(line)
    return names


def expected_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Archive-side (untransposed) shape of every manifest tensor."""
    d, f = config.hidden_dim, config.intermediate_dim
    shapes = {
        "embeddings.word_embeddings.weight": (config.vocab_size, d),
        "embeddings.position_embeddings.weight": (config.max_positions, d),
        "embeddings.token_type_embeddings.weight": (config.type_vocab_size, d),
        "embeddings.LayerNorm.weight": (d,),
        "embeddings.LayerNorm.bias": (d,),
    }
    for i in range(config.num_layers):
        p = f"encoder.layer.{i}."
        for proj in ("query", "key", "value"):
            shapes[p + f"attention.self.{proj}.weight"] = (d, d)
            shapes[p + f"attention.self.{proj}.bias"] = (d,)
        shapes[p + "attention.output.dense.weight"] = (d, d)
        shapes[p + "attention.output.dense.bias"] = (d,)
        shapes[p + "attention.output.LayerNorm.weight"] = (d,)
        shapes[p + "attention.output.LayerNorm.bias"] = (d,)
        shapes[p + "intermediate.dense.weight"] = (f, d)
        shapes[p + "intermediate.dense.bias"] = (f,)
        shapes[p + "output.dense.weight"] = (d, f)
        shapes[p + "output.dense.bias"] = (d,)
        shapes[p + "output.LayerNorm.weight"] = (d,)
        shapes[p + "output.LayerNorm.bias"] = (d,)
    return shapes


@dataclass(frozen=True)
class LayerWeights:
    """One encoder layer. Kernels are ``(in, out)``."""

    w_q: np.ndarray
    b_q: np.ndarray
    w_k: np.ndarray
    b_k: np.ndarray
    w_v: np.ndarray
    b_v: np.ndarray
    w_o: np.ndarray
    b_o: np.ndarray
    attn_ln_scale: np.ndarray
    attn_ln_shift: np.ndarray
    w_ff1: np.ndarray
    b_ff1: np.ndarray
    w_ff2: np.ndarray
    b_ff2: np.ndarray
    ff_ln_scale: np.ndarray
    ff_ln_shift: np.ndarray

    def head_slice(self, head: int, head_dim: int) -> slice:
        return slice(head * head_dim, (head + 1) * head_dim)

    def value_head(self, head: int, head_dim: int) -> tuple[np.ndarray, np.ndarray]:
        """``W_V`` columns and ``b_V`` entries owned by ``head``."""
        s = self.head_slice(head, head_dim)
        return self.w_v[:, s], self.b_v[s]

    def output_head(self, head: int, head_dim: int) -> np.ndarray:
        """``W_O`` rows that multiply ``head``'s slice of the concatenated output."""
        return self.w_o[self.head_slice(head, head_dim), :]


@dataclass(frozen=True)
class WeightStore:
    config: ModelConfig
    word_embeddings: np.ndarray
    position_embeddings: np.ndarray
    token_type_embeddings: np.ndarray
    emb_ln_scale: np.ndarray
    emb_ln_shift: np.ndarray
    layers: tuple[LayerWeights, ...]


def _resolve_archive(path: Path) -> Path:
    if path.is_dir():
        candidate = path / "model.safetensors"
        if not candidate.exists():
            raise FileNotFoundError(f"no model.safetensors in {path}")
        return candidate
    if not path.exists():
        raise FileNotFoundError(path)
    return path


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float32)
    a.setflags(write=False)
    return a


def load_weights(archive_path: str | Path, config: ModelConfig) -> WeightStore:
    """Read and validate every manifest tensor; the result is read-only."""
    archive = _resolve_archive(Path(archive_path))
    shapes = expected_shapes(config)
    raw: dict[str, np.ndarray] = {}
    with safe_open(str(archive), framework="np") as f:
        keys = set(f.keys())
        for name in tensor_manifest(config.num_layers):
            key = next((p + name for p in _PREFIXES if p + name in keys), None)
            if key is None:
                raise MissingTensor(name)
            t = f.get_tensor(key)
            if tuple(t.shape) != shapes[name]:
                raise ShapeMismatch(name, shapes[name], tuple(t.shape))
            if not np.all(np.isfinite(t)):
                raise NonFiniteWeight(name)
            raw[name] = t
    return _assemble(raw, config)


def _assemble(raw: dict[str, np.ndarray], config: ModelConfig) -> WeightStore:
    layers = []
    for i in range(config.num_layers):
        p = f"encoder.layer.{i}."

        def kernel(n: str) -> np.ndarray:
            return _frozen(raw[p + n + ".weight"].T)

        def vec(n: str) -> np.ndarray:
            return _frozen(raw[p + n])

        layers.append(
            LayerWeights(
                w_q=kernel("attention.self.query"),
                b_q=vec("attention.self.query.bias"),
                w_k=kernel("attention.self.key"),
                b_k=vec("attention.self.key.bias"),
                w_v=kernel("attention.self.value"),
                b_v=vec("attention.self.value.bias"),
                w_o=kernel("attention.output.dense"),
                b_o=vec("attention.output.dense.bias"),
                attn_ln_scale=vec("attention.output.LayerNorm.weight"),
                attn_ln_shift=vec("attention.output.LayerNorm.bias"),
                w_ff1=kernel("intermediate.dense"),
                b_ff1=vec("intermediate.dense.bias"),
                w_ff2=kernel("output.dense"),
                b_ff2=vec("output.dense.bias"),
                ff_ln_scale=vec("output.LayerNorm.weight"),
                ff_ln_shift=vec("output.LayerNorm.bias"),
            )
        )
    return WeightStore(
        config=config,
        word_embeddings=_frozen(raw["embeddings.word_embeddings.weight"]),
        position_embeddings=_frozen(raw["embeddings.position_embeddings.weight"]),
        token_type_embeddings=_frozen(raw["embeddings.token_type_embeddings.weight"]),
        emb_ln_scale=_frozen(raw["embeddings.LayerNorm.weight"]),
        emb_ln_shift=_frozen(raw["embeddings.LayerNorm.bias"]),
        layers=tuple(layers),
    )
