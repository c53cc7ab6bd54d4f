"""Instrumented RoBERTa encoder forward pass.

Multi-head attention output is rewritten as a sum over heads of
``alpha_h @ f_h(X)`` with ``f_h(x) = (x @ W_V[:, h] + b_V[h]) @ W_O[h, :]``.
Each layer yields the attention weights, the per-token norms of ``f_h`` and
their product, next to the layer's conventional MHA output.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np
from scipy.special import erf

from .config import ModelConfig
from .weights import LayerWeights, WeightStore

_F32 = np.float32


class ForwardError(Exception):
    pass


class SequenceTooLong(ForwardError):
    pass


class UnknownTokenId(ForwardError):
    pass


@dataclass
class DecompositionRecord:
    """Per-layer decomposition. Head-indexed arrays have the head on axis 0."""

    layer_index: int
    alpha: np.ndarray  # (h, n, n)
    transform_norms: np.ndarray  # (h, n)
    scaled_map: np.ndarray  # (h, n, n)
    mha_output: np.ndarray  # (n, hidden), includes b_O
    layer_input: np.ndarray  # (n, hidden)
    layer_output: np.ndarray  # (n, hidden)

    @property
    def sequence_length(self) -> int:
        return self.alpha.shape[-1]

    @property
    def num_heads(self) -> int:
        return self.alpha.shape[0]


def softmax(logits: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = logits - logits.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def layer_norm(x: np.ndarray, scale: np.ndarray, shift: np.ndarray, eps: float) -> np.ndarray:
    mean = x.mean(axis=-1, keepdims=True)
    centered = x - mean
    var = (centered * centered).mean(axis=-1, keepdims=True)
    return centered / np.sqrt(var + _F32(eps)) * scale + shift


def gelu(x: np.ndarray) -> np.ndarray:
    # exact (erf) form, as used by BERT/RoBERTa
    return (_F32(0.5) * x * (_F32(1.0) + erf(x / _F32(np.sqrt(2.0))))).astype(_F32, copy=False)


def compute_attention(q: np.ndarray, k: np.ndarray, head_dim: int | None = None) -> np.ndarray:
    """Row-stochastic ``softmax(q k^T / sqrt(d))`` for one head (or a stack of heads)."""
    q = np.asarray(q, dtype=_F32)
    k = np.asarray(k, dtype=_F32)
    if q.shape != k.shape:
        raise ValueError(f"Q and K shapes differ: {q.shape} vs {k.shape}")
    d = q.shape[-1] if head_dim is None else head_dim
    logits = (q @ np.swapaxes(k, -1, -2)) / _F32(np.sqrt(d))
    return softmax(logits, axis=-1)


def compute_value_transform(x: np.ndarray, head: int, layer: LayerWeights, config: ModelConfig) -> np.ndarray:
    """Image of every row of ``x`` under head ``head``'s value-output map, shape (n, hidden).

    The output bias ``b_O`` is not part of any head's transform.
    """
    if not 0 <= head < config.num_heads:
        raise IndexError(f"head {head} outside [0, {config.num_heads})")
    w_v, b_v = layer.value_head(head, config.head_dim)
    return (np.asarray(x, dtype=_F32) @ w_v + b_v) @ layer.output_head(head, config.head_dim)


def _split_heads(t: np.ndarray, config: ModelConfig) -> np.ndarray:
    n = t.shape[0]
    return t.reshape(n, config.num_heads, config.head_dim).transpose(1, 0, 2)


def decompose_layer(
    x: np.ndarray, layer: LayerWeights, config: ModelConfig, layer_index: int = 0
) -> DecompositionRecord:
    """Run one encoder layer on ``x`` and record its attention decomposition."""
    x = np.asarray(x, dtype=_F32)
    if not np.all(np.isfinite(x)):
        raise ValueError("layer input contains NaN or Inf")
    n = x.shape[0]
    h, d, hidden = config.num_heads, config.head_dim, config.hidden_dim

    q = _split_heads(x @ layer.w_q + layer.b_q, config)
    k = _split_heads(x @ layer.w_k + layer.b_k, config)
    v = _split_heads(x @ layer.w_v + layer.b_v, config)  # (h, n, d)
    alpha = compute_attention(q, k, d)  # (h, n, n)

    # conventional path: concatenate head outputs, then project
    z = (alpha @ v).transpose(1, 0, 2).reshape(n, hidden)
    mha_output = z @ layer.w_o + layer.b_o

    f = np.einsum("hnd,hdk->hnk", v, layer.w_o.reshape(h, d, hidden))
    norms = np.linalg.norm(f, axis=-1)  # (h, n)
    scaled = alpha * norms[:, None, :]

    attn_out = layer_norm(mha_output + x, layer.attn_ln_scale, layer.attn_ln_shift, config.layernorm_epsilon)
    ff = gelu(attn_out @ layer.w_ff1 + layer.b_ff1) @ layer.w_ff2 + layer.b_ff2
    out = layer_norm(ff + attn_out, layer.ff_ln_scale, layer.ff_ln_shift, config.layernorm_epsilon)

    return DecompositionRecord(
        layer_index=layer_index,
        alpha=alpha,
        transform_norms=norms.astype(_F32, copy=False),
        scaled_map=scaled.astype(_F32, copy=False),
        mha_output=mha_output,
        layer_input=x,
        layer_output=out.astype(_F32, copy=False),
    )


def reformulated_mha_output(record: DecompositionRecord, layer: LayerWeights, config: ModelConfig) -> np.ndarray:
    """``sum_h alpha_h @ f_h(X) + b_O`` rebuilt from the record's attention and per-head transforms."""
    y = np.zeros((record.sequence_length, config.hidden_dim), dtype=np.float64)
    for head in range(config.num_heads):
        f = compute_value_transform(record.layer_input, head, layer, config)
        y += record.alpha[head].astype(np.float64) @ f.astype(np.float64)
    return (y + layer.b_o).astype(_F32)


def embed(token_ids: Sequence[int], weights: WeightStore) -> np.ndarray:
    config = weights.config
    ids = np.asarray(token_ids, dtype=np.int64)
    if ids.ndim != 1:
        raise ValueError("token_ids must be a flat sequence")
    if len(ids) > config.max_sequence_length:
        raise SequenceTooLong(
            f"{len(ids)} tokens exceed the {config.max_sequence_length} usable positions"
        )
    if len(ids) and (ids.min() < 0 or ids.max() >= config.vocab_size):
        bad = int(ids[(ids < 0) | (ids >= config.vocab_size)][0])
        raise UnknownTokenId(f"token id {bad} outside vocabulary of size {config.vocab_size}")
    positions = np.arange(len(ids)) + config.position_offset
    e = weights.word_embeddings[ids] + weights.position_embeddings[positions] + weights.token_type_embeddings[0]
    return layer_norm(e, weights.emb_ln_scale, weights.emb_ln_shift, config.layernorm_epsilon)


def iter_decompositions(token_ids: Sequence[int], weights: WeightStore) -> Iterator[DecompositionRecord]:
    """Lazily yield one record per layer, so callers can drop finished layers."""
    x = embed(token_ids, weights)
    for i, layer in enumerate(weights.layers):
        rec = decompose_layer(x, layer, weights.config, layer_index=i)
        x = rec.layer_output
        yield rec


def encoder_forward(
    token_ids: Sequence[int], weights: WeightStore, config: ModelConfig | None = None
) -> list[DecompositionRecord]:
    if config is not None and config != weights.config:
        raise ValueError("config does not match the weight store's config")
    return list(iter_decompositions(token_ids, weights))
