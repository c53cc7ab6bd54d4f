from __future__ import annotations

import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from safetensors.numpy import save_file

import oracles
from codeattn.model import (
    MissingTensor,
    ModelConfig,
    NonFiniteWeight,
    SequenceTooLong,
    ShapeMismatch,
    UnknownTokenId,
    codebert_base,
    compute_attention,
    compute_value_transform,
    decompose_layer,
    encoder_forward,
    load_weights,
    reformulated_mha_output,
    tensor_manifest,
)
from codeattn.model.synthetic import synthetic_tensors, write_synthetic_checkpoint
from codeattn.model.weights import expected_shapes

TINY = ModelConfig(num_layers=2, num_heads=2, head_dim=4, intermediate_dim=16, vocab_size=20, max_positions=12)


# --- config ----------------------------------------------------------------


def test_codebert_constants():
    cfg = codebert_base()
    assert (cfg.num_layers, cfg.num_heads, cfg.head_dim, cfg.hidden_dim) == (12, 12, 64, 768)
    assert cfg.max_sequence_length == 512


@pytest.mark.parametrize("field", ["num_layers", "num_heads", "head_dim", "vocab_size", "max_positions"])
def test_config_rejects_non_positive_counts(field):
    with pytest.raises(ValueError):
        ModelConfig(**{field: 0})


def test_config_from_hf_json(tmp_path):
    write_synthetic_checkpoint(tmp_path, TINY, seed=0)
    assert ModelConfig.from_hf_config(tmp_path / "config.json") == TINY
    assert ModelConfig.from_dict(TINY.to_dict()) == TINY


# --- weights ---------------------------------------------------------------


def test_manifest_covers_every_layer():
    names = tensor_manifest(12)
    assert len(names) == 5 + 12 * 16
    assert "encoder.layer.11.attention.self.query.weight" in names
    assert set(names) == set(expected_shapes(codebert_base()))


def test_round_trip_synthetic_archive(tmp_path):
    tensors = synthetic_tensors(TINY, seed=3)
    save_file(tensors, str(tmp_path / "m.safetensors"))
    store = load_weights(tmp_path / "m.safetensors", TINY)
    assert len(store.layers) == 2
    lw = store.layers[1]
    np.testing.assert_array_equal(lw.w_q, tensors["encoder.layer.1.attention.self.query.weight"].T)
    np.testing.assert_array_equal(lw.b_o, tensors["encoder.layer.1.attention.output.dense.bias"])
    np.testing.assert_array_equal(store.word_embeddings, tensors["embeddings.word_embeddings.weight"])
    with pytest.raises(ValueError):
        lw.w_v[0, 0] = 1.0
    with pytest.raises(dataclasses.FrozenInstanceError):
        store.layers = ()


def test_prefixed_names_accepted(tmp_path):
    tensors = {"roberta." + k: v for k, v in synthetic_tensors(TINY, seed=3).items()}
    save_file(tensors, str(tmp_path / "m.safetensors"))
    assert load_weights(tmp_path / "m.safetensors", TINY).config == TINY


def test_directory_with_model_file(tmp_path):
    write_synthetic_checkpoint(tmp_path, TINY, seed=1)
    assert len(load_weights(tmp_path, TINY).layers) == 2


def test_missing_query_weight(tmp_path):
    tensors = synthetic_tensors(TINY, seed=3)
    del tensors["encoder.layer.0.attention.self.query.weight"]
    save_file(tensors, str(tmp_path / "m.safetensors"))
    with pytest.raises(MissingTensor) as e:
        load_weights(tmp_path / "m.safetensors", TINY)
    assert e.value.name == "encoder.layer.0.attention.self.query.weight"


def test_shape_mismatch(tmp_path):
    tensors = synthetic_tensors(TINY, seed=3)
    tensors["encoder.layer.1.attention.self.value.bias"] = np.zeros(5, np.float32)
    save_file(tensors, str(tmp_path / "m.safetensors"))
    with pytest.raises(ShapeMismatch) as e:
        load_weights(tmp_path / "m.safetensors", TINY)
    assert (e.value.expected, e.value.got) == ((8,), (5,))


def test_non_finite_weight(tmp_path):
    tensors = synthetic_tensors(TINY, seed=3)
    tensors["encoder.layer.0.output.dense.weight"][2, 3] = np.nan
    save_file(tensors, str(tmp_path / "m.safetensors"))
    with pytest.raises(NonFiniteWeight):
        load_weights(tmp_path / "m.safetensors", TINY)


def test_head_slices_partition_value_and_output(small_weights):
    cfg = small_weights.config
    lw = small_weights.layers[0]
    np.testing.assert_array_equal(
        np.concatenate([lw.value_head(h, cfg.head_dim)[0] for h in range(cfg.num_heads)], axis=1), lw.w_v
    )
    np.testing.assert_array_equal(
        np.concatenate([lw.output_head(h, cfg.head_dim) for h in range(cfg.num_heads)], axis=0), lw.w_o
    )


# --- attention -------------------------------------------------------------


def test_zero_query_gives_uniform_rows():
    k = np.random.default_rng(0).standard_normal((4, 3))
    np.testing.assert_allclose(compute_attention(np.zeros((4, 3)), k), np.full((4, 4), 0.25), atol=1e-7)


def test_single_token_attention():
    assert compute_attention(np.ones((1, 5)), np.ones((1, 5))).tolist() == [[1.0]]


def test_attention_matches_direct_softmax():
    rng = np.random.default_rng(11)
    q, k = rng.standard_normal((3, 2)), rng.standard_normal((3, 2))
    np.testing.assert_allclose(compute_attention(q, k), oracles.attention(q, k), atol=1e-6)


def test_attention_shape_mismatch():
    with pytest.raises(ValueError):
        compute_attention(np.zeros((3, 2)), np.zeros((3, 4)))


@settings(max_examples=60, deadline=None)
@given(n=st.integers(1, 6), d=st.integers(1, 5), seed=st.integers(0, 2**31), shift=st.floats(-20, 20))
def test_attention_row_stochastic_and_shift_invariant(n, d, seed, shift):
    rng = np.random.default_rng(seed)
    q, k = rng.standard_normal((n, d)), rng.standard_normal((n, d))
    a = compute_attention(q, k)
    assert np.all(a >= 0) and np.all(a <= 1)
    np.testing.assert_allclose(a.sum(axis=1), 1.0, atol=1e-6)
    # adding u to every key row shifts row i's logits by the constant q_i . u
    u = shift * rng.standard_normal(d) / np.sqrt(d)
    np.testing.assert_allclose(compute_attention(q, k + u), a, atol=2e-5)


# --- value transform -------------------------------------------------------


def _identity_layer(num_heads, head_dim):
    layer, cfg = oracles.random_layer(np.random.default_rng(0), num_heads, head_dim)
    eye = np.eye(cfg.hidden_dim, dtype=np.float32)
    zero = np.zeros(cfg.hidden_dim, np.float32)
    return dataclasses.replace(layer, w_v=eye, w_o=eye, b_v=zero, b_o=zero), cfg


def test_identity_value_transform_restricts_to_head_subspace():
    layer, cfg = _identity_layer(3, 2)
    x = np.random.default_rng(1).standard_normal((4, 6)).astype(np.float32)
    for h in range(3):
        expected = np.zeros_like(x)
        expected[:, 2 * h : 2 * h + 2] = x[:, 2 * h : 2 * h + 2]
        np.testing.assert_array_equal(compute_value_transform(x, h, layer, cfg), expected)


def test_zero_row_has_zero_image():
    layer, cfg = oracles.random_layer(np.random.default_rng(2), 2, 3)
    layer = dataclasses.replace(layer, b_v=np.zeros(6, np.float32))
    x = np.random.default_rng(3).standard_normal((3, 6)).astype(np.float32)
    x[1] = 0
    f = compute_value_transform(x, 1, layer, cfg)
    assert np.linalg.norm(f[1]) == 0.0


def test_value_transform_matches_two_step_product():
    rng = np.random.default_rng(4)
    layer, cfg = oracles.random_layer(rng, 2, 3)
    x = rng.standard_normal((5, 6)).astype(np.float32)
    for h in range(2):
        s = slice(3 * h, 3 * h + 3)
        expected = (x.astype(np.float64) @ layer.w_v[:, s] + layer.b_v[s]) @ layer.w_o[s, :]
        np.testing.assert_allclose(compute_value_transform(x, h, layer, cfg), expected, atol=1e-5)


def test_value_transform_bad_head():
    layer, cfg = oracles.random_layer(np.random.default_rng(0), 2, 3)
    with pytest.raises(IndexError):
        compute_value_transform(np.zeros((2, 6)), 2, layer, cfg)


# --- layer decomposition ---------------------------------------------------


def test_single_identity_head_gives_alpha_times_x():
    layer, cfg = _identity_layer(1, 4)
    x = np.random.default_rng(5).standard_normal((3, 4)).astype(np.float32)
    rec = decompose_layer(x, layer, cfg)
    np.testing.assert_allclose(rec.mha_output, rec.alpha[0] @ x, atol=1e-6)


def test_decomposition_matches_concat_then_project():
    rng = np.random.default_rng(6)
    layer, cfg = oracles.random_layer(rng, 2, 4, scale=0.3)
    x = rng.standard_normal((5, 8)).astype(np.float32)
    rec = decompose_layer(x, layer, cfg)
    expected = oracles.standard_mha(x, layer, 2, 4)
    np.testing.assert_allclose(reformulated_mha_output(rec, layer, cfg), expected, atol=1e-6)
    np.testing.assert_allclose(rec.mha_output, expected, atol=1e-6)


def _permute_heads(layer, perm, d):
    idx = np.concatenate([np.arange(p * d, (p + 1) * d) for p in perm])
    cols = {n: getattr(layer, n)[:, idx] for n in ("w_q", "w_k", "w_v")}
    vecs = {n: getattr(layer, n)[idx] for n in ("b_q", "b_k", "b_v")}
    return dataclasses.replace(layer, w_o=layer.w_o[idx, :], **cols, **vecs)


def test_head_order_does_not_change_output():
    rng = np.random.default_rng(8)
    layer, cfg = oracles.random_layer(rng, 4, 2, scale=0.3)
    x = rng.standard_normal((6, 8)).astype(np.float32)
    base = decompose_layer(x, layer, cfg)
    perm = [2, 0, 3, 1]
    other = decompose_layer(x, _permute_heads(layer, perm, 2), cfg)
    np.testing.assert_allclose(other.mha_output, base.mha_output, atol=1e-6)
    np.testing.assert_allclose(other.alpha, base.alpha[perm], atol=1e-7)


@settings(max_examples=40, deadline=None)
@given(h=st.sampled_from([1, 2, 3]), d=st.sampled_from([1, 2, 4]), n=st.integers(1, 7), seed=st.integers(0, 2**31))
def test_record_invariants(h, d, n, seed):
    rng = np.random.default_rng(seed)
    layer, cfg = oracles.random_layer(rng, h, d)
    x = rng.standard_normal((n, h * d)).astype(np.float32)
    rec = decompose_layer(x, layer, cfg)
    assert rec.alpha.shape == (h, n, n) and rec.transform_norms.shape == (h, n)
    np.testing.assert_allclose(rec.alpha.sum(axis=-1), 1.0, atol=1e-6)
    assert np.all((rec.alpha >= 0) & (rec.alpha <= 1))
    assert np.all(rec.transform_norms >= 0)
    np.testing.assert_allclose(rec.scaled_map, rec.alpha * rec.transform_norms[:, None, :], rtol=1e-6, atol=0)
    for head in range(h):
        f = compute_value_transform(x, head, layer, cfg)
        np.testing.assert_allclose(rec.transform_norms[head], np.linalg.norm(f.astype(np.float64), axis=1), rtol=1e-5, atol=1e-6)


def test_zero_norm_token_has_zero_scaled_column():
    rng = np.random.default_rng(9)
    layer, cfg = oracles.random_layer(rng, 2, 3)
    layer = dataclasses.replace(layer, b_v=np.zeros(6, np.float32))
    x = rng.standard_normal((4, 6)).astype(np.float32)
    x[2] = 0
    rec = decompose_layer(x, layer, cfg)
    assert np.all(rec.transform_norms[:, 2] == 0)
    assert np.all(rec.scaled_map[:, :, 2] == 0)
    assert np.all(rec.alpha[:, :, 2] > 0)


# --- full forward ----------------------------------------------------------


def test_forward_shapes_and_single_token(small_weights):
    cfg = small_weights.config
    recs = encoder_forward([0, 5, 9, 2], small_weights, cfg)
    assert [r.layer_index for r in recs] == [0, 1]
    assert all(r.mha_output.shape == (4, cfg.hidden_dim) for r in recs)
    one = encoder_forward([0], small_weights)
    assert all(np.array_equal(r.alpha, np.ones((cfg.num_heads, 1, 1), np.float32)) for r in one)


def test_forward_is_bit_deterministic(small_weights, tokenizer):
    ids = tokenizer.encode("def f(a, b):\n    return a * b\n").ids
    a = encoder_forward(ids, small_weights)
    b = encoder_forward(ids, small_weights)
    for ra, rb in zip(a, b):
        for name in ("alpha", "transform_norms", "scaled_map", "mha_output", "layer_output"):
            assert getattr(ra, name).tobytes() == getattr(rb, name).tobytes()


def test_forward_rejects_long_and_unknown(small_weights):
    cfg = small_weights.config
    with pytest.raises(SequenceTooLong):
        encoder_forward([0] * (cfg.max_sequence_length + 1), small_weights)
    with pytest.raises(UnknownTokenId):
        encoder_forward([0, cfg.vocab_size], small_weights)
    with pytest.raises(ValueError):
        encoder_forward([0], small_weights, TINY)


def test_full_size_forward_shapes(parity_weights, parity_data):
    recs = encoder_forward(parity_data["token_ids"], parity_weights)
    n = len(parity_data["token_ids"])
    assert len(recs) == 12
    assert all(r.mha_output.shape == (n, 768) and r.alpha.shape == (12, n, n) for r in recs)


def test_first_layer_matches_reference(parity_weights, parity_data):
    recs = encoder_forward(parity_data["token_ids"], parity_weights)
    np.testing.assert_allclose(recs[0].alpha, parity_data["attention_first"], atol=1e-5)
    np.testing.assert_allclose(recs[-1].alpha, parity_data["attention_last"], atol=1e-5)
    np.testing.assert_allclose(recs[0].layer_output, parity_data["first_layer_output"], atol=1e-4)
