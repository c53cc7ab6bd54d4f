#!/usr/bin/env python3
"""Regenerate the committed test fixtures under tests/fixtures/.

Needs the optional ``fixtures`` extras (torch, transformers, tokenizers).
Reference outputs come from the Hugging Face implementations, never from
codeattn itself, so the tests compare two independent code paths.

    python scripts/make_fixtures.py
"""
from __future__ import annotations

import argparse
import ast
import json
import sys
import tempfile
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parent.parent
FIX = ROOT / "tests" / "fixtures"

PY_MODULES = ["textwrap", "shlex", "fnmatch", "glob", "colorsys", "bisect", "heapq", "base64", "calendar", "string"]
VOCAB_SIZE = 4000
PARITY_SEED = 1234

TOKENIZER_PROBES = [
    "",
    "return",
    "getUserNameFromDatabase",
    "snake_case_identifier_v2",
    "def f(x):\n    return x + 1\n",
    'String s = "hello world";',
    "  \t\n\n    indented",
    "naïve = 'café' + \"日本語\"",
    "a<<=b>>>c!=d",
]


def python_functions(limit: int = 40) -> list[dict]:
    out = []
    for name in PY_MODULES:
        mod = __import__(name)
        src = Path(mod.__file__).read_text(encoding="utf-8")
        tree = ast.parse(src)
        for node in tree.body:
            if isinstance(node, ast.FunctionDef):
                code = ast.get_source_segment(src, node)
                if code and 80 < len(code) < 1200:
                    out.append(
                        {"repo": "cpython", "path": f"Lib/{name}.py", "func_name": node.name,
                         "language": "python", "code": code}
                    )
    return out[:limit]


def java_methods() -> list[dict]:
    text = (ROOT / "scripts" / "java_methods.txt").read_text(encoding="utf-8")
    out = []
    for k, chunk in enumerate(text.split("//----\n")):
        code = chunk.strip("\n")
        out.append({"repo": "fixtures", "path": f"Methods{k}.java", "func_name": f"m{k}",
                    "language": "java", "code": code})
    return out


def write_jsonl(path: Path, rows: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in rows:
            fh.write(json.dumps(r, ensure_ascii=False) + "\n")


def train_tokenizer(texts: list[str], out_dir: Path) -> None:
    from tokenizers import ByteLevelBPETokenizer

    tok = ByteLevelBPETokenizer()
    tok.train_from_iterator(
        texts, vocab_size=VOCAB_SIZE, min_frequency=2,
        special_tokens=["<s>", "<pad>", "</s>", "<unk>", "<mask>"],
    )
    out_dir.mkdir(parents=True, exist_ok=True)
    tok.save_model(str(out_dir))


def tokenizer_oracle(tok_dir: Path) -> list[dict]:
    from transformers import RobertaTokenizer

    ref = RobertaTokenizer(str(tok_dir / "vocab.json"), str(tok_dir / "merges.txt"))
    return [{"text": t, "ids": ref(t)["input_ids"]} for t in TOKENIZER_PROBES]


def parity_fixture(tok_dir: Path, snippet: str) -> None:
    import torch
    from safetensors.torch import load_file
    from transformers import RobertaConfig, RobertaModel, RobertaTokenizer

    sys.path.insert(0, str(ROOT / "src"))
    from codeattn.model.config import ModelConfig
    from codeattn.model.synthetic import write_synthetic_archive

    vocab = json.loads((tok_dir / "vocab.json").read_text(encoding="utf-8"))
    cfg = ModelConfig(vocab_size=len(vocab))
    with tempfile.TemporaryDirectory() as tmp:
        archive = write_synthetic_archive(Path(tmp) / "model.safetensors", cfg, seed=PARITY_SEED)
        hf_cfg = RobertaConfig(
            vocab_size=cfg.vocab_size, hidden_size=cfg.hidden_dim, num_hidden_layers=cfg.num_layers,
            num_attention_heads=cfg.num_heads, intermediate_size=cfg.intermediate_dim,
            max_position_embeddings=cfg.max_positions, type_vocab_size=cfg.type_vocab_size,
            layer_norm_eps=cfg.layernorm_epsilon, pad_token_id=1, hidden_act="gelu",
            hidden_dropout_prob=0.0, attention_probs_dropout_prob=0.0,
        )
        model = RobertaModel(hf_cfg, add_pooling_layer=False)
        missing, unexpected = model.load_state_dict(load_file(str(archive)), strict=False)
        assert not unexpected and all("pooler" in m for m in missing), (missing, unexpected)
        model.eval()
        model.set_attn_implementation("eager")
        ids = RobertaTokenizer(str(tok_dir / "vocab.json"), str(tok_dir / "merges.txt"))(snippet)["input_ids"]
        with torch.no_grad():
            out = model(torch.tensor([ids]), output_attentions=True, output_hidden_states=True)
    np.savez_compressed(
        FIX / "forward_parity.npz",
        token_ids=np.array(ids, dtype=np.int64),
        last_hidden=out.last_hidden_state[0].numpy().astype(np.float32),
        first_layer_output=out.hidden_states[1][0].numpy().astype(np.float32),
        attention_first=out.attentions[0][0].numpy().astype(np.float32),
        attention_last=out.attentions[-1][0].numpy().astype(np.float32),
        seed=np.array(PARITY_SEED),
        vocab_size=np.array(cfg.vocab_size),
    )


def ast_fixture() -> None:
    from tree_sitter import Language, Parser
    import tree_sitter_python

    src = b"x = 1"
    root = Parser(Language(tree_sitter_python.language())).parse(src).root_node
    nodes = []

    def walk(n, parent):
        nid = len(nodes)
        nodes.append({"id": nid, "parent": parent, "kind": n.type, "start": n.start_byte, "end": n.end_byte})
        for c in n.children:
            walk(c, nid)

    walk(root, None)
    (FIX / "ast").mkdir(parents=True, exist_ok=True)
    (FIX / "ast" / "x_eq_1.json").write_text(json.dumps({"source": src.decode(), "nodes": nodes}, indent=1) + "\n")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--skip-parity", action="store_true", help="skip the (slow) forward-parity fixture")
    args = ap.parse_args()

    (FIX / "corpus").mkdir(parents=True, exist_ok=True)
    py = python_functions()
    java = java_methods()
    write_jsonl(FIX / "corpus" / "python.jsonl", py)
    write_jsonl(FIX / "corpus" / "java.jsonl", java)

    stdlib = Path(ast.__file__).parent
    texts = [p.read_text(encoding="utf-8", errors="replace") for p in sorted(stdlib.glob("*.py"))]
    texts += [r["code"] for r in java] * 20
    tok_dir = FIX / "tokenizer"
    train_tokenizer(texts, tok_dir)
    (FIX / "tokenizer_oracle.json").write_text(
        json.dumps(tokenizer_oracle(tok_dir), ensure_ascii=False, indent=1) + "\n", encoding="utf-8"
    )
    ast_fixture()
    if not args.skip_parity:
        parity_fixture(tok_dir, py[0]["code"])
    print(f"fixtures written to {FIX}: {len(py)} python, {len(java)} java snippets")


if __name__ == "__main__":
    main()
