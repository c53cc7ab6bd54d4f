from __future__ import annotations

import datetime as _dt
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import __version__
from ..corpus import CorpusSample, Snippet
from ..metrics import AgreementResult, TrendTable
from ..model.config import ModelConfig, codebert_base
from ..model.forward import iter_decompositions
from ..model.weights import WeightStore, load_weights
from ..syntax.categories import Category
from ..tokenization.bpe import BPETokenizer
from . import plots, tables
from .pipeline import RunConfig, analyse_corpus, prepare_snippet, word_layer_maps

log = logging.getLogger(__name__)


class IndexOutOfRange(Exception):
    pass


def file_sha256(path: str | Path, chunk: int = 1 << 20) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        while block := fh.read(chunk):
            h.update(block)
    return h.hexdigest()


@dataclass
class Resources:
    weights: WeightStore
    tokenizer: BPETokenizer
    checkpoint: Path
    vocab: Path
    merges: Path

    def describe(self) -> dict:
        return {
            "checkpoint": str(self.checkpoint),
            "checkpoint_sha256": file_sha256(self.checkpoint),
            "vocab": str(self.vocab),
            "vocab_sha256": file_sha256(self.vocab),
            "merges": str(self.merges),
            "merges_sha256": file_sha256(self.merges),
            "model_config": self.weights.config.to_dict(),
        }


def load_resources(
    checkpoint: str | Path,
    vocab: str | Path | None = None,
    merges: str | Path | None = None,
    model_config: ModelConfig | str | Path | None = None,
) -> Resources:
    """Resolve checkpoint, vocabulary and merges; sibling files of a checkpoint directory are defaults."""
    ckpt = Path(checkpoint)
    base = ckpt if ckpt.is_dir() else ckpt.parent
    archive = ckpt / "model.safetensors" if ckpt.is_dir() else ckpt
    vocab = Path(vocab) if vocab else base / "vocab.json"
    merges = Path(merges) if merges else base / "merges.txt"
    if model_config is None:
        cfg_file = base / "config.json"
        model_config = ModelConfig.from_hf_config(cfg_file) if cfg_file.exists() else codebert_base()
    elif not isinstance(model_config, ModelConfig):
        model_config = ModelConfig.from_hf_config(model_config)
    tokenizer = BPETokenizer.from_files(vocab, merges)
    weights = load_weights(archive, model_config)
    return Resources(weights, tokenizer, archive, vocab, merges)


@dataclass
class RunManifest:
    command: str
    resources: dict
    sample: dict
    config: dict
    tool_version: str = __version__
    started: str = ""
    finished: str = ""
    artifacts: list[str] = field(default_factory=list)
    snippets_analysed: int = 0
    failures: dict = field(default_factory=dict)
    failed_ids: list[str] = field(default_factory=list)

    def write(self, out_dir: Path, name: str | None = None) -> Path:
        path = out_dir / (name or f"manifest_{self.command}.json")
        path.write_text(json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return path


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def sample_summary(sample: CorpusSample, manifest_path: str | Path | None = None) -> dict:
    return {
        "language": sample.language,
        "seed": sample.seed,
        "n": sample.n,
        "max_tokens": sample.max_tokens,
        "manifest": str(manifest_path) if manifest_path else None,
        "ids_sha256": hashlib.sha256("\n".join(sorted(sample.ids)).encode()).hexdigest(),
    }


def run_trends(
    sample: CorpusSample, res: Resources, config: RunConfig, out_dir: str | Path, sample_manifest=None
) -> TrendTable:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = _now()
    result = analyse_corpus(sample.snippets, res.tokenizer, res.weights, config, trends=True, agreement=False)
    table = result.trends
    lang = sample.language
    artifacts = [tables.write_trends_csv(table, out / "trends.csv")]
    for stat in ("alpha", "scaled_norm"):
        artifacts.append(
            plots.plot_trends(table, stat, out / f"trends_{stat}_{lang}.svg",
                              title=f"{lang}: {plots.STAT_LABELS[stat]} per category")
        )
    RunManifest(
        "trends", res.describe(), sample_summary(sample, sample_manifest), config.to_dict(),
        started=started, finished=_now(), artifacts=[p.name for p in artifacts],
        snippets_analysed=result.analysed, failures=dict(result.failures), failed_ids=result.failed_ids,
    ).write(out)
    return table


def run_agreement(
    sample: CorpusSample, res: Resources, config: RunConfig, out_dir: str | Path, sample_manifest=None
) -> AgreementResult:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = _now()
    result = analyse_corpus(sample.snippets, res.tokenizer, res.weights, config, trends=False, agreement=True)
    agreement = result.agreement
    artifacts = [
        tables.write_agreement_csv(agreement, out / "agreement.csv"),
        tables.write_layer_max_csv(agreement, out / "agreement_layer_max.csv"),
    ]
    for kind in agreement.map_kinds:
        artifacts.append(plots.plot_agreement(agreement, kind, out / f"agreement_{kind}_{sample.language}.svg"))
    RunManifest(
        "agreement", res.describe(), sample_summary(sample, sample_manifest), config.to_dict(),
        started=started, finished=_now(), artifacts=[p.name for p in artifacts],
        snippets_analysed=result.analysed, failures=dict(result.failures), failed_ids=result.failed_ids,
    ).write(out)
    return agreement


def _word_label(text: str, category: Category) -> str:
    if category == Category.WHITESPACE:
        return "␣"
    return text if len(text) <= 16 else text[:15] + "…"


def word_maps(snippet: Snippet, res: Resources, layer: int, head: int | None, agg_mode: str = "clark"):
    """Word labels plus word-level alpha and scaled maps for ``layer`` (0-based); ``head=None`` averages heads."""
    cfg = res.weights.config
    if not 0 <= layer < cfg.num_layers:
        raise IndexOutOfRange(f"layer {layer + 1} outside 1..{cfg.num_layers}")
    if head is not None and not 0 <= head < cfg.num_heads:
        raise IndexOutOfRange(f"head {head + 1} outside 1..{cfg.num_heads}")
    words = prepare_snippet(snippet, res.tokenizer)
    for rec in iter_decompositions(words.token_ids, res.weights):
        if rec.layer_index == layer:
            maps = word_layer_maps(rec, words.alignment, agg_mode)
            break
    if head is None:
        alpha, scaled = maps.alpha.mean(axis=0), maps.scaled.mean(axis=0)
    else:
        alpha, scaled = maps.alpha[head], maps.scaled[head]
    labels = [_word_label(w.text, w.category) for w in words.alignment.words]
    return labels, alpha, scaled


def run_maps(
    snippet: Snippet, res: Resources, layer: int, head: int | None, config: RunConfig, out_dir: str | Path
) -> tuple[np.ndarray, np.ndarray]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = _now()
    labels, alpha, scaled = word_maps(snippet, res, layer, head, config.agg_mode)
    tag = f"L{layer + 1}_H{'mean' if head is None else head + 1}"
    artifacts = [
        tables.write_word_maps_csv(labels, alpha, scaled, out / f"maps_{snippet.id}_{tag}.csv"),
        plots.plot_map_pair(labels, alpha, scaled, out / f"maps_{snippet.id}_{tag}.svg",
                            title=f"layer {layer + 1}, head {'mean' if head is None else head + 1}"),
    ]
    RunManifest(
        "maps", res.describe(), {"snippet": snippet.id, "language": snippet.language,
                                 "layer": layer + 1, "head": "mean" if head is None else head + 1},
        config.to_dict(), started=started, finished=_now(), artifacts=[p.name for p in artifacts],
        snippets_analysed=1,
    ).write(out, f"manifest_maps_{snippet.id}_{tag}.json")
    return alpha, scaled
