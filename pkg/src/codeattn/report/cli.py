"""Command line entry point: ``codeattn {sample,trends,agreement,maps,synth-checkpoint}``."""
from __future__ import annotations

import argparse
import json
import logging
import shutil
import sys
from pathlib import Path

from ..corpus import CorpusError, LoadStats, Snippet, load_corpus, sample_corpus, sample_from_manifest, snippet_id
from ..model.config import ModelConfig
from ..model.synthetic import write_synthetic_checkpoint
from ..model.weights import WeightError
from ..tokenization.bpe import BPETokenizer, VocabLoadError
from .pipeline import RunConfig, TooManyParseFailures
from .runs import IndexOutOfRange, load_resources, run_agreement, run_maps, run_trends

log = logging.getLogger("codeattn")

_BOOL_KEYS = {"include_special", "verbose"}


def read_config_file(path: str | Path) -> dict:
    """Flat ``key = value`` file; ``#`` starts a comment, keys may use dashes."""
    out = {}
    for ln, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise SystemExit(f"{path}:{ln}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key in _BOOL_KEYS:
            out[key] = value.lower() in ("1", "true", "yes", "on")
        elif key == "corpus":
            out[key] = value.split()
        else:
            out[key] = value
    return out


def _model_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("model")
    g.add_argument("--checkpoint", help="model.safetensors or a directory holding it (plus config/vocab/merges)")
    g.add_argument("--vocab", help="vocab.json (default: next to the checkpoint)")
    g.add_argument("--merges", help="merges.txt (default: next to the checkpoint)")
    g.add_argument("--model-config", help="Hugging Face config.json (default: next to the checkpoint, else codebert-base)")


def _corpus_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("corpus")
    g.add_argument("--corpus", nargs="+", help="JSONL / JSONL.gz files or directories")
    g.add_argument("--language", choices=("java", "python"), default="python")
    g.add_argument("--code-field", default="code")
    g.add_argument("--n", type=int, default=5000, help="sample size")
    g.add_argument("--max-tokens", type=int, default=512, help="keep snippets with fewer subtokens (incl. <s>, </s>)")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--sample", help="sample manifest written by `codeattn sample` (overrides --n/--seed)")


def _analysis_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("analysis")
    g.add_argument("--theta", type=float, default=0.3)
    g.add_argument("--agg-mode", choices=("clark", "mean"), default="clark",
                   help="clark: sum attention to a word, average attention from it; mean: average both")
    g.add_argument("--stat-mode", choices=("received", "given"), default="received")
    g.add_argument("--include-special", action="store_true", help="count <s>/</s> pairs in agreement scores")
    g.add_argument("--max-failure-fraction", type=float, default=0.05)
    g.add_argument("--workers", type=int, default=1)
    g.add_argument("--ast", default="embedded", help="embedded | sidecar:<dir> (files named <snippet id>.json)")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="codeattn", description=__doc__)
    parser.add_argument("--config", help="flat key = value file mirroring the flags; flags win")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    p = sub.add_parser("sample", help="draw a reproducible corpus sample and write its manifest")
    _model_args(p)
    _corpus_args(p)
    p.add_argument("--out-dir", default="out")
    subs["sample"] = p

    for name, helptext in (("trends", "per-layer category trends"), ("agreement", "AST agreement scores")):
        p = sub.add_parser(name, help=helptext)
        _model_args(p)
        _corpus_args(p)
        _analysis_args(p)
        p.add_argument("--out-dir", default="out")
        subs[name] = p

    p = sub.add_parser("maps", help="word-level attention / scaled-norm maps for one snippet")
    _model_args(p)
    _corpus_args(p)
    _analysis_args(p)
    src = p.add_mutually_exclusive_group()
    src.add_argument("--source", help="file holding the snippet source")
    src.add_argument("--snippet-id", help="id of a snippet in --corpus")
    p.add_argument("--layer", type=int, default=1, help="1-based layer")
    p.add_argument("--head", default="1", help="1-based head or 'mean'")
    p.add_argument("--out-dir", default="out")
    subs["maps"] = p

    p = sub.add_parser("synth-checkpoint", help="write a seeded random checkpoint for dry runs")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--vocab", required=True)
    p.add_argument("--merges", required=True)
    p.add_argument("--layers", type=int, default=12)
    p.add_argument("--heads", type=int, default=12)
    p.add_argument("--head-dim", type=int, default=64)
    p.add_argument("--intermediate", type=int, default=3072)
    p.add_argument("--seed", type=int, default=0)
    subs["synth-checkpoint"] = p
    return parser, subs


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    parser, subs = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if known.config:
        values = read_config_file(known.config)
        command = next((a for a in rest if a in subs), None)
        if command is not None:
            valid = {a.dest for a in subs[command]._actions}
            unknown = set(values) - valid
            if unknown:
                parser.error(f"unknown config keys for {command}: {', '.join(sorted(unknown))}")
            subs[command].set_defaults(**values)
    return parser.parse_args(argv)


def _run_config(args) -> RunConfig:
    return RunConfig(
        theta=args.theta,
        agg_mode=args.agg_mode,
        stat_mode=args.stat_mode,
        include_special=args.include_special,
        max_failure_fraction=args.max_failure_fraction,
        workers=args.workers,
        ast=args.ast,
    )


def _need(args, *names):
    missing = [n for n in names if not getattr(args, n)]
    if missing:
        raise SystemExit(f"missing required option(s): {', '.join('--' + m.replace('_', '-') for m in missing)}")


def _tokenizer(args) -> BPETokenizer:
    base = Path(args.checkpoint) if args.checkpoint else None
    if base is not None and not base.is_dir():
        base = base.parent
    vocab = args.vocab or (base / "vocab.json" if base else None)
    merges = args.merges or (base / "merges.txt" if base else None)
    if vocab is None or merges is None:
        raise SystemExit("need --vocab and --merges (or --checkpoint with sibling files)")
    return BPETokenizer.from_files(vocab, merges)


def _snippets(args) -> list[Snippet]:
    stats = LoadStats()
    snippets = list(load_corpus(args.corpus, args.language, args.code_field, stats))
    if stats.malformed:
        log.warning("%d malformed line(s) skipped", len(stats.malformed))
    return snippets


def _sample(args, tokenizer: BPETokenizer):
    snippets = _snippets(args)
    if args.sample:
        return sample_from_manifest(args.sample, snippets)
    return sample_corpus(snippets, args.n, args.max_tokens, args.seed, tokenizer.count)


def cmd_sample(args) -> int:
    _need(args, "corpus")
    tok = _tokenizer(args)
    sample = _sample(args, tok)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "sample.jsonl"
    sample.write_manifest(path, args.code_field)
    print(f"{len(sample.snippets)} snippets -> {path}")
    return 0


def cmd_analysis(args) -> int:
    _need(args, "checkpoint", "corpus")
    res = load_resources(args.checkpoint, args.vocab, args.merges, args.model_config)
    sample = _sample(args, res.tokenizer)
    cfg = _run_config(args)
    if args.command == "trends":
        run_trends(sample, res, cfg, args.out_dir, args.sample)
    else:
        result = run_agreement(sample, res, cfg, args.out_dir, args.sample)
        for kind in result.map_kinds:
            maxima = " ".join("  -  " if v != v else f"{100 * v:5.1f}" for v in result.layer_max(kind))
            print(f"{kind:>12} layer max (%): {maxima}")
    print(f"artifacts written to {args.out_dir}")
    return 0


def cmd_maps(args) -> int:
    _need(args, "checkpoint")
    res = load_resources(args.checkpoint, args.vocab, args.merges, args.model_config)
    if args.source:
        code = Path(args.source).read_text(encoding="utf-8")
        snippet = Snippet(snippet_id(code), args.language, code)
    else:
        _need(args, "corpus", "snippet_id")
        found = [s for s in _snippets(args) if s.id == args.snippet_id]
        if not found:
            raise SystemExit(f"snippet {args.snippet_id} not in corpus")
        snippet = found[0]
    head = None if args.head == "mean" else int(args.head) - 1
    run_maps(snippet, res, args.layer - 1, head, _run_config(args), args.out_dir)
    print(f"maps for {snippet.id} written to {args.out_dir}")
    return 0


def cmd_synth(args) -> int:
    vocab = json.loads(Path(args.vocab).read_text(encoding="utf-8"))
    cfg = ModelConfig(
        num_layers=args.layers, num_heads=args.heads, head_dim=args.head_dim,
        intermediate_dim=args.intermediate, vocab_size=max(vocab.values()) + 1,
    )
    out = write_synthetic_checkpoint(args.out_dir, cfg, seed=args.seed)
    shutil.copyfile(args.vocab, out / "vocab.json")
    shutil.copyfile(args.merges, out / "merges.txt")
    print(f"synthetic checkpoint written to {out}")
    return 0


COMMANDS = {
    "sample": cmd_sample,
    "trends": cmd_analysis,
    "agreement": cmd_analysis,
    "maps": cmd_maps,
    "synth-checkpoint": cmd_synth,
}


def main(argv: list[str] | None = None) -> int:
    args = parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (CorpusError, WeightError, VocabLoadError, TooManyParseFailures, IndexOutOfRange, FileNotFoundError) as e:
        print(f"codeattn: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
