"""Per-snippet analysis and corpus-level reduction.

Each snippet is lexed, BPE-encoded, aligned to words and pushed through the
instrumented encoder; word-level maps feed a partial TrendTable and/or
AgreementResult. Partials are merged in snippet-id order, so results do not
depend on the worker count.
"""
from __future__ import annotations

import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from ..corpus import Snippet
from ..metrics import AgreementResult, TrendTable, WordLayerMaps, agreement_counts, minmax_scale
from ..model.forward import ForwardError, iter_decompositions
from ..model.weights import WeightStore
from ..syntax.ast_doc import ASTDoc, ASTError, load_ast_doc
from ..syntax.categories import LEXICAL_CATEGORIES, SPECIAL_CATEGORIES, Category
from ..syntax.indicator import LeafMismatch, same_parent_matrix
from ..syntax.lexer import LexError, lex_categorize
from ..syntax.parsers import ParseError, parse_source
from ..tokenization.align import AlignmentGap, WordAlignment, aggregate_word_map, aggregate_word_vector, align_words
from ..tokenization.bpe import BPETokenizer

log = logging.getLogger(__name__)

SCALING_GRANULARITY = "per-head/per-layer/per-snippet/word-level"


class TooManyParseFailures(Exception):
    pass


@dataclass
class RunConfig:
    theta: float = 0.3
    agg_mode: str = "clark"
    stat_mode: str = "received"
    include_special: bool = False
    max_failure_fraction: float = 0.05
    workers: int = 1
    ast: str = "embedded"

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "agg_mode": self.agg_mode,
            "stat_mode": self.stat_mode,
            "include_special": self.include_special,
            "max_failure_fraction": self.max_failure_fraction,
            "ast": self.ast,
            "scaling_granularity": SCALING_GRANULARITY,
        }


@dataclass
class SnippetWords:
    snippet: Snippet
    alignment: WordAlignment
    token_ids: list[int]


@dataclass
class SnippetOutcome:
    snippet_id: str
    trends: TrendTable | None = None
    agreement: AgreementResult | None = None
    failure: str | None = None


@dataclass
class CorpusOutcome:
    trends: TrendTable | None
    agreement: AgreementResult | None
    analysed: int
    failures: Counter = field(default_factory=Counter)
    failed_ids: list[str] = field(default_factory=list)


def prepare_snippet(snippet: Snippet, tokenizer: BPETokenizer) -> SnippetWords:
    lexical = lex_categorize(snippet.source, snippet.language)
    tokens = tokenizer.encode(snippet.source)
    return SnippetWords(snippet, align_words(tokens, lexical), tokens.ids)


def load_ast(snippet: Snippet, ast_source: str) -> ASTDoc:
    if ast_source == "embedded":
        return parse_source(snippet.source, snippet.language)
    if ast_source.startswith("sidecar:"):
        path = Path(ast_source[len("sidecar:"):]) / f"{snippet.id}.json"
        if not path.exists():
            raise ParseError(f"no sidecar AST {path}")
        return load_ast_doc(path, source_length=len(snippet.source.encode("utf-8")))
    raise ValueError(f"unknown AST source {ast_source!r}")


def eligible_mask(categories: list[Category], include_special: bool = False) -> np.ndarray:
    allowed = set(LEXICAL_CATEGORIES)
    if include_special:
        allowed |= set(SPECIAL_CATEGORIES)
    return np.array([c in allowed for c in categories], dtype=bool)


def word_layer_maps(record, alignment: WordAlignment, agg_mode: str) -> WordLayerMaps:
    return WordLayerMaps(
        alpha=aggregate_word_map(record.alpha, alignment, agg_mode),
        scaled=aggregate_word_map(record.scaled_map, alignment, agg_mode),
        norms=aggregate_word_vector(record.transform_norms, alignment),
    )


def analyse_snippet(
    snippet: Snippet,
    tokenizer: BPETokenizer,
    weights: WeightStore,
    config: RunConfig,
    trends: bool = True,
    agreement: bool = True,
) -> SnippetOutcome:
    cfg = weights.config
    try:
        words = prepare_snippet(snippet, tokenizer)
    except LexError as e:
        return SnippetOutcome(snippet.id, failure=f"lex: {e}")
    except AlignmentGap as e:
        return SnippetOutcome(snippet.id, failure=f"alignment: {e}")
    categories = words.alignment.categories

    indicator = None
    if agreement:
        try:
            ast = load_ast(snippet, config.ast)
            indicator = same_parent_matrix(ast, words.alignment, snippet.language, snippet.id).matrix
        except (ParseError, ASTError) as e:
            return SnippetOutcome(snippet.id, failure=f"parse: {e}")
        except LeafMismatch as e:
            return SnippetOutcome(snippet.id, failure=f"leaf-mismatch: {e}")
    eligible = eligible_mask(categories, config.include_special)

    table = TrendTable(cfg.num_layers, stat_mode=config.stat_mode) if trends else None
    result = AgreementResult.empty(cfg.num_layers, cfg.num_heads, config.theta) if agreement else None
    try:
        for rec in iter_decompositions(words.token_ids, weights):
            maps = word_layer_maps(rec, words.alignment, config.agg_mode)
            if table is not None:
                table.add_layer(rec.layer_index, maps, categories)
            if result is not None:
                agree, conf = agreement_counts(maps.alpha, indicator, config.theta, eligible)
                result.add(rec.layer_index, "alpha", agree, conf)
                agree, conf = agreement_counts(minmax_scale(maps.scaled), indicator, config.theta, eligible)
                result.add(rec.layer_index, "scaled_norm", agree, conf)
    except ForwardError as e:
        return SnippetOutcome(snippet.id, failure=f"forward: {e}")
    if result is not None:
        result.snippets = 1
    return SnippetOutcome(snippet.id, table, result)


def analyse_corpus(
    snippets: Iterable[Snippet],
    tokenizer: BPETokenizer,
    weights: WeightStore,
    config: RunConfig,
    trends: bool = True,
    agreement: bool = True,
) -> CorpusOutcome:
    """Analyse all snippets and merge their partial results in snippet-id order."""
    ordered = sorted(snippets, key=lambda s: s.id)
    cfg = weights.config
    total_trends = TrendTable(cfg.num_layers, stat_mode=config.stat_mode) if trends else None
    total_agree = AgreementResult.empty(cfg.num_layers, cfg.num_heads, config.theta) if agreement else None
    out = CorpusOutcome(total_trends, total_agree, 0)

    def work(s: Snippet) -> SnippetOutcome:
        return analyse_snippet(s, tokenizer, weights, config, trends, agreement)

    workers = max(1, config.workers)
    if workers == 1:
        results = [work(s) for s in ordered]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, ordered))

    for res in results:
        if res.failure is not None:
            kind = res.failure.split(":", 1)[0]
            out.failures[kind] += 1
            out.failed_ids.append(res.snippet_id)
            log.warning("snippet %s skipped (%s)", res.snippet_id, res.failure)
            continue
        out.analysed += 1
        if total_trends is not None:
            total_trends.merge(res.trends)
        if total_agree is not None:
            total_agree.merge(res.agreement)

    n = len(ordered)
    failed = sum(out.failures.values())
    if n and failed / n > config.max_failure_fraction:
        raise TooManyParseFailures(
            f"{failed} of {n} snippets failed ({dict(out.failures)}), above the "
            f"{config.max_failure_fraction:.1%} limit"
        )
    return out
