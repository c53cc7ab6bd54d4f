"""Syntactic agreement scores, min-max scaling and per-category layer trends.

The agreement score of a word-level map ``M`` against a pair indicator ``g`` is

    p = #{(i, j) : M[i, j] > theta and g[i, j] = 1} / #{(i, j) : M[i, j] > theta}

counted over eligible pairs only and pooled over a corpus before dividing.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .syntax.categories import REPORT_CATEGORIES, Category

MAP_KINDS = ("alpha", "scaled_norm")
STATISTICS = ("alpha", "transform_norm", "scaled_norm")
STAT_MODES = ("received", "given")


def _as_matrix(indicator) -> np.ndarray:
    return np.asarray(getattr(indicator, "matrix", indicator))


def agreement_counts(
    word_map: np.ndarray, indicator, theta: float, eligible: np.ndarray | None = None
) -> tuple[int, int]:
    """Return ``(agreeing, confident)`` pair counts for one map.

    ``word_map`` may carry leading axes (e.g. heads); counts are then
    returned per leading index as arrays.
    """
    g = _as_matrix(indicator).astype(bool)
    m = word_map.shape[-1]
    if word_map.shape[-2:] != g.shape or g.shape != (m, m):
        raise ValueError(f"map shape {word_map.shape[-2:]} != indicator shape {g.shape}")
    if not 0.0 < theta < 1.0:
        raise ValueError(f"theta must lie in (0, 1), got {theta}")
    confident = word_map > theta
    if eligible is not None:
        e = np.asarray(eligible, dtype=bool)
        confident = confident & (e[:, None] & e[None, :])
    n_conf = confident.sum(axis=(-2, -1))
    n_agree = (confident & g).sum(axis=(-2, -1))
    return n_agree, n_conf


def agreement_score(
    word_map: np.ndarray, indicator, theta: float = 0.3, eligible: np.ndarray | None = None
) -> float | None:
    """Fraction of confident pairs the indicator marks; None when no pair is confident."""
    agree, conf = agreement_counts(word_map, indicator, theta, eligible)
    if conf == 0:
        return None
    return float(agree) / float(conf)


def minmax_scale(word_map: np.ndarray) -> np.ndarray:
    """Scale each trailing 2-D map to [0, 1]; constant maps become all zeros."""
    a = np.asarray(word_map, dtype=np.float64)
    lo = a.min(axis=(-2, -1), keepdims=True)
    hi = a.max(axis=(-2, -1), keepdims=True)
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (a - lo) / safe, 0.0)


@dataclass
class AgreementResult:
    """Corpus-pooled counts per (layer, head, map kind)."""

    theta: float
    confident: np.ndarray  # (L, H, K) int64
    agreeing: np.ndarray  # (L, H, K) int64
    map_kinds: tuple[str, ...] = MAP_KINDS
    snippets: int = 0

    @classmethod
    def empty(cls, num_layers: int, num_heads: int, theta: float) -> "AgreementResult":
        shape = (num_layers, num_heads, len(MAP_KINDS))
        return cls(theta, np.zeros(shape, np.int64), np.zeros(shape, np.int64))

    def add(self, layer: int, kind: str, agreeing: np.ndarray, confident: np.ndarray) -> None:
        k = self.map_kinds.index(kind)
        self.agreeing[layer, :, k] += agreeing
        self.confident[layer, :, k] += confident

    def merge(self, other: "AgreementResult") -> None:
        self.agreeing += other.agreeing
        self.confident += other.confident
        self.snippets += other.snippets

    @property
    def p(self) -> np.ndarray:
        """Agreement per cell, NaN where undefined."""
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.confident > 0, self.agreeing / np.maximum(self.confident, 1), np.nan)

    def layer_max(self, kind: str) -> np.ndarray:
        """Max over heads of defined cells, NaN for layers with none."""
        p = self.p[:, :, self.map_kinds.index(kind)]
        out = np.full(p.shape[0], np.nan)
        for layer, row in enumerate(p):
            defined = row[~np.isnan(row)]
            if defined.size:
                out[layer] = defined.max()
        return out


@dataclass
class WordLayerMaps:
    """Word-level quantities of one layer of one snippet."""

    alpha: np.ndarray  # (H, m, m)
    scaled: np.ndarray  # (H, m, m)
    norms: np.ndarray  # (H, m)


@dataclass
class TrendTable:
    layers: int
    categories: tuple[Category, ...] = REPORT_CATEGORIES
    statistics: tuple[str, ...] = STATISTICS
    stat_mode: str = "received"
    sums: np.ndarray = field(default=None)  # (L, C, S)
    counts: np.ndarray = field(default=None)  # (L, C)

    def __post_init__(self) -> None:
        if self.stat_mode not in STAT_MODES:
            raise ValueError(f"unknown stat mode {self.stat_mode!r}")
        if self.sums is None:
            self.sums = np.zeros((self.layers, len(self.categories), len(self.statistics)))
        if self.counts is None:
            self.counts = np.zeros((self.layers, len(self.categories)), dtype=np.int64)

    @property
    def means(self) -> np.ndarray:
        """(L, C, S) means; NaN where the category never occurs."""
        c = self.counts[:, :, None]
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(c > 0, self.sums / np.maximum(c, 1), np.nan)

    def value(self, layer: int, category: Category | str, statistic: str) -> float:
        return float(self.means[layer, self.categories.index(Category(category)), self.statistics.index(statistic)])

    def add_layer(self, layer: int, maps: WordLayerMaps, categories: Sequence[Category]) -> None:
        axis = -2 if self.stat_mode == "received" else -1
        alpha = maps.alpha.mean(axis=axis).mean(axis=0)
        scaled = maps.scaled.mean(axis=axis).mean(axis=0)
        norms = maps.norms.mean(axis=0)
        per_stat = {"alpha": alpha, "transform_norm": norms, "scaled_norm": scaled}
        for w, cat in enumerate(categories):
            if cat not in self.categories:
                continue
            c = self.categories.index(cat)
            self.counts[layer, c] += 1
            for s, name in enumerate(self.statistics):
                self.sums[layer, c, s] += per_stat[name][w]

    def merge(self, other: "TrendTable") -> None:
        self.sums += other.sums
        self.counts += other.counts

    def ranking(self, layer: int, statistic: str) -> list[Category]:
        """Categories present at ``layer`` ordered by decreasing mean."""
        s = self.statistics.index(statistic)
        vals = self.means[layer, :, s]
        order = sorted((i for i in range(len(self.categories)) if not np.isnan(vals[i])), key=lambda i: -vals[i])
        return [self.categories[i] for i in order]


def category_trends(
    snippets: Iterable[tuple[Sequence[WordLayerMaps], Sequence[Category]]],
    num_layers: int | None = None,
    stat_mode: str = "received",
) -> TrendTable:
    """Average word statistics per (layer, category) over a corpus.

    For each word the per-head statistic (column mean of the map for
    ``received``, row mean for ``given``) is averaged over heads, then
    averaged over every word of a category across all snippets.
    """
    table = None
    for layers, categories in snippets:
        if table is None:
            table = TrendTable(num_layers or len(layers), stat_mode=stat_mode)
        for i, maps in enumerate(layers):
            table.add_layer(i, maps, categories)
    if table is None:
        table = TrendTable(num_layers or 0, stat_mode=stat_mode)
    return table
