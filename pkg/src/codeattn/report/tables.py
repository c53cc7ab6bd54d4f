"""CSV emission. Floats carry 6 significant digits; undefined cells are empty."""
from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

from ..metrics import AgreementResult, TrendTable

TRENDS_HEADER = ("layer", "category", "statistic", "value", "count")
AGREEMENT_HEADER = ("layer", "head", "map_kind", "p", "confident_pairs", "agreeing_pairs")
LAYER_MAX_HEADER = ("layer", "map_kind", "max_p")


def fmt(v: float) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return f"{float(v):.6g}"


def _write(path: Path, header: tuple, rows: list[tuple]) -> Path:
    tmp = path.with_suffix(path.suffix + ".part")
    with open(tmp, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    tmp.replace(path)
    return path


def trend_rows(table: TrendTable) -> list[tuple]:
    means = table.means
    rows = []
    for layer in range(table.layers):
        for c, cat in enumerate(table.categories):
            for s, stat in enumerate(table.statistics):
                rows.append((layer + 1, cat.value, stat, fmt(means[layer, c, s]), int(table.counts[layer, c])))
    return rows


def agreement_rows(result: AgreementResult) -> list[tuple]:
    p = result.p
    rows = []
    layers, heads, _ = p.shape
    for layer in range(layers):
        for head in range(heads):
            for k, kind in enumerate(result.map_kinds):
                rows.append((
                    layer + 1, head + 1, kind, fmt(p[layer, head, k]),
                    int(result.confident[layer, head, k]), int(result.agreeing[layer, head, k]),
                ))
    return rows


def layer_max_rows(result: AgreementResult) -> list[tuple]:
    rows = []
    maxima = {k: result.layer_max(k) for k in result.map_kinds}
    for layer in range(result.p.shape[0]):
        for kind in result.map_kinds:
            rows.append((layer + 1, kind, fmt(maxima[kind][layer])))
    return rows


def write_trends_csv(table: TrendTable, path: str | Path) -> Path:
    return _write(Path(path), TRENDS_HEADER, trend_rows(table))


def write_agreement_csv(result: AgreementResult, path: str | Path) -> Path:
    return _write(Path(path), AGREEMENT_HEADER, agreement_rows(result))


def write_layer_max_csv(result: AgreementResult, path: str | Path) -> Path:
    return _write(Path(path), LAYER_MAX_HEADER, layer_max_rows(result))


def write_word_maps_csv(words: list[str], alpha: np.ndarray, scaled: np.ndarray, path: str | Path) -> Path:
    rows = []
    for i, wi in enumerate(words):
        for j, wj in enumerate(words):
            rows.append((i, j, wi, wj, fmt(alpha[i, j]), fmt(scaled[i, j])))
    return _write(Path(path), ("row", "col", "row_word", "col_word", "alpha", "scaled_norm"), rows)
