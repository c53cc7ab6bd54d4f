from __future__ import annotations

import bisect
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .ast_doc import ASTDoc
from .categories import Category

if TYPE_CHECKING:
    from ..tokenization.align import WordAlignment

# words that never match an AST leaf
UNMATCHED_CATEGORIES = frozenset({Category.CLS, Category.SEP, Category.COMMENT, Category.WHITESPACE})


class LeafMismatch(Exception):
    def __init__(self, word: int, text: str, leaves: int):
        super().__init__(f"word {word} ({text!r}) overlaps {leaves} AST leaves")
        self.word = word


@dataclass
class ParentIndicator:
    """Symmetric 0/1 matrix over words; ``matrix[i, j] = 1`` iff words i != j hang off one AST node."""

    matrix: np.ndarray
    leaf_of_word: list[int | None]
    language: str = ""
    snippet_id: str = ""


def match_leaves(ast: ASTDoc, words: WordAlignment) -> list[int | None]:
    """Id of the AST leaf each word overlaps, or None."""
    leaves = [lf for lf in ast.leaves if lf.end > lf.start]
    starts = [lf.start for lf in leaves]
    out: list[int | None] = []
    for i, w in enumerate(words.words):
        if w.category in UNMATCHED_CATEGORIES or w.end <= w.start:
            out.append(None)
            continue
        k = bisect.bisect_left(starts, w.end)
        hits = []
        # leaves are disjoint and sorted, so overlapping ones form a run ending at k - 1
        while k > 0 and leaves[k - 1].end > w.start:
            k -= 1
            hits.append(leaves[k].id)
        if len(hits) > 1:
            raise LeafMismatch(i, w.text, len(hits))
        out.append(hits[0] if hits else None)
    return out


def same_parent_matrix(ast: ASTDoc, words: WordAlignment, language: str = "", snippet_id: str = "") -> ParentIndicator:
    leaf_of_word = match_leaves(ast, words)
    parents = []
    for lid in leaf_of_word:
        p = ast.nodes[lid].parent if lid is not None else None
        parents.append(-1 if p is None else p)  # a lone root leaf has no siblings
    parent = np.array(parents, dtype=np.int64)
    matched = np.array([lid is not None and ast.nodes[lid].parent is not None for lid in leaf_of_word], dtype=bool)
    g = (parent[:, None] == parent[None, :]) & matched[:, None] & matched[None, :]
    np.fill_diagonal(g, False)
    return ParentIndicator(g.astype(np.uint8), leaf_of_word, language, snippet_id)
