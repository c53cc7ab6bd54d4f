"""Subtoken -> word alignment and token-map to word-map reduction.

A word is a lexical token of the programming language. A subtoken that
straddles several lexical tokens (BPE often fuses punctuation such as
``("``) is owned by the lexical token it overlaps by the most bytes, ties
going to the earlier one. Lexical tokens left with no subtoken are dropped
from the alignment and listed in ``WordAlignment.dropped``. Runs of
whitespace-only subtokens that fall outside every lexical token become a
``Whitespace`` pseudo-word, and ``<s>``/``</s>`` are singleton words.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..syntax.categories import Category
from .bpe import BOS, TokenSequence

_WS = frozenset(b" \t\n\r\f\v")


class AlignmentGap(Exception):
    def __init__(self, subtoken: int, span: tuple[int, int]):
        super().__init__(f"subtoken {subtoken} at bytes {span} intersects no lexical span")
        self.subtoken = subtoken
        self.span = span


@dataclass(frozen=True)
class Word:
    start: int  # byte span of the lexical token (empty for special tokens)
    end: int
    first: int  # subtoken range [first, stop)
    stop: int
    category: Category
    text: str

    @property
    def size(self) -> int:
        return self.stop - self.first


@dataclass
class WordAlignment:
    words: list[Word]
    num_subtokens: int
    dropped: list[Word] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.words)

    @property
    def categories(self) -> list[Category]:
        return [w.category for w in self.words]

    def assignment(self) -> np.ndarray:
        """Binary (num_words, num_subtokens) membership matrix."""
        a = np.zeros((len(self.words), self.num_subtokens), dtype=np.float64)
        for i, w in enumerate(self.words):
            a[i, w.first : w.stop] = 1.0
        return a

    def subtoken_span(self, tokens: TokenSequence, i: int) -> tuple[int, int]:
        w = self.words[i]
        return tokens.spans[w.first][0], tokens.spans[w.stop - 1][1]


def _lex_fields(tok) -> tuple[int, int, Category, str]:
    if isinstance(tok, tuple):
        return tok[0], tok[1], Category.OTHER, ""
    return tok.start, tok.end, tok.category, tok.text


def align_words(tokens: TokenSequence, lexical: Sequence) -> WordAlignment:
    """Group subtokens into words.

    ``lexical`` holds sorted, non-overlapping lexical tokens: objects with
    ``start``, ``end``, ``category`` and ``text``, or bare ``(start, end)``
    byte spans (categorised ``Other``).
    """
    lex = [_lex_fields(t) for t in lexical]
    src = tokens.source_bytes
    owner: list[int | None] = [None] * len(tokens)  # lexical index, or None for whitespace
    j = 0
    for t, ((a, b), is_special) in enumerate(zip(tokens.spans, tokens.special)):
        if is_special:
            continue
        while j < len(lex) and lex[j][1] <= a:
            j += 1
        best, best_overlap = None, 0
        k = j
        while k < len(lex) and lex[k][0] < b:
            ov = min(b, lex[k][1]) - max(a, lex[k][0])
            if ov > best_overlap:
                best, best_overlap = k, ov
            k += 1
        if best is None:
            if not all(c in _WS for c in src[a:b]):
                raise AlignmentGap(t, (a, b))
        owner[t] = best

    words: list[Word] = []
    claimed: set[int] = set()
    t = 0
    n = len(tokens)
    while t < n:
        if tokens.special[t]:
            cat = Category.CLS if tokens.tokens[t] == BOS else Category.SEP
            pos = tokens.spans[t][0]
            words.append(Word(pos, pos, t, t + 1, cat, tokens.tokens[t]))
            t += 1
            continue
        o = owner[t]
        stop = t + 1
        while stop < n and not tokens.special[stop] and owner[stop] == o:
            stop += 1
        if o is None:
            a, b = tokens.spans[t][0], tokens.spans[stop - 1][1]
            words.append(Word(a, b, t, stop, Category.WHITESPACE, src[a:b].decode("utf-8", "replace")))
        else:
            s, e, cat, text = lex[o]
            words.append(Word(s, e, t, stop, cat, text))
            claimed.add(o)
        t = stop
    dropped = [
        Word(s, e, -1, -1, cat, text) for k, (s, e, cat, text) in enumerate(lex) if k not in claimed
    ]
    return WordAlignment(words, n, dropped)


def aggregate_word_map(token_map: np.ndarray, alignment: WordAlignment, mode: str = "clark") -> np.ndarray:
    """Reduce an (..., n, n) subtoken map to (..., m, m) word level.

    ``clark``: columns (attention *to* a word) are summed over the word's
    subtokens, rows (attention *from* a word) are averaged. ``mean``: both
    axes are averaged.
    """
    a = alignment.assignment()
    if token_map.shape[-1] != a.shape[1] or token_map.shape[-2] != a.shape[1]:
        raise ValueError(f"map shape {token_map.shape[-2:]} does not match {a.shape[1]} subtokens")
    sizes = a.sum(axis=1, keepdims=True)
    from_mean = a / sizes
    if mode == "clark":
        to = a
    elif mode == "mean":
        to = from_mean
    else:
        raise ValueError(f"unknown aggregation mode {mode!r}")
    out = from_mean @ token_map.astype(np.float64) @ to.T
    return out


def aggregate_word_vector(values: np.ndarray, alignment: WordAlignment) -> np.ndarray:
    """Average an (..., n) per-subtoken quantity over each word's subtokens."""
    a = alignment.assignment()
    return values.astype(np.float64) @ (a / a.sum(axis=1, keepdims=True)).T
