"""Grammar-driven lexing of Java and Python into categorised tokens.

Spans are byte offsets into ``source.encode("utf-8")``. Keyword, literal,
operator and special-symbol sets are read from ``data/<language>/*.txt``.
"""
from __future__ import annotations

import io
import tokenize as pytokenize
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import regex

from .categories import Category

LANGUAGES = ("java", "python")


class LexError(Exception):
    def __init__(self, position: int, message: str = "cannot tokenize"):
        super().__init__(f"{message} at byte {position}")
        self.position = position


@dataclass(frozen=True)
class LexicalToken:
    start: int
    end: int
    text: str
    category: Category


@dataclass(frozen=True)
class CategorySets:
    keywords: frozenset[str]
    literals: frozenset[str]
    operators: frozenset[str]
    special_symbols: frozenset[str]

    def classify_symbol(self, text: str) -> Category:
        if text in self.operators:
            return Category.OPERATOR
        if text in self.special_symbols:
            return Category.SPECIAL_SYMBOL
        return Category.OTHER

    def classify_word(self, text: str) -> Category:
        if text in self.keywords:
            return Category.KEYWORD
        if text in self.literals:
            return Category.LITERAL
        return Category.IDENTIFIER


def _read_list(language: str, name: str) -> frozenset[str]:
    text = resources.files("codeattn.syntax").joinpath(f"data/{language}/{name}.txt").read_text(encoding="utf-8")
    return frozenset(
        line.strip() for line in text.splitlines() if line.strip() and not line.startswith("# ")
    )


@lru_cache(maxsize=None)
def category_sets(language: str) -> CategorySets:
    if language not in LANGUAGES:
        raise ValueError(f"unsupported language {language!r}")
    return CategorySets(
        keywords=_read_list(language, "keyword"),
        literals=_read_list(language, "literal"),
        operators=_read_list(language, "operator"),
        special_symbols=_read_list(language, "special_symbol"),
    )


class _ByteIndex:
    """Character offset -> UTF-8 byte offset."""

    def __init__(self, source: str):
        self.ascii = source.isascii()
        if not self.ascii:
            offs = [0] * (len(source) + 1)
            acc = 0
            for i, ch in enumerate(source):
                offs[i] = acc
                acc += len(ch.encode("utf-8"))
            offs[len(source)] = acc
            self.offs = offs

    def __call__(self, i: int) -> int:
        return i if self.ascii else self.offs[i]


def lex_categorize(source: str, language: str) -> list[LexicalToken]:
    if language == "python":
        return _lex_python(source)
    if language == "java":
        return _lex_java(source)
    raise ValueError(f"unsupported language {language!r}")


# -- Python -----------------------------------------------------------------

_PY_SKIP = {
    pytokenize.NEWLINE,
    pytokenize.NL,
    pytokenize.INDENT,
    pytokenize.DEDENT,
    pytokenize.ENDMARKER,
    pytokenize.ENCODING,
}


def _lex_python(source: str) -> list[LexicalToken]:
    sets = category_sets("python")
    lines = io.StringIO(source).readlines()
    line_starts = [0]
    for ln in lines:
        line_starts.append(line_starts[-1] + len(ln))
    to_byte = _ByteIndex(source)

    def char_pos(row: int, col: int) -> int:
        return line_starts[row - 1] + col if row - 1 < len(line_starts) else len(source)

    out: list[LexicalToken] = []
    try:
        for tok in pytokenize.generate_tokens(io.StringIO(source).readline):
            if tok.type in _PY_SKIP:
                continue
            s = char_pos(*tok.start)
            e = char_pos(*tok.end)
            text = tok.string
            if tok.type == pytokenize.ERRORTOKEN:
                if text.isspace() or not text:
                    continue
                raise LexError(to_byte(s), f"unexpected {text!r}")
            if tok.type == pytokenize.NAME:
                cat = sets.classify_word(text)
            elif tok.type in (pytokenize.NUMBER, pytokenize.STRING):
                cat = Category.LITERAL
            elif tok.type == pytokenize.OP:
                cat = sets.classify_symbol(text)
            elif tok.type == pytokenize.COMMENT:
                cat = Category.COMMENT
            else:
                cat = Category.OTHER
            out.append(LexicalToken(to_byte(s), to_byte(e), text, cat))
    except (pytokenize.TokenError, IndentationError, SyntaxError) as e:
        if isinstance(e, pytokenize.TokenError) and "multi-line statement" in str(e.args[0]):
            # unclosed bracket at end of input: every token was already emitted
            return _fill_gaps(source, out, to_byte)
        pos = 0
        if isinstance(e, pytokenize.TokenError) and len(e.args) > 1:
            pos = to_byte(char_pos(*e.args[1]))
        elif getattr(e, "lineno", None):
            pos = to_byte(char_pos(e.lineno, max((e.offset or 1) - 1, 0)))
        raise LexError(pos, str(e)) from e
    return _fill_gaps(source, out, to_byte)


def _fill_gaps(source: str, tokens: list[LexicalToken], to_byte: _ByteIndex) -> list[LexicalToken]:
    """Cover non-whitespace characters the tokenizer consumed silently (line continuations)."""
    tokens.sort(key=lambda t: t.start)
    covered = bytearray(len(source.encode("utf-8")) + 1)
    for t in tokens:
        covered[t.start : t.end] = b"\x01" * (t.end - t.start)
    extra = []
    for i, ch in enumerate(source):
        if not ch.isspace() and not covered[to_byte(i)]:
            b = to_byte(i)
            extra.append(LexicalToken(b, b + len(ch.encode("utf-8")), ch, Category.OTHER))
    if extra:
        tokens = sorted(tokens + extra, key=lambda t: t.start)
    return tokens


# -- Java -------------------------------------------------------------------

_JAVA_NUMBER = (
    r"0[xX][0-9a-fA-F_]*(?:\.[0-9a-fA-F_]*)?(?:[pP][+-]?\d+)?[lLfFdD]?"
    r"|0[bB][01_]+[lL]?"
    r"|(?:\d[\d_]*(?:\.[\d_]*)?|\.\d[\d_]*)(?:[eE][+-]?\d+)?[lLfFdD]?"
)


@lru_cache(maxsize=None)
def _java_pattern() -> regex.Pattern:
    sets = category_sets("java")
    symbols = sorted(sets.operators | sets.special_symbols, key=len, reverse=True)
    sym = "|".join(regex.escape(s) for s in symbols)
    return regex.compile(
        r"(?P<ws>\s+)"
        r"|(?P<comment>//[^\n]*|/\*.*?\*/)"
        r'|(?P<text_block>"""[ \t\f]*\r?\n(?:[^\\]|\\.)*?""")'
        r'|(?P<string>"(?:[^"\\\n]|\\.)*")'
        r"|(?P<char>'(?:[^'\\\n]|\\.)+')"
        rf"|(?P<number>{_JAVA_NUMBER})"
        r"|(?P<word>[\p{L}_$][\p{L}\p{N}_$]*)"
        rf"|(?P<symbol>{sym})",
        regex.DOTALL,
    )


def _lex_java(source: str) -> list[LexicalToken]:
    sets = category_sets("java")
    pat = _java_pattern()
    to_byte = _ByteIndex(source)
    out: list[LexicalToken] = []
    pos = 0
    while pos < len(source):
        m = pat.match(source, pos)
        if m is None or m.end() == pos:
            raise LexError(to_byte(pos), f"unexpected {source[pos]!r}")
        kind = m.lastgroup
        text = m.group()
        if kind == "symbol" and source.startswith("/*", pos):
            raise LexError(to_byte(pos), "unterminated comment")
        if kind != "ws":
            if kind == "comment":
                cat = Category.COMMENT
            elif kind in ("text_block", "string", "char", "number"):
                cat = Category.LITERAL
            elif kind == "word":
                cat = sets.classify_word(text)
            else:
                cat = sets.classify_symbol(text)
            out.append(LexicalToken(to_byte(m.start()), to_byte(m.end()), text, cat))
        pos = m.end()
    return _split_type_closers(out)


_TYPE_ARG_TOKENS = frozenset(
    {".", ",", "?", "&", "[", "]", "@", "extends", "super",
     "boolean", "byte", "char", "short", "int", "long", "float", "double"}
)
_CLOSERS = {">": 1, ">>": 2, ">>>": 3}


def _split_type_closers(tokens: list[LexicalToken]) -> list[LexicalToken]:
    """Inside type arguments a run of '>' is several '>' tokens (JLS 3.2)."""
    comments = Category.COMMENT
    split: set[int] = set()
    for i, t in enumerate(tokens):
        if t.text != "<":
            continue
        depth = 1
        seen: list[int] = []
        for j in range(i + 1, len(tokens)):
            u = tokens[j]
            if u.category == comments:
                continue
            if u.text == "<":
                depth += 1
            elif u.text in _CLOSERS:
                depth -= _CLOSERS[u.text]
                if u.text != ">":
                    seen.append(j)
                if depth <= 0:
                    if depth == 0:
                        split.update(seen)
                    break
            elif u.category != Category.IDENTIFIER and u.text not in _TYPE_ARG_TOKENS:
                break
    if not split:
        return tokens
    out = []
    for i, t in enumerate(tokens):
        if i in split:
            out.extend(LexicalToken(t.start + k, t.start + k + 1, ">", t.category) for k in range(len(t.text)))
        else:
            out.append(t)
    return out
