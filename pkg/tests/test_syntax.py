from __future__ import annotations

import json
from importlib import resources

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES
from codeattn.syntax import (
    ASTNode,
    Category,
    CyclicParentLinks,
    LeafMismatch,
    LexError,
    ParseError,
    SchemaError,
    SpanOutOfBounds,
    category_sets,
    lex_categorize,
    load_ast_doc,
    parse_source,
    same_parent_matrix,
)
from codeattn.syntax.categories import REPORT_CATEGORIES
from codeattn.tokenization import align_words
from codeattn.tokenization.align import Word, WordAlignment

X_EQ_1 = json.loads((FIXTURES / "ast" / "x_eq_1.json").read_text(encoding="utf-8"))


def cats(source, language):
    return [(t.text, t.category) for t in lex_categorize(source, language)]


# --- lexing ----------------------------------------------------------------


def test_report_abbreviations():
    assert [c.value for c in REPORT_CATEGORIES] == ["<s>", "</s>", "KW", "ID", "LTRL", "OP", "SpecSymb"]


@pytest.mark.parametrize(
    "language,text,category",
    [
        ("java", "public", Category.KEYWORD),
        ("python", "def", Category.KEYWORD),
        ("java", "42", Category.LITERAL),
        ("python", "42", Category.LITERAL),
        ("java", '"hi"', Category.LITERAL),
        ("python", '"hi"', Category.LITERAL),
        ("python", "None", Category.LITERAL),
        ("java", "null", Category.LITERAL),
        ("java", "true", Category.LITERAL),
        ("java", "'c'", Category.LITERAL),
        ("java", "0x1FL", Category.LITERAL),
        ("python", "1_000.5e-3j", Category.LITERAL),
        ("java", "{", Category.SPECIAL_SYMBOL),
        ("python", "{", Category.SPECIAL_SYMBOL),
        ("java", ",", Category.SPECIAL_SYMBOL),
        ("python", ",", Category.SPECIAL_SYMBOL),
        ("java", "+", Category.OPERATOR),
        ("python", "+", Category.OPERATOR),
        ("java", "==", Category.OPERATOR),
        ("python", "==", Category.OPERATOR),
        ("java", ">>>=", Category.OPERATOR),
        ("python", "**=", Category.SPECIAL_SYMBOL),
        ("python", "userName", Category.IDENTIFIER),
        ("java", "userName", Category.IDENTIFIER),
    ],
)
def test_single_token_categories(language, text, category):
    assert cats(text, language) == [(text, category)]


def test_soft_and_contextual_keywords_are_identifiers():
    assert cats("match = 3", "python")[0] == ("match", Category.IDENTIFIER)
    assert cats("var x = 1;", "java")[0] == ("var", Category.IDENTIFIER)


def test_comments():
    assert cats("x  # note", "python")[-1] == ("# note", Category.COMMENT)
    assert [c for _, c in cats("/* a */ int b; // c", "java")] == [
        Category.COMMENT, Category.KEYWORD, Category.IDENTIFIER, Category.SPECIAL_SYMBOL, Category.COMMENT,
    ]


def test_java_type_argument_closers_split():
    toks = [t for t, _ in cats("Map<String, List<Integer>> m = a >> 2;", "java")]
    assert toks == ["Map", "<", "String", ",", "List", "<", "Integer", ">", ">", "m", "=", "a", ">>", "2", ";"]
    toks = [t for t, _ in cats("public <T extends Comparable<T>> T max(Map<T, List<List<T>>> x)", "java")]
    assert toks.count(">>") == 0 and toks.count(">>>") == 0 and toks.count(">") == 5


def test_byte_offsets_with_non_ascii():
    toks = lex_categorize("s = 'café' + x", "python")
    src = "s = 'café' + x".encode("utf-8")
    assert [src[t.start : t.end].decode() for t in toks] == [t.text for t in toks]
    assert toks[-1].end == len(src)


def test_lex_errors():
    with pytest.raises(LexError):
        lex_categorize("a $ b", "python")
    with pytest.raises(LexError):
        lex_categorize("int a; /* open", "java")
    with pytest.raises(LexError):
        lex_categorize("a # b", "java")
    with pytest.raises(ValueError):
        lex_categorize("x", "cobol")


@pytest.mark.parametrize("language", ["python", "java"])
def test_category_data_files(language):
    root = resources.files("codeattn.syntax").joinpath(f"data/{language}")
    for name in ("keyword", "literal", "operator", "special_symbol"):
        lines = [ln for ln in root.joinpath(f"{name}.txt").read_text("utf-8").splitlines() if ln and not ln.startswith("# ")]
        assert lines and all(len(ln.split()) == 1 for ln in lines)
    sets = category_sets(language)
    assert not (sets.keywords & sets.operators)


def _check_cover(source, language):
    toks = lex_categorize(source, language)
    raw = source.encode("utf-8")
    pos = 0
    for t in toks:
        assert t.start >= pos and t.end > t.start
        assert raw[pos : t.start].strip() == b""
        assert raw[t.start : t.end].decode() == t.text
        pos = t.end
    assert raw[pos:].strip() == b""


@pytest.mark.parametrize("language", ["python", "java"])
def test_cover_on_corpus(corpus_rows, language):
    for row in corpus_rows[language]:
        _check_cover(row["code"], language)


JAVA_PIECES = ["int", "x", "foo_1", "42", "3.5f", '"s t"', "'c'", "+", "++", ">>", ">>>=", "<", ">", "(", ")", "{", "}",
               ";", ",", ".", "->", "::", "@", "// c\n", "/* c */", "List", "?", "&&"]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(JAVA_PIECES), st.sampled_from(["", " ", "\n", "\t "])), max_size=25))
def test_java_cover_property(parts):
    source = "".join(p + sep for p, sep in parts)
    try:
        _check_cover(source, "java")
    except LexError:
        pass


# --- AST documents ---------------------------------------------------------


def test_x_eq_1_fixture_loads():
    doc = load_ast_doc({"nodes": X_EQ_1["nodes"]}, source_length=5)
    assign = next(n for n in doc.nodes.values() if n.kind == "assignment")
    assert [doc.nodes[c].kind for c in doc.children[assign.id]] == ["identifier", "=", "integer"]
    assert [(lf.start, lf.end) for lf in doc.leaves] == [(0, 1), (2, 3), (4, 5)]


def test_embedded_parser_reproduces_fixture():
    doc = parse_source(X_EQ_1["source"], "python")
    assert [(n.kind, n.start, n.end) for n in doc.nodes.values()] == [
        (n["kind"], n["start"], n["end"]) for n in X_EQ_1["nodes"]
    ]


def test_single_node_document():
    doc = load_ast_doc('{"nodes": [{"id": 7, "parent": null, "kind": "module", "start": 0, "end": 0}]}')
    assert doc.root == 7 and [n.id for n in doc.leaves] == [7]


def test_sidecar_file_round_trip(tmp_path):
    doc = parse_source("def f(a):\n    return a\n", "python")
    doc.dump(tmp_path / "ast.json")
    again = load_ast_doc(tmp_path / "ast.json")
    assert again.nodes == doc.nodes and again.leaves == doc.leaves


def node(i, p, s, e, kind="n"):
    return {"id": i, "parent": p, "kind": kind, "start": s, "end": e}


@pytest.mark.parametrize(
    "nodes,error",
    [
        ([node(0, None, 0, 5), node(1, 1, 0, 1)], CyclicParentLinks),
        ([node(0, 1, 0, 5), node(1, 0, 0, 5)], CyclicParentLinks),
        ([node(0, None, 0, 5), node(1, 2, 0, 1), node(2, 1, 0, 1)], CyclicParentLinks),
        ([node(0, None, 0, 5), node(1, 9, 0, 1)], SchemaError),
        ([node(0, None, 0, 5), node(0, 0, 0, 1)], SchemaError),
        ([node(0, None, 0, 5), node(1, None, 0, 1)], SchemaError),
        ([{"id": 0, "parent": None, "kind": "m", "start": 0}], SchemaError),
        ([{"id": "0", "parent": None, "kind": "m", "start": 0, "end": 1}], SchemaError),
        ([], SchemaError),
        ([node(0, None, 0, 5), node(1, 0, 3, 9)], SpanOutOfBounds),
        ([node(0, None, 0, 5), node(1, 0, 3, 2)], SpanOutOfBounds),
        ([node(0, None, 0, 50)], SpanOutOfBounds),
    ],
)
def test_invalid_documents(nodes, error):
    with pytest.raises(error):
        load_ast_doc({"nodes": nodes}, source_length=10)


def test_invalid_json_text():
    with pytest.raises(SchemaError):
        load_ast_doc("{not json")


def test_parse_errors():
    with pytest.raises(ParseError):
        parse_source("x = (", "python")
    with pytest.raises(ParseError):
        parse_source("class { int", "java")


def test_string_literals_are_atomic_leaves():
    doc = parse_source('x = "a b"', "python")
    assert [(lf.kind, lf.start, lf.end) for lf in doc.leaves] == [("identifier", 0, 1), ("=", 2, 3), ("string", 4, 9)]
    doc = parse_source('class A { String s = "x y"; char c = \'q\'; }', "java")
    assert {"string_literal", "character_literal"} <= {lf.kind for lf in doc.leaves}


# --- same-parent indicator -------------------------------------------------


def _indicator(tokenizer, source, language):
    seq = tokenizer.encode(source)
    al = align_words(seq, lex_categorize(source, language))
    return al, same_parent_matrix(parse_source(source, language), al, language, "s")


def test_x_eq_1_all_siblings(tokenizer):
    al, ind = _indicator(tokenizer, "x = 1", "python")
    assert [w.text for w in al.words] == ["<s>", "x", "=", "1", "</s>"]
    g = ind.matrix
    assert g[1, 2] == g[2, 3] == g[1, 3] == 1
    assert g[0].sum() == g[:, 4].sum() == 0
    assert np.all(np.diag(g) == 0)


def test_different_parents(tokenizer):
    al, ind = _indicator(tokenizer, "x = y + 1", "python")
    idx = {w.text: i for i, w in enumerate(al.words)}
    g = ind.matrix
    assert g[idx["x"], idx["y"]] == 0 and g[idx["x"], idx["="]] == 1
    assert g[idx["y"], idx["+"]] == 1 and g[idx["+"], idx["1"]] == 1


def test_comment_words_have_zero_rows(tokenizer):
    al, ind = _indicator(tokenizer, "int a = 1; // note", "java")
    c = [i for i, w in enumerate(al.words) if w.category == Category.COMMENT]
    assert c and ind.matrix[c[0]].sum() == 0 and ind.matrix[:, c[0]].sum() == 0


def test_word_spanning_two_leaves():
    doc = load_ast_doc({"nodes": [node(0, None, 0, 2), node(1, 0, 0, 1), node(2, 0, 1, 2)]})
    words = WordAlignment([Word(0, 2, 0, 1, Category.IDENTIFIER, "ab")], 1)
    with pytest.raises(LeafMismatch):
        same_parent_matrix(doc, words)


@st.composite
def random_trees(draw):
    """Random tree; leaves get disjoint one-byte spans in preorder, parents span their children."""
    n = draw(st.integers(1, 18))
    parents = [None] + [draw(st.integers(0, i - 1)) for i in range(1, n)]
    children = {i: [] for i in range(n)}
    for i, p in enumerate(parents):
        if p is not None:
            children[p].append(i)
    spans = {}
    cursor = [0]

    def assign(i):
        if not children[i]:
            spans[i] = (cursor[0], cursor[0] + 1)
            cursor[0] += 2
            return
        for c in children[i]:
            assign(c)
        spans[i] = (spans[children[i][0]][0], spans[children[i][-1]][1])

    assign(0)
    nodes = [ASTNode(i, parents[i], "n", *spans[i]) for i in range(n)]
    return nodes, children


@settings(max_examples=200, deadline=None)
@given(random_trees())
def test_indicator_counts_sibling_leaf_pairs(tree):
    nodes, children = tree
    doc = load_ast_doc(nodes)
    words = WordAlignment(
        [Word(lf.start, lf.end, k, k + 1, Category.IDENTIFIER, "w") for k, lf in enumerate(doc.leaves)],
        len(doc.leaves),
    )
    g = same_parent_matrix(doc, words).matrix
    leaf_ids = {lf.id for lf in doc.leaves}
    expected = 0
    for p, kids in children.items():
        k = sum(1 for c in kids if c in leaf_ids)
        expected += k * (k - 1)
    assert int(g.sum()) == expected
    assert np.array_equal(g, g.T) and not np.any(np.diag(g))
    for p, kids in children.items():
        pos = [k for k, lf in enumerate(doc.leaves) if lf.parent == p]
        block = g[np.ix_(pos, pos)]
        assert np.all(block + np.eye(len(pos), dtype=block.dtype) == 1)
