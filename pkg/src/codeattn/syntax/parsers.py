"""tree-sitter adapter producing ASTDocs.

String-like literals are collapsed into single leaves so that one lexical
literal matches one AST leaf. Trees containing ERROR or MISSING nodes are
rejected.
"""
from __future__ import annotations

from functools import lru_cache

from .ast_doc import ASTDoc, ASTNode, load_ast_doc

# node kinds whose subtree is a single lexical token
ATOMIC_KINDS = {
    "python": frozenset({"string"}),
    "java": frozenset({"string_literal", "text_block", "character_literal"}),
}


class ParseError(Exception):
    pass


@lru_cache(maxsize=None)
def _parser(language: str):
    from tree_sitter import Language, Parser

    if language == "python":
        import tree_sitter_python as grammar
    elif language == "java":
        import tree_sitter_java as grammar
    else:
        raise ValueError(f"unsupported language {language!r}")
    return Parser(Language(grammar.language()))


def parse_source(source: str, language: str) -> ASTDoc:
    data = source.encode("utf-8")
    tree = _parser(language).parse(data)
    root = tree.root_node
    if root.has_error:
        raise ParseError(f"{language} parse produced error nodes")
    atomic = ATOMIC_KINDS[language]
    nodes: list[ASTNode] = []
    stack = [(root, None)]
    while stack:
        node, parent = stack.pop()
        nid = len(nodes)
        nodes.append(ASTNode(nid, parent, node.type, node.start_byte, node.end_byte))
        if node.type in atomic:
            continue
        for child in reversed(node.children):
            stack.append((child, nid))
    return load_ast_doc(nodes, source_length=len(data))
