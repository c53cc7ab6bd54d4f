from .ast_doc import ASTDoc, ASTError, ASTNode, CyclicParentLinks, SchemaError, SpanOutOfBounds, load_ast_doc
from .categories import LEXICAL_CATEGORIES, REPORT_CATEGORIES, Category
from .indicator import LeafMismatch, ParentIndicator, match_leaves, same_parent_matrix
from .lexer import LANGUAGES, LexError, LexicalToken, category_sets, lex_categorize
from .parsers import ParseError, parse_source

__all__ = [
    "ASTDoc",
    "ASTError",
    "ASTNode",
    "CyclicParentLinks",
    "SchemaError",
    "SpanOutOfBounds",
    "load_ast_doc",
    "LEXICAL_CATEGORIES",
    "REPORT_CATEGORIES",
    "Category",
    "LeafMismatch",
    "ParentIndicator",
    "match_leaves",
    "same_parent_matrix",
    "LANGUAGES",
    "LexError",
    "LexicalToken",
    "category_sets",
    "lex_categorize",
    "ParseError",
    "parse_source",
]
