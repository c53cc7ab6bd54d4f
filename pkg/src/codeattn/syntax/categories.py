from __future__ import annotations

import enum


class Category(str, enum.Enum):
    """Word categories. Values are the labels written to CSVs and plots."""

    KEYWORD = "KW"
    IDENTIFIER = "ID"
    LITERAL = "LTRL"
    OPERATOR = "OP"
    SPECIAL_SYMBOL = "SpecSymb"
    CLS = "<s>"
    SEP = "</s>"
    COMMENT = "Comment"
    WHITESPACE = "Whitespace"
    OTHER = "Other"

    def __str__(self) -> str:
        return self.value


LEXICAL_CATEGORIES = (
    Category.KEYWORD,
    Category.IDENTIFIER,
    Category.LITERAL,
    Category.OPERATOR,
    Category.SPECIAL_SYMBOL,
)

# column order of the trend tables
REPORT_CATEGORIES = (Category.CLS, Category.SEP) + LEXICAL_CATEGORIES

SPECIAL_CATEGORIES = (Category.CLS, Category.SEP)
