from .align import AlignmentGap, Word, WordAlignment, aggregate_word_map, aggregate_word_vector, align_words
from .bpe import BPETokenizer, TokenSequence, VocabLoadError, bpe_encode

__all__ = [
    "AlignmentGap",
    "Word",
    "WordAlignment",
    "aggregate_word_map",
    "aggregate_word_vector",
    "align_words",
    "BPETokenizer",
    "TokenSequence",
    "VocabLoadError",
    "bpe_encode",
]
