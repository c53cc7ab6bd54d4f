"""Byte-level BPE (GPT-2 / RoBERTa scheme) with byte offsets per subtoken."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import regex

# GPT-2 pre-tokenisation pattern, shared by RoBERTa and CodeBERT
PRETOKEN_PATTERN = regex.compile(
    r"""'s|'t|'re|'ve|'m|'ll|'d| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+"""
)

BOS, EOS, PAD, UNK = "<s>", "</s>", "<pad>", "<unk>"


class VocabLoadError(Exception):
    pass


@lru_cache(maxsize=None)
def bytes_to_unicode() -> dict[int, str]:
    """Reversible byte -> printable character table used by byte-level BPE."""
    bs = (
        list(range(ord("!"), ord("~") + 1))
        + list(range(ord("¡"), ord("¬") + 1))
        + list(range(ord("®"), ord("ÿ") + 1))
    )
    cs = bs[:]
    n = 0
    for b in range(256):
        if b not in bs:
            bs.append(b)
            cs.append(256 + n)
            n += 1
    return dict(zip(bs, map(chr, cs)))


@dataclass
class TokenSequence:
    ids: list[int]
    tokens: list[str]
    spans: list[tuple[int, int]]  # byte offsets into source.encode("utf-8")
    special: list[bool]
    source: str = ""
    _source_bytes: bytes | None = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def source_bytes(self) -> bytes:
        if self._source_bytes is None:
            self._source_bytes = self.source.encode("utf-8")
        return self._source_bytes

    def surface(self, i: int) -> bytes:
        a, b = self.spans[i]
        return self.source_bytes[a:b]


class BPETokenizer:
    def __init__(self, vocab: dict[str, int], merges: list[tuple[str, str]]):
        self.vocab = vocab
        self.id_to_token = {i: t for t, i in vocab.items()}
        self.ranks = {pair: r for r, pair in enumerate(merges)}
        for tok in (BOS, EOS, UNK):
            if tok not in vocab:
                raise VocabLoadError(f"vocabulary lacks special token {tok}")
        self.bos_id = vocab[BOS]
        self.eos_id = vocab[EOS]
        self.unk_id = vocab[UNK]
        self.byte_encoder = bytes_to_unicode()
        self.byte_decoder = {c: b for b, c in self.byte_encoder.items()}
        self._cache: dict[str, list[str]] = {}

    @classmethod
    def from_files(cls, vocab_path: str | Path, merges_path: str | Path) -> "BPETokenizer":
        try:
            vocab = json.loads(Path(vocab_path).read_text(encoding="utf-8"))
        except (OSError, ValueError) as e:
            raise VocabLoadError(f"cannot read vocabulary {vocab_path}: {e}") from e
        if not isinstance(vocab, dict):
            raise VocabLoadError("vocabulary file must hold a token -> id object")
        try:
            lines = Path(merges_path).read_text(encoding="utf-8").splitlines()
        except OSError as e:
            raise VocabLoadError(f"cannot read merges {merges_path}: {e}") from e
        merges = []
        for ln, line in enumerate(lines, 1):
            if not line.strip() or line.startswith("#version"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise VocabLoadError(f"{merges_path}:{ln}: malformed merge line {line!r}")
            merges.append((parts[0], parts[1]))
        return cls(vocab, merges)

    @property
    def vocab_size(self) -> int:
        return max(self.vocab.values()) + 1

    def bpe(self, piece: str) -> list[str]:
        cached = self._cache.get(piece)
        if cached is not None:
            return cached
        word = list(piece)
        while len(word) > 1:
            best = None
            best_rank = None
            for pair in zip(word, word[1:]):
                r = self.ranks.get(pair)
                if r is not None and (best_rank is None or r < best_rank):
                    best, best_rank = pair, r
            if best is None:
                break
            merged = []
            i = 0
            while i < len(word):
                if i < len(word) - 1 and word[i] == best[0] and word[i + 1] == best[1]:
                    merged.append(best[0] + best[1])
                    i += 2
                else:
                    merged.append(word[i])
                    i += 1
            word = merged
        self._cache[piece] = word
        return word

    def encode(self, source: str) -> TokenSequence:
        """Encode ``source`` as ``<s> ... </s>`` with a byte span per subtoken."""
        ids = [self.bos_id]
        tokens = [BOS]
        spans = [(0, 0)]
        special = [True]
        offset = 0
        for m in PRETOKEN_PATTERN.finditer(source):
            raw = m.group().encode("utf-8")
            mapped = "".join(self.byte_encoder[b] for b in raw)
            pos = offset
            for sub in self.bpe(mapped):
                # one mapped character per source byte
                ids.append(self.vocab.get(sub, self.unk_id))
                tokens.append(sub)
                spans.append((pos, pos + len(sub)))
                special.append(False)
                pos += len(sub)
            offset += len(raw)
        end = offset
        ids.append(self.eos_id)
        tokens.append(EOS)
        spans.append((end, end))
        special.append(True)
        return TokenSequence(ids, tokens, spans, special, source)

    def decode_bytes(self, ids: list[int], skip_special: bool = True) -> bytes:
        out = bytearray()
        for i in ids:
            tok = self.id_to_token[i]
            if skip_special and tok in (BOS, EOS, PAD):
                continue
            out.extend(self.byte_decoder[c] for c in tok)
        return bytes(out)

    def decode(self, ids: list[int], skip_special: bool = True) -> str:
        return self.decode_bytes(ids, skip_special).decode("utf-8", errors="replace")

    def count(self, source: str) -> int:
        """Subtoken count including ``<s>`` and ``</s>``."""
        n = 2
        for m in PRETOKEN_PATTERN.finditer(source):
            n += len(self.bpe("".join(self.byte_encoder[b] for b in m.group().encode("utf-8"))))
        return n


def bpe_encode(source: str, tokenizer: BPETokenizer) -> TokenSequence:
    return tokenizer.encode(source)
