"""CodeSearchNet-style JSONL ingestion and reproducible sampling."""
from __future__ import annotations

import gzip
import hashlib
import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

from .syntax.lexer import LANGUAGES

log = logging.getLogger(__name__)


class CorpusError(Exception):
    pass


class MissingField(CorpusError):
    def __init__(self, line_no: int, field_name: str):
        super().__init__(f"line {line_no}: missing field {field_name!r}")
        self.line_no = line_no


class InsufficientSnippets(CorpusError):
    def __init__(self, eligible: int, requested: int):
        super().__init__(f"only {eligible} eligible snippets, {requested} requested")
        self.eligible = eligible
        self.requested = requested


@dataclass(frozen=True)
class Snippet:
    id: str
    language: str
    source: str
    subtoken_count: int | None = None
    origin: str = ""  # file:line, informational


@dataclass
class LoadStats:
    lines: int = 0
    malformed: list[int] = field(default_factory=list)
    empty: int = 0


@dataclass
class CorpusSample:
    snippets: list[Snippet]
    seed: int
    n: int
    max_tokens: int
    language: str

    @property
    def ids(self) -> list[str]:
        return [s.id for s in self.snippets]

    def write_manifest(self, path: str | Path, code_field: str = "code") -> None:
        with open(path, "w", encoding="utf-8") as fh:
            header = {
                "seed": self.seed,
                "n": self.n,
                "max_tokens": self.max_tokens,
                "language": self.language,
                "code_field": code_field,
            }
            fh.write(json.dumps(header, sort_keys=True) + "\n")
            for s in self.snippets:
                fh.write(json.dumps({"id": s.id, "language": s.language, "subtoken_count": s.subtoken_count}) + "\n")


def snippet_id(source: str) -> str:
    return hashlib.sha256(source.encode("utf-8")).hexdigest()[:16]


def _open(path: Path):
    if path.suffix == ".gz":
        return gzip.open(path, "rt", encoding="utf-8")
    return open(path, encoding="utf-8")


def _expand(paths: str | Path | Sequence[str | Path]) -> list[Path]:
    if isinstance(paths, (str, Path)):
        paths = [paths]
    out = []
    for p in map(Path, paths):
        if p.is_dir():
            out.extend(sorted(q for q in p.iterdir() if q.name.endswith((".jsonl", ".jsonl.gz"))))
        else:
            out.append(p)
    return out


def load_corpus(
    paths: str | Path | Sequence[str | Path],
    language: str,
    code_field: str = "code",
    stats: LoadStats | None = None,
) -> Iterator[Snippet]:
    """Stream snippets in file order.

    Malformed JSON lines are skipped and recorded in ``stats``. A line
    without a string ``code_field`` raises MissingField, since it usually
    means the field name is wrong for this corpus.
    """
    if language not in LANGUAGES:
        raise ValueError(f"unsupported language {language!r}")
    stats = stats if stats is not None else LoadStats()
    for path in _expand(paths):
        with _open(path) as fh:
            for line_no, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                stats.lines += 1
                try:
                    obj = json.loads(line)
                except ValueError:
                    stats.malformed.append(line_no)
                    log.warning("%s:%d: malformed JSON line skipped", path, line_no)
                    continue
                if not isinstance(obj, dict) or not isinstance(obj.get(code_field), str):
                    raise MissingField(line_no, code_field)
                code = obj[code_field]
                if not code.strip():
                    stats.empty += 1
                    continue
                yield Snippet(snippet_id(code), language, code, origin=f"{path.name}:{line_no}")


def sample_corpus(
    snippets: Iterable[Snippet],
    n: int,
    max_tokens: int,
    seed: int,
    count_tokens: Callable[[str], int],
) -> CorpusSample:
    """Uniformly sample ``n`` snippets whose subtoken count (with specials) is < ``max_tokens``.

    Duplicate sources collapse to one snippet. Ids are sorted before a seeded
    shuffle, so the result does not depend on input order.
    """
    eligible: dict[str, Snippet] = {}
    language = None
    for s in snippets:
        language = language or s.language
        if s.id in eligible:
            continue
        count = count_tokens(s.source)
        if count < max_tokens:
            eligible[s.id] = Snippet(s.id, s.language, s.source, count, s.origin)
    if n > len(eligible):
        raise InsufficientSnippets(len(eligible), n)
    ids = sorted(eligible)
    chosen = random.Random(seed).sample(ids, n)
    return CorpusSample([eligible[i] for i in chosen], seed, n, max_tokens, language or "")


def read_manifest(path: str | Path) -> tuple[dict, list[dict]]:
    with open(path, encoding="utf-8") as fh:
        lines = [json.loads(ln) for ln in fh if ln.strip()]
    if not lines:
        raise CorpusError(f"empty manifest {path}")
    return lines[0], lines[1:]


def sample_from_manifest(path: str | Path, snippets: Iterable[Snippet]) -> CorpusSample:
    """Rebuild a sample from a manifest and the corpus it was drawn from."""
    header, entries = read_manifest(path)
    by_id = {}
    for s in snippets:
        by_id.setdefault(s.id, s)
    chosen = []
    for e in entries:
        s = by_id.get(e["id"])
        if s is None:
            raise CorpusError(f"snippet {e['id']} from manifest not found in corpus")
        chosen.append(Snippet(s.id, s.language, s.source, e.get("subtoken_count"), s.origin))
    return CorpusSample(chosen, header["seed"], header["n"], header["max_tokens"], header["language"])
