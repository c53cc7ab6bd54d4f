"""Parent-linked AST documents and their JSON sidecar form.

Sidecar schema::

    {"nodes": [{"id": int, "parent": int | null, "kind": str, "start": int, "end": int}, ...]}

``start``/``end`` are byte offsets into the exact source string analysed.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any


class ASTError(Exception):
    pass


class SchemaError(ASTError):
    pass


class CyclicParentLinks(ASTError):
    pass


class SpanOutOfBounds(ASTError):
    pass


@dataclass(frozen=True)
class ASTNode:
    id: int
    parent: int | None
    kind: str
    start: int
    end: int


@dataclass
class ASTDoc:
    nodes: dict[int, ASTNode]
    root: int
    children: dict[int, list[int]] = field(default_factory=dict)
    leaves: list[ASTNode] = field(default_factory=list)

    def to_json(self) -> dict[str, Any]:
        return {
            "nodes": [
                {"id": n.id, "parent": n.parent, "kind": n.kind, "start": n.start, "end": n.end}
                for n in self.nodes.values()
            ]
        }

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_json()), encoding="utf-8")


_FIELDS = {"id": int, "parent": (int, type(None)), "kind": str, "start": int, "end": int}


def _parse_nodes(raw: Any) -> list[ASTNode]:
    if not isinstance(raw, dict) or not isinstance(raw.get("nodes"), list):
        raise SchemaError('document must be an object with a "nodes" list')
    nodes = []
    for k, item in enumerate(raw["nodes"]):
        if not isinstance(item, dict):
            raise SchemaError(f"node {k} is not an object")
        for name, typ in _FIELDS.items():
            if name not in item:
                raise SchemaError(f"node {k} lacks {name!r}")
            v = item[name]
            if isinstance(v, bool) or not isinstance(v, typ):
                raise SchemaError(f"node {k}: field {name!r} has wrong type {type(v).__name__}")
        nodes.append(ASTNode(item["id"], item["parent"], item["kind"], item["start"], item["end"]))
    if not nodes:
        raise SchemaError("document has no nodes")
    return nodes


def load_ast_doc(source: Any, source_length: int | None = None) -> ASTDoc:
    """Build a validated ASTDoc from a sidecar path, JSON text, parsed dict or node list.

    ``source_length`` (bytes) enables the bounds check against the analysed source.
    """
    if isinstance(source, ASTDoc):
        nodes = list(source.nodes.values())
    elif isinstance(source, list) and all(isinstance(n, ASTNode) for n in source):
        nodes = source
    else:
        if isinstance(source, Path) or (isinstance(source, str) and not source.lstrip().startswith("{")):
            source = Path(source).read_text(encoding="utf-8")
        if isinstance(source, str):
            try:
                source = json.loads(source)
            except ValueError as e:
                raise SchemaError(f"invalid JSON: {e}") from e
        nodes = _parse_nodes(source)

    by_id: dict[int, ASTNode] = {}
    for n in nodes:
        if n.id in by_id:
            raise SchemaError(f"duplicate node id {n.id}")
        by_id[n.id] = n

    roots = [n.id for n in nodes if n.parent is None]
    for n in nodes:
        if n.parent == n.id:
            raise CyclicParentLinks(f"node {n.id} is its own parent")
        if n.parent is not None and n.parent not in by_id:
            raise SchemaError(f"node {n.id} has unknown parent {n.parent}")
    if len(roots) != 1:
        # with no root every chain of parents must loop
        if not roots:
            raise CyclicParentLinks("no root node; parent links loop")
        raise SchemaError(f"expected one root, found {len(roots)}")

    children: dict[int, list[int]] = {n.id: [] for n in nodes}
    for n in nodes:
        if n.parent is not None:
            children[n.parent].append(n.id)

    # every node must be reachable from the root, otherwise some chain loops
    seen = set()
    stack = [roots[0]]
    while stack:
        i = stack.pop()
        seen.add(i)
        stack.extend(children[i])
    if len(seen) != len(by_id):
        raise CyclicParentLinks(f"{len(by_id) - len(seen)} node(s) sit on a parent cycle")

    for n in nodes:
        if n.start < 0 or n.end < n.start:
            raise SpanOutOfBounds(f"node {n.id} has invalid span [{n.start}, {n.end})")
        if source_length is not None and n.end > source_length:
            raise SpanOutOfBounds(f"node {n.id} ends at {n.end} beyond source length {source_length}")
        if n.parent is not None:
            p = by_id[n.parent]
            if n.start < p.start or n.end > p.end:
                raise SpanOutOfBounds(f"node {n.id} [{n.start}, {n.end}) escapes parent {p.id}")

    for kids in children.values():
        kids.sort(key=lambda i: (by_id[i].start, by_id[i].end, i))
    leaves = sorted((by_id[i] for i, k in children.items() if not k), key=lambda n: (n.start, n.end, n.id))
    return ASTDoc(nodes=by_id, root=roots[0], children=children, leaves=leaves)
