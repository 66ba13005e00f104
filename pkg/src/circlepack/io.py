"""Instance and solution files.

Instances are JSON (canonical) or a line-oriented text format::

    # comments start with '#'
    outer: a b c
    a: b d c
    b: c d a
    ...

Every vertex line lists the neighbours of the vertex in counterclockwise
order.  The outer cycle is listed counterclockwise as well, so the interior
of the drawing lies on its left.  An optional ``triangulation: yes`` line
asserts that the input is a triangulation and is checked on load.

The JSON form carries the same data::

    {"format": "circlepack-instance", "version": 1,
     "labels": ["a", "b", ...],
     "rotation": {"a": ["b", "d", "c"], ...},
     "outer": ["a", "b", "c"],
     "triangulation": true}

Solutions are written with every float at 17 significant digits, so equal
runs produce byte-identical files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Sequence

from .planegraph import GraphError, PlaneGraph, is_triangulation

INSTANCE_FORMAT = "circlepack-instance"
SOLUTION_FORMAT = "circlepack-solution"
FORMAT_VERSION = 1


class ParseError(ValueError):
    """Malformed instance; ``line`` or ``field`` points at the culprit."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field '{field}'")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.field = field


@dataclass(frozen=True)
class Instance:
    graph: PlaneGraph
    labels: tuple[str, ...]
    triangulation: bool | None = None

    @property
    def n(self) -> int:
        return self.graph.n

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return (self.graph == other.graph and self.labels == other.labels
                and self.triangulation == other.triangulation)


def _build(labels: Sequence[str], nbrs: dict[str, Sequence[str]], outer: Sequence[str],
           flag: bool | None, where) -> Instance:
    """Translate labelled adjacency into a PlaneGraph; ``where(label)`` locates errors."""
    index = {}
    for k, lab in enumerate(labels):
        if lab in index:
            raise ParseError(f"duplicate vertex label {lab!r}", **where(lab))
        index[lab] = k
    rotation = []
    for lab in labels:
        row = nbrs.get(lab)
        if row is None:
            raise ParseError(f"vertex {lab!r} has no adjacency list", **where(lab))
        seen = set()
        ids = []
        for w in row:
            if w not in index:
                raise ParseError(f"vertex {lab!r} lists unknown neighbour {w!r}", **where(lab))
            if w == lab:
                raise ParseError(f"loop at vertex {lab!r}", **where(lab))
            if w in seen:
                raise ParseError(f"parallel edge {lab!r}-{w!r} (neighbour listed twice)", **where(lab))
            seen.add(w)
            ids.append(index[w])
        rotation.append(ids)
    for v, row in enumerate(rotation):
        for w in row:
            if v not in rotation[w]:
                raise ParseError(f"edge {labels[v]!r}-{labels[w]!r} is listed only at {labels[v]!r}",
                                 **where(labels[w]))
    for lab in outer:
        if lab not in index:
            raise ParseError(f"outer cycle names unknown vertex {lab!r}", **where(None))
    graph = PlaneGraph(rotation, [index[lab] for lab in outer])
    if flag and not is_triangulation(graph):
        raise ParseError("file asserts a triangulation but some face is not a triangle",
                         field="triangulation")
    return Instance(graph, tuple(labels), flag)


def _parse_text(text: str) -> Instance:
    labels: list[str] = []
    nbrs: dict[str, list[str]] = {}
    lines: dict[str, int] = {}
    outer: list[str] | None = None
    outer_line = None
    flag = None
    for no, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        if ":" not in body:
            raise ParseError("expected 'label: neighbours...'", line=no)
        head, rest = (s.strip() for s in body.split(":", 1))
        if not head:
            raise ParseError("missing label before ':'", line=no)
        if head == "outer":
            if outer is not None:
                raise ParseError("outer cycle given twice", line=no)
            outer, outer_line = rest.split(), no
            continue
        if head == "triangulation":
            if rest.lower() not in ("yes", "no", "true", "false"):
                raise ParseError("triangulation flag must be yes or no", line=no)
            flag = rest.lower() in ("yes", "true")
            continue
        if head in nbrs:
            raise ParseError(f"vertex {head!r} defined twice", line=no)
        labels.append(head)
        nbrs[head] = rest.split()
        lines[head] = no
    if outer is None:
        raise ParseError("missing 'outer:' line")

    def where(lab):
        return {"line": lines.get(lab, outer_line)}

    return _build(labels, nbrs, outer, flag, where)


def _parse_json(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object")
    if doc.get("format", INSTANCE_FORMAT) != INSTANCE_FORMAT:
        raise ParseError(f"expected format {INSTANCE_FORMAT!r}", field="format")
    if doc.get("version", FORMAT_VERSION) != FORMAT_VERSION:
        raise ParseError(f"unsupported version {doc.get('version')!r}", field="version")
    rot = doc.get("rotation")
    if not isinstance(rot, dict):
        raise ParseError("must map each label to its neighbour list", field="rotation")
    labels = doc.get("labels", list(rot))
    if not isinstance(labels, list) or not all(isinstance(s, str) for s in labels):
        raise ParseError("must be a list of strings", field="labels")
    if set(labels) != set(rot):
        raise ParseError("labels and rotation keys differ", field="labels")
    for lab, row in rot.items():
        if not isinstance(row, list) or not all(isinstance(s, str) for s in row):
            raise ParseError(f"neighbours of {lab!r} must be a list of labels", field=f"rotation.{lab}")
    outer = doc.get("outer")
    if not isinstance(outer, list) or not all(isinstance(s, str) for s in outer):
        raise ParseError("must be a list of labels", field="outer")
    flag = doc.get("triangulation")
    if flag is not None and not isinstance(flag, bool):
        raise ParseError("must be true or false", field="triangulation")

    def where(lab):
        return {"field": f"rotation.{lab}" if lab is not None else "outer"}

    return _build(labels, rot, outer, flag, where)


def parse_instance(data: bytes | str) -> Instance:
    """Parse JSON or text; structural problems surface as ParseError or GraphError."""
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    if text.lstrip().startswith("{"):
        return _parse_json(text)
    return _parse_text(text)


def load_instance(path) -> Instance:
    with open(path, "rb") as fh:
        return parse_instance(fh.read())


def instance_from_graph(graph: PlaneGraph, labels: Sequence[str] | None = None,
                        triangulation: bool | None = None) -> Instance:
    labels = tuple(labels) if labels is not None else tuple(str(v) for v in range(graph.n))
    if triangulation is None:
        triangulation = True if is_triangulation(graph) else None
    return Instance(graph, labels, triangulation)


def instance_to_dict(inst: Instance) -> dict:
    lab = inst.labels
    doc: dict[str, Any] = {
        "format": INSTANCE_FORMAT,
        "version": FORMAT_VERSION,
        "labels": list(lab),
        "rotation": {lab[v]: [lab[w] for w in nb] for v, nb in enumerate(inst.graph.rotation)},
        "outer": [lab[v] for v in inst.graph.outer_cycle],
    }
    if inst.triangulation is not None:
        doc["triangulation"] = inst.triangulation
    return doc


def serialize_instance(inst: Instance, text: bool = False) -> str:
    if not text:
        return dumps(instance_to_dict(inst))
    lab = inst.labels
    if any(not s or any(c.isspace() for c in s) or ":" in s or "#" in s for s in lab):
        raise ValueError("labels with whitespace, ':' or '#' cannot be written as text")
    out = [f"outer: {' '.join(lab[v] for v in inst.graph.outer_cycle)}"]
    if inst.triangulation is not None:
        out.append(f"triangulation: {'yes' if inst.triangulation else 'no'}")
    for v, nb in enumerate(inst.graph.rotation):
        out.append(f"{lab[v]}: {' '.join(lab[w] for w in nb)}")
    return "\n".join(out) + "\n"


# ----------------------------------------------------------------------
# deterministic JSON

def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    if not any(c in s for c in ".en"):
        s += ".0"
    return s


def _encode(obj: Any, indent: int, level: int) -> str:
    pad = "\n" + " " * (indent * (level + 1))
    end = "\n" + " " * (indent * level)
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if hasattr(obj, "item") and callable(obj.item):  # numpy scalars
        return _encode(obj.item(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{" + pad + ("," + pad).join(items) + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        parts = [_encode(v, indent, level + 1) for v in obj]
        # short lists of scalars stay on one line
        if all(not isinstance(v, (dict, list, tuple)) for v in obj) and len(obj) <= 8:
            return "[" + ", ".join(parts) + "]"
        return "[" + pad + ("," + pad).join(parts) + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj: Any, indent: int = 1) -> str:
    """JSON text with floats at 17 significant digits (non-finite values become null)."""
    return _encode(obj, indent, 0) + "\n"


def load_solution(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("format") != SOLUTION_FORMAT:
        raise ParseError(f"expected format {SOLUTION_FORMAT!r}", field="format")
    return doc


__all__ = [
    "ParseError", "Instance", "parse_instance", "load_instance", "instance_from_graph",
    "instance_to_dict", "serialize_instance", "dumps", "load_solution", "GraphError",
    "SOLUTION_FORMAT", "INSTANCE_FORMAT", "FORMAT_VERSION",
]
