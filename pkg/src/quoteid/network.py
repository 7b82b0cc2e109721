"""Directed character dialogue network: speaker -> addressee edges weighted by
how often one character addresses the other, nodes sized by quotations spoken.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import asdict, dataclass
from pathlib import Path
from xml.sax.saxutils import escape, quoteattr

from .corpus import Corpus, Stance
from .errors import ConfigError, InputError, ResolutionError

STANCE_COLORS = {
    Stance.PROTAGONIST.value: "darksalmon",
    Stance.VILLAIN.value: "aquamarine",
    Stance.UNKNOWN.value: "lightgray",
}

SMOOTHERS = {
    "log1p": math.log1p,
    "sqrt": math.sqrt,
    "identity": float,
}


@dataclass(frozen=True)
class Node:
    character_id: str
    name: str
    quote_count: int
    size: float
    stance: str = "unknown"

    @property
    def color(self) -> str:
        return STANCE_COLORS.get(self.stance, STANCE_COLORS["unknown"])


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    count: int
    weight: float


@dataclass(frozen=True)
class DialogueNetwork:
    nodes: tuple[Node, ...]
    edges: tuple[Edge, ...]

    def node(self, character_id: str) -> Node:
        for n in self.nodes:
            if n.character_id == character_id:
                return n
        raise KeyError(character_id)

    def edge(self, source: str, target: str) -> Edge | None:
        for e in self.edges:
            if e.source == source and e.target == target:
                return e
        return None

    def to_json(self):
        return {"nodes": [asdict(n) for n in self.nodes], "edges": [asdict(e) for e in self.edges]}

    @classmethod
    def from_json(cls, obj):
        return cls(tuple(Node(**n) for n in obj["nodes"]), tuple(Edge(**e) for e in obj["edges"]))


def smooth(counts, method: str = "log1p") -> list[float]:
    """Monotone transform of non-negative counts; maps 0 to 0."""
    try:
        fn = SMOOTHERS[method]
    except KeyError:
        raise ConfigError(f"unknown smoothing {method!r}; choose from {sorted(SMOOTHERS)}") from None
    out = []
    for c in counts:
        if c < 0:
            raise InputError(f"negative count {c}")
        out.append(fn(c))
    return out


def build_network(corpus: Corpus, top_k: int | None = 10, smoothing: str = "log1p") -> DialogueNetwork:
    """Keep the ``top_k`` characters by quotations spoken (ties by id) and the
    edges among them. A quotation with m retained addressees adds m edge
    increments. ``top_k=None`` keeps everyone.
    """
    chars = corpus.characters
    offenders = []
    for q in corpus.quotations:
        for role, m in [("speaker", q.speaker)] + [("addressee", a) for a in q.addressees]:
            if m.character_id is None or m.character_id not in chars:
                offenders.append(f"{q.id}:{role}:{m.surface}")
    if offenders:
        raise ResolutionError(f"{len(offenders)} unresolved speaker/addressee mentions", offenders)

    spoken = Counter()
    involved = set()
    pairs = Counter()
    for q in corpus.quotations:
        spoken[q.speaker.character_id] += 1
        involved.add(q.speaker.character_id)
        for cid in q.addressee_ids:
            involved.add(cid)
            pairs[(q.speaker.character_id, cid)] += 1

    ranked = sorted(involved, key=lambda c: (-spoken[c], c))
    if top_k is not None:
        if top_k < 0:
            raise ConfigError("top_k must be non-negative")
        ranked = ranked[:top_k]
    kept = set(ranked)

    sizes = smooth([spoken[c] for c in ranked], smoothing)
    nodes = tuple(
        Node(c, chars[c].canonical_name, spoken[c], size, chars[c].stance.value)
        for c, size in zip(ranked, sizes)
    )
    edge_pairs = sorted(p for p in pairs if p[0] in kept and p[1] in kept)
    weights = smooth([pairs[p] for p in edge_pairs], smoothing)
    edges = tuple(Edge(s, t, pairs[(s, t)], w) for (s, t), w in zip(edge_pairs, weights))
    return DialogueNetwork(nodes, edges)


# ---------------------------------------------------------------- export


def _f(x: float) -> str:
    return f"{x:.4f}"


def _dot_id(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(net: DialogueNetwork) -> str:
    lines = ["digraph dialogue {", "  node [style=filled];"]
    for n in net.nodes:
        lines.append(
            f"  {_dot_id(n.character_id)} [label={_dot_id(n.name)}, size={_dot_id(_f(n.size))}, "
            f"quote_count={n.quote_count}, stance={_dot_id(n.stance)}, fillcolor={_dot_id(n.color)}];"
        )
    for e in net.edges:
        lines.append(
            f"  {_dot_id(e.source)} -> {_dot_id(e.target)} "
            f"[weight={_dot_id(_f(e.weight))}, count={e.count}, penwidth={_dot_id(_f(e.weight))}];"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_graphml(net: DialogueNetwork) -> str:
    keys = [
        ("d0", "node", "label", "string"),
        ("d1", "node", "size", "double"),
        ("d2", "node", "quote_count", "int"),
        ("d3", "node", "stance", "string"),
        ("d4", "node", "color", "string"),
        ("d5", "edge", "weight", "double"),
        ("d6", "edge", "count", "int"),
    ]
    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">']
    for kid, dom, name, typ in keys:
        out.append(f'  <key id="{kid}" for="{dom}" attr.name="{name}" attr.type="{typ}"/>')
    out.append('  <graph id="dialogue" edgedefault="directed">')
    for n in net.nodes:
        out.append(f"    <node id={quoteattr(n.character_id)}>")
        for kid, val in (("d0", escape(n.name)), ("d1", _f(n.size)), ("d2", str(n.quote_count)),
                         ("d3", escape(n.stance)), ("d4", n.color)):
            out.append(f'      <data key="{kid}">{val}</data>')
        out.append("    </node>")
    for e in net.edges:
        out.append(f"    <edge source={quoteattr(e.source)} target={quoteattr(e.target)}>")
        out.append(f'      <data key="d5">{_f(e.weight)}</data>')
        out.append(f'      <data key="d6">{e.count}</data>')
        out.append("    </edge>")
    out.append("  </graph>")
    out.append("</graphml>")
    return "\n".join(out) + "\n"


def export_network(net: DialogueNetwork, fmt: str, path) -> Path:
    if fmt == "dot":
        body = to_dot(net)
    elif fmt == "graphml":
        body = to_graphml(net)
    elif fmt == "json":
        body = json.dumps(net.to_json(), ensure_ascii=False, indent=2) + "\n"
    else:
        raise ConfigError(f"unknown network format {fmt!r}")
    path = Path(path)
    path.write_text(body, encoding="utf-8")
    return path


def load_network_json(path) -> DialogueNetwork:
    return DialogueNetwork.from_json(json.loads(Path(path).read_text(encoding="utf-8")))
