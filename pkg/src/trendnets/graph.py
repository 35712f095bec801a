"""Per-period burst graphs: extraction from S, community detection, export.

Strictly positive entries of a burst-matrix column become the edges of that
period's graph; negative entries (sudden declines) are informative but are
not part of the displayed graph, so they ride along only in the JSON export
under a separate list. Communities come from greedy modularity optimization
(local moving plus aggregation passes, resolution fixed at 1.0), with ties
broken toward the lowest community id so output is reproducible.
"""

from __future__ import annotations

import json
import re
import xml.etree.ElementTree as ET
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import VocabularyIndex
from .decomp import DecompositionResult
from .errors import ConfigurationError

RESOLUTION = 1.0
FORMATS = ("graphml", "dot", "json")


@dataclass
class BurstGraph:
    period: int
    nodes: dict[int, str]  # word id -> display label
    edges: dict[tuple[int, int], float]  # canonical (i, j) -> positive weight
    declines: dict[tuple[int, int], float] = field(default_factory=dict)
    communities: dict[int, int] = field(default_factory=dict)
    modularity: float = 0.0

    @property
    def num_nodes(self) -> int:
        return len(self.nodes)

    @property
    def num_edges(self) -> int:
        return len(self.edges)


def modularity(edges: dict[tuple[int, int], float], partition: dict[int, int]) -> float:
    """Weighted Newman modularity of a node-to-community assignment."""
    m = sum(edges.values())
    if m == 0:
        return 0.0
    degree: dict[int, float] = defaultdict(float)
    internal = 0.0
    for (i, j), w in edges.items():
        degree[i] += w
        degree[j] += w
        if partition[i] == partition[j]:
            internal += w
    total: dict[int, float] = defaultdict(float)
    for node, com in partition.items():
        total[com] += degree[node]
    return internal / m - RESOLUTION * sum((d / (2 * m)) ** 2 for d in total.values())


class _Aggregate:
    """Working graph for one Louvain level; may contain self-loops."""

    def __init__(self, adj: dict[int, dict[int, float]]):
        self.adj = adj
        self.nodes = sorted(adj)
        self.degree = {
            n: sum(w for nbr, w in adj[n].items() if nbr != n) + 2.0 * adj[n].get(n, 0.0)
            for n in self.nodes
        }
        self.total_weight = sum(
            w for n in self.nodes for nbr, w in self.adj[n].items() if nbr >= n
        )


def _local_moving(
    graph: _Aggregate, order: list[int], init: dict[int, int] | None = None
) -> tuple[dict[int, int], bool]:
    node2com = dict(init) if init is not None else {n: n for n in graph.nodes}
    com_total: dict[int, float] = defaultdict(float)
    for n in graph.nodes:
        com_total[node2com[n]] += graph.degree[n]
    two_m = 2.0 * graph.total_weight
    moved_any = False
    improved = True
    while improved:
        improved = False
        for node in order:
            com_old = node2com[node]
            k_node = graph.degree[node]
            com_total[com_old] -= k_node
            links: dict[int, float] = defaultdict(float)
            links[com_old] += 0.0
            for nbr, w in graph.adj[node].items():
                if nbr != node:
                    links[node2com[nbr]] += w

            def gain_of(com: int) -> float:
                return links[com] - RESOLUTION * com_total[com] * k_node / two_m

            # lowest community id wins ties; moving requires a strict gain
            # over staying, so every move raises modularity and the pass
            # loop terminates
            best_com = max(sorted(links), key=lambda c: (gain_of(c), -c))
            if gain_of(best_com) <= gain_of(com_old):
                best_com = com_old
            node2com[node] = best_com
            com_total[best_com] += k_node
            if best_com != com_old:
                improved = True
                moved_any = True
    return node2com, moved_any


def _aggregate(graph: _Aggregate, node2com: dict[int, int]) -> tuple[_Aggregate, dict[int, int]]:
    members: dict[int, list[int]] = defaultdict(list)
    for node, com in node2com.items():
        members[com].append(node)
    relabel = {
        com: rank
        for rank, com in enumerate(sorted(members, key=lambda c: min(members[c])))
    }
    adj: dict[int, dict[int, float]] = defaultdict(lambda: defaultdict(float))
    for n in graph.nodes:
        cn = relabel[node2com[n]]
        for nbr, w in graph.adj[n].items():
            cm = relabel[node2com[nbr]]
            if nbr > n:
                adj[cn][cm] += w
                adj[cm][cn] += w if cn != cm else 0.0
            elif nbr == n:
                adj[cn][cn] += w
        adj[cn]  # ensure isolated communities keep their entry
    plain = {n: dict(nbrs) for n, nbrs in adj.items()}
    return _Aggregate(plain), relabel


@dataclass
class LouvainResult:
    communities: dict[int, int]
    modularity: float
    pass_modularities: list[float]


def _louvain_once(
    edges: dict[tuple[int, int], float],
    nodes: list[int],
    adj: dict[int, dict[int, float]],
    rng: np.random.Generator,
) -> tuple[dict[int, int], list[float]]:
    graph0 = _Aggregate(adj)
    assignment = {n: n for n in nodes}  # original node -> community label
    trace: list[float] = []
    while True:
        improved = False
        # refinement: single-node moves on the original graph starting from
        # the current partition, so nodes can escape an aggregated block
        order = list(graph0.nodes)
        rng.shuffle(order)
        assignment, moved = _local_moving(graph0, order, init=assignment)
        improved |= moved
        level, relabel = _aggregate(graph0, assignment)
        assignment = {n: relabel[assignment[n]] for n in nodes}
        trace.append(modularity(edges, assignment))
        # greedy climb: aggregate communities and move them as blocks
        while True:
            order = list(level.nodes)
            rng.shuffle(order)
            node2com, moved = _local_moving(level, order)
            if not moved:
                break
            improved = True
            level, relabel = _aggregate(level, node2com)
            assignment = {n: relabel[node2com[assignment[n]]] for n in nodes}
            trace.append(modularity(edges, assignment))
        if not improved:
            break
    return assignment, trace


def louvain(
    edges: dict[tuple[int, int], float], seed: int = 0, restarts: int = 8
) -> LouvainResult:
    """Greedy modularity communities for a weighted undirected edge dict.

    Runs the local-moving/aggregation scheme several times with different
    seeded node orders and keeps the best partition (first hit wins exact
    modularity ties). Deterministic for a fixed seed: orders come from one
    seeded generator, every in-pass tie breaks toward the lowest community
    id, and aggregated communities are renumbered by their smallest member.
    Community ids in the result are dense, ordered by each community's
    smallest node.
    """
    nodes = sorted({n for e in edges for n in e})
    if not nodes:
        return LouvainResult(communities={}, modularity=0.0, pass_modularities=[])
    adj: dict[int, dict[int, float]] = {n: {} for n in nodes}
    for (i, j), w in edges.items():
        if w <= 0:
            raise ConfigurationError(f"edge ({i}, {j}) has non-positive weight {w}")
        adj[i][j] = adj[i].get(j, 0.0) + w
        adj[j][i] = adj[j].get(i, 0.0) + w
    rng = np.random.default_rng(seed)

    best: tuple[float, dict[int, int], list[float]] | None = None
    for _ in range(max(restarts, 1)):
        assignment, trace = _louvain_once(edges, nodes, adj, rng)
        q = modularity(edges, assignment)
        if best is None or q > best[0]:
            best = (q, assignment, trace)
    final = _canonical_communities(best[1])
    return LouvainResult(
        communities=final,
        modularity=modularity(edges, final),
        pass_modularities=best[2],
    )


def _canonical_communities(assignment: dict[int, int]) -> dict[int, int]:
    members: dict[int, list[int]] = defaultdict(list)
    for node, com in assignment.items():
        members[com].append(node)
    order = sorted(members, key=lambda c: min(members[c]))
    relabel = {com: rank for rank, com in enumerate(order)}
    return {node: relabel[com] for node, com in sorted(assignment.items())}


def cluster(graph: BurstGraph, seed: int = 0) -> BurstGraph:
    """Assign communities and modularity in place; empty graphs stay empty."""
    if not graph.edges:
        graph.communities = {}
        graph.modularity = 0.0
        return graph
    result = louvain(graph.edges, seed=seed)
    graph.communities = result.communities
    graph.modularity = result.modularity
    return graph


def extract_graph(
    result: DecompositionResult,
    period: int,
    vocab: VocabularyIndex | None = None,
    labels: dict[int, str] | None = None,
    seed: int = 0,
) -> BurstGraph:
    """Build the burst graph of one 1-based period from a decomposition."""
    T = result.S.shape[1]
    if not 1 <= period <= T:
        raise ConfigurationError(f"period {period} outside 1..{T}")
    if result.pairs is None:
        raise ConfigurationError("decomposition carries no pair table")
    column = result.S[:, period - 1]
    edges: dict[tuple[int, int], float] = {}
    declines: dict[tuple[int, int], float] = {}
    for row in np.nonzero(column)[0]:
        i, j = (int(v) for v in result.pairs[row])
        value = float(column[row])
        if value > 0:
            edges[(i, j)] = value
        else:
            declines[(i, j)] = value
    node_ids = sorted({n for e in edges for n in e})

    def label_of(word_id: int) -> str:
        if labels and word_id in labels:
            return labels[word_id]
        if vocab is not None:
            return vocab.label(word_id)
        return str(word_id)

    graph = BurstGraph(
        period=period,
        nodes={n: label_of(n) for n in node_ids},
        edges=edges,
        declines=declines,
    )
    return cluster(graph, seed=seed)


# --- persistence ---------------------------------------------------------

_GRAPHML_NS = "http://graphml.graphdrawing.org/xmlns"


def export_graph(graph: BurstGraph, path: str | Path, format: str) -> Path:
    """Write one burst graph as graphml, dot or json."""
    if format not in FORMATS:
        raise ConfigurationError(f"unknown format {format!r}; choose from {FORMATS}")
    path = Path(path)
    if format == "json":
        path.write_text(_to_json(graph), "utf-8")
    elif format == "graphml":
        path.write_text(_to_graphml(graph), "utf-8")
    else:
        path.write_text(_to_dot(graph), "utf-8")
    return path


def load_graph(path: str | Path, format: str | None = None) -> BurstGraph:
    """Re-import a graph written by export_graph."""
    path = Path(path)
    format = format or path.suffix.lstrip(".")
    if format not in FORMATS:
        raise ConfigurationError(f"unknown format {format!r}; choose from {FORMATS}")
    text = path.read_text("utf-8")
    if format == "json":
        return _from_json(text)
    if format == "graphml":
        return _from_graphml(text)
    return _from_dot(text)


def export_periods(
    graphs: list[BurstGraph], out_dir: str | Path, format: str
) -> list[Path]:
    """Write trendnets_<period>.<ext> files for every graph."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return [
        export_graph(g, out_dir / f"trendnets_{g.period}.{format}", format)
        for g in graphs
    ]


def _to_json(graph: BurstGraph) -> str:
    payload = {
        "period": graph.period,
        "modularity": graph.modularity,
        "nodes": [
            {"id": n, "label": graph.nodes[n], "community": graph.communities.get(n, 0)}
            for n in sorted(graph.nodes)
        ],
        "edges": [
            {"source": i, "target": j, "weight": w}
            for (i, j), w in sorted(graph.edges.items())
        ],
        "declines": [
            {"source": i, "target": j, "weight": w}
            for (i, j), w in sorted(graph.declines.items())
        ],
    }
    return json.dumps(payload, indent=2) + "\n"


def _from_json(text: str) -> BurstGraph:
    payload = json.loads(text)
    return BurstGraph(
        period=int(payload["period"]),
        nodes={int(n["id"]): n["label"] for n in payload["nodes"]},
        edges={
            (int(e["source"]), int(e["target"])): float(e["weight"])
            for e in payload["edges"]
        },
        declines={
            (int(e["source"]), int(e["target"])): float(e["weight"])
            for e in payload.get("declines", [])
        },
        communities={int(n["id"]): int(n["community"]) for n in payload["nodes"]},
        modularity=float(payload["modularity"]),
    )


def _to_graphml(graph: BurstGraph) -> str:
    root = ET.Element("graphml", xmlns=_GRAPHML_NS)
    for key_id, target, attr_type in (
        ("label", "node", "string"),
        ("community", "node", "int"),
        ("weight", "edge", "double"),
        ("period", "graph", "int"),
        ("modularity", "graph", "double"),
    ):
        ET.SubElement(
            root,
            "key",
            id=key_id,
            attrib={"for": target, "attr.name": key_id, "attr.type": attr_type},
        )
    g = ET.SubElement(
        root, "graph", id=f"trendnets_{graph.period}", edgedefault="undirected"
    )
    ET.SubElement(g, "data", key="period").text = str(graph.period)
    ET.SubElement(g, "data", key="modularity").text = repr(graph.modularity)
    for n in sorted(graph.nodes):
        node = ET.SubElement(g, "node", id=f"n{n}")
        ET.SubElement(node, "data", key="label").text = graph.nodes[n]
        ET.SubElement(node, "data", key="community").text = str(
            graph.communities.get(n, 0)
        )
    for (i, j), w in sorted(graph.edges.items()):
        edge = ET.SubElement(g, "edge", source=f"n{i}", target=f"n{j}")
        ET.SubElement(edge, "data", key="weight").text = repr(w)
    ET.indent(root)
    return ET.tostring(root, encoding="unicode", xml_declaration=True) + "\n"


def _from_graphml(text: str) -> BurstGraph:
    ns = {"g": _GRAPHML_NS}
    root = ET.fromstring(text)
    g = root.find("g:graph", ns)
    if g is None:
        raise ValueError("no <graph> element found")

    def data_of(element, key):
        for d in element.findall("g:data", ns):
            if d.get("key") == key:
                return d.text or ""
        return None

    period = int(data_of(g, "period") or 0)
    mod = float(data_of(g, "modularity") or 0.0)
    nodes: dict[int, str] = {}
    communities: dict[int, int] = {}
    for node in g.findall("g:node", ns):
        nid = int(node.get("id").lstrip("n"))
        nodes[nid] = data_of(node, "label") or ""
        communities[nid] = int(data_of(node, "community") or 0)
    edges: dict[tuple[int, int], float] = {}
    for edge in g.findall("g:edge", ns):
        i = int(edge.get("source").lstrip("n"))
        j = int(edge.get("target").lstrip("n"))
        edges[(i, j)] = float(data_of(edge, "weight"))
    return BurstGraph(
        period=period,
        nodes=nodes,
        edges=edges,
        communities=communities,
        modularity=mod,
    )


def _dot_quote(value: str) -> str:
    return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _to_dot(graph: BurstGraph) -> str:
    lines = [f"graph trendnets_{graph.period} {{"]
    lines.append(f"  graph [period={graph.period}, modularity={_dot_quote(repr(graph.modularity))}];")
    for n in sorted(graph.nodes):
        label = _dot_quote(graph.nodes[n])
        community = graph.communities.get(n, 0)
        lines.append(f"  n{n} [label={label}, community={community}];")
    for (i, j), w in sorted(graph.edges.items()):
        lines.append(f"  n{i} -- n{j} [weight={_dot_quote(repr(w))}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


_DOT_HEADER = re.compile(r"graph trendnets_(\d+) \{")
_DOT_GRAPH = re.compile(r'graph \[period=(\d+), modularity="([^"]*)"\];')
_DOT_NODE = re.compile(r'n(\d+) \[label="((?:[^"\\]|\\.)*)", community=(\d+)\];')
_DOT_EDGE = re.compile(r'n(\d+) -- n(\d+) \[weight="([^"]*)"\];')


def _from_dot(text: str) -> BurstGraph:
    header = _DOT_HEADER.search(text)
    if header is None:
        raise ValueError("not a graph written by this exporter")
    period = int(header.group(1))
    mod_match = _DOT_GRAPH.search(text)
    mod = float(mod_match.group(2)) if mod_match else 0.0
    nodes: dict[int, str] = {}
    communities: dict[int, int] = {}
    for m in _DOT_NODE.finditer(text):
        nid = int(m.group(1))
        label = m.group(2).replace('\\"', '"').replace("\\\\", "\\")
        nodes[nid] = label
        communities[nid] = int(m.group(3))
    edges = {
        (int(m.group(1)), int(m.group(2))): float(m.group(3))
        for m in _DOT_EDGE.finditer(text)
    }
    return BurstGraph(
        period=period,
        nodes=nodes,
        edges=edges,
        communities=communities,
        modularity=mod,
    )
