"""Call-graph similarity via approximate graph edit distance.

Graphs decompose into one star per node (the node's label plus the multiset of
its neighbors' labels); a minimum-cost assignment between the two star
multisets yields a lower bound on the edit distance, and the node mapping that
assignment induces yields an upper bound. The dissimilarity score normalizes
the upper bound by combined graph size so a single threshold works across
graph sizes. An exhaustive-search exact distance (small graphs only) serves as
the test oracle.
"""

from __future__ import annotations

import warnings
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .nn import ReplicaModel

EXACT_GED_MAX_NODES = 8


@dataclass(frozen=True)
class CallGraph:
    """Directed labeled graph of function call sites."""

    nodes: tuple[tuple[str, str], ...]
    edges: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        ids = [nid for nid, _ in self.nodes]
        if len(set(ids)) != len(ids):
            raise ValueError("node ids must be unique")
        known = set(ids)
        for u, v in self.edges:
            if u not in known or v not in known:
                raise ValueError(f"edge ({u!r}, {v!r}) references an unknown node")
        if len(set(self.edges)) != len(self.edges):
            raise ValueError("duplicate edges are not allowed")

    @classmethod
    def build(
        cls, nodes: Iterable[tuple[str, str]], edges: Iterable[tuple[str, str]] = ()
    ) -> "CallGraph":
        return cls(
            nodes=tuple((str(i), str(l)) for i, l in nodes),
            edges=tuple((str(u), str(v)) for u, v in edges),
        )

    @classmethod
    def from_dict(cls, doc: dict) -> "CallGraph":
        """Parse the interchange format; unknown fields are ignored."""
        if not isinstance(doc, dict):
            raise ValueError("call-graph document must be a JSON object")
        raw_nodes = doc.get("nodes")
        if not isinstance(raw_nodes, list):
            raise ValueError("call-graph document needs a 'nodes' list")
        nodes = []
        for entry in raw_nodes:
            if not isinstance(entry, dict) or "id" not in entry or "label" not in entry:
                raise ValueError("each node needs 'id' and 'label'")
            nodes.append((str(entry["id"]), str(entry["label"])))
        raw_edges = doc.get("edges", [])
        if not isinstance(raw_edges, list):
            raise ValueError("'edges' must be a list of [caller, callee] pairs")
        edges = []
        for pair in raw_edges:
            if not isinstance(pair, (list, tuple)) or len(pair) != 2:
                raise ValueError("each edge must be a [caller, callee] pair")
            edges.append((str(pair[0]), str(pair[1])))
        return cls(nodes=tuple(nodes), edges=tuple(edges))

    def to_dict(self) -> dict:
        return {
            "nodes": [{"id": nid, "label": label} for nid, label in self.nodes],
            "edges": [[u, v] for u, v in self.edges],
        }

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    def labels(self) -> dict[str, str]:
        return dict(self.nodes)

    def neighbors(self) -> dict[str, set[str]]:
        """Adjacent node ids, direction ignored; self-loops count the node itself."""
        adj: dict[str, set[str]] = {nid: set() for nid, _ in self.nodes}
        for u, v in self.edges:
            adj[u].add(v)
            adj[v].add(u)
        return adj

    def max_degree(self) -> int:
        adj = self.neighbors()
        return max((len(s) for s in adj.values()), default=0)

    def sort_key(self) -> tuple:
        return (self.n_nodes, self.n_edges, tuple(sorted(self.nodes)), tuple(sorted(self.edges)))


@dataclass(frozen=True)
class StarStructure:
    """A node's label plus the multiset of its neighbors' labels (sorted)."""

    root_label: str | None
    neighbor_labels: tuple[str, ...]

    def counter(self) -> Counter:
        return Counter(self.neighbor_labels)


_DUMMY_STAR = StarStructure(root_label=None, neighbor_labels=())


@dataclass(frozen=True)
class DissimilarityResult:
    ged_lower: float
    ged_upper: float
    ds: float

    def __post_init__(self) -> None:
        if self.ged_lower > self.ged_upper:
            raise ValueError("ged_lower cannot exceed ged_upper")
        if not 0.0 <= self.ds <= 1.0:
            raise ValueError("ds must lie in [0, 1]")


def star_decomposition(g: CallGraph) -> tuple[StarStructure, ...]:
    """One star per node, in node order."""
    labels = g.labels()
    adj = g.neighbors()
    return tuple(
        StarStructure(
            root_label=label,
            neighbor_labels=tuple(sorted(labels[n] for n in adj[nid])),
        )
        for nid, label in g.nodes
    )


def star_edit_distance(s1: StarStructure, s2: StarStructure) -> int:
    """Relabel-plus-neighborhood distance between two stars; zero iff identical."""
    t = 0 if s1.root_label == s2.root_label else 1
    c1, c2 = s1.counter(), s2.counter()
    n1, n2 = len(s1.neighbor_labels), len(s2.neighbor_labels)
    overlap = sum((c1 & c2).values())
    return t + abs(n1 - n2) + max(n1, n2) - overlap


def _assignment(g1: CallGraph, g2: CallGraph) -> tuple[float, list[int], int]:
    """Min-cost star matching; returns (cost, mapping of g1-slot -> g2-slot, size)."""
    stars1 = list(star_decomposition(g1))
    stars2 = list(star_decomposition(g2))
    size = max(len(stars1), len(stars2), 1)
    stars1 += [_DUMMY_STAR] * (size - len(stars1))
    stars2 += [_DUMMY_STAR] * (size - len(stars2))
    cost = np.zeros((size, size))
    for i, s1 in enumerate(stars1):
        for j, s2 in enumerate(stars2):
            cost[i, j] = star_edit_distance(s1, s2)
    rows, cols = linear_sum_assignment(cost)
    mapping = [0] * size
    for r, c in zip(rows, cols):
        mapping[r] = int(c)
    return float(cost[rows, cols].sum()), mapping, size


def _mapping_edit_cost(g1: CallGraph, g2: CallGraph, mapping: Sequence[int]) -> int:
    """Exact unit-cost of the edit path induced by a padded node mapping."""
    ids1 = [nid for nid, _ in g1.nodes]
    ids2 = [nid for nid, _ in g2.nodes]
    labels1, labels2 = g1.labels(), g2.labels()
    image: dict[str, str] = {}
    cost = 0
    used2: set[str] = set()
    for slot, target in enumerate(mapping):
        real1 = slot < len(ids1)
        real2 = target < len(ids2)
        if real1 and real2:
            u, v = ids1[slot], ids2[target]
            image[u] = v
            used2.add(v)
            if labels1[u] != labels2[v]:
                cost += 1
        elif real1:
            cost += 1  # node deletion
        elif real2:
            used2.add(ids2[target])
            cost += 1  # node insertion
    edges2 = set(g2.edges)
    preserved = sum(
        1
        for u, v in g1.edges
        if u in image and v in image and (image[u], image[v]) in edges2
    )
    cost += g1.n_edges + g2.n_edges - 2 * preserved
    return cost


def ged_bounds(g1: CallGraph, g2: CallGraph) -> tuple[float, float]:
    """(lower, upper) bracket of the graph edit distance, polynomial time.

    Lower: the star-matching cost divided by ``max(4, 1 + max degree)``.
    Upper: the edit cost of the node mapping the matching induces.
    Identical graphs short-circuit to (0, 0); an arbitrary optimal matching
    could otherwise permute equal stars and inflate the upper bound.
    """
    if g1.sort_key() == g2.sort_key():
        return 0.0, 0.0
    zeta, mapping, _ = _assignment(g1, g2)
    denom = max(4, 1 + max(g1.max_degree(), g2.max_degree()))
    lower = zeta / denom
    upper = float(_mapping_edit_cost(g1, g2, mapping))
    return min(lower, upper), upper


def exact_ged(g1: CallGraph, g2: CallGraph) -> int:
    """Exact edit distance by exhaustive mapping search; graphs capped at 8 nodes.

    Unit costs for node insert/delete/relabel and directed edge insert/delete.
    Kept independent of the approximation so it can serve as its oracle.
    """
    for g in (g1, g2):
        if g.n_nodes > EXACT_GED_MAX_NODES:
            raise ValueError(
                f"exact_ged supports at most {EXACT_GED_MAX_NODES} nodes per graph"
            )
    n1, n2 = g1.n_nodes, g2.n_nodes
    ids1 = [nid for nid, _ in g1.nodes]
    ids2 = [nid for nid, _ in g2.nodes]
    l1 = [label for _, label in g1.nodes]
    l2 = [label for _, label in g2.nodes]
    index1 = {nid: i for i, nid in enumerate(ids1)}
    index2 = {nid: i for i, nid in enumerate(ids2)}
    # adjacency as bitmasks: out_edges[i] bit j set iff i -> j
    out1 = [0] * n1
    for u, v in g1.edges:
        out1[index1[u]] |= 1 << index1[v]
    out2 = [0] * n2
    for u, v in g2.edges:
        out2[index2[u]] |= 1 << index2[v]

    best = n1 + n2 + g1.n_edges + g2.n_edges  # delete everything, insert everything
    if n1 == 0 or n2 == 0:
        return best

    DEL = -1
    assign = [DEL] * n1

    def edge_mismatch(i: int, v: int) -> int:
        """Pairwise directed-edge disagreements of mapping node i -> v (or DEL)."""
        miss = 0
        for j in range(i):
            w = assign[j]
            e1_ij = (out1[i] >> j) & 1
            e1_ji = (out1[j] >> i) & 1
            if v != DEL and w != DEL:
                e2 = (out2[v] >> w) & 1
                e2r = (out2[w] >> v) & 1
            else:
                e2 = e2r = 0
            miss += (e1_ij ^ e2) + (e1_ji ^ e2r)
        if v != DEL:
            miss += ((out1[i] >> i) & 1) ^ ((out2[v] >> v) & 1)
        else:
            miss += (out1[i] >> i) & 1
        return miss

    popcount = int.bit_count  # python >= 3.10

    def finish_cost(used_mask: int) -> int:
        """Insertions for unused g2 nodes plus every g2 edge touching one."""
        full = (1 << n2) - 1
        unused_mask = ~used_mask & full
        cost = popcount(unused_mask)
        for v in range(n2):
            if (unused_mask >> v) & 1:
                cost += popcount(out2[v])
            else:
                cost += popcount(out2[v] & unused_mask)
        return cost

    def dfs(i: int, used_mask: int, cost: int) -> None:
        nonlocal best
        if cost >= best:
            return
        if i == n1:
            total = cost + finish_cost(used_mask)
            if total < best:
                best = total
            return
        remaining1 = n1 - i
        unused2 = n2 - popcount(used_mask)
        if cost + abs(remaining1 - unused2) >= best:
            return
        for v in range(n2):
            if (used_mask >> v) & 1:
                continue
            step = (0 if l1[i] == l2[v] else 1) + edge_mismatch(i, v)
            if cost + step < best:
                assign[i] = v
                dfs(i + 1, used_mask | (1 << v), cost + step)
        assign[i] = DEL
        step = 1 + edge_mismatch(i, DEL)
        if cost + step < best:
            dfs(i + 1, used_mask, cost + step)
        assign[i] = DEL

    dfs(0, 0, 0)
    return best


def dissimilarity_score(g1: CallGraph, g2: CallGraph) -> DissimilarityResult:
    """Size-normalized similarity score; 0 for identical graphs, symmetric.

    Symmetry is exact because the pair is canonically ordered before matching.
    """
    total = g1.n_nodes + g2.n_nodes + g1.n_edges + g2.n_edges
    if total == 0:
        warnings.warn("dissimilarity of two empty graphs defaults to 0", stacklevel=2)
        return DissimilarityResult(ged_lower=0.0, ged_upper=0.0, ds=0.0)
    if g2.sort_key() < g1.sort_key():
        g1, g2 = g2, g1
    lower, upper = ged_bounds(g1, g2)
    ds = min(1.0, max(0.0, upper / total))
    return DissimilarityResult(ged_lower=lower, ged_upper=upper, ds=ds)


@dataclass(frozen=True)
class RegistryEntry:
    application_id: str
    call_graph: CallGraph
    model: ReplicaModel | None = None


@dataclass(frozen=True)
class SimilarCandidate:
    application_id: str
    ds: float
    call_graph: CallGraph
    model: ReplicaModel | None


@dataclass
class ModelRegistry:
    """Registered applications, their call graphs, and (optionally) their models.

    Reads are safe to share; registration follows a single-writer contract.
    """

    entries: list[RegistryEntry] = field(default_factory=list)
    threshold: float = 0.2

    def __post_init__(self) -> None:
        if not 0.0 <= self.threshold <= 1.0:
            raise ValueError("threshold must lie in [0, 1]")
        ids = [e.application_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("application ids must be unique")

    def register(self, entry: RegistryEntry) -> None:
        if any(e.application_id == entry.application_id for e in self.entries):
            raise ValueError(f"application {entry.application_id!r} already registered")
        self.entries.append(entry)

    def get(self, application_id: str) -> RegistryEntry | None:
        for entry in self.entries:
            if entry.application_id == application_id:
                return entry
        return None


def find_similar(reg: ModelRegistry, g: CallGraph) -> list[SimilarCandidate]:
    """Registry entries under the threshold, most similar first.

    The returned order is the order in which borrowed models should be tried;
    ties preserve registration order.
    """
    scored = []
    for idx, entry in enumerate(reg.entries):
        ds = dissimilarity_score(entry.call_graph, g).ds
        scored.append((ds, idx, entry))
    scored.sort(key=lambda item: (item[0], item[1]))
    return [
        SimilarCandidate(
            application_id=entry.application_id,
            ds=ds,
            call_graph=entry.call_graph,
            model=entry.model,
        )
        for ds, _, entry in scored
        if ds < reg.threshold
    ]
