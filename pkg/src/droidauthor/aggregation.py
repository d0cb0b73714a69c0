"""Package aggregation: merge author ids across libraries, components, circles.

Three merge passes refine the authorship function phi, in order: packages
under one known library prefix share an author, packages holding manifest
components share an author, and packages on a common directed cycle share
an author. Merges are transitive (union-find over the merge relations), so
the final same-id relation is the finest equivalence containing all three.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .bundle import ManifestInfo, PackageName
from .graph import PackageRelationGraph

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class AggregationResult:
    phi: dict  # PackageName -> author id, canonical 0..k-1
    merged_groups: tuple  # of (reason, frozenset of PackageName), reason in {library, component, circle}


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # Deterministic representative: smaller element wins.
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def _canonical_phi(nodes, uf: _UnionFind) -> dict:
    """Renumber classes 0..k-1 in sorted order of their smallest member."""
    groups: dict[PackageName, list[PackageName]] = {}
    for node in nodes:
        groups.setdefault(uf.find(node), []).append(node)
    reps = sorted(min(members) for members in groups.values())
    rep_id = {rep: i for i, rep in enumerate(reps)}
    return {node: rep_id[min(groups[uf.find(node)])] for node in nodes}


def _uf_from_phi(nodes, phi: dict) -> _UnionFind:
    uf = _UnionFind(nodes)
    by_id: dict[int, PackageName] = {}
    for node in sorted(nodes):
        if phi[node] in by_id:
            uf.union(by_id[phi[node]], node)
        else:
            by_id[phi[node]] = node
    return uf


def _library_groups(graph: PackageRelationGraph, libraries) -> dict:
    """Assign each node to its longest matching library prefix, if any."""
    prefixes = [PackageName(p.rstrip(".")) for p in libraries]
    groups: dict[PackageName, list[PackageName]] = {}
    for node in graph.nodes:
        best = None
        for prefix in prefixes:
            if node.starts_with(prefix):
                if best is None or len(prefix.segments) > len(best.segments):
                    best = prefix
        if best is not None:
            groups.setdefault(best, []).append(node)
    return groups


def merge_library_packages(graph: PackageRelationGraph, libraries, phi=None) -> dict:
    """All nodes under one library prefix share an id; distinct libraries stay distinct."""
    phi = dict(graph.phi if phi is None else phi)
    uf = _uf_from_phi(graph.nodes, phi)
    for members in _library_groups(graph, libraries).values():
        for other in members[1:]:
            uf.union(members[0], other)
    return _canonical_phi(graph.nodes, uf)


def _component_packages(graph: PackageRelationGraph, manifest: ManifestInfo) -> list:
    found = []
    for kind, class_name in manifest.components:
        if "." not in class_name:
            log.info("component %s has no package prefix, skipped", class_name)
            continue
        pkg = PackageName(class_name.rsplit(".", 1)[0])
        if not graph.has_node(pkg):
            log.info("component %s (%s) is outside the graph, skipped", class_name, kind)
            continue
        if pkg not in found:
            found.append(pkg)
    return found


def merge_component_packages(graph: PackageRelationGraph, manifest: ManifestInfo, phi=None) -> dict:
    """Packages holding any manifest component collapse into one author group."""
    phi = dict(graph.phi if phi is None else phi)
    uf = _uf_from_phi(graph.nodes, phi)
    comps = _component_packages(graph, manifest)
    for other in comps[1:]:
        uf.union(comps[0], other)
    return _canonical_phi(graph.nodes, uf)


def strongly_connected_components(vertices, successors) -> list:
    """Iterative Tarjan SCC (explicit stack; safe on deep graphs).

    ``vertices`` fixes the traversal order; ``successors`` maps a vertex to
    an iterable of its out-neighbors.
    """
    index: dict = {}
    lowlink: dict = {}
    on_stack: set = set()
    stack: list = []
    sccs: list = []
    counter = 0

    for root in vertices:
        if root in index:
            continue
        index[root] = lowlink[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        work = [(root, iter(successors(root)))]
        while work:
            v, edge_iter = work[-1]
            descended = False
            for w in edge_iter:
                if w not in index:
                    index[w] = lowlink[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(successors(w))))
                    descended = True
                    break
                if w in on_stack:
                    lowlink[v] = min(lowlink[v], index[w])
            if descended:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[v])
            if lowlink[v] == index[v]:
                scc = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    scc.append(w)
                    if w == v:
                        break
                sccs.append(scc)
    return sccs


def _contracted_sccs(graph: PackageRelationGraph, phi: dict) -> list:
    """SCCs of the graph after contracting nodes that share an author id."""
    reps: dict[int, PackageName] = {}
    for node in sorted(graph.nodes):
        reps.setdefault(phi[node], node)
    rep_of = {node: reps[phi[node]] for node in graph.nodes}

    adj: dict[PackageName, set] = {rep: set() for rep in reps.values()}
    for (u, v, _kind) in graph.edges:
        ru, rv = rep_of[u], rep_of[v]
        if ru != rv:
            adj[ru].add(rv)

    vertices = sorted(adj)
    return strongly_connected_components(vertices, lambda v: sorted(adj[v]))


def merge_circles(graph: PackageRelationGraph, phi=None) -> dict:
    """Nodes on a common directed cycle (same-id nodes contracted) share an id.

    Equivalent to: after contraction every strongly connected component has
    a single author id. One SCC pass reaches the fixpoint because the
    condensation is acyclic.
    """
    phi = dict(graph.phi if phi is None else phi)
    uf = _uf_from_phi(graph.nodes, phi)
    for scc in _contracted_sccs(graph, phi):
        for other in scc[1:]:
            uf.union(scc[0], other)
    return _canonical_phi(graph.nodes, uf)


def aggregate(graph: PackageRelationGraph, libraries, manifest: ManifestInfo) -> AggregationResult:
    """Unique ids, then library, component and circle merges, in that order."""
    merged: list[tuple[str, frozenset]] = []
    phi = {node: i for i, node in enumerate(sorted(graph.nodes))}

    lib_groups = _library_groups(graph, libraries)
    for prefix in sorted(lib_groups):
        members = lib_groups[prefix]
        if len(members) > 1:
            merged.append(("library", frozenset(members)))
    phi = merge_library_packages(graph, libraries, phi)

    comps = _component_packages(graph, manifest)
    if len(comps) > 1:
        merged.append(("component", frozenset(comps)))
    phi = merge_component_packages(graph, manifest, phi)

    before = phi
    phi = merge_circles(graph, phi)
    circle_groups: dict[int, set] = {}
    for node in graph.nodes:
        circle_groups.setdefault(phi[node], set()).add(node)
    for new_id in sorted(circle_groups):
        members = circle_groups[new_id]
        if len({before[m] for m in members}) > 1:
            merged.append(("circle", frozenset(members)))

    return AggregationResult(phi=phi, merged_groups=tuple(merged))


def partition_from_phi(phi: dict) -> frozenset:
    """Partition view of phi, for order-independent comparisons."""
    groups: dict[int, set] = {}
    for node, author in phi.items():
        groups.setdefault(author, set()).add(node)
    return frozenset(frozenset(g) for g in groups.values())
