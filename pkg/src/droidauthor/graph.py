"""Package relation graph: weighted directed multigraph over an app's packages.

Nodes are the app's non-framework packages; edges carry per-kind counts for
call, inheritance and ICC relations; ``phi`` maps each package to an author
id (one distinct id per node right after construction).
"""

from __future__ import annotations

from dataclasses import dataclass

from .bundle import AppBundle, PackageName


class GraphError(Exception):
    pass


class EmptyGraph(GraphError):
    """No in-scope packages remain after framework filtering."""


class UnknownNode(GraphError):
    pass


@dataclass(frozen=True)
class EdgeWeights:
    """Per-kind relation counts for one ordered package pair."""

    n_call: int = 0
    n_inherit: int = 0
    n_icc: int = 0

    @property
    def total(self) -> int:
        return self.n_call + self.n_inherit + self.n_icc


@dataclass(frozen=True)
class PackageRelationGraph:
    nodes: tuple[PackageName, ...]
    edges: dict  # (u, v, kind) -> count, endpoints in nodes, u != v
    phi: dict  # PackageName -> author id

    def has_node(self, pkg: PackageName) -> bool:
        return pkg in self.phi

    def out_neighbors(self, u: PackageName) -> set[PackageName]:
        return {v for (a, v, _k) in self.edges if a == u}

    def successors(self) -> dict:
        """Adjacency map u -> set of v with any edge u->v."""
        adj: dict[PackageName, set[PackageName]] = {u: set() for u in self.nodes}
        for (u, v, _kind) in self.edges:
            adj[u].add(v)
        return adj


def is_framework_package(pkg: PackageName, framework_prefixes) -> bool:
    for prefix in framework_prefixes:
        if pkg.starts_with(PackageName(prefix.rstrip("."))):
            return True
    return False


def build_graph(bundle: AppBundle, framework_prefixes) -> PackageRelationGraph:
    """Build the relation graph for one app.

    Framework-prefixed packages are dropped together with any relation that
    touches them; parallel relation records of the same (u, v, kind) are
    summed; self-relations are discarded. Inheritance edges are synthesized
    from class data when a superclass resolves to another in-scope package.
    """
    in_scope = [
        p for p in bundle.packages if not is_framework_package(p, framework_prefixes)
    ]
    # Duplicated declarations collapse to one node.
    nodes = tuple(sorted(set(in_scope)))
    if not nodes:
        raise EmptyGraph(f"{bundle.app_id}: no packages remain after framework filtering")
    node_set = set(nodes)

    edges: dict[tuple[PackageName, PackageName, str], int] = {}

    def add(u: PackageName, v: PackageName, kind: str, count: int) -> None:
        if u == v or u not in node_set or v not in node_set:
            return
        key = (u, v, kind)
        edges[key] = edges.get(key, 0) + count

    for rel in bundle.relations:
        add(rel.from_pkg, rel.to_pkg, rel.kind, rel.count)

    # Superclass links add to whatever explicit records already declared.
    class_package = {cls.name: cls.package for cls in bundle.classes}
    for cls in bundle.classes:
        if cls.superclass is None:
            continue
        super_pkg = class_package.get(cls.superclass)
        if super_pkg is None and "." in cls.superclass:
            candidate = PackageName(cls.superclass.rsplit(".", 1)[0])
            if candidate in node_set:
                super_pkg = candidate
        if super_pkg is not None:
            add(cls.package, super_pkg, "inherit", 1)

    phi = {pkg: idx for idx, pkg in enumerate(nodes)}
    return PackageRelationGraph(nodes=nodes, edges=edges, phi=phi)


def edge_weights(graph: PackageRelationGraph, u: PackageName, v: PackageName) -> EdgeWeights:
    """Per-kind counts for the ordered pair (u, v); zeros when absent."""
    for node in (u, v):
        if not graph.has_node(node):
            raise UnknownNode(str(node))
    return EdgeWeights(
        n_call=graph.edges.get((u, v, "call"), 0),
        n_inherit=graph.edges.get((u, v, "inherit"), 0),
        n_icc=graph.edges.get((u, v, "icc"), 0),
    )
