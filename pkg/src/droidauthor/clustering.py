"""Package clustering: pairwise affinities, Louvain modularity, primary module.

Pipeline for one app: per-pair semantic distances from relation counts,
all-pairs shortest paths, exponential correlation, naming-tree structural
similarity, min-max normalization, then Louvain community detection over
the blended weights with same-author pairs pinned together. The module
containing the main activity is designated primary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .aggregation import aggregate
from .bundle import AppBundle, ManifestInfo, PackageName
from .graph import EdgeWeights, PackageRelationGraph, build_graph


class ClusteringError(Exception):
    pass


class AlphaOutOfRange(ClusteringError):
    pass


class NoMainActivity(ClusteringError):
    """Manifest has no usable main activity; callers fall back by module size."""


@dataclass(frozen=True)
class DistanceMatrix:
    """Directed pairwise distances; +inf marks unreachable pairs."""

    nodes: tuple[PackageName, ...]
    dist: np.ndarray  # shape (n, n), float, diagonal 0

    def index(self, pkg: PackageName) -> int:
        return self.nodes.index(pkg)

    def get(self, u: PackageName, v: PackageName) -> float:
        return float(self.dist[self.index(u), self.index(v)])


@dataclass(frozen=True)
class AffinityMatrix:
    """Per-unordered-pair affinities keyed by (u, v) with u < v."""

    corr: dict
    struc: dict
    sim: dict


@dataclass(frozen=True)
class AuthorshipPartition:
    module_of: dict  # PackageName -> module id
    primary_module: int

    def primary_packages(self) -> set:
        return {p for p, m in self.module_of.items() if m == self.primary_module}


@dataclass(frozen=True)
class DecoupleConfig:
    framework_prefixes: tuple = (
        "android",
        "androidx",
        "java",
        "javax",
        "kotlin",
        "kotlinx",
    )
    extra_libraries: tuple = ()
    mode: str = "max"  # max | alpha
    alpha: float = 0.5
    tolerance: float = 1e-9
    seed: int = 0


def semantic_distance(w: EdgeWeights) -> float:
    """Inverse total relation count; +inf when the pair has no relations."""
    total = w.total
    return 1.0 / total if total > 0 else math.inf


def build_distance_matrix(graph: PackageRelationGraph) -> DistanceMatrix:
    """Direct-edge distance for every ordered pair; pairs without edges start at +inf."""
    nodes = tuple(sorted(graph.nodes))
    n = len(nodes)
    dist = np.full((n, n), np.inf)
    np.fill_diagonal(dist, 0.0)
    index = {p: i for i, p in enumerate(nodes)}
    totals: dict[tuple[PackageName, PackageName], int] = {}
    for (u, v, _kind), count in graph.edges.items():
        totals[(u, v)] = totals.get((u, v), 0) + count
    for (u, v), total in totals.items():
        dist[index[u], index[v]] = 1.0 / total
    return DistanceMatrix(nodes=nodes, dist=dist)


def floyd_closure(d: DistanceMatrix) -> DistanceMatrix:
    """All-pairs shortest directed paths under summed edge distances."""
    out = d.dist.copy()
    n = out.shape[0]
    for k in range(n):
        np.minimum(out, out[:, k : k + 1] + out[k : k + 1, :], out=out)
    return DistanceMatrix(nodes=d.nodes, dist=out)


def correlation(d: DistanceMatrix, u: PackageName, v: PackageName) -> float:
    """exp(-min of the two directed distances); 0 when mutually unreachable."""
    m = min(d.get(u, v), d.get(v, u))
    return 0.0 if math.isinf(m) else math.exp(-m)


def structural_similarity(u: PackageName, v: PackageName, root_depth_one: bool = True) -> float:
    """Harmonic number of the nearest-common-parent depth in the naming tree.

    With ``root_depth_one`` the conceptual app root counts as depth 1 and the
    first name segment as depth 2; when one name prefixes the other, the NCP
    is the shorter name.
    """
    su, sv = u.segments, v.segments
    shared = 0
    for a, b in zip(su, sv):
        if a != b:
            break
        shared += 1
    depth = shared + 1 if root_depth_one else shared
    return sum(1.0 / i for i in range(1, depth + 1))


def minmax_normalize(values: dict) -> dict:
    """Min-max scale a column of pair values; constant columns map to 0."""
    if not values:
        return {}
    lo = min(values.values())
    hi = max(values.values())
    if hi == lo:
        return {k: 0.0 for k in values}
    return {k: (v - lo) / (hi - lo) for k, v in values.items()}


def pair_weight(norm_corr: float, norm_struc: float, mode: str = "max", alpha: float = 0.5) -> float:
    """Blend the two normalized affinities into one weight in [0, 1]."""
    if mode == "max":
        return max(norm_corr, norm_struc)
    if mode == "alpha":
        if not 0.0 <= alpha <= 1.0:
            raise AlphaOutOfRange(f"alpha={alpha}")
        return alpha * norm_corr + (1.0 - alpha) * norm_struc
    raise ClusteringError(f"unknown pair weight mode {mode!r}")


def affinity_matrix(
    graph: PackageRelationGraph,
    closed: DistanceMatrix,
    mode: str = "max",
    alpha: float = 0.5,
) -> AffinityMatrix:
    """Correlation, structural similarity and blended weight per unordered pair.

    Normalization population is all in-scope unordered pairs of this app,
    scaled separately for the two affinities.
    """
    nodes = sorted(graph.nodes)
    corr: dict = {}
    struc: dict = {}
    for i, u in enumerate(nodes):
        for v in nodes[i + 1 :]:
            corr[(u, v)] = correlation(closed, u, v)
            struc[(u, v)] = structural_similarity(u, v)
    ncorr = minmax_normalize(corr)
    nstruc = minmax_normalize(struc)
    sim = {pair: pair_weight(ncorr[pair], nstruc[pair], mode, alpha) for pair in corr}
    return AffinityMatrix(corr=corr, struc=struc, sim=sim)


# ---------------------------------------------------------------------------
# Louvain
# ---------------------------------------------------------------------------


@dataclass
class LouvainState:
    """One coarsening level: symmetric adjacency with explicit self-loops."""

    adjacency: list  # index -> {index: weight}; self-loop stored at [i][i]
    strengths: list = field(default_factory=list)  # k_i = row sum incl. self-loop
    total_weight: float = 0.0  # 2m = sum of strengths

    def __post_init__(self):
        self.strengths = [sum(nbrs.values()) for nbrs in self.adjacency]
        self.total_weight = sum(self.strengths)


def modularity_from_state(state: LouvainState, communities: list) -> float:
    """Modularity of an assignment: 1/2m * sum_ij [A_ij - k_i k_j / 2m] * same(i, j)."""
    two_m = state.total_weight
    if two_m == 0:
        return 0.0
    sum_in: dict[int, float] = {}
    sum_tot: dict[int, float] = {}
    for i, nbrs in enumerate(state.adjacency):
        c = communities[i]
        sum_tot[c] = sum_tot.get(c, 0.0) + state.strengths[i]
        for j, w in nbrs.items():
            if communities[j] == c:
                sum_in[c] = sum_in.get(c, 0.0) + w
    q = 0.0
    for c in sum_tot:
        q += sum_in.get(c, 0.0) / two_m - (sum_tot[c] / two_m) ** 2
    return q


def _local_move(state: LouvainState, communities: list) -> bool:
    """Greedy node moves in ascending node order until no node changes."""
    two_m = state.total_weight
    sum_tot: dict[int, float] = {}
    for i, k in enumerate(state.strengths):
        c = communities[i]
        sum_tot[c] = sum_tot.get(c, 0.0) + k

    moved_any = False
    while True:
        moved = 0
        for i in range(len(state.adjacency)):
            current = communities[i]
            k_i = state.strengths[i]
            links: dict[int, float] = {}
            for j, w in state.adjacency[i].items():
                if j != i:
                    cj = communities[j]
                    links[cj] = links.get(cj, 0.0) + w
            sum_tot[current] -= k_i

            def gain(c: int) -> float:
                return links.get(c, 0.0) - sum_tot.get(c, 0.0) * k_i / two_m

            best, best_gain = current, gain(current)
            for c in sorted(links):
                g = gain(c)
                # Strict improvement only: ties keep the current community,
                # and among tied foreign candidates the lowest label wins.
                if g > best_gain + 1e-15 or (best != current and g > best_gain):
                    best, best_gain = c, g
            sum_tot[best] = sum_tot.get(best, 0.0) + k_i
            if best != current:
                communities[i] = best
                moved += 1
        if moved == 0:
            break
        moved_any = True
    return moved_any


def _coarsen(state: LouvainState, communities: list) -> tuple[LouvainState, list]:
    """Merge communities into supernodes; self-loop doubles internal weight."""
    labels = sorted(set(communities))
    relabel = {c: i for i, c in enumerate(labels)}
    coarse: list[dict[int, float]] = [dict() for _ in labels]
    for i, nbrs in enumerate(state.adjacency):
        ci = relabel[communities[i]]
        for j, w in nbrs.items():
            cj = relabel[communities[j]]
            coarse[ci][cj] = coarse[ci].get(cj, 0.0) + w
    mapping = [relabel[c] for c in communities]
    return LouvainState(adjacency=coarse), mapping


def louvain_partition(nodes, weights: dict, phi: dict, seed: int = 0, tolerance: float = 1e-9) -> dict:
    """Cluster packages by modularity maximization over symmetric weights.

    ``weights`` maps unordered pairs (u, v) with u < v to reals in [0, 1].
    Same-author pairs (phi(u) == phi(v)) are forced to weight one and their
    groups are clustered as single units, so equal author ids always end up
    in the same community. The procedure is deterministic: nodes are visited
    in ascending order and ``seed`` has no effect on the result.
    """
    del seed
    order = sorted(nodes)
    if not order:
        return {}

    # Contract author groups; group index = rank of smallest member.
    group_members: dict[int, list[PackageName]] = {}
    for node in order:
        group_members.setdefault(phi[node], []).append(node)
    groups = sorted(group_members.values(), key=lambda ms: ms[0])
    group_of = {node: gi for gi, members in enumerate(groups) for node in members}

    adjacency: list[dict[int, float]] = [dict() for _ in groups]
    for (u, v), w in weights.items():
        gu, gv = group_of[u], group_of[v]
        if gu == gv:
            w = 1.0  # same-author forcing folds into the contracted self-loop
            adjacency[gu][gu] = adjacency[gu].get(gu, 0.0) + 2.0 * w
        else:
            adjacency[gu][gv] = adjacency[gu].get(gv, 0.0) + w
            adjacency[gv][gu] = adjacency[gv].get(gu, 0.0) + w

    state = LouvainState(adjacency=adjacency)
    communities = list(range(len(groups)))
    membership = list(range(len(groups)))  # group index -> current community

    if state.total_weight == 0:
        assignment = {node: group_of[node] for node in order}
        return _canonical_assignment(order, assignment)

    q_prev = modularity_from_state(state, communities)
    while True:
        moved = _local_move(state, communities)
        q_now = modularity_from_state(state, communities)
        if not moved or q_now - q_prev <= tolerance:
            break
        q_prev = q_now
        state, mapping = _coarsen(state, communities)
        membership = [mapping[m] for m in membership]
        communities = list(range(len(state.adjacency)))

    final = [communities[m] for m in membership]
    assignment = {node: final[group_of[node]] for node in order}
    return _canonical_assignment(order, assignment)


def _canonical_assignment(order, assignment: dict) -> dict:
    """Renumber communities 0..c-1 by their smallest member package."""
    seen: dict[int, int] = {}
    out: dict[PackageName, int] = {}
    for node in order:
        c = assignment[node]
        if c not in seen:
            seen[c] = len(seen)
        out[node] = seen[c]
    return out


def select_primary_module(module_of: dict, manifest: ManifestInfo) -> int:
    """Module holding the main activity's package."""
    if manifest.main_activity is None or "." not in manifest.main_activity:
        raise NoMainActivity("manifest has no main activity")
    pkg = PackageName(manifest.main_activity.rsplit(".", 1)[0])
    if pkg not in module_of:
        raise NoMainActivity(f"main activity package {pkg} is not in scope")
    return module_of[pkg]


def decouple(bundle: AppBundle, config: DecoupleConfig = DecoupleConfig()) -> AuthorshipPartition:
    """Full authorship decoupling for one app.

    build graph -> aggregate author ids -> distances -> affinities ->
    Louvain -> primary module selection. Deterministic given (bundle, config).
    """
    graph = build_graph(bundle, config.framework_prefixes)
    libraries = tuple(bundle.libraries) + tuple(config.extra_libraries)
    agg = aggregate(graph, libraries, bundle.manifest)

    closed = floyd_closure(build_distance_matrix(graph))
    affinities = affinity_matrix(graph, closed, mode=config.mode, alpha=config.alpha)
    module_of = louvain_partition(
        graph.nodes, affinities.sim, agg.phi, seed=config.seed, tolerance=config.tolerance
    )

    try:
        primary = select_primary_module(module_of, bundle.manifest)
    except NoMainActivity:
        primary = _heaviest_module(bundle, module_of)
    return AuthorshipPartition(module_of=module_of, primary_module=primary)


def single_module_partition(bundle: AppBundle, framework_prefixes) -> AuthorshipPartition:
    """Degenerate partition: every in-scope package in one primary module.

    Used to fingerprint whole apps without decoupling, for comparison runs.
    """
    graph = build_graph(bundle, framework_prefixes)
    return AuthorshipPartition(module_of={p: 0 for p in graph.nodes}, primary_module=0)


def _heaviest_module(bundle: AppBundle, module_of: dict) -> int:
    """Fallback primary module: largest total method count, lowest id on ties."""
    method_count: dict[int, int] = {m: 0 for m in module_of.values()}
    for cls in bundle.classes:
        module = module_of.get(cls.package)
        if module is not None:
            method_count[module] += len(cls.methods)
    return min(method_count, key=lambda m: (-method_count[m], m))
