import numpy as np
import pytest

from droidauthor.bundle import ClassRecord, PackageName
from droidauthor.graph import (
    EmptyGraph,
    UnknownNode,
    build_graph,
    edge_weights,
    is_framework_package,
)

from helpers import make_bundle, random_bundle, recursive_tarjan

FRAMEWORK = ("android", "androidx", "java", "javax", "kotlin", "kotlinx")

MINCAL_ROOT = "cat.mvmike.minimalcalendarwidget"
MINCAL_PKGS = [
    MINCAL_ROOT,
    f"{MINCAL_ROOT}.activity",
    f"{MINCAL_ROOT}.external",
    f"{MINCAL_ROOT}.receiver",
    f"{MINCAL_ROOT}.service",
    f"{MINCAL_ROOT}.status",
]


def mincal_bundle():
    """Calendar-widget shaped app: five packages on a circle, status off it."""
    root, activity, external, receiver, service, status = MINCAL_PKGS
    relations = [
        (root, activity, "call", 2),
        (activity, external, "call", 1),
        (external, receiver, "call", 1),
        (receiver, service, "call", 2),
        (service, root, "call", 1),
        (root, status, "call", 1),
    ]
    classes = [
        ClassRecord(name=f"{root}.MainActivity", package=PackageName(root), is_component="activity"),
        ClassRecord(
            name=f"{activity}.ConfigActivity", package=PackageName(activity), is_component="activity"
        ),
    ]
    from droidauthor.bundle import ManifestInfo

    manifest = ManifestInfo(
        main_activity=f"{activity}.ConfigActivity",
        components=(
            ("activity", f"{root}.MainActivity"),
            ("activity", f"{activity}.ConfigActivity"),
        ),
    )
    return make_bundle(MINCAL_PKGS + ["android.appwidget"], relations, classes, manifest, app_id="mincal")


def test_parallel_records_sum():
    bundle = make_bundle(
        ["a", "b", "c"],
        relations=[("a", "b", "call", 2), ("a", "b", "call", 1)],
    )
    graph = build_graph(bundle, FRAMEWORK)
    assert graph.edges[(PackageName("a"), PackageName("b"), "call")] == 3
    assert edge_weights(graph, PackageName("a"), PackageName("b")).n_call == 3


def test_framework_packages_filtered_with_their_edges():
    bundle = make_bundle(["a", "android.x"], relations=[("a", "android.x", "call", 1)])
    graph = build_graph(bundle, FRAMEWORK)
    assert graph.nodes == (PackageName("a"),)
    assert graph.edges == {}


def test_framework_prefix_matches_segments_not_substrings():
    assert is_framework_package(PackageName("android.net"), FRAMEWORK)
    assert not is_framework_package(PackageName("androidx2.net"), FRAMEWORK)


def test_self_relations_discarded():
    bundle = make_bundle(["a", "b"], relations=[("a", "a", "call", 4), ("a", "b", "icc", 1)])
    graph = build_graph(bundle, FRAMEWORK)
    assert (PackageName("a"), PackageName("a"), "call") not in graph.edges
    assert graph.edges[(PackageName("a"), PackageName("b"), "icc")] == 1


def test_empty_graph_raises():
    bundle = make_bundle(["android.x", "java.util"])
    with pytest.raises(EmptyGraph):
        build_graph(bundle, FRAMEWORK)


def test_mincal_shape_six_nodes_cycle_among_five():
    graph = build_graph(mincal_bundle(), FRAMEWORK)
    assert len(graph.nodes) == 6
    adj = graph.successors()
    sccs = recursive_tarjan(sorted(adj), lambda v: sorted(adj[v]))
    big = max(sccs, key=len)
    assert big == {PackageName(p) for p in MINCAL_PKGS[:5]}
    assert {PackageName(MINCAL_PKGS[5])} in sccs


def test_edge_weights_zero_when_absent_and_unknown_node():
    bundle = make_bundle(["a", "b"], relations=[("a", "b", "call", 2), ("a", "b", "inherit", 1)])
    graph = build_graph(bundle, FRAMEWORK)
    w = edge_weights(graph, PackageName("a"), PackageName("b"))
    assert (w.n_call, w.n_inherit, w.n_icc) == (2, 1, 0)
    back = edge_weights(graph, PackageName("b"), PackageName("a"))
    assert (back.n_call, back.n_inherit, back.n_icc) == (0, 0, 0)
    with pytest.raises(UnknownNode):
        edge_weights(graph, PackageName("a"), PackageName("zz"))


def test_superclass_synthesizes_inherit_edge():
    classes = [
        ClassRecord(name="a.Child", package=PackageName("a"), superclass="b.Base"),
        ClassRecord(name="b.Base", package=PackageName("b")),
    ]
    bundle = make_bundle(["a", "b"], classes=classes)
    graph = build_graph(bundle, FRAMEWORK)
    assert graph.edges[(PackageName("a"), PackageName("b"), "inherit")] == 1


def test_framework_superclass_adds_nothing():
    classes = [
        ClassRecord(name="a.Child", package=PackageName("a"), superclass="android.app.Activity")
    ]
    bundle = make_bundle(["a"], classes=classes)
    graph = build_graph(bundle, FRAMEWORK)
    assert graph.edges == {}


def test_phi_is_bijection_onto_range():
    rng = np.random.default_rng(3)
    for _ in range(20):
        bundle = random_bundle(rng, allow_framework=True)
        try:
            graph = build_graph(bundle, FRAMEWORK)
        except EmptyGraph:
            continue
        assert sorted(graph.phi.values()) == list(range(len(graph.nodes)))


def test_counts_match_brute_force_recount():
    rng = np.random.default_rng(5)
    for _ in range(20):
        bundle = random_bundle(rng, allow_framework=True)
        try:
            graph = build_graph(bundle, FRAMEWORK)
        except EmptyGraph:
            continue
        nodes = set(graph.nodes)
        expected: dict = {}
        for rel in bundle.relations:
            if rel.from_pkg in nodes and rel.to_pkg in nodes and rel.from_pkg != rel.to_pkg:
                key = (rel.from_pkg, rel.to_pkg, rel.kind)
                expected[key] = expected.get(key, 0) + rel.count
        class_pkg = {c.name: c.package for c in bundle.classes}
        for cls in bundle.classes:
            if cls.superclass and cls.superclass in class_pkg:
                sp = class_pkg[cls.superclass]
                if cls.package in nodes and sp in nodes and cls.package != sp:
                    key = (cls.package, sp, "inherit")
                    expected[key] = expected.get(key, 0) + 1
        assert graph.edges == expected
