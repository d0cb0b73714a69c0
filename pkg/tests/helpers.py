"""Shared builders for randomized test inputs."""

from __future__ import annotations

import numpy as np

from droidauthor.bundle import (
    AppBundle,
    ClassRecord,
    ManifestInfo,
    MethodRecord,
    PackageName,
    RelationRecord,
)

_WORDS = (
    "app", "core", "net", "ui", "data", "sync", "util", "io", "db", "api",
    "auth", "view", "model", "task", "feed", "cache", "media", "push",
)

_OPS = ("invoke-virtual", "const-string", "move-result", "iget-object",
        "return-void", "new-instance", "if-eqz", "goto")

_APIS = ("android.util.Log.d", "java.util.List.add", "org.json.JSONObject.put",
         "android.view.View.findViewById")


def random_package(rng) -> str:
    depth = int(rng.integers(1, 4))
    return ".".join(str(rng.choice(_WORDS)) for _ in range(depth))


def random_bundle(rng, allow_framework: bool = False) -> AppBundle:
    """A structurally valid bundle with randomized shape and optional fields."""
    packages = []
    while len(packages) < int(rng.integers(1, 6)):
        pkg = random_package(rng)
        if pkg not in packages:
            packages.append(pkg)
    if allow_framework and rng.random() < 0.5:
        packages.append("android." + str(rng.choice(_WORDS)))

    classes = []
    class_names = []
    for pkg in packages:
        for c in range(int(rng.integers(0, 3))):
            name = f"{pkg}.{str(rng.choice(_WORDS)).capitalize()}{c}"
            if rng.random() < 0.2 and class_names:
                superclass = str(rng.choice(class_names))
            elif rng.random() < 0.3:
                superclass = "android.app.Activity"
            else:
                superclass = None
            methods = tuple(
                MethodRecord(
                    name=str(rng.choice(_WORDS)) + str(m),
                    instructions=tuple(str(rng.choice(_OPS)) for _ in range(int(rng.integers(0, 5)))),
                    api_calls=tuple(str(rng.choice(_APIS)) for _ in range(int(rng.integers(0, 3)))),
                    overrides_framework=bool(rng.random() < 0.2),
                )
                for m in range(int(rng.integers(0, 3)))
            )
            classes.append(
                ClassRecord(
                    name=name,
                    package=PackageName(pkg),
                    superclass=superclass,
                    fields=tuple(str(rng.choice(_WORDS)) for _ in range(int(rng.integers(0, 3)))),
                    methods=methods,
                )
            )
            class_names.append(name)

    relations = []
    for _ in range(int(rng.integers(0, 8))):
        u = str(rng.choice(packages))
        v = str(rng.choice(packages))
        relations.append(
            RelationRecord(
                from_pkg=PackageName(u),
                to_pkg=PackageName(v),
                kind=str(rng.choice(["call", "inherit", "icc"])),
                count=int(rng.integers(1, 5)),
            )
        )

    components = []
    main_activity = None
    if classes and rng.random() < 0.7:
        cls = classes[int(rng.integers(0, len(classes)))]
        components.append(("activity", cls.name))
        if rng.random() < 0.8:
            main_activity = cls.name

    return AppBundle(
        app_id=f"test-{int(rng.integers(0, 10**6)):06d}",
        author_label=None if rng.random() < 0.3 else f"author{int(rng.integers(0, 5))}",
        packages=tuple(PackageName(p) for p in packages),
        classes=tuple(classes),
        relations=tuple(relations),
        manifest=ManifestInfo(
            main_activity=main_activity,
            components=tuple(components),
            uses_features=tuple(
                f"android.hardware.{rng.choice(_WORDS)}" for _ in range(int(rng.integers(0, 3)))
            ),
        ),
        libraries=tuple(p for p in packages[1:2] if rng.random() < 0.4),
    )


def make_bundle(packages, relations=(), classes=(), manifest=None, libraries=(), app_id="app") -> AppBundle:
    """Concise hand-built bundle; relations as (from, to, kind, count)."""
    return AppBundle(
        app_id=app_id,
        packages=tuple(PackageName(p) for p in packages),
        classes=tuple(classes),
        relations=tuple(
            RelationRecord(PackageName(a), PackageName(b), kind, count)
            for a, b, kind, count in relations
        ),
        manifest=manifest or ManifestInfo(),
        libraries=tuple(libraries),
    )


def recursive_tarjan(vertices, successors):
    """Recursive Tarjan SCC, kept independent of the implementation under test."""
    index = {}
    lowlink = {}
    stack = []
    on_stack = set()
    counter = [0]
    sccs = []

    def connect(v):
        index[v] = lowlink[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        for w in successors(v):
            if w not in index:
                connect(w)
                lowlink[v] = min(lowlink[v], lowlink[w])
            elif w in on_stack:
                lowlink[v] = min(lowlink[v], index[w])
        if lowlink[v] == index[v]:
            scc = set()
            while True:
                w = stack.pop()
                on_stack.discard(w)
                scc.add(w)
                if w == v:
                    break
            sccs.append(scc)

    for v in vertices:
        if v not in index:
            connect(v)
    return sccs
