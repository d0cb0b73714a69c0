"""App Bundle interchange format.

One JSON document per app describes everything downstream analysis needs:
declared packages, classes with their methods and token streams, typed
package relations, manifest facts and known library roots. Documents are
written in a canonical single-line form so corpora can be streamed and
compared byte-for-byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Optional

SCHEMA_VERSION = 1

RELATION_KINDS = ("call", "inherit", "icc")
COMPONENT_KINDS = ("activity", "service", "receiver", "provider")

# Framework roots are carried in bundles but flagged; downstream modules
# filter them. Kept as data so deployments can extend the list.
DEFAULT_FRAMEWORK_PREFIXES = (
    "android",
    "androidx",
    "java",
    "javax",
    "kotlin",
    "kotlinx",
)


class BundleError(Exception):
    """Base class for bundle parsing/validation failures."""


class SchemaError(BundleError):
    """Document is structurally broken: missing or mistyped field."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class UndeclaredReferenceError(BundleError):
    """A relation or manifest entry names an undeclared package/class."""


@dataclass(frozen=True, order=True)
class PackageName:
    """Dotted package identifier, e.g. ``com.example.app.ui``."""

    dotted: str

    @property
    def segments(self) -> tuple[str, ...]:
        return tuple(self.dotted.split("."))

    def is_wellformed(self) -> bool:
        segs = self.segments
        return (
            len(segs) >= 1
            and all(segs)
            and not any(ch.isspace() for ch in self.dotted)
        )

    def starts_with(self, prefix: "PackageName") -> bool:
        """Segment-wise prefix test: ``com.ads`` covers ``com.ads.x``, not ``com.adsx``."""
        ps = prefix.segments
        return self.segments[: len(ps)] == ps

    def __str__(self) -> str:
        return self.dotted


@dataclass(frozen=True)
class MethodRecord:
    name: str
    instructions: tuple[str, ...] = ()
    api_calls: tuple[str, ...] = ()
    overrides_framework: bool = False


@dataclass(frozen=True)
class ClassRecord:
    name: str
    package: PackageName
    superclass: Optional[str] = None
    fields: tuple[str, ...] = ()
    methods: tuple[MethodRecord, ...] = ()
    is_component: Optional[str] = None

    @property
    def simple_name(self) -> str:
        return self.name.rsplit(".", 1)[-1]


@dataclass(frozen=True)
class RelationRecord:
    from_pkg: PackageName
    to_pkg: PackageName
    kind: str
    count: int


@dataclass(frozen=True)
class ManifestInfo:
    main_activity: Optional[str] = None
    components: tuple[tuple[str, str], ...] = ()
    uses_features: tuple[str, ...] = ()


@dataclass(frozen=True)
class AppBundle:
    app_id: str
    packages: tuple[PackageName, ...]
    classes: tuple[ClassRecord, ...] = ()
    relations: tuple[RelationRecord, ...] = ()
    manifest: ManifestInfo = field(default_factory=ManifestInfo)
    libraries: tuple[str, ...] = ()
    author_label: Optional[str] = None
    schema_version: int = SCHEMA_VERSION


@dataclass(frozen=True)
class ValidationIssue:
    code: str
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[ValidationIssue, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.issues

    def codes(self) -> tuple[str, ...]:
        return tuple(i.code for i in self.issues)


# Codes that denote a reference to an undeclared name; parse_bundle maps
# them to UndeclaredReferenceError, everything else to SchemaError.
_REFERENCE_CODES = frozenset(
    {
        "CLASS_PACKAGE_UNDECLARED",
        "RELATION_ENDPOINT_UNDECLARED",
        "MANIFEST_MAIN_UNDECLARED",
        "MANIFEST_COMPONENT_UNDECLARED",
    }
)


def validate(bundle: AppBundle) -> ValidationReport:
    """Check every bundle invariant; violations are data, not failures.

    Returns an empty report exactly when the bundle is valid.
    """
    issues: list[ValidationIssue] = []

    def bad(code: str, detail: str) -> None:
        issues.append(ValidationIssue(code, detail))

    if bundle.schema_version != SCHEMA_VERSION:
        bad("SCHEMA_VERSION_UNSUPPORTED", f"schema_version={bundle.schema_version}")
    if not bundle.app_id:
        bad("APP_ID_EMPTY", "app_id must be nonempty")

    declared = set(bundle.packages)
    for pkg in bundle.packages:
        if not pkg.is_wellformed():
            bad("PACKAGE_NAME_INVALID", repr(pkg.dotted))

    class_names = set()
    for cls in bundle.classes:
        class_names.add(cls.name)
        if cls.package not in declared:
            bad("CLASS_PACKAGE_UNDECLARED", f"{cls.name}: package {cls.package}")
        prefix = cls.package.dotted + "."
        tail = cls.name[len(prefix):] if cls.name.startswith(prefix) else ""
        if not tail or "." in tail:
            bad("CLASS_NAME_PACKAGE_MISMATCH", f"{cls.name} not directly under {cls.package}")
        if cls.is_component is not None and cls.is_component not in COMPONENT_KINDS:
            bad("CLASS_COMPONENT_KIND_INVALID", f"{cls.name}: {cls.is_component}")
        for fld in cls.fields:
            if not fld or any(ch.isspace() for ch in fld):
                bad("TOKEN_WHITESPACE", f"{cls.name} field {fld!r}")
        for m in cls.methods:
            if not m.name:
                bad("CLASS_METHOD_NAME_EMPTY", cls.name)
            for tok in m.instructions:
                if not tok or any(ch.isspace() for ch in tok):
                    bad("TOKEN_WHITESPACE", f"{cls.name}.{m.name} instruction {tok!r}")
            for tok in m.api_calls:
                if not tok or any(ch.isspace() for ch in tok):
                    bad("TOKEN_WHITESPACE", f"{cls.name}.{m.name} api call {tok!r}")

    for rel in bundle.relations:
        if rel.kind not in RELATION_KINDS:
            bad("RELATION_KIND_INVALID", f"{rel.from_pkg}->{rel.to_pkg}: {rel.kind}")
        if rel.count < 1:
            bad("RELATION_COUNT_NONPOSITIVE", f"{rel.from_pkg}->{rel.to_pkg} count={rel.count}")
        for end in (rel.from_pkg, rel.to_pkg):
            if end not in declared:
                bad("RELATION_ENDPOINT_UNDECLARED", str(end))

    man = bundle.manifest
    activity_components = set()
    for kind, name in man.components:
        if kind not in COMPONENT_KINDS:
            bad("MANIFEST_COMPONENT_KIND_INVALID", f"{kind}: {name}")
        if name not in class_names:
            bad("MANIFEST_COMPONENT_UNDECLARED", name)
        if kind == "activity":
            activity_components.add(name)
    if man.main_activity is not None and man.main_activity not in activity_components:
        bad("MANIFEST_MAIN_UNDECLARED", man.main_activity)

    return ValidationReport(tuple(issues))


# ---------------------------------------------------------------------------
# JSON (de)serialization
# ---------------------------------------------------------------------------


def _expect(obj: Any, key: str, types, path: str, required: bool = True):
    if key not in obj:
        if required:
            raise SchemaError(f"{path}.{key}", "missing required field")
        return None
    val = obj[key]
    if val is None and not required:
        return None
    if not isinstance(val, types):
        raise SchemaError(f"{path}.{key}", f"expected {types}, got {type(val).__name__}")
    return val


def _str_list(obj: Any, key: str, path: str) -> tuple[str, ...]:
    val = _expect(obj, key, list, path)
    out = []
    for i, item in enumerate(val):
        if not isinstance(item, str):
            raise SchemaError(f"{path}.{key}[{i}]", "expected string")
        out.append(item)
    return tuple(out)


def _parse_method(obj: Any, path: str) -> MethodRecord:
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected object")
    return MethodRecord(
        name=_expect(obj, "name", str, path),
        instructions=_str_list(obj, "instructions", path),
        api_calls=_str_list(obj, "api_calls", path),
        overrides_framework=bool(_expect(obj, "overrides_framework", bool, path)),
    )


def _parse_class(obj: Any, path: str) -> ClassRecord:
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected object")
    methods = _expect(obj, "methods", list, path)
    return ClassRecord(
        name=_expect(obj, "name", str, path),
        package=PackageName(_expect(obj, "package", str, path)),
        superclass=_expect(obj, "superclass", str, path, required=False),
        fields=_str_list(obj, "fields", path),
        methods=tuple(_parse_method(m, f"{path}.methods[{i}]") for i, m in enumerate(methods)),
        is_component=_expect(obj, "is_component", str, path, required=False),
    )


def _parse_relation(obj: Any, path: str) -> RelationRecord:
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected object")
    return RelationRecord(
        from_pkg=PackageName(_expect(obj, "from_pkg", str, path)),
        to_pkg=PackageName(_expect(obj, "to_pkg", str, path)),
        kind=_expect(obj, "kind", str, path),
        count=_expect(obj, "count", int, path),
    )


def _parse_manifest(obj: Any, path: str) -> ManifestInfo:
    if not isinstance(obj, dict):
        raise SchemaError(path, "expected object")
    raw_components = _expect(obj, "components", list, path)
    components = []
    for i, pair in enumerate(raw_components):
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or not all(isinstance(x, str) for x in pair)
        ):
            raise SchemaError(f"{path}.components[{i}]", "expected [kind, class_name] pair")
        components.append((pair[0], pair[1]))
    return ManifestInfo(
        main_activity=_expect(obj, "main_activity", str, path, required=False),
        components=tuple(components),
        uses_features=_str_list(obj, "uses_features", path),
    )


def parse_bundle(data: bytes | str) -> AppBundle:
    """Parse and fully validate one App Bundle document.

    Raises SchemaError for structural problems (with the offending path) and
    UndeclaredReferenceError when a relation or manifest entry names an
    undeclared package/class.
    """
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SchemaError("$", f"not UTF-8: {exc}") from exc
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise SchemaError("$", "top-level value must be an object")

    version = _expect(obj, "schema_version", int, "$")
    if version != SCHEMA_VERSION:
        raise SchemaError("$.schema_version", f"unsupported version {version}")

    classes = _expect(obj, "classes", list, "$")
    relations = _expect(obj, "relations", list, "$")
    bundle = AppBundle(
        app_id=_expect(obj, "app_id", str, "$"),
        author_label=_expect(obj, "author_label", str, "$", required=False),
        packages=tuple(PackageName(p) for p in _str_list(obj, "packages", "$")),
        classes=tuple(_parse_class(c, f"$.classes[{i}]") for i, c in enumerate(classes)),
        relations=tuple(_parse_relation(r, f"$.relations[{i}]") for i, r in enumerate(relations)),
        manifest=_parse_manifest(_expect(obj, "manifest", dict, "$"), "$.manifest"),
        libraries=_str_list(obj, "libraries", "$"),
        schema_version=version,
    )

    report = validate(bundle)
    if not report.ok:
        first = report.issues[0]
        if first.code in _REFERENCE_CODES:
            raise UndeclaredReferenceError(f"{first.code}: {first.detail}")
        raise SchemaError("$", f"{first.code}: {first.detail}")
    return bundle


def bundle_to_obj(bundle: AppBundle) -> dict:
    """Plain-JSON form of a bundle; optional fields are omitted when absent."""
    man: dict[str, Any] = {
        "components": [[k, n] for k, n in bundle.manifest.components],
        "uses_features": list(bundle.manifest.uses_features),
    }
    if bundle.manifest.main_activity is not None:
        man["main_activity"] = bundle.manifest.main_activity

    classes = []
    for cls in bundle.classes:
        c: dict[str, Any] = {
            "name": cls.name,
            "package": cls.package.dotted,
            "fields": list(cls.fields),
            "methods": [
                {
                    "name": m.name,
                    "instructions": list(m.instructions),
                    "api_calls": list(m.api_calls),
                    "overrides_framework": m.overrides_framework,
                }
                for m in cls.methods
            ],
        }
        if cls.superclass is not None:
            c["superclass"] = cls.superclass
        if cls.is_component is not None:
            c["is_component"] = cls.is_component
        classes.append(c)

    obj: dict[str, Any] = {
        "schema_version": bundle.schema_version,
        "app_id": bundle.app_id,
        "packages": [p.dotted for p in bundle.packages],
        "classes": classes,
        "relations": [
            {
                "from_pkg": r.from_pkg.dotted,
                "to_pkg": r.to_pkg.dotted,
                "kind": r.kind,
                "count": r.count,
            }
            for r in bundle.relations
        ],
        "manifest": man,
        "libraries": list(bundle.libraries),
    }
    if bundle.author_label is not None:
        obj["author_label"] = bundle.author_label
    return obj


def write_bundle(bundle: AppBundle) -> str:
    """Canonical serialization: sorted object keys, lists in input order.

    Two writes of equal bundles are byte-identical, and the output contains
    no raw newlines so corpora can be stored one document per line.
    """
    return json.dumps(bundle_to_obj(bundle), sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n"


def read_bundle_file(path) -> AppBundle:
    with open(path, "rb") as fh:
        return parse_bundle(fh.read())


def write_bundle_file(bundle: AppBundle, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(write_bundle(bundle))


def load_prefix_file(path) -> tuple[str, ...]:
    """Read a plain-text prefix list: one entry per line, ``#`` comments."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                out.append(line)
    return tuple(out)
