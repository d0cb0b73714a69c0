"""APK -> App Bundle document.

Reads every ``classes*.dex`` plus the binary manifest from an APK, then
emits one JSON document per app: declared packages, classes with method
token streams, summed call/inherit/icc relations between in-app packages,
manifest facts, matched library roots and the signing identity. The
document follows the published App Bundle schema and is written in the
same canonical single-line form the analysis side uses.
"""

from __future__ import annotations

import json
import logging
import re
import zipfile
from dataclasses import dataclass
from importlib import resources

from .axml import AxmlError, ManifestFacts, parse_manifest
from .cert import UnsignedApk, signing_identity
from .dex import DexError, descriptor_to_dotted, package_of, parse_dex

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

ICC_APIS = frozenset(
    {
        "startActivity",
        "startActivities",
        "startActivityForResult",
        "startService",
        "startForegroundService",
        "bindService",
        "sendBroadcast",
        "sendOrderedBroadcast",
        "sendStickyBroadcast",
    }
)


class UnreadableApk(Exception):
    pass


def _load_list(name: str) -> tuple[str, ...]:
    text = resources.files("apkbundle").joinpath(f"data/{name}").read_text()
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(line)
    return tuple(out)


DEFAULT_FRAMEWORK_PREFIXES = _load_list("framework_prefixes.txt")
DEFAULT_OVERRIDE_NAMES = _load_list("framework_overrides.txt")
DEFAULT_KNOWN_LIBRARIES = _load_list("known_libraries.txt")


def load_prefix_file(path) -> tuple[str, ...]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                out.append(line)
    return tuple(out)


def _has_prefix(dotted: str, prefix: str) -> bool:
    prefix = prefix.rstrip(".")
    return dotted == prefix or dotted.startswith(prefix + ".")


@dataclass(frozen=True)
class ExtractorConfig:
    framework_prefixes: tuple = DEFAULT_FRAMEWORK_PREFIXES
    override_names: tuple = DEFAULT_OVERRIDE_NAMES
    known_libraries: tuple = DEFAULT_KNOWN_LIBRARIES


def extract(apk_path, config: ExtractorConfig = ExtractorConfig()) -> dict:
    """Extract one APK into an App Bundle document (plain dict)."""
    try:
        archive = zipfile.ZipFile(apk_path)
    except (OSError, zipfile.BadZipFile) as exc:
        raise UnreadableApk(f"{apk_path}: {exc}") from exc
    with archive:
        names = set(archive.namelist())
        dex_names = sorted(
            n for n in names if re.fullmatch(r"classes\d*\.dex", n)
        )
        if not dex_names:
            raise UnreadableApk(f"{apk_path}: no classes.dex")
        try:
            dex_files = [parse_dex(archive.read(n)) for n in dex_names]
        except DexError as exc:
            raise UnreadableApk(f"{apk_path}: {exc}") from exc

        manifest = ManifestFacts()
        if "AndroidManifest.xml" in names:
            try:
                manifest = parse_manifest(archive.read("AndroidManifest.xml"))
            except AxmlError as exc:
                log.warning("%s: unreadable manifest (%s)", apk_path, exc)
        else:
            log.warning("%s: no AndroidManifest.xml", apk_path)

        author_label = None
        try:
            author_label = signing_identity(archive)
        except UnsignedApk as exc:
            log.warning("%s: %s", apk_path, exc)

    return build_document(apk_path, dex_files, manifest, author_label, config)


def build_document(apk_path, dex_files, manifest: ManifestFacts, author_label, config: ExtractorConfig) -> dict:
    defined = {}  # dotted class name -> (DexClass, owning DexFile)
    for dex in dex_files:
        for cls in dex.classes:
            dotted = descriptor_to_dotted(cls.descriptor)
            if not package_of(dotted):
                log.warning("skipping default-package class %s", dotted)
                continue
            defined.setdefault(dotted, (cls, dex))

    packages = sorted({package_of(name) for name in defined})
    package_set = set(packages)

    component_kind = {}
    for kind, class_name in manifest.components:
        component_kind.setdefault(class_name, kind)
    component_classes = set(component_kind)

    def is_framework(dotted: str) -> bool:
        return any(_has_prefix(dotted, p) for p in config.framework_prefixes)

    relations: dict[tuple[str, str, str], int] = {}

    def add_relation(src_pkg: str, dst_pkg: str, kind: str, count: int = 1) -> None:
        if src_pkg == dst_pkg or src_pkg not in package_set or dst_pkg not in package_set:
            return
        key = (src_pkg, dst_pkg, kind)
        relations[key] = relations.get(key, 0) + count

    classes_out = []
    for dotted in sorted(defined):
        cls, dex = defined[dotted]
        pkg = package_of(dotted)
        superclass = descriptor_to_dotted(cls.superclass) if cls.superclass else None
        external_parent = superclass is not None and superclass not in defined
        if superclass in defined:
            add_relation(pkg, package_of(superclass), "inherit")

        methods_out = []
        for method in cls.methods:
            api_calls = []
            icc_targets = []
            invoked_icc_api = False
            # reference indices are local to the dex file that owns the class
            for ins in method.instructions:
                if ins.ref_kind == "method" and ins.ref_index is not None:
                    if ins.ref_index >= len(dex.method_refs):
                        continue
                    ref = dex.method_refs[ins.ref_index]
                    target_class = descriptor_to_dotted(ref.class_desc)
                    if target_class in defined:
                        add_relation(pkg, package_of(target_class), "call")
                    elif is_framework(target_class):
                        api_calls.append(f"{target_class}.{ref.name}")
                        if ref.name in ICC_APIS:
                            invoked_icc_api = True
                elif ins.ref_kind == "field" and ins.ref_index is not None:
                    if ins.ref_index >= len(dex.field_refs):
                        continue
                    target_class = descriptor_to_dotted(dex.field_refs[ins.ref_index].class_desc)
                    if target_class in defined:
                        add_relation(pkg, package_of(target_class), "call")
                elif ins.ref_kind == "type" and ins.mnemonic == "const-class":
                    if ins.ref_index is None or ins.ref_index >= len(dex.type_descriptors):
                        continue
                    target_class = descriptor_to_dotted(dex.type_descriptors[ins.ref_index])
                    if target_class in component_classes:
                        icc_targets.append(target_class)
            if invoked_icc_api:
                for target_class in icc_targets:
                    add_relation(pkg, package_of(target_class), "icc")
            overrides = (
                method.virtual
                and external_parent
                and method.ref.name in config.override_names
            )
            methods_out.append(
                {
                    "name": method.ref.name,
                    "instructions": [ins.mnemonic for ins in method.instructions],
                    "api_calls": api_calls,
                    "overrides_framework": overrides,
                }
            )

        entry = {
            "name": dotted,
            "package": pkg,
            "fields": list(cls.fields),
            "methods": methods_out,
        }
        if superclass is not None:
            entry["superclass"] = superclass
        if dotted in component_kind:
            entry["is_component"] = component_kind[dotted]
        classes_out.append(entry)

    # Manifest entries must reference classes the document declares.
    components_out = []
    for kind, class_name in manifest.components:
        if class_name in defined:
            components_out.append([kind, class_name])
        else:
            log.warning("manifest %s %s has no class in dex, dropped", kind, class_name)
    declared_components = {name for _k, name in components_out}
    main_activity = manifest.main_activity
    if main_activity is not None and main_activity not in declared_components:
        log.warning("main activity %s unresolved, omitted", main_activity)
        main_activity = None

    libraries = sorted(
        prefix
        for prefix in set(config.known_libraries)
        if any(_has_prefix(pkg, prefix) for pkg in packages)
    )

    manifest_out = {
        "components": components_out,
        "uses_features": sorted(set(manifest.uses_features)),
    }
    if main_activity is not None:
        manifest_out["main_activity"] = main_activity

    document = {
        "schema_version": SCHEMA_VERSION,
        "app_id": manifest.package or _stem(apk_path),
        "packages": packages,
        "classes": classes_out,
        "relations": [
            {"from_pkg": u, "to_pkg": v, "kind": kind, "count": count}
            for (u, v, kind), count in sorted(relations.items())
        ],
        "manifest": manifest_out,
        "libraries": libraries,
    }
    if author_label is not None:
        document["author_label"] = author_label
    return document


def _stem(path) -> str:
    from pathlib import Path

    return Path(path).stem


def dump_document(document: dict) -> str:
    """Canonical single-line serialization, byte-stable across runs."""
    return json.dumps(document, sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n"
