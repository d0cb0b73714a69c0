"""Binary Android manifest (AXML) reader, scoped to authorship facts.

Walks the chunk stream, decodes the string pool (UTF-16 or UTF-8), and
collects the package name, the four component kinds with their class names,
the MAIN/LAUNCHER activity, and uses-feature declarations.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

ANDROID_NS = "http://schemas.android.com/apk/res/android"

CHUNK_STRING_POOL = 0x0001
CHUNK_XML = 0x0003
CHUNK_START_NAMESPACE = 0x0100
CHUNK_END_NAMESPACE = 0x0101
CHUNK_START_ELEMENT = 0x0102
CHUNK_END_ELEMENT = 0x0103
CHUNK_CDATA = 0x0104
CHUNK_RESOURCE_MAP = 0x0180

TYPE_STRING = 0x03

COMPONENT_TAGS = {
    "activity": "activity",
    "activity-alias": "activity",
    "service": "service",
    "receiver": "receiver",
    "provider": "provider",
}


class AxmlError(Exception):
    pass


@dataclass
class ManifestFacts:
    package: str = ""
    components: list = field(default_factory=list)  # of (kind, fq class name)
    main_activity: str | None = None
    uses_features: list = field(default_factory=list)


def _parse_string_pool(data: bytes, off: int, size: int) -> list:
    (
        _type, header_size, _size, string_count, _style_count, flags,
        strings_start, _styles_start,
    ) = struct.unpack_from("<HHIIIIII", data, off)
    is_utf8 = bool(flags & 0x100)
    offsets = struct.unpack_from(f"<{string_count}I", data, off + header_size)
    base = off + strings_start
    out = []
    for rel in offsets:
        p = base + rel
        if is_utf8:
            utf16_len = data[p]
            p += 2 if utf16_len & 0x80 else 1
            byte_len = data[p]
            if byte_len & 0x80:
                byte_len = ((byte_len & 0x7F) << 8) | data[p + 1]
                p += 2
            else:
                p += 1
            out.append(data[p : p + byte_len].decode("utf-8", errors="replace"))
        else:
            char_count = struct.unpack_from("<H", data, p)[0]
            p += 2
            if char_count & 0x8000:
                char_count = ((char_count & 0x7FFF) << 16) | struct.unpack_from("<H", data, p)[0]
                p += 2
            out.append(
                data[p : p + 2 * char_count].decode("utf-16-le", errors="replace")
            )
    return out


@dataclass
class _Element:
    name: str
    attributes: dict  # (ns, name) -> value


def _iter_elements(data: bytes):
    """Yield ('start'|'end', _Element) events for every element chunk."""
    if len(data) < 8:
        raise AxmlError("truncated document")
    chunk_type, _header, total = struct.unpack_from("<HHI", data, 0)
    if chunk_type != CHUNK_XML:
        raise AxmlError(f"not a binary XML document (chunk {chunk_type:#x})")
    strings: list = []
    off = 8
    while off + 8 <= min(total, len(data)):
        ctype, header_size, size = struct.unpack_from("<HHI", data, off)
        if size < 8:
            raise AxmlError("malformed chunk size")
        if ctype == CHUNK_STRING_POOL:
            strings = _parse_string_pool(data, off, size)
        elif ctype == CHUNK_START_ELEMENT:
            _line, _comment, _ns, name_idx = struct.unpack_from("<IIiI", data, off + 8)
            (attr_start, attr_size, attr_count, _id_idx, _class_idx, _style_idx) = (
                struct.unpack_from("<HHHHHH", data, off + 24)
            )
            attrs = {}
            for i in range(attr_count):
                p = off + 8 + 8 + attr_start + i * attr_size
                ns_idx, aname_idx, raw_idx, _vsize, _res0, vtype, vdata = (
                    struct.unpack_from("<iiiHBBI", data, p)
                )
                ns = strings[ns_idx] if 0 <= ns_idx < len(strings) else ""
                aname = strings[aname_idx] if 0 <= aname_idx < len(strings) else ""
                if raw_idx >= 0:
                    value = strings[raw_idx]
                elif vtype == TYPE_STRING and vdata < len(strings):
                    value = strings[vdata]
                else:
                    value = vdata
                attrs[(ns, aname)] = value
            yield "start", _Element(name=strings[name_idx], attributes=attrs)
        elif ctype == CHUNK_END_ELEMENT:
            _line, _comment, _ns, name_idx = struct.unpack_from("<IIiI", data, off + 8)
            name = strings[name_idx] if 0 <= name_idx < len(strings) else ""
            yield "end", _Element(name=name, attributes={})
        off += size


def _resolve_class(name, package: str) -> str | None:
    if not isinstance(name, str) or not name:
        return None
    if name.startswith("."):
        return package + name
    if "." not in name:
        return f"{package}.{name}"
    return name


def parse_manifest(data: bytes) -> ManifestFacts:
    facts = ManifestFacts()
    current_component: str | None = None  # class of the enclosing activity
    in_intent_filter = False
    saw_main = False
    saw_launcher = False

    for event, element in _iter_elements(data):
        if event == "start":
            attrs = element.attributes
            android_name = attrs.get((ANDROID_NS, "name"))
            if element.name == "manifest":
                pkg = attrs.get(("", "package"))
                if isinstance(pkg, str):
                    facts.package = pkg
            elif element.name in COMPONENT_TAGS:
                kind = COMPONENT_TAGS[element.name]
                resolved = _resolve_class(android_name, facts.package)
                if resolved is not None:
                    facts.components.append((kind, resolved))
                    if kind == "activity":
                        current_component = resolved
            elif element.name == "intent-filter":
                in_intent_filter = True
                saw_main = saw_launcher = False
            elif element.name == "action" and in_intent_filter:
                if android_name == "android.intent.action.MAIN":
                    saw_main = True
            elif element.name == "category" and in_intent_filter:
                if android_name == "android.intent.category.LAUNCHER":
                    saw_launcher = True
            elif element.name == "uses-feature":
                if isinstance(android_name, str) and android_name:
                    facts.uses_features.append(android_name)
        else:
            if element.name == "intent-filter":
                if saw_main and saw_launcher and current_component and facts.main_activity is None:
                    facts.main_activity = current_component
                in_intent_filter = False
            elif COMPONENT_TAGS.get(element.name) == "activity":
                current_component = None
    return facts
