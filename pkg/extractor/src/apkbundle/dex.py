"""Minimal DEX reader: identifiers, class structure, bytecode mnemonics.

Parses the tables an authorship bundle needs (strings, types, prototypes,
fields, methods, class definitions with code items) and decodes instruction
streams to mnemonic sequences with symbolic references. No debug info,
annotations or try/catch decoding.
"""

from __future__ import annotations

import struct
import zlib
from dataclasses import dataclass, field

DEX_MAGIC_PREFIX = b"dex\n"
NO_INDEX = 0xFFFFFFFF

ACC_STATIC = 0x8


class DexError(Exception):
    pass


def read_uleb128(buf: bytes, off: int) -> tuple[int, int]:
    result = 0
    shift = 0
    while True:
        byte = buf[off]
        off += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result, off
        shift += 7


def decode_mutf8(raw: bytes) -> str:
    """Modified UTF-8 used by dex string data; lenient on odd sequences."""
    try:
        return raw.replace(b"\xc0\x80", b"\x00").decode("utf-8")
    except UnicodeDecodeError:
        return raw.decode("latin-1")


def descriptor_to_dotted(descriptor: str) -> str:
    """``Lcom/app/Main;`` -> ``com.app.Main``; arrays and primitives pass through."""
    if descriptor.startswith("L") and descriptor.endswith(";"):
        return descriptor[1:-1].replace("/", ".")
    return descriptor


def package_of(dotted_class: str) -> str:
    return dotted_class.rsplit(".", 1)[0] if "." in dotted_class else ""


# ---------------------------------------------------------------------------
# Instruction table: opcode -> (mnemonic, format)
# ---------------------------------------------------------------------------

_FORMAT_UNITS = {
    "10x": 1, "12x": 1, "11n": 1, "11x": 1, "10t": 1,
    "20t": 2, "22x": 2, "21t": 2, "21s": 2, "21h": 2, "21c": 2,
    "23x": 2, "22b": 2, "22t": 2, "22s": 2, "22c": 2,
    "30t": 3, "32x": 3, "31i": 3, "31t": 3, "31c": 3, "35c": 3, "3rc": 3,
    "45cc": 4, "4rcc": 4, "51l": 5,
}

# Reference kind carried in the second code unit for c-formats.
_REF_KINDS = {}


def _op(table, code, mnemonic, fmt, ref=None):
    table[code] = (mnemonic, fmt)
    if ref:
        _REF_KINDS[code] = ref


def _build_opcode_table() -> dict:
    t: dict[int, tuple[str, str]] = {}
    _op(t, 0x00, "nop", "10x")
    for i, kind in enumerate(("move", "move-wide", "move-object")):
        base = 0x01 + 3 * i
        _op(t, base, kind, "12x")
        _op(t, base + 1, f"{kind}/from16", "22x")
        _op(t, base + 2, f"{kind}/16", "32x")
    _op(t, 0x0A, "move-result", "11x")
    _op(t, 0x0B, "move-result-wide", "11x")
    _op(t, 0x0C, "move-result-object", "11x")
    _op(t, 0x0D, "move-exception", "11x")
    _op(t, 0x0E, "return-void", "10x")
    _op(t, 0x0F, "return", "11x")
    _op(t, 0x10, "return-wide", "11x")
    _op(t, 0x11, "return-object", "11x")
    _op(t, 0x12, "const/4", "11n")
    _op(t, 0x13, "const/16", "21s")
    _op(t, 0x14, "const", "31i")
    _op(t, 0x15, "const/high16", "21h")
    _op(t, 0x16, "const-wide/16", "21s")
    _op(t, 0x17, "const-wide/32", "31i")
    _op(t, 0x18, "const-wide", "51l")
    _op(t, 0x19, "const-wide/high16", "21h")
    _op(t, 0x1A, "const-string", "21c", "string")
    _op(t, 0x1B, "const-string/jumbo", "31c", "string")
    _op(t, 0x1C, "const-class", "21c", "type")
    _op(t, 0x1D, "monitor-enter", "11x")
    _op(t, 0x1E, "monitor-exit", "11x")
    _op(t, 0x1F, "check-cast", "21c", "type")
    _op(t, 0x20, "instance-of", "22c", "type")
    _op(t, 0x21, "array-length", "12x")
    _op(t, 0x22, "new-instance", "21c", "type")
    _op(t, 0x23, "new-array", "22c", "type")
    _op(t, 0x24, "filled-new-array", "35c", "type")
    _op(t, 0x25, "filled-new-array/range", "3rc", "type")
    _op(t, 0x26, "fill-array-data", "31t")
    _op(t, 0x27, "throw", "11x")
    _op(t, 0x28, "goto", "10t")
    _op(t, 0x29, "goto/16", "20t")
    _op(t, 0x2A, "goto/32", "30t")
    _op(t, 0x2B, "packed-switch", "31t")
    _op(t, 0x2C, "sparse-switch", "31t")
    for i, name in enumerate(("cmpl-float", "cmpg-float", "cmpl-double", "cmpg-double", "cmp-long")):
        _op(t, 0x2D + i, name, "23x")
    for i, name in enumerate(("if-eq", "if-ne", "if-lt", "if-ge", "if-gt", "if-le")):
        _op(t, 0x32 + i, name, "22t")
    for i, name in enumerate(("if-eqz", "if-nez", "if-ltz", "if-gez", "if-gtz", "if-lez")):
        _op(t, 0x38 + i, name, "21t")
    array_kinds = ("", "-wide", "-object", "-boolean", "-byte", "-char", "-short")
    for i, kind in enumerate(array_kinds):
        _op(t, 0x44 + i, f"aget{kind}", "23x")
        _op(t, 0x4B + i, f"aput{kind}", "23x")
    for i, kind in enumerate(array_kinds):
        _op(t, 0x52 + i, f"iget{kind}", "22c", "field")
        _op(t, 0x59 + i, f"iput{kind}", "22c", "field")
        _op(t, 0x60 + i, f"sget{kind}", "21c", "field")
        _op(t, 0x67 + i, f"sput{kind}", "21c", "field")
    for i, kind in enumerate(("virtual", "super", "direct", "static", "interface")):
        _op(t, 0x6E + i, f"invoke-{kind}", "35c", "method")
        _op(t, 0x74 + i, f"invoke-{kind}/range", "3rc", "method")
    unary = (
        "neg-int", "not-int", "neg-long", "not-long", "neg-float", "neg-double",
        "int-to-long", "int-to-float", "int-to-double", "long-to-int",
        "long-to-float", "long-to-double", "float-to-int", "float-to-long",
        "float-to-double", "double-to-int", "double-to-long", "double-to-float",
        "int-to-byte", "int-to-char", "int-to-short",
    )
    for i, name in enumerate(unary):
        _op(t, 0x7B + i, name, "12x")
    arith = (
        "add-int", "sub-int", "mul-int", "div-int", "rem-int", "and-int",
        "or-int", "xor-int", "shl-int", "shr-int", "ushr-int",
        "add-long", "sub-long", "mul-long", "div-long", "rem-long", "and-long",
        "or-long", "xor-long", "shl-long", "shr-long", "ushr-long",
        "add-float", "sub-float", "mul-float", "div-float", "rem-float",
        "add-double", "sub-double", "mul-double", "div-double", "rem-double",
    )
    for i, name in enumerate(arith):
        _op(t, 0x90 + i, name, "23x")
        _op(t, 0xB0 + i, f"{name}/2addr", "12x")
    lit16 = ("add-int/lit16", "rsub-int", "mul-int/lit16", "div-int/lit16",
             "rem-int/lit16", "and-int/lit16", "or-int/lit16", "xor-int/lit16")
    for i, name in enumerate(lit16):
        _op(t, 0xD0 + i, name, "22s")
    lit8 = ("add-int/lit8", "rsub-int/lit8", "mul-int/lit8", "div-int/lit8",
            "rem-int/lit8", "and-int/lit8", "or-int/lit8", "xor-int/lit8",
            "shl-int/lit8", "shr-int/lit8", "ushr-int/lit8")
    for i, name in enumerate(lit8):
        _op(t, 0xD8 + i, name, "22b")
    _op(t, 0xFA, "invoke-polymorphic", "45cc", "method")
    _op(t, 0xFB, "invoke-polymorphic/range", "4rcc", "method")
    _op(t, 0xFC, "invoke-custom", "35c")
    _op(t, 0xFD, "invoke-custom/range", "3rc")
    _op(t, 0xFE, "const-method-handle", "21c")
    _op(t, 0xFF, "const-method-type", "21c")
    return t


OPCODE_TABLE = _build_opcode_table()


@dataclass(frozen=True)
class Instruction:
    mnemonic: str
    ref_kind: str | None = None  # string | type | field | method
    ref_index: int | None = None


def decode_instructions(units: list[int]) -> list[Instruction]:
    """Decode a code unit array into mnemonics with symbolic references.

    Payload pseudo-instructions (switch and array data) are sized correctly
    and emitted as a single token; unknown opcodes advance one unit.
    """
    out: list[Instruction] = []
    i = 0
    n = len(units)
    while i < n:
        unit = units[i]
        opcode = unit & 0xFF
        high = unit >> 8
        if opcode == 0x00 and high in (0x01, 0x02, 0x03):
            if high == 0x01:  # packed-switch payload: size, first_key(2), targets
                size = units[i + 1]
                length = size * 2 + 4
                out.append(Instruction("packed-switch-payload"))
            elif high == 0x02:  # sparse-switch payload: size, keys, targets
                size = units[i + 1]
                length = size * 4 + 2
                out.append(Instruction("sparse-switch-payload"))
            else:  # fill-array-data payload: element_width, size(2), data
                width = units[i + 1]
                count = units[i + 2] | (units[i + 3] << 16)
                length = (width * count + 1) // 2 + 4
                out.append(Instruction("fill-array-data-payload"))
            i += max(1, length)
            continue
        entry = OPCODE_TABLE.get(opcode)
        if entry is None:
            out.append(Instruction(f"op-{opcode:02x}"))
            i += 1
            continue
        mnemonic, fmt = entry
        ref_kind = _REF_KINDS.get(opcode)
        ref_index = None
        if ref_kind is not None and i + 1 < n:
            ref_index = units[i + 1]
            if fmt == "31c" and i + 2 < n:
                ref_index = units[i + 1] | (units[i + 2] << 16)
        out.append(Instruction(mnemonic, ref_kind, ref_index))
        i += _FORMAT_UNITS[fmt]
    return out


# ---------------------------------------------------------------------------
# File structure
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DexMethodRef:
    class_desc: str
    name: str


@dataclass(frozen=True)
class DexFieldRef:
    class_desc: str
    name: str


@dataclass
class DexMethod:
    ref: DexMethodRef
    access_flags: int
    virtual: bool = False
    instructions: list = field(default_factory=list)  # of Instruction


@dataclass
class DexClass:
    descriptor: str
    superclass: str | None
    access_flags: int
    fields: list = field(default_factory=list)  # of field names (str)
    methods: list = field(default_factory=list)  # of DexMethod


@dataclass
class DexFile:
    strings: list
    type_descriptors: list
    field_refs: list  # of DexFieldRef
    method_refs: list  # of DexMethodRef
    classes: list  # of DexClass


def parse_dex(data: bytes) -> DexFile:
    if len(data) < 0x70 or not data.startswith(DEX_MAGIC_PREFIX):
        raise DexError("not a dex file")
    checksum = struct.unpack_from("<I", data, 8)[0]
    if zlib.adler32(data[12:]) & 0xFFFFFFFF != checksum:
        raise DexError("dex checksum mismatch")

    (
        _file_size, header_size, endian_tag, _link_size, _link_off, _map_off,
        string_ids_size, string_ids_off, type_ids_size, type_ids_off,
        proto_ids_size, proto_ids_off, field_ids_size, field_ids_off,
        method_ids_size, method_ids_off, class_defs_size, class_defs_off,
        _data_size, _data_off,
    ) = struct.unpack_from("<20I", data, 32)
    if endian_tag != 0x12345678:
        raise DexError(f"unsupported endian tag {endian_tag:#x}")
    if header_size != 0x70:
        raise DexError(f"unexpected header size {header_size:#x}")

    strings: list[str] = []
    for i in range(string_ids_size):
        off = struct.unpack_from("<I", data, string_ids_off + 4 * i)[0]
        _utf16_len, off = read_uleb128(data, off)
        end = data.index(b"\x00", off)
        strings.append(decode_mutf8(data[off:end]))

    type_descriptors = [
        strings[struct.unpack_from("<I", data, type_ids_off + 4 * i)[0]]
        for i in range(type_ids_size)
    ]

    field_refs = []
    for i in range(field_ids_size):
        class_idx, _type_idx, name_idx = struct.unpack_from("<HHI", data, field_ids_off + 8 * i)
        field_refs.append(DexFieldRef(type_descriptors[class_idx], strings[name_idx]))

    method_refs = []
    for i in range(method_ids_size):
        class_idx, _proto_idx, name_idx = struct.unpack_from("<HHI", data, method_ids_off + 8 * i)
        method_refs.append(DexMethodRef(type_descriptors[class_idx], strings[name_idx]))

    def parse_code(code_off: int) -> list:
        if code_off == 0:
            return []
        _regs, _ins, _outs, tries, _dbg, insns_size = struct.unpack_from(
            "<HHHHII", data, code_off
        )
        units = list(
            struct.unpack_from(f"<{insns_size}H", data, code_off + 16)
        )
        return decode_instructions(units)

    classes = []
    for i in range(class_defs_size):
        (
            class_idx, access_flags, superclass_idx, _interfaces_off,
            _source_file_idx, _annotations_off, class_data_off, _static_values_off,
        ) = struct.unpack_from("<8I", data, class_defs_off + 0x20 * i)
        cls = DexClass(
            descriptor=type_descriptors[class_idx],
            superclass=None if superclass_idx == NO_INDEX else type_descriptors[superclass_idx],
            access_flags=access_flags,
        )
        if class_data_off:
            off = class_data_off
            static_fields, off = read_uleb128(data, off)
            instance_fields, off = read_uleb128(data, off)
            direct_methods, off = read_uleb128(data, off)
            virtual_methods, off = read_uleb128(data, off)
            # index diffs accumulate within each list, restarting per list
            for count in (static_fields, instance_fields):
                idx = 0
                for j in range(count):
                    diff, off = read_uleb128(data, off)
                    _flags, off = read_uleb128(data, off)
                    idx = diff if j == 0 else idx + diff
                    cls.fields.append(field_refs[idx].name)
            for count, is_virtual in ((direct_methods, False), (virtual_methods, True)):
                idx = 0
                for j in range(count):
                    diff, off = read_uleb128(data, off)
                    flags, off = read_uleb128(data, off)
                    code_off, off = read_uleb128(data, off)
                    idx = diff if j == 0 else idx + diff
                    cls.methods.append(
                        DexMethod(
                            ref=method_refs[idx],
                            access_flags=flags,
                            virtual=is_virtual,
                            instructions=parse_code(code_off),
                        )
                    )
        classes.append(cls)

    return DexFile(
        strings=strings,
        type_descriptors=type_descriptors,
        field_refs=field_refs,
        method_refs=method_refs,
        classes=classes,
    )
