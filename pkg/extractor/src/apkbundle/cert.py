"""Signing-certificate identity: SHA-256 of the v1 signer certificate."""

from __future__ import annotations

import hashlib
import zipfile

from cryptography.hazmat.primitives.serialization import Encoding, pkcs7

_SIGNATURE_SUFFIXES = (".RSA", ".DSA", ".EC")


class UnsignedApk(Exception):
    """No readable signing certificate; the bundle stays unlabeled."""


def signing_identity(archive: zipfile.ZipFile) -> str:
    """Hex SHA-256 of the first signer's certificate (META-INF signature block)."""
    blocks = sorted(
        name
        for name in archive.namelist()
        if name.startswith("META-INF/") and name.upper().endswith(_SIGNATURE_SUFFIXES)
    )
    for name in blocks:
        try:
            certs = pkcs7.load_der_pkcs7_certificates(archive.read(name))
        except ValueError:
            continue
        if certs:
            der = certs[0].public_bytes(Encoding.DER)
            return hashlib.sha256(der).hexdigest()
    raise UnsignedApk("no signature block with a readable certificate")
