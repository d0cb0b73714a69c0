import hashlib
import json
import sys
import zipfile
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent / "fixtures"))

from apkbundle.cert import UnsignedApk, signing_identity
from apkbundle.cli import main
from apkbundle.extract import UnreadableApk, dump_document, extract

FIXTURES = Path(__file__).parent / "fixtures"
FIXTURE_APK = FIXTURES / "fixture.apk"
CORRUPT_APK = FIXTURES / "corrupt.apk"


def test_extract_is_deterministic():
    assert dump_document(extract(FIXTURE_APK)) == dump_document(extract(FIXTURE_APK))


def test_unreadable_apk_raises():
    with pytest.raises(UnreadableApk):
        extract(CORRUPT_APK)


def test_apk_without_dex_unreadable(tmp_path):
    path = tmp_path / "empty.apk"
    with zipfile.ZipFile(path, "w") as zf:
        zf.writestr("AndroidManifest.xml", b"")
    with pytest.raises(UnreadableApk):
        extract(path)


def test_author_label_is_certificate_sha256():
    doc = extract(FIXTURE_APK)
    with zipfile.ZipFile(FIXTURE_APK) as zf:
        from cryptography.hazmat.primitives.serialization import Encoding, pkcs7

        certs = pkcs7.load_der_pkcs7_certificates(zf.read("META-INF/CERT.RSA"))
        expected = hashlib.sha256(certs[0].public_bytes(Encoding.DER)).hexdigest()
    assert doc["author_label"] == expected


def test_unsigned_apk_omits_label(tmp_path):
    stripped = tmp_path / "unsigned.apk"
    with zipfile.ZipFile(FIXTURE_APK) as src, zipfile.ZipFile(stripped, "w") as dst:
        for name in src.namelist():
            if not name.startswith("META-INF/"):
                dst.writestr(name, src.read(name))
    doc = extract(stripped)
    assert "author_label" not in doc
    with zipfile.ZipFile(stripped) as zf:
        with pytest.raises(UnsignedApk):
            signing_identity(zf)


def test_batch_isolates_corrupt_file(tmp_path, capsys):
    work = tmp_path / "apks"
    work.mkdir()
    for i in range(2):
        (work / f"app{i}.apk").write_bytes(FIXTURE_APK.read_bytes())
    (work / "broken.apk").write_bytes(CORRUPT_APK.read_bytes())
    out = tmp_path / "bundles"
    code = main([str(work), "--out", str(out)])
    captured = capsys.readouterr()
    assert code == 2
    summary = json.loads(captured.out)
    assert len(summary["extracted"]) == 2
    assert len(summary["failures"]) == 1
    assert "broken.apk" in summary["failures"][0]["apk"]
    assert sorted(p.name for p in out.iterdir()) == ["app0.json", "app1.json"]


def test_batch_rerun_idempotent(tmp_path):
    out = tmp_path / "bundles"
    assert main([str(FIXTURE_APK), "--out", str(out)]) == 0
    first = (out / "fixture.json").read_bytes()
    assert main([str(FIXTURE_APK), "--out", str(out)]) == 0
    assert (out / "fixture.json").read_bytes() == first


def test_parallel_batch_matches_serial(tmp_path):
    work = tmp_path / "apks"
    work.mkdir()
    for i in range(3):
        (work / f"app{i}.apk").write_bytes(FIXTURE_APK.read_bytes())
    serial, parallel = tmp_path / "s", tmp_path / "p"
    assert main([str(work), "--out", str(serial)]) == 0
    assert main([str(work), "--out", str(parallel), "--jobs", "3"]) == 0
    for name in ("app0.json", "app1.json", "app2.json"):
        assert (serial / name).read_bytes() == (parallel / name).read_bytes()


def test_usage_error_exits_one():
    with pytest.raises(SystemExit) as err:
        main(["--out", "x"])
    assert err.value.code == 1


def test_extra_libs_file_extends_matches(tmp_path):
    libs = tmp_path / "libs.txt"
    libs.write_text("com.fix.app.util\n")
    out = tmp_path / "bundles"
    assert main([str(FIXTURE_APK), "--out", str(out), "--libs-file", str(libs)]) == 0
    doc = json.loads((out / "fixture.json").read_text())
    assert doc["libraries"] == ["com.fix.app.util"]
