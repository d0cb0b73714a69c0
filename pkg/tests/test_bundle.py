import json

import numpy as np
import pytest

from droidauthor.bundle import (
    AppBundle,
    ClassRecord,
    ManifestInfo,
    MethodRecord,
    PackageName,
    RelationRecord,
    SchemaError,
    UndeclaredReferenceError,
    bundle_to_obj,
    parse_bundle,
    validate,
    write_bundle,
)

from helpers import make_bundle, random_bundle

MINIMAL = {
    "schema_version": 1,
    "app_id": "one",
    "packages": ["com.a"],
    "classes": [
        {"name": "com.a.Main", "package": "com.a", "fields": [], "methods": []}
    ],
    "relations": [],
    "manifest": {"components": [], "uses_features": []},
    "libraries": [],
}


def test_parse_minimal_bundle():
    bundle = parse_bundle(json.dumps(MINIMAL))
    assert bundle.app_id == "one"
    assert bundle.packages == (PackageName("com.a"),)
    assert len(bundle.classes) == 1


def test_parse_rejects_undeclared_relation_package():
    doc = dict(MINIMAL)
    doc["relations"] = [{"from_pkg": "com.a", "to_pkg": "com.ghost", "kind": "call", "count": 1}]
    with pytest.raises(UndeclaredReferenceError) as err:
        parse_bundle(json.dumps(doc))
    assert "com.ghost" in str(err.value)


def test_parse_rejects_missing_field_with_path():
    doc = dict(MINIMAL)
    del doc["packages"]
    with pytest.raises(SchemaError) as err:
        parse_bundle(json.dumps(doc))
    assert "$.packages" in str(err.value)


def test_parse_rejects_mistyped_field():
    doc = dict(MINIMAL)
    doc["relations"] = [{"from_pkg": "com.a", "to_pkg": "com.a", "kind": "call", "count": "2"}]
    with pytest.raises(SchemaError) as err:
        parse_bundle(json.dumps(doc))
    assert "count" in str(err.value)


def test_parse_rejects_unsupported_version():
    doc = dict(MINIMAL)
    doc["schema_version"] = 99
    with pytest.raises(SchemaError):
        parse_bundle(json.dumps(doc))


def test_roundtrip_structural_equality_on_random_bundles():
    rng = np.random.default_rng(7)
    for _ in range(100):
        bundle = random_bundle(rng)
        assert validate(bundle).ok, validate(bundle).issues
        again = parse_bundle(write_bundle(bundle))
        assert again == bundle


def test_write_is_canonical_and_newline_free_inside():
    bundle = parse_bundle(json.dumps(MINIMAL))
    a = write_bundle(bundle)
    b = write_bundle(parse_bundle(a))
    assert a == b
    assert "\n" not in a[:-1]
    assert '"relations":[]' in a


def test_validate_empty_report_on_valid():
    assert validate(parse_bundle(json.dumps(MINIMAL))).ok


def test_validate_main_activity_undeclared():
    bundle = make_bundle(["com.a"])
    bad = AppBundle(
        app_id="x",
        packages=bundle.packages,
        manifest=ManifestInfo(main_activity="com.a.Ghost"),
    )
    assert "MANIFEST_MAIN_UNDECLARED" in validate(bad).codes()


def test_validate_nonpositive_relation_count():
    bad = make_bundle(["com.a", "com.b"], relations=[("com.a", "com.b", "call", 0)])
    assert "RELATION_COUNT_NONPOSITIVE" in validate(bad).codes()


@pytest.mark.parametrize(
    "mutate,code",
    [
        (lambda b: AppBundle(app_id="", packages=b.packages), "APP_ID_EMPTY"),
        (
            lambda b: AppBundle(app_id="x", packages=b.packages, schema_version=2),
            "SCHEMA_VERSION_UNSUPPORTED",
        ),
        (
            lambda b: AppBundle(app_id="x", packages=(PackageName("com..a"),)),
            "PACKAGE_NAME_INVALID",
        ),
        (
            lambda b: AppBundle(
                app_id="x",
                packages=b.packages,
                classes=(ClassRecord(name="com.other.C", package=PackageName("com.other")),),
            ),
            "CLASS_PACKAGE_UNDECLARED",
        ),
        (
            lambda b: AppBundle(
                app_id="x",
                packages=b.packages,
                classes=(ClassRecord(name="wrong.C", package=PackageName("com.a")),),
            ),
            "CLASS_NAME_PACKAGE_MISMATCH",
        ),
        (
            lambda b: AppBundle(
                app_id="x",
                packages=b.packages,
                classes=(
                    ClassRecord(
                        name="com.a.C",
                        package=PackageName("com.a"),
                        methods=(MethodRecord(name=""),),
                    ),
                ),
            ),
            "CLASS_METHOD_NAME_EMPTY",
        ),
        (
            lambda b: AppBundle(
                app_id="x",
                packages=b.packages,
                classes=(
                    ClassRecord(
                        name="com.a.C",
                        package=PackageName("com.a"),
                        methods=(MethodRecord(name="m", instructions=("bad token",)),),
                    ),
                ),
            ),
            "TOKEN_WHITESPACE",
        ),
        (
            lambda b: AppBundle(
                app_id="x",
                packages=b.packages,
                relations=(
                    RelationRecord(PackageName("com.a"), PackageName("com.a"), "jump", 1),
                ),
            ),
            "RELATION_KIND_INVALID",
        ),
        (
            lambda b: AppBundle(
                app_id="x",
                packages=b.packages,
                manifest=ManifestInfo(components=(("widget", "com.a.C"),)),
            ),
            "MANIFEST_COMPONENT_KIND_INVALID",
        ),
    ],
)
def test_single_invariant_flip_is_reported(mutate, code):
    base = make_bundle(["com.a"])
    assert code in validate(mutate(base)).codes()


def test_shipped_schema_accepts_generated_documents():
    jsonschema = pytest.importorskip("jsonschema")
    from importlib import resources

    schema = json.loads(
        resources.files("droidauthor").joinpath("data/app_bundle.schema.json").read_text()
    )
    validator = jsonschema.Draft202012Validator(schema)
    rng = np.random.default_rng(11)
    for _ in range(25):
        doc = bundle_to_obj(random_bundle(rng))
        errors = list(validator.iter_errors(doc))
        assert not errors, errors[0] if errors else None
