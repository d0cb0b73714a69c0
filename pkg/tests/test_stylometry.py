import math

import numpy as np
import pytest

from droidauthor.bundle import ClassRecord, ManifestInfo, MethodRecord, PackageName
from droidauthor.clustering import AuthorshipPartition, decouple
from droidauthor.evaluation import generate_corpus
from droidauthor.stylometry import (
    CATEGORIES,
    CategoryMismatch,
    EmptyPrimaryModule,
    StyleProfile,
    extract_profile,
    fit_all_categories,
    fit_tfidf,
    tokenize_identifier,
    transform_tfidf,
)

from helpers import make_bundle


def two_module_bundle():
    classes = [
        ClassRecord(
            name="app.main.Foo",
            package=PackageName("app.main"),
            fields=("counter",),
            methods=(
                MethodRecord(name="bar", instructions=("const-string", "return-void"), api_calls=("android.util.Log.d",)),
                MethodRecord(name="onCreate", overrides_framework=True, instructions=("invoke-super",)),
            ),
        ),
        ClassRecord(
            name="lib.other.Widget",
            package=PackageName("lib.other"),
            fields=("libfield",),
            methods=(MethodRecord(name="libmethod", instructions=("lib-op",), api_calls=("java.util.List.add",)),),
        ),
    ]
    manifest = ManifestInfo(
        main_activity="app.main.Foo",
        components=(("activity", "app.main.Foo"),),
        uses_features=("camera",),
    )
    return make_bundle(["app.main", "lib.other"], classes=classes, manifest=manifest)


def primary_partition(bundle, primary_pkg="app.main"):
    module_of = {p: (0 if p.dotted == primary_pkg else 1) for p in bundle.packages}
    return AuthorshipPartition(module_of=module_of, primary_module=0)


def test_identifiers_include_names_but_not_framework_overrides():
    profile = extract_profile(two_module_bundle(), primary_partition(two_module_bundle()))
    assert "Foo" in profile.identifiers
    assert "bar" in profile.identifiers
    assert "counter" in profile.identifiers
    assert "onCreate" not in profile.identifiers


def test_override_exclusion_by_name_list():
    cls = ClassRecord(
        name="a.C",
        package=PackageName("a"),
        methods=(MethodRecord(name="onResume"), MethodRecord(name="refresh")),
    )
    bundle = make_bundle(["a"], classes=[cls])
    profile = extract_profile(bundle, primary_partition(bundle, "a"))
    assert "refresh" in profile.identifiers
    assert "onResume" not in profile.identifiers


def test_instructions_and_api_calls_keep_all_methods_in_order():
    profile = extract_profile(two_module_bundle(), primary_partition(two_module_bundle()))
    # overridden methods still contribute instruction/api tokens, in literal order
    assert profile.instructions == ("const-string", "return-void", "invoke-super")
    assert profile.api_calls == ("android.util.Log.d",)


def test_uses_features_copied():
    profile = extract_profile(two_module_bundle(), primary_partition(two_module_bundle()))
    assert profile.uses_features == ("camera",)


def test_component_names_tokenized_from_simple_name():
    profile = extract_profile(two_module_bundle(), primary_partition(two_module_bundle()))
    assert profile.component_names == ("Foo",)


def test_no_dex_tokens_from_non_primary_module():
    profile = extract_profile(two_module_bundle(), primary_partition(two_module_bundle()))
    for token in ("Widget", "libfield", "libmethod", "lib-op"):
        assert token not in profile.identifiers
        assert token not in profile.instructions
    assert "java.util.List.add" not in profile.api_calls


def test_generated_apps_have_no_library_dex_tokens():
    corpus = generate_corpus(1, 2, shared_library_pool=4, seed=3)
    for bundle in corpus.bundles:
        partition = decouple(bundle)
        profile = extract_profile(bundle, partition)
        truth = corpus.ground_truth[bundle.app_id]
        library_tokens = set()
        for cls in bundle.classes:
            if truth.get(cls.name) == "library":
                library_tokens.update(tokenize_identifier(cls.name.rsplit(".", 1)[-1]))
        assert not library_tokens & set(profile.identifiers)


def test_empty_primary_module_raises():
    bundle = two_module_bundle()
    module_of = {p: 1 for p in bundle.packages}
    with pytest.raises(EmptyPrimaryModule):
        extract_profile(bundle, AuthorshipPartition(module_of=module_of, primary_module=0))


def test_tokenize_identifier_splits_dots_and_dollars():
    assert tokenize_identifier("Outer$Inner") == ["Outer", "Inner"]
    assert tokenize_identifier("a.b.CamelCase") == ["a", "b", "CamelCase"]
    assert tokenize_identifier("plain") == ["plain"]


# --- TF-IDF ------------------------------------------------------------------


def test_min_df_forces_empty_vocabulary_on_two_docs():
    vocab = fit_tfidf([["a", "b", "c", "d"], ["a", "b", "c", "d"]], "identifiers")
    assert vocab.selected == ()


def test_five_identical_documents_select_single_trigram():
    docs = [["x", "y", "z"]] * 5
    vocab = fit_tfidf(docs, "identifiers")
    assert vocab.selected == ("x y z",)
    assert vocab.df["x y z"] == 5
    assert vocab.idf["x y z"] == pytest.approx(math.log(6 / 6) + 1.0)


def _oracle_fit(corpus, n_lo=3, n_hi=5, min_df=3, max_features=50):
    """Direct-definition reimplementation kept independent of the module."""
    from collections import Counter

    doc_counts = []
    for doc in corpus:
        c = Counter()
        for n in range(n_lo, n_hi + 1):
            for i in range(len(doc) - n + 1):
                c[" ".join(doc[i : i + n])] += 1
        doc_counts.append(c)
    df = Counter()
    for c in doc_counts:
        for g in c:
            df[g] += 1
    survivors = [g for g in df if df[g] >= min_df]
    idf = {g: math.log((1 + len(corpus)) / (1 + df[g])) + 1 for g in survivors}
    mass = {g: sum(c[g] for c in doc_counts) * idf[g] for g in survivors}
    ranked = sorted(survivors, key=lambda g: (-mass[g], g))[:max_features]
    return ranked, idf


def random_corpus(rng, n_docs=10, alphabet=6, length=30):
    letters = [f"t{i}" for i in range(alphabet)]
    return [
        [str(rng.choice(letters)) for _ in range(int(rng.integers(5, length)))]
        for _ in range(n_docs)
    ]


def test_fit_matches_direct_definition_oracle():
    rng = np.random.default_rng(2)
    for _ in range(10):
        corpus = random_corpus(rng)
        vocab = fit_tfidf(corpus, "instructions")
        ranked, idf = _oracle_fit(corpus)
        assert list(vocab.selected) == ranked
        for g in vocab.selected:
            assert vocab.idf[g] == pytest.approx(idf[g])


def test_vocabulary_caps_hold():
    rng = np.random.default_rng(8)
    corpus = random_corpus(rng, n_docs=20, alphabet=4, length=60)
    vocab = fit_tfidf(corpus, "instructions")
    assert len(vocab.selected) <= 50
    for g in vocab.selected:
        assert vocab.df[g] >= 3
        assert 3 <= len(g.split()) <= 5


def test_fit_deterministic():
    rng = np.random.default_rng(21)
    corpus = random_corpus(rng)
    assert fit_tfidf(corpus, "x") == fit_tfidf(corpus, "x")


def test_transform_empty_when_no_selected_ngram_present():
    vocab = fit_tfidf([["x", "y", "z"]] * 5, "identifiers")
    profile = StyleProfile(identifiers=("p", "q", "r", "s"))
    assert transform_tfidf(vocab, profile) == {}


def test_transform_weight_is_count_times_idf():
    vocab = fit_tfidf([["x", "y", "z"]] * 5, "identifiers")
    profile = StyleProfile(identifiers=("x", "y", "z", "x", "y", "z"))
    weights = transform_tfidf(vocab, profile)
    assert weights == {"x y z": pytest.approx(2 * vocab.idf["x y z"])}


def test_transform_reproduces_fit_time_row():
    rng = np.random.default_rng(5)
    corpus = random_corpus(rng)
    vocab = fit_tfidf(corpus, "instructions")
    from collections import Counter

    doc = corpus[0]
    counts = Counter()
    for n in range(3, 6):
        for i in range(len(doc) - n + 1):
            counts[" ".join(doc[i : i + n])] += 1
    expected = {
        g: counts[g] * vocab.idf[g] for g in vocab.selected if counts[g] > 0
    }
    got = transform_tfidf(vocab, StyleProfile(instructions=tuple(doc)))
    assert got.keys() == expected.keys()
    for g in expected:
        assert got[g] == pytest.approx(expected[g])


def test_transform_category_mismatch():
    vocab = fit_tfidf([["x", "y", "z"]] * 5, "no_such_category")
    with pytest.raises(CategoryMismatch):
        transform_tfidf(vocab, StyleProfile())


def test_fit_all_categories_covers_every_category():
    profiles = [
        StyleProfile(identifiers=("a", "b", "c"), instructions=("i", "j", "k"))
        for _ in range(4)
    ]
    vocabs = fit_all_categories(profiles)
    assert set(vocabs) == set(CATEGORIES)
    assert vocabs["identifiers"].selected == ("a b c",)
    assert vocabs["uses_features"].selected == ()
