"""Stylometric feature extraction and per-category TF-IDF vocabularies.

Six token categories per app: identifier names, framework API call
sequences and instruction streams (primary module only), component names,
uses-features and library names (app level). Each category gets its own
n-gram vocabulary capped by ``max_features`` and ``min_df``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .bundle import AppBundle
from .clustering import AuthorshipPartition

CATEGORIES = (
    "identifiers",
    "api_calls",
    "instructions",
    "component_names",
    "uses_features",
    "library_names",
)

# Framework lifecycle/Object methods carry no authorship signal; skipped for
# identifier tokens on top of the extractor's overrides_framework flag.
DEFAULT_FRAMEWORK_OVERRIDES = (
    "onCreate",
    "onPause",
    "onResume",
    "onDestroy",
    "onStart",
    "onStop",
    "toString",
    "equals",
    "hashCode",
)


class StylometryError(Exception):
    pass


class EmptyPrimaryModule(StylometryError):
    """The primary module contains no classes to extract from."""


class CategoryMismatch(StylometryError):
    pass


@dataclass(frozen=True)
class StyleProfile:
    identifiers: tuple[str, ...] = ()
    api_calls: tuple[str, ...] = ()
    instructions: tuple[str, ...] = ()
    component_names: tuple[str, ...] = ()
    uses_features: tuple[str, ...] = ()
    library_names: tuple[str, ...] = ()

    def category(self, name: str) -> tuple[str, ...]:
        if name not in CATEGORIES:
            raise CategoryMismatch(name)
        return getattr(self, name)


@dataclass(frozen=True)
class TfidfVocabulary:
    category: str
    selected: tuple[str, ...]  # n-grams in ranking order, tokens joined by spaces
    idf: dict  # n-gram -> idf
    df: dict  # n-gram -> document frequency


def tokenize_identifier(name: str) -> list[str]:
    """Split a (possibly qualified or nested) identifier; camelCase stays intact."""
    out = []
    for piece in name.replace("$", ".").split("."):
        if piece:
            out.append(piece)
    return out


def extract_profile(
    bundle: AppBundle,
    partition: AuthorshipPartition,
    framework_overrides=DEFAULT_FRAMEWORK_OVERRIDES,
) -> StyleProfile:
    """Token sequences for one app.

    Dex-level categories come only from classes whose package sits in the
    primary module; instruction and API tokens keep literal order. Manifest
    and library categories are app-wide.
    """
    primary = partition.primary_packages()
    skip_names = set(framework_overrides)

    identifiers: list[str] = []
    api_calls: list[str] = []
    instructions: list[str] = []
    found_class = False
    for cls in bundle.classes:
        if cls.package not in primary:
            continue
        found_class = True
        identifiers.extend(tokenize_identifier(cls.simple_name))
        for fld in cls.fields:
            identifiers.extend(tokenize_identifier(fld))
        for m in cls.methods:
            if not m.overrides_framework and m.name not in skip_names:
                identifiers.extend(tokenize_identifier(m.name))
            api_calls.extend(m.api_calls)
            instructions.extend(m.instructions)
    if not found_class:
        raise EmptyPrimaryModule(bundle.app_id)

    component_names: list[str] = []
    for _kind, class_name in bundle.manifest.components:
        component_names.extend(tokenize_identifier(class_name.rsplit(".", 1)[-1]))

    return StyleProfile(
        identifiers=tuple(identifiers),
        api_calls=tuple(api_calls),
        instructions=tuple(instructions),
        component_names=tuple(component_names),
        uses_features=tuple(bundle.manifest.uses_features),
        library_names=tuple(bundle.libraries),
    )


def _ngram_counts(tokens, n_lo: int, n_hi: int) -> dict:
    counts: dict[str, int] = {}
    n_tokens = len(tokens)
    for n in range(n_lo, n_hi + 1):
        for i in range(n_tokens - n + 1):
            gram = " ".join(tokens[i : i + n])
            counts[gram] = counts.get(gram, 0) + 1
    return counts


def fit_tfidf(
    corpus,
    category: str = "",
    n_range: tuple[int, int] = (3, 5),
    min_df: int = 3,
    max_features: int = 50,
) -> TfidfVocabulary:
    """Select the top n-grams of a token corpus by total tf-idf mass.

    Candidates are contiguous windows of ``n_range`` tokens; those present in
    fewer than ``min_df`` documents are dropped; the survivors are ranked by
    summed tf * idf with idf = ln((1+N)/(1+df)) + 1, ties broken
    lexicographically; the top ``max_features`` are kept.
    """
    n_lo, n_hi = n_range
    n_docs = len(corpus)
    df: dict[str, int] = {}
    total_tf: dict[str, int] = {}
    for doc in corpus:
        counts = _ngram_counts(tuple(doc), n_lo, n_hi)
        for gram, count in counts.items():
            df[gram] = df.get(gram, 0) + 1
            total_tf[gram] = total_tf.get(gram, 0) + count

    idf = {
        gram: math.log((1 + n_docs) / (1 + d)) + 1.0
        for gram, d in df.items()
        if d >= min_df
    }
    ranked = sorted(idf, key=lambda g: (-total_tf[g] * idf[g], g))
    selected = tuple(ranked[:max_features])
    return TfidfVocabulary(
        category=category,
        selected=selected,
        idf={g: idf[g] for g in selected},
        df={g: df[g] for g in selected},
    )


def transform_tfidf(vocab: TfidfVocabulary, profile: StyleProfile) -> dict:
    """Sparse weights for one app: raw n-gram count times idf; zeros omitted."""
    tokens = profile.category(vocab.category)
    weights: dict[str, float] = {}
    if not vocab.selected:
        return weights
    counts = _ngram_counts(tokens, min(len(g.split()) for g in vocab.selected), max(len(g.split()) for g in vocab.selected))
    for gram in vocab.selected:
        count = counts.get(gram, 0)
        if count:
            weights[gram] = count * vocab.idf[gram]
    return weights


def fit_all_categories(profiles, n_range=(3, 5), min_df: int = 3, max_features: int = 50) -> dict:
    """One vocabulary per category, fitted over the same training profiles."""
    return {
        cat: fit_tfidf([p.category(cat) for p in profiles], cat, n_range, min_df, max_features)
        for cat in CATEGORIES
    }
