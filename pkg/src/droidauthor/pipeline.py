"""End-to-end wiring: decouple, featurize, train, predict, cross-validate.

Keeps the batch front end thin and lets programmatic callers (tests,
experiments) run the same flows the command line does.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bundle import AppBundle
from .classify import (
    TrainedModel,
    make_label_index,
    predict,
    predict_proba,
    train_linear_svm,
    train_logreg,
    train_random_forest,
)
from .clustering import DecoupleConfig, decouple, single_module_partition
from .embedding import EmbeddingTable, fingerprint, train_embedding
from .evaluation import MetricsReport, classification_metrics, kfold_split
from .stylometry import (
    CATEGORIES,
    DEFAULT_FRAMEWORK_OVERRIDES,
    StyleProfile,
    extract_profile,
    fit_all_categories,
)

CLASSIFIER_KINDS = ("logreg", "svm", "rf")


@dataclass(frozen=True)
class PipelineConfig:
    decouple: DecoupleConfig = field(default_factory=DecoupleConfig)
    framework_overrides: tuple = DEFAULT_FRAMEWORK_OVERRIDES
    features: str = "primary"  # primary | whole
    ngram_range: tuple[int, int] = (3, 5)
    min_df: int = 3
    max_features: int = 50
    window: int = 3
    min_count: int = 10
    dim: int = 100
    negatives: int = 5
    epochs: int = 5
    learning_rate: float = 0.025
    seed: int = 0

    def to_metadata(self) -> dict:
        return {
            "framework_prefixes": list(self.decouple.framework_prefixes),
            "extra_libraries": list(self.decouple.extra_libraries),
            "mode": self.decouple.mode,
            "alpha": self.decouple.alpha,
            "tolerance": self.decouple.tolerance,
            "decouple_seed": self.decouple.seed,
            "framework_overrides": list(self.framework_overrides),
            "features": self.features,
            "ngram_range": list(self.ngram_range),
            "min_df": self.min_df,
            "max_features": self.max_features,
            "window": self.window,
            "min_count": self.min_count,
            "dim": self.dim,
            "negatives": self.negatives,
            "epochs": self.epochs,
            "learning_rate": self.learning_rate,
            "seed": self.seed,
        }


def config_from_metadata(meta: dict) -> PipelineConfig:
    return PipelineConfig(
        decouple=DecoupleConfig(
            framework_prefixes=tuple(meta["framework_prefixes"]),
            extra_libraries=tuple(meta["extra_libraries"]),
            mode=meta["mode"],
            alpha=meta["alpha"],
            tolerance=meta["tolerance"],
            seed=meta["decouple_seed"],
        ),
        framework_overrides=tuple(meta["framework_overrides"]),
        features=meta["features"],
        ngram_range=tuple(meta["ngram_range"]),
        min_df=meta["min_df"],
        max_features=meta["max_features"],
        window=meta["window"],
        min_count=meta["min_count"],
        dim=meta["dim"],
        negatives=meta["negatives"],
        epochs=meta["epochs"],
        learning_rate=meta["learning_rate"],
        seed=meta["seed"],
    )


def profile_app(bundle: AppBundle, config: PipelineConfig) -> StyleProfile:
    """Decouple (or not, in whole-app mode) and extract one app's profile."""
    if config.features == "whole":
        partition = single_module_partition(bundle, config.decouple.framework_prefixes)
    else:
        partition = decouple(bundle, config.decouple)
    return extract_profile(bundle, partition, config.framework_overrides)


def embedding_corpus(profiles) -> list:
    """Sentences for embedding training: one per nonempty category sequence."""
    sentences = []
    for profile in profiles:
        for category in CATEGORIES:
            seq = profile.category(category)
            if seq:
                sentences.append(seq)
    return sentences


def fit_featurizer(profiles, config: PipelineConfig, seed=None):
    """Fit the TF-IDF vocabularies and embedding table on training profiles."""
    vocabs = fit_all_categories(
        profiles, config.ngram_range, config.min_df, config.max_features
    )
    table = train_embedding(
        embedding_corpus(profiles),
        window=config.window,
        min_count=config.min_count,
        dim=config.dim,
        negatives=config.negatives,
        epochs=config.epochs,
        learning_rate=config.learning_rate,
        seed=config.seed if seed is None else seed,
    )
    return vocabs, table


def fingerprint_matrix(profiles, vocabs, table: EmbeddingTable) -> np.ndarray:
    return np.vstack([fingerprint(p, vocabs, table).values for p in profiles])


def fit_scaler(X: np.ndarray) -> dict:
    """Per-column standardization parameters; constant columns pass through."""
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    return {"mean": mean, "scale": scale}


def apply_scaler(X: np.ndarray, scaler: dict) -> np.ndarray:
    return (X - scaler["mean"]) / scaler["scale"]


def _train_classifier(kind: str, X, y, seed: int, hyper: dict | None = None) -> TrainedModel:
    hyper = hyper or {}
    if kind == "logreg":
        return train_logreg(X, y, seed=seed, **hyper)
    if kind == "svm":
        return train_linear_svm(X, y, seed=seed, **hyper)
    if kind == "rf":
        return train_random_forest(X, y, seed=seed, **hyper)
    raise ValueError(f"unknown classifier kind {kind!r}")


def train_model(bundles, kind: str, config: PipelineConfig, hyper: dict | None = None) -> TrainedModel:
    """Full training flow over a labeled corpus; returns a persistable model."""
    bundles = sorted(bundles, key=lambda b: b.app_id)
    labels = [b.author_label for b in bundles]
    if any(label is None for label in labels):
        raise ValueError("training corpus contains unlabeled bundles")
    label_index = make_label_index(labels)

    profiles = [profile_app(b, config) for b in bundles]
    vocabs, table = fit_featurizer(profiles, config)
    X = fingerprint_matrix(profiles, vocabs, table)
    scaler = fit_scaler(X)
    y = np.array([label_index[label] for label in labels])

    model = _train_classifier(kind, apply_scaler(X, scaler), y, config.seed, hyper)
    model.label_index = label_index
    model.vocabs = vocabs
    model.embedding = table
    model.metadata = {**model.metadata, "pipeline": config.to_metadata(), "scaler": scaler}
    return model


def predict_bundles(model: TrainedModel, bundles):
    """Per-app predictions: (app_id, label, probability or None), sorted by app id."""
    config = config_from_metadata(model.metadata["pipeline"])
    bundles = sorted(bundles, key=lambda b: b.app_id)
    profiles = [profile_app(b, config) for b in bundles]
    X = fingerprint_matrix(profiles, model.vocabs, model.embedding)
    X = apply_scaler(X, model.metadata["scaler"])
    class_ids = predict(model, X)
    probas = predict_proba(model, X) if model.kind == "logreg" else None
    out = []
    for i, bundle in enumerate(bundles):
        cid = int(class_ids[i])
        proba = float(probas[i, cid]) if probas is not None else None
        out.append((bundle.app_id, model.label_of(cid), proba))
    return out


@dataclass(frozen=True)
class EvaluationRun:
    overall: MetricsReport
    per_fold: tuple[MetricsReport, ...]
    predictions: tuple  # of (app_id, true label, predicted label)


def crossvalidate(
    bundles,
    kinds,
    config: PipelineConfig,
    k: int = 10,
    seed: int = 0,
    transform_test=None,
    hyper: dict | None = None,
) -> dict:
    """k-fold CV over a labeled corpus for one or more classifier kinds.

    Profiles are computed once per app; featurizers are refitted per fold on
    the training side only. ``transform_test`` (e.g. an obfuscator) is applied
    to test bundles before profiling, mimicking unseen transformed inputs.
    Returns {kind: EvaluationRun}.
    """
    bundles = sorted(bundles, key=lambda b: b.app_id)
    label_index = make_label_index([b.author_label for b in bundles])
    profile_cache = {b.app_id: profile_app(b, config) for b in bundles}

    folds = kfold_split(bundles, k=k, seed=seed)
    fold_predictions: dict[str, list] = {kind: [] for kind in kinds}
    fold_reports: dict[str, list] = {kind: [] for kind in kinds}

    for fold_idx, test_fold in enumerate(folds):
        test_ids = {b.app_id for b in test_fold}
        train = [b for b in bundles if b.app_id not in test_ids]
        train_profiles = [profile_cache[b.app_id] for b in train]
        vocabs, table = fit_featurizer(train_profiles, config, seed=config.seed + fold_idx)

        X_train = fingerprint_matrix(train_profiles, vocabs, table)
        scaler = fit_scaler(X_train)
        X_train = apply_scaler(X_train, scaler)
        y_train = np.array([label_index[b.author_label] for b in train])

        if transform_test is None:
            test_profiles = [profile_cache[b.app_id] for b in test_fold]
        else:
            test_profiles = [profile_app(transform_test(b), config) for b in test_fold]
        X_test = apply_scaler(fingerprint_matrix(test_profiles, vocabs, table), scaler)

        for kind in kinds:
            model = _train_classifier(kind, X_train, y_train, config.seed, hyper)
            class_ids = predict(model, X_test)
            id_to_label = {cid: lbl for lbl, cid in label_index.items()}
            pairs = [
                (b.app_id, b.author_label, id_to_label[int(cid)])
                for b, cid in zip(test_fold, class_ids)
            ]
            fold_predictions[kind].extend(pairs)
            fold_reports[kind].append(
                classification_metrics([p[2] for p in pairs], [p[1] for p in pairs])
            )

    runs = {}
    for kind in kinds:
        preds = sorted(fold_predictions[kind])
        overall = classification_metrics([p[2] for p in preds], [p[1] for p in preds])
        runs[kind] = EvaluationRun(
            overall=overall,
            per_fold=tuple(fold_reports[kind]),
            predictions=tuple(preds),
        )
    return runs
