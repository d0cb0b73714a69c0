"""Supervised author classifiers and model persistence.

Three from-scratch trainers over fingerprint matrices: multinomial logistic
regression, one-vs-rest linear SVM, and a random forest of Gini CART trees.
A trained model bundles classifier parameters with the featurization state
(TF-IDF vocabularies, embedding table, pipeline settings) in one versioned
artifact file.
"""

from __future__ import annotations

import base64
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .embedding import EmbeddingTable
from .stylometry import TfidfVocabulary

MODEL_MAGIC = b"DROIDAUTHOR.MODEL\n"
MODEL_FORMAT_VERSION = 1

MODEL_KINDS = ("logreg", "linear_svm", "random_forest")


class ClassifierError(Exception):
    pass


class SingleClass(ClassifierError):
    pass


class NonFiniteInput(ClassifierError):
    pass


class ShapeMismatch(ClassifierError):
    pass


class VersionMismatch(ClassifierError):
    pass


class CorruptArtifact(ClassifierError):
    pass


@dataclass
class TrainedModel:
    kind: str
    parameters: dict
    label_index: dict  # author label -> class id (sorted labels -> 0..K-1)
    vocabs: dict = field(default_factory=dict)  # category -> TfidfVocabulary
    embedding: EmbeddingTable | None = None
    metadata: dict = field(default_factory=dict)

    @property
    def n_classes(self) -> int:
        return len(self.label_index)

    @property
    def n_features(self) -> int:
        return int(self.parameters["n_features"])

    def label_of(self, class_id: int) -> str:
        for label, cid in self.label_index.items():
            if cid == class_id:
                return label
        raise KeyError(class_id)


def make_label_index(labels) -> dict:
    """Class ids assigned by sorted author label, for reproducibility."""
    return {label: i for i, label in enumerate(sorted(set(labels)))}


def _check_training_input(X: np.ndarray, y: np.ndarray) -> None:
    if not np.all(np.isfinite(X)):
        raise NonFiniteInput("training matrix contains non-finite values")
    if len(np.unique(y)) < 2:
        raise SingleClass("need at least two classes")
    if X.shape[0] != y.shape[0]:
        raise ShapeMismatch(f"{X.shape[0]} rows vs {y.shape[0]} labels")


def _canonical_order(X: np.ndarray, y: np.ndarray):
    """Sort rows by (label, feature values) so row order never matters."""
    keys = tuple(X[:, col] for col in range(X.shape[1] - 1, -1, -1)) + (y,)
    order = np.lexsort(keys)
    return X[order], y[order]


# ---------------------------------------------------------------------------
# Multinomial logistic regression
# ---------------------------------------------------------------------------


def logreg_loss_and_grad(W: np.ndarray, b: np.ndarray, X: np.ndarray, y: np.ndarray, l2: float):
    """Mean cross-entropy + L2 on weights, with analytic gradients."""
    logits = X @ W + b
    logits -= logits.max(axis=1, keepdims=True)
    exp = np.exp(logits)
    proba = exp / exp.sum(axis=1, keepdims=True)
    n = X.shape[0]
    loss = -float(np.mean(np.log(np.maximum(proba[np.arange(n), y], 1e-300))))
    loss += 0.5 * l2 * float(np.sum(W * W))
    delta = proba.copy()
    delta[np.arange(n), y] -= 1.0
    grad_w = X.T @ delta / n + l2 * W
    grad_b = delta.mean(axis=0)
    return loss, grad_w, grad_b


def train_logreg(
    X,
    y,
    l2: float = 1e-4,
    learning_rate: float = 0.5,
    epochs: int = 600,
    seed: int = 0,
) -> TrainedModel:
    """Softmax regression by full-batch gradient descent."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    _check_training_input(X, y)
    X, y = _canonical_order(X, y)
    n_classes = int(y.max()) + 1
    W = np.zeros((X.shape[1], n_classes))
    b = np.zeros(n_classes)

    initial_loss, _, _ = logreg_loss_and_grad(W, b, X, y, l2)
    loss = initial_loss
    for _ in range(epochs):
        loss, grad_w, grad_b = logreg_loss_and_grad(W, b, X, y, l2)
        W -= learning_rate * grad_w
        b -= learning_rate * grad_b
    return TrainedModel(
        kind="logreg",
        parameters={
            "weights": W,
            "bias": b,
            "n_features": X.shape[1],
            "initial_loss": initial_loss,
            "final_loss": loss,
        },
        label_index={},
        metadata={"l2": l2, "learning_rate": learning_rate, "epochs": epochs, "seed": seed},
    )


# ---------------------------------------------------------------------------
# One-vs-rest linear SVM
# ---------------------------------------------------------------------------


def svm_objective(w: np.ndarray, b: float, X: np.ndarray, t: np.ndarray, C: float) -> float:
    margins = t * (X @ w + b)
    return 0.5 * float(w @ w) / C + float(np.mean(np.maximum(0.0, 1.0 - margins)))


def train_linear_svm(
    X,
    y,
    C: float = 1.0,
    learning_rate: float = 0.1,
    epochs: int = 300,
    seed: int = 0,
) -> TrainedModel:
    """One-vs-rest hinge loss with L2, full-batch subgradient descent."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    _check_training_input(X, y)
    X, y = _canonical_order(X, y)
    n, d = X.shape
    n_classes = int(y.max()) + 1

    W = np.zeros((d, n_classes))
    b = np.zeros(n_classes)
    initial = final = 0.0
    for k in range(n_classes):
        t = np.where(y == k, 1.0, -1.0)
        w_k = np.zeros(d)
        b_k = 0.0
        initial += svm_objective(w_k, b_k, X, t, C)
        for epoch in range(epochs):
            lr = learning_rate / (1.0 + epoch / 50.0)
            margins = t * (X @ w_k + b_k)
            active = margins < 1.0
            grad_w = w_k / C - (t[active] @ X[active]) / n
            grad_b = -float(np.sum(t[active])) / n
            w_k -= lr * grad_w
            b_k -= lr * grad_b
        final += svm_objective(w_k, b_k, X, t, C)
        W[:, k] = w_k
        b[k] = b_k

    return TrainedModel(
        kind="linear_svm",
        parameters={
            "weights": W,
            "bias": b,
            "n_features": d,
            "initial_loss": initial,
            "final_loss": final,
        },
        label_index={},
        metadata={"C": C, "learning_rate": learning_rate, "epochs": epochs, "seed": seed},
    )


# ---------------------------------------------------------------------------
# Random forest
# ---------------------------------------------------------------------------


def gini_impurity(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return 1.0 - float(np.sum(p * p))


def best_split(X: np.ndarray, y: np.ndarray, features, n_classes: int):
    """Exhaustive best Gini split over the supplied feature subset.

    Returns (feature, threshold, weighted_gini) or None when no feature
    separates the rows. Ties resolve to the lower feature then threshold.
    """
    n = X.shape[0]
    best = None
    for feat in sorted(features):
        order = np.argsort(X[:, feat], kind="stable")
        xs = X[order, feat]
        ys = y[order]
        left = np.zeros(n_classes)
        right = np.bincount(ys, minlength=n_classes).astype(np.float64)
        for i in range(n - 1):
            left[ys[i]] += 1
            right[ys[i]] -= 1
            if xs[i] == xs[i + 1]:
                continue
            n_left = i + 1
            score = (n_left * gini_impurity(left) + (n - n_left) * gini_impurity(right)) / n
            threshold = (xs[i] + xs[i + 1]) / 2.0
            if best is None or score < best[2] - 1e-12:
                best = (feat, threshold, score)
    return best


def _grow_tree(X, y, n_classes: int, max_features: int, rng) -> dict:
    """CART grown to purity (min samples to split: 2); nodes as plain dicts."""
    root: dict = {}
    stack = [(root, np.arange(X.shape[0]))]
    while stack:
        node, idx = stack.pop()
        counts = np.bincount(y[idx], minlength=n_classes)
        node["counts"] = counts.tolist()
        if len(idx) < 2 or gini_impurity(counts.astype(np.float64)) == 0.0:
            continue
        features = rng.choice(X.shape[1], size=max_features, replace=False)
        split = best_split(X[idx], y[idx], features, n_classes)
        if split is None:
            continue
        feat, threshold, _score = split
        mask = X[idx, feat] <= threshold
        node["feature"] = int(feat)
        node["threshold"] = float(threshold)
        node["left"] = {}
        node["right"] = {}
        stack.append((node["left"], idx[mask]))
        stack.append((node["right"], idx[~mask]))
    return root


def _tree_vote(node: dict, row: np.ndarray) -> int:
    while "feature" in node:
        node = node["left"] if row[node["feature"]] <= node["threshold"] else node["right"]
    counts = node["counts"]
    return int(np.argmax(counts))  # argmax takes the lower class id on ties


def train_random_forest(
    X,
    y,
    trees: int = 100,
    max_features: str | int = "sqrt",
    seed: int = 0,
) -> TrainedModel:
    """Bootstrap-sampled Gini CART ensemble; per-tree seed = seed + tree index."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    _check_training_input(X, y)
    X, y = _canonical_order(X, y)
    n, d = X.shape
    n_classes = int(y.max()) + 1
    if max_features == "sqrt":
        m_features = max(1, math.ceil(math.sqrt(d)))
    else:
        m_features = min(int(max_features), d)

    forest = []
    oob_votes = np.zeros((n, n_classes), dtype=np.int64)
    for t in range(trees):
        rng = np.random.default_rng(seed + t)
        bootstrap = rng.integers(0, n, size=n)
        tree = _grow_tree(X[bootstrap], y[bootstrap], n_classes, m_features, rng)
        forest.append(tree)
        out_of_bag = np.setdiff1d(np.arange(n), bootstrap)
        for i in out_of_bag:
            oob_votes[i, _tree_vote(tree, X[i])] += 1

    covered = oob_votes.sum(axis=1) > 0
    if covered.any():
        oob_accuracy = float(np.mean(np.argmax(oob_votes[covered], axis=1) == y[covered]))
    else:
        oob_accuracy = float("nan")

    return TrainedModel(
        kind="random_forest",
        parameters={"trees": forest, "n_features": d, "n_classes": n_classes},
        label_index={},
        metadata={
            "n_trees": trees,
            "max_features": m_features,
            "seed": seed,
            "oob_accuracy": oob_accuracy,
        },
    )


# ---------------------------------------------------------------------------
# Prediction
# ---------------------------------------------------------------------------


def _check_predict_input(model: TrainedModel, X: np.ndarray) -> None:
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ShapeMismatch(f"expected width {model.n_features}, got {X.shape}")


def predict_proba(model: TrainedModel, X) -> np.ndarray:
    """Class probability rows (logistic regression only); rows sum to one."""
    if model.kind != "logreg":
        raise ClassifierError(f"predict_proba unsupported for {model.kind}")
    X = np.asarray(X, dtype=np.float64)
    _check_predict_input(model, X)
    logits = X @ model.parameters["weights"] + model.parameters["bias"]
    logits -= logits.max(axis=1, keepdims=True)
    exp = np.exp(logits)
    return exp / exp.sum(axis=1, keepdims=True)


def predict(model: TrainedModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    _check_predict_input(model, X)
    if model.kind == "logreg":
        return np.argmax(predict_proba(model, X), axis=1)
    if model.kind == "linear_svm":
        margins = X @ model.parameters["weights"] + model.parameters["bias"]
        return np.argmax(margins, axis=1)
    if model.kind == "random_forest":
        n_classes = int(model.parameters["n_classes"])
        votes = np.zeros((X.shape[0], n_classes), dtype=np.int64)
        for tree in model.parameters["trees"]:
            for i in range(X.shape[0]):
                votes[i, _tree_vote(tree, X[i])] += 1
        return np.argmax(votes, axis=1)  # ties fall to the lower class id
    raise ClassifierError(f"unknown model kind {model.kind!r}")


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------


def _encode_value(value):
    if isinstance(value, np.ndarray):
        arr = np.ascontiguousarray(value.astype("<f8"))
        return {
            "__ndarray__": True,
            "shape": list(arr.shape),
            "data": base64.b64encode(arr.tobytes()).decode("ascii"),
        }
    if isinstance(value, dict):
        return {k: _encode_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_encode_value(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    return value


def _decode_value(value):
    if isinstance(value, dict):
        if value.get("__ndarray__"):
            raw = base64.b64decode(value["data"])
            return np.frombuffer(raw, dtype="<f8").reshape(value["shape"]).copy()
        return {k: _decode_value(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_decode_value(v) for v in value]
    return value


def save_model(model: TrainedModel, path) -> None:
    """Single-file artifact: magic bytes, format version, canonical JSON payload."""
    payload = {
        "kind": model.kind,
        "parameters": _encode_value(model.parameters),
        "label_index": model.label_index,
        "vocabs": {
            cat: {
                "category": v.category,
                "selected": list(v.selected),
                "idf": v.idf,
                "df": v.df,
            }
            for cat, v in model.vocabs.items()
        },
        "embedding": None
        if model.embedding is None
        else {
            "vocabulary": model.embedding.vocabulary,
            "vectors": _encode_value(model.embedding.vectors),
            "hyperparameters": model.embedding.hyperparameters,
            "epoch_losses": list(model.embedding.epoch_losses),
        },
        "metadata": _encode_value(model.metadata),
    }
    body = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(f"{MODEL_FORMAT_VERSION}\n".encode("ascii"))
        fh.write(body)


def load_model(path) -> TrainedModel:
    with open(path, "rb") as fh:
        blob = fh.read()
    if not blob.startswith(MODEL_MAGIC):
        raise CorruptArtifact("bad magic bytes")
    rest = blob[len(MODEL_MAGIC):]
    newline = rest.find(b"\n")
    if newline < 0:
        raise CorruptArtifact("truncated header")
    try:
        version = int(rest[:newline])
    except ValueError as exc:
        raise CorruptArtifact("unreadable version field") from exc
    if version != MODEL_FORMAT_VERSION:
        raise VersionMismatch(f"artifact version {version}, expected {MODEL_FORMAT_VERSION}")
    try:
        payload = json.loads(rest[newline + 1 :])
    except json.JSONDecodeError as exc:
        raise CorruptArtifact(f"payload is not valid JSON: {exc}") from exc

    if payload.get("kind") not in MODEL_KINDS:
        raise CorruptArtifact(f"unknown model kind {payload.get('kind')!r}")

    vocabs = {
        cat: TfidfVocabulary(
            category=v["category"],
            selected=tuple(v["selected"]),
            idf=v["idf"],
            df=v["df"],
        )
        for cat, v in payload["vocabs"].items()
    }
    emb = payload["embedding"]
    embedding = None
    if emb is not None:
        embedding = EmbeddingTable(
            vocabulary=emb["vocabulary"],
            vectors=_decode_value(emb["vectors"]),
            hyperparameters=emb["hyperparameters"],
            epoch_losses=tuple(emb["epoch_losses"]),
        )
    return TrainedModel(
        kind=payload["kind"],
        parameters=_decode_value(payload["parameters"]),
        label_index=payload["label_index"],
        vocabs=vocabs,
        embedding=embedding,
        metadata=_decode_value(payload["metadata"]),
    )
