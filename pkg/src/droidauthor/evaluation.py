"""Evaluation protocol: corpus filtering, cross-validation, metrics,
synthetic ground-truth corpus generation, and ProGuard-style obfuscation.

Real app-market corpora are unavailable here, so acceptance rests on a
synthetic corpus whose apps mix one per-author primary module with shared
library modules drawn from a common pool. Every generated class carries a
provenance tag so decoupling quality is measurable exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bundle import (
    AppBundle,
    ClassRecord,
    ManifestInfo,
    MethodRecord,
    PackageName,
    RelationRecord,
)
from .clustering import AuthorshipPartition


class EvaluationError(Exception):
    pass


class EmptyResult(EvaluationError):
    pass


class KTooLarge(EvaluationError):
    pass


class LengthMismatch(EvaluationError):
    pass


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricsReport:
    precision: float
    recall: float
    f1: float
    accuracy: float
    confusion: tuple  # rows = true class, cols = predicted class
    per_class: dict  # class label -> {"precision", "recall", "f1", "support"}

    def as_dict(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "accuracy": self.accuracy,
            "confusion": [list(row) for row in self.confusion],
            "per_class": self.per_class,
        }


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def decoupling_metrics(partition: AuthorshipPartition, ground_truth: dict) -> MetricsReport:
    """Binary metrics for one app: class predicted primary vs provenance tag.

    ``ground_truth`` maps a class name to "primary" or "non-primary"; a class
    is predicted primary when its package sits in the primary module.
    """
    primary_pkgs = partition.primary_packages()
    tp = fp = fn = tn = 0
    for class_name, truth in ground_truth.items():
        pkg = PackageName(class_name.rsplit(".", 1)[0])
        predicted_primary = pkg in primary_pkgs
        actual_primary = truth == "primary"
        if predicted_primary and actual_primary:
            tp += 1
        elif predicted_primary:
            fp += 1
        elif actual_primary:
            fn += 1
        else:
            tn += 1
    precision = _safe_div(tp, tp + fp)
    recall = _safe_div(tp, tp + fn)
    f1 = _safe_div(2 * precision * recall, precision + recall)
    accuracy = _safe_div(tp + tn, tp + fp + fn + tn)
    return MetricsReport(
        precision=precision,
        recall=recall,
        f1=f1,
        accuracy=accuracy,
        confusion=((tp, fn), (fp, tn)),
        per_class={
            "primary": {"precision": precision, "recall": recall, "f1": f1, "support": tp + fn},
            "non-primary": {
                "precision": _safe_div(tn, tn + fn),
                "recall": _safe_div(tn, tn + fp),
                "f1": _safe_div(2 * tn, 2 * tn + fn + fp),
                "support": fp + tn,
            },
        },
    )


def mean_reports(reports) -> MetricsReport:
    """Unweighted mean of per-app metrics; confusions are summed."""
    reports = list(reports)
    if not reports:
        raise EmptyResult("no reports to average")
    n = len(reports)
    confusion = None
    for r in reports:
        mat = np.array(r.confusion, dtype=np.int64)
        confusion = mat if confusion is None else confusion + mat
    return MetricsReport(
        precision=sum(r.precision for r in reports) / n,
        recall=sum(r.recall for r in reports) / n,
        f1=sum(r.f1 for r in reports) / n,
        accuracy=sum(r.accuracy for r in reports) / n,
        confusion=tuple(tuple(int(x) for x in row) for row in confusion),
        per_class={},
    )


def classification_metrics(predictions, labels) -> MetricsReport:
    """Macro-averaged precision/recall/F1 plus overall accuracy."""
    predictions = list(predictions)
    labels = list(labels)
    if len(predictions) != len(labels):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(labels)} labels")
    classes = sorted(set(labels) | set(predictions))
    index = {c: i for i, c in enumerate(classes)}
    k = len(classes)
    confusion = np.zeros((k, k), dtype=np.int64)
    for pred, true in zip(predictions, labels):
        confusion[index[true], index[pred]] += 1

    per_class = {}
    precisions, recalls, f1s = [], [], []
    for c in classes:
        i = index[c]
        tp = int(confusion[i, i])
        fp = int(confusion[:, i].sum()) - tp
        fn = int(confusion[i, :].sum()) - tp
        p = _safe_div(tp, tp + fp)
        r = _safe_div(tp, tp + fn)
        f = _safe_div(2 * p * r, p + r)
        per_class[c] = {"precision": p, "recall": r, "f1": f, "support": tp + fn}
        precisions.append(p)
        recalls.append(r)
        f1s.append(f)

    total = int(confusion.sum())
    return MetricsReport(
        precision=sum(precisions) / k,
        recall=sum(recalls) / k,
        f1=sum(f1s) / k,
        accuracy=_safe_div(int(np.trace(confusion)), total),
        confusion=tuple(tuple(int(x) for x in row) for row in confusion),
        per_class=per_class,
    )


# ---------------------------------------------------------------------------
# Corpus filtering and cross-validation
# ---------------------------------------------------------------------------


def least_apps_filter(corpus, n: int):
    """Keep only authors with at least ``n`` apps (unlabeled apps are dropped)."""
    by_author: dict[str, list[AppBundle]] = {}
    for bundle in corpus:
        if bundle.author_label is not None:
            by_author.setdefault(bundle.author_label, []).append(bundle)
    kept = [b for b in corpus if b.author_label in by_author and len(by_author[b.author_label]) >= n]
    if not kept:
        raise EmptyResult(f"no author has >= {n} apps")
    return kept


def kfold_split(corpus, k: int = 10, seed: int = 0):
    """Stratified-by-author folds: disjoint, covering, per-author sizes within 1.

    Authors with fewer than ``k`` apps are spread best-effort (some folds see
    none of their apps).
    """
    corpus = list(corpus)
    if k < 2 or k > len(corpus):
        raise KTooLarge(f"k={k} with {len(corpus)} apps")
    by_author: dict[str, list[AppBundle]] = {}
    for bundle in corpus:
        by_author.setdefault(bundle.author_label or "", []).append(bundle)

    folds: list[list[AppBundle]] = [[] for _ in range(k)]
    offset = 0
    rng = np.random.default_rng(seed)
    for author in sorted(by_author):
        apps = sorted(by_author[author], key=lambda b: b.app_id)
        order = rng.permutation(len(apps))
        for i, app_idx in enumerate(order):
            folds[(offset + i) % k].append(apps[int(app_idx)])
        offset += len(apps)
    return folds


# ---------------------------------------------------------------------------
# Synthetic corpus generation
# ---------------------------------------------------------------------------


OPCODES = (
    "const-string", "const/4", "const/16", "new-instance", "invoke-virtual",
    "invoke-direct", "invoke-static", "invoke-interface", "move-result",
    "move-result-object", "move-object", "iget-object", "iput-object",
    "sget-object", "sput-object", "return-void", "return-object", "goto",
    "if-eqz", "if-nez", "if-ge", "check-cast", "instance-of", "aget-object",
    "aput-object", "add-int", "sub-int", "mul-int", "int-to-long", "new-array",
    "array-length", "throw", "cmp-long", "packed-switch", "monitor-enter",
    "monitor-exit",
)

API_CATALOG = (
    "android.util.Log.d", "android.util.Log.e", "android.content.Intent.putExtra",
    "android.content.Intent.getStringExtra", "android.content.Context.getSystemService",
    "android.os.Handler.post", "android.os.AsyncTask.execute",
    "android.view.View.findViewById", "android.view.View.setOnClickListener",
    "android.widget.TextView.setText", "android.widget.Toast.makeText",
    "android.app.Activity.startActivity", "android.app.Activity.finish",
    "android.content.SharedPreferences.getString", "android.content.SharedPreferences.edit",
    "android.database.sqlite.SQLiteDatabase.query", "android.database.sqlite.SQLiteDatabase.insert",
    "android.net.ConnectivityManager.getActiveNetworkInfo",
    "android.location.LocationManager.getLastKnownLocation",
    "android.media.MediaPlayer.start", "android.hardware.Camera.open",
    "android.graphics.Canvas.drawBitmap", "android.graphics.BitmapFactory.decodeFile",
    "android.webkit.WebView.loadUrl", "android.telephony.TelephonyManager.getDeviceId",
    "java.net.HttpURLConnection.connect", "java.net.URL.openConnection",
    "java.io.BufferedReader.readLine", "java.io.FileOutputStream.write",
    "java.io.File.exists", "java.util.List.add", "java.util.Map.put",
    "java.util.Iterator.next", "java.lang.String.format", "java.lang.String.split",
    "java.lang.StringBuilder.append", "java.lang.Thread.start",
    "java.lang.System.currentTimeMillis", "java.security.MessageDigest.digest",
    "java.util.concurrent.ExecutorService.submit", "java.util.Timer.schedule",
    "javax.crypto.Cipher.doFinal", "org.json.JSONObject.getString",
    "org.json.JSONObject.put", "org.json.JSONArray.length",
    "android.content.ContentResolver.query", "android.app.NotificationManager.notify",
    "android.app.AlarmManager.set", "android.os.PowerManager.newWakeLock",
    "android.bluetooth.BluetoothAdapter.getDefaultAdapter",
    "android.nfc.NfcAdapter.getDefaultAdapter", "android.os.Vibrator.vibrate",
    "android.speech.SpeechRecognizer.startListening",
    "android.sensor.SensorManager.registerListener",
    "android.widget.ListView.setAdapter", "android.widget.ImageView.setImageBitmap",
    "android.animation.ObjectAnimator.start", "android.preference.PreferenceManager.getDefaultSharedPreferences",
    "android.content.res.Resources.getString", "android.util.Base64.encodeToString",
)

FEATURE_CATALOG = (
    "android.hardware.camera", "android.hardware.location.gps",
    "android.hardware.bluetooth", "android.hardware.nfc",
    "android.hardware.sensor.accelerometer", "android.hardware.wifi",
    "android.hardware.telephony", "android.hardware.microphone",
    "android.hardware.touchscreen.multitouch", "android.hardware.usb.host",
)

MORPHEMES = (
    "data", "sync", "cache", "view", "load", "parse", "net", "http", "json",
    "user", "item", "list", "grid", "page", "task", "job", "queue", "store",
    "disk", "file", "image", "photo", "video", "audio", "play", "send",
    "push", "pull", "auth", "login", "token", "key", "crypt", "hash", "sign",
    "track", "log", "event", "click", "touch", "draw", "render", "layout",
    "bind", "hook", "init", "setup", "config", "pref", "state", "mode",
    "flag", "meta", "info", "desc", "name", "tag", "code", "count", "size",
    "time", "date", "clock", "timer", "alarm", "notify", "alert", "toast",
    "dialog", "menu", "nav", "tab", "card", "row", "cell", "chip", "badge",
    "icon", "font", "color", "theme", "style", "anim", "fade", "slide",
    "zoom", "scroll", "swipe", "drag", "drop", "pick", "select", "check",
    "radio", "switch", "slider", "input", "form", "field", "label", "text",
    "title", "body", "head", "foot", "main", "core", "base", "util", "help",
    "tool", "misc", "extra", "temp", "buf", "pool", "lock", "fetch", "merge",
    "split2", "wrap", "scan", "probe", "emit", "route", "proxy", "guard",
)

LIBRARY_NAMES = (
    "adnet", "jsonkit", "imgload", "netcore", "tracksdk", "paylib",
    "chartview", "dbflow", "socketio", "pushmsg", "crashrep", "vidplay",
    "maputil", "qrscan", "fontpack", "gamegl",
)

_ACTIVITY_SUFFIXES = ("Activity", "Screen", "Page", "Panel")
_SERVICE_SUFFIXES = ("Service", "Worker", "Daemon")
_RECEIVER_SUFFIXES = ("Receiver", "Listener", "Monitor")


@dataclass(frozen=True)
class SyntheticAuthorStyle:
    """Everything that makes one synthetic author recognizable."""

    name: str
    morphemes: tuple[str, ...]
    api_distribution: tuple[float, ...]  # over API_CATALOG, sums to 1
    idioms: tuple  # of opcode tuples
    library_preferences: tuple[int, ...]  # indices into the shared pool
    component_suffixes: tuple[str, str, str]  # activity, service, receiver
    feature_preferences: tuple[str, ...]
    house_classes: tuple  # reusable utility classes carried verbatim app to app
    seed: int


@dataclass(frozen=True)
class GeneratedCorpus:
    bundles: tuple[AppBundle, ...]
    ground_truth: dict  # app_id -> {class name -> "primary" | "library"}
    styles: dict  # author label -> SyntheticAuthorStyle
    library_pool: tuple[str, ...]  # library root packages


def _camel(*parts: str) -> str:
    return "".join(p.capitalize() for p in parts)


def _make_style(author_idx: int, seed: int, pool_size: int, distinctiveness: float) -> SyntheticAuthorStyle:
    rng = np.random.default_rng([seed, 17, author_idx])
    morphemes = tuple(rng.choice(MORPHEMES, size=24, replace=False))
    # Sharpness of the API preference scales with distinctiveness.
    prefer = rng.choice(len(API_CATALOG), size=12, replace=False)
    weights = np.full(len(API_CATALOG), 1.0)
    weights[prefer] += 4.0 + 16.0 * distinctiveness
    weights /= weights.sum()
    idioms = tuple(
        tuple(rng.choice(OPCODES, size=int(rng.integers(3, 6)), replace=True))
        for _ in range(6)
    )
    n_prefs = min(6, pool_size) if pool_size else 0
    libs = tuple(int(x) for x in rng.choice(pool_size, size=n_prefs, replace=False)) if n_prefs else ()
    suffixes = (
        str(rng.choice(_ACTIVITY_SUFFIXES)),
        str(rng.choice(_SERVICE_SUFFIXES)),
        str(rng.choice(_RECEIVER_SUFFIXES)),
    )
    features = tuple(rng.choice(FEATURE_CATALOG, size=3, replace=False))

    # Authors carry house utility code from app to app: the token streams
    # travel verbatim (copied implementation) while the identifiers get
    # rerolled per app, like a refactored copy. Mirrors the code reuse seen
    # across one developer's portfolio.
    api_probs = np.array([float(w) for w in weights])
    house = []
    for _ in range(3):
        methods = []
        for _ in range(int(rng.integers(2, 4))):
            instructions = []
            for _ in range(int(rng.integers(3, 5))):
                instructions.extend(idioms[int(rng.integers(0, len(idioms)))])
            apis = tuple(
                str(API_CATALOG[i])
                for i in rng.choice(len(API_CATALOG), size=int(rng.integers(3, 6)), p=api_probs)
            )
            methods.append((tuple(instructions), apis))
        house.append(tuple(methods))

    return SyntheticAuthorStyle(
        name=f"author{author_idx:03d}",
        morphemes=morphemes,
        api_distribution=tuple(float(w) for w in weights),
        idioms=idioms,
        library_preferences=libs,
        component_suffixes=suffixes,
        feature_preferences=features,
        house_classes=tuple(house),
        seed=seed,
    )


def _pick_morpheme(rng, style: SyntheticAuthorStyle, distinctiveness: float) -> str:
    # Low distinctiveness mixes in corpus-common morphemes.
    if rng.random() > distinctiveness * 0.75 + 0.25:
        return str(MORPHEMES[int(rng.integers(0, 20))])
    return str(style.morphemes[int(rng.integers(0, len(style.morphemes)))])


def _author_signal_rate(distinctiveness: float) -> float:
    """Probability that an app-level trait follows its author's habit."""
    return 0.3 + 0.55 * distinctiveness


def _make_method(rng, style: SyntheticAuthorStyle, name: str, overrides: bool, distinctiveness: float) -> MethodRecord:
    n_idioms = int(rng.integers(2, 4))
    instructions: list[str] = []
    for _ in range(n_idioms):
        instructions.extend(style.idioms[int(rng.integers(0, len(style.idioms)))])
        if rng.random() < 0.4:
            instructions.append(str(OPCODES[int(rng.integers(0, len(OPCODES)))]))
    api_probs = np.array(style.api_distribution)
    n_apis = int(rng.integers(2, 5))
    api_calls = [str(API_CATALOG[i]) for i in rng.choice(len(API_CATALOG), size=n_apis, p=api_probs)]
    return MethodRecord(
        name=name,
        instructions=tuple(instructions),
        api_calls=tuple(api_calls),
        overrides_framework=overrides,
    )


_LIB_TLDS = ("io", "net", "org", "dev", "co", "sh", "biz", "xyz")


def _library_content(lib_idx: int, seed: int) -> dict:
    """Deterministic content of one pool library, identical in every app.

    Library roots deliberately avoid the app roots' ``com.`` prefix so that
    cross-module pairs sit at the structural-similarity floor, as third-party
    namespaces usually do.
    """
    rng = np.random.default_rng([seed, 7000, lib_idx])
    lib_name = LIBRARY_NAMES[lib_idx % len(LIBRARY_NAMES)]
    root = f"{_LIB_TLDS[lib_idx % len(_LIB_TLDS)]}.{lib_name}{lib_idx}"
    packages = [root, f"{root}.internal", f"{root}.model"]
    style = _make_style(5000 + lib_idx, seed, 0, 1.0)

    # Library code is bulky but flat: long varied instruction streams with
    # little internal repetition, unlike an author's recurring idioms.
    classes = []
    for pkg in packages:
        for _ in range(int(rng.integers(2, 5))):
            cname = _camel(
                str(style.morphemes[int(rng.integers(0, 24))]),
                str(style.morphemes[int(rng.integers(0, 24))]),
            )
            methods = []
            for _ in range(int(rng.integers(1, 3))):
                mname = _camel(str(style.morphemes[int(rng.integers(0, 24))])).lower() + _camel(
                    str(style.morphemes[int(rng.integers(0, 24))])
                )
                stream = tuple(
                    str(OPCODES[int(rng.integers(0, len(OPCODES)))])
                    for _ in range(int(rng.integers(10, 18)))
                )
                apis = tuple(
                    str(API_CATALOG[i])
                    for i in rng.choice(len(API_CATALOG), size=int(rng.integers(2, 5)))
                )
                methods.append(
                    MethodRecord(name=mname, instructions=stream, api_calls=apis)
                )
            fields = tuple(
                str(style.morphemes[int(rng.integers(0, 24))]) for _ in range(int(rng.integers(1, 3)))
            )
            classes.append(
                {
                    "name": f"{pkg}.{cname}",
                    "package": pkg,
                    "fields": fields,
                    "methods": tuple(methods),
                }
            )

    # Internal structure: a thin cycle over the three packages. Unit counts
    # keep paths from the host app into the library interior long.
    relations = [
        (packages[0], packages[1], "call", 1),
        (packages[1], packages[2], "call", 1),
        (packages[2], packages[0], "call", 1),
        (packages[0], packages[2], "inherit", 1),
    ]
    return {"root": root, "packages": packages, "classes": classes, "relations": relations}


def _generate_app(
    author_idx: int,
    app_idx: int,
    style: SyntheticAuthorStyle,
    libraries: list,
    modules_range: tuple[int, int],
    seed: int,
    distinctiveness: float,
) -> tuple[AppBundle, dict]:
    rng = np.random.default_rng([seed, author_idx, app_idx])
    signal = _author_signal_rate(distinctiveness)
    app_word = _pick_morpheme(rng, style, 1.0)
    root = f"com.{style.name.replace('-', '')}.{app_word}{app_idx}"

    # Primary packages nest under the app root the way feature trees do;
    # deeper shared prefixes carry the structural-similarity signal.
    n_primary = int(rng.integers(3, 6))
    primary_pkgs = [root]
    for i in range(1, n_primary):
        parent = primary_pkgs[int(rng.integers(0, len(primary_pkgs)))]
        primary_pkgs.append(f"{parent}.{_pick_morpheme(rng, style, 1.0)}{i}")

    classes: list[dict] = []
    provenance: dict[str, str] = {}
    components: list[tuple[str, str]] = []

    activity_suffix = (
        style.component_suffixes[0]
        if rng.random() < signal
        else str(_ACTIVITY_SUFFIXES[int(rng.integers(0, len(_ACTIVITY_SUFFIXES)))])
    )
    main_name = f"{root}.Main{activity_suffix}"
    main_methods = (
        _make_method(rng, style, "onCreate", True, distinctiveness),
        _make_method(
            rng,
            style,
            _camel(_pick_morpheme(rng, style, distinctiveness)).lower()
            + _camel(_pick_morpheme(rng, style, distinctiveness)),
            False,
            distinctiveness,
        ),
    )
    classes.append(
        {
            "name": main_name,
            "package": root,
            "fields": (_pick_morpheme(rng, style, distinctiveness),),
            "methods": main_methods,
            "is_component": "activity",
        }
    )
    provenance[main_name] = "primary"
    components.append(("activity", main_name))

    for house_methods in style.house_classes:
        cname = _camel(
            _pick_morpheme(rng, style, distinctiveness),
            _pick_morpheme(rng, style, distinctiveness),
        )
        full = f"{root}.{cname}"
        if full in provenance:
            continue
        classes.append(
            {
                "name": full,
                "package": root,
                "fields": (_pick_morpheme(rng, style, distinctiveness),),
                "methods": tuple(
                    MethodRecord(
                        name=_camel(_pick_morpheme(rng, style, distinctiveness)).lower()
                        + _camel(_pick_morpheme(rng, style, distinctiveness)),
                        instructions=ins,
                        api_calls=apis,
                    )
                    for ins, apis in house_methods
                ),
            }
        )
        provenance[full] = "primary"

    for pkg_idx, pkg in enumerate(primary_pkgs):
        for class_idx in range(int(rng.integers(2, 4))):
            # One extra component beyond the main activity, author-styled.
            as_service = pkg_idx == 1 and class_idx == 0
            if as_service:
                service_suffix = (
                    style.component_suffixes[1]
                    if rng.random() < signal
                    else str(_SERVICE_SUFFIXES[int(rng.integers(0, len(_SERVICE_SUFFIXES)))])
                )
                cname = f"{_camel(_pick_morpheme(rng, style, distinctiveness))}{service_suffix}"
            else:
                cname = _camel(
                    _pick_morpheme(rng, style, distinctiveness),
                    _pick_morpheme(rng, style, distinctiveness),
                )
            full = f"{pkg}.{cname}"
            methods = tuple(
                _make_method(
                    rng,
                    style,
                    _camel(_pick_morpheme(rng, style, distinctiveness)).lower()
                    + _camel(_pick_morpheme(rng, style, distinctiveness)),
                    False,
                    distinctiveness,
                )
                for _ in range(int(rng.integers(2, 4)))
            )
            fields = tuple(
                _pick_morpheme(rng, style, distinctiveness)
                for _ in range(int(rng.integers(1, 4)))
            )
            if full in provenance:
                continue
            entry = {"name": full, "package": pkg, "fields": fields, "methods": methods}
            if as_service:
                entry["is_component"] = "service"
                components.append(("service", full))
            classes.append(entry)
            provenance[full] = "primary"

    # Library modules shared across the corpus; the author's preferred
    # libraries are only a tendency, not a fingerprint barcode.
    n_modules = int(rng.integers(modules_range[0], modules_range[1] + 1))
    n_libs = max(0, min(n_modules - 1, len(libraries)))
    lib_choices: list[int] = []
    if n_libs:
        prefs = list(style.library_preferences)
        candidates = set()
        while len(candidates) < n_libs:
            if prefs and rng.random() < signal:
                candidates.add(prefs[int(rng.integers(0, len(prefs)))])
            else:
                candidates.add(int(rng.integers(0, len(libraries))))
        lib_choices = sorted(candidates)

    lib_packages: list[str] = []
    lib_relations: list[tuple[str, str, str, int]] = []
    lib_roots: list[str] = []
    for lib_idx in sorted(lib_choices):
        lib = libraries[lib_idx]
        lib_roots.append(lib["root"])
        lib_packages.extend(lib["packages"])
        lib_relations.extend(lib["relations"])
        for cls in lib["classes"]:
            classes.append(cls)
            provenance[cls["name"]] = "library"

    # Relations: a dense cycle through all primary packages, extra in-module
    # calls, and one thin one-directional integration edge into each library.
    relations: list[tuple[str, str, str, int]] = []
    for i, pkg in enumerate(primary_pkgs):
        nxt = primary_pkgs[(i + 1) % len(primary_pkgs)]
        relations.append((pkg, nxt, "call", int(rng.integers(3, 9))))
    for _ in range(n_primary):
        a = primary_pkgs[int(rng.integers(0, n_primary))]
        b = primary_pkgs[int(rng.integers(0, n_primary))]
        if a != b:
            relations.append((a, b, "call", int(rng.integers(2, 6))))
    if len(primary_pkgs) > 1:
        relations.append((primary_pkgs[0], primary_pkgs[1], "icc", 1))
    for lib_root in lib_roots:
        relations.append((primary_pkgs[0], lib_root, "call", 1))
    relations.extend(lib_relations)

    features = []
    for _ in range(int(rng.integers(1, 4))):
        if rng.random() < signal:
            features.append(str(style.feature_preferences[int(rng.integers(0, 3))]))
        else:
            features.append(str(FEATURE_CATALOG[int(rng.integers(0, len(FEATURE_CATALOG)))]))

    bundle = AppBundle(
        app_id=f"{style.name}-app{app_idx:03d}",
        author_label=style.name,
        packages=tuple(PackageName(p) for p in primary_pkgs + lib_packages),
        classes=tuple(
            ClassRecord(
                name=c["name"],
                package=PackageName(c["package"]),
                superclass=c.get("superclass"),
                fields=tuple(c["fields"]),
                methods=tuple(c["methods"]),
                is_component=c.get("is_component"),
            )
            for c in classes
        ),
        relations=tuple(
            RelationRecord(PackageName(a), PackageName(b), kind, count)
            for a, b, kind, count in relations
        ),
        manifest=ManifestInfo(
            main_activity=main_name,
            components=tuple(components),
            uses_features=tuple(dict.fromkeys(features)),
        ),
        libraries=tuple(lib_roots),
    )
    return bundle, provenance


def generate_corpus(
    n_authors: int,
    apps_per_author: int,
    modules_per_app_range: tuple[int, int] = (3, 6),
    shared_library_pool: int = 10,
    seed: int = 0,
    distinctiveness: float = 0.7,
) -> GeneratedCorpus:
    """Labeled synthetic corpus with class-level provenance ground truth.

    Each app combines one primary module written in its author's style with
    up to ``modules_per_app_range`` - 1 library modules from a pool shared
    across authors. Deterministic for a fixed parameter set and seed.
    """
    if n_authors < 1 or apps_per_author < 1:
        raise EvaluationError("author and app counts must be positive")
    libraries = [_library_content(i, seed) for i in range(shared_library_pool)]
    bundles: list[AppBundle] = []
    ground_truth: dict[str, dict] = {}
    styles: dict[str, SyntheticAuthorStyle] = {}
    for a in range(n_authors):
        style = _make_style(a, seed, shared_library_pool, distinctiveness)
        styles[style.name] = style
        for j in range(apps_per_author):
            bundle, provenance = _generate_app(
                a, j, style, libraries, modules_per_app_range, seed, distinctiveness
            )
            bundles.append(bundle)
            ground_truth[bundle.app_id] = provenance
    return GeneratedCorpus(
        bundles=tuple(bundles),
        ground_truth=ground_truth,
        styles=styles,
        library_pool=tuple(lib["root"] for lib in libraries),
    )


# ---------------------------------------------------------------------------
# Obfuscation
# ---------------------------------------------------------------------------


_LETTERS = "abcdefghijklmnopqrstuvwxyz"


def _short_names(rng, count: int) -> list[str]:
    """Distinct random 1-3 letter names, ProGuard style."""
    out: list[str] = []
    used: set[str] = set()
    while len(out) < count:
        length = int(rng.integers(1, 4))
        name = "".join(_LETTERS[int(rng.integers(0, 26))] for _ in range(length))
        if name not in used:
            used.add(name)
            out.append(name)
    return out


def obfuscate_bundle(bundle: AppBundle, seed: int = 0) -> AppBundle:
    """ProGuard-style rename plus shrink, preserving package structure.

    Class simple names, method names and field names map consistently to
    short random identifiers; framework-override methods, API call strings,
    instruction opcodes and uses-features stay untouched; manifest component
    entries follow their classes. Methods with no instructions, no API calls
    and no override flag are dropped (shrinking of inert code).
    """
    rng = np.random.default_rng(seed)

    identifiers: set[str] = set()
    for cls in bundle.classes:
        identifiers.add(cls.simple_name)
        identifiers.update(cls.fields)
        for m in cls.methods:
            if not m.overrides_framework:
                identifiers.add(m.name)
    ordered = sorted(identifiers)
    new_names = _short_names(rng, len(ordered))
    rename = dict(zip(ordered, new_names))

    class_rename: dict[str, str] = {}
    for cls in bundle.classes:
        class_rename[cls.name] = f"{cls.package.dotted}.{rename[cls.simple_name]}"

    new_classes = []
    for cls in bundle.classes:
        methods = []
        for m in cls.methods:
            if not m.overrides_framework and not m.instructions and not m.api_calls:
                continue
            methods.append(
                MethodRecord(
                    name=m.name if m.overrides_framework else rename[m.name],
                    instructions=m.instructions,
                    api_calls=m.api_calls,
                    overrides_framework=m.overrides_framework,
                )
            )
        superclass = cls.superclass
        if superclass in class_rename:
            superclass = class_rename[superclass]
        new_classes.append(
            ClassRecord(
                name=class_rename[cls.name],
                package=cls.package,
                superclass=superclass,
                fields=tuple(rename[f] for f in cls.fields),
                methods=tuple(methods),
                is_component=cls.is_component,
            )
        )

    man = bundle.manifest
    new_manifest = ManifestInfo(
        main_activity=class_rename.get(man.main_activity, man.main_activity)
        if man.main_activity
        else None,
        components=tuple((kind, class_rename.get(name, name)) for kind, name in man.components),
        uses_features=man.uses_features,
    )
    return AppBundle(
        app_id=bundle.app_id,
        author_label=bundle.author_label,
        packages=bundle.packages,
        classes=tuple(new_classes),
        relations=bundle.relations,
        manifest=new_manifest,
        libraries=bundle.libraries,
        schema_version=bundle.schema_version,
    )
