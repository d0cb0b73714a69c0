"""Batch command line: decouple, train, predict, evaluate, gen-corpus, obfuscate.

Exit codes: 0 full success, 1 usage error, 2 partial failures (per-file
diagnostics on stderr), 3 fatal error. All commands are deterministic given
their flags and seed; batch output ordering is canonical by app id.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import sys
from pathlib import Path

from . import __version__
from .bundle import (
    BundleError,
    load_prefix_file,
    read_bundle_file,
    write_bundle_file,
)
from .classify import ClassifierError, load_model, save_model
from .clustering import DecoupleConfig, decouple
from .evaluation import (
    EvaluationError,
    KTooLarge,
    generate_corpus,
    least_apps_filter,
    obfuscate_bundle,
)
from .pipeline import (
    PipelineConfig,
    crossvalidate,
    predict_bundles,
    train_model,
)
from .stylometry import DEFAULT_FRAMEWORK_OVERRIDES

_KIND_ALIASES = {"logreg": "logreg", "svm": "svm", "rf": "rf"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(1)


GROUND_TRUTH_FILENAME = "ground_truth.json"


def _collect_bundle_paths(inputs) -> list[Path]:
    """Bundle files from files/directories; the ground-truth sidecar is skipped."""
    paths: list[Path] = []
    for raw in inputs:
        p = Path(raw)
        if p.is_dir():
            paths.extend(
                sorted(
                    q
                    for q in p.iterdir()
                    if q.suffix == ".json" and q.name != GROUND_TRUTH_FILENAME
                )
            )
        else:
            paths.append(p)
    return sorted(set(paths))


def _load_corpus(paths):
    """Returns (bundles, failures); one bad file never aborts the batch."""
    bundles = []
    failures = []
    for path in paths:
        try:
            bundles.append(read_bundle_file(path))
        except (OSError, BundleError) as exc:
            failures.append((path, f"{type(exc).__name__}: {exc}"))
    return bundles, failures


def _decouple_config(args) -> DecoupleConfig:
    extra = load_prefix_file(args.libs_file) if args.libs_file else ()
    return DecoupleConfig(
        extra_libraries=tuple(extra),
        mode=args.mode,
        alpha=args.alpha,
        seed=args.seed,
    )


def _pipeline_config(args) -> PipelineConfig:
    overrides = (
        load_prefix_file(args.overrides_file)
        if args.overrides_file
        else DEFAULT_FRAMEWORK_OVERRIDES
    )
    return PipelineConfig(
        decouple=_decouple_config(args),
        framework_overrides=tuple(overrides),
        features=args.features,
        seed=args.seed,
    )


def _partition_report(bundle, config: DecoupleConfig) -> dict:
    partition = decouple(bundle, config)
    modules: dict[str, list[str]] = {}
    for pkg, module in sorted(partition.module_of.items()):
        modules.setdefault(str(module), []).append(pkg.dotted)
    return {
        "app_id": bundle.app_id,
        "primary_module": partition.primary_module,
        "modules": modules,
        "primary_packages": sorted(p.dotted for p in partition.primary_packages()),
    }


def _decouple_one(path_and_config):
    path, config = path_and_config
    try:
        bundle = read_bundle_file(path)
        return (str(path), _partition_report(bundle, config), None)
    except Exception as exc:  # noqa: BLE001 - per-file isolation
        return (str(path), None, f"{type(exc).__name__}: {exc}")


def cmd_decouple(args) -> int:
    paths = _collect_bundle_paths(args.inputs)
    if not paths:
        sys.stderr.write("error: no input bundles\n")
        return 1
    config = _decouple_config(args)
    work = [(p, config) for p in paths]
    if args.jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_decouple_one, work))
    else:
        results = [_decouple_one(w) for w in work]

    reports = [r for _, r, err in results if err is None]
    failures = [(p, err) for p, _, err in results if err is not None]
    reports.sort(key=lambda r: r["app_id"])

    out_dir = Path(args.out) if args.out else None
    if out_dir:
        out_dir.mkdir(parents=True, exist_ok=True)
    for report in reports:
        text = json.dumps(report, sort_keys=True, indent=2) + "\n"
        if out_dir:
            (out_dir / f"{report['app_id']}.partition.json").write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
    for path, err in failures:
        sys.stderr.write(f"{path}: {err}\n")
    return 2 if failures else 0


def cmd_train(args) -> int:
    paths = _collect_bundle_paths(args.inputs)
    bundles, failures = _load_corpus(paths)
    for path, err in failures:
        sys.stderr.write(f"{path}: {err}\n")
    if not bundles:
        sys.stderr.write("error: no readable bundles\n")
        return 3
    if any(b.author_label is None for b in bundles):
        sys.stderr.write("error: training requires author labels on every bundle\n")
        return 1
    try:
        corpus = least_apps_filter(bundles, args.least_apps)
        model = train_model(corpus, _KIND_ALIASES[args.classifier], _pipeline_config(args))
    except (EvaluationError, ClassifierError) as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 3
    save_model(model, args.out)
    sys.stdout.write(
        f"trained {model.kind} on {len(corpus)} apps, {model.n_classes} authors -> {args.out}\n"
    )
    return 2 if failures else 0


def cmd_predict(args) -> int:
    try:
        model = load_model(args.model)
    except ClassifierError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 3
    paths = _collect_bundle_paths(args.inputs)
    bundles, failures = _load_corpus(paths)
    for path, err in failures:
        sys.stderr.write(f"{path}: {err}\n")
    if not bundles:
        sys.stderr.write("error: no readable bundles\n")
        return 3
    try:
        rows = predict_bundles(model, bundles)
    except ClassifierError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 3
    lines = []
    for app_id, label, proba in rows:
        if proba is None:
            lines.append(f"{app_id}\t{label}")
        else:
            lines.append(f"{app_id}\t{label}\t{proba:.6f}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 2 if failures else 0


def cmd_evaluate(args) -> int:
    paths = _collect_bundle_paths(args.inputs)
    bundles, failures = _load_corpus(paths)
    for path, err in failures:
        sys.stderr.write(f"{path}: {err}\n")
    if not bundles:
        sys.stderr.write("error: no readable bundles\n")
        return 3
    try:
        corpus = least_apps_filter(bundles, args.least_apps)
        per_author = {}
        for b in corpus:
            per_author[b.author_label] = per_author.get(b.author_label, 0) + 1
        if args.k > min(per_author.values()):
            raise KTooLarge(
                f"k={args.k} exceeds the smallest author's app count {min(per_author.values())}"
            )
        runs = crossvalidate(
            corpus,
            [_KIND_ALIASES[args.classifier]],
            _pipeline_config(args),
            k=args.k,
            seed=args.seed,
        )
    except EvaluationError as exc:
        sys.stderr.write(f"error: {type(exc).__name__}: {exc}\n")
        return 3
    run = runs[_KIND_ALIASES[args.classifier]]
    payload = {
        "classifier": args.classifier,
        "k": args.k,
        "seed": args.seed,
        "apps": len(corpus),
        "authors": len(per_author),
        "overall": run.overall.as_dict(),
        "per_fold": [r.as_dict() for r in run.per_fold],
    }
    text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    sys.stdout.write(
        "classifier  accuracy  precision  recall  f1\n"
        f"{args.classifier:<10}  {run.overall.accuracy:8.4f}  {run.overall.precision:9.4f}"
        f"  {run.overall.recall:6.4f}  {run.overall.f1:6.4f}\n"
    )
    return 2 if failures else 0


def cmd_gen_corpus(args) -> int:
    corpus = generate_corpus(
        n_authors=args.authors,
        apps_per_author=args.apps,
        modules_per_app_range=(args.modules_min, args.modules_max),
        shared_library_pool=args.library_pool,
        seed=args.seed,
        distinctiveness=args.distinctiveness,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for bundle in corpus.bundles:
        write_bundle_file(bundle, out / f"{bundle.app_id}.json")
    sidecar = {
        "ground_truth": corpus.ground_truth,
        "library_pool": list(corpus.library_pool),
    }
    (out / "ground_truth.json").write_text(
        json.dumps(sidecar, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    sys.stdout.write(f"wrote {len(corpus.bundles)} bundles to {out}\n")
    return 0


def cmd_obfuscate(args) -> int:
    paths = _collect_bundle_paths(args.inputs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    failures = []
    for path in paths:
        try:
            bundle = read_bundle_file(path)
            write_bundle_file(obfuscate_bundle(bundle, seed=args.seed), out / path.name)
        except (OSError, BundleError) as exc:
            failures.append((path, f"{type(exc).__name__}: {exc}"))
    for path, err in failures:
        sys.stderr.write(f"{path}: {err}\n")
    return 2 if failures else 0


def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=["max", "alpha"], default="max", help="pair weight blend")
    p.add_argument("--alpha", type=float, default=0.5, help="weight of correlation in alpha mode")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--libs-file", help="extra library prefixes, one per line")
    p.add_argument("--overrides-file", help="framework override method names, one per line")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="droidauthor", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decouple", help="partition each app into author modules")
    p.add_argument("inputs", nargs="+", help="bundle files or directories")
    p.add_argument("--out", help="directory for partition reports (default: stdout)")
    p.add_argument("--jobs", type=int, default=1)
    _add_common_flags(p)
    p.set_defaults(func=cmd_decouple)

    p = sub.add_parser("train", help="train an author classifier on a labeled corpus")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--classifier", choices=sorted(_KIND_ALIASES), default="rf")
    p.add_argument("--least-apps", type=int, default=3)
    p.add_argument("--features", choices=["primary", "whole"], default="primary")
    p.add_argument("--out", required=True, help="model artifact path")
    _add_common_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict authors for bundles")
    p.add_argument("model")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="k-fold cross-validated identification metrics")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--classifier", choices=sorted(_KIND_ALIASES), default="rf")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--least-apps", type=int, default=10)
    p.add_argument("--features", choices=["primary", "whole"], default="primary")
    p.add_argument("--out")
    _add_common_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("gen-corpus", help="generate a synthetic labeled corpus")
    p.add_argument("--authors", type=int, required=True)
    p.add_argument("--apps", type=int, required=True)
    p.add_argument("--modules-min", type=int, default=3)
    p.add_argument("--modules-max", type=int, default=6)
    p.add_argument("--library-pool", type=int, default=10)
    p.add_argument("--distinctiveness", type=float, default=0.7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_corpus)

    p = sub.add_parser("obfuscate", help="rename identifiers ProGuard-style")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_obfuscate)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except KeyboardInterrupt:
        return 3
    except Exception as exc:  # noqa: BLE001 - fatal errors must set exit code 3
        sys.stderr.write(f"fatal: {type(exc).__name__}: {exc}\n")
        return 3


if __name__ == "__main__":
    sys.exit(main())
