"""Batch front end: one App Bundle JSON per APK plus a machine summary.

Exit codes mirror the analysis CLI: 0 full success, 1 usage error,
2 partial failures (per-file diagnostics on stderr), 3 fatal.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import sys
from pathlib import Path

from .extract import (
    ExtractorConfig,
    dump_document,
    extract,
    load_prefix_file,
    DEFAULT_KNOWN_LIBRARIES,
    DEFAULT_OVERRIDE_NAMES,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"error: {message}\n")
        sys.exit(1)


def _collect_apks(inputs) -> list[Path]:
    paths: list[Path] = []
    for raw in inputs:
        p = Path(raw)
        if p.is_dir():
            paths.extend(sorted(q for q in p.iterdir() if q.suffix.lower() == ".apk"))
        else:
            paths.append(p)
    return sorted(set(paths))


def _extract_one(args):
    path, config = args
    try:
        document = extract(path, config)
        return str(path), document, None
    except Exception as exc:  # noqa: BLE001 - per-file isolation
        return str(path), None, f"{type(exc).__name__}: {exc}"


def extract_batch(paths, config: ExtractorConfig, out_dir: Path, jobs: int = 1) -> dict:
    """Extract many APKs; one failure never aborts the batch."""
    work = [(p, config) for p in paths]
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_extract_one, work))
    else:
        results = [_extract_one(w) for w in work]

    out_dir.mkdir(parents=True, exist_ok=True)
    extracted = []
    failures = []
    for path, document, error in sorted(results):
        if error is not None:
            failures.append({"apk": path, "error": error})
            continue
        out_path = out_dir / (Path(path).stem + ".json")
        out_path.write_text(dump_document(document), encoding="utf-8")
        extracted.append({"apk": path, "bundle": str(out_path), "app_id": document["app_id"]})
    return {"extracted": extracted, "failures": failures}


def main(argv=None) -> int:
    parser = _Parser(prog="apkbundle-extract", description=__doc__)
    parser.add_argument("inputs", nargs="+", help="APK files or directories")
    parser.add_argument("--out", required=True, help="output directory for bundle documents")
    parser.add_argument("--libs-file", help="extra known-library prefixes, one per line")
    parser.add_argument("--overrides-file", help="framework override method names, one per line")
    parser.add_argument("--jobs", type=int, default=1)
    args = parser.parse_args(argv)

    known = DEFAULT_KNOWN_LIBRARIES
    if args.libs_file:
        known = tuple(known) + load_prefix_file(args.libs_file)
    overrides = (
        load_prefix_file(args.overrides_file) if args.overrides_file else DEFAULT_OVERRIDE_NAMES
    )
    config = ExtractorConfig(override_names=tuple(overrides), known_libraries=tuple(known))

    paths = _collect_apks(args.inputs)
    if not paths:
        sys.stderr.write("error: no input APKs\n")
        return 1
    try:
        summary = extract_batch(paths, config, Path(args.out), jobs=args.jobs)
    except OSError as exc:
        sys.stderr.write(f"fatal: {exc}\n")
        return 3
    for failure in summary["failures"]:
        sys.stderr.write(f"{failure['apk']}: {failure['error']}\n")
    sys.stdout.write(json.dumps(summary, sort_keys=True, indent=2) + "\n")
    return 2 if summary["failures"] else 0


if __name__ == "__main__":
    sys.exit(main())
