import json

import pytest

from droidauthor.cli import main


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    code = main(
        [
            "gen-corpus",
            "--authors", "3",
            "--apps", "4",
            "--library-pool", "5",
            "--seed", "6",
            "--out", str(out),
        ]
    )
    assert code == 0
    return out


def bundle_files(corpus_dir):
    return sorted(p for p in corpus_dir.iterdir() if p.name != "ground_truth.json")


def test_gen_corpus_writes_bundles_and_sidecar(corpus_dir):
    files = bundle_files(corpus_dir)
    assert len(files) == 12
    sidecar = json.loads((corpus_dir / "ground_truth.json").read_text())
    assert set(sidecar) == {"ground_truth", "library_pool"}
    assert len(sidecar["ground_truth"]) == 12


def test_gen_corpus_rerun_is_byte_identical(corpus_dir, tmp_path):
    again = tmp_path / "again"
    assert main(
        ["gen-corpus", "--authors", "3", "--apps", "4", "--library-pool", "5",
         "--seed", "6", "--out", str(again)]
    ) == 0
    for path in bundle_files(corpus_dir):
        assert (again / path.name).read_bytes() == path.read_bytes()


def test_decouple_single_bundle_to_stdout(corpus_dir, capsys):
    target = bundle_files(corpus_dir)[0]
    assert main(["decouple", str(target)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["primary_module"] in [int(m) for m in report["modules"]]
    assert report["primary_packages"]


def test_decouple_directory_with_corrupt_file(corpus_dir, tmp_path, capsys):
    work = tmp_path / "mixed"
    work.mkdir()
    for path in bundle_files(corpus_dir)[:3]:
        (work / path.name).write_bytes(path.read_bytes())
    (work / "broken.json").write_text("{not json")
    out = tmp_path / "reports"
    code = main(["decouple", str(work), "--out", str(out)])
    captured = capsys.readouterr()
    assert code == 2
    assert len(list(out.glob("*.partition.json"))) == 3
    assert "broken.json" in captured.err


def test_decouple_reports_stable_across_reruns(corpus_dir, tmp_path):
    out1, out2 = tmp_path / "r1", tmp_path / "r2"
    target = str(bundle_files(corpus_dir)[0])
    assert main(["decouple", target, "--seed", "3", "--out", str(out1)]) == 0
    assert main(["decouple", target, "--seed", "3", "--out", str(out2)]) == 0
    [p1] = list(out1.iterdir())
    [p2] = list(out2.iterdir())
    assert p1.read_bytes() == p2.read_bytes()


def test_decouple_parallel_jobs_match_serial(corpus_dir, tmp_path):
    serial, parallel = tmp_path / "serial", tmp_path / "parallel"
    assert main(["decouple", str(corpus_dir), "--out", str(serial)]) in (0, 2)
    assert main(["decouple", str(corpus_dir), "--jobs", "3", "--out", str(parallel)]) in (0, 2)
    serial_files = sorted(p.name for p in serial.iterdir())
    assert serial_files == sorted(p.name for p in parallel.iterdir())
    for name in serial_files:
        assert (serial / name).read_bytes() == (parallel / name).read_bytes()


@pytest.fixture(scope="module")
def model_path(corpus_dir, tmp_path_factory):
    path = tmp_path_factory.mktemp("model") / "model.bin"
    code = main(
        ["train", str(corpus_dir), "--classifier", "rf", "--least-apps", "3",
         "--seed", "1", "--out", str(path)]
    )
    assert code == 0
    return path


def test_train_rerun_produces_identical_artifact(corpus_dir, model_path, tmp_path):
    again = tmp_path / "model2.bin"
    assert main(
        ["train", str(corpus_dir), "--classifier", "rf", "--least-apps", "3",
         "--seed", "1", "--out", str(again)]
    ) == 0
    assert again.read_bytes() == model_path.read_bytes()


def test_predict_training_apps_recover_authors(corpus_dir, model_path, capsys):
    assert main(["predict", str(model_path), str(corpus_dir)]) == 0
    lines = [l for l in capsys.readouterr().out.splitlines() if l.strip()]
    assert len(lines) == 12
    hits = 0
    for line in lines:
        app_id, label = line.split("\t")[:2]
        hits += label == app_id.split("-")[0]
    assert hits >= 10


def test_predict_corrupt_model_is_fatal(tmp_path, corpus_dir, capsys):
    bad = tmp_path / "bad.model"
    bad.write_bytes(b"nope")
    code = main(["predict", str(bad), str(bundle_files(corpus_dir)[0])])
    assert code == 3
    assert "CorruptArtifact" in capsys.readouterr().err


def test_evaluate_writes_metrics(corpus_dir, tmp_path, capsys):
    out = tmp_path / "metrics.json"
    code = main(
        ["evaluate", str(corpus_dir), "--classifier", "logreg", "--k", "2",
         "--least-apps", "3", "--seed", "0", "--out", str(out)]
    )
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["k"] == 2
    assert 0.0 <= payload["overall"]["accuracy"] <= 1.0
    assert len(payload["per_fold"]) == 2


def test_evaluate_k_too_large(corpus_dir, capsys):
    code = main(
        ["evaluate", str(corpus_dir), "--k", "9", "--least-apps", "3", "--seed", "0"]
    )
    assert code == 3
    assert "KTooLarge" in capsys.readouterr().err


def test_obfuscate_writes_valid_bundles(corpus_dir, tmp_path):
    out = tmp_path / "obf"
    code = main(["obfuscate", str(corpus_dir), "--seed", "2", "--out", str(out)])
    assert code == 0
    from droidauthor.bundle import read_bundle_file

    written = sorted(out.glob("*.json"))
    assert len(written) == 12
    for path in written:
        read_bundle_file(path)


def test_usage_error_exits_one():
    with pytest.raises(SystemExit) as err:
        main(["decouple"])  # missing inputs
    assert err.value.code == 1


def test_unknown_classifier_rejected(corpus_dir):
    with pytest.raises(SystemExit) as err:
        main(["train", str(corpus_dir), "--classifier", "mlp", "--out", "x"])
    assert err.value.code == 1
