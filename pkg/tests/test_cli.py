import csv
import json
import shutil
from pathlib import Path

import numpy as np
import pytest
from scipy.io import wavfile

from graphceps import pipeline
from graphceps.cli import main
from graphceps.errors import ConfigError
from graphceps.features import basis_similarity
from graphceps.fixtures import fixture_graph
from graphceps.graph import graph_basis
from graphceps.tensor_io import load_tensor

SMALL = {
    "dataset": "data",
    "output": "out",
    "graph": "fixture",
    "stft": {"frame_len": 320, "fft_size": 512, "hop": 160},
    "synth": {"sample_rate": 16000, "clip_s": 0.5, "n_train": 18, "n_test": 9},
    "gmm": {"m": 2, "max_iter": 50},
    "sweep": {"sigmas_ms": [0, 20, 100], "repetitions": 3, "kinds": ["GC", "SC"]},
}


def _write_config(root: Path, data=None, name="run.json", **changes) -> Path:
    cfg = json.loads(json.dumps(data or SMALL))
    cfg.update(changes)
    path = root / name
    path.write_text(json.dumps(cfg))
    return path


def _run(*argv):
    return main([str(a) for a in argv])


def _tree(root: Path) -> dict:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


@pytest.fixture(scope="module")
def project(tmp_path_factory):
    root = tmp_path_factory.mktemp("proj")
    cfg = _write_config(root)
    for cmd in ("synth", "fit-basis", "extract", "train", "evaluate", "basis-report", "sweep"):
        assert _run(cmd, "-c", cfg) == 0, cmd
    return root, cfg


def test_unknown_key_and_bad_values_exit_2(tmp_path, capsys):
    cfg = _write_config(tmp_path, bogus=1)
    assert _run("synth", "-c", cfg) == 2
    assert "bogus" in capsys.readouterr().err
    for bad in ({"gmm": {"m": 0}}, {"stft": {"frame_len": 600, "fft_size": 512}}, {"report": {"alphas": [2.0]}},
                {"sweep": {"sigmas_ms": [-1]}}, {"features": {"kinds": ["MFCC"]}}, {"graph": "missing.json"}):
        data = json.loads(json.dumps(SMALL))
        data.update(bad)
        assert _run("synth", "-c", _write_config(tmp_path, data)) == 2, bad
    assert not (tmp_path / "data").exists() and not (tmp_path / "out").exists()


def test_usage_errors_exit_2(tmp_path):
    assert _run("frobnicate") == 2
    assert _run("synth", "-c", tmp_path / "nope.json") == 2
    (tmp_path / "broken.json").write_text("{")
    assert _run("synth", "-c", tmp_path / "broken.json") == 2


def test_seed_env_override(tmp_path):
    cfg = pipeline.RunConfig.from_dict({"seed": 3}, tmp_path, env={"GRAPHCEPS_SEED": "42"})
    assert cfg.seed == 42
    assert pipeline.RunConfig.from_dict({"seed": 3}, tmp_path, env={}).seed == 3
    with pytest.raises(ConfigError):
        pipeline.RunConfig.from_dict({}, tmp_path, env={"GRAPHCEPS_SEED": "x"})


def test_defaults_carry_protocol_values(tmp_path):
    cfg = pipeline.RunConfig.from_dict({}, tmp_path, env={})
    assert (cfg.sample_rate, cfg.clip_s, cfg.stft.frame_len, cfg.stft.fft_size, cfg.order) == (48000, 8.0, 960, 2048, 13)
    assert cfg.sigmas_ms == (0, 5, 10, 20, 50, 100) and cfg.repetitions == 10


def test_extract_counts_and_sidecars(project):
    root, _ = project
    dirs = sorted((root / "out" / "features").iterdir())
    assert {d.name.split("-")[0] for d in dirs} == {"GC", "SC", "CEP"}
    for d in dirs:
        files = sorted(d.glob("*.gct"))
        assert len(files) == 27
        meta = json.loads((d / "train_0.gct.json").read_text())
        assert set(meta) >= {"kind", "order", "basis_hash", "clip_id"}
        assert meta["order"] == 13 and meta["clip_id"] == "train_0"
        assert load_tensor(d / "train_0.gct").shape[1] == 13
    gc = next(d for d in dirs if d.name.startswith("GC"))
    assert json.loads((gc / "test_0.gct.json").read_text())["basis_hash"] == fixture_graph().hash


def test_rerun_is_byte_identical(project, tmp_path):
    root, cfg = project
    before = _tree(root / "out")
    assert _run("extract", "-c", cfg, "--force") == 0
    assert _run("train", "-c", cfg) == 0
    assert _run("evaluate", "-c", cfg) == 0
    assert _tree(root / "out") == before


def test_gc_without_graph_is_usage_error(project, capsys):
    root, _ = project
    data = dict(SMALL, graph=None, output="out2")
    cfg = _write_config(root, data, "nograph.json")
    assert _run("extract", "-c", cfg, "--kind", "GC") == 2
    assert "graph" in capsys.readouterr().err
    assert not (root / "out2").exists()


def test_sc_without_basis_names_fit_basis(project, capsys):
    root, _ = project
    cfg = _write_config(root, dict(SMALL, output="out3"), "out3.json")
    assert _run("extract", "-c", cfg) == 2
    assert "fit-basis" in capsys.readouterr().err
    assert not (root / "out3").exists()


def test_evaluate_reports(project):
    root, _ = project
    rep = json.loads((root / "out" / "reports" / "eval-GC.json").read_text())
    conf = np.array(rep["confusion"])
    assert conf.shape == (9, 9) and conf.sum() == 9
    assert rep["accuracy"] == pytest.approx(np.trace(conf) / 9)
    rows = list(csv.reader((root / "out" / "reports" / "confusion-GC.csv").open()))
    assert rows[0][1:] == rep["labels"]


def test_model_file_layout(project):
    root, _ = project
    model = json.loads((root / "out" / "models" / "SC.json").read_text())
    assert set(model) == {"scenes", "weights", "means", "variances", "feature_kind", "K", "training_config"}
    assert model["feature_kind"] == "SC" and model["K"] == 13 and len(model["scenes"]) == 9


def test_basis_report_structure(project):
    root, _ = project
    out = root / "out" / "reports" / "basis"
    for alpha in ("1.0", "0.1", "0.01"):
        grid = list(csv.reader((out / f"igft_alpha-{alpha}.csv").open()))
        assert len(grid) == 14 and len(grid[0]) == 14
    assert (out / "sc.csv").is_file()
    sim = json.loads((out / "similarity.json").read_text())
    table = np.array(sim["table"])
    assert sim["names"] == ["IGFT(alpha=1.0)", "IGFT(alpha=0.1)", "IGFT(alpha=0.01)", "SC"]
    assert np.max(np.abs(table - table.T)) <= 1e-12
    assert np.all(np.diag(table) == 0)
    assert table[1, 2] < table[1, 0]  # r(0.1, 0.01) < r(0.1, 1.0)


def test_basis_report_without_dataset(tmp_path):
    cfg = _write_config(tmp_path, dict(SMALL, dataset="nowhere"))
    assert _run("basis-report", "-c", cfg, "--alphas", "1.0", "0.1", "0.01") == 0
    sim = json.loads((tmp_path / "out" / "reports" / "basis" / "similarity.json").read_text())
    assert len(sim["names"]) == 3


def test_fixture_alpha_similarity_ordering():
    u = {a: graph_basis(fixture_graph(a)).u for a in (1.0, 0.1, 0.01)}
    assert basis_similarity(u[0.1], u[0.01]) < basis_similarity(u[0.1], u[1.0])


def test_sweep_shape_and_zero_sigma_consistency(project):
    root, _ = project
    rdir = root / "out" / "reports"
    rows = list(csv.DictReader((rdir / "sweep_long.csv").open()))
    assert len(rows) == 2 * 3 * 3
    assert {(r["kind"], float(r["sigma_ms"]), int(r["repetition"])) for r in rows} == {
        (k, s, r) for k in ("GC", "SC") for s in (0.0, 20.0, 100.0) for r in range(3)
    }
    summary = list(csv.DictReader((rdir / "sweep_summary.csv").open()))
    assert len(summary) == 6
    for kind in ("GC", "SC"):
        evaluated = json.loads((rdir / f"eval-{kind}.json").read_text())["accuracy"]
        zero = [float(r["accuracy"]) for r in rows if r["kind"] == kind and float(r["sigma_ms"]) == 0]
        assert zero == [evaluated] * 3


def test_sweep_requires_models(project, capsys):
    root, _ = project
    cfg = _write_config(root, dict(SMALL, output="out4"), "out4.json")
    assert _run("sweep", "-c", cfg, "--kind", "GC") == 2
    assert "graphceps train" in capsys.readouterr().err


def test_classify_prints_labels(project, capsys):
    root, cfg = project
    capsys.readouterr()
    assert _run("classify", "-c", cfg, "--kind", "GC", root / "data" / "wav" / "test_0.wav") == 0
    rows = json.loads(capsys.readouterr().out)
    assert rows[0]["kind"] == "GC" and rows[0]["label"] in rows[0]["loglik"]


def test_data_errors_exit_3(project, tmp_path):
    root, cfg = project
    bad = tmp_path / "bad.wav"
    bad.write_bytes(b"RIFF\x00\x00")
    assert _run("classify", "-c", cfg, bad) == 3
    assert _run("classify", "-c", cfg, tmp_path / "absent.wav") == 3
    # a dataset whose clip file vanished
    copy = tmp_path / "ds"
    shutil.copytree(root / "data", copy)
    (copy / "wav" / "train_3.wav").unlink()
    assert _run("extract", "-c", cfg, "--dataset", copy, "--output", tmp_path / "o", "--kind", "CEP") == 3


def test_manifest_clips_in_dataset(tmp_path):
    rng = np.random.default_rng(0)
    clips = []
    for i, split in enumerate(["train"] * 4 + ["test"] * 2):
        entries = []
        for ch in range(3):
            name = f"c{i}_m{ch}.wav"
            wavfile.write(tmp_path / name, 8000, rng.uniform(-0.3, 0.3, 4000).astype(np.float32) * (ch + 1))
            entries.append({"id": f"m{ch}", "path": name})
        (tmp_path / f"c{i}.json").write_text(json.dumps({"sample_rate": 8000, "channels": entries}))
        clips.append({"id": f"c{i}", "path": f"c{i}.json", "split": split, "scene_label": "ab"[i % 2]})
    (tmp_path / "dataset.json").write_text(json.dumps({"sample_rate": 8000, "n_channels": 3, "clips": clips}))
    graph = {"n": 3, "groups": [[0, 1], [2]], "alpha": 0.01}
    cfg = _write_config(tmp_path, dict(SMALL, dataset=".", graph=graph, features={"order": 3, "kinds": ["GC"]}, gmm={"m": 1}))
    assert _run("train", "-c", cfg) == 0
    assert _run("evaluate", "-c", cfg) == 0
    assert len(list((tmp_path / "out" / "features").glob("GC-*/*.gct"))) == 6


def test_parallel_workers_match_serial(tmp_path):
    data = dict(SMALL, synth=dict(SMALL["synth"], n_train=9, n_test=3))
    serial = _write_config(tmp_path, data)
    assert _run("synth", "-c", serial) == 0
    assert _run("synth", "-c", serial, "--workers", "2", "--dataset", tmp_path / "data2") == 0
    assert _tree(tmp_path / "data") == _tree(tmp_path / "data2")
