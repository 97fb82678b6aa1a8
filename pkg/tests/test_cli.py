import subprocess
import sys

import numpy as np
import pytest

from sdbe import io
from sdbe.cli import load_run_config, main
from sdbe.errors import ConfigError


@pytest.fixture(scope="module")
def world_dir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--out", str(d / "w"), "--seed", "42"]) == 0
    assert main(["build-cd", "--train", str(d / "w/train.sdbe"), "--out", str(d / "cd.sdbe")]) == 0
    assert main(["build-oed", "--occluded", str(d / "w/extra_occluded.sdbe"),
                 "--free", str(d / "w/extra_free.sdbe"), "--out", str(d / "oed.sdbe")]) == 0
    return d


def test_synth_writes_every_set(world_dir):
    names = sorted(p.name for p in (world_dir / "w").iterdir())
    assert names == ["extra_free.sdbe", "extra_occluded.sdbe", "ground_truth.csv",
                     "queries_clean.sdbe", "queries_occluded.sdbe", "train.sdbe"]
    head = (world_dir / "w/ground_truth.csv").read_text().splitlines()[0]
    assert head == "query,class,pattern,v0_norm,eps_norm,noise_norm,rel_l2,rel_l0"


def test_synth_byte_stable(world_dir, tmp_path):
    assert main(["synth", "--out", str(tmp_path / "w2"), "--seed", "42"]) == 0
    for name in ("train.sdbe", "queries_occluded.sdbe", "ground_truth.csv"):
        assert (tmp_path / "w2" / name).read_bytes() == (world_dir / "w" / name).read_bytes()


def test_fit_compile_estimate_identity(world_dir, tmp_path):
    d = world_dir
    q = str(d / "w/queries_occluded.sdbe")
    assert main(["fit", "--cd", str(d / "cd.sdbe"), "--oed", str(d / "oed.sdbe"),
                 "--mode", "l2", "--lambda", "0.005", "--out", str(tmp_path / "m.sdbm")]) == 0
    assert main(["compile", "--model", str(tmp_path / "m.sdbm"),
                 "--out", str(tmp_path / "w.sdbm")]) == 0
    for name in ("m", "w"):
        assert main(["estimate", "--model", str(tmp_path / f"{name}.sdbm"), "--queries", q,
                     "--out", str(tmp_path / f"{name}.sdbe"),
                     "--report", str(tmp_path / f"{name}.csv")]) == 0
    a, _ = io.read_matrix(tmp_path / "m.sdbe")
    b, _ = io.read_matrix(tmp_path / "w.sdbe")
    assert np.abs(a - b).max() <= 1e-10
    rows = (tmp_path / "w.csv").read_text().splitlines()
    assert rows[1] == "0,nan,nan,nan,nan,nan"


def test_self_coding_cli(tmp_path, rng):
    a = rng.normal(size=(16, 5))
    io.write_matrix(tmp_path / "cd.sdbe", a, np.arange(5))
    io.write_matrix(tmp_path / "q.sdbe", a[:, :1], np.array([0]))
    assert main(["fit", "--cd", str(tmp_path / "cd.sdbe"), "--mode", "l1", "--lambda", "1e-8",
                 "--max-iters", "50000", "--normalize-columns", "off",
                 "--normalize-query", "off", "--normalize-output", "off",
                 "--out", str(tmp_path / "m.sdbm")]) == 0
    assert main(["estimate", "--model", str(tmp_path / "m.sdbm"),
                 "--queries", str(tmp_path / "q.sdbe"), "--out", str(tmp_path / "e.sdbe")]) == 0
    est, _ = io.read_matrix(tmp_path / "e.sdbe")
    assert np.abs(est[:, 0] - a[:, 0]).max() <= 1e-3


def test_classify_and_softmax(world_dir, tmp_path):
    d = world_dir
    q = str(d / "w/queries_occluded.sdbe")
    assert main(["train-softmax", "--cd", str(d / "cd.sdbe"), "--seed", "0", "--epochs", "50",
                 "--out", str(tmp_path / "sm.csv")]) == 0
    for clf in (str(d / "cd.sdbe"), str(tmp_path / "sm.csv")):
        out = tmp_path / "c.csv"
        assert main(["classify", "--classifier", clf, "--queries", q, "--out", str(out)]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "query,predicted,true" and len(lines) == 301


def test_corr_and_eval(world_dir, tmp_path):
    d = world_dir
    assert main(["corr", "--cd", str(d / "cd.sdbe"), "--oed", str(d / "oed.sdbe"), "--bins", "8",
                 "--out", str(tmp_path / "h.csv"), "--summary", str(tmp_path / "s.csv")]) == 0
    assert len((tmp_path / "h.csv").read_text().splitlines()) == 9
    cfg = tmp_path / "run.cfg"
    cfg.write_text("m = 64\nk_classes = 3\nk_patterns = 2\ntrain_per_class = 5\n"
                   "queries_per_class = 5\npairs_per_pattern = 8\nmodes = l2\n")
    assert main(["eval", "--config", str(cfg), "--lambda-grid", "0.005,0.1",
                 "--out", str(tmp_path / "e.csv")]) == 0
    lines = (tmp_path / "e.csv").read_text().splitlines()
    assert len(lines) == 4 and lines[1].startswith("0.5,none,nan,")


def test_config_unknown_key():
    with pytest.raises(ConfigError):
        load_run_config("lamda = 0.1\n")
    with pytest.raises(ConfigError):
        load_run_config("modes = l3\n")


def test_errors_one_line_stderr(tmp_path):
    bad = tmp_path / "bad.sdbe"
    bad.write_bytes(b"NOTMAGIC" + bytes(30))
    r = subprocess.run([sys.executable, "-m", "sdbe.cli", "build-cd", "--train", str(bad),
                        "--out", str(tmp_path / "o")], capture_output=True, text=True)
    assert r.returncode != 0
    assert r.stderr.strip().splitlines() == [r.stderr.strip()]
    assert r.stderr.startswith("error: BadMagic:")


def test_compile_rejects_l1(tmp_path, rng):
    io.write_matrix(tmp_path / "cd.sdbe", rng.normal(size=(4, 3)), np.arange(3))
    main(["fit", "--cd", str(tmp_path / "cd.sdbe"), "--mode", "l1", "--out", str(tmp_path / "m")])
    assert main(["compile", "--model", str(tmp_path / "m"), "--out", str(tmp_path / "w")]) == 2
