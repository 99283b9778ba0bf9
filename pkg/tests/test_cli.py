import json

import pytest

from adtime.cli import main
from adtime.experiments import CSV_HEADER
from adtime.scenario import GenSpec, generate, load, save


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "s.json"
    save(generate(GenSpec(n_followers=2, m_blocks=3, batch_duration=0.5, seed=4)), path)
    return path


def run(*argv):
    return main([str(a) for a in argv])


def test_gen_matches_library(tmp_path):
    out = tmp_path / "g.json"
    assert run("gen", "--seed", 7, "--n-followers", 2, "--m-blocks", 3, "--out", out) == 0
    assert load(out) == generate(GenSpec(n_followers=2, m_blocks=3, seed=7))


def test_gen_from_spec_file(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"n_followers": 1, "m_blocks": 2, "seed": 5}))
    assert run("gen", "--spec", spec) == 0
    assert json.loads(capsys.readouterr().out)["m_blocks"] == 2


@pytest.mark.parametrize("alg", ["gbd", "heuristic", "random", "oracle"])
def test_solve_writes_report(scenario_file, tmp_path, capsys, alg):
    out = tmp_path / f"{alg}.json"
    assert run("solve", scenario_file, "--alg", alg, "--out", out) == 0
    report = json.loads(out.read_text())
    assert report["algorithm"] == alg and report["wall_time"] is None
    printed = capsys.readouterr().out
    for key in ("revenue", "sum_utility", "iterations", "gap"):
        assert key in printed


def test_solve_gbd_trace_and_svg(scenario_file, tmp_path):
    out, svg = tmp_path / "r.json", tmp_path / "trace.svg"
    assert run("solve", scenario_file, "--alg", "gbd", "--epsilon", "1e-6", "--out", out, "--svg", svg) == 0
    assert json.loads(out.read_text())["bound_trace"]
    assert svg.read_text().lstrip().startswith("<?xml")


def test_oracle_size_guard(tmp_path):
    path = tmp_path / "big.json"
    save(generate(GenSpec(seed=0)), path)
    assert run("solve", path, "--alg", "oracle", "--out", tmp_path / "o.json") == 2


def test_nonconvergence_exit(tmp_path):
    path = tmp_path / "s.json"
    save(generate(GenSpec(seed=3, batch_duration=0.5)), path)
    assert run("solve", path, "--max-iter", 1, "--out", tmp_path / "r.json") == 1
    assert (tmp_path / "r.json").exists()


def exit_code(*argv):
    """main()'s return value, or the code argparse exits with."""
    try:
        return run(*argv)
    except SystemExit as exc:
        return exc.code


@pytest.mark.parametrize("argv", [
    ["solve", "missing.json"],
    ["solve", "{scenario}", "--alg", "simplex"],
    ["solve", "{scenario}", "--epsilon", "0"],
    ["sweep-time", "--values", "2,1", "--seeds", 1],
    ["sweep-time", "--alg", "nope", "--seeds", 1],
    ["compare", "--seeds", 3],
    ["bogus"],
])
def test_usage_errors(argv, scenario_file, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    argv = [str(a).replace("{scenario}", str(scenario_file)) for a in argv]
    assert exit_code(*argv) == 2


def test_bad_scenario_file(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"n_followers": 1}))
    assert run("solve", path, "--out", tmp_path / "r.json") == 2


def test_bad_threads_env(tmp_path, monkeypatch):
    monkeypatch.setenv("ADTIME_THREADS", "zero")
    assert run("compare", "--seeds", 10, "--out", tmp_path / "c.csv") == 2


SWEEPS = [
    ["sweep-time", "--values", "0.5,4", "--seeds", 2, "--n-followers", 2, "--m-blocks", 4],
    ["sweep-density", "--values", "0.05,0.2", "--seeds", 2, "--n-followers", 2, "--m-blocks", 4],
    ["compare", "--seeds", 10, "--n-followers", 2, "--m-blocks", 4],
]


@pytest.mark.parametrize("argv", SWEEPS, ids=["time", "density", "compare"])
def test_sweeps_are_byte_identical(argv, tmp_path):
    outputs = []
    for k in range(2):
        out = tmp_path / f"run{k}" / "res.csv"
        out.parent.mkdir()
        assert run(*argv, "--out", out) == 0
        files = sorted(out.parent.iterdir())
        outputs.append({f.name: f.read_bytes() for f in files})
    assert outputs[0] == outputs[1]
    assert "res.svg" in outputs[0]
    assert outputs[0]["res.csv"].decode().splitlines()[0] == ",".join(CSV_HEADER)


def test_sweep_custom_svg_path(tmp_path):
    svg = tmp_path / "fig.svg"
    assert run("sweep-time", "--values", "1", "--seeds", 1, "--n-followers", 1, "--m-blocks", 2,
               "--alg", "heuristic", "--out", tmp_path / "t.csv", "--svg", svg) == 0
    assert svg.exists() and (tmp_path / "t_summary.csv").exists()


def test_timing_flag_fills_column(tmp_path):
    out = tmp_path / "t.csv"
    assert run("sweep-time", "--values", "1", "--seeds", 1, "--n-followers", 1, "--m-blocks", 2,
               "--alg", "heuristic", "--timing", "--out", out) == 0
    assert out.read_text().splitlines()[1].split(",")[-1] != ""
