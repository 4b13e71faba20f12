import json

import pytest

from conftest import minimal_document
from ldpnet.frontend.cli.commands import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, main


def _scan_document():
    return minimal_document(
        kernel={"name": "constant", "params": {"value": 1.0}},
        graph={"n_grid": [3, 6], "rho": 0.5, "seed": 5},
        run={"euler_steps": 2},
        event={"kind": "degree_tail", "max_count": 1},
    )


def _files(directory):
    return {p.name: p.read_bytes() for p in sorted(directory.iterdir()) if p.name != "manifest.json"}


def test_run_writes_artifacts_and_manifest(config_file, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["run", "--config", str(config_file(minimal_document())), "--out", str(out)]) == EXIT_OK

    manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
    for name in ("graph.txt", "degrees.csv", "trajectories.csv", "nested_measure.json", "rates.csv", "ladder.json"):
        assert (out / name).exists()
        assert name in manifest["files"]
    assert manifest["schema_version"] == 1
    assert "degree min=1" in capsys.readouterr().out


def test_missing_seed_exits_with_config_error(config_file, tmp_path, capsys):
    document = minimal_document(graph={"n": 1, "rho": 1.0})
    code = main(["run", "--config", str(config_file(document)), "--out", str(tmp_path / "out")])

    assert code == EXIT_CONFIG
    assert "graph.seed" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


def test_seed_override_replaces_missing_seed(config_file, tmp_path):
    document = minimal_document(graph={"n": 1, "rho": 1.0})
    path = str(config_file(document))
    assert main(["sample-graph", "--config", path, "--seed", "3", "--out", str(tmp_path / "out")]) == EXIT_OK
    assert (tmp_path / "out" / "graph.txt").exists()


def test_runs_are_reproducible_across_threads(config_file, tmp_path, capsys):
    path = str(config_file(_scan_document()))
    first, second, third = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    assert main(["run", "--config", path, "--out", str(first)]) == EXIT_OK
    assert main(["run", "--config", path, "--out", str(second)]) == EXIT_OK
    assert main(["run", "--config", path, "--out", str(third), "--threads", "3"]) == EXIT_OK

    assert {"scan.csv", "scan.json", "factorization.json"} <= set(_files(first))
    assert _files(first) == _files(second) == _files(third)
    assert "normalized=" in capsys.readouterr().out


def test_single_stage_subcommand(config_file, tmp_path):
    out = tmp_path / "out"
    assert main(["rates", "--config", str(config_file(minimal_document())), "--out", str(out)]) == EXIT_OK
    assert sorted(p.name for p in out.iterdir()) == ["manifest.json", "rates.csv"]


def test_verify_lists_criteria(capsys):
    assert main(["verify", "--list"]) == EXIT_OK
    listed = capsys.readouterr().out
    for criterion_id in ("rate-minimizer", "mc-oracle", "quadrature"):
        assert criterion_id in listed


def test_verify_fails_on_coarse_quadrature(config_file, capsys):
    document = minimal_document(run={"euler_steps": 4, "quadrature_bins": 4})
    code = main(["verify", "--config", str(config_file(document)), "quadrature"])

    captured = capsys.readouterr()
    assert code == EXIT_FAILED
    assert "FAIL" in captured.out
    assert "quadrature" in captured.err


def test_verify_unknown_criterion(capsys):
    assert main(["verify", "no-such-check"]) == EXIT_CONFIG
    assert "unknown criterion" in capsys.readouterr().err


def test_subcommand_is_required():
    with pytest.raises(SystemExit):
        main([])


@pytest.mark.parametrize(
    "sections, field",
    [
        ({"kernel": {"name": "constant", "params": {"value": 3.0}}, "graph": {"n": 3, "rho": 0.5, "seed": 1}}, "graph.rho"),
        ({"model": {"dimension": 1, "lift": {"name": "angle"}, "initial_bound": 0.5}}, "model.initial_bound"),
        ({"model": {"dimension": 1, "lift": {"name": "angle"}, "coupling": {"name": "sine", "params": {"gain": 1.0}}}}, "model.coupling"),
        ({"kernel": {"name": "constant", "params": {"value": 0.0}}}, "kernel"),
        ({"run": {"euler_steps": 4, "stages": ["sample-graph", "plot"]}}, "run.stages"),
    ],
)
def test_invalid_model_settings_exit_with_config_error(config_file, tmp_path, capsys, sections, field):
    code = main(["run", "--config", str(config_file(minimal_document(**sections))), "--out", str(tmp_path / "out")])

    assert code == EXIT_CONFIG
    assert field in capsys.readouterr().err
    assert not (tmp_path / "out").exists()
