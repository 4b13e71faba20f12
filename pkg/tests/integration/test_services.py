import json

import pytest

from conftest import minimal_document
from ldpnet.backend.app import create_app
from ldpnet.backend.config import STAGES, parse_config
from ldpnet.backend.service.artifact_service import MANIFEST_FILE, ArtifactService
from ldpnet.backend.service.verification_service import VerificationContext, VerificationService
from ldpnet.db.filesystem import FileArtifactStore
from ldpnet.errors import ConfigError


def test_file_store_writes_atomically(tmp_path):
    store = FileArtifactStore(tmp_path / "out")
    path = store.write_csv("table.csv", ["a", "b"], [[1, "x"], [2, "y"]])

    assert path.read_text(encoding="utf-8") == "a,b\n1,x\n2,y\n"
    assert [p.name for p in path.parent.iterdir()] == ["table.csv"]
    assert store.read_bytes("absent.csv") is None


def test_artifact_service_records_checksums(tmp_path):
    service = ArtifactService(FileArtifactStore(tmp_path))
    service.write_text("graph.txt", "n=0\n")
    service.write_json("doc.json", {"b": 1, "a": 2})

    assert sorted(service.checksums) == ["doc.json", "graph.txt"]
    assert service.verify_checksums() == {"graph.txt": True, "doc.json": True}

    (tmp_path / "graph.txt").write_text("tampered\n", encoding="utf-8")
    assert service.verify_checksums()["graph.txt"] is False

    manifest = service.write_manifest("f" * 64, {"sample-graph": 0.5})
    on_disk = json.loads((tmp_path / MANIFEST_FILE).read_text(encoding="utf-8"))
    assert on_disk["files"] == manifest["files"]
    assert on_disk["config_sha256"] == "f" * 64
    assert MANIFEST_FILE not in manifest["files"]


def test_experiment_runs_stages_in_pipeline_order(tmp_path):
    config = parse_config(minimal_document(), out=tmp_path)
    _, experiment, _ = create_app(config)
    manifest = experiment.run(["measures", "sample-graph"])

    assert experiment.completed() == ["sample-graph", "measures"]
    assert set(manifest["files"]) == {"graph.txt", "degrees.csv", "nested_measure.json"}
    assert list(manifest["stages"]) == ["sample-graph", "measures"]


def test_scan_without_event_is_skipped(tmp_path):
    config = parse_config(minimal_document(), out=tmp_path)
    _, experiment, _ = create_app(config)
    experiment.run(["ldp-scan"])

    assert experiment.results["ldp-scan"] is None
    assert not (tmp_path / "scan.csv").exists()


def test_unknown_stage_is_rejected(tmp_path):
    _, experiment, _ = create_app(parse_config(minimal_document(), out=tmp_path))
    with pytest.raises(ConfigError, match="unknown stages") as caught:
        experiment.run(["plot"])
    assert caught.value.field_path == "run.stages"


def test_full_pipeline_on_minimal_config(tmp_path):
    _, experiment, _ = create_app(parse_config(minimal_document(), out=tmp_path))
    manifest = experiment.run()

    assert experiment.completed() == STAGES
    assert experiment.results["ldp-scan"] is None
    assert {"trajectories.csv", "rates.csv", "ladder.json"} <= set(manifest["files"])


def test_verification_runs_selected_criteria():
    service = VerificationService(VerificationContext(bins=256))
    results = service.run(["quadrature", "arc-event-rate"])

    assert [r.criterion_id for r in results] == ["quadrature", "arc-event-rate"]
    assert all(r.passed for r in results), [r.detail for r in results]


def test_coarse_quadrature_fails():
    (result,) = VerificationService(VerificationContext(bins=4)).run(["quadrature"])
    assert not result.passed


def test_unknown_criterion():
    with pytest.raises(KeyError, match="unknown criterion"):
        VerificationService(VerificationContext()).run(["does-not-exist"])


def test_criteria_ids_are_unique():
    ids = [criterion_id for criterion_id, _ in VerificationService.list_criteria()]
    assert len(ids) == len(set(ids)) == 11
