"""Pytest fixtures shared by unit and integration tests."""

from __future__ import annotations

import json
from pathlib import Path
import sys
from typing import Any

import pytest

PROJECT_ROOT = Path(__file__).resolve().parents[1]
SRC_PATH = PROJECT_ROOT / "src"
if str(SRC_PATH) not in sys.path:
    sys.path.insert(0, str(SRC_PATH))

from ldpnet.domain.circle import ConstantKernel
from ldpnet.domain.dynamics import InitialCondition
from ldpnet.domain.fields import make_lift
from ldpnet.domain.graph import sample_graph


def minimal_document(**sections: Any) -> dict[str, Any]:
    document: dict[str, Any] = {
        "kernel": {"name": "constant", "params": {"value": 0.0}, "degenerate": True},
        "model": {"dimension": 1, "lift": {"name": "angle"}},
        "graph": {"n": 1, "rho": 1.0, "seed": 0},
        "run": {"euler_steps": 4},
    }
    document.update(sections)
    return document


@pytest.fixture
def config_file(tmp_path):
    """Factory writing a configuration document below tmp_path and returning its path."""

    def write(document: dict[str, Any], name: str = "experiment.json") -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(document), encoding="utf-8")
        return path

    return write


@pytest.fixture
def small_graph():
    return sample_graph(ConstantKernel(1.0), 5, 0.3, seed=7)


@pytest.fixture
def small_init():
    return InitialCondition.from_lift(make_lift(2, {"name": "harmonic"}), 5)


@pytest.fixture(autouse=True)
def _no_output_env(monkeypatch):
    monkeypatch.delenv("LDPNET_OUT", raising=False)
