"""Shared fixtures: the desk-scale training runs used by the acceptance suite."""

import sys
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))

DESK_DATA = ROOT / "data" / "mnist-desk"
DESK_CONFIG = ROOT / "configs" / "desk.toml"


@pytest.fixture(scope="session")
def desk_run(tmp_path_factory):
    """First full desk-scale training run (CLI path), shared across tests.

    Returns the output directory containing run_log.csv, model.ckpt and
    resolved_config.toml.
    """
    from eqspike.cli import main

    out = tmp_path_factory.mktemp("desk_run1")
    code = main(["train", "--config", str(DESK_CONFIG),
                 "--data-dir", str(DESK_DATA), "--out-dir", str(out)])
    assert code == 0, "desk-scale training run failed"
    return out


@pytest.fixture(scope="session")
def desk_run_repeat(tmp_path_factory):
    """Second, independent desk-scale run with the identical config and seed."""
    from eqspike.cli import main

    out = tmp_path_factory.mktemp("desk_run2")
    code = main(["train", "--config", str(DESK_CONFIG),
                 "--data-dir", str(DESK_DATA), "--out-dir", str(out),
                 "--quiet"])
    assert code == 0, "repeat desk-scale training run failed"
    return out
