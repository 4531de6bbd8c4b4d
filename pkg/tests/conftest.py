"""Shared fixtures.

Real-data tests look in ``<repo>/data`` (or $SWARMCLUST_DATA). When iris or
wine are missing, the session tries to materialize them from scikit-learn's
bundled copies via scripts/fetch_datasets.py; tests that need files which
still aren't there skip rather than fail.
"""

from __future__ import annotations

import importlib.util
import os
import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO_ROOT / "tests"))


def _materialize_sklearn_sets(data_dir: Path) -> None:
    try:
        import sklearn  # noqa: F401
    except ImportError:
        return
    script = REPO_ROOT / "scripts" / "fetch_datasets.py"
    spec = importlib.util.spec_from_file_location("fetch_datasets", script)
    module = importlib.util.module_from_spec(spec)
    try:
        spec.loader.exec_module(module)
        module.from_sklearn(data_dir)
    except SystemExit:
        pass


@pytest.fixture(scope="session")
def data_dir() -> Path:
    directory = Path(os.environ.get("SWARMCLUST_DATA", REPO_ROOT / "data"))
    directory.mkdir(parents=True, exist_ok=True)
    if not ((directory / "iris.csv").exists() and (directory / "wine.csv").exists()):
        _materialize_sklearn_sets(directory)
    return directory


@pytest.fixture
def require_dataset(data_dir):
    def _require(name: str) -> Path:
        path = data_dir / f"{name}.csv"
        if not path.exists():
            pytest.skip(f"dataset {name} not present locally")
        return path

    return _require
