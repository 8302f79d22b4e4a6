import pathlib
import sys

import pytest

REPO_ROOT = pathlib.Path(__file__).resolve().parent.parent
SCENARIO_DIR = REPO_ROOT / "scenarios"
SCRIPTS_DIR = REPO_ROOT / "scripts"


@pytest.fixture(scope="session")
def scenario_dir() -> pathlib.Path:
    assert SCENARIO_DIR.is_dir(), "version-controlled scenarios/ directory is missing"
    return SCENARIO_DIR


@pytest.fixture(scope="session")
def scripts_dir() -> pathlib.Path:
    return SCRIPTS_DIR


def load_script(name: str):
    """Import a file from scripts/ (not an installed package) as a module."""
    import importlib.util

    path = SCRIPTS_DIR / name
    spec = importlib.util.spec_from_file_location(path.stem, path)
    mod = importlib.util.module_from_spec(spec)
    sys.modules[path.stem] = mod
    spec.loader.exec_module(mod)
    return mod
