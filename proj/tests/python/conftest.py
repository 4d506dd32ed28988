import os
import pathlib
import shutil
import subprocess
import sys

import pytest

ROOT = pathlib.Path(__file__).resolve().parents[2]
BUILD = pathlib.Path(os.environ.get("FILMETRIC_BUILD_DIR", ROOT / "build"))

# Prefer an installed package; fall back to the in-tree build.
try:
    import filmetric  # noqa: F401
except ImportError:
    sys.path.insert(0, str(BUILD / "python"))


def cli_path():
    env = os.environ.get("FILMETRIC_CLI")
    if env:
        return env
    local = BUILD / "tools" / "filmetric"
    return str(local) if local.exists() else shutil.which("filmetric")


@pytest.fixture(scope="session")
def cli():
    exe = cli_path()
    if not exe:
        pytest.skip("filmetric CLI not built")

    def run(*args, check=None):
        proc = subprocess.run([exe, *map(str, args)], capture_output=True, text=True)
        if check is not None:
            assert proc.returncode == check, proc.stderr
        return proc

    return run
