"""Location of bundled data files, overridable via MAHLERLAB_DATA_DIR."""
from __future__ import annotations

import os
from pathlib import Path

ENV_VAR = "MAHLERLAB_DATA_DIR"


def data_dir() -> Path:
    override = os.environ.get(ENV_VAR)
    if override:
        return Path(override)
    return Path(__file__).parent / "data"


def data_path(name: str) -> Path:
    p = data_dir() / name
    if not p.exists():
        raise FileNotFoundError(
            f"data file {name!r} not found in {data_dir()} "
            f"(set {ENV_VAR} to override the data directory)")
    return p
