"""
PAIR-Agent: Environment Loading Utilities

Locates the experiment's .env file and reports which PAIR_* variables are
overriding agent hyperparameters.
"""

from __future__ import annotations

import os
from collections.abc import Mapping
from pathlib import Path
from typing import Any

from dotenv import load_dotenv

ENV_PREFIX = "PAIR_"

# Checked in this order in every directory from the start path up to the root.
ENV_FILENAMES = (".env", ".env.experiment")


def find_env_file(start_path: Path | None = None) -> Path | None:
    """Closest .env (or .env.experiment) at or above `start_path`, default the cwd."""
    start = (start_path or Path.cwd()).resolve()
    for directory in (start, *start.parents):
        for name in ENV_FILENAMES:
            candidate = directory / name
            if candidate.is_file():
                return candidate
    return None


def load_env_file(env_file_path: Path | None = None) -> bool:
    """
    Load PAIR_* values from a .env file into the process environment.

    Variables already set in the environment win over the file.

    Returns:
        True if a file was found and contributed at least one variable
    """
    path = env_file_path or find_env_file()
    if path is None or not path.is_file():
        return False
    return bool(load_dotenv(path, override=False))


def pair_overrides(environ: Mapping[str, str] | None = None) -> dict[str, str]:
    """Settings field name -> raw value for every PAIR_* variable set."""
    env = os.environ if environ is None else environ
    return {
        key[len(ENV_PREFIX) :].lower(): value
        for key, value in sorted(env.items())
        if key.startswith(ENV_PREFIX)
    }


def describe_environment() -> dict[str, Any]:
    """The .env file in effect and the PAIR_* variables, for `pair-agent config show`."""
    env_file = find_env_file()
    return {
        "loaded_env_file": str(env_file) if env_file else None,
        "variables": {
            f"{ENV_PREFIX}{name.upper()}": value for name, value in pair_overrides().items()
        },
        "overrides": sorted(pair_overrides()),
    }


__all__ = [
    "ENV_PREFIX",
    "ENV_FILENAMES",
    "find_env_file",
    "load_env_file",
    "pair_overrides",
    "describe_environment",
]
