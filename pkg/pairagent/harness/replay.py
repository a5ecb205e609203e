"""
Replay verification.

Re-runs a recorded experiment from its config.json into a scratch directory
and byte-compares every artifact (the report/ directory excepted). The
verdict names the first diverging file, the round it belongs to and the line.
"""

from __future__ import annotations

import json
import logging
import re
import tempfile
from pathlib import Path

from pydantic import BaseModel

from ..config import load_experiment
from ..errors import ConfigError, ReplayDivergence, StageError
from ..sim.scenarios import parse_scenario
from .runner import REPORT_DIR, run_experiment

logger = logging.getLogger(__name__)

_ROUND_DIR = re.compile(r"round-(\d+)")


class ReplayVerdict(BaseModel):
    passed: bool
    files_compared: int = 0
    file: str | None = None
    round: int | None = None
    line: int | None = None
    reason: str | None = None

    def raise_for_divergence(self) -> None:
        if not self.passed:
            raise ReplayDivergence(
                f"Replay diverged in {self.file}"
                + (f" (round {self.round}, line {self.line})" if self.line else ""),
                details=self.model_dump(exclude_none=True),
            )


def _artifact_files(root: Path) -> set[str]:
    return {
        p.relative_to(root).as_posix()
        for p in root.rglob("*")
        if p.is_file() and p.relative_to(root).parts[0] != REPORT_DIR
    }


def _round_of(relative: str, line_text: bytes | None) -> int | None:
    match = _ROUND_DIR.search(relative)
    if match:
        return int(match.group(1))
    if line_text:
        try:
            record = json.loads(line_text)
        except ValueError:
            return None
        if isinstance(record, dict) and isinstance(record.get("round"), int):
            return record["round"]
    return None


def compare_trees(recorded: Path, replayed: Path) -> ReplayVerdict:
    """First byte difference between two artifact trees, in sorted path order."""
    left, right = _artifact_files(recorded), _artifact_files(replayed)
    compared = 0
    for relative in sorted(left | right):
        if relative not in right:
            return ReplayVerdict(
                passed=False,
                files_compared=compared,
                file=relative,
                round=_round_of(relative, None),
                reason="not reproduced",
            )
        if relative not in left:
            return ReplayVerdict(
                passed=False,
                files_compared=compared,
                file=relative,
                round=_round_of(relative, None),
                reason="missing from recorded artifacts",
            )
        a = (recorded / relative).read_bytes()
        b = (replayed / relative).read_bytes()
        compared += 1
        if a == b:
            continue
        a_lines, b_lines = a.splitlines(keepends=True), b.splitlines(keepends=True)
        line = next(
            (i for i, (x, y) in enumerate(zip(a_lines, b_lines), start=1) if x != y),
            min(len(a_lines), len(b_lines)) + 1,
        )
        text = a_lines[line - 1] if line <= len(a_lines) else None
        return ReplayVerdict(
            passed=False,
            files_compared=compared,
            file=relative,
            round=_round_of(relative, text),
            line=line,
            reason="content differs",
        )
    return ReplayVerdict(passed=True, files_compared=compared)


def replay(artifacts: Path) -> ReplayVerdict:
    """
    Re-run the experiment recorded in `artifacts` and compare byte for byte.

    Raises:
        ConfigError: if config.json is missing or invalid
    """
    config_path = artifacts / "config.json"
    if not config_path.is_file():
        raise ConfigError(
            f"No config.json in {artifacts}; nothing to replay",
            field="config",
            hint="Point --in at a directory written by 'pair-agent run'",
        )
    config = load_experiment(config_path)
    scenario = None
    if (artifacts / "scenario.json").is_file():
        scenario = parse_scenario(
            (artifacts / "scenario.json").read_text(encoding="utf-8"), "recorded scenario"
        )

    with tempfile.TemporaryDirectory(prefix="pair-replay-") as scratch:
        target = Path(scratch) / "replay"
        try:
            run_experiment(config.model_copy(update={"out": target}), scenario=scenario)
        except StageError as e:
            logger.warning("Replay failed in stage '%s'; comparing partial artifacts", e.stage)
        verdict = compare_trees(artifacts, target)

    if verdict.passed:
        logger.info("Replay matched %d files", verdict.files_compared)
    else:
        logger.warning("Replay diverged at %s (line %s)", verdict.file, verdict.line)
    return verdict


__all__ = ["ReplayVerdict", "compare_trees", "replay"]
