"""
PAIR-Agent: Error Handling

Structured errors shared by the simulator, the agent pipeline and the harness.
Every error carries a code, a human-readable message, an optional hint and
structured details, so the CLI can render it either as rich text or as JSON.
"""

from __future__ import annotations

import json
from enum import Enum
from typing import Any

from pydantic import ValidationError


class ErrorCode(str, Enum):
    """Standardized error codes."""

    # Input validation errors
    CONFIG_ERROR = "config_error"
    SCHEMA_MISMATCH = "schema_mismatch"

    # Model errors
    DEGENERATE_VARIABLE = "degenerate_variable"
    MODEL_MISFIT = "model_misfit"
    INFERENCE_SIZE = "inference_size"
    INCOMPLETE_BLANKET = "incomplete_blanket"
    EMPTY_REPORT = "empty_report"

    # Processing errors
    STAGE_ERROR = "stage_error"
    MISSING_ARTIFACTS = "missing_artifacts"
    REPLAY_DIVERGENCE = "replay_divergence"


class PairError(Exception):
    """Base class for all PAIR-Agent errors."""

    code: ErrorCode = ErrorCode.STAGE_ERROR

    def __init__(
        self,
        message: str,
        *,
        hint: str | None = None,
        details: dict[str, Any] | None = None,
    ):
        super().__init__(message)
        self.message = message
        self.hint = hint
        self.details = details or {}


class ConfigError(PairError):
    """A scenario, experiment or hyperparameter value is invalid."""

    code = ErrorCode.CONFIG_ERROR

    def __init__(self, message: str, *, field: str | None = None, **kwargs: Any):
        details = kwargs.pop("details", None) or {}
        if field is not None:
            details["field"] = field
        super().__init__(message, details=details, **kwargs)
        self.field = field


class SchemaMismatchError(PairError):
    """Two feature matrices disagree on their (frozen) column schema."""

    code = ErrorCode.SCHEMA_MISMATCH


class DegenerateVariableError(PairError):
    """A variable with no usable states was handed to scoring."""

    code = ErrorCode.DEGENERATE_VARIABLE


class ModelMisfitError(PairError):
    """Clamped evidence has zero probability under the model (F would be +inf)."""

    code = ErrorCode.MODEL_MISFIT


class InferenceSizeError(PairError):
    """Too many latent states for brute-force enumeration."""

    code = ErrorCode.INFERENCE_SIZE


class IncompleteBlanketError(PairError):
    """Blanket posterior requested without every blanket variable assigned."""

    code = ErrorCode.INCOMPLETE_BLANKET


class EmptyReportError(PairError):
    """Action selection received no scored actions."""

    code = ErrorCode.EMPTY_REPORT


class StageError(PairError):
    """A stage of the agent round failed; the round was rolled back."""

    code = ErrorCode.STAGE_ERROR

    def __init__(self, stage: str, round_index: int, cause: BaseException):
        super().__init__(
            f"Stage '{stage}' failed in round {round_index}: {cause}",
            details={"stage": stage, "round": round_index, "cause": type(cause).__name__},
        )
        self.stage = stage
        self.round_index = round_index
        self.cause = cause


class MissingArtifactsError(PairError):
    """An artifact directory is empty or lacks per-round files."""

    code = ErrorCode.MISSING_ARTIFACTS

    def __init__(self, message: str, missing_rounds: list[int] | None = None):
        super().__init__(
            message,
            hint="Re-run the experiment or point --in at a complete artifact directory",
            details={"missing_rounds": missing_rounds or []},
        )
        self.missing_rounds = missing_rounds or []


class ReplayDivergence(PairError):
    """A replayed artifact differs from the recorded one."""

    code = ErrorCode.REPLAY_DIVERGENCE


def format_error_response(error: PairError) -> str:
    """
    Format a PairError as a JSON error object.

    Example:
        >>> format_error_response(ConfigError("rounds must be >= 1", field="rounds"))
    """
    response: dict[str, Any] = {
        "type": "error",
        "error": error.message,
        "code": error.code.value,
    }
    if error.hint:
        response["hint"] = error.hint
    if error.details:
        response["details"] = error.details
    return json.dumps(response, indent=2)


def format_validation_error(validation_error: ValidationError, source: str) -> ConfigError:
    """
    Convert a pydantic ValidationError into a ConfigError naming the offending fields.

    Args:
        validation_error: The pydantic validation exception.
        source: What was being validated (scenario file, experiment config, ...).
    """
    errors = validation_error.errors()
    messages = []
    for err in errors:
        loc = ".".join(str(x) for x in err["loc"])
        messages.append(f"{loc}: {err['msg']}")

    first_field = ".".join(str(x) for x in errors[0]["loc"]) if errors else None
    return ConfigError(
        f"Invalid {source}: {'; '.join(messages)}",
        field=first_field,
        details={
            "validation_errors": [
                {"field": ".".join(str(x) for x in e["loc"]), "message": e["msg"]} for e in errors
            ]
        },
    )


__all__ = [
    "ErrorCode",
    "PairError",
    "ConfigError",
    "SchemaMismatchError",
    "DegenerateVariableError",
    "ModelMisfitError",
    "InferenceSizeError",
    "IncompleteBlanketError",
    "EmptyReportError",
    "StageError",
    "MissingArtifactsError",
    "ReplayDivergence",
    "format_error_response",
    "format_validation_error",
]
