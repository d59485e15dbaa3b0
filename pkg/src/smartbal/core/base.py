# core/base.py
from __future__ import annotations

import hashlib
import os
import sys
from pathlib import Path

from loguru import logger

LOG_LEVEL = os.getenv("SMARTBAL_LOG_LEVEL", "INFO")
DISABLE_LOGS = os.getenv("SMARTBAL_DISABLE_LOGS", "0") == "1"

logger.remove()
logger.add(
    sys.stderr,
    level=LOG_LEVEL,
    format=" <level>{level}</level> | {message}",
)

if DISABLE_LOGS:
    logger.disable("smartbal")


# ---- errors -----------------------------------------------------------------


class SmartBalError(Exception):
    """Root of all errors raised by smartbal."""


class ConfigError(SmartBalError, ValueError):
    """Invalid or unparsable experiment configuration."""

    def __init__(
        self,
        message: str,
        field: str | None = None,
        line: int | None = None,
        column: int | None = None,
    ) -> None:
        self.field = field
        self.line = line
        self.column = column
        where = []
        if field is not None:
            where.append(f"field {field!r}")
        if line is not None:
            where.append(f"line {line}, column {column}")
        prefix = f"[{'; '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class InstabilityError(SmartBalError, ArithmeticError):
    """Non-finite state encountered while integrating the grid model."""

    def __init__(self, step: int, time_s: float) -> None:
        self.step = step
        self.time_s = time_s
        super().__init__(
            f"Integration became unstable at step {step} (t = {time_s:.3f} s)."
        )


class DegenerateGameError(SmartBalError, ValueError):
    """The payoff table admits no interior mixed equilibrium."""


class StateCorruptionError(SmartBalError, ValueError):
    """Learner probabilities no longer form distributions."""


class ScenarioFailure(SmartBalError):
    """A scenario of an experiment failed; names the scenario."""

    def __init__(self, scenario_id: str, cause: BaseException) -> None:
        self.scenario_id = scenario_id
        self.cause = cause
        super().__init__(f"Scenario {scenario_id} failed: {cause}")


# ---- files ------------------------------------------------------------------


class OutputFile:
    """
    Base class for emitted artifacts that know their default filename
    and an optional base directory to save to when no path is given.
    """

    filename: str

    def __init__(self, base_dir: Path | None = None) -> None:
        self.base_dir: Path | None = base_dir

    def _resolve_path(self, path: Path | None) -> Path:
        """Resolve a concrete path, falling back to base_dir / filename."""
        if path is not None:
            return path
        if self.base_dir is None:
            msg = (
                "No path provided and base_dir is not set for "
                f"{self.__class__.__name__}."
            )
            raise ValueError(msg)
        return self.base_dir / self.filename

    def as_text(self) -> str:
        raise NotImplementedError

    def save(self, path: Path | None = None) -> Path:
        """Write the artifact and return the path written."""
        path = self._resolve_path(path)

        path.parent.mkdir(parents=True, exist_ok=True)
        is_new = not path.exists()

        # newline="" keeps the bytes identical across platforms
        with path.open("w", newline="", encoding="utf-8") as fh:
            fh.write(self.as_text())

        if is_new:
            logger.info("Created new {} at {}.", self.__class__.__name__, path)
        else:
            logger.info("Updated {} at {}.", self.__class__.__name__, path)
        return path


def sha256_of(path: Path) -> str:
    """Hex SHA-256 of a file's bytes."""
    return hashlib.sha256(path.read_bytes()).hexdigest()
