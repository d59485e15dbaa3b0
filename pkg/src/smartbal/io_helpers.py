from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path
from typing import Any, Dict, Mapping, Sequence

import pandas as pd
from loguru import logger

from .core.base import ConfigError, OutputFile

FLOAT_FORMAT = "%.12g"


def parse_json_text(text: str, source: str = "<config>") -> Dict[str, Any]:
    """
    Parse a JSON document into a dict.

    Syntax errors are re-raised as ConfigError carrying line and column.
    A non-object top level is rejected as well.
    """
    logger.debug("parse_json_text: parsing {} ({} chars)", source, len(text))
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"invalid JSON in {source}: {exc.msg}",
            line=exc.lineno,
            column=exc.colno,
        ) from exc

    if not isinstance(data, dict):
        raise ConfigError(f"top level of {source} must be a JSON object")
    return data


def _jsonable(value: Any) -> Any:
    # inf is not valid JSON; it round-trips as the string "inf"
    if isinstance(value, float) and math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if isinstance(value, Mapping):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


def canonical_json(data: Mapping[str, Any]) -> str:
    """Sorted, compact JSON used for hashing."""
    return json.dumps(_jsonable(data), sort_keys=True, separators=(",", ":"))


def pretty_json(data: Any) -> str:
    return json.dumps(_jsonable(data), sort_keys=True, indent=2) + "\n"


def hash_mapping(data: Mapping[str, Any]) -> str:
    return hashlib.sha256(canonical_json(data).encode("utf-8")).hexdigest()


def frame_to_csv_text(frame: pd.DataFrame) -> str:
    """Render a DataFrame with the fixed float format used by every CSV."""
    return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")


class CsvFile(OutputFile):
    """A CSV artifact with a fixed header."""

    def __init__(
        self,
        filename: str,
        columns: Sequence[str],
        rows: Sequence[Sequence[Any]] | None = None,
        base_dir: Path | None = None,
    ) -> None:
        super().__init__(base_dir=base_dir)
        self.filename = filename
        self.columns = list(columns)
        self.rows: list[list[Any]] = [list(r) for r in rows or []]

    def append(self, row: Sequence[Any]) -> None:
        if len(row) != len(self.columns):
            raise ValueError(
                f"{self.filename}: row has {len(row)} fields, "
                f"header has {len(self.columns)}"
            )
        self.rows.append(list(row))

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.rows, columns=self.columns)

    def as_text(self) -> str:
        return frame_to_csv_text(self.to_frame())


class JsonFile(OutputFile):
    """A pretty-printed JSON artifact with sorted keys."""

    def __init__(
        self,
        filename: str,
        content: Any,
        base_dir: Path | None = None,
    ) -> None:
        super().__init__(base_dir=base_dir)
        self.filename = filename
        self.content = content

    def as_text(self) -> str:
        return pretty_json(self.content)


class FrameFile(OutputFile):
    """A CSV artifact rendered straight from a DataFrame."""

    def __init__(
        self,
        filename: str,
        frame: pd.DataFrame,
        base_dir: Path | None = None,
    ) -> None:
        super().__init__(base_dir=base_dir)
        self.filename = filename
        self.frame = frame

    def as_text(self) -> str:
        return frame_to_csv_text(self.frame)
