from __future__ import annotations

from importlib.resources import files
from pathlib import Path
from typing import List, NamedTuple

from loguru import logger

from .. import io_helpers as ioh
from ..core.grid_model import GridParams

_GRID_PKG = f"{__name__}.grid"
_TABLES_PKG = f"{__name__}.tables"


class ReferenceRow(NamedTuple):
    """Published (g, l) pair of one symmetric game."""

    mechanism: str
    t_game_min: float
    r_pct_per_min: float
    g: float
    l: float
    g_over_gl: float


def list_grid_profiles() -> List[str]:
    """Return available grid profile names (without extension)."""
    names = [
        Path(entry.name).stem
        for entry in files(_GRID_PKG).iterdir()
        if Path(entry.name).suffix.lower() == ".json"
    ]
    return sorted(names)


def load_grid_profile(name: str) -> GridParams:
    """Load a packaged grid profile by name (``.json`` optional)."""
    stem = Path(name).stem
    target = files(_GRID_PKG) / f"{stem}.json"

    if not target.is_file():
        available = ", ".join(list_grid_profiles()) or "<none>"
        logger.error(
            "Requested grid profile {!r} not found. Available: {}",
            name,
            available,
        )
        raise KeyError(f"Unknown grid profile: {name!r} (available: {available})")

    data = ioh.parse_json_text(target.read_text(), source=f"grid profile {stem!r}")
    params = GridParams.from_dict(data)
    logger.debug("Loaded grid profile {!r} from {}", stem, target)
    return params


def load_reference_tables() -> List[ReferenceRow]:
    """The twelve published symmetric (g, l) pairs, DE rows first."""
    target = files(_TABLES_PKG) / "reference.json"
    data = ioh.parse_json_text(target.read_text(), source="reference tables")
    rows = [ReferenceRow(*row) for row in data["rows"]]
    logger.debug("Loaded {} reference payoff tables", len(rows))
    return rows
