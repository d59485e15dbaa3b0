# core/game.py
"""Payoff tables of the smart balancing game and their equilibria."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Any, Dict, FrozenSet, List, Mapping, Sequence, Tuple

import numpy as np

from .base import DegenerateGameError, logger
from .grid_model import GridParams, simulate
from .pricing import DEFAULT_DUAL_TOL_MW, check_mechanism, scenario_payoffs
from .scenario import (
    ALL_PROFILES,
    ScenarioConfig,
    StrategyProfile,
    assemble_inputs,
)

CORRELATED_NOTE = (
    "no single risk dominant equilibrium; players would need to communicate "
    "to alternate between the pure equilibria (correlated equilibrium)"
)

ACT_ALONE_1 = StrategyProfile(1, 0)
ACT_ALONE_2 = StrategyProfile(0, 1)
BOTH_ACT = StrategyProfile(1, 1)


@dataclass(frozen=True)
class PayoffTable:
    """
    2x2 smart balancing game.

    BRP b earns g_b when it acts alone and loses l_b (stored positive)
    when both act; not acting pays zero.
    """

    g1: float
    g2: float
    l1: float
    l2: float
    scenario_id: str = ""
    mechanism: str = ""

    @classmethod
    def symmetric(
        cls,
        g: float,
        l: float,
        scenario_id: str = "",
        mechanism: str = "",
    ) -> "PayoffTable":
        return cls(g, g, l, l, scenario_id, mechanism)

    @property
    def issues(self) -> List[str]:
        out = []
        for name in ("g1", "g2", "l1", "l2"):
            value = getattr(self, name)
            if not math.isfinite(value):
                out.append(f"{name} is not finite")
            elif value <= 0:
                out.append(f"{name} = {value:.6g} is not positive")
        return out

    @property
    def well_formed(self) -> bool:
        return not self.issues

    @property
    def is_symmetric(self) -> bool:
        return self.g1 == self.g2 and self.l1 == self.l2

    @property
    def label(self) -> str:
        return f"{self.mechanism}_{self.scenario_id}".strip("_")

    def payoff(self, player: int, own: int, other: int) -> float:
        """Payoff of ``player`` playing ``own`` against ``other``."""
        if player not in (1, 2):
            raise ValueError(f"player must be 1 or 2, got {player!r}")
        if not own:
            return 0.0
        g, l = (self.g1, self.l1) if player == 1 else (self.g2, self.l2)
        return -l if other else g

    def payoff_tensor(self) -> np.ndarray:
        """Array ``[b, j, l]``: payoff of player b+1 playing j against l."""
        return np.array(
            [
                [[0.0, 0.0], [self.g1, -self.l1]],
                [[0.0, 0.0], [self.g2, -self.l2]],
            ]
        )

    def scaled(self, factor: float) -> "PayoffTable":
        return replace(
            self,
            g1=self.g1 * factor,
            g2=self.g2 * factor,
            l1=self.l1 * factor,
            l2=self.l2 * factor,
        )

    def as_dict(self) -> Dict[str, Any]:
        return {
            "scenario": self.scenario_id,
            "mechanism": self.mechanism,
            "g1": self.g1,
            "g2": self.g2,
            "l1": self.l1,
            "l2": self.l2,
            "well_formed": self.well_formed,
        }


@dataclass(frozen=True)
class MixedProfile:
    """Probabilities that BRP 1 and BRP 2 perform smart balancing."""

    p1: float
    p2: float

    def __post_init__(self) -> None:
        for name in ("p1", "p2"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


def classify_table(table: PayoffTable) -> Tuple[bool, List[str]]:
    """Well-formedness of a table and the reasons when it is not."""
    issues = table.issues
    if issues:
        logger.warning(
            "Payoff table {} is not a smart balancing game: {}",
            table.label or "<unnamed>",
            "; ".join(issues),
        )
    return not issues, issues


def table_from_payoffs(
    payoffs: Mapping[StrategyProfile, Sequence[float]],
    scenario_id: str,
    mechanism: str,
) -> PayoffTable:
    """g_b from acting alone, l_b from both acting."""
    table = PayoffTable(
        g1=float(payoffs[ACT_ALONE_1][0]),
        g2=float(payoffs[ACT_ALONE_2][1]),
        l1=-float(payoffs[BOTH_ACT][0]),
        l2=-float(payoffs[BOTH_ACT][1]),
        scenario_id=scenario_id,
        mechanism=mechanism,
    )
    classify_table(table)
    return table


def build_payoff_table(
    cfg: ScenarioConfig,
    mechanism: str,
    grid: GridParams,
    dt: float = 1.0,
    tol: float = DEFAULT_DUAL_TOL_MW,
) -> PayoffTable:
    """Simulate and settle the three non-trivial strategy profiles."""
    check_mechanism(mechanism)
    payoffs: Dict[StrategyProfile, Tuple[float, ...]] = {}
    for profile in (ACT_ALONE_1, ACT_ALONE_2, BOTH_ACT):
        inputs = assemble_inputs(cfg, profile)
        trace = simulate(grid, inputs, cfg.horizon, dt)
        settlement = scenario_payoffs(trace, inputs[1:], mechanism, cfg.isp_minutes, tol)
        payoffs[profile] = settlement.payoffs
    table = table_from_payoffs(payoffs, cfg.scenario_id, mechanism)
    logger.debug(
        "Payoff table {}: g=({:.4g}, {:.4g}) l=({:.4g}, {:.4g})",
        table.label,
        table.g1,
        table.g2,
        table.l1,
        table.l2,
    )
    return table


def normalization_factor(tables: Sequence[PayoffTable]) -> float:
    """max(g) + max(l) over every player of every table."""
    if not tables:
        raise ValueError("normalization needs at least one payoff table")
    max_g = max(max(t.g1, t.g2) for t in tables)
    max_l = max(max(t.l1, t.l2) for t in tables)
    return max_g + max_l


def normalize_tables(tables: Sequence[PayoffTable]) -> List[PayoffTable]:
    """Scale the whole set so that max(g) + max(l) = 1."""
    if not tables:
        raise ValueError("normalize_tables needs a nonempty list")
    flagged = [t.label or "<unnamed>" for t in tables if not t.well_formed]
    if flagged:
        raise ValueError(f"cannot normalize ill-formed tables: {', '.join(flagged)}")
    factor = normalization_factor(tables)
    return [t.scaled(1.0 / factor) for t in tables]


def pure_nash(table: PayoffTable) -> FrozenSet[StrategyProfile]:
    """Profiles where neither player gains by a one-sided deviation."""
    found = set()
    for prof in ALL_PROFILES:
        s1, s2 = prof.as_tuple()
        best_1 = table.payoff(1, s1, s2) >= table.payoff(1, 1 - s1, s2)
        best_2 = table.payoff(2, s2, s1) >= table.payoff(2, 1 - s2, s1)
        if best_1 and best_2:
            found.add(prof)
    return frozenset(found)


def mixed_nash(table: PayoffTable) -> MixedProfile:
    """Each player mixes so that the opponent is indifferent."""
    den_1 = table.g1 + table.l1
    den_2 = table.g2 + table.l2
    if den_1 == 0 or den_2 == 0:
        raise DegenerateGameError(
            f"g_b + l_b = 0 in table {table.label or '<unnamed>'}; "
            "no interior mixed equilibrium"
        )
    return MixedProfile(p1=table.g2 / den_2, p2=table.g1 / den_1)


def overreaction_probability(profile: MixedProfile | StrategyProfile) -> float:
    """Probability that both BRPs act in the same game."""
    if isinstance(profile, StrategyProfile):
        return float(profile.s1 * profile.s2)
    return profile.p1 * profile.p2


def gain_ratio(table: PayoffTable, player: int) -> float:
    g, l = (table.g1, table.l1) if player == 1 else (table.g2, table.l2)
    return g / (g + l)


def risk_dominant(table: PayoffTable) -> StrategyProfile | None:
    """The pure equilibrium with the smaller strategic risk, if unique."""
    r1, r2 = gain_ratio(table, 1), gain_ratio(table, 2)
    if math.isclose(r1, r2, rel_tol=1e-12, abs_tol=1e-15):
        return None
    return ACT_ALONE_1 if r1 > r2 else ACT_ALONE_2


def stake_metrics(table: PayoffTable) -> Tuple[float, float]:
    """(l + g, l - g), averaged over the two players."""
    g = 0.5 * (table.g1 + table.g2)
    l = 0.5 * (table.l1 + table.l2)
    return l + g, l - g


def nash_points(table: PayoffTable) -> List[Tuple[str, float, float]]:
    """Equilibria as points (kind, p1, p2) in strategy space."""
    points = [
        ("pure", float(p.s1), float(p.s2)) for p in sorted(pure_nash(table))
    ]
    try:
        mixed = mixed_nash(table)
    except DegenerateGameError:
        return points
    points.append(("mixed", mixed.p1, mixed.p2))
    return points


def equilibrium_report(table: PayoffTable) -> Dict[str, Any]:
    """Pure and mixed equilibria, overreaction risk and risk dominance."""
    report = table.as_dict()
    pure = sorted(pure_nash(table))
    report["pure_nash"] = [str(p) for p in pure]
    report["overreaction_pure"] = [overreaction_probability(p) for p in pure]
    try:
        mixed = mixed_nash(table)
    except DegenerateGameError as exc:
        logger.warning("{}", exc)
        report["mixed_nash"] = None
        report["overreaction_mixed"] = None
    else:
        report["mixed_nash"] = [mixed.p1, mixed.p2]
        report["overreaction_mixed"] = overreaction_probability(mixed)
    try:
        dominant = risk_dominant(table)
    except ZeroDivisionError:
        dominant = None
    report["risk_dominant"] = str(dominant) if dominant is not None else None
    report["note"] = CORRELATED_NOTE if dominant is None else ""
    return report
