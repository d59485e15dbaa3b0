# core/scenario.py
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, List, Mapping, Tuple

from .base import ConfigError
from .grid_model import InjectionProfile

DEFAULT_P_B_MAX = 150.0

# (T_game [min], r [%/min]) pairs studied by default
DEFAULT_GAME_POINTS: Tuple[Tuple[float, float], ...] = (
    (1.0, 400.0),
    (1.0, 20.0),
    (5.0, 400.0),
    (5.0, 20.0),
    (10.0, 400.0),
    (10.0, 20.0),
)


def _fmt(value: float) -> str:
    return f"{value:g}"


@dataclass(frozen=True)
class ReactionSpec:
    """How one BRP performs smart balancing."""

    t_game: float
    ramp_pct_per_min: float
    p_b_max: float = DEFAULT_P_B_MAX

    def __post_init__(self) -> None:
        if not self.t_game >= 0:
            raise ValueError(f"t_game must be >= 0, got {self.t_game}")
        if not self.ramp_pct_per_min > 0:
            raise ValueError(
                f"ramp_pct_per_min must be > 0, got {self.ramp_pct_per_min}"
            )
        if not self.p_b_max > 0:
            raise ValueError(f"p_b_max must be > 0, got {self.p_b_max}")

    @property
    def slope(self) -> float:
        """Ramp limit in MW per minute."""
        return self.ramp_pct_per_min / 100.0 * self.p_b_max

    @property
    def t_full(self) -> float:
        """Time at which the reaction reaches p_b_max."""
        return self.t_game + self.p_b_max / self.slope


@dataclass(frozen=True)
class ScenarioConfig:
    """One smart balancing game setup (disturbance plus reactions)."""

    t_game: float = 1.0
    ramp_pct_per_min: float = 400.0
    p_b_max: float = DEFAULT_P_B_MAX
    outage_mw: float = -200.0
    outage_time: float = 0.0
    horizon: float = 30.0
    isp_minutes: float = 15.0
    # per-BRP reactions for asymmetric games; None means both use the fields above
    brp_reactions: Tuple[ReactionSpec, ReactionSpec] | None = None

    def __post_init__(self) -> None:
        for name in ("t_game", "ramp_pct_per_min", "p_b_max", "outage_mw",
                     "outage_time", "horizon", "isp_minutes"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"ScenarioConfig.{name} must be finite")
        if self.isp_minutes <= 0:
            raise ValueError("isp_minutes must be > 0")
        if self.horizon <= 0:
            raise ValueError("horizon must be > 0")
        n_isp = self.horizon / self.isp_minutes
        if abs(n_isp - round(n_isp)) > 1e-9:
            raise ValueError(
                f"horizon ({self.horizon} min) must be an integer multiple "
                f"of isp_minutes ({self.isp_minutes} min)"
            )
        if self.outage_time < 0:
            raise ValueError("outage_time must be >= 0")
        for spec in self.reactions:
            if not spec.t_game < self.horizon:
                raise ValueError(
                    f"t_game ({spec.t_game} min) must be < horizon ({self.horizon} min)"
                )

    @property
    def reactions(self) -> Tuple[ReactionSpec, ReactionSpec]:
        if self.brp_reactions is not None:
            return self.brp_reactions
        spec = ReactionSpec(self.t_game, self.ramp_pct_per_min, self.p_b_max)
        return spec, spec

    def reaction(self, brp: int) -> ReactionSpec:
        if brp not in (1, 2):
            raise ValueError(f"brp must be 1 or 2, got {brp!r}")
        return self.reactions[brp - 1]

    @property
    def is_symmetric(self) -> bool:
        first, second = self.reactions
        return first == second

    @property
    def n_isp(self) -> int:
        return int(round(self.horizon / self.isp_minutes))

    @property
    def scenario_id(self) -> str:
        """Identifier such as ``T1_r400`` (mechanism prefixes are added by callers)."""

        def _one(spec: ReactionSpec) -> str:
            out = f"T{_fmt(spec.t_game)}_r{_fmt(spec.ramp_pct_per_min)}"
            if spec.p_b_max != DEFAULT_P_B_MAX:
                out += f"_P{_fmt(spec.p_b_max)}"
            return out

        first, second = self.reactions
        if first == second:
            return _one(first)
        return f"{_one(first)}_vs_{_one(second)}"

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], where: str = "scenarios") -> "ScenarioConfig":
        """Build from a config mapping; unknown keys are rejected."""
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(
                f"unknown scenario key(s): {', '.join(unknown)}",
                field=f"{where}.{unknown[0]}",
            )
        kwargs: Dict[str, Any] = {}
        try:
            for key, value in data.items():
                if key == "brp_reactions":
                    if value is None:
                        continue
                    if len(value) != 2:
                        raise ValueError("brp_reactions needs exactly two entries")
                    kwargs[key] = tuple(
                        ReactionSpec(**{k: float(v) for k, v in item.items()})
                        for item in value
                    )
                else:
                    kwargs[key] = float(value)
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), field=where) from exc

    def as_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        if self.brp_reactions is None:
            data.pop("brp_reactions")
        else:
            data["brp_reactions"] = [asdict(spec) for spec in self.brp_reactions]
        return data


@dataclass(frozen=True, order=True)
class StrategyProfile:
    """Binary smart balancing choices (S_1, S_2)."""

    s1: int
    s2: int

    def __post_init__(self) -> None:
        for name in ("s1", "s2"):
            value = getattr(self, name)
            if value not in (0, 1):
                raise ValueError(f"{name} must be 0 or 1, got {value!r}")
            object.__setattr__(self, name, int(value))

    @classmethod
    def parse(cls, text: str) -> "StrategyProfile":
        """Parse ``"10"``, ``"1,0"`` or ``"(1,0)"``."""
        digits = [c for c in text if c in "01"]
        if len(digits) != 2 or any(c not in "01(), " for c in text):
            raise ValueError(f"cannot parse strategy profile {text!r}")
        return cls(int(digits[0]), int(digits[1]))

    @property
    def label(self) -> str:
        return f"{self.s1}{self.s2}"

    def as_tuple(self) -> Tuple[int, int]:
        return self.s1, self.s2

    def __str__(self) -> str:
        return f"({self.s1},{self.s2})"


ALL_PROFILES: Tuple[StrategyProfile, ...] = (
    StrategyProfile(0, 0),
    StrategyProfile(0, 1),
    StrategyProfile(1, 0),
    StrategyProfile(1, 1),
)


def default_scenarios() -> List[ScenarioConfig]:
    return [ScenarioConfig(t_game=t, ramp_pct_per_min=r) for t, r in DEFAULT_GAME_POINTS]


def outage_profile(cfg: ScenarioConfig) -> InjectionProfile:
    """Step of ``outage_mw`` at ``outage_time``, held until the horizon."""
    if cfg.outage_mw == 0:
        return InjectionProfile.zero()
    return InjectionProfile(((cfg.outage_time, cfg.outage_mw),))


def reaction_profile(cfg: ScenarioConfig, brp: int = 1) -> InjectionProfile:
    """Ramp from zero at T_game to p_b_max at the ramp limit, then hold."""
    spec = cfg.reaction(brp)
    return InjectionProfile(((spec.t_game, 0.0), (spec.t_full, spec.p_b_max)))


def assemble_inputs(cfg: ScenarioConfig, profile: StrategyProfile) -> List[InjectionProfile]:
    """[P_d, S_1 * P_1, S_2 * P_2]."""
    return [
        outage_profile(cfg),
        reaction_profile(cfg, 1).scaled(profile.s1),
        reaction_profile(cfg, 2).scaled(profile.s2),
    ]
