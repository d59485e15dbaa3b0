import numpy as np
import pytest

from smartbal.core.base import ConfigError
from smartbal.core.grid_model import total_injection
from smartbal.core.scenario import (
    ALL_PROFILES,
    ReactionSpec,
    ScenarioConfig,
    StrategyProfile,
    assemble_inputs,
    default_scenarios,
    outage_profile,
    reaction_profile,
)


def test_outage_is_a_step_at_zero() -> None:
    profile = outage_profile(ScenarioConfig())
    assert profile.value_at(-0.1) == 0.0
    assert profile.value_at(0.0) == -200.0
    assert profile.value_at(10.0) == -200.0
    assert profile.value_at(30.0) == -200.0


def test_delayed_outage() -> None:
    profile = outage_profile(ScenarioConfig(outage_time=5.0))
    assert profile.value_at(4.9) == 0.0
    assert profile.value_at(5.1) == -200.0


def test_zero_outage_is_empty() -> None:
    profile = outage_profile(ScenarioConfig(outage_mw=0.0))
    assert profile.breakpoints == ()
    assert profile.value_at(12.0) == 0.0


@pytest.mark.parametrize(
    "t_game, ramp, t_full",
    [(1.0, 20.0, 6.0), (1.0, 400.0, 1.25), (10.0, 20.0, 15.0), (5.0, 400.0, 5.25)],
)
def test_reaction_reaches_full_power(t_game: float, ramp: float, t_full: float) -> None:
    cfg = ScenarioConfig(t_game=t_game, ramp_pct_per_min=ramp)
    profile = reaction_profile(cfg)

    assert cfg.reaction(1).t_full == pytest.approx(t_full)
    assert profile.value_at(t_game) == 0.0
    assert profile.value_at(t_full) == pytest.approx(150.0)
    assert profile.value_at(29.0) == pytest.approx(150.0)


def test_reaction_midpoint() -> None:
    profile = reaction_profile(ScenarioConfig(t_game=1.0, ramp_pct_per_min=20.0))
    assert profile.value_at(3.5) == pytest.approx(75.0)
    assert profile.energy(0.0, 15.0) == pytest.approx(28.75, abs=1e-12)


def test_huge_ramp_is_nearly_a_step() -> None:
    profile = reaction_profile(ScenarioConfig(t_game=1.0, ramp_pct_per_min=1e6))
    assert profile.value_at(1.001) == pytest.approx(150.0)


@pytest.mark.parametrize("ramp", [5.0, 20.0, 100.0, 400.0])
def test_ramp_limit_is_respected(ramp: float) -> None:
    """No reaction ramps faster than r/100 * P_b_max."""
    cfg = ScenarioConfig(t_game=2.0, ramp_pct_per_min=ramp)
    limit = ramp / 100.0 * cfg.p_b_max
    assert reaction_profile(cfg).max_abs_slope() <= limit * (1 + 1e-12)


def test_assemble_inputs_scales_by_strategy() -> None:
    cfg = ScenarioConfig()
    times = np.array([0.0, 1.1, 5.0, 29.0])

    for profile in ALL_PROFILES:
        inputs = assemble_inputs(cfg, profile)
        assert len(inputs) == 3
        expected = -200.0 + 150.0 * (profile.s1 + profile.s2)
        assert total_injection(inputs, np.array([29.0]))[0] == pytest.approx(expected)

    none = total_injection(assemble_inputs(cfg, StrategyProfile(0, 0)), times)
    one = total_injection(assemble_inputs(cfg, StrategyProfile(1, 0)), times)
    both = total_injection(assemble_inputs(cfg, StrategyProfile(1, 1)), times)
    assert np.all(none <= one) and np.all(one <= both)


def test_asymmetric_reactions() -> None:
    cfg = ScenarioConfig(
        brp_reactions=(ReactionSpec(1.0, 400.0), ReactionSpec(5.0, 20.0)),
    )
    assert not cfg.is_symmetric
    assert cfg.scenario_id == "T1_r400_vs_T5_r20"
    first, second = assemble_inputs(cfg, StrategyProfile(1, 1))[1:]
    assert first.value_at(2.0) == pytest.approx(150.0)
    assert second.value_at(2.0) == 0.0


def test_scenario_id() -> None:
    assert ScenarioConfig(t_game=1.0, ramp_pct_per_min=400.0).scenario_id == "T1_r400"
    assert ScenarioConfig(t_game=10.0, ramp_pct_per_min=20.0).scenario_id == "T10_r20"
    assert ScenarioConfig(p_b_max=100.0).scenario_id == "T1_r400_P100"
    assert [s.scenario_id for s in default_scenarios()] == [
        "T1_r400",
        "T1_r20",
        "T5_r400",
        "T5_r20",
        "T10_r400",
        "T10_r20",
    ]


@pytest.mark.parametrize(
    "kwargs",
    [
        {"t_game": 30.0},
        {"horizon": 20.0},
        {"ramp_pct_per_min": 0.0},
        {"isp_minutes": 0.0},
        {"outage_time": -1.0},
        {"p_b_max": -5.0},
    ],
)
def test_invalid_scenarios(kwargs: dict) -> None:
    with pytest.raises(ValueError):
        ScenarioConfig(**kwargs)


def test_scenario_from_dict() -> None:
    cfg = ScenarioConfig.from_dict({"t_game": 5, "ramp_pct_per_min": 20})
    assert cfg.scenario_id == "T5_r20"
    assert ScenarioConfig.from_dict(cfg.as_dict()) == cfg

    with pytest.raises(ConfigError) as info:
        ScenarioConfig.from_dict({"t_gmae": 5}, where="scenarios[2]")
    assert info.value.field == "scenarios[2].t_gmae"

    with pytest.raises(ConfigError):
        ScenarioConfig.from_dict({"t_game": "soon"})


def test_strategy_profile() -> None:
    assert StrategyProfile.parse("10") == StrategyProfile(1, 0)
    assert StrategyProfile.parse("(0,1)") == StrategyProfile(0, 1)
    assert StrategyProfile.parse("1,1").label == "11"
    assert str(StrategyProfile(1, 0)) == "(1,0)"
    with pytest.raises(ValueError):
        StrategyProfile(2, 0)
    with pytest.raises(ValueError):
        StrategyProfile.parse("12")
