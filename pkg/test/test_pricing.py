import math
from pathlib import Path

import numpy as np
import pytest

from smartbal import io_helpers as ioh
from smartbal.core.grid_model import GridParams, InjectionProfile, SimTrace, simulate
from smartbal.core.pricing import (
    SETTLEMENT_HEADER,
    IspWindow,
    detect_dual,
    energy,
    is_non_monotone,
    isp_windows,
    positive_area,
    price_bounds,
    scenario_payoffs,
    settle,
)
from smartbal.core.scenario import ScenarioConfig, StrategyProfile, assemble_inputs

ISP_1 = IspWindow(0.0, 15.0)


def frr_trace(values: np.ndarray, dt: float = 1.0) -> SimTrace:
    """A trace carrying only a requested FRR signal."""
    values = np.asarray(values, dtype=float)
    zeros = np.zeros_like(values)
    return SimTrace(
        dt=dt,
        delta_f=zeros,
        p_frr_requested=values,
        p_frr_activated=zeros,
        p_fcr=zeros,
        p_selfreg=zeros,
        p_ace=zeros,
    )


def simulated(cfg: ScenarioConfig, profile: StrategyProfile) -> tuple:
    inputs = assemble_inputs(cfg, profile)
    return simulate(GridParams(), inputs, cfg.horizon), inputs[1:]


def test_isp_windows() -> None:
    windows = isp_windows(30.0)
    assert windows == [IspWindow(0.0, 15.0), IspWindow(15.0, 30.0)]
    with pytest.raises(ValueError):
        isp_windows(20.0)
    with pytest.raises(ValueError):
        IspWindow(5.0, 5.0)


def test_energy_of_outage_and_reaction() -> None:
    """-200 MW held for 15 min is -50 MWh; the 20 %/min reaction is 28.75 MWh."""
    cfg = ScenarioConfig(t_game=1.0, ramp_pct_per_min=20.0)
    outage, reaction, _ = assemble_inputs(cfg, StrategyProfile(1, 0))
    trace = simulate(GridParams(), [outage], horizon=15.0)
    assert energy(trace, "p_ace", ISP_1) == pytest.approx(-50.0, abs=1e-9)

    trace = simulate(GridParams(), [reaction], horizon=15.0)
    assert energy(trace, "p_ace", ISP_1) == pytest.approx(28.75, abs=1e-9)

    net = simulate(GridParams(), [outage, reaction], horizon=15.0)
    assert energy(net, "p_ace", ISP_1) == pytest.approx(-21.25, abs=1e-9)


def test_energy_is_additive_over_windows() -> None:
    trace, _ = simulated(ScenarioConfig(), StrategyProfile(1, 1))
    first, second = isp_windows(30.0)
    whole = energy(trace, "p_frr_requested", IspWindow(0.0, 30.0))
    parts = energy(trace, "p_frr_requested", first) + energy(trace, "p_frr_requested", second)
    assert whole == pytest.approx(parts, abs=1e-9)


def test_de_prices_of_a_linear_ramp() -> None:
    """P_FRR from -100 to +100 MW across the ISP: equal positive and negative parts."""
    trace = frr_trace(np.linspace(-100.0, 100.0, 901))
    c_pos, c_neg = price_bounds(trace, ISP_1, "DE")
    assert c_pos == pytest.approx(6.25, abs=1e-9)
    assert c_neg == pytest.approx(-6.25, abs=1e-9)


def test_nl_prices_use_the_extremes() -> None:
    values = np.concatenate([np.linspace(0.0, 200.0, 451), np.linspace(200.0, 0.0, 451)[1:]])
    c_pos, c_neg = price_bounds(frr_trace(values), ISP_1, "NL")
    assert c_pos == pytest.approx(50.0)
    assert c_neg == 0.0


def test_unknown_mechanism() -> None:
    with pytest.raises(ValueError):
        price_bounds(frr_trace(np.zeros(901)), ISP_1, "FR")


def _exact_positive_area(times: np.ndarray, values: np.ndarray) -> float:
    total = 0.0
    for t0, t1, v0, v1 in zip(times, times[1:], values, values[1:]):
        length = t1 - t0
        if v0 >= 0 and v1 >= 0:
            total += 0.5 * (v0 + v1) * length
        elif v0 > 0 or v1 > 0:
            top = max(v0, v1)
            total += 0.5 * top * top / (abs(v0) + abs(v1)) * length
    return total


def test_prices_match_closed_form_on_random_profiles() -> None:
    """
    Random piecewise-linear P_FRR with breakpoints on the sampling grid:
    the energy is the exact integral, the DE bounds equal the exact
    integrals of the positive and negative parts and the NL bounds are a
    quarter hour at the extremes.
    """
    rng = np.random.default_rng(2024)
    grid = np.arange(901, dtype=float)

    for _ in range(50):
        n_knots = int(rng.integers(2, 12))
        inner = np.sort(rng.choice(np.arange(1, 900), size=n_knots, replace=False))
        knots_t = np.concatenate([[0.0], inner, [900.0]])
        knots_p = rng.uniform(-300.0, 300.0, size=len(knots_t))
        values = np.interp(grid, knots_t, knots_p)

        c_pos, c_neg = price_bounds(frr_trace(values), ISP_1, "DE")
        expected_pos = _exact_positive_area(knots_t, knots_p) / 3600.0
        expected_neg = -_exact_positive_area(knots_t, -knots_p) / 3600.0
        assert c_pos == pytest.approx(expected_pos, rel=1e-9, abs=1e-12)
        assert c_neg == pytest.approx(expected_neg, rel=1e-9, abs=1e-12)
        assert c_pos >= 0 >= c_neg

        trace = frr_trace(values)
        expected_energy = np.sum(0.5 * (knots_p[1:] + knots_p[:-1]) * np.diff(knots_t)) / 3600.0
        assert energy(trace, "p_frr_requested", ISP_1) == pytest.approx(
            expected_energy, rel=1e-9, abs=1e-12
        )

        nl_pos, nl_neg = price_bounds(trace, ISP_1, "NL")
        assert nl_pos == 0.25 * values.max()
        assert nl_neg == 0.25 * values.min()
        assert nl_pos == pytest.approx(0.25 * knots_p.max(), rel=1e-12)
        assert nl_neg == pytest.approx(0.25 * knots_p.min(), rel=1e-12)


def test_positive_area_split_at_zero() -> None:
    assert positive_area(np.array([-1.0, 1.0]), 2.0) == pytest.approx(0.5)
    assert positive_area(np.array([-1.0, -3.0]), 1.0) == 0.0
    assert positive_area(np.array([2.0, 4.0]), 1.0) == pytest.approx(3.0)


def _brute_non_monotone(x: np.ndarray, tol: float) -> bool:
    n = len(x)
    for i in range(n):
        for j in range(i + 1, n):
            for k in range(j + 1, n):
                if x[j] - x[i] > tol and x[j] - x[k] > tol:
                    return True
                if x[i] - x[j] > tol and x[k] - x[j] > tol:
                    return True
    return False


def test_dual_detection_matches_brute_force() -> None:
    rng = np.random.default_rng(7)
    for _ in range(50):
        values = np.cumsum(rng.normal(0.0, 20.0, size=31))
        trace = frr_trace(values, dt=30.0)
        expected = (
            values.max() > 1.0
            and values.min() < -1.0
            and _brute_non_monotone(values, 1.0)
        )
        assert detect_dual(trace, ISP_1) == expected
        assert is_non_monotone(values, 1.0) == _brute_non_monotone(values, 1.0)


@pytest.mark.parametrize(
    "values, expected",
    [
        ([0.0, 80.0, 20.0, -60.0], True),
        ([100.0, 40.0, -20.0, -60.0], False),
        ([0.0, 40.0, 80.0, 60.0], False),
        ([0.0, 0.5, -0.5, 0.5], False),
    ],
)
def test_dual_cases(values: list, expected: bool) -> None:
    """Counter-activation alone or non-monotonicity alone is not dual."""
    trace = frr_trace(np.interp(np.arange(901), [0, 300, 600, 900], values))
    assert detect_dual(trace, ISP_1) is expected


@pytest.mark.parametrize(
    "e_b, e_frr, mechanism, dual, price, payoff",
    [
        (10.0, 5.0, "DE", False, 10.0, 100.0),
        (10.0, -5.0, "DE", False, -6.0, -60.0),
        (10.0, 0.0, "DE", False, 0.0, 0.0),
        (10.0, 5.0, "NL", True, -6.0, -60.0),
        (-10.0, -5.0, "NL", True, 10.0, -100.0),
        (0.0, 5.0, "NL", True, 0.0, 0.0),
        (-10.0, 5.0, "NL", False, 10.0, -100.0),
    ],
)
def test_settle(
    e_b: float, e_frr: float, mechanism: str, dual: bool, price: float, payoff: float
) -> None:
    entry = settle(e_b, e_frr, c_pos=10.0, c_neg=-6.0, mechanism=mechanism, dual=dual)
    assert entry.price == price
    assert entry.payoff == pytest.approx(payoff)


def test_dual_is_only_for_nl() -> None:
    with pytest.raises(ValueError):
        settle(1.0, 1.0, 1.0, -1.0, "DE", dual=True)


def test_no_reaction_pays_nothing() -> None:
    for mechanism in ("DE", "NL"):
        trace, reactions = simulated(ScenarioConfig(), StrategyProfile(0, 0))
        assert scenario_payoffs(trace, reactions, mechanism).payoffs == (0.0, 0.0)


def test_both_reacting_is_counter_activation() -> None:
    """The over-injection turns the FRR request negative within the first ISP."""
    trace, _ = simulated(ScenarioConfig(), StrategyProfile(1, 1))
    assert trace.p_frr_requested.max() > 0
    assert trace.p_frr_requested.min() < 0
    assert detect_dual(trace, ISP_1)


@pytest.mark.parametrize("mechanism", ["DE", "NL"])
def test_acting_alone_pays_and_both_acting_costs(mechanism: str) -> None:
    cfg = ScenarioConfig(t_game=5.0, ramp_pct_per_min=20.0)
    trace, reactions = simulated(cfg, StrategyProfile(1, 0))
    alone = scenario_payoffs(trace, reactions, mechanism)
    assert alone.payoffs[0] > 0
    assert alone.payoffs[1] == 0.0

    trace, reactions = simulated(cfg, StrategyProfile(1, 1))
    both = scenario_payoffs(trace, reactions, mechanism)
    assert both.payoffs[0] < 0
    assert both.payoffs[0] == pytest.approx(both.payoffs[1])
    assert len(both.isps) == 2
    assert len(both.rows("T5_r20_S11")) == 2


def test_de_payoff_scales_quadratically() -> None:
    """Scaling every injection by lambda scales DE payoffs by lambda squared."""
    cfg = ScenarioConfig()
    inputs = assemble_inputs(cfg, StrategyProfile(1, 1))
    base = scenario_payoffs(simulate(GridParams(), inputs, 30.0), inputs[1:], "DE").payoffs

    scaled = [p.scaled(2.0) for p in inputs]
    doubled = scenario_payoffs(simulate(GridParams(), scaled, 30.0), scaled[1:], "DE").payoffs
    assert doubled == pytest.approx(tuple(4.0 * p for p in base), rel=1e-9)


def test_nl_payoff_scales_without_counter_activation() -> None:
    cfg = ScenarioConfig()
    inputs = assemble_inputs(cfg, StrategyProfile(1, 0))
    base = scenario_payoffs(simulate(GridParams(), inputs, 30.0), inputs[1:], "NL").payoffs

    scaled = [p.scaled(3.0) for p in inputs]
    tripled = scenario_payoffs(simulate(GridParams(), scaled, 30.0), scaled[1:], "NL").payoffs
    assert tripled == pytest.approx(tuple(9.0 * p for p in base), rel=1e-9)


def test_zero_frr_energy_prices_at_zero() -> None:
    """A request that nets to zero energy gives a zero price."""
    values = np.full(901, 10.0)
    values[450] = 0.0
    values[451:] = -10.0
    trace = frr_trace(values)
    reaction = InjectionProfile(((0.0, 10.0),))
    settled = scenario_payoffs(trace, [reaction], "DE", isp_minutes=15.0)
    assert settled.isps[0].e_frr == 0.0
    assert settled.isps[0].price_applied == (0.0,)


def test_zero_amounts_are_unsigned(tmp_path: Path) -> None:
    """Zero bounds and payoffs carry no sign and print as 0 in the settlement CSV."""
    # 1. One-sided requests
    surplus = frr_trace(np.full(901, 50.0))
    silent = frr_trace(-np.zeros(901))
    _, de_neg = price_bounds(surplus, ISP_1, "DE")
    nl_pos, nl_neg = price_bounds(silent, ISP_1, "NL")
    entry = settle(-2.0, 0.0, c_pos=10.0, c_neg=-6.0, mechanism="DE")

    # 2. Settle a scenario where only one BRP moves and write the rows
    trace, reactions = simulated(ScenarioConfig(), StrategyProfile(1, 0))
    settled = scenario_payoffs(trace, reactions, "DE")
    csv = ioh.CsvFile("settlements.csv", SETTLEMENT_HEADER, settled.rows("T1_r400_S10"))
    path = csv.save(tmp_path / "settlements.csv")

    # 3. Verify
    for value in (de_neg, nl_pos, nl_neg, entry.price, entry.payoff):
        assert value == 0.0
        assert math.copysign(1.0, value) == 1.0, "zero carries a negative sign"
    cells = [cell for line in path.read_text().splitlines()[1:] for cell in line.split(",")]
    assert "-0" not in cells, "settlement CSV contains a signed zero"
