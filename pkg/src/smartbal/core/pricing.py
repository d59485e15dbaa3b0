# core/pricing.py
"""Per-ISP energy accounting, imbalance prices and settlement (DE and NL)."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Literal, NamedTuple, Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid

from .base import logger
from .grid_model import InjectionProfile, SimTrace

Mechanism = Literal["DE", "NL"]
MECHANISMS: Tuple[str, ...] = ("DE", "NL")

# NL prices scale the peak FRR power to a quarter hour
NL_PEAK_HOURS = 0.25
DEFAULT_DUAL_TOL_MW = 1.0

SETTLEMENT_HEADER: Tuple[str, ...] = (
    "scenario",
    "mechanism",
    "isp",
    "e_b1",
    "e_b2",
    "e_frr",
    "c_pos",
    "c_neg",
    "dual",
    "pi_1",
    "pi_2",
)


def check_mechanism(mechanism: str) -> str:
    if mechanism not in MECHANISMS:
        raise ValueError(f"Unknown mechanism {mechanism!r}; expected one of {MECHANISMS}")
    return mechanism


@dataclass(frozen=True)
class IspWindow:
    """One imbalance settlement period, in minutes."""

    start: float
    end: float

    def __post_init__(self) -> None:
        if not self.start < self.end:
            raise ValueError(f"ISP window start {self.start} must precede end {self.end}")

    @property
    def length(self) -> float:
        return self.end - self.start


def isp_windows(horizon: float, isp_minutes: float = 15.0) -> List[IspWindow]:
    """Consecutive ISP windows covering [0, horizon]."""
    n = horizon / isp_minutes
    if n < 1 or abs(n - round(n)) > 1e-9:
        raise ValueError(
            f"horizon {horizon} min is not a positive multiple of {isp_minutes} min"
        )
    return [
        IspWindow(i * isp_minutes, (i + 1) * isp_minutes) for i in range(int(round(n)))
    ]


def window_values(trace: SimTrace, signal: str, window: IspWindow) -> np.ndarray:
    """Samples of a signal inside a window, both ends included."""
    i0 = trace.index_at(window.start)
    i1 = trace.index_at(window.end)
    return trace.signal(signal)[i0 : i1 + 1]


def positive_area(values: np.ndarray, dx: float) -> float:
    """
    Integral of max(y, 0) for the piecewise-linear interpolant of samples.

    Segments crossing zero are split at the crossing, so the result is exact
    for linear interpolation between samples.
    """
    y0, y1 = values[:-1], values[1:]
    area = 0.5 * dx * (np.maximum(y0, 0.0) + np.maximum(y1, 0.0))
    crossing = (y0 * y1) < 0
    if np.any(crossing):
        a, b = y0[crossing], y1[crossing]
        top = np.maximum(a, b)
        area[crossing] = 0.5 * dx * top * top / (np.abs(a) + np.abs(b))
    return float(np.sum(area))


def energy(trace: SimTrace, signal: str, window: IspWindow) -> float:
    """Trapezoidal integral of a trace signal over a window, in MWh."""
    values = window_values(trace, signal, window)
    return float(trapezoid(values, dx=trace.dt)) / 3600.0


def price_bounds(
    trace: SimTrace,
    window: IspWindow,
    mechanism: str,
) -> Tuple[float, float]:
    """
    (C+, C-) for one ISP from the requested FRR power.

    DE: time integrals of the positive and negative parts of P_FRR (MWh).
    NL: 0.25 h times the extreme of P_FRR in the ISP.
    """
    check_mechanism(mechanism)
    values = window_values(trace, "p_frr_requested", window)
    if mechanism == "DE":
        c_pos = positive_area(values, trace.dt) / 3600.0
        c_neg = -positive_area(-values, trace.dt) / 3600.0
    else:
        c_pos = NL_PEAK_HOURS * float(np.max(values))
        c_neg = NL_PEAK_HOURS * float(np.min(values))
    # +0.0 drops the sign of a zero bound
    return c_pos + 0.0, c_neg + 0.0


def is_non_monotone(values: np.ndarray, tol: float) -> bool:
    """True if the series rises and falls (either order) by more than tol."""
    x = np.asarray(values, dtype=float)
    if x.size < 3:
        return False
    lo_before = np.minimum.accumulate(x)
    hi_before = np.maximum.accumulate(x)
    lo_after = np.minimum.accumulate(x[::-1])[::-1]
    hi_after = np.maximum.accumulate(x[::-1])[::-1]
    peak = (x - lo_before > tol) & (x - lo_after > tol)
    valley = (hi_before - x > tol) & (hi_after - x > tol)
    return bool(np.any(peak | valley))


def detect_dual(
    trace: SimTrace,
    window: IspWindow,
    tol: float = DEFAULT_DUAL_TOL_MW,
) -> bool:
    """Counter-activation of FRR with a non-monotone P_FRR inside the ISP."""
    values = window_values(trace, "p_frr_requested", window)
    counter_activation = values.max() > tol and values.min() < -tol
    return bool(counter_activation and is_non_monotone(values, tol))


class SettlementEntry(NamedTuple):
    price: float
    payoff: float


def settle(
    e_b: float,
    e_frr: float,
    c_pos: float,
    c_neg: float,
    mechanism: str,
    dual: bool = False,
) -> SettlementEntry:
    """Imbalance price applied to one BRP and its payoff for one ISP."""
    check_mechanism(mechanism)
    if dual and mechanism != "NL":
        raise ValueError("dual pricing only exists in the NL combined mechanism")

    if mechanism == "NL" and dual:
        if e_b > 0:
            price = c_neg
        elif e_b < 0:
            price = c_pos
        else:
            return SettlementEntry(0.0, 0.0)
    elif e_frr > 0:
        price = c_pos
    elif e_frr < 0:
        price = c_neg
    else:
        price = 0.0
    return SettlementEntry(price + 0.0, price * e_b + 0.0)


@dataclass
class Settlement:
    """Settlement of all BRPs for one ISP."""

    isp: int
    e_b: Tuple[float, ...]
    e_frr: float
    c_pos: float
    c_neg: float
    price_applied: Tuple[float, ...]
    dual_applied: bool
    payoff: Tuple[float, ...]

    def __post_init__(self) -> None:
        if not (len(self.e_b) == len(self.price_applied) == len(self.payoff)):
            raise ValueError("per-BRP fields differ in length")


@dataclass
class ScenarioSettlement:
    mechanism: str
    isps: List[Settlement] = field(default_factory=list)

    @property
    def payoffs(self) -> Tuple[float, ...]:
        """Per-BRP payoff summed over all ISPs."""
        if not self.isps:
            return ()
        n = len(self.isps[0].payoff)
        return tuple(sum(s.payoff[b] for s in self.isps) for b in range(n))

    def rows(self, scenario: str) -> List[list]:
        """Rows for the settlement CSV (two-BRP layout)."""
        out = []
        for s in self.isps:
            out.append(
                [
                    scenario,
                    self.mechanism,
                    s.isp,
                    s.e_b[0],
                    s.e_b[1],
                    s.e_frr,
                    s.c_pos,
                    s.c_neg,
                    s.dual_applied,
                    s.payoff[0],
                    s.payoff[1],
                ]
            )
        return out


def scenario_payoffs(
    trace: SimTrace,
    reactions: Sequence[InjectionProfile],
    mechanism: str,
    isp_minutes: float = 15.0,
    tol: float = DEFAULT_DUAL_TOL_MW,
) -> ScenarioSettlement:
    """
    Settle every ISP of a simulated scenario.

    ``reactions`` are the BRPs' own schedule deviations, already multiplied
    by their strategy; a BRP that does not act has E_b = 0 and payoff 0.
    """
    check_mechanism(mechanism)
    result = ScenarioSettlement(mechanism=mechanism)
    for idx, window in enumerate(isp_windows(trace.horizon_min, isp_minutes), start=1):
        e_frr = energy(trace, "p_frr_requested", window)
        c_pos, c_neg = price_bounds(trace, window, mechanism)
        dual = mechanism == "NL" and detect_dual(trace, window, tol)
        e_bs = tuple(r.energy(window.start, window.end) for r in reactions)
        entries = [settle(e_b, e_frr, c_pos, c_neg, mechanism, dual) for e_b in e_bs]
        result.isps.append(
            Settlement(
                isp=idx,
                e_b=e_bs,
                e_frr=e_frr,
                c_pos=c_pos,
                c_neg=c_neg,
                price_applied=tuple(e.price for e in entries),
                dual_applied=dual,
                payoff=tuple(e.payoff for e in entries),
            )
        )
        logger.debug(
            "ISP {} [{}]: e_frr={:.4f} MWh, C+={:.4f}, C-={:.4f}, dual={}",
            idx,
            mechanism,
            e_frr,
            c_pos,
            c_neg,
            dual,
        )
    return result
