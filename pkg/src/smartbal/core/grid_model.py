# core/grid_model.py
"""
Linearized single-busbar control area.

The frequency swing is integrated in per-unit of ``p_base``; FCR and the
self-regulating effect act on the deviation in Hz, the secondary (aFRR)
PI controller acts on the per-unit deviation and its output is scaled by
``p_base``. Both activation paths are first-order lags.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, Iterable, List, Literal, Mapping, Sequence, Tuple

import numpy as np
import pandas as pd

from ..io_helpers import frame_to_csv_text
from .base import ConfigError, InstabilityError, OutputFile, logger

Signal = Literal[
    "delta_f",
    "p_frr_requested",
    "p_frr_activated",
    "p_fcr",
    "p_selfreg",
    "p_ace",
]
SIGNALS: Tuple[str, ...] = (
    "delta_f",
    "p_frr_requested",
    "p_frr_activated",
    "p_fcr",
    "p_selfreg",
    "p_ace",
)
TRACE_HEADER: Tuple[str, ...] = (
    "t_min",
    "delta_f_hz",
    "p_frr_req_mw",
    "p_frr_act_mw",
    "p_fcr_mw",
    "p_selfreg_mw",
    "p_ace_mw",
)


@dataclass(frozen=True)
class GridParams:
    """
    Dynamic constants of the control area.

    The defaults are calibration placeholders for a large synchronous
    block, not measured values.
    """

    t_inertia: float = 10.0
    p_base: float = 80_000.0
    k_fcr: float = 1500.0
    t_fcr_act: float = 30.0
    k_load: float = 1500.0
    k_afrr: float = 0.5
    t_afrr: float = 120.0
    t_afrr_act: float = 60.0
    f_nominal: float = 50.0

    def __post_init__(self) -> None:
        for f in fields(self):
            value = getattr(self, f.name)
            if not math.isfinite(value):
                raise ValueError(f"GridParams.{f.name} must be finite, got {value!r}")
        for name in ("t_inertia", "t_fcr_act", "t_afrr", "t_afrr_act"):
            if getattr(self, name) <= 0:
                raise ValueError(f"GridParams.{name} must be > 0")
        if self.p_base <= 0:
            raise ValueError("GridParams.p_base must be > 0")
        if self.f_nominal <= 0:
            raise ValueError("GridParams.f_nominal must be > 0")
        for name in ("k_fcr", "k_load", "k_afrr"):
            if getattr(self, name) < 0:
                raise ValueError(f"GridParams.{name} must be >= 0")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "GridParams":
        """Build from a config mapping; unknown keys are rejected."""
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(
                f"unknown grid parameter(s): {', '.join(unknown)}",
                field=f"grid.{unknown[0]}",
            )
        try:
            return cls(**{k: float(v) for k, v in data.items()})
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), field="grid") from exc

    def as_dict(self) -> Dict[str, float]:
        return asdict(self)

    @property
    def min_time_constant(self) -> float:
        return min(self.t_inertia, self.t_fcr_act, self.t_afrr, self.t_afrr_act)

    def state_matrices(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        Return (A, B) of x' = A x + B P_ACE with
        x = [delta_f_pu, p_fcr, integral of delta_f_pu, p_frr_activated].
        """
        m = self.t_inertia * self.p_base
        fn = self.f_nominal
        a = np.array(
            [
                [-self.k_load * fn / m, 1.0 / m, 0.0, 1.0 / m],
                [-self.k_fcr * fn / self.t_fcr_act, -1.0 / self.t_fcr_act, 0.0, 0.0],
                [1.0, 0.0, 0.0, 0.0],
                [
                    -self.p_base * self.k_afrr / self.t_afrr_act,
                    0.0,
                    -self.p_base / (self.t_afrr * self.t_afrr_act),
                    -1.0 / self.t_afrr_act,
                ],
            ]
        )
        b = np.array([1.0 / m, 0.0, 0.0, 0.0])
        return a, b


@dataclass(frozen=True)
class InjectionProfile:
    """
    Piecewise-linear schedule deviation, breakpoints in (minutes, MW).

    Zero before the first breakpoint, constant after the last one. A
    profile whose first breakpoint carries a non-zero power is a step.
    """

    breakpoints: Tuple[Tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        pts = tuple((float(t), float(p)) for t, p in self.breakpoints)
        object.__setattr__(self, "breakpoints", pts)
        for t, p in pts:
            if not (math.isfinite(t) and math.isfinite(p)):
                raise ValueError(f"non-finite breakpoint ({t}, {p})")
        for (t0, _), (t1, _) in zip(pts, pts[1:]):
            if not t1 > t0:
                raise ValueError(
                    f"breakpoint times must be strictly increasing ({t0} then {t1})"
                )

    @classmethod
    def zero(cls) -> "InjectionProfile":
        return cls(())

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.breakpoints], dtype=float)

    @property
    def powers(self) -> np.ndarray:
        return np.array([p for _, p in self.breakpoints], dtype=float)

    def value_at(self, t_min: float | np.ndarray) -> float | np.ndarray:
        """Power at time(s) in minutes."""
        if not self.breakpoints:
            return np.zeros_like(t_min, dtype=float) if np.ndim(t_min) else 0.0
        ps = self.powers
        out = np.interp(t_min, self.times, ps, left=0.0, right=ps[-1])
        return out if np.ndim(t_min) else float(out)

    def sample(self, times: Sequence[float] | np.ndarray) -> np.ndarray:
        return np.asarray(self.value_at(np.asarray(times, dtype=float)), dtype=float)

    def energy(self, start: float, end: float) -> float:
        """Exact integral over [start, end] minutes, in MWh."""
        if end < start:
            raise ValueError(f"energy window end {end} before start {start}")
        knots = [start, end]
        knots += [t for t in self.times.tolist() if start < t < end]
        knots = sorted(knots)
        total = 0.0
        for a, b in zip(knots, knots[1:]):
            # linear on (a, b): the midpoint rule is exact
            total += (b - a) * float(self.value_at(0.5 * (a + b)))
        return total / 60.0

    def scaled(self, factor: float) -> "InjectionProfile":
        return InjectionProfile(tuple((t, factor * p) for t, p in self.breakpoints))

    def max_abs_slope(self) -> float:
        """Largest |dP/dt| between consecutive breakpoints, MW per minute."""
        if len(self.breakpoints) < 2:
            return 0.0
        slopes = np.diff(self.powers) / np.diff(self.times)
        return float(np.max(np.abs(slopes)))


def total_injection(injections: Iterable[InjectionProfile], t_min: np.ndarray) -> np.ndarray:
    """P_ACE: the sum of all schedule deviations at the given times."""
    total = np.zeros_like(t_min, dtype=float)
    for profile in injections:
        total = total + profile.value_at(t_min)
    return total


@dataclass
class SimTrace:
    """Uniformly sampled trace of the control area signals."""

    dt: float
    delta_f: np.ndarray
    p_frr_requested: np.ndarray
    p_frr_activated: np.ndarray
    p_fcr: np.ndarray
    p_selfreg: np.ndarray
    p_ace: np.ndarray

    def __len__(self) -> int:
        return len(self.delta_f)

    @property
    def times_s(self) -> np.ndarray:
        return np.arange(len(self)) * self.dt

    @property
    def times_min(self) -> np.ndarray:
        return self.times_s / 60.0

    @property
    def horizon_min(self) -> float:
        return (len(self) - 1) * self.dt / 60.0

    def signal(self, name: str) -> np.ndarray:
        if name not in SIGNALS:
            raise ValueError(f"Unknown signal {name!r}; expected one of {SIGNALS}")
        return getattr(self, name)

    def index_at(self, t_min: float) -> int:
        """Sample index of a time in minutes; must lie on the sampling grid."""
        pos = t_min * 60.0 / self.dt
        idx = int(round(pos))
        if abs(pos - idx) > 1e-6:
            raise ValueError(
                f"t = {t_min} min is not on the {self.dt} s sampling grid"
            )
        if idx < 0 or idx >= len(self):
            raise ValueError(
                f"t = {t_min} min outside trace [0, {self.horizon_min}] min"
            )
        return idx

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {
                "t_min": self.times_min,
                "delta_f_hz": self.delta_f,
                "p_frr_req_mw": self.p_frr_requested,
                "p_frr_act_mw": self.p_frr_activated,
                "p_fcr_mw": self.p_fcr,
                "p_selfreg_mw": self.p_selfreg,
                "p_ace_mw": self.p_ace,
            },
            columns=list(TRACE_HEADER),
        )


class TraceFile(OutputFile):
    """CSV export of a SimTrace."""

    filename = "trace.csv"

    def __init__(
        self,
        trace: SimTrace,
        filename: str | None = None,
        base_dir: Path | None = None,
    ) -> None:
        super().__init__(base_dir=base_dir)
        self.trace = trace
        if filename is not None:
            self.filename = filename

    def as_text(self) -> str:
        return frame_to_csv_text(self.trace.to_frame())


def _validate_steps(params: GridParams, horizon: float, dt: float) -> int:
    if not (math.isfinite(dt) and dt > 0):
        raise ValueError(f"dt must be > 0, got {dt!r}")
    if not math.isfinite(horizon) or horizon * 60.0 < dt:
        raise ValueError(f"horizon ({horizon} min) must be at least dt ({dt} s)")
    limit = params.min_time_constant / 5.0
    if dt > limit:
        raise ValueError(
            f"dt = {dt} s exceeds the stability limit {limit} s "
            "(smallest time constant / 5)"
        )
    n_float = horizon * 60.0 / dt
    n_steps = int(round(n_float))
    if abs(n_float - n_steps) > 1e-6:
        raise ValueError(f"horizon ({horizon} min) is not a multiple of dt ({dt} s)")
    return n_steps


def simulate(
    params: GridParams,
    injections: Sequence[InjectionProfile],
    horizon: float,
    dt: float = 1.0,
) -> SimTrace:
    """
    Integrate the control area with fixed-step RK4.

    Parameters
    ----------
    params:
        Grid constants.
    injections:
        Schedule deviations summed into P_ACE (disturbance, BRP 1, BRP 2, ...).
    horizon:
        Simulated time in minutes.
    dt:
        Step in seconds; also the sample spacing of the trace.

    Returns
    -------
    SimTrace
        ``horizon * 60 / dt + 1`` samples starting from the rest state.
    """
    n_steps = _validate_steps(params, horizon, dt)
    a, b = params.state_matrices()
    injections = list(injections)

    def p_ace(t_s: np.ndarray) -> np.ndarray:
        return total_injection(injections, t_s / 60.0)

    times = np.arange(n_steps + 1) * dt
    # inputs at sample times and half steps; profiles are exact at any time
    u_full = p_ace(times)
    u_half = p_ace(times[:-1] + 0.5 * dt)

    states = np.zeros((n_steps + 1, 4))
    x = np.zeros(4)
    for k in range(n_steps):
        u0, um, u1 = u_full[k], u_half[k], u_full[k + 1]
        k1 = a @ x + b * u0
        k2 = a @ (x + 0.5 * dt * k1) + b * um
        k3 = a @ (x + 0.5 * dt * k2) + b * um
        k4 = a @ (x + dt * k3) + b * u1
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise InstabilityError(step=k + 1, time_s=float(times[k + 1]))
        states[k + 1] = x

    df_pu = states[:, 0]
    requested = -params.p_base * (params.k_afrr * df_pu + states[:, 2] / params.t_afrr)
    trace = SimTrace(
        dt=dt,
        delta_f=df_pu * params.f_nominal,
        p_frr_requested=requested,
        p_frr_activated=states[:, 3].copy(),
        p_fcr=states[:, 1].copy(),
        p_selfreg=-params.k_load * params.f_nominal * df_pu,
        p_ace=u_full,
    )
    logger.debug(
        "simulate: {} steps of {} s, {} injections, final p_frr_requested={:.3f} MW",
        n_steps,
        dt,
        len(injections),
        requested[-1],
    )
    return trace


def steady_state_frr(params: GridParams, net_schedule_deviation: float) -> float:
    """Requested FRR once the integral action has removed the frequency error."""
    return -float(net_schedule_deviation)


def superpose(traces: List[SimTrace], weights: Sequence[float]) -> Dict[str, np.ndarray]:
    """Weighted sample-wise sum of the signals of several traces."""
    if len(traces) != len(weights):
        raise ValueError("traces and weights differ in length")
    return {
        name: sum(w * tr.signal(name) for tr, w in zip(traces, weights))
        for name in SIGNALS
    }
