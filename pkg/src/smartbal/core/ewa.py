# core/ewa.py
"""
Experience-Weighted Attraction learning for the smart balancing game.

Arrays are indexed ``[..., player, strategy]``; strategy 1 is "perform
smart balancing". Every function works on a single learner pair as well
as on a stack of independent runs along leading axes, which is how the
parameter sweep runs all seeds of one cell at once.
"""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Literal, Mapping, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.special import softmax

from .base import ConfigError, StateCorruptionError, logger
from .game import PayoffTable, stake_metrics

EwaMode = Literal["BatchSample", "Expected"]
MODES: Tuple[str, ...] = ("BatchSample", "Expected")
FixedPoint = Literal["Pure", "Mixed"]

DEFAULT_FP_THRESHOLD = 0.1
PROB_TOL = 1e-9

_MASK64 = (1 << 64) - 1

SWEEP_HEADER: Tuple[str, ...] = (
    "mechanism",
    "t_game_min",
    "r_pct_per_min",
    "l_plus_g",
    "l_minus_g",
    "beta_class",
    "mean_p1p2",
    "std_p1p2",
)
SCATTER_HEADER: Tuple[str, ...] = (
    "mechanism",
    "scenario",
    "delta",
    "alpha",
    "kappa",
    "beta",
    "seed",
    "p1_final",
    "p2_final",
)
FIXED_POINT_HEADER: Tuple[str, ...] = (
    "mechanism",
    "t_game_min",
    "r_pct_per_min",
    "beta_class",
    "n_runs",
    "n_pure",
    "n_mixed",
    "n_above_half",
)
TRAJECTORY_HEADER: Tuple[str, ...] = ("k", "p1", "p2", "p1p2", "n")
TRAJECTORY_SUMMARY_HEADER: Tuple[str, ...] = (
    "mechanism",
    "scenario",
    "p1_final",
    "p2_final",
    "p1p2_final",
    "k_peak",
    "p1p2_peak",
    "fixed_point",
)


def splitmix64(value: int) -> int:
    """One step of the splitmix64 output function."""
    z = (value + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(root_seed: int, index: int) -> int:
    """Seed of run ``index``; depends only on the root seed and the index."""
    if index < 0:
        raise ValueError(f"seed index must be >= 0, got {index}")
    return splitmix64((splitmix64(root_seed & _MASK64) + index) & _MASK64)


def parse_beta(value: Any) -> float:
    """Accept a positive number or ``"inf"``."""
    if isinstance(value, str):
        if value.strip().lower() in ("inf", "infinity", "+inf"):
            return math.inf
        value = float(value)
    beta = float(value)
    if not beta > 0:
        raise ValueError(f"beta must be > 0 or inf, got {value!r}")
    return beta


def beta_class(beta: float) -> str:
    return "inf" if math.isinf(beta) else f"{beta:g}"


@dataclass(frozen=True)
class EwaParams:
    """Learning parameters (delta, alpha, kappa, beta) and how games are observed."""

    delta: float
    alpha: float
    kappa: float
    beta: float = 1.0
    batch_size: int = 100
    mode: EwaMode = "BatchSample"

    def __post_init__(self) -> None:
        for name in ("delta", "alpha", "kappa"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
        object.__setattr__(self, "beta", parse_beta(self.beta))
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if int(self.batch_size) != self.batch_size or self.batch_size < 1:
            raise ValueError(f"batch_size must be an integer >= 1, got {self.batch_size!r}")
        object.__setattr__(self, "batch_size", int(self.batch_size))

    @property
    def decay(self) -> float:
        """Factor on the previous experience, (1 - kappa)(1 - alpha)."""
        return (1.0 - self.kappa) * (1.0 - self.alpha)

    @property
    def experience_limit(self) -> float:
        """Value N[k] converges to; infinite without depreciation."""
        if self.decay >= 1.0:
            return math.inf
        return 1.0 / (1.0 - self.decay)


def choice_probs(attractions: np.ndarray, beta: float) -> np.ndarray:
    """Logit choice rule; argmax with ties split evenly when beta is infinite."""
    a = np.asarray(attractions, dtype=float)
    if not np.all(np.isfinite(a)):
        raise ValueError("attractions must be finite")
    beta = parse_beta(beta)
    if math.isinf(beta):
        winners = (a == a.max(axis=-1, keepdims=True)).astype(float)
        return winners / winners.sum(axis=-1, keepdims=True)
    return softmax(beta * a, axis=-1)


def check_rows(probs: np.ndarray, what: str = "probabilities") -> None:
    p = np.asarray(probs, dtype=float)
    bad_sum = np.abs(p.sum(axis=-1) - 1.0) > PROB_TOL
    if np.any(bad_sum) or np.any(p < -PROB_TOL) or not np.all(np.isfinite(p)):
        raise StateCorruptionError(f"{what} rows do not form probability distributions")


@dataclass
class EwaState:
    """Learner state after round ``k`` for one or many independent runs."""

    n: np.ndarray
    attractions: np.ndarray
    probs: np.ndarray
    k: int = 0

    def __post_init__(self) -> None:
        self.n = np.asarray(self.n, dtype=float)
        self.attractions = np.asarray(self.attractions, dtype=float)
        self.probs = np.asarray(self.probs, dtype=float)
        if self.attractions.shape[-2:] != (2, 2):
            raise ValueError(
                f"attractions need trailing shape (2, 2), got {self.attractions.shape}"
            )
        if self.probs.shape != self.attractions.shape:
            raise ValueError("probs and attractions differ in shape")

    @property
    def p1(self) -> np.ndarray | float:
        return self._scalar(self.probs[..., 0, 1])

    @property
    def p2(self) -> np.ndarray | float:
        return self._scalar(self.probs[..., 1, 1])

    @property
    def overreaction(self) -> np.ndarray | float:
        return self._scalar(self.probs[..., 0, 1] * self.probs[..., 1, 1])

    @staticmethod
    def _scalar(x: np.ndarray) -> np.ndarray | float:
        return float(x) if np.ndim(x) == 0 else x


def initial_attractions(seed: int) -> np.ndarray:
    """Four independent standard normal draws for (player, strategy)."""
    return np.random.default_rng(seed).standard_normal((2, 2))


def init_state(
    seed: int,
    beta: float = 1.0,
    attractions: np.ndarray | None = None,
) -> EwaState:
    """
    N[0] = 1 and standard normal attractions drawn from ``seed``.

    ``attractions`` overrides the draw (shape ``(..., 2, 2)``).
    """
    a = initial_attractions(seed) if attractions is None else np.asarray(attractions, dtype=float)
    return EwaState(
        n=np.ones(a.shape[:-2]),
        attractions=a.copy(),
        probs=choice_probs(a, beta),
        k=0,
    )


def sample_observation(
    probs: np.ndarray,
    batch_size: int,
    rng: np.random.Generator | Sequence[np.random.Generator],
) -> np.ndarray:
    """Play frequencies of a batch of games sampled from mixed strategies."""
    p_act = np.asarray(probs, dtype=float)[..., 1]
    if isinstance(rng, np.random.Generator):
        counts = rng.binomial(batch_size, p_act)
    else:
        flat = p_act.reshape(len(rng), -1)
        counts = np.stack([g.binomial(batch_size, row) for g, row in zip(rng, flat)])
        counts = counts.reshape(p_act.shape)
    act = counts / batch_size
    return np.stack([1.0 - act, act], axis=-1)


def _update_arrays(
    n: np.ndarray,
    attractions: np.ndarray,
    observation: np.ndarray,
    payoff: np.ndarray,
    params: EwaParams,
) -> Tuple[np.ndarray, np.ndarray]:
    """Experience and attraction update for play frequencies ``observation``."""
    n_new = params.decay * n + 1.0
    opponent = observation[..., ::-1, :]
    # payoff of each own strategy against the opponent's realized mix
    forgone = np.einsum("bjl,...bl->...bj", payoff, opponent)
    weight = params.delta + (1.0 - params.delta) * observation
    carry = ((1.0 - params.alpha) * n)[..., None, None] * attractions
    a_new = (carry + weight * forgone) / n_new[..., None, None]
    return n_new, a_new


def ewa_update(
    state: EwaState,
    params: EwaParams,
    table: PayoffTable,
    observation: np.ndarray | None = None,
    rng: np.random.Generator | Sequence[np.random.Generator] | None = None,
) -> EwaState:
    """
    One learning round.

    ``observation`` holds each player's play frequencies ``[..., player,
    strategy]``. Expected mode defaults to the current mixed strategies;
    BatchSample mode samples ``batch_size`` games with ``rng`` when no
    observation is given.
    """
    check_rows(state.probs, "state probability")
    if observation is None:
        if params.mode == "Expected":
            observation = state.probs
        else:
            if rng is None:
                raise ValueError("BatchSample mode needs a random generator or an observation")
            observation = sample_observation(state.probs, params.batch_size, rng)
    observation = np.broadcast_to(np.asarray(observation, dtype=float), state.probs.shape)
    check_rows(observation, "observation")

    n_new, a_new = _update_arrays(
        state.n, state.attractions, observation, table.payoff_tensor(), params
    )
    probs = choice_probs(a_new, params.beta)
    check_rows(probs, "updated probability")
    return EwaState(n=n_new, attractions=a_new, probs=probs, k=state.k + 1)


@dataclass
class EwaTrajectory:
    """Per-round record of a single learning run, rounds 0..K."""

    p1: np.ndarray
    p2: np.ndarray
    n: np.ndarray
    final: EwaState

    @property
    def k(self) -> np.ndarray:
        return np.arange(len(self.p1))

    @property
    def p1p2(self) -> np.ndarray:
        return self.p1 * self.p2

    @property
    def rounds(self) -> int:
        return len(self.p1) - 1

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"k": self.k, "p1": self.p1, "p2": self.p2, "p1p2": self.p1p2, "n": self.n},
            columns=list(TRAJECTORY_HEADER),
        )


def run_ewa_ensemble(
    params: EwaParams,
    table: PayoffTable,
    rounds: int,
    seeds: Sequence[int],
    attractions: np.ndarray | None = None,
    record: bool = False,
) -> Tuple[EwaState, np.ndarray | None]:
    """
    Run one learning process per seed, all in lockstep.

    Returns the final batched state and, if ``record`` is set, an array
    ``(rounds + 1, n_seeds, 3)`` of (p1, p2, N) per round.
    """
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")
    seeds = list(seeds)
    if not seeds:
        raise ValueError("at least one seed is required")
    rngs = [np.random.default_rng(s) for s in seeds]
    if attractions is None:
        a0 = np.stack([rng.standard_normal((2, 2)) for rng in rngs])
    else:
        a0 = np.broadcast_to(np.asarray(attractions, dtype=float), (len(seeds), 2, 2)).copy()
    state = EwaState(n=np.ones(len(seeds)), attractions=a0, probs=choice_probs(a0, params.beta))

    history = None
    if record:
        history = np.empty((rounds + 1, len(seeds), 3))
        history[0] = np.stack([state.probs[:, 0, 1], state.probs[:, 1, 1], state.n], axis=-1)
    for k in range(1, rounds + 1):
        state = ewa_update(state, params, table, rng=rngs)
        if history is not None:
            history[k] = np.stack([state.probs[:, 0, 1], state.probs[:, 1, 1], state.n], axis=-1)
    return state, history


def run_ewa(
    params: EwaParams,
    table: PayoffTable,
    rounds: int,
    seed: int,
    attractions: np.ndarray | None = None,
) -> EwaTrajectory:
    """Single learning run; deterministic for a given seed."""
    final, history = run_ewa_ensemble(
        params, table, rounds, [seed], attractions=attractions, record=True
    )
    assert history is not None
    single = EwaState(
        n=final.n[0], attractions=final.attractions[0], probs=final.probs[0], k=final.k
    )
    return EwaTrajectory(
        p1=history[:, 0, 0].copy(),
        p2=history[:, 0, 1].copy(),
        n=history[:, 0, 2].copy(),
        final=single,
    )


def rounds_for_games(games: int, batch_size: int) -> int:
    """Number of updates that a budget of ``games`` allows."""
    rounds = games // batch_size
    if rounds < 1:
        raise ValueError(f"{games} games do not fill one batch of {batch_size}")
    return rounds


def is_pure_fixed_point(
    p1: np.ndarray | float,
    p2: np.ndarray | float,
    threshold: float = DEFAULT_FP_THRESHOLD,
) -> np.ndarray:
    if not 0.0 < threshold < 0.5:
        raise ValueError(f"threshold must lie in (0, 0.5), got {threshold!r}")
    p1, p2 = np.asarray(p1, dtype=float), np.asarray(p2, dtype=float)
    near_1 = np.minimum(p1, 1.0 - p1) < threshold
    near_2 = np.minimum(p2, 1.0 - p2) < threshold
    return near_1 & near_2


def classify_fixed_point(
    final_probs: Tuple[float, float],
    threshold: float = DEFAULT_FP_THRESHOLD,
) -> FixedPoint:
    """Pure when both players sit within ``threshold`` of a pure strategy."""
    p1, p2 = final_probs
    return "Pure" if bool(is_pure_fixed_point(p1, p2, threshold)) else "Mixed"


def peak_overreaction(trajectory: EwaTrajectory) -> Tuple[int, float]:
    """Round and value of the largest p1 * p2 seen during learning."""
    series = trajectory.p1p2
    k_peak = int(np.argmax(series))
    return k_peak, float(series[k_peak])


def trajectory_summary(
    trajectory: EwaTrajectory,
    table: PayoffTable,
    threshold: float = DEFAULT_FP_THRESHOLD,
) -> Dict[str, Any]:
    k_peak, peak = peak_overreaction(trajectory)
    p1, p2 = float(trajectory.p1[-1]), float(trajectory.p2[-1])
    return {
        "mechanism": table.mechanism,
        "scenario": table.scenario_id,
        "p1_final": p1,
        "p2_final": p2,
        "p1p2_final": p1 * p2,
        "k_peak": k_peak,
        "p1p2_peak": peak,
        "fixed_point": classify_fixed_point((p1, p2), threshold),
    }


@dataclass(frozen=True)
class SweepGrid:
    """Values of each learning parameter visited by the sweep."""

    deltas: Tuple[float, ...] = (0.0, 0.25, 0.5)
    alphas: Tuple[float, ...] = (0.0, 0.05, 0.1)
    kappas: Tuple[float, ...] = (0.0, 0.5, 1.0)
    betas: Tuple[float, ...] = (1.0, math.inf)

    def __post_init__(self) -> None:
        for name in ("deltas", "alphas", "kappas", "betas"):
            values = tuple(getattr(self, name))
            if not values:
                raise ValueError(f"sweep grid {name} is empty")
            object.__setattr__(self, name, values)
        object.__setattr__(self, "betas", tuple(parse_beta(b) for b in self.betas))

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], where: str = "ewa.grid") -> "SweepGrid":
        keys = {"delta": "deltas", "alpha": "alphas", "kappa": "kappas", "beta": "betas"}
        unknown = sorted(set(data) - set(keys))
        if unknown:
            raise ConfigError(f"unknown sweep grid key(s): {', '.join(unknown)}",
                              field=f"{where}.{unknown[0]}")
        try:
            kwargs = {}
            for key, value in data.items():
                if key == "beta":
                    kwargs["betas"] = tuple(parse_beta(v) for v in value)
                else:
                    kwargs[keys[key]] = tuple(float(v) for v in value)
            return cls(**kwargs)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), field=where) from exc

    def as_dict(self) -> Dict[str, List[Any]]:
        return {
            "delta": list(self.deltas),
            "alpha": list(self.alphas),
            "kappa": list(self.kappas),
            "beta": ["inf" if math.isinf(b) else b for b in self.betas],
        }

    def combinations(self, beta: float) -> Iterator[EwaParams]:
        for delta, alpha, kappa in itertools.product(self.deltas, self.alphas, self.kappas):
            yield EwaParams(delta, alpha, kappa, beta, mode="Expected")

    def __len__(self) -> int:
        return len(self.deltas) * len(self.alphas) * len(self.kappas) * len(self.betas)


@dataclass
class SweepCell:
    """Aggregate over every (delta, alpha, kappa) and seed for one table and beta."""

    table: PayoffTable
    beta: float
    finals: np.ndarray
    threshold: float = DEFAULT_FP_THRESHOLD

    @property
    def beta_class(self) -> str:
        return beta_class(self.beta)

    @property
    def overreaction(self) -> np.ndarray:
        return self.finals[:, 0] * self.finals[:, 1]

    @property
    def mean(self) -> float:
        return float(np.mean(self.overreaction))

    @property
    def std(self) -> float:
        return float(np.std(self.overreaction))

    @property
    def n_runs(self) -> int:
        return len(self.finals)

    @property
    def n_pure(self) -> int:
        return int(np.sum(is_pure_fixed_point(self.finals[:, 0], self.finals[:, 1], self.threshold)))

    @property
    def n_above_half(self) -> int:
        return int(np.sum(self.overreaction > 0.5))


@dataclass
class SweepStats:
    """Per-cell statistics plus every final (p1, p2) for scatter plots."""

    cells: List[SweepCell] = field(default_factory=list)
    scatter: List[Tuple[Any, ...]] = field(default_factory=list)

    def cell(self, label: str, beta: float) -> SweepCell:
        for c in self.cells:
            if c.table.label == label and c.beta == beta:
                return c
        raise KeyError(f"no sweep cell for table {label!r} and beta {beta_class(beta)}")

    def stats_frame(self, meta: Mapping[str, Tuple[float, float]]) -> pd.DataFrame:
        """Table of mean/std per cell; ``meta`` maps scenario id to (t_game, r)."""
        rows = []
        for c in self.cells:
            l_plus_g, l_minus_g = stake_metrics(c.table)
            t_game, ramp = meta[c.table.scenario_id]
            rows.append(
                (c.table.mechanism, t_game, ramp, l_plus_g, l_minus_g, c.beta_class, c.mean, c.std)
            )
        return pd.DataFrame(rows, columns=list(SWEEP_HEADER))

    def fixed_point_frame(self, meta: Mapping[str, Tuple[float, float]]) -> pd.DataFrame:
        rows = []
        for c in self.cells:
            t_game, ramp = meta[c.table.scenario_id]
            rows.append(
                (
                    c.table.mechanism,
                    t_game,
                    ramp,
                    c.beta_class,
                    c.n_runs,
                    c.n_pure,
                    c.n_runs - c.n_pure,
                    c.n_above_half,
                )
            )
        return pd.DataFrame(rows, columns=list(FIXED_POINT_HEADER))

    def scatter_frame(self) -> pd.DataFrame:
        return pd.DataFrame(self.scatter, columns=list(SCATTER_HEADER))


def _sweep_task(task: Tuple[EwaParams, PayoffTable, int, Tuple[int, ...]]) -> np.ndarray:
    params, table, rounds, seeds = task
    final, _ = run_ewa_ensemble(params, table, rounds, seeds)
    return np.stack([final.probs[:, 0, 1], final.probs[:, 1, 1]], axis=-1)


def sweep(
    grid: SweepGrid,
    tables: Sequence[PayoffTable],
    n_seeds: int = 100,
    rounds: int = 100,
    root_seed: int = 0,
    threshold: float = DEFAULT_FP_THRESHOLD,
    jobs: int = 1,
) -> SweepStats:
    """
    Expected-mode learning for every table, beta and parameter combination.

    Run ``i`` of every combination starts from the attractions of
    ``derive_seed(root_seed, i)``; results are reduced in grid order so
    the outcome does not depend on ``jobs``.
    """
    if not tables:
        raise ValueError("sweep needs at least one payoff table")
    if n_seeds < 1:
        raise ValueError(f"n_seeds must be >= 1, got {n_seeds}")
    seeds = tuple(derive_seed(root_seed, i) for i in range(n_seeds))

    keys: List[Tuple[int, float, EwaParams]] = []
    for t_idx, _ in enumerate(tables):
        for beta in grid.betas:
            for params in grid.combinations(beta):
                keys.append((t_idx, beta, params))
    tasks = [(params, tables[t_idx], rounds, seeds) for t_idx, _, params in keys]
    logger.info(
        "EWA sweep: {} tables x {} parameter sets x {} seeds, {} rounds, jobs={}",
        len(tables),
        len(grid),
        n_seeds,
        rounds,
        jobs,
    )

    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_task, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))
    else:
        results = [_sweep_task(task) for task in tasks]

    stats = SweepStats()
    grouped: Dict[Tuple[int, float], List[np.ndarray]] = {}
    for (t_idx, beta, params), finals in zip(keys, results):
        grouped.setdefault((t_idx, beta), []).append(finals)
        table = tables[t_idx]
        for i, (p1, p2) in enumerate(finals):
            stats.scatter.append(
                (
                    table.mechanism,
                    table.scenario_id,
                    params.delta,
                    params.alpha,
                    params.kappa,
                    beta_class(beta),
                    i,
                    float(p1),
                    float(p2),
                )
            )
    for (t_idx, beta), chunks in grouped.items():
        cell = SweepCell(tables[t_idx], beta, np.concatenate(chunks), threshold)
        stats.cells.append(cell)
        logger.debug(
            "sweep {} beta={}: mean p1p2={:.4f} std={:.4f}",
            cell.table.label,
            cell.beta_class,
            cell.mean,
            cell.std,
        )
    return stats
