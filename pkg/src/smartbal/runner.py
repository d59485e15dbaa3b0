# runner.py
from __future__ import annotations

import math
from concurrent.futures import Future, ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import partial
from pathlib import Path
from typing import Any, Dict, List, Mapping, Tuple

from . import io_helpers as ioh
from . import templates
from .core.base import ConfigError, OutputFile, ScenarioFailure, SmartBalError, logger, sha256_of
from .core.ewa import (
    DEFAULT_FP_THRESHOLD,
    TRAJECTORY_SUMMARY_HEADER,
    EwaParams,
    EwaTrajectory,
    SweepGrid,
    SweepStats,
    derive_seed,
    rounds_for_games,
    run_ewa,
    sweep,
    trajectory_summary,
)
from .core.game import (
    PayoffTable,
    equilibrium_report,
    nash_points,
    normalization_factor,
    table_from_payoffs,
)
from .core.grid_model import GridParams, SimTrace, TraceFile, simulate
from .core.pricing import (
    DEFAULT_DUAL_TOL_MW,
    MECHANISMS,
    SETTLEMENT_HEADER,
    scenario_payoffs,
)
from .core.scenario import (
    ALL_PROFILES,
    ScenarioConfig,
    StrategyProfile,
    assemble_inputs,
    default_scenarios,
)

SCHEMA_VERSION = 1

PAYOFF_HEADER: Tuple[str, ...] = (
    "mechanism",
    "t_game_min",
    "r_pct_per_min",
    "g",
    "l",
    "g_over_gl",
)
PAYOFF_LONG_HEADER: Tuple[str, ...] = ("scenario", "mechanism", "g1", "g2", "l1", "l2")
NASH_HEADER: Tuple[str, ...] = ("mechanism", "scenario", "kind", "p1", "p2", "p1p2")

_TOP_LEVEL_KEYS = {
    "schema_version",
    "grid",
    "scenarios",
    "mechanisms",
    "ewa",
    "root_seed",
    "output_dir",
    "use_reference_tables",
    "reference_tables",
    "sim",
    "jobs",
}


def _reject_unknown(data: Mapping[str, Any], known: set, where: str) -> None:
    unknown = sorted(set(data) - known)
    if unknown:
        prefix = f"{where}." if where else ""
        raise ConfigError(
            f"unknown key(s): {', '.join(unknown)}",
            field=f"{prefix}{unknown[0]}",
        )


def _as_mapping(value: Any, where: str) -> Mapping[str, Any]:
    if not isinstance(value, Mapping):
        raise ConfigError("expected a JSON object", field=where)
    return value


@dataclass(frozen=True)
class SimSettings:
    dt_s: float = 1.0
    dual_tol_mw: float = DEFAULT_DUAL_TOL_MW
    fp_threshold: float = DEFAULT_FP_THRESHOLD

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "SimSettings":
        _reject_unknown(data, {"dt_s", "dual_tol_mw", "fp_threshold"}, "sim")
        try:
            settings = cls(**{k: float(v) for k, v in data.items()})
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), field="sim") from exc
        if not settings.dt_s > 0:
            raise ConfigError("dt_s must be > 0", field="sim.dt_s")
        if settings.dual_tol_mw < 0:
            raise ConfigError("dual_tol_mw must be >= 0", field="sim.dual_tol_mw")
        if not 0 < settings.fp_threshold < 0.5:
            raise ConfigError("fp_threshold must lie in (0, 0.5)", field="sim.fp_threshold")
        return settings


@dataclass(frozen=True)
class EwaSettings:
    """Sweep grid plus the settings of the single-trajectory runs."""

    grid: SweepGrid = field(default_factory=SweepGrid)
    n_seeds: int = 100
    rounds: int = 100
    trajectory_params: Tuple[float, float, float, float] = (0.25, 0.05, 1.0, 1.0)
    batch_size: int = 100
    games: int = 10_000

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "EwaSettings":
        known = {"grid", "n_seeds", "rounds", "trajectory_params", "batch_size", "games"}
        _reject_unknown(data, known, "ewa")
        kwargs: Dict[str, Any] = {}
        if "grid" in data:
            kwargs["grid"] = SweepGrid.from_dict(_as_mapping(data["grid"], "ewa.grid"))
        for key in ("n_seeds", "rounds", "batch_size", "games"):
            if key in data:
                value = data[key]
                if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                    raise ConfigError("must be an integer >= 1", field=f"ewa.{key}")
                kwargs[key] = value
        if "trajectory_params" in data:
            raw = data["trajectory_params"]
            if not isinstance(raw, (list, tuple)) or len(raw) != 4:
                raise ConfigError(
                    "expected [delta, alpha, kappa, beta]", field="ewa.trajectory_params"
                )
            kwargs["trajectory_params"] = tuple(raw)
        settings = cls(**kwargs)
        try:
            settings.trajectory()
            rounds_for_games(settings.games, settings.batch_size)
        except ValueError as exc:
            raise ConfigError(str(exc), field="ewa") from exc
        return settings

    def trajectory(self) -> EwaParams:
        delta, alpha, kappa, beta = self.trajectory_params
        return EwaParams(
            float(delta),
            float(alpha),
            float(kappa),
            beta,
            batch_size=self.batch_size,
            mode="BatchSample",
        )

    def as_dict(self) -> Dict[str, Any]:
        delta, alpha, kappa, beta = self.trajectory_params
        return {
            "grid": self.grid.as_dict(),
            "n_seeds": self.n_seeds,
            "rounds": self.rounds,
            "trajectory_params": [delta, alpha, kappa, beta],
            "batch_size": self.batch_size,
            "games": self.games,
        }


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one experiment needs; loaded from a JSON document."""

    grid: GridParams = field(default_factory=GridParams)
    grid_name: str | None = "default"
    scenarios: Tuple[ScenarioConfig, ...] = field(
        default_factory=lambda: tuple(default_scenarios())
    )
    mechanisms: Tuple[str, ...] = MECHANISMS
    ewa: EwaSettings = field(default_factory=EwaSettings)
    root_seed: int = 0
    output_dir: Path = Path("out")
    use_reference_tables: bool = False
    reference_tables: Tuple[templates.ReferenceRow, ...] | None = None
    sim: SimSettings = field(default_factory=SimSettings)
    jobs: int = 1

    def __post_init__(self) -> None:
        if not self.scenarios and not self.use_reference_tables:
            raise ConfigError("at least one scenario is required", field="scenarios")
        if not self.mechanisms:
            raise ConfigError("at least one mechanism is required", field="mechanisms")
        for mech in self.mechanisms:
            if mech not in MECHANISMS:
                raise ConfigError(
                    f"unknown mechanism {mech!r}; expected one of {MECHANISMS}",
                    field="mechanisms",
                )
        if len(set(self.mechanisms)) != len(self.mechanisms):
            raise ConfigError("mechanisms are listed twice", field="mechanisms")
        ids = [s.scenario_id for s in self.scenarios]
        if len(set(ids)) != len(ids):
            raise ConfigError("scenario ids are not unique", field="scenarios")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1", field="jobs")

    # ------------------------------------------------------------------
    # loading
    # ------------------------------------------------------------------
    @classmethod
    def from_file(cls, path: Path | str) -> "ExperimentConfig":
        path = Path(path)
        logger.info("Reading experiment config from {}.", path)
        return cls.from_json_text(path.read_text(encoding="utf-8"), source=str(path))

    @classmethod
    def from_json_text(cls, text: str, source: str = "<config>") -> "ExperimentConfig":
        return cls.from_dict(ioh.parse_json_text(text, source))

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ExperimentConfig":
        _reject_unknown(data, _TOP_LEVEL_KEYS, "")
        version = data.get("schema_version", SCHEMA_VERSION)
        if version != SCHEMA_VERSION:
            raise ConfigError(
                f"unsupported schema_version {version!r} (expected {SCHEMA_VERSION})",
                field="schema_version",
            )

        kwargs: Dict[str, Any] = {}
        grid = data.get("grid", "default")
        if isinstance(grid, str):
            try:
                kwargs["grid"] = templates.load_grid_profile(grid)
            except KeyError as exc:
                raise ConfigError(str(exc.args[0]), field="grid") from exc
            kwargs["grid_name"] = grid
        else:
            kwargs["grid"] = GridParams.from_dict(_as_mapping(grid, "grid"))
            kwargs["grid_name"] = None

        if "scenarios" in data:
            raw = data["scenarios"]
            if not isinstance(raw, list):
                raise ConfigError("expected a list of scenario objects", field="scenarios")
            kwargs["scenarios"] = tuple(
                ScenarioConfig.from_dict(_as_mapping(item, f"scenarios[{i}]"), f"scenarios[{i}]")
                for i, item in enumerate(raw)
            )
        if "mechanisms" in data:
            raw = data["mechanisms"]
            if not isinstance(raw, list):
                raise ConfigError("expected a list", field="mechanisms")
            kwargs["mechanisms"] = tuple(raw)
        if "ewa" in data:
            kwargs["ewa"] = EwaSettings.from_dict(_as_mapping(data["ewa"], "ewa"))
        if "sim" in data:
            kwargs["sim"] = SimSettings.from_dict(_as_mapping(data["sim"], "sim"))
        for key in ("root_seed", "jobs"):
            if key in data:
                value = data[key]
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ConfigError("must be an integer", field=key)
                kwargs[key] = value
        if "output_dir" in data:
            kwargs["output_dir"] = Path(str(data["output_dir"]))
        if "use_reference_tables" in data:
            if not isinstance(data["use_reference_tables"], bool):
                raise ConfigError("must be true or false", field="use_reference_tables")
            kwargs["use_reference_tables"] = data["use_reference_tables"]
        if data.get("reference_tables") is not None:
            kwargs["reference_tables"] = _reference_rows(data["reference_tables"])
        return cls(**kwargs)

    def with_overrides(
        self,
        output_dir: Path | str | None = None,
        root_seed: int | None = None,
        jobs: int | None = None,
    ) -> "ExperimentConfig":
        """Copy with CLI-level overrides applied."""
        changes: Dict[str, Any] = {}
        if output_dir is not None:
            changes["output_dir"] = Path(output_dir)
        if root_seed is not None:
            changes["root_seed"] = root_seed
        if jobs is not None:
            changes["jobs"] = jobs
        return replace(self, **changes)

    # ------------------------------------------------------------------
    # serialization
    # ------------------------------------------------------------------
    def as_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "schema_version": SCHEMA_VERSION,
            "grid": self.grid.as_dict(),
            "scenarios": [s.as_dict() for s in self.scenarios],
            "mechanisms": list(self.mechanisms),
            "ewa": self.ewa.as_dict(),
            "root_seed": self.root_seed,
            "output_dir": str(self.output_dir),
            "use_reference_tables": self.use_reference_tables,
            "sim": {
                "dt_s": self.sim.dt_s,
                "dual_tol_mw": self.sim.dual_tol_mw,
                "fp_threshold": self.sim.fp_threshold,
            },
            "jobs": self.jobs,
        }
        if self.reference_tables is not None:
            data["reference_tables"] = [row._asdict() for row in self.reference_tables]
        return data

    @property
    def config_hash(self) -> str:
        """SHA-256 of the settings that influence results."""
        data = self.as_dict()
        data.pop("output_dir")
        data.pop("jobs")
        return ioh.hash_mapping(data)


def _reference_rows(raw: Any) -> Tuple[templates.ReferenceRow, ...]:
    if not isinstance(raw, list) or not raw:
        raise ConfigError("expected a nonempty list of table rows", field="reference_tables")
    rows = []
    keys = {"mechanism", "t_game_min", "r_pct_per_min", "g", "l"}
    for i, item in enumerate(raw):
        where = f"reference_tables[{i}]"
        item = _as_mapping(item, where)
        _reject_unknown(item, keys | {"g_over_gl"}, where)
        missing = sorted(keys - set(item))
        if missing:
            raise ConfigError(f"missing key(s): {', '.join(missing)}", field=where)
        try:
            g, l = float(item["g"]), float(item["l"])
            rows.append(
                templates.ReferenceRow(
                    str(item["mechanism"]),
                    float(item["t_game_min"]),
                    float(item["r_pct_per_min"]),
                    g,
                    l,
                    float(item.get("g_over_gl", g / (g + l))),
                )
            )
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise ConfigError(str(exc), field=where) from exc
    return tuple(rows)


# ----------------------------------------------------------------------
# scenario runs
# ----------------------------------------------------------------------
def _simulate_profiles(
    task: Tuple[GridParams, ScenarioConfig, float],
) -> Dict[StrategyProfile, SimTrace]:
    grid, cfg, dt = task
    return {
        profile: simulate(grid, assemble_inputs(cfg, profile), cfg.horizon, dt)
        for profile in ALL_PROFILES
    }


@dataclass
class ScenarioRun:
    """Traces of all four strategy profiles of one scenario."""

    cfg: ScenarioConfig
    traces: Dict[StrategyProfile, SimTrace]

    @property
    def scenario_id(self) -> str:
        return self.cfg.scenario_id

    def settle(self, mechanism: str, tol: float) -> Tuple[PayoffTable, List[list]]:
        """Payoff table and settlement CSV rows under one mechanism."""
        payoffs = {}
        rows: List[list] = []
        for profile, trace in self.traces.items():
            reactions = assemble_inputs(self.cfg, profile)[1:]
            settled = scenario_payoffs(
                trace, reactions, mechanism, self.cfg.isp_minutes, tol
            )
            payoffs[profile] = settled.payoffs
            rows.extend(settled.rows(f"{self.scenario_id}_S{profile.label}"))
        return table_from_payoffs(payoffs, self.scenario_id, mechanism), rows


class Experiment:
    """
    End-to-end smart balancing study: simulate, settle, analyse, learn.

    Used as a context manager, the manifest of every written file is saved
    to the output directory on a clean exit.
    """

    def __init__(self, config: ExperimentConfig | None = None, auto_manifest: bool = True) -> None:
        self.config = config if config is not None else ExperimentConfig()
        self.auto_manifest = auto_manifest
        self._runs: List[ScenarioRun] | None = None
        self._raw_tables: List[PayoffTable] | None = None
        self._settlement_rows: List[list] = []
        self._meta: Dict[str, Tuple[float, float]] = {}
        self._written: List[Path] = []

    def __enter__(self) -> "Experiment":
        return self

    def __exit__(self, exc_type, exc, tb) -> bool:
        if exc_type is None and self.auto_manifest and self._written:
            self.write_manifest()
        elif exc_type is not None:
            logger.error("Exception in Experiment context: {}", exc)
        return False

    @property
    def out_dir(self) -> Path:
        return self.config.output_dir

    @property
    def written(self) -> List[Path]:
        return list(self._written)

    # ------------------------------------------------------------------
    # simulation and payoffs
    # ------------------------------------------------------------------
    def scenario_runs(self) -> List[ScenarioRun]:
        """Simulate every configured scenario under all strategy profiles."""
        if self._runs is not None:
            return self._runs
        cfg = self.config
        tasks = [(cfg.grid, scenario, cfg.sim.dt_s) for scenario in cfg.scenarios]
        runs: List[ScenarioRun] = []
        if cfg.jobs > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
                futures: List[Future] = [pool.submit(_simulate_profiles, t) for t in tasks]
                for scenario, fut in zip(cfg.scenarios, futures):
                    runs.append(ScenarioRun(scenario, self._collect(scenario, fut.result)))
        else:
            for scenario, task in zip(cfg.scenarios, tasks):
                runs.append(
                    ScenarioRun(scenario, self._collect(scenario, partial(_simulate_profiles, task)))
                )
        self._runs = runs
        return runs

    @staticmethod
    def _collect(scenario: ScenarioConfig, produce) -> Dict[StrategyProfile, SimTrace]:
        try:
            traces = produce()
        except Exception as exc:
            logger.error("Scenario {} failed: {}", scenario.scenario_id, exc)
            raise ScenarioFailure(scenario.scenario_id, exc) from exc
        logger.info("Simulated scenario {} ({} profiles).", scenario.scenario_id, len(traces))
        return traces

    def raw_tables(self) -> List[PayoffTable]:
        """Payoff tables before normalization, mechanism-major order."""
        if self._raw_tables is not None:
            return self._raw_tables
        if self.config.use_reference_tables:
            tables = self._reference_tables()
        else:
            tables = []
            runs = self.scenario_runs()
            for mechanism in self.config.mechanisms:
                for run in runs:
                    try:
                        table, rows = run.settle(mechanism, self.config.sim.dual_tol_mw)
                    except SmartBalError:
                        raise
                    except Exception as exc:
                        raise ScenarioFailure(f"{mechanism}_{run.scenario_id}", exc) from exc
                    tables.append(table)
                    self._settlement_rows.extend(rows)
                    self._meta[run.scenario_id] = (run.cfg.t_game, run.cfg.ramp_pct_per_min)
        self._raw_tables = tables
        return tables

    def _reference_tables(self) -> List[PayoffTable]:
        rows = self.config.reference_tables or tuple(templates.load_reference_tables())
        tables = []
        for row in rows:
            if row.mechanism not in self.config.mechanisms:
                continue
            sid = ScenarioConfig(t_game=row.t_game_min, ramp_pct_per_min=row.r_pct_per_min).scenario_id
            self._meta[sid] = (row.t_game_min, row.r_pct_per_min)
            tables.append(PayoffTable.symmetric(row.g, row.l, sid, row.mechanism))
        if not tables:
            raise ConfigError("no reference table matches the configured mechanisms",
                              field="mechanisms")
        logger.info("Using {} reference payoff tables.", len(tables))
        return tables

    @property
    def normalization(self) -> float:
        good = [t for t in self.raw_tables() if t.well_formed]
        if not good:
            raise SmartBalError("no well-formed payoff table to normalize")
        return normalization_factor(good)

    def tables(self) -> List[PayoffTable]:
        """All tables divided by the global max(g) + max(l) of the well-formed ones."""
        factor = self.normalization
        return [t.scaled(1.0 / factor) for t in self.raw_tables()]

    def games(self) -> List[PayoffTable]:
        """Normalized tables that are well-formed smart balancing games."""
        return [t for t in self.tables() if t.well_formed]

    def find_table(self, mechanism: str, scenario_id: str | None = None) -> PayoffTable:
        for table in self.games():
            if table.mechanism == mechanism and scenario_id in (None, table.scenario_id):
                return table
        raise SmartBalError(
            f"no well-formed payoff table for mechanism {mechanism!r}"
            + (f" and scenario {scenario_id!r}" if scenario_id else "")
        )

    # ------------------------------------------------------------------
    # learning
    # ------------------------------------------------------------------
    def trajectory(self, table: PayoffTable) -> EwaTrajectory:
        ewa = self.config.ewa
        rounds = rounds_for_games(ewa.games, ewa.batch_size)
        return run_ewa(ewa.trajectory(), table, rounds, derive_seed(self.config.root_seed, 0))

    def run_sweep(self) -> SweepStats:
        ewa = self.config.ewa
        return sweep(
            ewa.grid,
            self.games(),
            n_seeds=ewa.n_seeds,
            rounds=ewa.rounds,
            root_seed=self.config.root_seed,
            threshold=self.config.sim.fp_threshold,
            jobs=self.config.jobs,
        )

    # ------------------------------------------------------------------
    # emission
    # ------------------------------------------------------------------
    def _emit(self, artifact: OutputFile, relative: str) -> Path:
        path = artifact.save(self.out_dir / relative)
        self._written.append(path)
        return path

    def write_trace(self, scenario: ScenarioConfig, profile: StrategyProfile) -> Path:
        trace = simulate(
            self.config.grid, assemble_inputs(scenario, profile), scenario.horizon,
            self.config.sim.dt_s,
        )
        name = f"traces/{scenario.scenario_id}_S{profile.label}.csv"
        return self._emit(TraceFile(trace), name)

    def write_traces(self) -> List[Path]:
        paths = []
        for run in self.scenario_runs():
            for profile, trace in run.traces.items():
                name = f"traces/{run.scenario_id}_S{profile.label}.csv"
                paths.append(self._emit(TraceFile(trace), name))
        return paths

    def write_payoffs(self) -> List[Path]:
        tables = self.tables()
        paths = []
        if self._settlement_rows:
            paths.append(
                self._emit(
                    ioh.CsvFile("settlements.csv", SETTLEMENT_HEADER, self._settlement_rows),
                    "settlements.csv",
                )
            )
        symmetric = ioh.CsvFile("payoff_tables.csv", PAYOFF_HEADER)
        long_form = ioh.CsvFile("payoff_tables_long.csv", PAYOFF_LONG_HEADER)
        for t in tables:
            long_form.append([t.scenario_id, t.mechanism, t.g1, t.g2, t.l1, t.l2])
            if t.is_symmetric:
                t_game, ramp = self._meta[t.scenario_id]
                ratio = t.g1 / (t.g1 + t.l1) if (t.g1 + t.l1) != 0 else math.nan
                symmetric.append([t.mechanism, t_game, ramp, t.g1, t.l1, ratio])
        paths.append(self._emit(symmetric, "payoff_tables.csv"))
        paths.append(self._emit(long_form, "payoff_tables_long.csv"))
        return paths

    def write_equilibria(self) -> List[Path]:
        tables = self.tables()
        reports = []
        points = ioh.CsvFile("nash_points.csv", NASH_HEADER)
        for table in tables:
            if not table.well_formed:
                report = table.as_dict()
                report["note"] = "not a smart balancing game; not analysed"
                reports.append(report)
                continue
            reports.append(equilibrium_report(table))
            for kind, p1, p2 in nash_points(table):
                points.append([table.mechanism, table.scenario_id, kind, p1, p2, p1 * p2])
        content = {"normalization_factor": self.normalization, "tables": reports}
        return [
            self._emit(ioh.JsonFile("equilibria.json", content), "equilibria.json"),
            self._emit(points, "nash_points.csv"),
        ]

    def write_trajectory(self, table: PayoffTable, relative: str = "trajectory.csv") -> List[Path]:
        traj = self.trajectory(table)
        summary = ioh.CsvFile("trajectory_summary.csv", TRAJECTORY_SUMMARY_HEADER)
        row = trajectory_summary(traj, table, self.config.sim.fp_threshold)
        summary.append([row[c] for c in TRAJECTORY_SUMMARY_HEADER])
        return [
            self._emit(ioh.FrameFile(relative, traj.to_frame()), relative),
            self._emit(summary, "trajectory_summary.csv"),
        ]

    def write_trajectories(self) -> List[Path]:
        summary = ioh.CsvFile("trajectory_summary.csv", TRAJECTORY_SUMMARY_HEADER)
        paths = []
        for table in self.games():
            traj = self.trajectory(table)
            relative = f"trajectories/{table.label}.csv"
            paths.append(self._emit(ioh.FrameFile(relative, traj.to_frame()), relative))
            row = trajectory_summary(traj, table, self.config.sim.fp_threshold)
            summary.append([row[c] for c in TRAJECTORY_SUMMARY_HEADER])
        paths.append(self._emit(summary, "trajectory_summary.csv"))
        return paths

    def write_sweep(self) -> List[Path]:
        stats = self.run_sweep()
        frames = {
            "sweep.csv": stats.stats_frame(self._meta),
            "sweep_fixed_points.csv": stats.fixed_point_frame(self._meta),
            "sweep_scatter.csv": stats.scatter_frame(),
        }
        return [self._emit(ioh.FrameFile(name, frame), name) for name, frame in frames.items()]

    def manifest(self) -> Dict[str, Any]:
        files = []
        for path in sorted(set(self._written)):
            files.append(
                {"path": path.relative_to(self.out_dir).as_posix(), "sha256": sha256_of(path)}
            )
        return {
            "config_hash": self.config.config_hash,
            "root_seed": self.config.root_seed,
            "files": files,
        }

    def write_manifest(self) -> Path:
        content = self.manifest()
        path = ioh.JsonFile("manifest.json", content).save(self.out_dir / "manifest.json")
        logger.info("Manifest lists {} files.", len(content["files"]))
        return path

    def run(self) -> Dict[str, Any]:
        """Emit every artifact of the full pipeline."""
        if not self.config.use_reference_tables:
            self.write_traces()
        self.write_payoffs()
        self.write_equilibria()
        self.write_trajectories()
        self.write_sweep()
        return self.manifest()


def run_experiment(config: ExperimentConfig) -> Dict[str, Any]:
    """Run the full pipeline and return the manifest written with it."""
    with Experiment(config, auto_manifest=True) as exp:
        exp.run()
    return exp.manifest()

