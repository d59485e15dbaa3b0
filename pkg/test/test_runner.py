import json
from pathlib import Path

import pandas as pd
import pytest

from smartbal.core.base import ConfigError, ScenarioFailure, SmartBalError
from smartbal.runner import (
    Experiment,
    ExperimentConfig,
    run_experiment,
)

SMALL_EWA = {
    "n_seeds": 3,
    "rounds": 5,
    "games": 500,
    "grid": {"delta": [0.25], "alpha": [0.05], "kappa": [1.0], "beta": [1, "inf"]},
}


def small_config(out_dir: Path, **extra) -> ExperimentConfig:
    data = {
        "scenarios": [
            {"t_game": 1, "ramp_pct_per_min": 400},
            {"t_game": 10, "ramp_pct_per_min": 20},
        ],
        "ewa": SMALL_EWA,
        "output_dir": str(out_dir),
    }
    data.update(extra)
    return ExperimentConfig.from_dict(data)


def reference_config(out_dir: Path) -> ExperimentConfig:
    return ExperimentConfig.from_dict(
        {"use_reference_tables": True, "scenarios": [], "ewa": SMALL_EWA, "output_dir": str(out_dir)}
    )


# ---- configuration ---------------------------------------------------------


def test_default_config() -> None:
    config = ExperimentConfig()
    assert len(config.scenarios) == 6
    assert config.mechanisms == ("DE", "NL")
    assert config.grid_name == "default"
    assert config.ewa.n_seeds == 100
    assert config.ewa.rounds == 100
    assert ExperimentConfig.from_dict({}).config_hash == config.config_hash


def test_config_syntax_error_has_position() -> None:
    text = '{\n  "root_seed": 1,\n  "jobs": \n}'
    with pytest.raises(ConfigError) as info:
        ExperimentConfig.from_json_text(text)
    assert info.value.line == 4
    assert info.value.column is not None


@pytest.mark.parametrize(
    "data, field",
    [
        ({"seed": 1}, "seed"),
        ({"ewa": {"n_seed": 3}}, "ewa.n_seed"),
        ({"sim": {"dt": 1.0}}, "sim.dt"),
        ({"scenarios": [{"t_game": 1, "rmp": 5}]}, "scenarios[0].rmp"),
        ({"scenarios": []}, "scenarios"),
        ({"schema_version": 2}, "schema_version"),
        ({"grid": "nope"}, "grid"),
        ({"mechanisms": ["DE", "FR"]}, "mechanisms"),
        ({"jobs": 0}, "jobs"),
        ({"ewa": {"n_seeds": 0}}, "ewa.n_seeds"),
        ({"sim": {"fp_threshold": 0.7}}, "sim.fp_threshold"),
    ],
)
def test_config_errors_name_the_field(data: dict, field: str) -> None:
    with pytest.raises(ConfigError) as info:
        ExperimentConfig.from_dict(data)
    assert info.value.field == field


def test_duplicate_scenarios_are_rejected() -> None:
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"scenarios": [{"t_game": 1}, {"t_game": 1}]})


def test_inline_and_named_grids() -> None:
    config = ExperimentConfig.from_dict({"grid": {"t_inertia": 8}})
    assert config.grid_name is None
    assert config.grid.t_inertia == 8.0

    fast = ExperimentConfig.from_dict({"grid": "fast_activation"})
    assert fast.grid.t_afrr_act == 30.0
    assert fast.config_hash != ExperimentConfig().config_hash


def test_config_hash_ignores_output_and_workers(tmp_path: Path) -> None:
    config = small_config(tmp_path)
    moved = config.with_overrides(output_dir=tmp_path / "elsewhere", jobs=4)
    assert moved.config_hash == config.config_hash
    assert config.with_overrides(root_seed=5).config_hash != config.config_hash


def test_config_from_file(tmp_path: Path) -> None:
    path = tmp_path / "config.json"
    path.write_text(json.dumps({"root_seed": 9, "mechanisms": ["NL"]}))
    config = ExperimentConfig.from_file(path)
    assert config.root_seed == 9
    assert config.mechanisms == ("NL",)


def test_inline_reference_tables(tmp_path: Path) -> None:
    config = ExperimentConfig.from_dict(
        {
            "use_reference_tables": True,
            "reference_tables": [
                {"mechanism": "DE", "t_game_min": 1, "r_pct_per_min": 400, "g": 2.0, "l": 3.0}
            ],
            "output_dir": str(tmp_path),
        }
    )
    (table,) = Experiment(config).tables()
    assert table.g1 == pytest.approx(0.4)
    assert table.l1 == pytest.approx(0.6)
    assert table.scenario_id == "T1_r400"


# ---- experiments -----------------------------------------------------------


def test_simulated_tables_are_normalized_together(tmp_path: Path) -> None:
    exp = Experiment(small_config(tmp_path))
    tables = exp.tables()
    assert [t.label for t in tables] == ["DE_T1_r400", "DE_T10_r20", "NL_T1_r400", "NL_T10_r20"]
    assert all(t.well_formed for t in tables)
    max_g = max(t.g1 for t in tables)
    max_l = max(t.l1 for t in tables)
    assert max_g + max_l == pytest.approx(1.0, abs=1e-12)


def test_scenario_failure_names_the_scenario(tmp_path: Path) -> None:
    config = small_config(tmp_path, sim={"dt_s": 5.0})
    with pytest.raises(ScenarioFailure) as info:
        Experiment(config).raw_tables()
    assert info.value.scenario_id == "T1_r400"


def test_find_table(tmp_path: Path) -> None:
    exp = Experiment(reference_config(tmp_path))
    assert exp.find_table("NL", "T10_r20").g1 == pytest.approx(0.45)
    assert exp.find_table("DE").scenario_id == "T1_r400"
    with pytest.raises(SmartBalError):
        exp.find_table("DE", "T3_r1")


def test_reference_tables_pipeline(tmp_path: Path) -> None:
    """
    Reference tables run straight into equilibria and learning: one sweep
    row per table and beta class, no simulation output.
    """
    manifest = run_experiment(reference_config(tmp_path))

    sweep = pd.read_csv(tmp_path / "sweep.csv", dtype={"beta_class": str})
    assert len(sweep) == 24, "expected 12 tables x 2 beta classes"
    assert set(sweep["beta_class"]) == {"1", "inf"}

    payoffs = pd.read_csv(tmp_path / "payoff_tables.csv")
    assert len(payoffs) == 12
    assert payoffs["g"].max() + payoffs["l"].max() == pytest.approx(1.0)

    assert not (tmp_path / "traces").exists()
    assert not (tmp_path / "settlements.csv").exists()
    assert (tmp_path / "manifest.json").exists()
    assert len(manifest["files"]) > 0


def test_full_pipeline_outputs(tmp_path: Path) -> None:
    run_experiment(small_config(tmp_path))

    traces = sorted(p.name for p in (tmp_path / "traces").iterdir())
    assert len(traces) == 2 * 4
    assert "T1_r400_S11.csv" in traces

    settlements = pd.read_csv(tmp_path / "settlements.csv")
    assert len(settlements) == 2 * 2 * 4 * 2
    assert set(settlements["isp"]) == {1, 2}

    long_form = pd.read_csv(tmp_path / "payoff_tables_long.csv")
    assert len(long_form) == 4

    equilibria = json.loads((tmp_path / "equilibria.json").read_text())
    assert equilibria["normalization_factor"] > 0
    assert len(equilibria["tables"]) == 4
    assert all(len(t["pure_nash"]) == 2 for t in equilibria["tables"])

    points = pd.read_csv(tmp_path / "nash_points.csv")
    assert len(points) == 4 * 3

    summary = pd.read_csv(tmp_path / "trajectory_summary.csv")
    assert len(summary) == 4
    trajectory = pd.read_csv(tmp_path / "trajectories" / "DE_T1_r400.csv")
    assert list(trajectory.columns) == ["k", "p1", "p2", "p1p2", "n"]
    assert len(trajectory) == 500 // 100 + 1

    scatter = pd.read_csv(tmp_path / "sweep_scatter.csv")
    assert len(scatter) == 4 * 2 * 3


def test_manifest_lists_every_file(tmp_path: Path) -> None:
    manifest = run_experiment(small_config(tmp_path))
    listed = {entry["path"] for entry in manifest["files"]}
    on_disk = {
        p.relative_to(tmp_path).as_posix()
        for p in tmp_path.rglob("*")
        if p.is_file() and p.name != "manifest.json"
    }
    assert listed == on_disk
    saved = json.loads((tmp_path / "manifest.json").read_text())
    assert saved == manifest


def test_runs_are_reproducible(tmp_path: Path) -> None:
    """Same config and root seed give byte-identical files, whatever the worker count."""
    first = run_experiment(small_config(tmp_path / "a"))
    second = run_experiment(small_config(tmp_path / "b"))
    parallel = run_experiment(small_config(tmp_path / "c", jobs=2))

    assert first == second
    assert first == parallel


def test_root_seed_changes_the_trajectories(tmp_path: Path) -> None:
    first = run_experiment(reference_config(tmp_path / "a"))
    other = reference_config(tmp_path / "b").with_overrides(root_seed=1)
    second = run_experiment(other)

    hashes_1 = {e["path"]: e["sha256"] for e in first["files"]}
    hashes_2 = {e["path"]: e["sha256"] for e in second["files"]}
    assert hashes_1["payoff_tables.csv"] == hashes_2["payoff_tables.csv"]
    assert hashes_1["sweep_scatter.csv"] != hashes_2["sweep_scatter.csv"]


def test_context_manager_writes_manifest(tmp_path: Path) -> None:
    """
    Leaving the context after writing something saves manifest.json;
    leaving it without output does not.
    """
    # 1. Write one artifact inside the context
    with Experiment(reference_config(tmp_path / "used")) as exp:
        exp.write_payoffs()

    # 2. Enter and leave without writing
    with Experiment(reference_config(tmp_path / "idle")):
        pass

    # 3. Verify
    assert (tmp_path / "used" / "manifest.json").exists(), "manifest.json was not created"
    assert not (tmp_path / "idle").exists(), "an idle experiment wrote files"


def test_single_trajectory(tmp_path: Path) -> None:
    with Experiment(reference_config(tmp_path)) as exp:
        paths = exp.write_trajectory(exp.find_table("DE", "T10_r20"))

    assert [p.name for p in paths] == ["trajectory.csv", "trajectory_summary.csv"]
    frame = pd.read_csv(tmp_path / "trajectory.csv")
    assert len(frame) == 6
    assert frame["n"].iloc[-1] == pytest.approx(1.0)


@pytest.mark.parametrize("name", ["reference_tables.json", "simulated.json"])
def test_shipped_configs_parse(name: str) -> None:
    path = Path(__file__).resolve().parent.parent / "configs" / name
    config = ExperimentConfig.from_file(path)
    assert config.mechanisms == ("DE", "NL")
    assert config.ewa.n_seeds == 100
