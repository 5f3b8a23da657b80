import json

import pytest

import cli
from core.config_manager import ENV_OUTPUT_DIR, ENV_WORKERS


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    monkeypatch.delenv(ENV_WORKERS, raising=False)
    monkeypatch.delenv(ENV_OUTPUT_DIR, raising=False)


def test_parse_int_range():
    assert cli.parse_int_range("2..5") == [2, 3, 4, 5]
    assert cli.parse_int_range("2,4, 8") == [2, 4, 8]
    assert cli.parse_int_range("5") == [5]
    with pytest.raises(ValueError):
        cli.parse_int_range("5..2")


def test_parse_tf_list():
    assert cli.parse_tf_list("1,2.5") == [1.0, 2.5]
    grid = cli.parse_tf_list("1..2", ratio=1.5)
    assert grid[0] == 1.0 and grid[-1] == pytest.approx(2.0)
    assert cli.parse_backends("exact, wkb0,,") == ["exact", "wkb0"]


def test_overrides_drop_unset_flags():
    args = cli.build_parser().parse_args(["sweep", "--n", "3", "--backend", "exact,wkb1", "--tf", "1,2"])
    overrides = cli.overrides_from_args(args)
    assert overrides == {"n": 3, "backends": ["exact", "wkb1"], "t_f_list": [1.0, 2.0]}

    args = cli.build_parser().parse_args(["scaling", "--n", "3..5", "--horizon", "4"])
    assert cli.overrides_from_args(args) == {"ns": [3, 4, 5], "horizon_factor": 4.0}


def _dynamics_args(out):
    return ["dynamics", "--n", "1", "--alpha", "0", "--tf", "5", "--backends", "exact,wkb0",
            "--grid-points", "11", "--output-dir", str(out)]


def test_dynamics_writes_csv_and_json(tmp_path):
    assert cli.main(_dynamics_args(tmp_path)) == cli.EXIT_OK
    lines = (tmp_path / "dynamics_n1_a0_tf5.csv").read_text().splitlines()
    assert lines[0] == "r,s,backend,psi_re,psi_im,phi_re,phi_im,pop_marked,norm,trace_dist_vs_exact"
    assert len(lines) == 1 + 2 * 11
    result = json.loads((tmp_path / "dynamics_n1_a0_tf5.json").read_text())
    assert result["command"] == "dynamics"
    assert result["config"]["t_f"] == 5.0
    assert result["metadata"]["wall_time"] is None
    assert result["metadata"]["grids"]["grid_points"] == 11


def test_reruns_are_byte_identical(tmp_path):
    assert cli.main(_dynamics_args(tmp_path)) == cli.EXIT_OK
    first = (tmp_path / "dynamics_n1_a0_tf5.json").read_bytes()
    assert cli.main(_dynamics_args(tmp_path)) == cli.EXIT_OK
    assert (tmp_path / "dynamics_n1_a0_tf5.json").read_bytes() == first


def test_wall_time_is_opt_in(tmp_path):
    assert cli.main(_dynamics_args(tmp_path) + ["--record-wall-time"]) == cli.EXIT_OK
    result = json.loads((tmp_path / "dynamics_n1_a0_tf5.json").read_text())
    assert result["metadata"]["wall_time"] >= 0.0


def test_compare_writes_summary(tmp_path):
    args = ["compare", "--tf", "5", "--backends", "exact,wkb1", "--grid-points", "21", "--output-dir", str(tmp_path)]
    assert cli.main(args) == cli.EXIT_OK
    result = json.loads((tmp_path / "compare_n1_a0_tf5.json").read_text())
    assert result["summary"]["avg_distance"]["exact"] == 0.0
    assert result["summary"]["avg_distance"]["wkb1"] > 0.0


@pytest.mark.parametrize("argv", [
    ["dynamics", "--backends", ""],
    ["dynamics", "--backends", "exact,qutip"],
    ["compare", "--backends", "wkb0,wkb1"],
    ["sweep"],
    ["scaling", "--n", "9..2"],
    ["threshold", "--p-th", "1.5"],
])
def test_invalid_configuration_exit_code(argv, tmp_path):
    assert cli.main(argv + ["--output-dir", str(tmp_path)]) == cli.EXIT_CONFIG
    assert list(tmp_path.iterdir()) == []


def test_unknown_config_section(tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"serve": {"port": 8000}}))
    assert cli.main(["dynamics", "--config", str(config), "--output-dir", str(tmp_path / "out")]) == cli.EXIT_CONFIG


def test_config_file_section(tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"sweep": {"n": 2, "alpha": 1, "backends": ["exact"], "t_f_list": [1.0, 3.0]}}))
    assert cli.main(["sweep", "--config", str(config), "--output-dir", str(tmp_path)]) == cli.EXIT_OK
    result = json.loads((tmp_path / "sweep_n2_a1.json").read_text())
    assert [row["t_f"] for row in result["rows"]] == [1.0, 3.0]
    assert all(row["status"] == "ok" for row in result["rows"])


def test_threshold_at_scan_floor(tmp_path):
    args = ["threshold", "--n", "4", "--alpha", "2", "--backend", "adiabatic", "--output-dir", str(tmp_path)]
    assert cli.main(args) == cli.EXIT_OK
    result = json.loads((tmp_path / "threshold_n4_a2_adiabatic.json").read_text())
    assert result["rows"][0]["status"] == "at_scan_floor"


def test_threshold_not_reached_is_a_solver_failure(tmp_path):
    args = ["threshold", "--n", "8", "--backend", "exact", "--t-max", "1", "--output-dir", str(tmp_path)]
    assert cli.main(args) == cli.EXIT_SOLVER


def test_asymptote_study(tmp_path):
    args = ["distance", "--study", "asymptote", "--tf", "10,20", "--output-dir", str(tmp_path)]
    assert cli.main(args) == cli.EXIT_OK
    lines = (tmp_path / "asymptote_exact.csv").read_text().splitlines()
    assert lines[0] == "t_f,excited_population,leading_term,scaled,difference"
    assert len(lines) == 3


def test_sweep_output_independent_of_worker_count(tmp_path):
    outputs = {}
    for workers in (1, 3):
        out = tmp_path / f"w{workers}"
        args = ["sweep", "--n", "2", "--alpha", "1", "--backend", "exact,wkb1", "--tf", "2,5,10,20",
                "--workers", str(workers), "--output-dir", str(out)]
        assert cli.main(args) == cli.EXIT_OK
        result = json.loads((out / "sweep_n2_a1.json").read_text())
        assert result["config"].pop("workers") == workers
        result["config"].pop("output_dir")
        outputs[workers] = ((out / "sweep_n2_a1.csv").read_bytes(), result)
    assert outputs[1] == outputs[3]
