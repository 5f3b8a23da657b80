"""
Command-line front end: dynamics, sweeps, thresholds, scaling fits, comparisons
and distance studies. Every command writes a JSON result with full provenance
and a CSV mirror for plotting.

Exit codes: 0 success, 2 invalid configuration, 3 solver failure.
"""
import argparse
import asyncio
import logging
import os
import sys
import time
from typing import Any, Dict, List, Optional, Sequence

from dotenv import load_dotenv
from pydantic import ValidationError

from core import experiments
from core.config_manager import ENV_LOG_LEVEL, ConfigError, RunConfig, RunConfigManager
from core.exact import default_grid
from core.experiments import NotReached
from core.exporter import ResultExporter, build_envelope
from core.metrics import GridMismatch
from core.models import BackendType, DistanceRow, PgsRow, ThresholdResult
from core.numerics import DegenerateInput, NonConvergence, StepFailure
from core.traffic_controller import SweepCell, SweepCellError, SweepController
from core.wkb import SingularSystem
from providers import BackendRegistry

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3

SOLVER_FAILURES = (SweepCellError, NotReached, StepFailure, NonConvergence, SingularSystem,
                   GridMismatch, DegenerateInput)

DYNAMICS_HEADER = ["r", "s", "backend", "psi_re", "psi_im", "phi_re", "phi_im",
                   "pop_marked", "norm", "trace_dist_vs_exact"]
PGS_HEADER = ["n", "alpha", "backend", "t_f", "p_gs", "norm", "status", "error"]
THRESHOLD_HEADER = ["n", "alpha", "backend", "p_th", "t_f_th", "horizon_factor", "status", "evaluations"]
DISTANCE_HEADER = ["n", "alpha", "backend", "t_f", "avg_distance", "min_norm", "status", "error"]
ASYMPTOTE_HEADER = ["t_f", "excited_population", "leading_term", "scaled", "difference"]
RENORMALIZATION_HEADER = ["n", "alpha", "t_f", "avg_distance_wkb0", "avg_distance_rwkb0", "gain"]


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def parse_int_range(text: str) -> List[int]:
    """'2..10', '2,4,8' or '5'."""
    text = text.strip()
    if ".." in text:
        lo, hi = (int(x) for x in text.split("..", 1))
        if hi < lo:
            raise ValueError(f"Empty range {text!r}")
        return list(range(lo, hi + 1))
    return [int(x) for x in text.split(",") if x.strip()]


def parse_tf_list(text: str, ratio: float = 1.05) -> List[float]:
    """'1..200' expands geometrically with the given ratio; otherwise a comma list."""
    text = text.strip()
    if ".." in text:
        lo, hi = (float(x) for x in text.split("..", 1))
        return experiments.geometric_grid(lo, hi, ratio)
    return [float(x) for x in text.split(",") if x.strip()]


def parse_backends(text: str) -> List[str]:
    return [b.strip() for b in text.split(",") if b.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cli.py", description="Quasi-adiabatic WKB toolkit for the Grover two-level problem")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file with per-command sections")
    common.add_argument("--output-dir", dest="output_dir")
    common.add_argument("--workers", type=int)
    common.add_argument("--record-wall-time", dest="record_wall_time", action="store_true", default=None)
    common.add_argument("--convention", choices=["unit", "closed_form"])
    common.add_argument("--log-level", dest="log_level")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dynamics", parents=[common], help="Sampled trajectories for several backends")
    p.add_argument("--n", type=int)
    p.add_argument("--alpha", type=int)
    p.add_argument("--tf", dest="t_f", type=float)
    p.add_argument("--backends")
    p.add_argument("--grid-points", dest="grid_points", type=int)

    p = sub.add_parser("compare", parents=[common], help="Trajectories with averaged distances to the exact solution")
    p.add_argument("--n", type=int)
    p.add_argument("--alpha", type=int)
    p.add_argument("--tf", dest="t_f", type=float)
    p.add_argument("--backends")
    p.add_argument("--grid-points", dest="grid_points", type=int)

    p = sub.add_parser("sweep", parents=[common], help="Final marked population versus t_f")
    p.add_argument("--n", type=int)
    p.add_argument("--alpha", type=int)
    p.add_argument("--backend", "--backends", dest="backends")
    p.add_argument("--tf", dest="t_f_list")
    p.add_argument("--tf-ratio", dest="tf_ratio", type=float, default=1.05)

    p = sub.add_parser("threshold", parents=[common], help="Threshold time for one (n, alpha, backend)")
    p.add_argument("--n", type=int)
    p.add_argument("--alpha", type=int)
    p.add_argument("--backend")
    p.add_argument("--p-th", dest="p_th", type=float)
    _add_scan_flags(p)

    p = sub.add_parser("scaling", parents=[common], help="Threshold-time scaling exponent over n")
    p.add_argument("--alpha", type=int)
    p.add_argument("--backend")
    p.add_argument("--n", dest="ns")
    p.add_argument("--p-th", dest="p_th", type=float)
    _add_scan_flags(p)

    p = sub.add_parser("distance", parents=[common], help="Time-averaged distances, asymptote and renormalization studies")
    p.add_argument("--n", type=int)
    p.add_argument("--alpha", type=int)
    p.add_argument("--backends")
    p.add_argument("--tf", dest="t_f_list")
    p.add_argument("--tf-ratio", dest="tf_ratio", type=float, default=1.05)
    p.add_argument("--grid-points", dest="grid_points", type=int)
    p.add_argument("--study", choices=["distance", "asymptote", "renormalization"])
    return parser


def _add_scan_flags(p: argparse.ArgumentParser):
    p.add_argument("--t-min", dest="t_min", type=float)
    p.add_argument("--t-max", dest="t_max", type=float)
    p.add_argument("--ratio", type=float)
    p.add_argument("--horizon", dest="horizon_factor", type=float)
    p.add_argument("--t-verify-min", dest="t_verify_min", type=float)


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    """Translate parsed flags into config overrides; unset flags are dropped."""
    raw = dict(vars(args))
    for key in ("command", "config", "log_level", "tf_ratio"):
        raw.pop(key, None)
    if raw.get("backends") is not None:
        raw["backends"] = parse_backends(raw["backends"])
    if raw.get("t_f_list") is not None:
        raw["t_f_list"] = parse_tf_list(raw["t_f_list"], getattr(args, "tf_ratio", 1.05))
    if raw.get("ns") is not None:
        raw["ns"] = parse_int_range(raw["ns"])
    return {k: v for k, v in raw.items() if v is not None}


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _grids(config: RunConfig) -> Dict[str, Any]:
    grids: Dict[str, Any] = {}
    for key in ("grid_points", "t_f_list", "ns", "t_f"):
        if hasattr(config, key):
            grids[key] = getattr(config, key)
    return grids


async def cmd_dynamics(config, controller: SweepController, compare: bool = False) -> Dict[str, Any]:
    backends = [b.value for b in config.backends]
    cells = [
        SweepCell(key=(i, name), func=experiments.trajectory_cell,
                  args=(config.n, config.alpha, config.t_f, name, config.grid_points, config.backend_config()))
        for i, name in enumerate(backends)
    ]
    results = await controller.run_cells(cells)
    trajectories = {key[1]: traj for key, traj in results}
    schedule = experiments.make_schedule(config.n, config.alpha)
    rows = experiments.dynamics_rows(trajectories, schedule)
    extra = None
    if compare:
        extra = {"summary": experiments.summarize_trajectories(trajectories, schedule, config.t_f)}
    return {"rows": rows, "header": DYNAMICS_HEADER, "extra": extra,
            "stem": f"{'compare' if compare else 'dynamics'}_n{config.n}_a{config.alpha}_tf{config.t_f:g}"}


async def cmd_sweep(config, controller: SweepController) -> Dict[str, Any]:
    cells = [
        SweepCell(key=(b.value, t_f), func=experiments.pgs_cell,
                  args=(config.n, config.alpha, b.value, t_f, config.backend_config()))
        for b in config.backends for t_f in config.t_f_list
    ]
    rows: List[PgsRow] = [row for _, row in await controller.run_cells(cells)]
    return {"rows": rows, "header": PGS_HEADER, "extra": None,
            "stem": f"sweep_n{config.n}_a{config.alpha}"}


async def cmd_threshold(config, controller: SweepController) -> Dict[str, Any]:
    cell = SweepCell(key=(config.n,), func=experiments.threshold_cell,
                     args=(config.n, config.alpha, config.backend.value, config.p_th,
                           config.to_scan(), config.backend_config()))
    [(_, result)] = await controller.run_cells([cell])
    return {"rows": [result], "header": THRESHOLD_HEADER, "extra": None,
            "stem": f"threshold_n{config.n}_a{config.alpha}_{config.backend.value}"}


async def cmd_scaling(config, controller: SweepController) -> Dict[str, Any]:
    cells = [
        SweepCell(key=(n,), func=experiments.threshold_cell,
                  args=(n, config.alpha, config.backend.value, config.p_th,
                        config.to_scan(), config.backend_config()))
        for n in config.ns
    ]
    thresholds: List[ThresholdResult] = [r for _, r in await controller.run_cells(cells)]
    result = experiments.scaling_from_thresholds(config.alpha, config.backend.value, config.p_th, thresholds)
    return {"rows": thresholds, "header": THRESHOLD_HEADER, "fit": result.fit,
            "extra": {"scaling": result},
            "stem": f"scaling_a{config.alpha}_{config.backend.value}"}


async def cmd_distance(config, controller: SweepController) -> Dict[str, Any]:
    if config.study == "asymptote":
        # n = 1, alpha = 0 only; the exact backend unless one was asked for
        backend = config.backends[0].value if "backends" in config.model_fields_set else BackendType.EXACT.value
        rows = experiments.asymptote_table(config.t_f_list, backend, config.backend_config())
        return {"rows": rows, "header": ASYMPTOTE_HEADER, "extra": None,
                "stem": f"asymptote_{backend}"}
    if config.study == "renormalization":
        cells = [
            SweepCell(key=(t_f,), func=experiments.renormalization_gain,
                      args=(config.n, t_f, (0, 1, 2, 3), default_grid(config.grid_points), config.backend_config()))
            for t_f in config.t_f_list
        ]
        rows = [row for _, chunk in await controller.run_cells(cells) for row in chunk]
        return {"rows": rows, "header": RENORMALIZATION_HEADER, "extra": None,
                "stem": f"renormalization_n{config.n}"}
    backends = [b.value for b in config.backends]
    cells = [
        SweepCell(key=(t_f,), func=experiments.distance_cell,
                  args=(config.n, config.alpha, backends, t_f, config.grid_points, config.backend_config()))
        for t_f in config.t_f_list
    ]
    rows: List[DistanceRow] = [row for _, chunk in await controller.run_cells(cells) for row in chunk]
    return {"rows": rows, "header": DISTANCE_HEADER, "extra": None,
            "stem": f"distance_n{config.n}_a{config.alpha}"}


COMMANDS = {
    "dynamics": lambda cfg, ctl: cmd_dynamics(cfg, ctl, compare=False),
    "compare": lambda cfg, ctl: cmd_dynamics(cfg, ctl, compare=True),
    "sweep": cmd_sweep,
    "threshold": cmd_threshold,
    "scaling": cmd_scaling,
    "distance": cmd_distance,
}


async def run_command(command: str, config: RunConfig) -> List[str]:
    """Execute one command and write its outputs; returns the written paths."""
    started = time.perf_counter()
    controller = SweepController(max_concurrency=config.workers)
    outcome = await COMMANDS[command](config, controller)
    wall_time = time.perf_counter() - started if config.record_wall_time else None

    envelope = build_envelope(command, config, outcome["rows"], fit=outcome.get("fit"),
                              grids=_grids(config), wall_time=wall_time, extra=outcome.get("extra"))
    exporter = ResultExporter(config.output_dir)
    paths = await exporter.export(outcome["stem"], envelope, outcome["header"], outcome["rows"])
    logger.info(f"✅ {command} finished: {', '.join(paths)}")
    return paths


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=(args.log_level or os.getenv(ENV_LOG_LEVEL) or "INFO").upper(),
        format='%(asctime)s | %(levelname)s | %(name)s | %(message)s',
        datefmt='%H:%M:%S'
    )
    logger.debug(f"Available backends: {BackendRegistry.get_available()}")

    try:
        manager = RunConfigManager(args.config)
        config = manager.resolve(args.command, overrides_from_args(args))
    except (ConfigError, ValidationError, ValueError) as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_CONFIG

    try:
        asyncio.run(run_command(args.command, config))
    except SOLVER_FAILURES as e:
        logger.error(f"Solver failure in {args.command}: {e}")
        return EXIT_SOLVER
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
