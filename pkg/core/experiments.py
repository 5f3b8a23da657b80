"""
Experiments reproducing the study's curves as data: final populations versus t_f,
threshold times, scaling exponents, trajectory comparisons, time-averaged
distances and normalization studies.
"""
import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from core.exact import Trajectory, default_grid, validate_grid
from core.metrics import distance_series, pop_marked
from core.models import (
    AsymptoteRow,
    BackendType,
    ComparisonSummary,
    DistanceRow,
    DynamicsRow,
    LineFit,
    PgsRow,
    RenormalizationRow,
    RowStatus,
    ScalingResult,
    ThresholdResult,
    ThresholdStatus,
)
from core.numerics import DegenerateInput, NonConvergence, StepFailure, fit_line
from core.schedule import Schedule, schedule_g
from core.twolevel import TwoLevelProblem, eigenvector_angle_derivative, gap
from core.wkb import SingularSystem
from providers import BackendRegistry, SolverBackend

logger = logging.getLogger(__name__)

BackendSpec = Union[str, SolverBackend]

# Per-cell numerical failures; anything else is a programming error and propagates
SOLVER_ERRORS = (StepFailure, NonConvergence, SingularSystem, FloatingPointError, ZeroDivisionError)


class NotReached(Exception):
    """The target population was never exceeded within the scan budget."""


@dataclass(frozen=True)
class ThresholdScan:
    """
    Geometric t_f scan used to locate threshold times.

    A candidate is accepted once the run above p_th reaches horizon_factor times
    max(candidate, verification floor). The floor defaults to the adiabatic time
    scale of the schedule; t_verify_min overrides it.
    """
    t_min: float = 0.1
    ratio: float = 1.05
    horizon_factor: float = 3.0
    t_max: float = 1e6
    rel_width: float = 1e-3
    t_verify_min: Optional[float] = None

    def describe(self) -> str:
        floor = "adiabatic" if self.t_verify_min is None else repr(self.t_verify_min)
        return (f"geometric t_min={self.t_min!r} ratio={self.ratio!r} t_max={self.t_max!r} "
                f"bisection_rel_width={self.rel_width!r} verify_floor={floor}")


def adiabatic_time_scale(schedule: Schedule) -> float:
    """max_r |beta'(r) / (g(r) Delta(r))|; for alpha <= 3 the maximum sits at the gap minimum."""
    problem = schedule.problem
    return float(abs(eigenvector_angle_derivative(problem, 0.5))
                 / (schedule_g(schedule, 0.5) * gap(problem, 0.5)))


def make_schedule(n: int, alpha: int) -> Schedule:
    return Schedule(TwoLevelProblem(n), alpha)


def resolve_backend(backend: BackendSpec, config: Optional[Dict[str, Any]] = None) -> SolverBackend:
    if isinstance(backend, SolverBackend):
        return backend
    return BackendRegistry.create(BackendType(backend).value, config)


def geometric_grid(t_start: float, t_stop: float, ratio: float = 1.05) -> List[float]:
    """t_start * ratio^k up to and including t_stop."""
    if not (t_start > 0 and t_stop >= t_start and ratio > 1):
        raise ValueError(f"Invalid geometric grid ({t_start}, {t_stop}, ratio {ratio})")
    count = int(math.floor(math.log(t_stop / t_start) / math.log(ratio) + 1e-9)) + 1
    values = [t_start * ratio ** k for k in range(count)]
    if values[-1] < t_stop * (1 - 1e-12):
        values.append(float(t_stop))
    return values


# ---------------------------------------------------------------------------
# Final populations
# ---------------------------------------------------------------------------

def pgs_vs_tf(n: int, alpha: int, backend: BackendSpec, t_f_list: Sequence[float],
              backend_config: Optional[Dict[str, Any]] = None) -> List[PgsRow]:
    """Final marked-state population per t_f; failing cells become rows with status=failed."""
    solver = resolve_backend(backend, backend_config)
    schedule = make_schedule(n, alpha)
    rows = []
    for t_f in t_f_list:
        try:
            state = solver.final_state(schedule.problem, schedule, float(t_f))
            rows.append(PgsRow(n=n, alpha=alpha, backend=solver.name, t_f=float(t_f),
                               p_gs=pop_marked(state), norm=state.norm()))
        except SOLVER_ERRORS as e:
            logger.warning(f"p_GS cell failed (n={n}, alpha={alpha}, {solver.name}, t_f={t_f}): {e}")
            rows.append(PgsRow(n=n, alpha=alpha, backend=solver.name, t_f=float(t_f),
                               status=RowStatus.FAILED, error=str(e)))
    return rows


# ---------------------------------------------------------------------------
# Threshold times and scaling
# ---------------------------------------------------------------------------

def threshold_time(n: int, alpha: int, backend: BackendSpec, p_th: float = 0.95,
                   scan: Optional[ThresholdScan] = None,
                   backend_config: Optional[Dict[str, Any]] = None) -> ThresholdResult:
    """
    Smallest t_f beyond which p_GS stays above p_th.

    Scans a geometric t_f grid, tracking the last point at or below p_th, until
    every sampled point in (candidate, horizon_factor * max(candidate, floor)] lies
    above it, where the floor is the verification floor of the scan.
    The bracket around the last violation is then bisected. Failed or NaN
    evaluations count as violations.
    """
    if not 0.0 < p_th < 1.0:
        raise ValueError(f"p_th must lie in (0, 1), got {p_th}")
    scan = scan or ThresholdScan()
    solver = resolve_backend(backend, backend_config)
    schedule = make_schedule(n, alpha)
    evaluations = 0

    def above(t_f: float) -> bool:
        nonlocal evaluations
        evaluations += 1
        try:
            p = pop_marked(solver.final_state(schedule.problem, schedule, t_f))
        except SOLVER_ERRORS as e:
            logger.warning(f"Threshold scan evaluation failed at t_f={t_f}: {e}")
            return False
        return bool(np.isfinite(p) and p > p_th)

    last_violation: Optional[float] = None
    candidate: Optional[float] = None
    ever_above = False
    status = ThresholdStatus.FOUND
    floor = scan.t_verify_min if scan.t_verify_min is not None else adiabatic_time_scale(schedule)
    k = 0
    while True:
        t_f = scan.t_min * scan.ratio ** k
        if above(t_f):
            ever_above = True
            if candidate is None:
                candidate = t_f
            if t_f >= scan.horizon_factor * max(candidate, floor):
                break
        else:
            last_violation, candidate = t_f, None
        if t_f > scan.t_max:
            if not ever_above:
                raise NotReached(f"p_GS never exceeded {p_th} up to t_f={t_f:.6g} "
                                 f"(n={n}, alpha={alpha}, {solver.name})")
            if candidate is None:
                status = ThresholdStatus.NON_MONOTONE_TAIL
                logger.warning(f"Violations persist near the scan horizon (n={n}, alpha={alpha}, {solver.name})")
            else:
                logger.warning(f"Verification run cut at t_max={scan.t_max:.6g} (n={n}, alpha={alpha}, {solver.name})")
            break
        k += 1

    if last_violation is None:
        status = ThresholdStatus.AT_SCAN_FLOOR
        t_f_th = scan.t_min
    elif candidate is None:
        t_f_th = last_violation
    else:
        lo, hi = last_violation, candidate
        while hi / lo - 1.0 > scan.rel_width:
            mid = math.sqrt(lo * hi)
            if above(mid):
                hi = mid
            else:
                lo = mid
            logger.debug(f"Bisection bracket [{lo:.6g}, {hi:.6g}]")
        t_f_th = hi

    logger.info(f"🎯 Threshold n={n} alpha={alpha} {solver.name}: t_f^Th={t_f_th:.6g} ({status.value})")
    return ThresholdResult(n=n, alpha=alpha, backend=solver.name, p_th=p_th, t_f_th=float(t_f_th),
                           horizon_factor=scan.horizon_factor, grid_spec=scan.describe(),
                           status=status, evaluations=evaluations)


def scaling_from_thresholds(alpha: int, backend: str, p_th: float,
                            thresholds: Sequence[ThresholdResult]) -> ScalingResult:
    """Fit log2 t_f^Th against n."""
    ordered = sorted(thresholds, key=lambda t: t.n)
    ns = [t.n for t in ordered]
    t_f_ths = [t.t_f_th for t in ordered]
    log_t = np.log2(np.asarray(t_f_ths))
    fit: LineFit = fit_line(ns, log_t)
    residuals = (log_t - (fit.slope * np.asarray(ns) + fit.intercept)).tolist()
    logger.info(f"📈 Scaling alpha={alpha} {backend}: O(2^({fit.slope:.4f} n)), r^2={fit.r_squared:.4f}")
    return ScalingResult(alpha=alpha, backend=backend, p_th=p_th, ns=ns, t_f_ths=t_f_ths,
                         fit=fit, residuals=residuals, thresholds=list(ordered))


def scaling_fit(alpha: int, backend: BackendSpec, n_range: Sequence[int], p_th: float = 0.95,
                scan: Optional[ThresholdScan] = None,
                backend_config: Optional[Dict[str, Any]] = None) -> ScalingResult:
    ns = sorted(set(int(n) for n in n_range))
    if len(ns) < 3:
        raise DegenerateInput(f"Scaling fits need at least three problem sizes, got {ns}")
    solver = resolve_backend(backend, backend_config)
    thresholds = [threshold_time(n, alpha, solver, p_th, scan) for n in ns]
    return scaling_from_thresholds(alpha, solver.name, p_th, thresholds)


# ---------------------------------------------------------------------------
# Trajectory comparisons
# ---------------------------------------------------------------------------

def sample_backends(n: int, alpha: int, t_f: float, backends: Sequence[BackendSpec],
                    grid: Optional[Sequence[float]] = None,
                    backend_config: Optional[Dict[str, Any]] = None) -> Dict[str, Trajectory]:
    """Trajectories of every backend on one shared grid, keyed by backend name."""
    if not backends:
        raise ValueError("At least one backend is required")
    schedule = make_schedule(n, alpha)
    r_grid = validate_grid(grid if grid is not None else default_grid())
    out: Dict[str, Trajectory] = {}
    for backend in backends:
        solver = resolve_backend(backend, backend_config)
        out[solver.name] = solver.trajectory(schedule.problem, schedule, t_f, r_grid)
    return out


def dynamics_rows(trajectories: Dict[str, Trajectory], schedule: Schedule) -> List[DynamicsRow]:
    """Per-r rows for each backend, with the distance to the exact trajectory when present."""
    reference = trajectories.get(BackendType.EXACT.value)
    rows = []
    for name, traj in trajectories.items():
        D = distance_series(traj, reference, schedule).D if reference is not None else None
        norms = traj.norms
        pops = traj.pop_marked
        for i in range(len(traj)):
            psi, phi = traj.states[i]
            rows.append(DynamicsRow(
                r=float(traj.r[i]), s=float(traj.s[i]), backend=name,
                psi_re=float(psi.real), psi_im=float(psi.imag),
                phi_re=float(phi.real), phi_im=float(phi.imag),
                pop_marked=float(pops[i]), norm=float(norms[i]),
                trace_dist_vs_exact=None if D is None else float(D[i]),
            ))
    return rows


def summarize_trajectories(trajectories: Dict[str, Trajectory], schedule: Schedule, t_f: float) -> ComparisonSummary:
    """Time-averaged distance to the exact trajectory and minimum norm per backend."""
    reference = trajectories[BackendType.EXACT.value]
    summary = ComparisonSummary(n=schedule.problem.n, alpha=schedule.alpha, t_f=float(t_f))
    for name, traj in trajectories.items():
        summary.avg_distance[name] = distance_series(traj, reference, schedule).average
        summary.min_norm[name] = float(np.min(traj.norms))
    return summary


def compare_trajectories(n: int, alpha: int, t_f: float, backends: Sequence[BackendSpec],
                         grid: Optional[Sequence[float]] = None,
                         backend_config: Optional[Dict[str, Any]] = None) -> Tuple[List[DynamicsRow], ComparisonSummary]:
    """Populations, norms and trace distances against the exact trajectory on a shared grid."""
    names = [resolve_backend(b, backend_config).name for b in backends]
    if BackendType.EXACT.value not in names:
        raise ValueError("compare_trajectories needs the exact backend as reference")
    schedule = make_schedule(n, alpha)
    trajectories = sample_backends(n, alpha, t_f, backends, grid, backend_config)
    return dynamics_rows(trajectories, schedule), summarize_trajectories(trajectories, schedule, t_f)


def distance_vs_tf(n: int, alpha: int, backends: Sequence[BackendSpec], t_f_list: Sequence[float],
                   grid: Optional[Sequence[float]] = None,
                   backend_config: Optional[Dict[str, Any]] = None) -> List[DistanceRow]:
    """Time-averaged trace distance of each backend against the exact evolution, per t_f."""
    schedule = make_schedule(n, alpha)
    r_grid = validate_grid(grid if grid is not None else default_grid())
    exact = resolve_backend(BackendType.EXACT.value, backend_config)
    solvers = [resolve_backend(b, backend_config) for b in backends]
    rows = []
    for t_f in t_f_list:
        try:
            reference = exact.trajectory(schedule.problem, schedule, float(t_f), r_grid)
        except SOLVER_ERRORS as e:
            logger.warning(f"Exact reference failed at t_f={t_f}: {e}")
            rows.extend(DistanceRow(n=n, alpha=alpha, backend=s.name, t_f=float(t_f),
                                    status=RowStatus.FAILED, error=str(e)) for s in solvers)
            continue
        for solver in solvers:
            try:
                traj = solver.trajectory(schedule.problem, schedule, float(t_f), r_grid)
                series = distance_series(traj, reference, schedule)
                rows.append(DistanceRow(n=n, alpha=alpha, backend=solver.name, t_f=float(t_f),
                                        avg_distance=series.average, min_norm=float(np.min(traj.norms))))
            except SOLVER_ERRORS as e:
                logger.warning(f"Distance cell failed ({solver.name}, t_f={t_f}): {e}")
                rows.append(DistanceRow(n=n, alpha=alpha, backend=solver.name, t_f=float(t_f),
                                        status=RowStatus.FAILED, error=str(e)))
    return rows


def asymptote_table(t_f_list: Sequence[float], backend: BackendSpec = BackendType.EXACT.value,
                    backend_config: Optional[Dict[str, Any]] = None) -> List[AsymptoteRow]:
    """
    Final excited population of the n = 1 constant schedule against its
    large-t_f leading term 1/(4 t_f^2).
    """
    solver = resolve_backend(backend, backend_config)
    schedule = make_schedule(1, 0)
    rows = []
    for t_f in t_f_list:
        state = solver.final_state(schedule.problem, schedule, float(t_f))
        excited = float(abs(state.phi) ** 2)
        leading = 1.0 / (4.0 * t_f * t_f)
        rows.append(AsymptoteRow(t_f=float(t_f), excited_population=excited, leading_term=leading,
                                 scaled=excited / leading, difference=excited - leading))
    return rows


def renormalization_gain(n: int, t_f: float, alphas: Sequence[int] = (0, 1, 2, 3),
                         grid: Optional[Sequence[float]] = None,
                         backend_config: Optional[Dict[str, Any]] = None) -> List[RenormalizationRow]:
    """Per schedule, how much renormalizing the order-0 approximant changes its averaged distance."""
    rows = []
    for alpha in alphas:
        _, summary = compare_trajectories(
            n, alpha, t_f,
            [BackendType.EXACT.value, BackendType.WKB0.value, BackendType.RWKB0.value],
            grid, backend_config,
        )
        d0 = summary.avg_distance[BackendType.WKB0.value]
        dr = summary.avg_distance[BackendType.RWKB0.value]
        rows.append(RenormalizationRow(n=n, alpha=alpha, t_f=float(t_f), avg_distance_wkb0=d0,
                                       avg_distance_rwkb0=dr, gain=dr - d0))
    return rows


# ---------------------------------------------------------------------------
# Picklable sweep cells
# ---------------------------------------------------------------------------

def trajectory_cell(n: int, alpha: int, t_f: float, backend: str, grid_points: int,
                    backend_config: Optional[Dict[str, Any]] = None) -> Trajectory:
    return sample_backends(n, alpha, t_f, [backend], default_grid(grid_points), backend_config)[backend]


def pgs_cell(n: int, alpha: int, backend: str, t_f: float,
             backend_config: Optional[Dict[str, Any]] = None) -> PgsRow:
    return pgs_vs_tf(n, alpha, backend, [t_f], backend_config)[0]


def threshold_cell(n: int, alpha: int, backend: str, p_th: float, scan: ThresholdScan,
                   backend_config: Optional[Dict[str, Any]] = None) -> ThresholdResult:
    return threshold_time(n, alpha, backend, p_th, scan, backend_config)


def distance_cell(n: int, alpha: int, backends: Sequence[str], t_f: float, grid_points: int,
                  backend_config: Optional[Dict[str, Any]] = None) -> List[DistanceRow]:
    return distance_vs_tf(n, alpha, backends, [t_f], default_grid(grid_points), backend_config)
