"""
Populations, norms and trace-norm distances for (possibly unnormalized) pure states.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from core.exact import Trajectory
from core.schedule import Schedule, schedule_g
from core.twolevel import State2, TwoLevelProblem, eigensystem

logger = logging.getLogger(__name__)


class GridMismatch(Exception):
    """Two trajectories were sampled on different r grids."""


@dataclass(frozen=True)
class DistanceSeries:
    r: np.ndarray
    s: np.ndarray
    D: np.ndarray
    average: float


def pop_marked(state: State2) -> float:
    """|psi|^2, deliberately unclipped."""
    return float(abs(state.psi) ** 2)


def _trace_distance_arrays(v: np.ndarray, w: np.ndarray) -> np.ndarray:
    """
    Half the trace norm of v v^dag - w w^dag, row-wise.

    The difference has rank <= 2 and its nonzero eigenvalues follow from the
    Gram matrix of (v, w): D = 1/2 sqrt((|v|^2 + |w|^2)^2 - 4 |<v, w>|^2).
    """
    # same rounding path as the overlap, so identical states give exactly zero
    a = np.sum(np.real(np.conj(v) * v), axis=-1)
    b = np.sum(np.real(np.conj(w) * w), axis=-1)
    overlap = np.abs(np.sum(np.conj(v) * w, axis=-1)) ** 2
    return 0.5 * np.sqrt(np.maximum((a + b) ** 2 - 4.0 * overlap, 0.0))


def trace_distance(v: State2, w: State2) -> float:
    return float(_trace_distance_arrays(v.as_array(), w.as_array()))


def _check_grids(traj1: Trajectory, traj2: Trajectory):
    if traj1.r.shape != traj2.r.shape or not np.array_equal(traj1.r, traj2.r):
        raise GridMismatch(f"Trajectories '{traj1.backend}' and '{traj2.backend}' use different r grids")


def distance_series(traj1: Trajectory, traj2: Trajectory, schedule: Schedule) -> DistanceSeries:
    _check_grids(traj1, traj2)
    D = _trace_distance_arrays(traj1.states, traj2.states)
    return DistanceSeries(r=traj1.r, s=traj1.s, D=D, average=_time_average(D, traj1.r, schedule))


def _time_average(D: np.ndarray, r: np.ndarray, schedule: Schedule) -> float:
    # dt = t_f g(r) dr, so (1/t_f) integral dt D = integral_0^1 D g dr
    return float(simpson(D * schedule_g(schedule, r), x=r))


def time_avg_distance(traj1: Trajectory, traj2: Trajectory, schedule: Schedule) -> float:
    """Time-averaged trace distance, composite Simpson in r with weight g(r)."""
    _check_grids(traj1, traj2)
    return _time_average(_trace_distance_arrays(traj1.states, traj2.states), traj1.r, schedule)


def adiabatic_state(problem: TwoLevelProblem, r: float) -> State2:
    """Instantaneous ground state in the continuous gauge."""
    return State2.from_array(eigensystem(problem, r).v_gs)
