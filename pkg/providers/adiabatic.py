"""
Naive adiabatic backend: the instantaneous ground state, independent of t_f.
"""
import logging
from typing import Optional, Sequence

import numpy as np

from core.exact import Trajectory, default_grid, validate_grid
from core.models import BackendType
from core.schedule import Schedule, schedule_s
from core.twolevel import State2, TwoLevelProblem, eigenvector_angle
from providers import SolverBackend

logger = logging.getLogger(__name__)


class AdiabaticBackend(SolverBackend):
    backend_type = BackendType.ADIABATIC

    def trajectory(self, problem: TwoLevelProblem, schedule: Schedule, t_f: float,
                   grid: Optional[Sequence[float]] = None) -> Trajectory:
        r_grid = validate_grid(grid if grid is not None else default_grid())
        beta = eigenvector_angle(problem, r_grid)
        states = np.stack([np.cos(beta), np.sin(beta)], axis=1).astype(complex)
        return Trajectory(problem=problem, schedule=schedule, t_f=float(t_f), r=r_grid,
                          s=np.asarray(schedule_s(schedule, r_grid), dtype=float),
                          states=states, backend=self.name)

    def final_state(self, problem: TwoLevelProblem, schedule: Schedule, t_f: float) -> State2:
        return State2(psi=1.0 + 0j, phi=0j)
