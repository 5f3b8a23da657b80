"""
Hagedorn-Joye comparison backends.
"""
import logging
from typing import Optional, Sequence

from core.exact import Trajectory
from core.hj import assemble_hj, evaluate_hj, hj_trajectory
from core.models import BackendType
from core.schedule import Schedule
from core.twolevel import State2, TwoLevelProblem
from providers import SolverBackend

logger = logging.getLogger(__name__)


class HjBackend(SolverBackend):
    order: int = 0

    def trajectory(self, problem: TwoLevelProblem, schedule: Schedule, t_f: float,
                   grid: Optional[Sequence[float]] = None) -> Trajectory:
        return hj_trajectory(assemble_hj(problem, schedule, t_f, self.order, self.quadrature), grid)

    def final_state(self, problem: TwoLevelProblem, schedule: Schedule, t_f: float) -> State2:
        return evaluate_hj(assemble_hj(problem, schedule, t_f, self.order, self.quadrature), 1.0)


class Hj0Backend(HjBackend):
    backend_type = BackendType.HJ0
    order = 0


class Hj1Backend(HjBackend):
    backend_type = BackendType.HJ1
    order = 1
