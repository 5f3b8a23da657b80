"""
Reference backend: adaptive Runge-Kutta integration of the Schrodinger equation.
"""
import logging
from typing import Optional, Sequence

from core.exact import Trajectory, evolve_exact, final_state_exact
from core.models import BackendType
from core.schedule import Schedule
from core.twolevel import State2, TwoLevelProblem
from providers import SolverBackend

logger = logging.getLogger(__name__)


class ExactBackend(SolverBackend):
    backend_type = BackendType.EXACT

    def trajectory(self, problem: TwoLevelProblem, schedule: Schedule, t_f: float,
                   grid: Optional[Sequence[float]] = None) -> Trajectory:
        return evolve_exact(problem, schedule, t_f, grid, self.ode)

    def final_state(self, problem: TwoLevelProblem, schedule: Schedule, t_f: float) -> State2:
        return final_state_exact(problem, schedule, t_f, self.ode)
