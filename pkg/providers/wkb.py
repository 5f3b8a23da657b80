"""
WKB backends at orders 0 and 1, plain and renormalized.
"""
import logging
from typing import Any, Dict, Optional, Sequence

from core.exact import Trajectory
from core.models import BackendType
from core.schedule import Schedule
from core.twolevel import State2, TwoLevelProblem
from core.wkb import WkbConvention, WkbSolution, assemble, evaluate, wkb_trajectory
from providers import SolverBackend

logger = logging.getLogger(__name__)


class WkbBackend(SolverBackend):
    """Assembles the WKB approximant once per call and samples it."""

    order: int = 0
    renormalized: bool = False

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        super().__init__(config)
        self.convention = WkbConvention(self.config.get("convention", WkbConvention.UNIT.value))

    def solution(self, problem: TwoLevelProblem, schedule: Schedule, t_f: float) -> WkbSolution:
        return assemble(problem, schedule, t_f, self.order, renormalized=self.renormalized,
                        convention=self.convention, spec=self.quadrature)

    def trajectory(self, problem: TwoLevelProblem, schedule: Schedule, t_f: float,
                   grid: Optional[Sequence[float]] = None) -> Trajectory:
        return wkb_trajectory(self.solution(problem, schedule, t_f), grid)

    def final_state(self, problem: TwoLevelProblem, schedule: Schedule, t_f: float) -> State2:
        return evaluate(self.solution(problem, schedule, t_f), 1.0)

    def get_info(self) -> Dict[str, Any]:
        info = super().get_info()
        info.update({"order": self.order, "renormalized": self.renormalized, "convention": self.convention.value})
        return info


class Wkb0Backend(WkbBackend):
    backend_type = BackendType.WKB0
    order = 0


class Wkb1Backend(WkbBackend):
    backend_type = BackendType.WKB1
    order = 1


class RenormalizedWkb0Backend(WkbBackend):
    backend_type = BackendType.RWKB0
    order = 0
    renormalized = True


class RenormalizedWkb1Backend(WkbBackend):
    backend_type = BackendType.RWKB1
    order = 1
    renormalized = True
