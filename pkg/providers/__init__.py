"""
Solver backend base class and registry.
"""
from abc import ABC, abstractmethod
from typing import Dict, List, Any, Optional, Sequence, Type
import logging

from core.exact import Trajectory
from core.models import BackendType, OdeSpec, QuadratureSpec
from core.schedule import Schedule
from core.twolevel import State2, TwoLevelProblem

logger = logging.getLogger(__name__)


class SolverBackend(ABC):
    """
    Abstract base class for solver backends.
    Each backend produces a sampled trajectory and a final state for a given
    (problem, schedule, t_f).
    """

    backend_type: BackendType = BackendType.EXACT

    def __init__(self, config: Optional[Dict[str, Any]] = None):
        self.config = config or {}
        self.quadrature = QuadratureSpec(**self.config.get("quadrature", {}))
        self.ode = OdeSpec(**self.config.get("ode", {}))

    @property
    def name(self) -> str:
        return self.backend_type.value

    @abstractmethod
    def trajectory(self, problem: TwoLevelProblem, schedule: Schedule, t_f: float,
                   grid: Optional[Sequence[float]] = None) -> Trajectory:
        """Sample the backend's state on an r grid."""
        pass

    def final_state(self, problem: TwoLevelProblem, schedule: Schedule, t_f: float) -> State2:
        """State at r = 1. Backends override this when the endpoint is cheaper alone."""
        return self.trajectory(problem, schedule, t_f, grid=[0.0, 1.0]).final

    def get_info(self) -> Dict[str, Any]:
        return {
            "type": self.backend_type.value,
            "quadrature": self.quadrature.model_dump(),
            "ode": self.ode.model_dump(),
        }


class BackendRegistry:
    """
    Registry for solver backends.
    Maps backend names to classes and provides factory methods.
    """

    _backends: Dict[str, Type[SolverBackend]] = {}

    @classmethod
    def register(cls, backend_type: str, backend_class: Type[SolverBackend]):
        cls._backends[backend_type] = backend_class
        logger.debug(f"Registered solver backend: {backend_type}")

    @classmethod
    def create(cls, backend_type: str, config: Optional[Dict[str, Any]] = None) -> SolverBackend:
        """
        Create a backend instance.

        Args:
            backend_type: Registered name (exact, wkb0, ...)
            config: Optional {"quadrature": {...}, "ode": {...}} overrides
        """
        if backend_type not in cls._backends:
            raise ValueError(f"Unknown backend: {backend_type}. Available: {list(cls._backends.keys())}")
        return cls._backends[backend_type](config)

    @classmethod
    def get_available(cls) -> List[str]:
        return list(cls._backends.keys())


def _register_backends():
    """Register all built-in backends."""
    from providers.exact import ExactBackend
    from providers.wkb import Wkb0Backend, Wkb1Backend, RenormalizedWkb0Backend, RenormalizedWkb1Backend
    from providers.hj import Hj0Backend, Hj1Backend
    from providers.adiabatic import AdiabaticBackend

    BackendRegistry.register(BackendType.EXACT.value, ExactBackend)
    BackendRegistry.register(BackendType.WKB0.value, Wkb0Backend)
    BackendRegistry.register(BackendType.WKB1.value, Wkb1Backend)
    BackendRegistry.register(BackendType.RWKB0.value, RenormalizedWkb0Backend)
    BackendRegistry.register(BackendType.RWKB1.value, RenormalizedWkb1Backend)
    BackendRegistry.register(BackendType.HJ0.value, Hj0Backend)
    BackendRegistry.register(BackendType.HJ1.value, Hj1Backend)
    BackendRegistry.register(BackendType.ADIABATIC.value, AdiabaticBackend)


# Register on load
_register_backends()
