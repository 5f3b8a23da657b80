"""
Numerically exact reference evolution i eps chi'(r) = g(r) H(r) chi(r), eps = 1/t_f.
"""
import logging
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Tuple

import numpy as np

from core.models import OdeSpec
from core.numerics import solve_ode
from core.schedule import Schedule, schedule_g, schedule_s
from core.twolevel import DomainError, State2, TwoLevelProblem, hamiltonian_entries, initial_state

logger = logging.getLogger(__name__)

DEFAULT_GRID_POINTS = 501


def default_grid(points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    if points < 2:
        raise DomainError(f"A grid needs at least 2 points, got {points}")
    return np.linspace(0.0, 1.0, points)


def validate_grid(grid: Sequence[float]) -> np.ndarray:
    """Sorted, strictly increasing, inside [0, 1] and containing both endpoints."""
    arr = np.asarray(grid, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise DomainError("Grid must be a 1-D sequence with at least two points")
    if arr[0] != 0.0 or arr[-1] != 1.0:
        raise DomainError("Grid must start at r=0 and end at r=1")
    if np.any(np.diff(arr) <= 0.0):
        raise DomainError("Grid must be strictly increasing")
    return arr


@dataclass(frozen=True)
class Trajectory:
    """States of one backend sampled on an r grid."""
    problem: TwoLevelProblem
    schedule: Schedule
    t_f: float
    r: np.ndarray
    s: np.ndarray
    states: np.ndarray  # shape (len(r), 2), complex
    backend: str = "exact"

    def __len__(self) -> int:
        return self.r.size

    def state(self, index: int) -> State2:
        return State2.from_array(self.states[index])

    @property
    def rows(self) -> Iterator[Tuple[float, float, State2]]:
        for i in range(self.r.size):
            yield float(self.r[i]), float(self.s[i]), self.state(i)

    @property
    def norms(self) -> np.ndarray:
        return np.sqrt(np.sum(np.abs(self.states) ** 2, axis=1))

    @property
    def pop_marked(self) -> np.ndarray:
        return np.abs(self.states[:, 0]) ** 2

    @property
    def final(self) -> State2:
        return self.state(-1)


def schrodinger_rhs(problem: TwoLevelProblem, schedule: Schedule, t_f: float):
    """
    Right-hand side for the traceless part of g(r) H(r).

    H = 1/2 + (H - 1/2), and the identity part only contributes the global
    phase exp(-i t_f s(r) / 2), which is restored analytically afterwards.
    """
    def rhs(r, y):
        a, b, _ = hamiltonian_entries(problem, r)
        z = a - 0.5
        scale = -1j * t_f * schedule_g(schedule, min(max(r, 0.0), 1.0))
        return scale * np.array([z * y[0] + b * y[1], b * y[0] - z * y[1]])
    return rhs


def evolve_exact(problem: TwoLevelProblem, schedule: Schedule, t_f: float,
                 grid: Optional[Sequence[float]] = None, spec: Optional[OdeSpec] = None) -> Trajectory:
    """
    Integrate the Schrodinger equation in r from the uniform superposition.

    Args:
        problem: Grover two-level problem
        schedule: interpolation schedule
        t_f: total evolution time (eps = 1/t_f)
        grid: output r grid; defaults to 501 uniform points
        spec: integrator tolerances
    """
    if not t_f > 0:
        raise DomainError(f"t_f must be positive, got {t_f}")
    r_grid = validate_grid(grid if grid is not None else default_grid())
    s_grid = np.asarray(schedule_s(schedule, r_grid), dtype=float)

    y0 = initial_state(problem).as_array()
    xi = solve_ode(schrodinger_rhs(problem, schedule, t_f), y0, (0.0, 1.0), spec, r_grid)
    states = xi * np.exp(-0.5j * t_f * s_grid)[:, None]
    states[0] = y0

    logger.debug(f"Exact evolution n={problem.n} alpha={schedule.alpha} t_f={t_f}: "
                 f"max norm drift {np.max(np.abs(np.sqrt(np.sum(np.abs(states) ** 2, axis=1)) - 1.0)):.2e}")
    return Trajectory(problem=problem, schedule=schedule, t_f=float(t_f),
                      r=r_grid, s=s_grid, states=states, backend="exact")


def final_state_exact(problem: TwoLevelProblem, schedule: Schedule, t_f: float,
                      spec: Optional[OdeSpec] = None) -> State2:
    """State at r = 1 only, without dense output."""
    return evolve_exact(problem, schedule, t_f, grid=[0.0, 1.0], spec=spec).final
