"""
Hagedorn-Joye adiabatic expansion at orders 0 and 1 for the effective
Hamiltonian g(r) H(r).

The eigenvectors of g H are those of H; its gap is g(r) Delta(r). With the
continuous gauge v_gs = (cos beta, sin beta), v_exc = (-sin beta, cos beta):

    v_gs' = beta' v_exc,  chi1_perp = i beta' / (g Delta) v_exc,
    f1(r) = i * integral_0^r beta'^2 / (g Delta),
    chi2_perp = i / (g Delta) * (f1 beta' + i (beta' / (g Delta))') v_exc.
"""
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence, Tuple

import numpy as np

from core.exact import Trajectory, default_grid, validate_grid
from core.models import QuadratureSpec
from core.numerics import cumulative_integral
from core.schedule import Schedule, schedule_g, schedule_s
from core.twolevel import (
    ArrayLike,
    DomainError,
    State2,
    TwoLevelProblem,
    check_r,
    eigenvector_angle,
    eigenvector_angle_derivative,
    gap,
    gap_derivative,
)
from core.wkb import eikonal_theta, phase_factor

logger = logging.getLogger(__name__)


def _basis(problem: TwoLevelProblem, r: np.ndarray):
    beta = eigenvector_angle(problem, r)
    v_gs = np.stack([np.cos(beta), np.sin(beta)], axis=-1)
    v_exc = np.stack([-np.sin(beta), np.cos(beta)], axis=-1)
    return v_gs, v_exc


def _coupling_over_gap(schedule: Schedule, r: np.ndarray) -> np.ndarray:
    """beta' / (g Delta) = -sqrt(K) Delta^(alpha-3) / ((K+1) c_alpha)."""
    K = schedule.problem.K
    delta = gap(schedule.problem, r)
    return -np.sqrt(K) * delta ** (schedule.alpha - 3) / ((K + 1) * schedule.c_alpha)


def _coupling_over_gap_derivative(schedule: Schedule, r: np.ndarray) -> np.ndarray:
    K = schedule.problem.K
    alpha = schedule.alpha
    delta = gap(schedule.problem, r)
    return (-np.sqrt(K) * (alpha - 3) * delta ** (alpha - 4) * gap_derivative(schedule.problem, r)
            / ((K + 1) * schedule.c_alpha))


def hj_chi1_perp(problem: TwoLevelProblem, schedule: Schedule, r: ArrayLike) -> np.ndarray:
    """First-order correction, orthogonal to the ground state."""
    r = check_r(r)
    _, v_exc = _basis(problem, r)
    amp = 1j * _coupling_over_gap(schedule, r)
    return np.asarray(amp)[..., None] * v_exc


def _f1_integrand(schedule: Schedule):
    problem = schedule.problem

    def integrand(q):
        q = np.asarray(q)
        beta_prime = eigenvector_angle_derivative(problem, q)
        gd = schedule_g(schedule, q) * gap(problem, q)
        return float(beta_prime * beta_prime / gd)
    return integrand


@lru_cache(maxsize=256)
def _f1_table(n: int, alpha: int, points: Tuple[float, ...], abs_tol: float, rel_tol: float, limit: int) -> np.ndarray:
    schedule = Schedule(TwoLevelProblem(n), alpha)
    spec = QuadratureSpec(abs_tol=abs_tol, rel_tol=rel_tol, max_subdivisions=limit)
    augmented = np.concatenate([np.asarray(points), [0.5]])
    return cumulative_integral(_f1_integrand(schedule), augmented, spec)[:-1]


def hj_f1(problem: TwoLevelProblem, schedule: Schedule, r: ArrayLike,
          spec: Optional[QuadratureSpec] = None) -> ArrayLike:
    """f1(r) = i * integral_0^r beta'^2/(g Delta); purely imaginary."""
    r = check_r(r)
    if schedule.problem != problem:
        raise ValueError("Schedule was built for a different problem")
    spec = spec or QuadratureSpec()
    flat = np.atleast_1d(r).ravel()
    table = _f1_table(problem.n, schedule.alpha, tuple(float(x) for x in flat),
                      spec.abs_tol, spec.rel_tol, spec.max_subdivisions)
    return (1j * table.reshape(np.shape(r)))[()]


def hj_chi2_perp(problem: TwoLevelProblem, schedule: Schedule, r: ArrayLike,
                 f1: Optional[ArrayLike] = None) -> np.ndarray:
    r = check_r(r)
    if f1 is None:
        f1 = hj_f1(problem, schedule, r)
    _, v_exc = _basis(problem, r)
    gd = schedule_g(schedule, r) * gap(problem, r)
    beta_prime = eigenvector_angle_derivative(problem, r)
    amp = 1j / gd * (f1 * beta_prime + 1j * _coupling_over_gap_derivative(schedule, r))
    return np.asarray(amp)[..., None] * v_exc


@dataclass(frozen=True)
class HjSolution:
    order: int
    problem: TwoLevelProblem
    schedule: Schedule
    t_f: float
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)

    @property
    def eps(self) -> float:
        return 1.0 / self.t_f

    @property
    def label(self) -> str:
        return f"hj{self.order}"


def assemble_hj(problem: TwoLevelProblem, schedule: Schedule, t_f: float, order: int,
                spec: Optional[QuadratureSpec] = None) -> HjSolution:
    if order not in (0, 1):
        raise ValueError(f"HJ order must be 0 or 1, got {order}")
    if not t_f > 0:
        raise DomainError(f"t_f must be positive, got {t_f}")
    if schedule.problem != problem:
        raise ValueError("Schedule was built for a different problem")
    return HjSolution(order=order, problem=problem, schedule=schedule, t_f=float(t_f),
                      quadrature=spec or QuadratureSpec())


def evaluate_hj_states(sol: HjSolution, r: ArrayLike) -> np.ndarray:
    """
    Order 0: e^{theta_-/eps} (v_gs + eps chi1_perp).
    Order 1: e^{theta_-/eps} (v_gs + eps (f1 v_gs + chi1_perp) + eps^2 chi2_perp).

    The dynamical phase exp(-(i/eps) integral g E_gs) equals e^{theta_-/eps}.
    """
    r = np.atleast_1d(check_r(r))
    eps = sol.eps
    v_gs, _ = _basis(sol.problem, r)
    chi1 = hj_chi1_perp(sol.problem, sol.schedule, r)
    state = v_gs.astype(complex) + eps * chi1
    if sol.order == 1:
        f1 = hj_f1(sol.problem, sol.schedule, r, sol.quadrature)
        chi2 = hj_chi2_perp(sol.problem, sol.schedule, r, f1)
        state = state + eps * f1[:, None] * v_gs + eps * eps * chi2
    phase = phase_factor(eikonal_theta(sol.schedule, -1, r), sol.t_f)
    return phase[:, None] * state


def evaluate_hj(sol: HjSolution, r: float) -> State2:
    return State2.from_array(evaluate_hj_states(sol, r)[0])


def hj_trajectory(sol: HjSolution, grid: Optional[Sequence[float]] = None) -> Trajectory:
    r_grid = validate_grid(grid if grid is not None else default_grid())
    return Trajectory(problem=sol.problem, schedule=sol.schedule, t_f=sol.t_f, r=r_grid,
                      s=np.asarray(schedule_s(sol.schedule, r_grid), dtype=float),
                      states=evaluate_hj_states(sol, r_grid), backend=sol.label)


def final_ground_overlap(sol: HjSolution) -> float:
    """|<v_gs(1), chi_HJ(1)>|^2; exactly 1 at order 0 and 1 + eps^2 |f1(1)|^2 at order 1."""
    v_gs, _ = _basis(sol.problem, np.array([1.0]))
    state = evaluate_hj_states(sol, 1.0)[0]
    return float(abs(np.vdot(v_gs[0], state)) ** 2)
