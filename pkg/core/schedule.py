"""
Gap-powered interpolation schedules g_alpha(r) = s'(r) = c_alpha * Delta(r)^(-alpha).
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from core.twolevel import (
    ArrayLike,
    TwoLevelProblem,
    check_r,
    gap,
    gap_derivative,
    gap_power_integral,
)

logger = logging.getLogger(__name__)

SCHEDULE_POWERS = (0, 1, 2, 3)


def normalization_constant(problem: TwoLevelProblem, alpha: int) -> float:
    """c_alpha such that the integral of g_alpha over [0, 1] is one."""
    K = problem.K
    if alpha == 0:
        return 1.0
    if alpha == 1:
        sk, sk1 = np.sqrt(K), np.sqrt(K + 1.0)
        return float(2.0 * np.sqrt(K / (K + 1.0)) / np.log((sk1 + sk) / (sk1 - sk)))
    if alpha == 2:
        return float(np.sqrt(K) / ((K + 1.0) * np.arctan(np.sqrt(K))))
    if alpha == 3:
        return 1.0 / (K + 1.0)
    raise ValueError(f"Unsupported schedule power alpha={alpha}; expected one of {SCHEDULE_POWERS}")


@dataclass(frozen=True)
class Schedule:
    problem: TwoLevelProblem
    alpha: int
    c_alpha: float = field(init=False)

    def __post_init__(self):
        if self.alpha not in SCHEDULE_POWERS:
            raise ValueError(f"Unsupported schedule power alpha={self.alpha}; expected one of {SCHEDULE_POWERS}")
        object.__setattr__(self, "c_alpha", normalization_constant(self.problem, self.alpha))
        logger.debug(f"Schedule alpha={self.alpha} n={self.problem.n}: c_alpha={self.c_alpha!r}")

    @property
    def label(self) -> str:
        return f"g{self.alpha}"


def schedule_g(sched: Schedule, r: ArrayLike) -> ArrayLike:
    r = check_r(r)
    if sched.alpha == 0:
        return np.ones_like(r)[()]
    return (sched.c_alpha * gap(sched.problem, r) ** (-sched.alpha))[()]


def schedule_s(sched: Schedule, r: ArrayLike) -> ArrayLike:
    """
    Cumulative schedule s(r), the integral of g_alpha from 0 to r.

    Evaluated through the closed-form gap integrals, so s(0) = 0 and s(1) = 1
    hold to rounding error.
    """
    r = check_r(r)
    if sched.alpha == 0:
        return r[()]
    s = sched.c_alpha * gap_power_integral(sched.problem, -sched.alpha, r)
    return np.clip(s, 0.0, 1.0)[()]


def schedule_log_deriv(sched: Schedule, r: ArrayLike) -> ArrayLike:
    """g'/g = -alpha Delta'/Delta."""
    r = check_r(r)
    if sched.alpha == 0:
        return np.zeros_like(r)[()]
    return (-sched.alpha * gap_derivative(sched.problem, r) / gap(sched.problem, r))[()]


def schedule_g_derivative(sched: Schedule, r: ArrayLike) -> ArrayLike:
    return (schedule_g(sched, r) * schedule_log_deriv(sched, r))[()]
