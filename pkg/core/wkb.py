"""
Quasi-adiabatic WKB approximants at orders 0 and 1.

Each amplitude (psi on |m>, phi on |m_perp>) obeys its own second-order ODE and
is expanded as

    Y(r) = A e^{theta_+/eps} (y0_+ + eps y1_+) + B e^{theta_-/eps} (y0_- + eps y1_-)

with eps = 1/t_f. theta_+- come from the eikonal equation, y0 from the transport
equation and y1 = w * y0 from the first-order equation. A and B are fixed by the
value and the (vanishing) derivative of the amplitude at r = 0.

Branch conventions: the "+" branch follows the excited level and the "-" branch
the ground level. psi_0^+ and phi_0^- vanish linearly at r = 1; their log
derivative has a simple pole there and is called the "pole" kind below.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from core.exact import Trajectory, validate_grid, default_grid
from core.models import QuadratureSpec
from core.numerics import cumulative_integral
from core.schedule import Schedule, schedule_g, schedule_g_derivative, schedule_log_deriv, schedule_s
from core.twolevel import (
    ArrayLike,
    DomainError,
    State2,
    TwoLevelProblem,
    check_r,
    gap,
    gap_derivative,
    gap_power_integral,
    gap_second_derivative,
    hamiltonian_entries,
    initial_state,
)

logger = logging.getLogger(__name__)

ENDPOINT_CLAMP = 1e-8
FD_STEP = 1e-5
SINGULAR_CONDITION = 1e13


class Singularity(Exception):
    """A transport log derivative was requested at the r = 1 endpoint."""


class SingularSystem(Exception):
    """The 2x2 boundary system for the branch coefficients is numerically singular."""


class Amplitude(str, Enum):
    PSI = "psi"
    PHI = "phi"


class WkbConvention(str, Enum):
    """
    Integration constants of the transport and first-order equations.

    UNIT: d_0 = 1 on both branches and w(0) = 0.
    CLOSED_FORM: zeroth amplitudes equal to one at r = 0 and the first-order
        constants of the n = 1 closed forms (only defined for n = 1, alpha = 0).
    """
    UNIT = "unit"
    CLOSED_FORM = "closed_form"


def _check_sign(sign: int) -> int:
    if sign not in (1, -1):
        raise ValueError(f"Branch sign must be +1 or -1, got {sign!r}")
    return sign


def _is_pole_kind(sign: int, which: Amplitude) -> bool:
    # psi_0^+ and phi_0^- carry the (1 - r) factor
    return (Amplitude(which) is Amplitude.PSI) == (sign == 1)


# ---------------------------------------------------------------------------
# Eikonal phases
# ---------------------------------------------------------------------------

def eikonal_theta(schedule: Schedule, sign: int, r: ArrayLike) -> ArrayLike:
    """theta_+-(r) = -(i/2) * integral_0^r g (1 +- Delta); purely imaginary."""
    sign = _check_sign(sign)
    r = check_r(r)
    s = schedule_s(schedule, r)
    phase = schedule.c_alpha * gap_power_integral(schedule.problem, 1 - schedule.alpha, r)
    return np.asarray(-0.5j * (s + sign * phase))[()]


def eikonal_theta_prime(schedule: Schedule, sign: int, r: ArrayLike) -> ArrayLike:
    r = check_r(r)
    return (-0.5j * schedule_g(schedule, r) * (1.0 + sign * gap(schedule.problem, r)))[()]


def eikonal_theta_second(schedule: Schedule, sign: int, r: ArrayLike) -> ArrayLike:
    r = check_r(r)
    g = schedule_g(schedule, r)
    dg = schedule_g_derivative(schedule, r)
    delta = gap(schedule.problem, r)
    return (-0.5j * (dg * (1.0 + sign * delta) + sign * g * gap_derivative(schedule.problem, r)))[()]


def phase_factor(theta: ArrayLike, t_f: float) -> np.ndarray:
    """e^{theta/eps} for purely imaginary theta; unit modulus by construction."""
    return np.exp(1j * np.imag(theta) * t_f)


# ---------------------------------------------------------------------------
# Zeroth-order transport amplitudes
# ---------------------------------------------------------------------------

def _n_factor(problem: TwoLevelProblem, r: np.ndarray) -> np.ndarray:
    """N(r) = K(2r-1) + (K+1) Delta + 1, rationalized below r = 1/2 to avoid cancellation."""
    K = problem.K
    delta = gap(problem, r)
    h = 1.0 - r
    direct = K * (2.0 * r - 1.0) + (K + 1) * delta + 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        rationalized = 4.0 * K * h * h / ((K + 1) * delta + K * (1.0 - 2.0 * r) - 1.0)
    return np.where(r >= 0.5, direct, rationalized)


def _reduced_pole_amplitude(problem: TwoLevelProblem, r: np.ndarray) -> np.ndarray:
    """psi_0^+ / (d (1 - r)), finite on all of [0, 1]."""
    K = problem.K
    return 1.0 / np.sqrt(np.sqrt(K + 1.0) * gap(problem, r) * _n_factor(problem, r))


def transport_constant(problem: TwoLevelProblem, pole_kind: bool,
                       convention: WkbConvention = WkbConvention.UNIT) -> float:
    if WkbConvention(convention) is WkbConvention.UNIT:
        return 1.0
    root = np.sqrt(problem.K + 1.0)
    return float(np.sqrt(2.0 * root)) if pole_kind else float(np.sqrt(root / 2.0))


def transport_zeroth(problem: TwoLevelProblem, branch_sign: int, which: Amplitude, r: ArrayLike,
                     convention: WkbConvention = WkbConvention.UNIT) -> ArrayLike:
    """
    Zeroth-order amplitudes (schedule independent).

    psi_0^+ = d (1-r) / sqrt(sqrt(K+1) Delta N),  psi_0^- = d sqrt(N / (sqrt(K+1) Delta)),
    phi_0^- = psi_0^+ and phi_0^+ = psi_0^-.
    """
    branch_sign = _check_sign(branch_sign)
    r = check_r(r)
    pole = _is_pole_kind(branch_sign, which)
    d = transport_constant(problem, pole, convention)
    reduced = _reduced_pole_amplitude(problem, r)
    if pole:
        return (d * (1.0 - r) * reduced)[()]
    # N / sqrt(sqrt(K+1) Delta N) = sqrt(N / (sqrt(K+1) Delta))
    return (d * _n_factor(problem, r) * reduced)[()]


def _log_deriv_parts(problem: TwoLevelProblem, r: np.ndarray):
    """p = Delta'/Delta and q = 4Kr/((K+1) Delta (1+Delta)) with their derivatives."""
    K = problem.K
    c = 4.0 * K / (K + 1)
    delta = gap(problem, r)
    d1 = gap_derivative(problem, r)
    d2 = gap_second_derivative(problem, r)
    p = d1 / delta
    dp = d2 / delta - p * p
    one_d = 1.0 + delta
    q = c * r / (delta * one_d)
    dq = c * (1.0 / (delta * one_d) - r * d1 * (1.0 + 2.0 * delta) / (delta * delta * one_d * one_d))
    return p, dp, q, dq


def _regular_l_over_h(problem: TwoLevelProblem, r: np.ndarray) -> np.ndarray:
    """L_-(r) / (1-r), finite at r = 1 where L_- vanishes."""
    K = problem.K
    c = 4.0 * K / (K + 1)
    delta = gap(problem, r)
    p, _, q, _ = _log_deriv_parts(problem, r)
    with np.errstate(divide="ignore", invalid="ignore"):
        direct = -0.5 * (p - q) / (1.0 - r)
        rationalized = c * r / ((K + 1) * delta * delta * (1.0 + delta) * (2.0 * r - 1.0 + delta))
    return np.where(r >= 0.5, rationalized, direct)


def _log_derivative(problem: TwoLevelProblem, pole_kind: bool, r: np.ndarray):
    """(L, L') for the pole or regular kind, unchecked."""
    p, dp, q, dq = _log_deriv_parts(problem, r)
    if pole_kind:
        with np.errstate(divide="ignore"):
            h = 1.0 - r
            return -1.0 / h - 0.5 * (p + q), -1.0 / (h * h) - 0.5 * (dp + dq)
    return -0.5 * (p - q), -0.5 * (dp - dq)


def transport_log_deriv(problem: TwoLevelProblem, branch_sign: int, which: Amplitude, r: ArrayLike) -> ArrayLike:
    """
    y0'/y0 in closed form: -1/2 [Delta'/Delta + 1/(1-r) +- 1/((1-r) Delta)] for psi,
    and L_phi^{+-} = L_psi^{-+}.
    """
    branch_sign = _check_sign(branch_sign)
    r = check_r(r)
    if np.any(r >= 1.0):
        raise Singularity("Transport log derivative is singular at r = 1")
    L, _ = _log_derivative(problem, _is_pole_kind(branch_sign, which), r)
    return L[()]


# ---------------------------------------------------------------------------
# First-order corrections
# ---------------------------------------------------------------------------

def _w_prime_unsigned(schedule: Schedule, pole_kind: bool, r: np.ndarray) -> np.ndarray:
    """
    w' for the "+" sign with the double pole i/(c_alpha (1-r)^2) removed on the pole kind.

    w' = -sign * i B / (g Delta) with B = L' + L^2 + L/(1-r) - (g'/g) L.
    """
    problem = schedule.problem
    alpha = schedule.alpha
    g = schedule_g(schedule, r)
    delta = gap(problem, r)
    G = schedule_log_deriv(schedule, r)
    gd = g * delta

    if not pole_kind:
        L, dL = _log_derivative(problem, False, r)
        B = dL + L * L + _regular_l_over_h(problem, r) - G * L
        return -1j * B / gd

    # L = -1/h + R; B = -1/h^2 + (G - R)/h + R' + R^2 - G R
    p, dp, q, dq = _log_deriv_parts(problem, r)
    R = -0.5 * (p + q)
    dR = -0.5 * (dp + dq)
    h = 1.0 - r
    K = problem.K
    # Delta^(alpha-1) - 1 without cancellation; Delta^2 - 1 = -4Krh/(K+1)
    gap_excess = np.expm1(0.5 * (alpha - 1) * np.log1p(-4.0 * K * r * h / (K + 1)))
    B_reg = ((0.5 - alpha) * p + 0.5 * q) / h + dR + R * R - G * R
    return 1j * gap_excess / (schedule.c_alpha * h * h) - 1j * B_reg / gd


@lru_cache(maxsize=512)
def _w_table(n: int, alpha: int, pole_kind: bool, points: Tuple[float, ...],
             abs_tol: float, rel_tol: float, limit: int) -> np.ndarray:
    problem = TwoLevelProblem(n)
    schedule = Schedule(problem, alpha)
    spec = QuadratureSpec(abs_tol=abs_tol, rel_tol=rel_tol, max_subdivisions=limit)

    def integrand(x):
        return complex(_w_prime_unsigned(schedule, pole_kind, np.asarray(x)))

    # the minimum gap at r = 1/2 is the sharpest feature; keep it on an interval boundary
    augmented = np.concatenate([np.asarray(points), [0.5]])
    values = cumulative_integral(integrand, augmented, spec)
    logger.debug(f"First-order table n={n} alpha={alpha} pole={pole_kind}: {len(points)} points")
    return values[:-1]


def _w_regular_part(schedule: Schedule, pole_kind: bool, r: np.ndarray,
                    spec: Optional[QuadratureSpec] = None) -> np.ndarray:
    spec = spec or QuadratureSpec()
    clamped = np.minimum(np.atleast_1d(r), 1.0 - ENDPOINT_CLAMP)
    table = _w_table(schedule.problem.n, schedule.alpha, pole_kind,
                     tuple(float(x) for x in clamped.ravel()),
                     spec.abs_tol, spec.rel_tol, spec.max_subdivisions)
    return table.reshape(np.shape(r)) if np.ndim(r) else table[0]


def first_order_constant(schedule: Schedule, branch_sign: int, which: Amplitude,
                         convention: WkbConvention = WkbConvention.UNIT) -> complex:
    """w(0) under the chosen convention."""
    if WkbConvention(convention) is WkbConvention.UNIT:
        return 0j
    if schedule.problem.n != 1 or schedule.alpha != 0:
        raise ValueError("Closed-form constants exist only for n = 1 with the constant schedule")
    if _is_pole_kind(branch_sign, which):
        return branch_sign * 11j / 12
    return -branch_sign * 1j / 12


def first_order_ratio(schedule: Schedule, branch_sign: int, which: Amplitude, r: ArrayLike,
                      convention: WkbConvention = WkbConvention.UNIT,
                      spec: Optional[QuadratureSpec] = None) -> ArrayLike:
    """w = y1/y0 for r < 1 (diverges like 1/(1-r) on the pole kind)."""
    branch_sign = _check_sign(branch_sign)
    r = check_r(r)
    if np.any(r >= 1.0):
        raise Singularity("w = y1/y0 is unbounded at r = 1 on the pole kind; use first_order")
    pole = _is_pole_kind(branch_sign, which)
    w = branch_sign * _w_regular_part(schedule, pole, r, spec) + first_order_constant(schedule, branch_sign, which, convention)
    if pole:
        w = w + branch_sign * 1j / schedule.c_alpha * (1.0 / (1.0 - r) - 1.0)
    return np.asarray(w)[()]


def first_order_ratio_derivative(schedule: Schedule, branch_sign: int, which: Amplitude, r: ArrayLike) -> ArrayLike:
    branch_sign = _check_sign(branch_sign)
    r = check_r(r)
    pole = _is_pole_kind(branch_sign, which)
    dw = _w_prime_unsigned(schedule, pole, r)
    if pole:
        with np.errstate(divide="ignore"):
            dw = dw + 1j / (schedule.c_alpha * (1.0 - r) ** 2)
    return np.asarray(branch_sign * dw)[()]


def first_order(problem: TwoLevelProblem, schedule: Schedule, branch_sign: int, which: Amplitude, r: ArrayLike,
                convention: WkbConvention = WkbConvention.UNIT,
                spec: Optional[QuadratureSpec] = None) -> ArrayLike:
    """
    First-order correction y1 = w y0 on all of [0, 1].

    On the pole kind the 1/(1-r) growth of w is integrated analytically, so that
    y1 = sign i r / c_alpha * d * y0~ + (w_reg + w(0)) y0 stays finite at r = 1.
    """
    branch_sign = _check_sign(branch_sign)
    r = check_r(r)
    if schedule.problem != problem:
        raise ValueError("Schedule was built for a different problem")
    pole = _is_pole_kind(branch_sign, which)
    y0 = transport_zeroth(problem, branch_sign, which, r, convention)
    w_reg = branch_sign * _w_regular_part(schedule, pole, r, spec) + first_order_constant(schedule, branch_sign, which, convention)
    y1 = w_reg * y0
    if pole:
        d = transport_constant(problem, True, convention)
        y1 = y1 + branch_sign * 1j / schedule.c_alpha * r * d * _reduced_pole_amplitude(problem, r)
    return np.asarray(y1)[()]


# ---------------------------------------------------------------------------
# Assembly and evaluation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WkbSolution:
    order: int
    problem: TwoLevelProblem
    schedule: Schedule
    t_f: float
    coefficients: Dict[str, Tuple[complex, complex]]
    renormalized: bool = False
    convention: WkbConvention = WkbConvention.UNIT
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)

    @property
    def eps(self) -> float:
        return 1.0 / self.t_f

    @property
    def label(self) -> str:
        return f"{'r' if self.renormalized else ''}wkb{self.order}"


def _branch_series(problem: TwoLevelProblem, schedule: Schedule, order: int, sign: int, which: Amplitude,
                   r: np.ndarray, eps: float, convention: WkbConvention, spec: QuadratureSpec) -> np.ndarray:
    """y0 + eps y1 (order 1) or y0 (order 0)."""
    y0 = transport_zeroth(problem, sign, which, r, convention)
    if order == 0:
        return np.asarray(y0, dtype=complex)
    return y0 + eps * first_order(problem, schedule, sign, which, r, convention, spec)


def _branch_derivatives(sol_like, sign: int, which: Amplitude, r: np.ndarray, with_second: bool = False):
    """
    Truncated-series values of Y = e^{theta/eps}(y0 + eps y1) and its r-derivatives.

    Uses y0' = L y0, y0'' = (L' + L^2) y0, y1' = (w' + w L) y0 and
    y1'' = (w'' + 2 w' L + w (L' + L^2)) y0, with w'' by central differences.
    """
    problem, schedule, order, eps, convention, spec = sol_like
    pole = _is_pole_kind(sign, which)
    y0 = transport_zeroth(problem, sign, which, r, convention)
    L, dL = _log_derivative(problem, pole, r)
    theta = eikonal_theta(schedule, sign, r)
    th1 = eikonal_theta_prime(schedule, sign, r)
    dy0 = L * y0
    if order == 1:
        w = first_order_ratio(schedule, sign, which, r, convention, spec)
        dw = first_order_ratio_derivative(schedule, sign, which, r)
        u = y0 + eps * w * y0
        du = dy0 + eps * (dw + w * L) * y0
    else:
        w = dw = 0.0
        u = np.asarray(y0, dtype=complex)
        du = np.asarray(dy0, dtype=complex)
    e = phase_factor(theta, 1.0 / eps)
    Y = e * u
    dY = e * (th1 / eps * u + du)
    if not with_second:
        return Y, dY, None

    th2 = eikonal_theta_second(schedule, sign, r)
    ddy0 = (dL + L * L) * y0
    if order == 1:
        rp = np.minimum(r + FD_STEP, 1.0 - ENDPOINT_CLAMP)
        rm = np.maximum(r - FD_STEP, 0.0)
        ddw = (first_order_ratio_derivative(schedule, sign, which, rp)
               - first_order_ratio_derivative(schedule, sign, which, rm)) / (rp - rm)
        ddu = ddy0 + eps * (ddw + 2.0 * dw * L + w * (dL + L * L)) * y0
    else:
        ddu = ddy0
    ddY = e * ((th2 / eps + (th1 / eps) ** 2) * u + 2.0 * (th1 / eps) * du + ddu)
    return Y, dY, ddY


def assemble(problem: TwoLevelProblem, schedule: Schedule, t_f: float, order: int,
             renormalized: bool = False, convention: WkbConvention = WkbConvention.UNIT,
             spec: Optional[QuadratureSpec] = None) -> WkbSolution:
    """
    Fix the branch coefficients (A, B) of psi and phi from the boundary data at r = 0.

    Each amplitude gives a 2x2 system [[Y+(0), Y-(0)], [Y+'(0), Y-'(0)]] (A, B) = (value, 0),
    with the derivative row built from the truncated series at the same order.
    """
    if order not in (0, 1):
        raise ValueError(f"WKB order must be 0 or 1, got {order}")
    if not t_f > 0:
        raise DomainError(f"t_f must be positive, got {t_f}")
    if schedule.problem != problem:
        raise ValueError("Schedule was built for a different problem")
    convention = WkbConvention(convention)
    spec = spec or QuadratureSpec()
    if convention is WkbConvention.CLOSED_FORM and order == 1:
        first_order_constant(schedule, 1, Amplitude.PSI, convention)

    eps = 1.0 / t_f
    boundary = initial_state(problem)
    origin = np.array([0.0])
    coefficients = {}
    for which, value in ((Amplitude.PSI, boundary.psi), (Amplitude.PHI, boundary.phi)):
        columns = []
        for sign in (1, -1):
            Y, dY, _ = _branch_derivatives((problem, schedule, order, eps, convention, spec), sign, which, origin)
            columns.append((Y[0], dY[0]))
        M = np.array([[columns[0][0], columns[1][0]], [columns[0][1], columns[1][1]]], dtype=complex)
        cond = np.linalg.cond(M)
        if not np.isfinite(cond) or cond > SINGULAR_CONDITION:
            raise SingularSystem(f"Boundary system for {which.value} is singular (cond={cond:.3e}) "
                                 f"at n={problem.n} alpha={schedule.alpha} t_f={t_f}")
        A, B = np.linalg.solve(M, np.array([value, 0.0], dtype=complex))
        coefficients[which.value] = (complex(A), complex(B))

    logger.debug(f"Assembled wkb{order} n={problem.n} alpha={schedule.alpha} t_f={t_f}: {coefficients}")
    return WkbSolution(order=order, problem=problem, schedule=schedule, t_f=float(t_f),
                       coefficients=coefficients, renormalized=renormalized,
                       convention=convention, quadrature=spec)


def evaluate_states(sol: WkbSolution, r: ArrayLike) -> np.ndarray:
    """(psi, phi) rows for each r, shape (len(r), 2)."""
    r = np.atleast_1d(check_r(r))
    eps = sol.eps
    out = np.empty((r.size, 2), dtype=complex)
    for col, which in enumerate((Amplitude.PSI, Amplitude.PHI)):
        A, B = sol.coefficients[which.value]
        total = np.zeros(r.size, dtype=complex)
        for coeff, sign in ((A, 1), (B, -1)):
            series = _branch_series(sol.problem, sol.schedule, sol.order, sign, which, r, eps,
                                    sol.convention, sol.quadrature)
            total += coeff * phase_factor(eikonal_theta(sol.schedule, sign, r), sol.t_f) * series
        out[:, col] = total
    if sol.renormalized:
        out /= np.sqrt(np.sum(np.abs(out) ** 2, axis=1))[:, None]
    return out


def evaluate(sol: WkbSolution, r: float) -> State2:
    return State2.from_array(evaluate_states(sol, r)[0])


def wkb_trajectory(sol: WkbSolution, grid: Optional[Sequence[float]] = None) -> Trajectory:
    r_grid = validate_grid(grid if grid is not None else default_grid())
    return Trajectory(problem=sol.problem, schedule=sol.schedule, t_f=sol.t_f, r=r_grid,
                      s=np.asarray(schedule_s(sol.schedule, r_grid), dtype=float),
                      states=evaluate_states(sol, r_grid), backend=sol.label)


# ---------------------------------------------------------------------------
# Diagnostics
# ---------------------------------------------------------------------------

def _second_order_residual(problem: TwoLevelProblem, schedule: Schedule, which: Amplitude, eps: float,
                           r: np.ndarray, Y: np.ndarray, dY: np.ndarray, ddY: np.ndarray) -> np.ndarray:
    """
    Residual of the decoupled second-order equation for one amplitude:

        D^2 Y - D Y + det(H) Y - (i eps/g) [a' Y + (b'/b)(D Y - a Y)] = 0,   D = (i eps/g) d/dr,

    with a = H00 for psi and a = H11 for phi.
    """
    K = problem.K
    g = schedule_g(schedule, r)
    G = schedule_log_deriv(schedule, r)
    H00, H01, H11 = hamiltonian_entries(problem, r)
    det = 0.25 * (1.0 - gap(problem, r) ** 2)
    if Amplitude(which) is Amplitude.PSI:
        a, da = H00, -K / (K + 1.0)
    else:
        a, da = H11, K / (K + 1.0)
    db_over_b = -1.0 / (1.0 - r)
    DY = 1j * eps / g * dY
    D2Y = -(eps / g) ** 2 * (ddY - G * dY)
    return D2Y - DY + det * Y - 1j * eps / g * (da * Y + db_over_b * (DY - a * Y))


def branch_residual(problem: TwoLevelProblem, schedule: Schedule, t_f: float, order: int,
                    branch_sign: int, which: Amplitude, r: ArrayLike,
                    convention: WkbConvention = WkbConvention.UNIT) -> np.ndarray:
    """Residual of a single branch basis function; scales as eps^(order+2)."""
    r = np.atleast_1d(check_r(r))
    if np.any(r >= 1.0):
        raise Singularity("Second-order equations are singular at r = 1")
    eps = 1.0 / t_f
    ctx = (problem, schedule, order, eps, WkbConvention(convention), QuadratureSpec())
    Y, dY, ddY = _branch_derivatives(ctx, _check_sign(branch_sign), which, r, with_second=True)
    return _second_order_residual(problem, schedule, which, eps, r, Y, dY, ddY)


def ode_residual(sol: WkbSolution, which: Amplitude, r: ArrayLike) -> np.ndarray:
    """Residual of the assembled (un-renormalized) approximant in its second-order equation."""
    r = np.atleast_1d(check_r(r))
    if np.any(r >= 1.0):
        raise Singularity("Second-order equations are singular at r = 1")
    Y, dY, ddY = _assembled_derivatives(sol, which, r, with_second=True)
    return _second_order_residual(sol.problem, sol.schedule, which, sol.eps, r, Y, dY, ddY)


def _assembled_derivatives(sol: WkbSolution, which: Amplitude, r: np.ndarray, with_second: bool = False):
    ctx = (sol.problem, sol.schedule, sol.order, sol.eps, sol.convention, sol.quadrature)
    A, B = sol.coefficients[Amplitude(which).value]
    Yp, dYp, ddYp = _branch_derivatives(ctx, 1, which, r, with_second)
    Ym, dYm, ddYm = _branch_derivatives(ctx, -1, which, r, with_second)
    dd = A * ddYp + B * ddYm if with_second else None
    return A * Yp + B * Ym, A * dYp + B * dYm, dd


def phi_from_psi(sol: WkbSolution, r: ArrayLike) -> np.ndarray:
    """
    phi obtained by inserting the psi approximant into i eps psi' = g (H00 psi + H01 phi).

    H01 vanishes at r = 1, so the construction amplifies any error in psi' there.
    """
    r = np.atleast_1d(check_r(r))
    if np.any(r >= 1.0):
        raise Singularity("phi cannot be recovered from psi at r = 1")
    psi, dpsi, _ = _assembled_derivatives(sol, Amplitude.PSI, r)
    H00, H01, _ = hamiltonian_entries(sol.problem, r)
    g = schedule_g(sol.schedule, r)
    return (1j * sol.eps * dpsi / g - H00 * psi) / H01


def closed_form_n1(branch_sign: int, which: Amplitude, r: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
    """
    n = 1, constant-schedule closed forms (y0, y1) with unit amplitudes at r = 0.

    psi_0^+ = (1-r)/sqrt(Delta (r+Delta)), psi_0^- = sqrt((r+Delta)/Delta),
    w_psi^{+-} = +-i Q_{+-} / (12 (1-r) Delta^3), w_phi^{+-} = +-i Q_{-+} / (12 (1-r) Delta^3),
    Q_{+-} = 16r^4 - 40r^3 + 42r^2 - 17r + 5 +- 6 Delta.
    """
    branch_sign = _check_sign(branch_sign)
    r = check_r(r)
    if np.any(r >= 1.0):
        raise Singularity("Closed forms are evaluated on [0, 1)")
    delta = np.sqrt(1.0 - 2.0 * r * (1.0 - r))
    h = 1.0 - r
    if _is_pole_kind(branch_sign, which):
        y0 = h / np.sqrt(delta * (r + delta))
    else:
        y0 = np.sqrt((r + delta) / delta)
    q_sign = branch_sign if Amplitude(which) is Amplitude.PSI else -branch_sign
    Q = 16 * r ** 4 - 40 * r ** 3 + 42 * r ** 2 - 17 * r + 5 + q_sign * 6 * delta
    w = branch_sign * 1j * Q / (12.0 * h * delta ** 3)
    return np.asarray(y0)[()], np.asarray(w * y0)[()]
