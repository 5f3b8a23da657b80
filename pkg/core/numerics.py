"""
Shared numerical kernels: adaptive quadrature, cumulative integrals, the
adaptive Runge-Kutta integrator for complex linear systems, and line fitting.
"""
import logging
import warnings
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import IntegrationWarning, quad, solve_ivp

from core.models import LineFit, OdeSpec, QuadratureSpec

logger = logging.getLogger(__name__)


class NonConvergence(Exception):
    """Adaptive quadrature exhausted its subdivision budget."""


class StepFailure(Exception):
    """The ODE integrator could not complete (step underflow or step budget exhausted)."""


class DegenerateInput(Exception):
    """A line fit was requested with fewer than two distinct abscissae."""


def _quad_real(f: Callable[[float], float], a: float, b: float, spec: QuadratureSpec) -> Tuple[float, float]:
    with warnings.catch_warnings():
        warnings.simplefilter("error", IntegrationWarning)
        try:
            value, err = quad(
                f, a, b,
                epsabs=spec.abs_tol,
                epsrel=spec.rel_tol,
                limit=spec.max_subdivisions,
            )
        except IntegrationWarning as e:
            raise NonConvergence(f"Quadrature on [{a}, {b}] did not converge: {e}") from e
    return value, err


def integrate(f: Callable[[float], complex], a: float, b: float,
              spec: Optional[QuadratureSpec] = None) -> Tuple[complex, float]:
    """
    Adaptive Gauss-Kronrod quadrature of a real- or complex-valued f over [a, b].

    Complex integrands are split into real and imaginary parts.

    Returns:
        (value, error_estimate)
    """
    spec = spec or QuadratureSpec()
    if a == b:
        return 0.0, 0.0
    probe = f(0.5 * (a + b))
    if np.iscomplexobj(probe):
        re, err_re = _quad_real(lambda x: float(np.real(f(x))), a, b, spec)
        im, err_im = _quad_real(lambda x: float(np.imag(f(x))), a, b, spec)
        value, err = complex(re, im), float(np.hypot(err_re, err_im))
    else:
        value, err = _quad_real(lambda x: float(f(x)), a, b, spec)
    if err > max(spec.abs_tol, spec.rel_tol * abs(value)):
        logger.warning(f"Quadrature error estimate {err:.3e} above tolerance on [{a}, {b}]")
    return value, err


def cumulative_integral(f: Callable[[float], complex], points: Sequence[float],
                        spec: Optional[QuadratureSpec] = None, start: float = 0.0) -> np.ndarray:
    """
    Integral of f from `start` to each of `points` (any order, duplicates allowed).

    Adjacent sorted points share work: each interval is integrated once and the
    pieces are summed.
    """
    spec = spec or QuadratureSpec()
    pts = np.asarray(points, dtype=float)
    flat = pts.ravel()
    order = np.argsort(flat, kind="stable")
    sorted_pts = flat[order]

    pieces = []
    left = start
    for right in sorted_pts:
        value, _ = integrate(f, left, float(right), spec)
        pieces.append(value)
        left = float(right)

    is_complex = any(isinstance(v, complex) for v in pieces)
    totals = np.cumsum(np.asarray(pieces, dtype=complex if is_complex else float))
    out = np.empty_like(totals)
    out[order] = totals
    return out.reshape(pts.shape)


def solve_ode(rhs: Callable[[float, np.ndarray], np.ndarray], y0, r_span: Tuple[float, float],
              spec: Optional[OdeSpec] = None, output_grid: Optional[Sequence[float]] = None) -> np.ndarray:
    """
    Integrate a complex ODE system with the DOP853 embedded Runge-Kutta pair.

    Args:
        rhs: right-hand side f(r, y)
        y0: initial state at r_span[0]
        r_span: (start, end)
        spec: tolerances and step budget
        output_grid: points at which to report the solution; defaults to the end point

    Returns:
        Array of shape (len(output_grid), len(y0)).
    """
    spec = spec or OdeSpec()
    y0 = np.asarray(y0, dtype=complex)
    grid = np.asarray(output_grid if output_grid is not None else [r_span[1]], dtype=float)

    # DOP853 uses 12 stages per step
    max_evals = 12 * spec.max_steps + 1
    calls = {"count": 0}

    def counted_rhs(r, y):
        calls["count"] += 1
        if calls["count"] > max_evals:
            raise StepFailure(f"Step budget of {spec.max_steps} exhausted at r={r:.6g}")
        return rhs(r, y)

    result = solve_ivp(
        counted_rhs,
        r_span,
        y0,
        method="DOP853",
        t_eval=grid,
        rtol=spec.rel_tol,
        atol=spec.abs_tol,
        first_step=spec.initial_step,
    )
    if result.status < 0:
        raise StepFailure(f"Integrator failed: {result.message}")
    logger.debug(f"solve_ode: {result.nfev} evaluations, {len(grid)} output points")
    return result.y.T.copy()


def fit_line(xs: Sequence[float], ys: Sequence[float]) -> LineFit:
    """Ordinary least-squares line with coefficient of determination."""
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape:
        raise DegenerateInput(f"Mismatched lengths: {x.size} abscissae vs {y.size} ordinates")
    if np.unique(x).size < 2:
        raise DegenerateInput("Line fit needs at least two distinct abscissae")

    slope, intercept = np.polyfit(x, y, 1)
    residuals = y - (slope * x + intercept)
    ss_res = float(np.sum(residuals ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        r_squared = 1.0
    else:
        r_squared = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return LineFit(slope=float(slope), intercept=float(intercept), r_squared=r_squared)
