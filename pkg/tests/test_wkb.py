import numpy as np
import pytest

from core.exact import default_grid, evolve_exact
from core.metrics import time_avg_distance, _trace_distance_arrays
from core.schedule import Schedule, schedule_s
from core.twolevel import TwoLevelProblem
from core.wkb import (
    Amplitude,
    Singularity,
    WkbConvention,
    assemble,
    branch_residual,
    closed_form_n1,
    eikonal_theta,
    eikonal_theta_prime,
    eikonal_theta_second,
    evaluate,
    evaluate_states,
    first_order,
    first_order_ratio,
    first_order_ratio_derivative,
    phi_from_psi,
    transport_log_deriv,
    transport_zeroth,
    wkb_trajectory,
)

BRANCHES = [(1, Amplitude.PSI), (-1, Amplitude.PSI), (1, Amplitude.PHI), (-1, Amplitude.PHI)]


# ---------------------------------------------------------------------------
# Eikonal phases
# ---------------------------------------------------------------------------

def test_theta_examples(constant_schedule):
    for sign in (1, -1):
        assert eikonal_theta(constant_schedule, sign, 0.0) == 0
    assert eikonal_theta(constant_schedule, -1, 1.0) == pytest.approx(-0.094194j, abs=1e-6)
    assert eikonal_theta(constant_schedule, 1, 1.0) == pytest.approx(-0.5j * 1.811612, abs=1e-6)


@pytest.mark.parametrize("n", range(1, 7))
def test_theta_branch_sum_identity(alpha, n):
    sched = Schedule(TwoLevelProblem(n), alpha)
    r = np.linspace(0, 1, 101)
    total = eikonal_theta(sched, 1, r) + eikonal_theta(sched, -1, r)
    np.testing.assert_allclose(total, -1j * schedule_s(sched, r), atol=1e-9)
    assert np.all(np.real(eikonal_theta(sched, 1, r)) == 0)


def test_theta_derivatives_match_finite_differences(alpha):
    sched = Schedule(TwoLevelProblem(3), alpha)
    h = 1e-5
    r = np.linspace(0.05, 0.95, 10)
    for sign in (1, -1):
        fd = (eikonal_theta(sched, sign, r + h) - eikonal_theta(sched, sign, r - h)) / (2 * h)
        np.testing.assert_allclose(eikonal_theta_prime(sched, sign, r), fd, atol=1e-7)
        fd2 = (eikonal_theta_prime(sched, sign, r + h) - eikonal_theta_prime(sched, sign, r - h)) / (2 * h)
        np.testing.assert_allclose(eikonal_theta_second(sched, sign, r), fd2, rtol=1e-6, atol=1e-6)


# ---------------------------------------------------------------------------
# Transport amplitudes
# ---------------------------------------------------------------------------

def test_transport_examples():
    for n in (1, 3, 7):
        assert transport_zeroth(TwoLevelProblem(n), 1, Amplitude.PSI, 1.0) == 0.0
        assert transport_zeroth(TwoLevelProblem(n), -1, Amplitude.PHI, 1.0) == 0.0
    single = TwoLevelProblem(1)
    for sign in (1, -1):
        value = transport_zeroth(single, sign, Amplitude.PSI, 0.0, WkbConvention.CLOSED_FORM)
        assert value == pytest.approx(1.0, abs=1e-14)
    assert transport_zeroth(TwoLevelProblem(2), -1, Amplitude.PSI, 0.0) == pytest.approx(1.0, abs=1e-14)


def test_transport_symmetry_between_amplitudes():
    problem = TwoLevelProblem(4)
    r = np.linspace(0, 1, 21)
    np.testing.assert_allclose(transport_zeroth(problem, -1, Amplitude.PHI, r),
                               transport_zeroth(problem, 1, Amplitude.PSI, r))
    np.testing.assert_allclose(transport_zeroth(problem, 1, Amplitude.PHI, r),
                               transport_zeroth(problem, -1, Amplitude.PSI, r))


def test_transport_is_finite_and_positive_inside():
    for n in (1, 5, 12):
        r = np.linspace(0, 0.999, 500)
        for sign, which in BRANCHES:
            y0 = transport_zeroth(TwoLevelProblem(n), sign, which, r)
            assert np.all(np.isfinite(y0)) and np.all(y0 > 0)


def test_log_deriv_examples():
    single = TwoLevelProblem(1)
    assert transport_log_deriv(single, -1, Amplitude.PSI, 0.0) == pytest.approx(0.5)
    assert transport_log_deriv(single, 1, Amplitude.PSI, 0.0) == pytest.approx(-0.5)


@pytest.mark.parametrize("sign,which", BRANCHES)
def test_log_deriv_matches_finite_differences(sign, which):
    problem = TwoLevelProblem(3)
    h = 1e-5
    for r in (0.3, 0.5, 0.62):
        fd = (np.log(transport_zeroth(problem, sign, which, r + h))
              - np.log(transport_zeroth(problem, sign, which, r - h))) / (2 * h)
        assert transport_log_deriv(problem, sign, which, r) == pytest.approx(fd, abs=1e-6)


def test_log_deriv_singular_at_end():
    with pytest.raises(Singularity):
        transport_log_deriv(TwoLevelProblem(2), 1, Amplitude.PSI, 1.0)
    with pytest.raises(Singularity):
        transport_log_deriv(TwoLevelProblem(2), -1, Amplitude.PSI, np.array([0.5, 1.0]))


# ---------------------------------------------------------------------------
# First-order corrections
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("sign,which", BRANCHES)
def test_first_order_vanishes_at_start(sign, which):
    sched = Schedule(TwoLevelProblem(3), 2)
    assert first_order_ratio(sched, sign, which, 0.0) == 0
    assert first_order(sched.problem, sched, sign, which, 0.0) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("sign,which", BRANCHES)
def test_first_order_finite_at_end(alpha, sign, which):
    sched = Schedule(TwoLevelProblem(4), alpha)
    y1 = first_order(sched.problem, sched, sign, which, np.array([0.9, 0.999, 1.0]))
    assert np.all(np.isfinite(y1))
    assert abs(y1[2] - y1[1]) < 0.05 * (1.0 + abs(y1[2]))


def test_first_order_ratio_singular_at_end():
    sched = Schedule(TwoLevelProblem(2), 0)
    with pytest.raises(Singularity):
        first_order_ratio(sched, 1, Amplitude.PSI, 1.0)


@pytest.mark.parametrize("sign,which", BRANCHES)
def test_first_order_ratio_derivative_matches_finite_differences(sign, which):
    sched = Schedule(TwoLevelProblem(2), 1)
    h = 1e-3
    for r in (0.2, 0.5, 0.8):
        fd = (first_order_ratio(sched, sign, which, r + h) - first_order_ratio(sched, sign, which, r - h)) / (2 * h)
        dw = first_order_ratio_derivative(sched, sign, which, r)
        assert abs(dw - fd) < 1e-4 * (1.0 + abs(dw))


@pytest.mark.parametrize("sign,which", BRANCHES)
def test_single_qubit_closed_forms(single_qubit, constant_schedule, sign, which):
    r = np.linspace(0, 0.99, 100)
    y0_closed, y1_closed = closed_form_n1(sign, which, r)
    y0 = transport_zeroth(single_qubit, sign, which, r, WkbConvention.CLOSED_FORM)
    y1 = first_order(single_qubit, constant_schedule, sign, which, r, WkbConvention.CLOSED_FORM)
    np.testing.assert_allclose(y0, y0_closed, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(y1, y1_closed, rtol=1e-8, atol=1e-8)


def test_closed_form_constants_need_single_qubit_constant_schedule():
    problem = TwoLevelProblem(2)
    with pytest.raises(ValueError):
        assemble(problem, Schedule(problem, 0), 20.0, 1, convention=WkbConvention.CLOSED_FORM)
    # order 0 does not use the first-order constants
    assemble(problem, Schedule(problem, 0), 20.0, 0, convention=WkbConvention.CLOSED_FORM)


# ---------------------------------------------------------------------------
# Residuals of the second-order equations
# ---------------------------------------------------------------------------

def _residual_ratio(problem, sched, order, sign, which, t_f):
    r = np.array([0.15, 0.35, 0.55, 0.75])
    coarse = np.max(np.abs(branch_residual(problem, sched, t_f, order, sign, which, r)))
    fine = np.max(np.abs(branch_residual(problem, sched, 2 * t_f, order, sign, which, r)))
    return coarse / fine


@pytest.mark.parametrize("n,alpha_", [(1, 0), (3, 2)])
@pytest.mark.parametrize("sign,which", BRANCHES)
def test_residual_order_zero_scales_as_eps_squared(n, alpha_, sign, which):
    problem = TwoLevelProblem(n)
    ratio = _residual_ratio(problem, Schedule(problem, alpha_), 0, sign, which, 100.0)
    assert 3.2 < ratio < 4.8


@pytest.mark.parametrize("n,alpha_", [(1, 0), (3, 2)])
@pytest.mark.parametrize("sign,which", BRANCHES)
def test_residual_order_one_scales_as_eps_cubed(n, alpha_, sign, which):
    problem = TwoLevelProblem(n)
    ratio = _residual_ratio(problem, Schedule(problem, alpha_), 1, sign, which, 100.0)
    assert 6.0 < ratio < 10.0


# ---------------------------------------------------------------------------
# Assembled approximants
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("order", [0, 1])
def test_boundary_conditions(order):
    problem = TwoLevelProblem(2)
    sol = assemble(problem, Schedule(problem, 2), 30.0, order)
    state = evaluate(sol, 0.0)
    assert state.psi == pytest.approx(0.5, abs=1e-10)
    assert state.phi == pytest.approx(np.sqrt(3) / 2, abs=1e-10)
    assert state.norm() == pytest.approx(1.0, abs=1e-10)


def test_order_zero_excited_population_tail(single_qubit, constant_schedule):
    for t_f in (10.0, 100.0, 1000.0):
        state = evaluate(assemble(single_qubit, constant_schedule, t_f, 0), 1.0)
        assert 4 * t_f ** 2 * abs(state.phi) ** 2 == pytest.approx(t_f ** 2 / (1 + t_f ** 2), rel=1e-8)


def test_renormalized_norm_is_one(alpha):
    problem = TwoLevelProblem(5)
    sol = assemble(problem, Schedule(problem, alpha), 40.0, 0, renormalized=True)
    states = evaluate_states(sol, default_grid(101))
    np.testing.assert_allclose(np.linalg.norm(states, axis=1), 1.0, atol=1e-12)
    assert sol.label == "rwkb0"


def test_first_order_solution_finite_at_end(alpha):
    problem = TwoLevelProblem(3)
    sol = assemble(problem, Schedule(problem, alpha), 25.0, 1)
    traj = wkb_trajectory(sol, default_grid(201))
    assert np.all(np.isfinite(traj.states))
    assert traj.backend == "wkb1"


def test_conventions_agree_to_second_order(single_qubit, constant_schedule):
    grid = default_grid(201)

    def gap_between(t_f):
        unit = evaluate_states(assemble(single_qubit, constant_schedule, t_f, 1), grid)
        closed = evaluate_states(assemble(single_qubit, constant_schedule, t_f, 1,
                                          convention=WkbConvention.CLOSED_FORM), grid)
        return np.max(_trace_distance_arrays(unit, closed))

    ratio = gap_between(50.0) / gap_between(100.0)
    assert 3.0 < ratio < 5.0


def test_first_order_beats_zeroth_order(single_qubit, constant_schedule):
    grid = default_grid(401)
    exact = evolve_exact(single_qubit, constant_schedule, 50.0, grid)
    d0 = time_avg_distance(wkb_trajectory(assemble(single_qubit, constant_schedule, 50.0, 0), grid),
                           exact, constant_schedule)
    d1 = time_avg_distance(wkb_trajectory(assemble(single_qubit, constant_schedule, 50.0, 1), grid),
                           exact, constant_schedule)
    assert d1 < d0
    assert d1 < 1e-2


def test_zeroth_order_improves_with_time(single_qubit, constant_schedule):
    grid = default_grid(401)

    def avg(t_f):
        exact = evolve_exact(single_qubit, constant_schedule, t_f, grid)
        approx = wkb_trajectory(assemble(single_qubit, constant_schedule, t_f, 0), grid)
        return time_avg_distance(approx, exact, constant_schedule)

    assert avg(200.0) < avg(50.0)


def test_direct_phi_beats_phi_from_psi(single_qubit, constant_schedule):
    # the direct phi approximant beats substituting psi into the psi equation
    inner = np.linspace(0.01, 0.999, 300)
    grid = np.concatenate([[0.0], inner, [1.0]])
    phi_exact = evolve_exact(single_qubit, constant_schedule, 50.0, grid).states[1:-1, 1]
    for order in (0, 1):
        sol = assemble(single_qubit, constant_schedule, 50.0, order)
        direct = np.max(np.abs(evaluate_states(sol, inner)[:, 1] - phi_exact))
        substituted = np.max(np.abs(phi_from_psi(sol, inner) - phi_exact))
        assert direct < substituted
    with pytest.raises(Singularity):
        phi_from_psi(sol, 1.0)


def test_invalid_assembly_arguments(single_qubit, constant_schedule):
    with pytest.raises(ValueError):
        assemble(single_qubit, constant_schedule, 10.0, 2)
    with pytest.raises(ValueError):
        assemble(single_qubit, constant_schedule, -1.0, 0)
    with pytest.raises(ValueError):
        assemble(TwoLevelProblem(2), constant_schedule, 10.0, 0)
