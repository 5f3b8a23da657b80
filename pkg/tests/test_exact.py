import numpy as np
import pytest
from scipy.linalg import expm

from core.exact import DEFAULT_GRID_POINTS, default_grid, evolve_exact, final_state_exact, validate_grid
from core.schedule import Schedule, schedule_g
from core.twolevel import DomainError, TwoLevelProblem, hamiltonian, initial_state


@pytest.mark.parametrize("n,alpha,t_f", [(1, 0, 3.0), (2, 2, 30.0), (5, 3, 10.0)])
def test_starts_from_uniform_superposition(n, alpha, t_f):
    problem = TwoLevelProblem(n)
    traj = evolve_exact(problem, Schedule(problem, alpha), t_f, default_grid(51))
    np.testing.assert_array_equal(traj.states[0], initial_state(problem).as_array())
    assert traj.r[0] == 0.0 and traj.s[0] == 0.0


@pytest.mark.parametrize("n,alpha,t_f", [(1, 0, 50.0), (4, 2, 40.0), (6, 1, 200.0), (3, 3, 2000.0)])
def test_unitarity(n, alpha, t_f):
    problem = TwoLevelProblem(n)
    traj = evolve_exact(problem, Schedule(problem, alpha), t_f)
    assert len(traj) == DEFAULT_GRID_POINTS
    assert np.max(np.abs(traj.norms - 1.0)) < 1e-8


def test_final_norm_single_qubit(single_qubit, constant_schedule):
    state = final_state_exact(single_qubit, constant_schedule, 50.0)
    assert state.norm() == pytest.approx(1.0, abs=1e-9)


def test_final_state_matches_dense_trajectory():
    problem = TwoLevelProblem(3)
    sched = Schedule(problem, 2)
    dense = evolve_exact(problem, sched, 25.0).final.as_array()
    alone = final_state_exact(problem, sched, 25.0).as_array()
    np.testing.assert_allclose(dense, alone, atol=1e-8)


def test_matches_exponential_midpoint_propagator():
    problem = TwoLevelProblem(2)
    sched = Schedule(problem, 1)
    t_f = 5.0
    steps = 4000
    edges = np.linspace(0.0, 1.0, steps + 1)
    state = initial_state(problem).as_array()
    for left, right in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (left + right)
        generator = t_f * float(schedule_g(sched, mid)) * hamiltonian(problem, mid) * (right - left)
        state = expm(-1j * generator) @ state
    exact = final_state_exact(problem, sched, t_f).as_array()
    np.testing.assert_allclose(exact, state, atol=1e-5)


def test_slow_evolution_stays_near_ground_state():
    problem = TwoLevelProblem(2)
    sched = Schedule(problem, 2)
    final = final_state_exact(problem, sched, 500.0)
    assert abs(final.psi) ** 2 > 0.99


def test_grid_validation():
    with pytest.raises(DomainError):
        validate_grid([0.0, 0.5])
    with pytest.raises(DomainError):
        validate_grid([0.1, 1.0])
    with pytest.raises(DomainError):
        validate_grid([0.0, 0.6, 0.4, 1.0])
    with pytest.raises(DomainError):
        default_grid(1)
    with pytest.raises(DomainError):
        evolve_exact(TwoLevelProblem(1), Schedule(TwoLevelProblem(1), 0), 0.0)


def test_trajectory_accessors(single_qubit, constant_schedule):
    traj = evolve_exact(single_qubit, constant_schedule, 10.0, default_grid(11))
    rows = list(traj.rows)
    assert len(rows) == 11
    r, s, state = rows[-1]
    assert r == 1.0 and s == pytest.approx(1.0)
    assert traj.pop_marked[-1] == pytest.approx(abs(state.psi) ** 2)
    assert traj.final == traj.state(10)
