"""
Grover search restricted to the two-dimensional {|m>, |m_perp>} subspace.

Everything here is a pure function of the interpolation parameter r in [0, 1].
Inputs may be Python floats or numpy arrays; array inputs are evaluated
element-wise and scalar inputs return numpy scalars.
"""
import logging
from dataclasses import dataclass
from typing import Union

import numpy as np

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


class DomainError(ValueError):
    """Raised when r leaves [0, 1] or the problem size is not a positive integer."""


@dataclass(frozen=True)
class TwoLevelProblem:
    """Grover problem on n qubits, reduced to the marked / unmarked pair."""
    n: int

    def __post_init__(self):
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 1:
            raise DomainError(f"Problem size must be a positive integer, got n={self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def K(self) -> int:
        """Number of unmarked states."""
        return 2 ** self.n - 1

    @property
    def min_gap(self) -> float:
        return 1.0 / np.sqrt(self.K + 1)


@dataclass(frozen=True)
class State2:
    """Amplitude pair (psi, phi) on the {|m>, |m_perp>} basis. Not necessarily normalized."""
    psi: complex
    phi: complex

    @classmethod
    def from_array(cls, vec) -> "State2":
        return cls(psi=complex(vec[0]), phi=complex(vec[1]))

    def as_array(self) -> np.ndarray:
        return np.array([self.psi, self.phi], dtype=complex)

    def norm(self) -> float:
        return float(np.sqrt(abs(self.psi) ** 2 + abs(self.phi) ** 2))


@dataclass(frozen=True)
class Spectrum:
    e_gs: float
    e_exc: float
    v_gs: np.ndarray
    v_exc: np.ndarray


def check_r(r: ArrayLike) -> np.ndarray:
    """Validate r against [0, 1] and return it as a float array."""
    arr = np.asarray(r, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError(f"r must lie in [0, 1], got {r!r}")
    return arr


def _gap_coefficients(problem: TwoLevelProblem):
    # Delta^2 = A + c*u^2 with u = r - 1/2
    K = problem.K
    return 1.0 / (K + 1), 4.0 * K / (K + 1)


def hamiltonian(problem: TwoLevelProblem, r: float) -> np.ndarray:
    """Real symmetric 2x2 Hamiltonian H(r) with trace 1."""
    r = float(check_r(r))
    K = problem.K
    a = (1.0 - r) * K / (K + 1)
    b = -(1.0 - r) * np.sqrt(K) / (K + 1)
    return np.array([[a, b], [b, 1.0 - a]])


def hamiltonian_entries(problem: TwoLevelProblem, r: ArrayLike):
    """Vectorized (H00, H01, H11) without domain checking, for solver inner loops."""
    K = problem.K
    h = 1.0 - np.asarray(r, dtype=float)
    a = h * K / (K + 1)
    b = -h * np.sqrt(K) / (K + 1)
    return a, b, 1.0 - a


def gap(problem: TwoLevelProblem, r: ArrayLike) -> ArrayLike:
    """Spectral gap Delta(r) = sqrt(1 - 4Kr(1-r)/(K+1))."""
    r = check_r(r)
    A, c = _gap_coefficients(problem)
    u = r - 0.5
    return np.sqrt(A + c * u * u)[()]


def gap_derivative(problem: TwoLevelProblem, r: ArrayLike) -> ArrayLike:
    """Analytic dDelta/dr = 2K(2r-1) / ((K+1) Delta)."""
    r = check_r(r)
    K = problem.K
    return (2.0 * K * (2.0 * r - 1.0) / ((K + 1) * gap(problem, r)))[()]


def gap_second_derivative(problem: TwoLevelProblem, r: ArrayLike) -> ArrayLike:
    r = check_r(r)
    _, c = _gap_coefficients(problem)
    delta = gap(problem, r)
    d1 = gap_derivative(problem, r)
    return ((c - d1 * d1) / delta)[()]


def eigenvector_angle(problem: TwoLevelProblem, r: ArrayLike) -> ArrayLike:
    """
    Angle beta of the ground state v_gs = (cos beta, sin beta).

    beta = atan2(-2 H01, H11 - H00) / 2 lies in [0, pi/2], which fixes a gauge that is
    continuous in r, has v_gs(1) = |m> and positive components at r = 0.
    """
    r = check_r(r)
    a, b, d = hamiltonian_entries(problem, r)
    return (0.5 * np.arctan2(-2.0 * b, d - a))[()]


def eigenvector_angle_derivative(problem: TwoLevelProblem, r: ArrayLike) -> ArrayLike:
    """d beta / dr = -sqrt(K) / ((K+1) Delta^2); never vanishes, so there is no gauge flip."""
    r = check_r(r)
    K = problem.K
    delta = gap(problem, r)
    return (-np.sqrt(K) / ((K + 1) * delta * delta))[()]


def eigensystem(problem: TwoLevelProblem, r: float) -> Spectrum:
    """Eigenvalues (1 -+ Delta)/2 with real unit eigenvectors in the continuous gauge."""
    delta = float(gap(problem, r))
    beta = float(eigenvector_angle(problem, r))
    v_gs = np.array([np.cos(beta), np.sin(beta)])
    v_exc = np.array([-np.sin(beta), np.cos(beta)])
    return Spectrum(
        e_gs=0.5 * (1.0 - delta),
        e_exc=0.5 * (1.0 + delta),
        v_gs=v_gs,
        v_exc=v_exc,
    )


def initial_state(problem: TwoLevelProblem) -> State2:
    """Uniform superposition |u> = (1/sqrt(K+1), sqrt(K/(K+1)))."""
    K = problem.K
    return State2(psi=complex(1.0 / np.sqrt(K + 1)), phi=complex(np.sqrt(K / (K + 1))))


def gap_power_integral(problem: TwoLevelProblem, p: int, r: ArrayLike) -> ArrayLike:
    """
    Closed-form integral of Delta^p from 0 to r for p in {1, 0, -1, -2, -3}.

    With u = r - 1/2 and k = 2 sqrt(K), Delta^2 = (1 + k^2 u^2) / (K+1), so every
    power needed by the schedules and the eikonal phases has an elementary
    antiderivative.
    """
    r = check_r(r)
    K = problem.K
    k = 2.0 * np.sqrt(K)
    sqrt_kp1 = np.sqrt(K + 1.0)

    def antiderivative(u):
        delta = np.sqrt((1.0 + k * k * u * u) / (K + 1))
        if p == 1:
            return 0.5 * u * delta + np.arcsinh(k * u) / (2.0 * k * sqrt_kp1)
        if p == 0:
            return u
        if p == -1:
            return sqrt_kp1 * np.arcsinh(k * u) / k
        if p == -2:
            return (K + 1) * np.arctan(k * u) / k
        if p == -3:
            return (K + 1) * u / delta
        raise ValueError(f"No closed form for gap power p={p}; expected one of 1, 0, -1, -2, -3")

    return (antiderivative(r - 0.5) - antiderivative(-0.5))[()]
