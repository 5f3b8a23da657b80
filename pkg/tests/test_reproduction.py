"""
End-to-end checks of the published numbers: threshold scaling exponents,
WKB population overshoot, normalization loss and the single-qubit asymptote.
Minutes of runtime; deselect with -m "not slow".
"""
import numpy as np
import pytest

from core.exact import default_grid
from core.experiments import (
    ThresholdScan,
    asymptote_table,
    compare_trajectories,
    geometric_grid,
    pgs_vs_tf,
    renormalization_gain,
    scaling_fit,
)

pytestmark = pytest.mark.slow

SIZES = range(2, 11)


@pytest.mark.parametrize("alpha,expected", [(0, 1.01), (1, 0.667), (2, 0.508), (3, 0.463)])
def test_exact_scaling_exponents(alpha, expected):
    result = scaling_fit(alpha, "exact", SIZES)
    assert result.fit.slope == pytest.approx(expected, abs=0.05)


def test_exact_scaling_large_sizes_optimal_schedule():
    result = scaling_fit(3, "exact", range(10, 21), scan=ThresholdScan(t_min=1.0))
    assert result.fit.slope == pytest.approx(0.499, abs=0.01)


def test_order_zero_gets_optimal_schedule_scaling():
    result = scaling_fit(2, "wkb0", SIZES)
    assert 0.45 <= result.fit.slope <= 0.56


@pytest.mark.parametrize("alpha", [0, 1])
def test_order_zero_population_overshoots(alpha):
    rows = pgs_vs_tf(4, alpha, "wkb0", geometric_grid(1.0, 200.0))
    assert any(row.p_gs is not None and row.p_gs > 1.0 for row in rows)


def test_order_zero_norm_dips_on_optimal_schedule():
    grid = default_grid(501)
    for alpha in (0, 1, 2, 3):
        rows, summary = compare_trajectories(6, alpha, 60.0, ["exact", "wkb0"], grid)
        norms = np.array([row.norm for row in rows if row.backend == "wkb0"])
        assert np.all(norms[1:] < 1.0)
        if alpha == 3:
            assert summary.min_norm["wkb0"] == pytest.approx(0.7, abs=0.05)


def test_renormalization_reduces_distance_on_every_schedule():
    rows = renormalization_gain(6, 60.0, grid=default_grid(501))
    assert [row.alpha for row in rows] == [0, 1, 2, 3]
    assert all(row.gain < 0 for row in rows)


def test_renormalized_order_zero_scaling():
    result = scaling_fit(3, "rwkb0", SIZES)
    assert result.fit.slope == pytest.approx(0.5, abs=0.05)


def test_order_zero_asymptote_converges():
    rows = asymptote_table([300.0, 1000.0, 3000.0], backend="wkb0")
    scaled = [row.scaled for row in rows]
    assert all(0.9 <= x <= 1.1 for x in scaled)
    assert abs(scaled[-1] - 1.0) < abs(scaled[0] - 1.0)


def test_exact_asymptote_envelope():
    # both ends of the sweep feed the excited amplitude, so 4 t_f^2 |phi(1)|^2
    # oscillates between 0 and about 4 and averages to about 2
    rows = asymptote_table(list(np.linspace(1000.0, 1040.0, 41)), backend="exact")
    scaled = np.array([row.scaled for row in rows])
    assert scaled.max() <= 4.4
    assert 1.6 <= scaled.mean() <= 2.4
