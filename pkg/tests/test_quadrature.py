import math

import numpy as np
import pytest

from pointnls.quadrature import cell_measures, graded_grid, log_gauss, lumped_weights, singular_cell, sphere_area


def test_graded_grid_shape():
    g = graded_grid(1e-6, 40.0, 1.05, h_max=0.02)
    assert g[0] == 1e-6 and g[-1] == pytest.approx(40.0)
    assert np.all(np.diff(g) > 0)
    assert np.max(np.diff(g)) <= 0.02 * (1 + 1e-9)
    with pytest.raises(ValueError):
        graded_grid(1.0, 0.5)


def test_singular_cell_power_law():
    # int_0^1 r^{-0.5} dr = 2
    assert singular_cell(lambda r: r**-0.5, 1.0, kappa=0.5) == pytest.approx(2.0, rel=1e-14)
    # int_0^r1 r ln(r)^2 dr, closed form r1^2 (2 ln^2 - 2 ln + 1)/4
    r1 = 1e-3
    exact = r1**2 * (2 * math.log(r1) ** 2 - 2 * math.log(r1) + 1) / 4
    assert singular_cell(lambda r: r * np.log(r) ** 2, r1, kappa=2.0) == pytest.approx(exact, rel=1e-12)


def test_log_gauss_polynomial():
    g = graded_grid(1e-3, 2.0, 1.1)
    assert log_gauss(lambda r: r**2, g) == pytest.approx((8 - 1e-9) / 3, rel=1e-9)


def test_measures_sum_to_ball_volume():
    for d in (2, 3):
        nodes = np.linspace(0.5, 2.0, 17)
        ball = sphere_area(d) * (2.0**d - 0.5**d) / d
        assert cell_measures(nodes, d).sum() == pytest.approx(ball, rel=1e-14)
        assert lumped_weights(nodes, d).sum() == pytest.approx(ball, rel=1e-14)
