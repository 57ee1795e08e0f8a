import json
import math

import numpy as np
import pytest

from pointnls.greens import green
from pointnls.model import FREE, Params, ParameterError, beta, lambda_alpha
from pointnls.radial_ode import Controls
from pointnls.shooting import (
    BranchNotFound,
    ShootControls,
    branch_scan,
    ground_state_shoot,
    match_decay,
    positive_separators,
    solve_fixed_alpha,
    write_branch_csv,
)

# ground state at d = 2, p = 3, lambda = 1, alpha = 1 (frozen from this solver;
# the action is cross-checked against the variational minimizer in test_variational)
GROUND_Q = 1.8148785793
GROUND_A = 1.7813921208
GROUND_ACTION = 3.8011390137
# nodal separators on a = beta q at alpha = 0
NODAL_Q = {1: 7.7407, 2: 9.8134, 3: 11.3194}


def test_controls_validation():
    with pytest.raises(ParameterError):
        ShootControls(bisect_tol=1e-16)
    with pytest.raises(ParameterError):
        ShootControls(a_bracket=(1.0, -1.0))
    with pytest.raises(ParameterError):
        ShootControls(q_range=(0.0, 1.0))


def test_ground_state_values(ground):
    assert not ground.flagged
    assert ground.q == pytest.approx(GROUND_Q, rel=1e-8)
    assert ground.a == pytest.approx(GROUND_A, rel=1e-8)
    assert ground.action == pytest.approx(GROUND_ACTION, rel=1e-8)
    assert ground.a == pytest.approx(beta(ground.params) * ground.q, rel=1e-14)
    assert ground.residuals["relation"] < 1e-7
    assert ground.residuals["nehari"] < 1e-6
    assert ground.residuals["ode"] < 1e-5


def test_ground_state_shape(ground):
    prof = ground.profile
    assert np.all(prof.u > 0)
    assert ground.residuals["decreasing"] and ground.residuals["singular"]
    assert ground.zero_count == 0


def test_ground_state_sign_choice(cubic2d, ground):
    neg = solve_fixed_alpha(cubic2d, 0, sign=-1)
    assert neg.q == pytest.approx(-ground.q, rel=1e-9)
    assert neg.action == pytest.approx(ground.action, rel=1e-9)
    flipped = ground.negated()
    assert flipped.q == -ground.q and np.array_equal(flipped.profile.u, -ground.profile.u)


def test_ground_state_below_threshold_rejected():
    params = Params(2, 1, 3.0, 1.0, 0.0)
    assert params.lam < lambda_alpha(params)
    with pytest.raises(ParameterError, match="lambda_alpha"):
        ground_state_shoot(params)
    assert positive_separators(params) == []


@pytest.mark.parametrize("k", [1, 2, 3])
def test_nodal_branch(nodal_alpha0, k):
    bp = nodal_alpha0[k]
    assert not bp.flagged
    assert bp.zero_count == k
    assert bp.q == pytest.approx(NODAL_Q[k], rel=1e-4)
    assert bp.residuals["relation"] <= 1e-6 * max(1.0, abs(bp.f0))


def test_match_decay_regular_family():
    pts = match_decay(Params(2, 1, 3.0, 1.0), 1.0)
    assert pts[0].zero_count == 0
    counts = [bp.zero_count for bp in pts]
    assert counts == sorted(counts)
    assert all(bp.alpha is not FREE for bp in pts)


def test_match_decay_linear_mode():
    for d in (2, 3):
        pts = match_decay(Params(d, 0, 3.0 if d == 2 else 2.5, 1.0), 1.0)
        assert len(pts) >= 1 and abs(pts[0].a) <= 1e-8
        u = pts[0].profile.u
        g = green(d, 1.0, pts[0].profile.r)
        assert np.max(np.abs(u / g - 1)) <= 1e-8


def test_match_decay_r0_robust():
    params = Params(2, 1, 3.0, 1.0)
    base = match_decay(params, 1.0)[0].a
    half = match_decay(params, 1.0, ShootControls(integrator=Controls(r0=0.5e-6)))[0].a
    # start-error budget O(r0^2 |ln r0|^p) ~ 3e-9
    assert abs(base - half) <= 3e-8


def test_no_separator_reports_range():
    params = Params(2, 1, 3.0, 1.0, 1.0)
    with pytest.raises(BranchNotFound) as err:
        solve_fixed_alpha(params, 2, ShootControls(q_range=(1e-3, 1e-1), q_points=9))
    assert err.value.scanned == (1e-3, 1e-1)


def test_branch_scan_rows(tmp_path):
    params = Params(2, 1, 3.0, 1.0)
    rows = branch_scan(params, [0.5, 1.0, 2.0], 0)
    assert {r.q for r in rows} == {0.5, 1.0, 2.0}
    for r in rows:
        assert r.error is None
        # alpha read back from the point satisfies beta q = a
        assert beta(params.replace(alpha=r.alpha)) * r.q == pytest.approx(r.a, abs=1e-10)
    write_branch_csv(rows, tmp_path / "b.csv")
    lines = (tmp_path / "b.csv").read_text().splitlines()
    assert lines[0].startswith("q,sheet,a") and len(lines) == len(rows) + 1
    with pytest.raises(ParameterError):
        branch_scan(params, [0.0], 0)


def test_branch_point_json(ground, tmp_path):
    ground.to_json(tmp_path / "g.json", profile_file="g.csv")
    data = json.loads((tmp_path / "g.json").read_text())
    assert data["zero_count"] == 0 and data["profile_file"] == "g.csv"
    assert math.isclose(data["q"], ground.q)
