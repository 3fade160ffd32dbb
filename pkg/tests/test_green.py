import numpy as np
import pytest
from hypothesis import given, strategies as st

from birat.errors import IndeterminacyProximity, StatisticalInsufficiency, UsageError
from birat.green import (ChartBall, ChartSlice, GreenEvaluator, basin_points, continuity_probe,
                         green_eval, green_eval_batch, hyperplane_pullback_potential,
                         invariance_residual, invariance_residuals, potential_grid,
                         pullback_convergence)
from birat.io import read_pgm
from birat.ratmap import map_eval_batch
from birat.zoo import zoo

finite = st.floats(-3, 3, allow_nan=False)


def _lifts(rng, n, k=2):
    Z = rng.standard_normal((n, k + 1)) + 1j * rng.standard_normal((n, k + 1))
    return Z / np.linalg.norm(Z, axis=1)[:, None]


def test_power_map_matches_log_max(power2, rng):
    e = GreenEvaluator(power2, depth=30)
    Z = _lifts(rng, 200) * rng.uniform(0.1, 10, 200)[:, None]
    b = green_eval_batch(e, Z)
    oracle = np.log(np.abs(Z).max(axis=1))
    assert np.max(np.abs(b.values - oracle)) < 1e-9
    assert not b.escaped.any()


def test_depth_zero_is_log_norm(henon, rng):
    e = GreenEvaluator.from_pair(henon.pair, depth=0)
    Z = _lifts(rng, 20) * 3.0
    assert np.allclose(e.batch(Z).values, np.log(3.0))


def test_compiled_matches_reference(henon, rng):
    for direction in ("forward", "inverse"):
        e = GreenEvaluator.from_pair(henon.pair, direction, depth=15)
        for z in _lifts(rng, 10):
            a = green_eval(e, z)
            b = green_eval(e, z, method="reference")
            assert abs(a.value - b.value) < 1e-10
            assert a.depth_used == b.depth_used == 15


def test_henon_invariance(henon, rng):
    e = GreenEvaluator.from_pair(henon.pair, depth=25)
    r = invariance_residuals(e, _lifts(rng, 100))
    assert np.nanmax(r) < 1e-4
    assert invariance_residual(e, _lifts(rng, 1)[0]) < 1e-4


@given(x=finite, y=finite, u=finite, v=finite, s=st.floats(0.01, 100), t=st.floats(0, 6.28))
def test_homogeneity(x, y, u, v, s, t):
    e = GreenEvaluator.from_pair(zoo("henon").pair, depth=20)
    z = np.array([x + 1j * y, u + 1j * v, 1.0])
    c = s * np.exp(1j * t)
    b = green_eval_batch(e, np.stack([z, c * z]))
    assert abs(b.values[1] - b.values[0] - np.log(s)) <= 1e-12 * max(1.0, abs(b.values[0]))


def test_indeterminacy_point_escapes(henon):
    e = GreenEvaluator.from_pair(henon.pair, depth=10)
    ind = np.array([[0, 1, 0]], dtype=complex)
    _, bad = map_eval_batch(henon.forward, ind)
    assert bad[0]
    assert e.batch(ind).escaped[0]
    with pytest.raises(IndeterminacyProximity):
        invariance_residual(e, ind[0])


def test_evaluator_validation(henon):
    with pytest.raises(UsageError):
        GreenEvaluator(henon.forward, depth=-1)
    with pytest.raises(UsageError):
        GreenEvaluator(zoo("linear").forward)
    with pytest.raises(UsageError):
        green_eval_batch(GreenEvaluator(henon.forward), np.zeros((1, 3)))


def test_pullback_ratio_is_one_over_d(henon):
    e = GreenEvaluator.from_pair(henon.pair, depth=25)
    Z = basin_points(e, 50, seed=0)
    res = pullback_convergence(e, [1, 1, 1], Z, 3, 8)
    assert 1 / (2 * e.d) <= res["mean_ratio"] <= 2 / e.d
    c = hyperplane_pullback_potential(e, [1, 1, 1], Z[0], 8)
    assert abs(c - e.batch(Z[:1]).values[0]) < 0.05


def test_basin_points_insufficient(power2):
    e = GreenEvaluator(power2, depth=10)
    with pytest.raises(StatisticalInsufficiency):
        basin_points(e, 10, box=0.5, threshold=1.0, max_draws=1000)


def test_grid_outputs(henon, tmp_path):
    e = GreenEvaluator.from_pair(henon.pair, depth=15)
    g = potential_grid(e, ChartSlice.real_plane(2, resolution=16))
    assert g.values.shape == (16, 16) and g.nan_count == 0
    g.to_csv(tmp_path / "g.csv")
    lines = (tmp_path / "g.csv").read_text().splitlines()
    assert lines[0] == "re(z1),im(z1),re(z2),im(z2),value,error_bound"
    assert len(lines) == 16 * 16 + 1
    g.to_pgm(tmp_path / "g.pgm")
    v, lo, hi = read_pgm(tmp_path / "g.pgm")
    assert np.max(np.abs(v - g.values)) <= (hi - lo) / 65534
    raw = potential_grid(e, ChartSlice.complex_line(2, index=1, resolution=8), subtract_fs=False)
    assert raw.summary()["potential"] == "G"


def test_chart_potential_is_nonnegative(henon):
    e = GreenEvaluator.from_pair(henon.pair, depth=20)
    g = potential_grid(e, ChartSlice.real_plane(2, box=(-1, 1, -1, 1), resolution=8),
                       subtract_fs=False)
    assert np.all(g.values >= 0)


def test_continuity_probe_power_is_lipschitz(power2):
    e = GreenEvaluator(power2, depth=20)
    r = continuity_probe(e, ChartBall((2.0, 0.5), 0.3), pairs=500, seed=1)
    assert abs(r.alpha - 1) < 0.05
    assert r.used == 500


def test_continuity_probe_henon(henon):
    e = GreenEvaluator.from_pair(henon.pair, depth=20)
    r = continuity_probe(e, ChartBall((2.0, 2.0), 0.5), pairs=500, seed=0)
    assert 0.2 < r.alpha < 1.3
