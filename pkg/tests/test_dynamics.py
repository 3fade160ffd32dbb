import numpy as np
import pytest

from birat.currents import sample_measure
from birat.dynamics import (DegreeEstimate, ReliabilityWarning, dynamical_degree_estimate,
                            invariance_test, mc_mass_pullback, mixing_correlations,
                            observable, observable_range, projective_differential,
                            projective_singular_values, push_forward, trapped_samples)
from birat.errors import StatisticalInsufficiency, UsageError
from birat.ratmap import map_eval
from birat.zoo import zoo


def _sin_dist(a, b):
    # sine of the FS distance, computed without cancellation for nearby points
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    return np.linalg.norm(b - np.vdot(a, b) * a)


def _unit(rng, k=2):
    z = rng.standard_normal(k + 1) + 1j * rng.standard_normal(k + 1)
    return z / np.linalg.norm(z)


def test_differential_matches_finite_differences(henon, rng):
    f = henon.forward
    for _ in range(5):
        z = _unit(rng)
        A, sv = projective_differential(f, z)
        v = rng.standard_normal(3) + 1j * rng.standard_normal(3)
        v -= np.vdot(z, v) * z
        v /= np.linalg.norm(v)
        t = 1e-5
        a, b = map_eval(f, z + t * v), map_eval(f, z - t * v)
        speed = _sin_dist(a, b) / _sin_dist(z + t * v, z - t * v)
        # the frame of T_z is orthonormal, so |A c| for the coordinates c of v is the speed
        Z = np.linalg.qr(np.column_stack([z, np.eye(3)]))[0][:, 1:]
        c = Z.conj().T @ v
        assert abs(np.linalg.norm(A @ c) - speed) < 1e-5 * max(1.0, speed)
        assert sv[-1] - 1e-12 <= speed <= sv[0] + 1e-12


def test_power_map_singular_values(power2):
    sv, bad = projective_singular_values(power2, np.ones((1, 3)) / np.sqrt(3))
    assert np.allclose(sv, 2.0) and not bad.any()


def test_identity_and_trivial_masses(cremona):
    ident = zoo("linear", "identity").forward
    assert mc_mass_pullback(ident, 3, samples=1000).value == 1.0
    m0 = mc_mass_pullback(cremona.forward, 0, samples=1000)
    assert m0.value == 1.0 and m0.exact
    m2 = mc_mass_pullback(cremona.forward, 2, samples=1000)
    assert m2.value == 1.0 and m2.exact


def test_power_map_masses(power2):
    m1 = mc_mass_pullback(power2, 1, 1, samples=20000, seed=3)
    assert abs(m1.value - 2) < 4 * m1.standard_error + 1e-9
    m2 = mc_mass_pullback(power2, 1, 2, samples=20000, seed=3)
    assert abs(m2.value - 4) < 4 * m2.standard_error + 1e-9


def test_mass_is_deterministic(henon):
    a = mc_mass_pullback(henon.forward, 2, samples=4000, seed=7)
    b = mc_mass_pullback(henon.forward, 2, samples=4000, seed=7)
    c = mc_mass_pullback(henon.forward, 2, samples=4000, seed=8)
    assert a.value == b.value and a.value != c.value


def test_mass_argument_checks(henon):
    with pytest.raises(UsageError):
        mc_mass_pullback(henon.forward, 1, p=3)
    with pytest.raises(UsageError):
        mc_mass_pullback(henon.forward, -1)
    with pytest.raises(UsageError):
        dynamical_degree_estimate(henon.forward, nmax=1)


def test_rejections_flag_unreliable(henon):
    with pytest.warns(ReliabilityWarning):
        m = mc_mass_pullback(henon.forward, 1, samples=2000, eps_ind=0.9)
    assert not m.reliable


def test_shiftlike_degree_pairing():
    e = zoo("shiftlike3")
    fwd = dynamical_degree_estimate(e.forward, 1, nmax=3, samples=8000, inverse=e.inverse)
    inv = dynamical_degree_estimate(e.inverse, 2, nmax=3, samples=8000, inverse=e.forward)
    assert abs(fwd.value - inv.value) <= 0.2 * fwd.value
    assert isinstance(fwd, DegreeEstimate) and len(fwd.masses) == 3


def test_observables():
    P = np.array([[1 + 1j, 0], [10, 0]])
    assert np.allclose(observable("re_z1")(P), [1, 10])
    assert np.allclose(observable("|z1|^2", 3.0)(P), [2, 9])
    assert observable("bump", 3.0)(P)[1] == 0
    assert observable_range("abs_z1_sq", 3.0) == 9
    with pytest.raises(UsageError):
        observable("nope")


def test_push_forward_drops_escapes(henon):
    Q, out = push_forward(henon.forward, np.array([[0.1, 0.2], [2.9, 2.9]]), box=3.0)
    assert not out[0] and out[1]
    assert np.isnan(Q[1]).all()


def test_invariance_trivial_cases(small_measure, henon):
    P = sample_measure(small_measure, 2000, seed=0)
    assert invariance_test(P, henon.pair, "constant").discrepancy == 0
    ident = zoo("linear", "identity").forward
    r = invariance_test(P, ident, "abs_z1_sq")
    assert r.discrepancy == 0 and r.samples_dropped == 0


def test_mixing_trivial_cases(small_measure, henon):
    T = trapped_samples(small_measure, henon.pair, 2000, seed=0, steps=3)
    assert len(T.points) == 2000 and 0 < T.acceptance <= 1
    c = mixing_correlations(T.points, henon.pair, "constant", "re_z1", nmax=3)
    assert c.values == [0.0] * 4
    c = mixing_correlations(T.points, henon.pair, "re_z1", "re_z1", nmax=3)
    assert c.values[0] >= 0 and c.dropped == 0
    with pytest.raises(UsageError):
        mixing_correlations(T.points, henon.pair, nmax=20)


def test_mixing_refuses_when_orbits_escape(henon):
    P = np.full((100, 2), 2.5 + 0j)
    with pytest.raises(StatisticalInsufficiency):
        mixing_correlations(P, henon.pair, nmax=2)
