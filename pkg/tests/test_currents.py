import numpy as np
import pytest

from birat.currents import (GridPotential, NEGATIVITY_LIMIT, ddc_wedge, fs_box_mass,
                            fs_calibration, fs_potential, sample_measure, support_check)
from birat.errors import QualityFailure, StatisticalInsufficiency, UsageError
from birat.indeterminacy import RegionIntersection, regions_from_json


def _abs1(x1, y1, x2, y2):
    return x1 ** 2 + y1 ** 2 + 0 * x2


def _abs2(x1, y1, x2, y2):
    return x2 ** 2 + y2 ** 2 + 0 * x1


def _inner_volume(d):
    return float(np.prod([hi - lo for lo, hi in d.inner_box()]))


def test_quadratic_wedge_is_exact():
    # dd^c|z1|^2 ^ dd^c|z2|^2 has constant density 4/pi^2 w.r.t. Lebesgue measure.
    u = GridPotential.from_function(_abs1, 1.0, 12)
    v = GridPotential.from_function(_abs2, 1.0, 12)
    d = ddc_wedge(u, v)
    assert d.total_mass == pytest.approx(4 / np.pi ** 2 * _inner_volume(d), rel=1e-12)
    assert d.negative_clip == 0
    w = GridPotential.from_function(lambda *a: _abs1(*a) + _abs2(*a), 1.0, 12)
    d2 = ddc_wedge(w, w)
    assert d2.total_mass == pytest.approx(8 / np.pi ** 2 * _inner_volume(d2), rel=1e-12)


def test_pluriharmonic_potential_gives_zero():
    u = GridPotential.from_function(lambda x1, y1, x2, y2: x1 + 0 * y1, 2.0, 12)
    v = GridPotential.from_function(fs_potential, 2.0, 12)
    d = ddc_wedge(u, v, clip=False)
    assert np.max(np.abs(d.cell_masses)) < 1e-10


def test_wedge_is_symmetric_and_bilinear():
    a = GridPotential.from_function(fs_potential, 2.0, 12)
    b = GridPotential.from_function(lambda *x: _abs1(*x) + 0.3 * fs_potential(*x), 2.0, 12)
    ab, ba = ddc_wedge(a, b, clip=False), ddc_wedge(b, a, clip=False)
    assert np.allclose(ab.cell_masses, ba.cell_masses, rtol=1e-12, atol=1e-15)
    a2 = GridPotential.from_function(lambda *x: 2 * fs_potential(*x), 2.0, 12)
    assert ddc_wedge(a2, a).total_mass == pytest.approx(2 * ddc_wedge(a, a).total_mass, rel=1e-12)


def test_grid_mismatch_rejected():
    a = GridPotential.from_function(fs_potential, 2.0, 12)
    b = GridPotential.from_function(fs_potential, 2.0, 16)
    with pytest.raises(UsageError):
        ddc_wedge(a, b)


def test_fs_box_mass_against_monte_carlo(rng):
    box = ((-1.0, 0.5), (-0.7, 1.2), (-1.5, 1.5), (-0.2, 0.9))
    n = 2_000_000
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    X = lo + (hi - lo) * rng.random((n, 4))
    dens = 2 / (np.pi ** 2 * (1 + np.sum(X ** 2, axis=1)) ** 3)
    vol = np.prod(hi - lo)
    est, se = vol * dens.mean(), vol * dens.std() / np.sqrt(n)
    assert abs(fs_box_mass(box) - est) < 4 * se
    assert fs_box_mass(200.0) == pytest.approx(1.0, abs=1e-6)


def test_fs_calibration_coarse():
    c = fs_calibration(3.0, 32)
    assert c["relative_error"] < 0.01


def test_sample_single_cell():
    m = np.zeros((4, 4, 4, 4))
    m[1, 2, 3, 0] = 1.0
    d = ddc_wedge(GridPotential.from_function(_abs1, 1.0, 8),
                  GridPotential.from_function(_abs2, 1.0, 8))
    d.cell_masses = m
    d.total_mass = 1.0
    P = sample_measure(d, 1000, seed=0)
    c = d.centers([np.ravel_multi_index((1, 2, 3, 0), m.shape)])[0]
    h = np.asarray(d.h)
    assert np.all(np.abs(P[:, 0].real - c[0].real) <= h[0] / 2)
    assert np.all(np.abs(P[:, 1].imag - c[1].imag) <= h[3] / 2)
    assert np.array_equal(sample_measure(d, 10, seed=5), sample_measure(d, 10, seed=5))


def test_sample_uniform_density_mean():
    d = ddc_wedge(GridPotential.from_function(_abs1, 1.0, 12),
                  GridPotential.from_function(_abs2, 1.0, 12))
    n = 20000
    P = sample_measure(d, n, seed=1)
    lo, hi = d.inner_box()[0]
    assert np.all((P[:, 0].real >= lo) & (P[:, 0].real <= hi))
    sd = (hi - lo) / np.sqrt(12)
    assert abs(P[:, 0].real.mean()) < 3 * sd / np.sqrt(n)


def test_sample_empty_density_raises():
    d = ddc_wedge(GridPotential.from_function(lambda x1, y1, x2, y2: x1 + 0 * y2, 1.0, 8),
                  GridPotential.from_function(fs_potential, 1.0, 8))
    with pytest.raises(StatisticalInsufficiency):
        sample_measure(d, 10)


class _All:
    def contains(self, Z):
        return np.ones(len(Z), dtype=bool)


class _Nothing:
    def contains(self, Z):
        return np.zeros(len(Z), dtype=bool)


def test_support_check_trivial_regions(small_measure):
    assert support_check(small_measure, _All()) == pytest.approx(1.0, abs=1e-12)
    assert support_check(small_measure, _Nothing()) == 0.0


def test_henon_measure_coarse(small_measure, henon):
    d = small_measure
    assert 0.85 <= d.total_mass <= 1.1
    assert d.negativity_ratio <= NEGATIVITY_LIMIT
    d.check_quality()
    regions, _, _ = regions_from_json(henon.regions, 2)
    assert support_check(d, RegionIntersection.of_roles(regions)) >= 0.95
    assert d.marginal().sum() == pytest.approx(d.cell_masses.sum(), rel=1e-9)


def test_quality_failure_raised(small_measure):
    import dataclasses
    bad = dataclasses.replace(small_measure, negative_clip=small_measure.total_mass)
    with pytest.raises(QualityFailure):
        bad.check_quality()


def test_density_outputs(small_measure, tmp_path):
    small_measure.to_csv(tmp_path / "d.csv", min_fraction=1e-4)
    lines = (tmp_path / "d.csv").read_text().splitlines()
    assert lines[0] == "re(z1),im(z1),re(z2),im(z2),mass"
    assert len(lines) > 10
    small_measure.to_pgm(tmp_path / "m.pgm")
    assert (tmp_path / "m.pgm").read_text().startswith("P2")
