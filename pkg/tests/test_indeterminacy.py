import copy
import json
from fractions import Fraction

import numpy as np
import pytest

from birat.errors import ParseError, UsageError
from birat.indeterminacy import (Ball, RegionSpec, candidate_check, check_regular,
                                 iterated_indeterminacy_containment, load_regions, numeric_scan,
                                 regions_from_json, regions_to_json, residual)
from birat.projalg import fs_distance, fs_uniform
from birat.ratmap import identity_map


def test_candidate_check_exact(henon, cremona):
    assert candidate_check(henon.forward, [0, 1, 0])
    assert not candidate_check(henon.forward, [1, 0, 0])
    assert candidate_check(henon.inverse, [1, 0, 0])
    for p in ([1, 0, 0], [0, 1, 0], [0, 0, 1]):
        assert candidate_check(cremona.forward, p)
    assert not candidate_check(cremona.forward, [1, 1, 0])
    assert candidate_check(henon.forward, [Fraction(0), Fraction(5, 3), 0])


@pytest.mark.parametrize("bad", [[0.5j, 1, 0], [0.25, 1, 0], [0, 0, 0], [1, 0]])
def test_candidate_check_rejects_inexact_points(henon, bad):
    with pytest.raises(UsageError):
        candidate_check(henon.forward, bad)


def test_numeric_scan_finds_known_points(henon, cremona):
    hs = numeric_scan(henon.forward, samples=20000, seed=1)
    assert len(hs) == 1 and fs_distance(hs[0].point, [0, 1, 0]) < 1e-6
    assert [str(x) for x in hs[0].rational] == ["0", "1", "0"]
    cs = numeric_scan(cremona.forward, samples=20000, seed=1)
    assert len(cs) == 3
    found = sorted(tuple(int(x) for x in c.rational) for c in cs)
    assert found == [(0, 0, 1), (0, 1, 0), (1, 0, 0)]


def test_morphisms_have_no_indeterminacy(power2):
    assert numeric_scan(power2, samples=5000, seed=0) == []
    assert numeric_scan(identity_map(2), samples=5000, seed=0) == []


def test_residual_is_scale_invariant(henon, rng):
    Z = fs_uniform(2, 10, rng)
    assert np.allclose(residual(henon.forward, Z), residual(henon.forward, 7j * Z))


def test_regions_json_round_trip(henon):
    regions, witnesses, definition = regions_from_json(henon.regions, 2)
    doc = regions_to_json(regions, witnesses, definition)
    again, w2, d2 = regions_from_json(json.loads(json.dumps(doc)), 2)
    rng = np.random.default_rng(0)
    Z = fs_uniform(2, 2000, rng)
    for a, b in zip(regions, again):
        assert a.role == b.role and np.array_equal(a.contains(Z), b.contains(Z))


@pytest.mark.parametrize("doc", [
    {"regions": [{"role": "W", "balls": [{"center": ["1", "0", "0"], "radius": 0.1}]}]},
    {"regions": [{"role": "V+", "balls": [{"center": ["x", "0", "0"], "radius": 0.1}]}]},
    {"regions": "nope"},
])
def test_regions_parse_errors(doc):
    with pytest.raises((ParseError, UsageError)):
        regions_from_json(doc, 2)


def test_load_regions_missing_file(tmp_path):
    with pytest.raises(ParseError):
        load_regions(tmp_path / "none.json")


def test_ball_and_cone_geometry(rng):
    b = Ball(np.array([0, 1, 0], dtype=complex), 0.2)
    V = RegionSpec("V+", (b,))
    pts = b.sample(500, rng, rng.uniform(0, 0.19, 500))
    assert V.contains(pts).all()
    U = RegionSpec("U+", (b.enlarged(0.1),), complement=True)
    assert not U.contains(pts).any()
    far = U.sample(500, rng)
    assert (fs_distance(far, [0, 1, 0]) > 0.3 - 1e-12).all()


def test_iterated_indeterminacy_stays_in_V(henon):
    regions, _, _ = regions_from_json(henon.regions, 2)
    V = next(r for r in regions if r.role == "V+")
    res = iterated_indeterminacy_containment(henon.forward, 3, V, samples=5000, seed=0)
    assert res if isinstance(res, bool) else res["passed"]


def test_henon_bundled_regions_pass(henon):
    regions, witnesses, definition = regions_from_json(henon.regions, 2)
    rep = check_regular(henon.pair, regions, witnesses, samples=10000, seed=0)
    assert rep.verdict and rep.label == "sampled-pass"
    rep2 = check_regular(henon.pair, regions, witnesses, samples=10000, seed=3,
                         definition="two-sided")
    assert rep2.verdict


def _swap(doc):
    out = copy.deepcopy(doc)
    for r in out["regions"]:
        r["role"] = {"V+": "V-", "V-": "V+", "U+": "U-", "U-": "U+"}[r["role"]]
    return out


def _overlap(doc):
    out = copy.deepcopy(doc)
    for r in out["regions"]:
        if r["role"] == "U+":
            for s in r["balls"] + r["cones"]:
                s["radius"] = 0.1
    return out


@pytest.mark.parametrize("mutate", [_swap, _overlap])
def test_negative_region_configs_fail_condition_one(henon, mutate):
    regions, witnesses, _ = regions_from_json(mutate(henon.regions), 2)
    rep = check_regular(henon.pair, regions, witnesses, samples=10000, seed=0)
    assert not rep.verdict and not rep.condition1["passed"]


def test_check_regular_needs_pair(henon):
    regions, witnesses, _ = regions_from_json(henon.regions, 2)
    with pytest.raises(UsageError):
        check_regular(henon.forward, regions, witnesses)
