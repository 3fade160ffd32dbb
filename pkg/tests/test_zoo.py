from fractions import Fraction

import pytest

from birat.errors import UsageError
from birat.ratmap import verify_birational
from birat.zoo import ZOO_NAMES, bundled_regions, zoo


@pytest.mark.parametrize("name", ["henon", "cremona", "shiftlike3", "linear"])
def test_pairs_verify(name):
    e = zoo(name)
    assert e.is_pair and verify_birational(e.pair)


def test_henon_parameters_are_exact():
    e = zoo("henon", 2, 0.3, [1, 0, 0])
    assert e.forward.degree == 2
    assert e.forward.components[0].terms[(0, 1, 1)] == Fraction(3, 10)
    assert e.regions is not None
    assert zoo("henon", 3).regions is None


def test_power_and_linear():
    assert zoo("power", 3).forward.degree == 3 and not zoo("power").is_pair
    assert zoo("linear", "identity").forward.degree == 1
    m = zoo("linear", [[1, 2, 0], [0, 1, 0], [0, 0, 3]])
    assert verify_birational(m.pair)


@pytest.mark.parametrize("call", [
    lambda: zoo("nope"), lambda: zoo("henon", 1), lambda: zoo("henon", 2, 0),
    lambda: zoo("henon", 2, Fraction(1, 2), [0, 1, 0]), lambda: zoo("cremona", d=2),
    lambda: zoo("linear", [[1, 0, 0], [0, 0, 0], [0, 0, 1]]), lambda: zoo("power", 2, 2, 9),
])
def test_invalid_parameters(call):
    with pytest.raises(UsageError):
        call()


def test_bundled_regions_only_for_default_henon():
    assert bundled_regions("cremona") is None
    doc = bundled_regions("henon")
    assert {r["role"] for r in doc["regions"]} == {"V+", "U+", "V-", "U-"}
    assert set(ZOO_NAMES) == {"henon", "cremona", "power", "shiftlike3", "linear"}
