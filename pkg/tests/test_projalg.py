from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given, strategies as st

from birat.errors import ParseError, UsageError
from birat.projalg import (HomoPoly, as_fraction, as_lift, fs_distance, fs_uniform, linear_form,
                           normalize_lift, poly_eval, poly_eval_exact, poly_gcd, poly_gcd_many)

K = 2
z0, z1, z2 = HomoPoly.gens(K)
SYMS = sympy.symbols("z0 z1 z2")


def to_sympy(p):
    return sum((sympy.Rational(c.numerator, c.denominator)
                * sympy.Mul(*[s ** e for s, e in zip(SYMS, ex)]) for ex, c in p.items()),
               sympy.Integer(0))


def from_sympy(expr, degree):
    poly = sympy.Poly(sympy.expand(expr), *SYMS)
    return HomoPoly(K, degree, {m: Fraction(int(c.p), int(c.q)) for m, c in poly.terms()})


@st.composite
def homo_polys(draw, max_degree=3, max_terms=4):
    d = draw(st.integers(0, max_degree))
    exps = [(a, b, d - a - b) for a in range(d + 1) for b in range(d + 1 - a)]
    chosen = draw(st.lists(st.sampled_from(exps), min_size=1, max_size=max_terms, unique=True))
    coefs = draw(st.lists(st.fractions(min_value=-5, max_value=5, max_denominator=4)
                          .filter(lambda c: c != 0), min_size=len(chosen), max_size=len(chosen)))
    return HomoPoly(K, d, dict(zip(chosen, coefs)))


def test_as_fraction_decimal_and_strings():
    assert as_fraction(0.3) == Fraction(3, 10)
    assert as_fraction("3/10") == Fraction(3, 10)
    assert as_fraction(np.int64(4)) == 4
    with pytest.raises(ParseError):
        as_fraction("abc")
    with pytest.raises(UsageError):
        as_fraction(float("nan"))
    with pytest.raises(UsageError):
        as_fraction(True)


def test_constructor_rejects_inhomogeneous_terms():
    with pytest.raises(UsageError):
        HomoPoly(2, 2, {(1, 0, 0): 1})
    with pytest.raises(UsageError):
        HomoPoly(2, 1, {(1, 0): 1})


def test_zero_coefficients_dropped_and_zero_keeps_degree():
    p = HomoPoly(2, 2, {(2, 0, 0): 0, (1, 1, 0): 2})
    assert len(p) == 1
    assert (z0 - z0).degree == 1 and (z0 - z0).is_zero()


@given(homo_polys(), homo_polys())
def test_product_matches_sympy(a, b):
    assert to_sympy(a * b).expand() == (to_sympy(a) * to_sympy(b)).expand()


@given(homo_polys(), homo_polys())
def test_gcd_matches_sympy_up_to_scalar(a, b):
    g = poly_gcd(a * b, a)
    ref = sympy.gcd(to_sympy(a * b), to_sympy(a))
    ref_p = from_sympy(ref, g.degree) if ref.is_number is False else HomoPoly.constant(K, 1)
    assert g.degree == sympy.Poly(ref, *SYMS).total_degree()
    assert g.is_scalar_multiple(ref_p)


def test_gcd_of_coprime_and_common_factor():
    a = (z0 + z1) * (z1 - 2 * z2)
    b = (z0 + z1) * (z0 + z2) * z1
    g = poly_gcd(a, b)
    assert g.is_scalar_multiple(z0 + z1)
    assert poly_gcd(z0 * z1, z2 * z2).degree == 0
    assert poly_gcd_many([z0 * z1 * z2, z0 * z1, z0 * z2 * z2]).is_scalar_multiple(z0)
    with pytest.raises(UsageError):
        poly_gcd(z0 - z0, z1 - z1)


@given(homo_polys())
def test_json_round_trip(p):
    assert HomoPoly.from_json(p.to_json(), K, p.degree) == p


def test_from_json_rejects_garbage():
    with pytest.raises(ParseError):
        HomoPoly.from_json([["1", "0", [1, 0, 0]]], 2)
    with pytest.raises(ParseError):
        HomoPoly.from_json([["1", "1", [1, 0, 0]], ["1", "1", [2, 0, 0]]], 2)


@given(homo_polys(), st.lists(st.fractions(-3, 3, max_denominator=5), min_size=3, max_size=3))
def test_float_evaluation_matches_exact(p, pt):
    exact = poly_eval_exact(p, pt)
    approx = poly_eval(p, [float(x) for x in pt])
    assert abs(approx - float(exact)) <= 1e-12 * (1 + abs(float(exact)))


def test_eval_batch_and_partial():
    p = 3 * z0 ** 2 * z1 - z2 ** 3 + Fraction(1, 2) * z0 * z1 * z2
    Z = np.array([[1, 2, 3], [0.5j, 1, -1]], dtype=complex)
    for z, v in zip(Z, p.eval_batch(Z)):
        assert abs(v - poly_eval(p, z)) < 1e-12
    assert p.partial(0) == 6 * z0 * z1 + Fraction(1, 2) * z1 * z2


def test_substitution_composes():
    p = z0 * z1 - z2 ** 2
    q = p.substitute([z1, z0, z2 + z0])
    assert q == z1 * z0 - (z2 + z0) ** 2


def test_lifts_and_fs_geometry(rng):
    with pytest.raises(UsageError):
        as_lift([0, 0, 0])
    z = normalize_lift([2j, 1, 0])
    assert abs(np.linalg.norm(z) - 1) < 1e-15 and abs(z[0].imag) < 1e-15 and z[0].real > 0
    assert fs_distance([1, 0, 0], [5j, 0, 0]) < 1e-7
    assert abs(fs_distance([1, 0, 0], [0, 1, 0]) - np.pi / 2) < 1e-15
    U = fs_uniform(2, 20000, rng)
    assert np.allclose(np.linalg.norm(U, axis=1), 1)
    # |z_0|^2 is Beta(1, k)-distributed under the FS measure: mean 1/(k+1)
    assert abs(np.mean(np.abs(U[:, 0]) ** 2) - 1 / 3) < 0.01


def test_linear_form():
    assert linear_form([1, 0, -2]) == z0 - 2 * z2
