"""Named example maps with exact inverses where they exist."""

from dataclasses import dataclass, field
from fractions import Fraction

from .errors import InvalidMapError, UsageError
from .projalg import HomoPoly, as_fraction
from .ratmap import BirationalPair, RationalMap

__all__ = ["ZooEntry", "zoo", "ZOO_NAMES", "henon", "cremona", "power_map", "shiftlike3",
           "linear_map", "bundled_regions"]

ZOO_NAMES = ("henon", "cremona", "power", "shiftlike3", "linear")


@dataclass
class ZooEntry:
    name: str
    params: dict
    produced: object  # BirationalPair or RationalMap
    provenance: str = ""
    regions: dict = field(default=None)

    @property
    def is_pair(self):
        return isinstance(self.produced, BirationalPair)

    @property
    def forward(self):
        return self.produced.forward if self.is_pair else self.produced

    @property
    def inverse(self):
        return self.produced.inverse if self.is_pair else None

    @property
    def pair(self):
        if not self.is_pair:
            raise UsageError(f"zoo entry {self.name!r} has no inverse")
        return self.produced


def _hom_univariate(coeffs, var, hvar, k, degree):
    """Homogenize ``p(var/hvar) * hvar^degree`` for p given leading-coefficient first."""
    d = len(coeffs) - 1
    terms = {}
    for j, c in enumerate(coeffs):
        power = d - j
        e = [0] * (k + 1)
        e[var] += power
        e[hvar] += degree - power
        terms[tuple(e)] = terms.get(tuple(e), 0) + as_fraction(c)
    return HomoPoly(k, degree, terms)


def _mono(k, **exps):
    e = [0] * (k + 1)
    for name, v in exps.items():
        e[int(name[1:])] = v
    return HomoPoly.monomial(e)


def _check_poly_coeffs(coeffs, d):
    coeffs = [as_fraction(c) for c in coeffs]
    if len(coeffs) != d + 1:
        raise UsageError(f"need {d + 1} coefficients (leading first) for a degree-{d} polynomial")
    if coeffs[0] == 0:
        raise UsageError("leading coefficient of p must be nonzero")
    return coeffs


def henon(d=2, a=Fraction(3, 10), coeffs=None):
    """Homogenized ``(z, w) -> (p(z) + a w, z)`` on P^2 with its exact inverse.

    ``coeffs`` lists p's coefficients leading first; the default is ``z^d``.
    Chart: ``z = z0/z2, w = z1/z2``.
    """
    if d < 2:
        raise UsageError("Henon maps need degree >= 2")
    a = as_fraction(a)
    if a == 0:
        raise UsageError("Jacobian parameter a must be nonzero")
    coeffs = _check_poly_coeffs(coeffs if coeffs is not None else [1] + [0] * d, d)
    k = 2
    p_z = _hom_univariate(coeffs, 0, 2, k, d)      # z2^d p(z0/z2)
    p_w = _hom_univariate(coeffs, 1, 2, k, d)      # z2^d p(z1/z2)
    fwd = RationalMap([p_z + a * _mono(k, z1=1, z2=d - 1), _mono(k, z0=1, z2=d - 1),
                       _mono(k, z2=d)], "henon")
    inv = RationalMap([_mono(k, z1=1, z2=d - 1), (_mono(k, z0=1, z2=d - 1) - p_w) / a,
                       _mono(k, z2=d)], "henon^-1")
    return BirationalPair.checked(fwd, inv, "henon")


def cremona():
    """Standard quadratic involution ``[z1 z2 : z0 z2 : z0 z1]``."""
    k = 2
    s = RationalMap([_mono(k, z1=1, z2=1), _mono(k, z0=1, z2=1), _mono(k, z0=1, z1=1)], "cremona")
    return BirationalPair.checked(s, s, "cremona")


def power_map(d=2, k=2):
    return RationalMap([HomoPoly.variable(k, i) ** d for i in range(k + 1)], f"power{d}")


def shiftlike3(d=2, a=Fraction(3, 10), coeffs=None):
    """Homogenized ``(x, y, z) -> (y, z, p(z) + a x)`` on P^3 (chart t = z3 = 1) with inverse."""
    if d < 2:
        raise UsageError("degree must be >= 2")
    a = as_fraction(a)
    if a == 0:
        raise UsageError("parameter a must be nonzero")
    coeffs = _check_poly_coeffs(coeffs if coeffs is not None else [1] + [0] * d, d)
    k = 3
    fwd = RationalMap([
        _mono(k, z1=1, z3=d - 1),
        _mono(k, z2=1, z3=d - 1),
        _hom_univariate(coeffs, 2, 3, k, d) + a * _mono(k, z0=1, z3=d - 1),
        _mono(k, z3=d),
    ], "shiftlike3")
    inv = RationalMap([
        (_mono(k, z2=1, z3=d - 1) - _hom_univariate(coeffs, 1, 3, k, d)) / a,
        _mono(k, z0=1, z3=d - 1),
        _mono(k, z1=1, z3=d - 1),
        _mono(k, z3=d),
    ], "shiftlike3^-1")
    return BirationalPair.checked(fwd, inv, "shiftlike3")


def _matrix_inverse(M):
    n = len(M)
    A = [[as_fraction(x) for x in row] + [Fraction(int(i == j)) for j in range(n)]
         for i, row in enumerate(M)]
    for col in range(n):
        piv = next((r for r in range(col, n) if A[r][col] != 0), None)
        if piv is None:
            raise UsageError("linear map matrix is singular")
        A[col], A[piv] = A[piv], A[col]
        pv = A[col][col]
        A[col] = [x / pv for x in A[col]]
        for r in range(n):
            if r != col and A[r][col] != 0:
                f = A[r][col]
                A[r] = [x - f * y for x, y in zip(A[r], A[col])]
    return [row[n:] for row in A]


def _linear_from_matrix(M, name):
    k = len(M) - 1
    comps = []
    for row in M:
        if len(row) != k + 1:
            raise UsageError("linear map matrix must be square")
        terms = {}
        for j, c in enumerate(row):
            e = [0] * (k + 1)
            e[j] = 1
            terms[tuple(e)] = c
        comps.append(HomoPoly(k, 1, terms))
    return RationalMap(comps, name)


def linear_map(matrix=None, k=2):
    """Projective linear map ``z -> M z`` paired with ``M^{-1}``; identity by default."""
    if matrix is None or matrix == "identity":
        matrix = [[int(i == j) for j in range(k + 1)] for i in range(k + 1)]
    fwd = _linear_from_matrix(matrix, "linear")
    inv = _linear_from_matrix(_matrix_inverse(matrix), "linear^-1")
    return BirationalPair.checked(fwd, inv, "linear")


def bundled_regions(name, params=None):
    """Region configuration (dict in the regions-file schema) shipped with a zoo entry, or None.

    Regions are bundled for the default Henon map only (d = 2, a = 3/10, p = z^2);
    they were sized by sampling for that map.
    """
    if name != "henon":
        return None
    params = params or {}
    d = int(params.get("d", 2))
    a = as_fraction(params.get("a", Fraction(3, 10)))
    coeffs = params.get("coeffs")
    if (d, a) != (2, Fraction(3, 10)) or (
            coeffs is not None and [as_fraction(c) for c in coeffs] != [1, 0, 0]):
        return None
    # V+ is a neighbourhood of I+ = [0:1:0], V- of I- = [1:0:0]; U+/U- are the
    # complements of the same neighbourhoods enlarged by a gap.  The inverse has
    # Jacobian 1/a and pulls points to within ~0.456 rad of I-, so V- and its gap
    # are smaller than their forward counterparts.
    plus = dict(cone=0.2756, ball=0.2, gap=0.35)   # cone ~ {|z1| > 5 max(|z0|, |z2|)}
    minus = dict(cone=0.1, ball=0.1, gap=0.3)

    def nbhd(role, center, forms, size, complement=False):
        grow = size["gap"] if complement else 0.0
        return {"role": role, "complement": complement,
                "balls": [{"center": [str(complex(c)) for c in center],
                           "radius": size["ball"] + grow}],
                "cones": [{"forms": forms, "radius": size["cone"] + grow}]}

    z0 = [["1", "1", [1, 0, 0]]]
    z1 = [["1", "1", [0, 1, 0]]]
    z2 = [["1", "1", [0, 0, 1]]]
    return {
        "definition": "one-sided",
        "regions": [
            nbhd("V+", [0, 1, 0], [z0, z2], plus),
            nbhd("U+", [0, 1, 0], [z0, z2], plus, complement=True),
            nbhd("V-", [1, 0, 0], [z1, z2], minus),
            nbhd("U-", [1, 0, 0], [z1, z2], minus, complement=True),
        ],
        # lines avoiding the closures of V+ / V-
        "witnesses": [
            {"role": "+", "forms": [z1]},
            {"role": "-", "forms": [z0]},
        ],
    }


def zoo(name, *args, **params):
    """Build a named entry.

    ``zoo("henon", 2, 0.3, [1, 0, 0])``, ``zoo("cremona")``, ``zoo("power", 2)``,
    ``zoo("shiftlike3", 2, 0.3)``, ``zoo("linear", matrix)``.
    """
    builders = {
        "henon": (henon, ("d", "a", "coeffs"),
                  "homogenized Henon-type automorphism (p(z) + a w, z)"),
        "cremona": (cremona, (), "standard quadratic Cremona involution"),
        "power": (power_map, ("d", "k"), "coordinatewise power map; not birational"),
        "shiftlike3": (shiftlike3, ("d", "a", "coeffs"),
                       "shift-like polynomial automorphism of C^3 (y, z, p(z) + a x)"),
        "linear": (linear_map, ("matrix", "k"), "projective linear automorphism"),
    }
    if name not in builders:
        raise UsageError(f"unknown zoo entry {name!r}; choose from {', '.join(ZOO_NAMES)}")
    fn, names, note = builders[name]
    if len(args) > len(names):
        raise UsageError(f"too many parameters for {name!r}")
    kw = dict(zip(names, args))
    for key, v in params.items():
        if key not in names:
            raise UsageError(f"unknown parameter {key!r} for {name!r}")
        if v is not None:
            kw[key] = v
    try:
        produced = fn(**kw)
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"invalid parameters for {name!r}: {exc}") from exc
    if isinstance(produced, BirationalPair) and not produced.verified:
        raise InvalidMapError(f"zoo entry {name!r} failed birationality verification")
    shown = {k: (str(v) if isinstance(v, Fraction) else v) for k, v in kw.items()}
    return ZooEntry(name, shown, produced, note, bundled_regions(name, kw))
