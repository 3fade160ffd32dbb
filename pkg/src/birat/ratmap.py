"""Rational self-maps of P^k: composition, content stripping, iteration and evaluation."""

import json
import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import IndeterminacyProximity, InvalidMapError, ParseError, ResourceError, UsageError
from .projalg import HomoPoly, _BudgetExceeded, poly_eval, poly_gcd_many

__all__ = [
    "RationalMap", "BirationalPair", "DegreeSequence", "StabilityReport", "compose",
    "strip_content", "iterate", "degree_sequence", "is_algebraically_stable",
    "verify_birational", "map_eval", "map_eval_batch", "map_differential", "identity_map",
    "load_map_file", "dump_map_file", "DEFAULT_TERM_BUDGET", "DEFAULT_EPS_IND",
]

DEFAULT_TERM_BUDGET = 2_000_000
DEFAULT_EPS_IND = 1e-12


class RationalMap:
    """``f = [P_0 : ... : P_k]`` with homogeneous components of one degree.

    Construction does not insist on reduced form because raw compositions are
    legitimately unreduced; :meth:`is_reduced` checks it.
    """

    __slots__ = ("ambient", "components", "name", "_cache")

    def __init__(self, components, name=""):
        comps = tuple(components)
        if not comps:
            raise InvalidMapError("a map needs components")
        for p in comps:
            if not isinstance(p, HomoPoly):
                raise InvalidMapError("components must be HomoPoly")
        k = comps[0].ambient
        if len(comps) != k + 1:
            raise InvalidMapError(f"a self-map of P^{k} needs {k + 1} components, got {len(comps)}")
        degs = {p.degree for p in comps}
        if any(p.ambient != k for p in comps):
            raise InvalidMapError("components live in different ambient spaces")
        if len(degs) != 1:
            raise InvalidMapError(f"components have different degrees {sorted(degs)}")
        if all(p.is_zero() for p in comps):
            raise InvalidMapError("all components are zero")
        if comps[0].degree < 1:
            raise InvalidMapError("degree must be >= 1")
        self.ambient = k
        self.components = comps
        self.name = name
        self._cache = {}

    @property
    def degree(self):
        return self.components[0].degree

    @property
    def nterms(self):
        return sum(len(p) for p in self.components)

    def __eq__(self, other):
        return isinstance(other, RationalMap) and self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def __repr__(self):
        label = f"{self.name}: " if self.name else ""
        return f"RationalMap({label}[" + " : ".join(str(p) for p in self.components) + "])"

    def __call__(self, z):
        return map_eval(self, z)

    def renamed(self, name):
        return RationalMap(self.components, name)

    def is_reduced(self):
        return poly_gcd_many(self.components).degree == 0

    def equals_up_to_scalar(self, other):
        """Exact equality of the projective maps: componentwise equal after one global rescale."""
        if self.ambient != other.ambient or self.degree != other.degree:
            return False
        a = _normalized_components(self)
        b = _normalized_components(other)
        return a == b

    def partials(self):
        """``partials()[i][j] = dP_i/dz_j`` (exact, cached)."""
        if "partials" not in self._cache:
            self._cache["partials"] = tuple(
                tuple(p.partial(j) for j in range(self.ambient + 1)) for p in self.components)
        return self._cache["partials"]

    def term_table(self):
        """Float term table ``(exps, coeffs, comp)`` used by the vectorized and compiled evaluators."""
        if "table" not in self._cache:
            exps, coefs, comp = [], [], []
            for i, p in enumerate(self.components):
                for e, c in p.items():
                    exps.append(e)
                    coefs.append(complex(float(c)))
                    comp.append(i)
            self._cache["table"] = (np.array(exps, dtype=np.int64).reshape(-1, self.ambient + 1),
                                    np.array(coefs, dtype=complex), np.array(comp, dtype=np.int64))
        return self._cache["table"]

    def to_json(self):
        return [p.to_json() for p in self.components]


def _normalized_components(f):
    # scale so the graded-lex leading coefficient of the first nonzero component is 1
    first = next(p for p in f.components if not p.is_zero())
    lc = first.leading_coefficient()
    return tuple(p / lc for p in f.components)


def identity_map(k, name="identity"):
    return RationalMap(HomoPoly.gens(k), name)


@dataclass
class BirationalPair:
    forward: RationalMap
    inverse: RationalMap
    verified: bool = False
    name: str = ""

    def __post_init__(self):
        if self.forward.ambient != self.inverse.ambient:
            raise InvalidMapError("forward and inverse live on different P^k")
        if not self.name:
            self.name = self.forward.name

    @property
    def ambient(self):
        return self.forward.ambient

    @classmethod
    def checked(cls, forward, inverse, name=""):
        pair = cls(forward, inverse, False, name)
        pair.verified = verify_birational(pair)
        return pair

    def swapped(self):
        return BirationalPair(self.inverse, self.forward, self.verified, self.name + "^-1")


@dataclass
class DegreeSequence:
    """``values[n-1] = deg(f^n)`` for n = 1..N (reduced iterates)."""

    values: list
    base_degree: int = 0

    def __post_init__(self):
        d = self.base_degree or (self.values[0] if self.values else 0)
        for n, v in enumerate(self.values, start=1):
            if v > d ** n:
                raise ValueError(f"deg(f^{n}) = {v} exceeds {d}^{n}")

    def __iter__(self):
        return iter(self.values)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return self.values[i]

    def __eq__(self, other):
        if isinstance(other, DegreeSequence):
            return self.values == other.values
        return list(self.values) == list(other)


@dataclass
class StabilityReport:
    stable: bool
    degrees: list
    expected: list
    first_failure: int = None  # smallest n with deg(f^n) != d^n
    notes: list = field(default_factory=list)

    def __bool__(self):
        return self.stable

    def to_dict(self):
        return {"stable": self.stable, "degrees": self.degrees, "expected": self.expected,
                "first_failure": self.first_failure, "notes": self.notes}


def compose(f, g, budget=None):
    """Raw ``f o g``: exact substitution of g's components into f.  Not reduced."""
    if f.ambient != g.ambient:
        raise UsageError(f"ambient mismatch: P^{f.ambient} vs P^{g.ambient}")
    try:
        comps = [p.substitute(g.components, budget=budget) for p in f.components]
    except _BudgetExceeded as exc:
        raise ResourceError(f"composition exceeded the term budget ({exc.size} terms)",
                            terms=exc.size) from None
    name = f"{f.name}o{g.name}" if f.name or g.name else ""
    return RationalMap(comps, name)


def strip_content(f):
    """Divide the components by their gcd; the result has the true algebraic degree."""
    if all(p.is_zero() for p in f.components):
        raise InvalidMapError("all components are zero")
    g = poly_gcd_many(f.components)
    if g.degree == 0:
        return f
    return RationalMap([p.divide(g) if not p.is_zero() else HomoPoly.zero(f.ambient, p.degree - g.degree)
                        for p in f.components], f.name)


_memo_lock = threading.Lock()
_memo = {}


def iterate(f, n, budget=DEFAULT_TERM_BUDGET):
    """Reduced ``f^n``, stripping content after every composition step.

    Intermediate iterates are memoized per map; the memo only ever grows.
    """
    if n < 1:
        raise UsageError("iterate needs n >= 1")
    key = (f, budget)
    with _memo_lock:
        chain = _memo.setdefault(key, [strip_content(f)])
        have = list(chain)
    while len(have) < n:
        prev = have[-1]
        try:
            nxt = strip_content(compose(f, prev, budget=budget))
        except ResourceError as exc:
            exc.details["partial"] = {"completed_n": len(have),
                                      "degrees": [m.degree for m in have]}
            raise
        nxt = RationalMap(nxt.components, f"{f.name}^{len(have) + 1}" if f.name else "")
        have.append(nxt)
        with _memo_lock:
            if len(chain) < len(have):
                chain.append(nxt)
    return have[n - 1]


def degree_sequence(f, N, budget=DEFAULT_TERM_BUDGET):
    if N < 1:
        raise UsageError("N must be >= 1")
    iterate(f, N, budget)
    return DegreeSequence([iterate(f, n, budget).degree for n in range(1, N + 1)],
                          strip_content(f).degree)


def is_algebraically_stable(f, N, budget=DEFAULT_TERM_BUDGET):
    seq = degree_sequence(f, N, budget)
    d = seq.values[0]
    expected = [d ** n for n in range(1, N + 1)]
    fail = next((n for n, (a, b) in enumerate(zip(seq.values, expected), start=1) if a != b), None)
    rep = StabilityReport(fail is None, list(seq.values), expected, fail)
    if fail is not None:
        rep.notes.append(f"deg(f^{fail}) = {seq.values[fail - 1]} != {d}^{fail} = {expected[fail - 1]}")
    return rep


def _is_scalar_identity(f):
    k = f.ambient
    if f.degree != 1:
        return False
    gens = HomoPoly.gens(k)
    lam = None
    for p, z in zip(f.components, gens):
        if p.is_zero() or len(p) != 1:
            return False
        e, c = p.leading_term()
        if e != next(iter(z.terms)):
            return False
        if lam is None:
            lam = c
        elif c != lam:
            return False
    return True


def verify_birational(pair):
    """True iff both reduced composites are scalar multiples of the identity."""
    f, g = pair.forward, pair.inverse
    if f.ambient != g.ambient:
        return False
    return (_is_scalar_identity(strip_content(compose(f, g)))
            and _is_scalar_identity(strip_content(compose(g, f))))


# ---------------------------------------------------------------------------
# Floating-point evaluation
# ---------------------------------------------------------------------------

def map_eval(f, z, eps_ind=DEFAULT_EPS_IND):
    """Image lift ``F(z)``.

    Raises :class:`IndeterminacyProximity` when ``max|F(z)| < eps_ind * max|z|^d``.
    """
    z = np.asarray(z, dtype=complex).ravel()
    if z.shape[0] != f.ambient + 1:
        raise UsageError(f"lift has {z.shape[0]} coordinates, P^{f.ambient} needs {f.ambient + 1}")
    w = np.array([poly_eval(p, z) for p in f.components])
    scale = np.max(np.abs(z)) ** f.degree
    if not np.max(np.abs(w)) >= eps_ind * scale:
        raise IndeterminacyProximity("image lift is numerically zero", point=z.tolist(),
                                     ratio=float(np.max(np.abs(w)) / scale))
    return w


def map_eval_batch(f, Z, eps_ind=DEFAULT_EPS_IND):
    """Vectorized ``F`` on the rows of Z.  Returns ``(W, bad)``; ``bad`` flags indeterminacy proximity."""
    Z = np.asarray(Z, dtype=complex)
    W = np.stack([p.eval_batch(Z) for p in f.components], axis=1)
    scale = np.max(np.abs(Z), axis=1) ** f.degree
    bad = ~(np.max(np.abs(W), axis=1) >= eps_ind * scale)
    return W, bad


def map_differential(f, z):
    """``(k+1) x (k+1)`` matrix ``dP_i/dz_j`` at z."""
    z = np.asarray(z, dtype=complex).ravel()
    if z.shape[0] != f.ambient + 1:
        raise UsageError("dimension mismatch")
    return np.array([[poly_eval(q, z) for q in row] for row in f.partials()])


def map_differential_batch(f, Z):
    Z = np.asarray(Z, dtype=complex)
    k1 = f.ambient + 1
    out = np.empty((Z.shape[0], k1, k1), dtype=complex)
    for i, row in enumerate(f.partials()):
        for j, q in enumerate(row):
            out[:, i, j] = q.eval_batch(Z)
    return out


# ---------------------------------------------------------------------------
# Map files
# ---------------------------------------------------------------------------

def dump_map_file(forward, inverse=None, metadata=None, name=None):
    """Serialize to the JSON map-file format (returns a str)."""
    doc = {"k": forward.ambient, "name": name if name is not None else forward.name,
           "forward": forward.to_json()}
    if inverse is not None:
        doc["inverse"] = inverse.to_json()
    doc["metadata"] = metadata or {}
    return json.dumps(doc, indent=1)


def _parse_components(raw, k, label):
    if not isinstance(raw, list) or len(raw) != k + 1:
        raise ParseError(f"'{label}' must list {k + 1} polynomials")
    polys = [HomoPoly.from_json(p, k) for p in raw]
    degs = {p.degree for p in polys if not p.is_zero()}
    if len(degs) != 1:
        raise ParseError(f"'{label}' components do not share one degree")
    d = degs.pop()
    polys = [p if not p.is_zero() else HomoPoly.zero(k, d) for p in polys]
    try:
        return RationalMap(polys)
    except InvalidMapError as exc:
        raise ParseError(str(exc)) from exc


def load_map_file(text):
    """Parse a map file.  Returns ``(forward, inverse_or_None, metadata)``."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"map file is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "k" not in doc or "forward" not in doc:
        raise ParseError("map file needs 'k' and 'forward'")
    k = doc["k"]
    if not isinstance(k, int) or k < 1:
        raise ParseError("'k' must be a positive integer")
    name = doc.get("name", "")
    fwd = _parse_components(doc["forward"], k, "forward").renamed(name)
    inv = None
    if doc.get("inverse") is not None:
        inv = _parse_components(doc["inverse"], k, "inverse").renamed(name + "^-1" if name else "")
    return fwd, inv, doc.get("metadata", {})
