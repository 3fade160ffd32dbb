"""Exact homogeneous polynomials over Q and the projective-space helpers built on them.

Coefficients are :class:`fractions.Fraction` (always reduced, positive
denominator, zero stored as 0/1).  A :class:`HomoPoly` is an immutable map from
exponent vectors of length ``ambient + 1`` to nonzero coefficients, every
exponent vector summing to the declared degree.  The zero polynomial keeps its
declared degree so composition bookkeeping stays well defined.

Monomial order everywhere is graded lexicographic with ``z0 > z1 > ... > zk``.
"""

import json
import math
from fractions import Fraction
from functools import reduce
from numbers import Rational

import numpy as np

from .errors import ParseError, UsageError

__all__ = [
    "HomoPoly", "as_fraction", "poly_eval", "poly_eval_exact", "poly_mul", "poly_gcd",
    "poly_gcd_many", "poly_partial", "as_lift", "normalize_lift", "fs_distance",
    "fs_uniform", "linear_form",
]


def as_fraction(x):
    """Convert ``x`` to an exact :class:`Fraction`.

    Floats go through their shortest decimal repr, so ``0.3`` becomes ``3/10``
    rather than the binary expansion.  Strings may be ``"3/10"`` or decimals.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (bool, np.bool_)):
        raise UsageError("boolean is not a coefficient")
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, Rational):
        return Fraction(x.numerator, x.denominator)
    if isinstance(x, (float, np.floating)):
        if not math.isfinite(x):
            raise UsageError(f"non-finite coefficient {x!r}")
        return Fraction(repr(float(x)))
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"bad rational literal {x!r}") from exc
    raise UsageError(f"cannot use {type(x).__name__} as an exact coefficient")


def _grlex_key(exps):
    return (sum(exps), exps)


# ---------------------------------------------------------------------------
# Sparse dict arithmetic (exponent tuple -> Fraction), shared by HomoPoly and the
# affine gcd below.  Dicts never hold zero coefficients.
# ---------------------------------------------------------------------------

def _d_add(a, b, sign=1):
    out = dict(a)
    for e, c in b.items():
        v = out.get(e, 0) + sign * c
        if v:
            out[e] = v
        else:
            out.pop(e, None)
    return out


def _d_scale(a, c):
    if not c:
        return {}
    return {e: v * c for e, v in a.items()}


def _d_mul(a, b):
    if len(a) > len(b):
        a, b = b, a
    out = {}
    get = out.get
    for ea, ca in a.items():
        for eb, cb in b.items():
            e = tuple(x + y for x, y in zip(ea, eb))
            out[e] = get(e, 0) + ca * cb
    return {e: c for e, c in out.items() if c}


def _d_shift(a, mono):
    return {tuple(x + y for x, y in zip(e, mono)): c for e, c in a.items()}


def _d_lead(a):
    # lex leading exponent; for the affine gcd the order only needs to be a
    # monomial order, lex is cheapest.
    return max(a)


def _d_divexact(a, b):
    """Exact quotient a / b; raises ArithmeticError when b does not divide a."""
    if not b:
        raise ZeroDivisionError("division by the zero polynomial")
    if not a:
        return {}
    lb = _d_lead(b)
    cb = b[lb]
    r = dict(a)
    q = {}
    while r:
        lr = max(r)
        diff = tuple(x - y for x, y in zip(lr, lb))
        if min(diff) < 0:
            raise ArithmeticError("polynomial division is not exact")
        t = r[lr] / cb
        q[diff] = t
        for e, c in b.items():
            ee = tuple(x + y for x, y in zip(e, diff))
            v = r.get(ee, 0) - t * c
            if v:
                r[ee] = v
            else:
                r.pop(ee, None)
    return q


def _d_min_exps(a, nvars):
    if not a:
        return (0,) * nvars
    return tuple(min(e[i] for e in a) for i in range(nvars))


# --- affine multivariate gcd over Q -----------------------------------------

def _to_recursive(a, m):
    """Split a dict in m variables into dense coefficients in the last variable."""
    deg = max(e[m - 1] for e in a)
    coeffs = [dict() for _ in range(deg + 1)]
    for e, c in a.items():
        coeffs[e[m - 1]][e[:m - 1]] = c
    return coeffs


def _from_recursive(coeffs):
    out = {}
    for j, cj in enumerate(coeffs):
        for e, c in cj.items():
            out[e + (j,)] = c
    return out


def _r_strip(p):
    while p and not p[-1]:
        p.pop()
    return p


def _r_prem(A, B):
    """Pseudo-remainder of A by B in D[x], D = Q[x_0..x_{m-2}] (dict coefficients)."""
    db = len(B) - 1
    lcB = B[-1]
    r = [dict(c) for c in A]
    e = len(A) - len(B) + 1
    while r and len(r) - 1 >= db:
        dr = len(r) - 1
        lt = r[-1]
        shift = dr - db
        r = [_d_mul(c, lcB) for c in r]
        for j, bj in enumerate(B):
            if bj:
                r[j + shift] = _d_add(r[j + shift], _d_mul(lt, bj), -1)
        _r_strip(r)
        e -= 1
    if r and e > 0:
        f = reduce(_d_mul, [lcB] * e)
        r = [_d_mul(c, f) for c in r]
    return r


def _r_content(p, m):
    g = None
    for c in p:
        if not c:
            continue
        g = dict(c) if g is None else _affine_gcd(g, c, m - 1)
        if len(g) == 1 and not any(next(iter(g))):
            break
    return g


def _affine_gcd(a, b, m):
    """gcd over Q of affine polynomials in m variables (dicts), unnormalized."""
    if not a:
        return dict(b)
    if not b:
        return dict(a)
    if m == 0:
        return {(): Fraction(1)}
    # shared monomial content first: cheap and keeps the recursion small
    ma = _d_min_exps(a, m)
    mb = _d_min_exps(b, m)
    mono = tuple(min(x, y) for x, y in zip(ma, mb))
    if any(ma):
        a = _d_shift(a, tuple(-x for x in ma))
    if any(mb):
        b = _d_shift(b, tuple(-x for x in mb))
    mono_d = {mono: Fraction(1)}
    if len(a) == 1 or len(b) == 1:
        return mono_d
    if m == 1:
        g = _univariate_gcd(a, b)
        return _d_mul(g, mono_d)
    # variables absent from both: drop to fewer variables
    A = _to_recursive(a, m)
    B = _to_recursive(b, m)
    if len(A) == 1 and len(B) == 1:
        g = _affine_gcd(A[0], B[0], m - 1)
        return _d_mul({e + (0,): c for e, c in g.items()}, mono_d)
    g = _subresultant_gcd(A, B, m)
    return _d_mul(_from_recursive(g), mono_d)


def _univariate_gcd(a, b):
    # dense Euclid over Q, monic result
    def dense(d):
        n = max(e[0] for e in d)
        out = [Fraction(0)] * (n + 1)
        for e, c in d.items():
            out[e[0]] = c
        return out

    f, g = dense(a), dense(b)
    if len(f) < len(g):
        f, g = g, f
    while g:
        lg = g[-1]
        r = list(f)
        while len(r) >= len(g):
            t = r[-1] / lg
            shift = len(r) - len(g)
            for j, gj in enumerate(g):
                r[j + shift] -= t * gj
            r.pop()
            while r and not r[-1]:
                r.pop()
        f, g = g, r
    lf = f[-1]
    return {(j,): c / lf for j, c in enumerate(f) if c}


def _subresultant_gcd(A, B, m):
    """gcd of A, B in D[x] via the subresultant PRS (Brown/Collins)."""
    if len(A) < len(B):
        A, B = B, A
    ca = _r_content(A, m)
    cb = _r_content(B, m)
    d = _affine_gcd(ca, cb, m - 1)
    A = [_d_divexact(c, ca) if c else {} for c in A]
    B = [_d_divexact(c, cb) if c else {} for c in B]
    g = {(0,) * (m - 1): Fraction(1)}
    h = g
    while True:
        delta = len(A) - len(B)
        R = _r_prem(A, B)
        if not R:
            break
        if len(R) == 1:
            B = [{(0,) * (m - 1): Fraction(1)}]
            break
        A = B
        hd = reduce(_d_mul, [h] * delta) if delta else {(0,) * (m - 1): Fraction(1)}
        div = _d_mul(g, hd)
        B = [_d_divexact(c, div) if c else {} for c in R]
        g = A[-1]
        if delta == 0:
            pass
        elif delta == 1:
            h = g
        else:
            h = _d_divexact(reduce(_d_mul, [g] * delta), reduce(_d_mul, [h] * (delta - 1)))
    cB = _r_content(B, m)
    B = [_d_divexact(c, cB) if c else {} for c in B]
    return [_d_mul(c, d) if c else {} for c in B]


class HomoPoly:
    """Homogeneous polynomial in ``ambient + 1`` variables with exact rational coefficients.

    Parameters
    ----------
    ambient : int
        Projective dimension k; the polynomial lives in ``z0, ..., zk``.
    degree : int
        Declared total degree.  Must match every exponent vector.
    terms : mapping
        Exponent tuple -> coefficient (anything :func:`as_fraction` accepts).
        Zero coefficients are dropped.
    """

    __slots__ = ("ambient", "degree", "_terms", "_hash")

    def __init__(self, ambient, degree, terms=None):
        if int(ambient) < 1:
            raise UsageError("ambient dimension must be >= 1")
        if int(degree) < 0:
            raise UsageError("degree must be >= 0")
        self.ambient = int(ambient)
        self.degree = int(degree)
        clean = {}
        for e, c in (terms or {}).items():
            e = tuple(int(x) for x in e)
            if len(e) != self.ambient + 1:
                raise UsageError(f"exponent {e} has wrong length for k={self.ambient}")
            if min(e) < 0:
                raise UsageError(f"negative exponent in {e}")
            if sum(e) != self.degree:
                raise UsageError(f"exponent {e} does not have degree {self.degree}")
            c = as_fraction(c)
            if c:
                clean[e] = clean.get(e, 0) + c
        self._terms = {e: c for e, c in clean.items() if c}
        self._hash = None

    @classmethod
    def _raw(cls, ambient, degree, terms):
        obj = cls.__new__(cls)
        obj.ambient = ambient
        obj.degree = degree
        obj._terms = terms
        obj._hash = None
        return obj

    # -- constructors --------------------------------------------------------
    @classmethod
    def zero(cls, ambient, degree=0):
        return cls(ambient, degree)

    @classmethod
    def constant(cls, ambient, c=1):
        return cls(ambient, 0, {(0,) * (ambient + 1): c})

    @classmethod
    def variable(cls, ambient, i):
        if not 0 <= i <= ambient:
            raise UsageError(f"variable index {i} out of range for k={ambient}")
        e = [0] * (ambient + 1)
        e[i] = 1
        return cls(ambient, 1, {tuple(e): 1})

    @classmethod
    def monomial(cls, exps, coeff=1):
        exps = tuple(exps)
        return cls(len(exps) - 1, sum(exps), {exps: coeff})

    @classmethod
    def gens(cls, ambient):
        return tuple(cls.variable(ambient, i) for i in range(ambient + 1))

    # -- basic access --------------------------------------------------------
    @property
    def terms(self):
        return dict(self._terms)

    @property
    def nvars(self):
        return self.ambient + 1

    def is_zero(self):
        return not self._terms

    def is_monomial(self):
        return len(self._terms) == 1

    def is_constant(self):
        return self.degree == 0 or not self._terms

    def __len__(self):
        return len(self._terms)

    def items(self):
        """Terms in descending graded-lex order."""
        return sorted(self._terms.items(), key=lambda t: _grlex_key(t[0]), reverse=True)

    def leading_term(self):
        if not self._terms:
            raise UsageError("zero polynomial has no leading term")
        e = max(self._terms, key=_grlex_key)
        return e, self._terms[e]

    def leading_coefficient(self):
        return self.leading_term()[1]

    def monic(self):
        if not self._terms:
            return self
        lc = self.leading_coefficient()
        if lc == 1:
            return self
        return HomoPoly._raw(self.ambient, self.degree, _d_scale(self._terms, 1 / lc))

    def min_exponents(self):
        return _d_min_exps(self._terms, self.nvars)

    # -- arithmetic ----------------------------------------------------------
    def _check(self, other):
        if not isinstance(other, HomoPoly):
            raise UsageError(f"expected HomoPoly, got {type(other).__name__}")
        if other.ambient != self.ambient:
            raise UsageError(f"ambient mismatch: k={self.ambient} vs k={other.ambient}")

    def _addsub(self, other, sign):
        if not isinstance(other, HomoPoly):
            other = HomoPoly.constant(self.ambient, as_fraction(other)) if self.degree == 0 \
                else NotImplemented
            if other is NotImplemented:
                return other
        self._check(other)
        if self._terms and other._terms and other.degree != self.degree:
            raise UsageError("cannot add homogeneous polynomials of different degrees")
        deg = self.degree if self._terms or not other._terms else other.degree
        return HomoPoly._raw(self.ambient, deg, _d_add(self._terms, other._terms, sign))

    def __add__(self, other):
        return self._addsub(other, 1)

    def __sub__(self, other):
        return self._addsub(other, -1)

    def __neg__(self):
        return HomoPoly._raw(self.ambient, self.degree, _d_scale(self._terms, -1))

    def __mul__(self, other):
        if isinstance(other, HomoPoly):
            self._check(other)
            return HomoPoly._raw(self.ambient, self.degree + other.degree,
                                 _d_mul(self._terms, other._terms))
        try:
            c = as_fraction(other)
        except (UsageError, ParseError):
            return NotImplemented
        return HomoPoly._raw(self.ambient, self.degree, _d_scale(self._terms, c))

    def __rmul__(self, other):
        return self.__mul__(other)

    def __truediv__(self, other):
        if isinstance(other, HomoPoly):
            return self.divide(other)
        c = as_fraction(other)
        if not c:
            raise ZeroDivisionError("division by zero")
        return HomoPoly._raw(self.ambient, self.degree, _d_scale(self._terms, 1 / c))

    def __pow__(self, n):
        n = int(n)
        if n < 0:
            raise UsageError("negative power")
        result = HomoPoly.constant(self.ambient, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    def divide(self, other):
        """Exact quotient; raises :class:`ArithmeticError` if ``other`` does not divide ``self``."""
        self._check(other)
        if other.is_zero():
            raise ZeroDivisionError("division by the zero polynomial")
        q = _d_divexact(self._terms, other._terms)
        return HomoPoly._raw(self.ambient, self.degree - other.degree, q)

    def divides(self, other):
        try:
            other.divide(self)
        except ArithmeticError:
            return False
        return True

    def __eq__(self, other):
        if not isinstance(other, HomoPoly):
            if self.degree == 0 or not self._terms:
                try:
                    c = as_fraction(other)
                except (UsageError, ParseError):
                    return NotImplemented
                return self._terms.get((0,) * self.nvars, 0) == c
            return NotImplemented
        return (self.ambient == other.ambient and self._terms == other._terms
                and (self.degree == other.degree or not self._terms))

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.ambient, self.degree, frozenset(self._terms.items())))
        return self._hash

    def is_scalar_multiple(self, other):
        """True iff ``self = c * other`` for a nonzero rational c."""
        self._check(other)
        if self.is_zero() or other.is_zero():
            return self.is_zero() and other.is_zero()
        return self.monic() == other.monic()

    # -- calculus and substitution -------------------------------------------
    def partial(self, i):
        if not 0 <= i <= self.ambient:
            raise UsageError(f"variable index {i} out of range for k={self.ambient}")
        out = {}
        for e, c in self._terms.items():
            if e[i]:
                ee = list(e)
                ee[i] -= 1
                out[tuple(ee)] = c * e[i]
        return HomoPoly._raw(self.ambient, max(self.degree - 1, 0), out)

    def substitute(self, polys, budget=None):
        """Compose: replace ``z_i`` by ``polys[i]`` (all of one degree e).  Result has degree deg*e."""
        polys = list(polys)
        if len(polys) != self.nvars:
            raise UsageError(f"need {self.nvars} polynomials to substitute, got {len(polys)}")
        amb = polys[0].ambient
        e = polys[0].degree
        for p in polys:
            if p.ambient != amb or (p.degree != e and not p.is_zero()):
                raise UsageError("substituted polynomials must share ambient and degree")
        maxexp = [max((t[i] for t in self._terms), default=0) for i in range(self.nvars)]
        one = {(0,) * (amb + 1): Fraction(1)}
        powers = []
        for i, p in enumerate(polys):
            row = [one]
            for _ in range(maxexp[i]):
                row.append(_d_mul(row[-1], p._terms))
                if budget is not None and len(row[-1]) > budget:
                    raise _BudgetExceeded(len(row[-1]))
            powers.append(row)
        acc = {}
        for exps, c in self._terms.items():
            prod = None
            for i, k in enumerate(exps):
                if k:
                    prod = powers[i][k] if prod is None else _d_mul(prod, powers[i][k])
            if prod is None:
                prod = one
            acc = _d_add(acc, _d_scale(prod, c))
            if budget is not None and len(acc) > budget:
                raise _BudgetExceeded(len(acc))
        return HomoPoly._raw(amb, self.degree * e, acc)

    # -- evaluation ----------------------------------------------------------
    def __call__(self, z):
        return poly_eval(self, z)

    def eval_exact(self, z):
        return poly_eval_exact(self, z)

    def eval_batch(self, Z):
        """Evaluate at many lifts; ``Z`` has shape (n, k+1).  Neumaier-compensated."""
        Z = np.asarray(Z, dtype=complex)
        if Z.ndim != 2 or Z.shape[1] != self.nvars:
            raise UsageError(f"expected lifts of shape (n, {self.nvars}), got {Z.shape}")
        n = Z.shape[0]
        if not self._terms:
            return np.zeros(n, dtype=complex)
        items = self.items()
        maxe = [max(e[i] for e, _ in items) for i in range(self.nvars)]
        pw = []
        for i in range(self.nvars):
            row = [np.ones(n, dtype=complex)]
            for _ in range(maxe[i]):
                row.append(row[-1] * Z[:, i])
            pw.append(row)
        sr = np.zeros(n)
        cr = np.zeros(n)
        si = np.zeros(n)
        ci = np.zeros(n)
        for e, c in items:
            v = np.full(n, complex(float(c)))
            for i, k in enumerate(e):
                if k:
                    v = v * pw[i][k]
            for s, comp, x in ((sr, cr, v.real), (si, ci, v.imag)):
                t = s + x
                big = np.abs(s) >= np.abs(x)
                comp += np.where(big, (s - t) + x, (x - t) + s)
                s[...] = t
        return (sr + cr) + 1j * (si + ci)

    # -- display and serialization -------------------------------------------
    def __repr__(self):
        return f"HomoPoly(k={self.ambient}, deg={self.degree}, {self})"

    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for e, c in self.items():
            mono = "*".join(f"z{i}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(e) if k)
            if mono:
                if c == 1:
                    s = mono
                elif c == -1:
                    s = "-" + mono
                else:
                    s = f"{c}*{mono}"
            else:
                s = str(c)
            parts.append(s)
        return " + ".join(parts).replace("+ -", "- ")

    def to_json(self):
        """List of ``[numerator, denominator, exponents]`` with decimal-string integers."""
        return [[str(c.numerator), str(c.denominator), list(e)] for e, c in self.items()]

    @classmethod
    def from_json(cls, data, ambient, degree=None):
        try:
            terms = {}
            for num, den, exps in data:
                c = Fraction(int(num), int(den))
                e = tuple(int(x) for x in exps)
                terms[e] = terms.get(e, 0) + c
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise ParseError(f"malformed polynomial term list: {exc}") from exc
        degs = {sum(e) for e in terms}
        if degree is None:
            if len(degs) > 1:
                raise ParseError("polynomial is not homogeneous")
            degree = degs.pop() if degs else 0
        try:
            return cls(ambient, degree, terms)
        except UsageError as exc:
            raise ParseError(str(exc)) from exc

    def dumps(self):
        return json.dumps(self.to_json())


class _BudgetExceeded(Exception):
    def __init__(self, size):
        super().__init__(size)
        self.size = size


# ---------------------------------------------------------------------------
# Operation-level API
# ---------------------------------------------------------------------------

def poly_eval(p, z):
    """Float evaluation at one lift, summing terms in graded-lex order with ``math.fsum``."""
    z = np.asarray(z, dtype=complex).ravel()
    if z.shape[0] != p.nvars:
        raise UsageError(f"lift has {z.shape[0]} coordinates, polynomial needs {p.nvars}")
    re = []
    im = []
    for e, c in p.items():
        v = complex(float(c))
        for zi, k in zip(z, e):
            if k:
                v *= zi ** k
        re.append(v.real)
        im.append(v.imag)
    return complex(math.fsum(re), math.fsum(im))


def poly_eval_exact(p, z):
    """Exact evaluation at a rational lift."""
    if len(z) != p.nvars:
        raise UsageError(f"lift has {len(z)} coordinates, polynomial needs {p.nvars}")
    zq = [as_fraction(x) for x in z]
    total = Fraction(0)
    for e, c in p._terms.items():
        v = c
        for x, k in zip(zq, e):
            if k:
                v *= x ** k
        total += v
    return total


def poly_mul(a, b):
    return a * b


def poly_partial(p, variable_index):
    return p.partial(variable_index)


def poly_gcd(a, b):
    """Greatest common divisor over Q, monic under graded-lex order.

    Monomial content is split off first; the remainder is dehomogenized at
    ``z0 = 1`` and handled by a recursive content / primitive-part scheme with a
    subresultant PRS in the last variable, then homogenized back.
    """
    a._check(b)
    if a.is_zero() and b.is_zero():
        raise UsageError("gcd of two zero polynomials is undefined")
    if a.is_zero():
        return b.monic()
    if b.is_zero():
        return a.monic()
    k1 = a.nvars
    ma = a.min_exponents()
    mb = b.min_exponents()
    mono = tuple(min(x, y) for x, y in zip(ma, mb))
    mono_p = HomoPoly.monomial(mono)
    if a.is_monomial() or b.is_monomial():
        return mono_p
    ra = {tuple(x - y for x, y in zip(e, ma)): c for e, c in a._terms.items()}
    rb = {tuple(x - y for x, y in zip(e, mb)): c for e, c in b._terms.items()}
    # dehomogenize at z0 = 1; neither ra nor rb is divisible by z0 any more
    aa = {}
    for e, c in ra.items():
        aa[e[1:]] = aa.get(e[1:], 0) + c
    bb = {}
    for e, c in rb.items():
        bb[e[1:]] = bb.get(e[1:], 0) + c
    g = _affine_gcd(aa, bb, k1 - 1)
    gdeg = max(sum(e) for e in g)
    hom = {(gdeg - sum(e),) + e: c for e, c in g.items()}
    out = HomoPoly._raw(a.ambient, gdeg, hom) * mono_p
    return out.monic()


def poly_gcd_many(polys):
    """gcd of a sequence, stopping early once it is constant."""
    polys = [p for p in polys]
    if not polys:
        raise UsageError("gcd of an empty list")
    nz = [p for p in polys if not p.is_zero()]
    if not nz:
        raise UsageError("gcd of zero polynomials is undefined")
    # monomials first: their gcd is cheap and usually kills everything
    nz.sort(key=lambda p: (not p.is_monomial(), len(p)))
    g = nz[0].monic()
    for p in nz[1:]:
        if g.degree == 0:
            break
        g = poly_gcd(g, p)
    return g


def linear_form(coeffs):
    """Degree-1 HomoPoly from a coefficient list ``[c0, ..., ck]``."""
    k = len(coeffs) - 1
    terms = {}
    for i, c in enumerate(coeffs):
        e = [0] * (k + 1)
        e[i] = 1
        terms[tuple(e)] = c
    return HomoPoly(k, 1, terms)


# ---------------------------------------------------------------------------
# Lifts and projective points
# ---------------------------------------------------------------------------

def as_lift(z, ambient=None):
    """Validate a lift: finite complex vector, not identically zero."""
    z = np.asarray(z, dtype=complex)
    if z.ndim != 1:
        raise UsageError("a lift is a 1-d coordinate vector")
    if ambient is not None and z.shape[0] != ambient + 1:
        raise UsageError(f"lift has {z.shape[0]} coordinates, expected {ambient + 1}")
    if not np.all(np.isfinite(z)):
        raise UsageError("lift has non-finite coordinates")
    if not np.any(z):
        raise UsageError("the zero vector is not a lift")
    return z


def normalize_lift(z):
    """Canonical representative: unit Euclidean norm, first nonzero coordinate real positive.

    Works on a single lift or on rows of an (n, k+1) array.
    """
    z = np.asarray(z, dtype=complex)
    if z.ndim == 1:
        return normalize_lift(z[None, :])[0]
    norms = np.linalg.norm(z, axis=1)
    if np.any(norms == 0) or not np.all(np.isfinite(norms)):
        raise UsageError("cannot normalize a zero or non-finite lift")
    z = z / norms[:, None]
    idx = np.argmax(np.abs(z) > 1e-300, axis=1)
    lead = z[np.arange(len(z)), idx]
    return z * (np.abs(lead) / lead)[:, None]


def fs_distance(a, b):
    """Fubini-Study distance (radians, in [0, pi/2]) between the points of two lifts.

    Broadcasts over leading axes.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    num = np.abs(np.sum(a * np.conj(b), axis=-1))
    den = np.linalg.norm(a, axis=-1) * np.linalg.norm(b, axis=-1)
    return np.arccos(np.clip(num / den, 0.0, 1.0))


def fs_uniform(k, n, rng):
    """``n`` unit lifts whose points are Fubini-Study uniform on P^k.

    Normalized standard complex Gaussians in C^{k+1}; exactly unitary invariant.
    """
    g = rng.standard_normal((n, k + 1)) + 1j * rng.standard_normal((n, k + 1))
    return g / np.linalg.norm(g, axis=1)[:, None]
