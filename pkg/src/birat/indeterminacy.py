"""Indeterminacy sets and sampled regularity checks.

Regions are unions of Fubini-Study balls and angular tubes around projective
linear subspaces ("cones"), optionally complemented.  All checks are sampling
based; reports carry the seed and sample counts and a pass is labelled
``"sampled-pass"``, never a proof.
"""

import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import ParseError, UsageError
from .projalg import HomoPoly, as_fraction, fs_distance, fs_uniform, normalize_lift
from .ratmap import BirationalPair, iterate, map_differential_batch, map_eval_batch

__all__ = [
    "Ball", "Cone", "RegionSpec", "RegionIntersection", "WitnessSubspace", "RegularityReport",
    "ClusterPoint",
    "candidate_check", "numeric_scan", "iterated_indeterminacy_containment", "check_regular",
    "regions_from_json", "regions_to_json", "load_regions", "residual",
    "DEFAULT_TOL", "MERGE_RADIUS", "SEPARATION_MARGIN", "ROLES",
]

ROLES = ("V+", "V-", "U+", "U-", "U")
DEFAULT_TOL = 1e-8
MERGE_RADIUS = 1e-3
SEPARATION_MARGIN = 1e-3


def _form_vector(form, k):
    """Coefficient vector of a linear form given as a HomoPoly or a sequence of numbers."""
    if isinstance(form, HomoPoly):
        if form.degree != 1 or form.ambient != k:
            raise UsageError("linear forms must be degree-1 polynomials on the same P^k")
        v = np.zeros(k + 1, dtype=complex)
        for e, c in form.terms.items():
            v[e.index(1)] = complex(float(c))
        return v
    v = np.asarray(form, dtype=complex).ravel()
    if v.shape[0] != k + 1:
        raise UsageError(f"linear form needs {k + 1} coefficients")
    return v


def _null_basis(A, k):
    """Orthonormal basis (columns) of ``{z : A z = 0}`` in C^{k+1}."""
    if A.shape[0] == 0:
        return np.eye(k + 1, dtype=complex)
    _, s, vh = np.linalg.svd(A)
    rank = int(np.sum(s > 1e-12 * max(s[0], 1e-300)))
    return vh[rank:].conj().T


def _random_unit_perp(basis, n, rng, k):
    """Unit vectors orthogonal to span(basis columns) (or anywhere if basis is empty)."""
    g = rng.standard_normal((n, k + 1)) + 1j * rng.standard_normal((n, k + 1))
    if basis is not None and basis.shape[1]:
        g = g - (g @ basis.conj()) @ basis.T
    return g / np.linalg.norm(g, axis=1)[:, None]


@dataclass(frozen=True)
class Ball:
    """Fubini-Study ball of ``radius`` (radians) about a projective point."""
    center: tuple
    radius: float

    def __post_init__(self):
        if not 0.0 < self.radius < np.pi / 2:
            raise UsageError("ball radius must lie in (0, pi/2)")
        c = normalize_lift(np.asarray(self.center, dtype=complex))
        object.__setattr__(self, "center", tuple(complex(x) for x in c))

    @property
    def k(self):
        return len(self.center) - 1

    def core_distance(self, Z):
        return fs_distance(Z, np.asarray(self.center))

    def enlarged(self, by):
        return Ball(self.center, self.radius + by)

    def sample(self, n, rng, t):
        c = np.asarray(self.center)
        v = _random_unit_perp(c[:, None], n, rng, self.k)
        return np.cos(t)[:, None] * c[None, :] + np.sin(t)[:, None] * v

    def to_json(self):
        return {"center": [str(complex(c)) for c in self.center], "radius": self.radius}


@dataclass(frozen=True)
class Cone:
    """Angular tube ``{x : dist_FS(x, P(W)) < radius}`` about the subspace ``W = {forms = 0}``."""
    forms: tuple
    radius: float
    k: int

    def __post_init__(self):
        if not 0.0 < self.radius < np.pi / 2:
            raise UsageError("cone radius must lie in (0, pi/2)")
        if not self.forms or len(self.forms) > self.k:
            raise UsageError("a cone needs between 1 and k linear forms")
        A = np.array([_form_vector(f, self.k) for f in self.forms])
        basis = _null_basis(A, self.k)
        if basis.shape[1] != self.k + 1 - len(self.forms):
            raise UsageError("cone forms are linearly dependent")
        object.__setattr__(self, "_basis", basis)

    def core_distance(self, Z):
        Z = np.asarray(Z, dtype=complex)
        B = self._basis
        proj = np.linalg.norm(Z @ B.conj(), axis=-1)
        return np.arccos(np.clip(proj / np.linalg.norm(Z, axis=-1), 0.0, 1.0))

    def enlarged(self, by):
        return Cone(self.forms, self.radius + by, self.k)

    def sample(self, n, rng, t):
        B = self._basis
        g = rng.standard_normal((n, B.shape[1])) + 1j * rng.standard_normal((n, B.shape[1]))
        w = g @ B.T
        w /= np.linalg.norm(w, axis=1)[:, None]
        v = _random_unit_perp(B, n, rng, self.k)
        return np.cos(t)[:, None] * w + np.sin(t)[:, None] * v

    def to_json(self):
        return {"forms": [f.to_json() if isinstance(f, HomoPoly) else [str(complex(c)) for c in f]
                          for f in self.forms], "radius": self.radius}


@dataclass(frozen=True)
class RegionSpec:
    """Open region of P^k: a union of balls and cones, or the complement of its closure."""
    role: str
    shapes: tuple
    complement: bool = False

    def __post_init__(self):
        if self.role not in ROLES:
            raise UsageError(f"region role must be one of {ROLES}, got {self.role!r}")
        if not self.shapes:
            raise UsageError("a region needs at least one shape")
        if len({s.k for s in self.shapes}) != 1:
            raise UsageError("region shapes live in different P^k")
        object.__setattr__(self, "shapes", tuple(self.shapes))

    @property
    def k(self):
        return self.shapes[0].k

    def _core_margin(self, Z):
        """``min_s (dist to core_s - radius_s)``: negative inside the union of shapes."""
        Z = np.atleast_2d(np.asarray(Z, dtype=complex))
        return np.min([s.core_distance(Z) - s.radius for s in self.shapes], axis=0)

    def contains(self, Z):
        m = self._core_margin(Z)
        return m >= 0 if self.complement else m < 0

    def distance_to_closure(self, Z):
        """Lower bound on the FS distance from each lift to the closure of the region (exact
        for a single shape)."""
        m = self._core_margin(Z)
        if self.complement:
            return np.maximum(0.0, -m)
        return np.maximum(0.0, m)

    def enlarged(self, by):
        """Region grown by ``by`` radians (a complement region shrinks)."""
        sign = -1.0 if self.complement else 1.0
        return RegionSpec(self.role, tuple(s.enlarged(sign * by) for s in self.shapes),
                          self.complement)

    def with_role(self, role):
        return RegionSpec(role, self.shapes, self.complement)

    def sample(self, n, rng, boundary_fraction=0.5, max_tries=200):
        """``n`` lifts inside the region; a share of them on the shapes' boundaries."""
        k = self.k
        if self.complement:
            out = []
            have = 0
            for _ in range(max_tries):
                Z = fs_uniform(k, max(4 * (n - have), 64), rng)
                Z = Z[self.contains(Z)]
                out.append(Z)
                have += len(Z)
                if have >= n:
                    break
            Z = np.concatenate(out)[:n] if out else np.empty((0, k + 1), complex)
            if len(Z) < n:
                raise UsageError(f"region {self.role} is too small to sample by rejection")
            return Z
        which = rng.integers(0, len(self.shapes), n)
        Z = np.empty((n, k + 1), complex)
        for i, s in enumerate(self.shapes):
            idx = np.flatnonzero(which == i)
            if not len(idx):
                continue
            t = s.radius * np.sqrt(rng.uniform(0, 1, len(idx)))
            t[rng.uniform(0, 1, len(idx)) < boundary_fraction] = s.radius * (1 - 1e-12)
            Z[idx] = s.sample(len(idx), rng, t)
        return Z

    def to_json(self):
        return {"role": self.role, "complement": self.complement,
                "balls": [s.to_json() for s in self.shapes if isinstance(s, Ball)],
                "cones": [s.to_json() for s in self.shapes if isinstance(s, Cone)]}


@dataclass(frozen=True)
class RegionIntersection:
    """Intersection of regions; only membership is supported."""
    regions: tuple

    def contains(self, Z):
        out = self.regions[0].contains(Z)
        for r in self.regions[1:]:
            out = out & r.contains(Z)
        return out

    @classmethod
    def of_roles(cls, regions, roles=("U+", "U-")):
        """Intersection of the regions carrying ``roles``; None unless each role is present."""
        picked = [r for role in roles for r in regions if r.role == role]
        return cls(tuple(picked)) if len(picked) == len(roles) else None


@dataclass(frozen=True)
class WitnessSubspace:
    """Projective linear subspace ``{forms = 0}`` carrying a witness positive form.

    ``role`` says which regularity form it stands in for: ``"+"`` (avoids V or V+) or ``"-"``
    (avoids V-).
    """
    forms: tuple
    k: int
    role: str = "+"
    dimension: int = None

    def __post_init__(self):
        if self.role not in ("+", "-"):
            raise UsageError("witness role must be '+' or '-'")
        A = np.array([_form_vector(f, self.k) for f in self.forms]).reshape(len(self.forms), self.k + 1)
        basis = _null_basis(A, self.k)
        if basis.shape[1] != self.k + 1 - len(self.forms):
            raise UsageError("witness forms are linearly dependent")
        if basis.shape[1] == 0:
            raise UsageError("witness forms cut out the empty set")
        object.__setattr__(self, "_basis", basis)
        if self.dimension is None:
            object.__setattr__(self, "dimension", self.k - len(self.forms))

    @property
    def actual_dimension(self):
        return self._basis.shape[1] - 1

    def sample(self, n, rng):
        B = self._basis
        g = rng.standard_normal((n, B.shape[1])) + 1j * rng.standard_normal((n, B.shape[1]))
        w = g @ B.T
        return w / np.linalg.norm(w, axis=1)[:, None]

    def to_json(self):
        return {"role": self.role, "dimension": self.dimension,
                "forms": [f.to_json() if isinstance(f, HomoPoly) else [str(complex(c)) for c in f]
                          for f in self.forms]}


# ---------------------------------------------------------------------------
# Regions file
# ---------------------------------------------------------------------------

def _parse_form(raw, k):
    if raw and isinstance(raw[0], str):
        return tuple(complex(x) for x in raw)
    return HomoPoly.from_json(raw, k, 1)


def _infer_k(doc):
    for r in doc.get("regions", []):
        for b in r.get("balls", []):
            return len(b["center"]) - 1
        for c in r.get("cones", []):
            f = c["forms"][0]
            return len(f) - 1 if f and isinstance(f[0], str) else len(f[0][2]) - 1
    raise ParseError("cannot infer the dimension k from the regions file")


def regions_from_json(doc, k=None):
    """Parse a regions document into ``(regions, witnesses, definition)``."""
    try:
        if isinstance(doc, str):
            doc = json.loads(doc)
        k = doc.get("k", k) if k is None else k
        k = _infer_k(doc) if k is None else int(k)
        regions = []
        for r in doc["regions"]:
            shapes = [Ball(tuple(complex(c) for c in b["center"]), float(b["radius"]))
                      for b in r.get("balls", [])]
            shapes += [Cone(tuple(_parse_form(f, k) for f in c["forms"]), float(c["radius"]), k)
                       for c in r.get("cones", [])]
            regions.append(RegionSpec(r["role"], tuple(shapes), bool(r.get("complement", False))))
        witnesses = [WitnessSubspace(tuple(_parse_form(f, k) for f in w["forms"]), k,
                                     w.get("role", "+"), w.get("dimension"))
                     for w in doc.get("witnesses", [])]
    except UsageError as exc:
        raise ParseError(f"invalid regions file: {exc}") from exc
    except (KeyError, TypeError, ValueError, IndexError, AttributeError) as exc:
        raise ParseError(f"malformed regions file: {exc!r}") from exc
    return regions, witnesses, str(doc.get("definition", "one-sided"))


def regions_to_json(regions, witnesses=(), definition="one-sided"):
    return {"definition": definition, "regions": [r.to_json() for r in regions],
            "witnesses": [w.to_json() for w in witnesses]}


def load_regions(path, k=None):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read regions file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"regions file {path} is not valid JSON: {exc}") from exc
    return regions_from_json(doc, k)


# ---------------------------------------------------------------------------
# Indeterminacy points
# ---------------------------------------------------------------------------

def candidate_check(f, p):
    """True iff every component of ``f`` vanishes exactly at the rational point ``p``."""
    if len(p) != f.ambient + 1:
        raise UsageError("point has the wrong number of coordinates")
    coords = []
    for x in p:
        if isinstance(x, complex) or (isinstance(x, float) and not float(x).is_integer()):
            raise UsageError("candidate_check needs exact rational coordinates; use numeric_scan")
        try:
            coords.append(as_fraction(x))
        except (TypeError, ValueError) as exc:
            raise UsageError(f"non-rational coordinate {x!r}") from exc
    if all(c == 0 for c in coords):
        raise UsageError("the zero vector is not a point")
    return all(c.eval_exact(coords) == 0 for c in f.components)


def residual(f, Z):
    """``max_i |P_i(z)| / ||z||_inf^d`` for each row of Z."""
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    W, _ = map_eval_batch(f, Z, eps_ind=0.0)
    return np.max(np.abs(W), axis=1) / np.max(np.abs(Z), axis=1) ** f.degree


@dataclass
class ClusterPoint:
    point: np.ndarray          # normalized lift
    residual: float
    size: int                  # refined samples merged into this cluster
    rational: tuple = None     # exact candidate confirmed by candidate_check, if any

    def to_dict(self):
        return {"point": [str(complex(c)) for c in self.point], "residual": self.residual,
                "size": self.size,
                "rational": None if self.rational is None else [str(c) for c in self.rational]}


def _refine(f, Z, iters=200):
    """Damped Gauss-Newton on the residual, in the chart of each lift's largest coordinate."""
    Z = np.array(Z, dtype=complex)
    n, m = Z.shape
    chart = np.argmax(np.abs(Z), axis=1)
    Z = Z / Z[np.arange(n), chart][:, None]
    lam = np.full(n, 1e-3)
    rows = np.arange(n)
    free = np.array([[j for j in range(m) if j != c] for c in range(m)])
    W, _ = map_eval_batch(f, Z, eps_ind=0.0)
    cost = np.sum(np.abs(W) ** 2, axis=1)
    for _ in range(iters):
        active = cost > 1e-60
        if not active.any():
            break
        J = map_differential_batch(f, Z)                      # (n, m, m)
        idx = free[chart]                                     # (n, m-1)
        Jf = np.take_along_axis(J, idx[:, None, :], axis=2)   # (n, m, m-1)
        JH = np.conj(np.swapaxes(Jf, 1, 2))
        A = JH @ Jf
        g = (JH @ W[:, :, None])[:, :, 0]
        diag = np.real(np.einsum("nii->ni", A))
        A = A + (lam[:, None] * (diag + 1e-300))[:, :, None] * np.eye(m - 1)[None]
        try:
            step = np.linalg.solve(A, -g[:, :, None])[:, :, 0]
        except np.linalg.LinAlgError:
            step = np.zeros_like(g)
            for i in range(n):
                step[i] = np.linalg.lstsq(A[i], -g[i], rcond=None)[0]
        step[~active] = 0
        trial = Z.copy()
        np.put_along_axis(trial, idx, np.take_along_axis(Z, idx, axis=1) + step, axis=1)
        Wt, _ = map_eval_batch(f, trial, eps_ind=0.0)
        ct = np.sum(np.abs(Wt) ** 2, axis=1)
        better = np.isfinite(ct) & (ct < cost)
        Z[better] = trial[better]
        W[better] = Wt[better]
        cost[better] = ct[better]
        lam = np.where(better, lam / 3, lam * 4)
        lam = np.clip(lam, 1e-12, 1e12)
        # re-chart when a free coordinate outgrows the chart coordinate
        big = np.max(np.abs(Z), axis=1) > 2.0
        if big.any():
            chart[big] = np.argmax(np.abs(Z[big]), axis=1)
            Z[big] = Z[big] / Z[rows[big], chart[big]][:, None]
            W[big], _ = map_eval_batch(f, Z[big], eps_ind=0.0)
            cost[big] = np.sum(np.abs(W[big]) ** 2, axis=1)
    return Z


def _rational_guess(z, max_den=1000):
    z = np.asarray(z, dtype=complex)
    j = int(np.argmax(np.abs(z)))
    z = z / z[j]
    if np.max(np.abs(z.imag)) > 1e-6:
        return None
    out = [Fraction(float(x.real)).limit_denominator(max_den) for x in z]
    if max(abs(float(o) - x.real) for o, x in zip(out, z)) > 1e-6:
        return None
    return tuple(out)


def _cluster(points, res, radius):
    """Greedy merge of points within FS ``radius``; best-residual points seed clusters."""
    order = np.argsort(res)
    reps, sizes, rres = [], [], []
    for i in order:
        p = points[i]
        if reps:
            d = fs_distance(np.array(reps), p)
            j = int(np.argmin(d))
            if d[j] < radius:
                sizes[j] += 1
                continue
        reps.append(p)
        sizes.append(1)
        rres.append(float(res[i]))
    return reps, sizes, rres


def numeric_scan(f, samples=20000, tol=DEFAULT_TOL, seed=0, merge_radius=MERGE_RADIUS,
                 refine=256):
    """Clusters of numerical common zeros of the components of ``f``.

    ``samples`` Fubini-Study uniform points are scored by the residual
    ``max_i |P_i(z)| / ||z||_inf^d``; the ``refine`` best ones are polished by damped
    Gauss-Newton, those with residual below ``tol`` are kept and merged at FS
    distance ``merge_radius``.  Each cluster is cross-checked against a nearby
    rational point with :func:`candidate_check`.
    """
    if samples < 1 or tol <= 0:
        raise UsageError("numeric_scan needs samples >= 1 and tol > 0")
    rng = np.random.default_rng(seed)
    chunk = 50000
    best_Z, best_r = [], []
    for start in range(0, samples, chunk):
        Z = fs_uniform(f.ambient, min(chunk, samples - start), rng)
        r = residual(f, Z)
        keep = np.argsort(r)[:refine]
        best_Z.append(Z[keep])
        best_r.append(r[keep])
    Z = np.concatenate(best_Z)
    r = np.concatenate(best_r)
    keep = np.argsort(r)[:refine]
    Z = _refine(f, Z[keep])
    r = residual(f, Z)
    ok = r < tol
    if not ok.any():
        return []
    pts = normalize_lift(Z[ok])
    reps, sizes, rres = _cluster(pts, r[ok], merge_radius)
    out = []
    for p, s, rr in zip(reps, sizes, rres):
        cand = _rational_guess(p)
        if cand is not None and not candidate_check(f, cand):
            cand = None
        out.append(ClusterPoint(p, rr, s, cand))
    return out


def iterated_indeterminacy_containment(f, n, V, samples=20000, seed=0, tol=DEFAULT_TOL):
    """Check that every indeterminacy cluster of the reduced iterate ``f^n`` lies in ``V``."""
    fn = iterate(f, n)
    clusters = numeric_scan(fn, samples, tol=tol, seed=seed)
    inside = [bool(V.contains(c.point)[0]) for c in clusters]
    return {"passed": all(inside), "n": n, "degree": fn.degree,
            "clusters": [dict(c.to_dict(), inside=i) for c, i in zip(clusters, inside)],
            "samples": samples, "seed": seed}


# ---------------------------------------------------------------------------
# Regularity
# ---------------------------------------------------------------------------

@dataclass
class RegularityReport:
    definition: str
    condition1: dict
    condition2: dict
    condition3: dict
    sample_count: int
    seed: int
    skipped: int = 0
    notes: list = field(default_factory=list)

    @property
    def verdict(self):
        return bool(self.condition1["passed"] and self.condition2["passed"]
                    and self.condition3["passed"])

    @property
    def label(self):
        return "sampled-pass" if self.verdict else "fail"

    def __bool__(self):
        return self.verdict

    def to_dict(self):
        return {"definition": self.definition, "verdict": self.verdict, "label": self.label,
                "sample_count": self.sample_count, "seed": self.seed, "skipped": self.skipped,
                "condition1": self.condition1, "condition2": self.condition2,
                "condition3": self.condition3, "notes": self.notes}


def _roles(regions, definition):
    by = {}
    for r in regions:
        if r.role in by:
            raise UsageError(f"duplicate region role {r.role}")
        by[r.role] = r
    if definition == "two-sided":
        need = ("V+", "V-", "U+", "U-")
        missing = [x for x in need if x not in by]
        if missing:
            raise UsageError(f"two-sided regularity needs regions {need}; missing {missing}")
        return by
    if definition != "one-sided":
        raise UsageError("definition must be 'two-sided' or 'one-sided'")
    V = by.get("V+")
    U = by.get("U", by.get("U+"))
    if V is None or U is None:
        raise UsageError("one-sided regularity needs a V (role V+) and a U (role U or U+)")
    return {"V": V, "U": U}


def _separation(A, B, n, rng):
    """Sampled lower bound on the FS distance between the closures of A and B."""
    if A.complement and not B.complement:
        A, B = B, A
    Z = A.sample(n, rng)
    d = B.distance_to_closure(Z)
    return float(d.min()) if len(d) else float("inf")


def _inside_with_margin(A, B, n, rng, margin):
    """Sampled check of ``closure(A) subset B``: every sample of A is inside B with room to spare."""
    Z = A.sample(n, rng)
    inside = B.contains(Z)
    shrunk = B.enlarged(-margin) if not B.complement else B.enlarged(margin)
    try:
        inside &= shrunk.contains(Z)
    except UsageError:
        pass
    return bool(inside.all()), int((~inside).sum())


def _indeterminacy_in(f, region, samples, seed, tol):
    clusters = numeric_scan(f, samples, tol=tol, seed=seed)
    inside = [bool(region.contains(c.point)[0]) for c in clusters]
    return all(inside), [dict(c.to_dict(), inside=i) for c, i in zip(clusters, inside)]


def _witness_check(w, avoid, dim, n, rng, margin):
    pts = w.sample(n, rng)
    dmin = float(avoid.distance_to_closure(pts).min())
    ok_dim = w.actual_dimension == dim and w.dimension == dim
    return {"role": w.role, "declared_dimension": w.dimension, "dimension": w.actual_dimension,
            "required_dimension": dim, "min_distance": dmin,
            "passed": bool(ok_dim and dmin > margin)}


def _map_into(f, src_avoid, target, n, rng, eps_ind, keep=10):
    """Map FS-uniform samples outside ``src_avoid`` and test membership in ``target``."""
    k = f.ambient
    Z = fs_uniform(k, n, rng)
    Z = Z[~src_avoid.contains(Z)]
    W, bad = map_eval_batch(f, Z, eps_ind=eps_ind)
    good = ~bad
    ok = target.contains(W[good])
    fails = Z[good][~ok][:keep]
    return {"passed": bool(ok.all()), "tested": int(good.sum()), "skipped": int(bad.sum()),
            "failures": int((~ok).sum()),
            "counterexamples": [[str(complex(c)) for c in z] for z in fails]}


def check_regular(pair, regions, witnesses=(), samples=10000, seed=0, s=1, definition="one-sided",
                  margin=SEPARATION_MARGIN, tol=DEFAULT_TOL, eps_ind=1e-12, scan_samples=20000):
    """Sampled check of the regularity conditions.

    ``definition="one-sided"`` uses one pair of open sets (V, U): V is the region with
    role ``V+``; U is the region with role ``U`` if present, otherwise ``U+``.
    ``definition="two-sided"`` uses V+, V-, U+, U- and checks the inverse map as well.

    Condition 2 is checked through witness subspaces: each must have the required
    dimension (``s`` for role ``+``, ``k - s`` for role ``-``) and its sampled
    points must stay away from the closure of the relevant V.  The smooth form
    itself is never built.
    """
    if not isinstance(pair, BirationalPair):
        raise UsageError("check_regular needs a BirationalPair")
    k = pair.ambient
    if not 1 <= s <= k - 1:
        raise UsageError("s must satisfy 1 <= s <= k - 1")
    for r in regions:
        if r.k != k:
            raise UsageError("region lives in a different P^k")
    R = _roles(regions, definition)
    rng = np.random.default_rng([seed, 1])
    f, g = pair.forward, pair.inverse
    nsep = max(1000, samples // 5)

    if definition == "one-sided":
        V, U = R["V"], R["U"]
        sep = _separation(V, U, nsep, rng)
        ip_ok, ip = _indeterminacy_in(f, V, scan_samples, seed, tol)
        im_ok, im = _indeterminacy_in(g, U, scan_samples, seed + 1, tol)
        c1 = {"passed": bool(sep > margin and ip_ok and im_ok), "separation": sep,
              "margin": margin, "I+_in_V": ip_ok, "I-_in_U": im_ok,
              "I+_clusters": ip, "I-_clusters": im}
        plus = [w for w in witnesses if w.role == "+"]
        checks = [_witness_check(w, V, s, 2000, rng, margin) for w in plus]
        c2 = {"passed": bool(checks) and all(c["passed"] for c in checks), "witnesses": checks,
              "note": "witness subspaces only; the smooth form is not constructed"}
        c3 = _map_into(f, V, U, samples, rng, eps_ind)
        skipped = c3["skipped"]
    else:
        Vp, Vm, Up, Um = R["V+"], R["V-"], R["U+"], R["U-"]
        sep_p = _separation(Vp, Up, nsep, rng)
        sep_m = _separation(Vm, Um, nsep, rng)
        vp_in_um, np_ = _inside_with_margin(Vp, Um, nsep, rng, margin)
        vm_in_up, nm_ = _inside_with_margin(Vm, Up, nsep, rng, margin)
        ip_ok, ip = _indeterminacy_in(f, Vp, scan_samples, seed, tol)
        im_ok, im = _indeterminacy_in(g, Vm, scan_samples, seed + 1, tol)
        c1 = {"passed": bool(min(sep_p, sep_m) > margin and vp_in_um and vm_in_up
                             and ip_ok and im_ok),
              "separation_plus": sep_p, "separation_minus": sep_m, "margin": margin,
              "closure_V+_in_U-": vp_in_um, "closure_V-_in_U+": vm_in_up,
              "I+_in_V+": ip_ok, "I-_in_V-": im_ok, "I+_clusters": ip, "I-_clusters": im}
        checks = [_witness_check(w, Vp if w.role == "+" else Vm, s if w.role == "+" else k - s,
                                 2000, rng, margin) for w in witnesses]
        roles = {w.role for w in witnesses}
        c2 = {"passed": roles >= {"+", "-"} and all(c["passed"] for c in checks),
              "witnesses": checks,
              "note": "witness subspaces only; the smooth forms are not constructed"}
        fwd = _map_into(f, Vp, Up, samples, rng, eps_ind)
        inv = _map_into(g, Vm, Um, samples, rng, eps_ind)
        c3 = {"passed": fwd["passed"] and inv["passed"], "forward": fwd, "inverse": inv}
        skipped = fwd["skipped"] + inv["skipped"]
    return RegularityReport(definition, c1, c2, c3, samples, seed, skipped,
                            notes=["sampling-based; a pass is not a proof"])
