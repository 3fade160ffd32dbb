"""Green functions of algebraically stable maps on lifts.

``G(z) = lim d^{-n} log ||F^n(z)||`` is evaluated by renormalized iteration::

    G_N(z) = log||z|| + sum_{j<N} d^{-(j+1)} log(||F(z_j)|| / ||z_j||^d),

with ``z_0 = z/||z||`` and ``z_{j+1} = F(z_j)/||F(z_j)||``.  The reported error
bound ``d^{-N} * d/(d-1) * max(last three |increments|)`` is empirical, not proved.
"""

from dataclasses import dataclass, field

import numpy as np

from . import _jit
from .errors import IndeterminacyProximity, StatisticalInsufficiency, UsageError
from .io import write_csv, write_pgm
from .projalg import HomoPoly, as_lift, fs_distance
from .ratmap import BirationalPair, RationalMap, map_eval, map_eval_batch

__all__ = [
    "GreenEvaluator", "GreenValue", "GreenBatch", "green_eval", "green_eval_batch",
    "green_reference", "invariance_residual", "invariance_residuals",
    "hyperplane_pullback_potential", "pullback_convergence", "DegenerateHyperplane",
    "ChartSlice", "GridSlice", "potential_grid", "chart_lift", "ChartBall", "ProbeResult",
    "continuity_probe", "CSV_HEADER", "basin_points",
]


class DegenerateHyperplane(IndeterminacyProximity):
    """The orbit point landed (numerically) on the pulled-back hyperplane."""
    kind = "degenerate-hyperplane"


@dataclass(frozen=True)
class GreenValue:
    value: float
    error_bound: float          # empirical; inf when the orbit escaped to indeterminacy
    depth_used: int
    escaped_to_indeterminacy: bool = False

    @property
    def reliable(self):
        return not self.escaped_to_indeterminacy

    def to_dict(self):
        return {"value": self.value, "error_bound": self.error_bound,
                "error_bound_kind": "empirical", "depth_used": self.depth_used,
                "escaped_to_indeterminacy": self.escaped_to_indeterminacy}


@dataclass
class GreenBatch:
    values: np.ndarray
    bounds: np.ndarray
    depth_used: np.ndarray
    escaped: np.ndarray

    def __len__(self):
        return len(self.values)

    def __getitem__(self, i):
        return GreenValue(float(self.values[i]), float(self.bounds[i]), int(self.depth_used[i]),
                          bool(self.escaped[i]))


@dataclass(frozen=True)
class GreenEvaluator:
    """Truncated Green function of ``map`` at depth ``N``.

    ``direction`` labels whether ``map`` is the forward map (T+) or the inverse
    (T-); use :meth:`from_pair` to pick the right map from a pair.  Depth 0 gives
    the Fubini-Study baseline ``G = log||z||``.
    """
    map: RationalMap
    depth: int = 20
    direction: str = "forward"
    eps_ind: float = 1e-12

    def __post_init__(self):
        if int(self.depth) != self.depth or self.depth < 0:
            raise UsageError("depth must be a nonnegative integer")
        if self.map.degree < 2:
            raise UsageError("Green functions need a map of degree >= 2")
        if self.direction not in ("forward", "inverse"):
            raise UsageError("direction must be 'forward' or 'inverse'")

    @classmethod
    def from_pair(cls, pair, direction="forward", depth=20, eps_ind=1e-12):
        if not isinstance(pair, BirationalPair):
            raise UsageError("from_pair needs a BirationalPair")
        f = pair.forward if direction == "forward" else pair.inverse
        return cls(f, depth, direction, eps_ind)

    @property
    def d(self):
        return self.map.degree

    @property
    def k(self):
        return self.map.ambient

    def with_depth(self, depth):
        return GreenEvaluator(self.map, depth, self.direction, self.eps_ind)

    def batch(self, Z):
        return green_eval_batch(self, Z)

    def __call__(self, z):
        return green_eval(self, z)


def green_eval_batch(e, Z):
    """Compiled evaluation on the rows of ``Z`` (shape ``(n, k+1)``)."""
    Z = np.ascontiguousarray(np.atleast_2d(np.asarray(Z, dtype=complex)))
    if Z.shape[1] != e.k + 1:
        raise UsageError(f"lifts need {e.k + 1} coordinates")
    norms = np.linalg.norm(Z, axis=1)
    if not np.all(np.isfinite(norms)) or np.any(norms == 0):
        raise UsageError("lifts must be finite and nonzero")
    ker = _jit.kernels_for(e.map)
    n = len(Z)
    out = np.empty(n)
    bound = np.empty(n)
    used = np.empty(n, dtype=np.int64)
    esc = np.empty(n, dtype=np.bool_)
    ker.eval_lifts(Z, int(e.depth), e.eps_ind ** 2, ker.fixed, out, bound, used, esc)
    return GreenBatch(out, bound, used, esc)


def green_reference(e, z):
    """Plain numpy iteration with compensated polynomial evaluation (slow, for checks)."""
    z = as_lift(z, e.k)
    nz = np.linalg.norm(z)
    g = np.log(nz)
    u = z / nz
    wt = 1.0
    incs = []
    for j in range(e.depth):
        W, bad = map_eval_batch(e.map, u[None, :], eps_ind=e.eps_ind)
        if bad[0]:
            return GreenValue(float(g), float("inf"), j, True)
        w = W[0]
        nw = np.linalg.norm(w)
        inc = np.log(nw) - e.d * np.log(np.linalg.norm(u))
        wt /= e.d
        g += wt * inc
        incs.append(abs(inc))
        u = w / nw
    bound = wt * e.d / (e.d - 1) * max(incs[-3:]) if incs else 0.0
    return GreenValue(float(g), float(bound), e.depth, False)


def green_eval(e, z, method="compiled"):
    """Truncated Green value at one lift (``method="reference"`` for the numpy path)."""
    z = as_lift(z, e.k)
    if method == "reference":
        return green_reference(e, z)
    if method != "compiled":
        raise UsageError("method must be 'compiled' or 'reference'")
    return green_eval_batch(e, z[None, :])[0]


def invariance_residual(e, z):
    """``|G_N(F(z)) - d G_N(z)|``; raises if ``F(z)`` is indeterminacy-proximate."""
    z = as_lift(z, e.k)
    w = map_eval(e.map, z, e.eps_ind)
    b = green_eval_batch(e, np.stack([z, w]))
    if b.escaped.any():
        raise IndeterminacyProximity("orbit escaped to the indeterminacy set", point=z.tolist())
    return float(abs(b.values[1] - e.d * b.values[0]))


def invariance_residuals(e, Z):
    """Vectorized :func:`invariance_residual`; NaN where F(z) or an orbit is indeterminate."""
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    W, bad = map_eval_batch(e.map, Z, eps_ind=e.eps_ind)
    W[bad] = Z[bad]
    gz = green_eval_batch(e, Z)
    gw = green_eval_batch(e, W)
    r = np.abs(gw.values - e.d * gz.values)
    r[bad | gz.escaped | gw.escaped] = np.nan
    return r


def _unit_form(ell, k):
    if isinstance(ell, HomoPoly):
        if ell.degree != 1 or ell.ambient != k:
            raise UsageError("ell must be a linear form on the same P^k")
        v = np.zeros(k + 1, dtype=complex)
        for ex, c in ell.terms.items():
            v[ex.index(1)] = complex(float(c))
    else:
        v = np.asarray(ell, dtype=complex).ravel()
        if v.shape[0] != k + 1:
            raise UsageError(f"ell needs {k + 1} coefficients")
    nv = np.linalg.norm(v)
    if nv == 0:
        raise UsageError("ell must be a nonzero linear form")
    return v / nv


def _orbit_line_logs(e, ell, Z, nmax, tol):
    """``log|ell(u_n)|`` for n = 0..nmax along renormalized orbits ``u_n`` (unit lifts)."""
    v = _unit_form(ell, e.k)
    U = Z / np.linalg.norm(Z, axis=1)[:, None]
    out = np.empty((len(Z), nmax + 1))
    bad = np.zeros(len(Z), dtype=bool)
    for n in range(nmax + 1):
        r = np.abs(U @ v)
        bad |= ~(r > tol)
        out[:, n] = np.log(np.maximum(r, 1e-300))
        if n < nmax:
            W, b = map_eval_batch(e.map, U, eps_ind=e.eps_ind)
            bad |= b
            W[b] = U[b]
            U = W / np.linalg.norm(W, axis=1)[:, None]
    return out, bad


def hyperplane_pullback_potential(e, ell, z, n, tol=1e-15):
    """``c_n(z) = d^{-n} log(|ell(F^n z)| / ||F^n z||) + G_N(z)`` with ``ell`` scaled to unit norm.

    This is the potential of ``d^{-n} (f^n)^*[ell = 0]`` relative to the Green
    function; ``c_n - G_N`` decays like ``d^{-n}`` on the basin of attraction.
    """
    z = as_lift(z, e.k)
    if n < 0:
        raise UsageError("n must be >= 0")
    logs, bad = _orbit_line_logs(e, ell, z[None, :], n, tol)
    if bad[0]:
        raise DegenerateHyperplane("orbit point lies on the pulled-back hyperplane "
                                   "or reached the indeterminacy set", n=n)
    g = green_eval_batch(e, z[None, :])
    return float(logs[0, n] / e.d ** n + g.values[0])


def pullback_convergence(e, ell, Z, n_min=3, n_max=8, tol=1e-15):
    """Errors ``|c_n - G_N|`` for n in [n_min, n_max] at each lift and their successive ratios.

    Lifts whose orbit hits the hyperplane or the indeterminacy set are dropped and counted.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=complex))
    logs, bad = _orbit_line_logs(e, ell, Z, n_max, tol)
    ns = np.arange(n_min, n_max + 1)
    err = np.abs(logs[:, ns]) / float(e.d) ** ns
    keep = ~bad & np.all(err > 0, axis=1)
    err = err[keep]
    ratios = err[:, 1:] / err[:, :-1]
    return {"n": ns.tolist(), "errors": err, "ratios": ratios,
            "mean_ratio": float(np.mean(ratios)) if ratios.size else float("nan"),
            "mean_ratio_per_n": ratios.mean(axis=0).tolist() if ratios.size else [],
            "used": int(keep.sum()), "dropped": int((~keep).sum()),
            "expected_ratio": 1.0 / e.d}


def basin_points(e, n=50, seed=0, box=3.0, threshold=0.1, chart=None, max_draws=100_000):
    """``n`` chart lifts from ``[-box, box]^(2k)`` where the truncated Green function exceeds
    ``threshold`` (points that escape under iteration)."""
    chart = e.k if chart is None else chart
    rng = np.random.default_rng(seed)
    found, drawn = [], 0
    while sum(len(x) for x in found) < n and drawn < max_draws:
        m = max(4 * n, 256)
        R = rng.uniform(-box, box, (m, 2 * e.k))
        Z = chart_lift(R[:, 0::2] + 1j * R[:, 1::2], chart, e.k)
        g = green_eval_batch(e, Z)
        found.append(Z[(g.values > threshold) & ~g.escaped])
        drawn += m
    Z = np.concatenate(found)[:n] if found else np.empty((0, e.k + 1), dtype=complex)
    if len(Z) < n:
        raise StatisticalInsufficiency("too few escaping points in the box", found=len(Z), wanted=n)
    return Z


# ---------------------------------------------------------------------------
# Chart grids
# ---------------------------------------------------------------------------

def chart_lift(P, chart, k):
    """Standard lifts of chart points: coordinate ``chart`` set to 1, ``P`` fills the rest."""
    P = np.atleast_2d(np.asarray(P, dtype=complex))
    if P.shape[1] != k:
        raise UsageError(f"chart points need {k} coordinates")
    if not 0 <= chart <= k:
        raise UsageError("chart index out of range")
    Z = np.empty((P.shape[0], k + 1), dtype=complex)
    others = [i for i in range(k + 1) if i != chart]
    Z[:, others] = P
    Z[:, chart] = 1.0
    return Z


def csv_header(k):
    cols = []
    for i in range(1, k + 1):
        cols += [f"re(z{i})", f"im(z{i})"]
    return cols + ["value", "error_bound"]


CSV_HEADER = csv_header(2)


@dataclass(frozen=True)
class ChartSlice:
    """Real 2-plane ``base + s*dir1 + t*dir2`` in an affine chart, sampled at cell centers.

    Chart coordinates are the k homogeneous coordinates other than ``chart``, in
    order (the chart coordinate itself is set to 1).
    """
    k: int
    chart: int
    base: tuple
    dir1: tuple
    dir2: tuple
    extent1: tuple = (-3.0, 3.0)
    extent2: tuple = (-3.0, 3.0)
    resolution: int = 128

    def __post_init__(self):
        if self.resolution < 1:
            raise UsageError("resolution must be positive")
        for v in (self.base, self.dir1, self.dir2):
            if len(v) != self.k:
                raise UsageError("slice vectors need k chart coordinates")
        for lo, hi in (self.extent1, self.extent2):
            if not hi > lo:
                raise UsageError("slice extents must be increasing")

    @classmethod
    def real_plane(cls, k=2, chart=None, box=(-3.0, 3.0, -3.0, 3.0), resolution=128):
        """Real slice ``(Re z1, Re z2)`` with both imaginary parts zero."""
        chart = k if chart is None else chart
        e = np.eye(k)
        return cls(k, chart, (0j,) * k, tuple(e[0]), tuple(e[1 % k]), tuple(box[:2]),
                   tuple(box[2:]), resolution)

    @classmethod
    def complex_line(cls, k=2, chart=None, index=0, base=None, box=(-3.0, 3.0, -3.0, 3.0),
                     resolution=128):
        """The chart coordinate ``index`` varies over a square, the others are fixed at ``base``."""
        chart = k if chart is None else chart
        e = np.eye(k, dtype=complex)
        base = (0j,) * k if base is None else tuple(complex(b) for b in base)
        return cls(k, chart, base, tuple(e[index]), tuple(1j * e[index]), tuple(box[:2]),
                   tuple(box[2:]), resolution)

    def axes(self):
        n = self.resolution
        s = self.extent1[0] + (np.arange(n) + 0.5) * (self.extent1[1] - self.extent1[0]) / n
        t = self.extent2[0] + (np.arange(n) + 0.5) * (self.extent2[1] - self.extent2[0]) / n
        return s, t

    def points(self):
        """Chart points, shape ``(res, res, k)``; the first index follows ``dir1``."""
        s, t = self.axes()
        b = np.asarray(self.base, dtype=complex)
        return (b[None, None, :] + s[:, None, None] * np.asarray(self.dir1)[None, None, :]
                + t[None, :, None] * np.asarray(self.dir2)[None, None, :])

    def to_dict(self):
        return {"k": self.k, "chart": self.chart, "base": [str(complex(x)) for x in self.base],
                "dir1": [str(complex(x)) for x in self.dir1],
                "dir2": [str(complex(x)) for x in self.dir2],
                "extent1": list(self.extent1), "extent2": list(self.extent2),
                "resolution": self.resolution}


@dataclass
class GridSlice:
    slice: ChartSlice
    values: np.ndarray          # (res, res), NaN where the orbit hit indeterminacy
    bounds: np.ndarray
    points: np.ndarray          # (res, res, k) chart points
    subtract_fs: bool = True

    @property
    def nan_count(self):
        return int(np.isnan(self.values).sum())

    def rows(self):
        P = self.points.reshape(-1, self.points.shape[-1])
        for p, v, b in zip(P, self.values.ravel(), self.bounds.ravel()):
            row = []
            for c in p:
                row += [float(c.real), float(c.imag)]
            yield row + [float(v), float(b)]

    def to_csv(self, path):
        return write_csv(path, csv_header(self.slice.k), self.rows())

    def to_pgm(self, path):
        return write_pgm(path, self.values, label="green potential")

    def summary(self):
        finite = np.isfinite(self.values)
        return {"slice": self.slice.to_dict(), "nan_count": self.nan_count,
                "min": float(self.values[finite].min()) if finite.any() else None,
                "max": float(self.values[finite].max()) if finite.any() else None,
                "max_error_bound": float(np.max(self.bounds[finite])) if finite.any() else None,
                "potential": "G - log|lift|" if self.subtract_fs else "G"}


def potential_grid(e, sl, subtract_fs=True):
    """Green potential on a chart slice, traversed row-major.

    With ``subtract_fs`` (default) the value is ``G_N(z^) - log||z^||`` for the
    standard chart lift ``z^``, i.e. the potential relative to the Fubini-Study
    form; otherwise it is ``G_N(z^)`` itself, a plurisubharmonic potential on the
    chart.  Cells whose orbit hits the indeterminacy set hold NaN.
    """
    if sl.k != e.k:
        raise UsageError("slice and evaluator live in different P^k")
    P = sl.points()
    Z = chart_lift(P.reshape(-1, e.k), sl.chart, e.k)
    b = green_eval_batch(e, Z)
    vals = b.values.copy()
    if subtract_fs:
        vals -= np.log(np.linalg.norm(Z, axis=1))
    vals[b.escaped] = np.nan
    shape = P.shape[:2]
    return GridSlice(sl, vals.reshape(shape), b.bounds.reshape(shape), P, subtract_fs)


# ---------------------------------------------------------------------------
# Continuity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ChartBall:
    """Euclidean ball in an affine chart (a region for :func:`continuity_probe`)."""
    center: tuple
    radius: float
    chart: int = None

    @property
    def k(self):
        return len(self.center)

    def _chart(self):
        return self.k if self.chart is None else self.chart

    def contains(self, Z):
        Z = np.atleast_2d(np.asarray(Z, dtype=complex))
        c = self._chart()
        zc = Z[:, c]
        ok = np.abs(zc) > 1e-300
        P = np.delete(Z, c, axis=1) / np.where(ok, zc, 1.0)[:, None]
        return ok & (np.linalg.norm(P - np.asarray(self.center), axis=1) < self.radius)

    def sample(self, n, rng):
        k = self.k
        g = rng.standard_normal((n, 2 * k))
        g /= np.linalg.norm(g, axis=1)[:, None]
        r = self.radius * rng.uniform(0, 1, n) ** (1.0 / (2 * k))
        P = np.asarray(self.center, dtype=complex) + (g[:, :k] + 1j * g[:, k:]) * r[:, None]
        return chart_lift(P, self._chart(), k)


@dataclass
class ProbeResult:
    alpha: float
    fit_residual: float
    used: int
    rejected: int
    scatter: np.ndarray = field(repr=False)      # columns: FS distance, |G(x) - G(y)|

    def to_csv(self, path):
        return write_csv(path, ["fs_distance", "abs_difference"], self.scatter)

    def to_dict(self):
        return {"alpha": self.alpha, "fit_residual": self.fit_residual, "used": self.used,
                "rejected": self.rejected, "kind": "empirical Hoelder exponent"}


def continuity_probe(e, region, pairs=2000, seed=0, chart=None, dmin=1e-6, dmax=1e-1):
    """Empirical Hoelder exponent of the chart potential ``G_N(z^)`` on ``region``.

    Points ``x`` are drawn in the region; partners ``y`` sit at log-uniform FS
    distances in ``[dmin, dmax]``.  The slope of ``log|G(x) - G(y)|`` against
    ``log dist(x, y)`` is returned together with the RMS fit residual.
    ``region`` needs ``contains(lifts)`` and ``sample(n, rng)`` (a RegionSpec or
    a ChartBall).
    """
    if pairs < 3:
        raise UsageError("need at least 3 pairs")
    rng = np.random.default_rng(seed)
    k = e.k
    chart = k if chart is None else chart
    X = region.sample(pairs, rng)
    X = X / np.linalg.norm(X, axis=1)[:, None]
    t = np.exp(rng.uniform(np.log(dmin), np.log(dmax), pairs))
    V = rng.standard_normal((pairs, k + 1)) + 1j * rng.standard_normal((pairs, k + 1))
    V -= np.sum(V * X.conj(), axis=1)[:, None] * X
    V /= np.linalg.norm(V, axis=1)[:, None]
    Y = np.cos(t)[:, None] * X + np.sin(t)[:, None] * V
    dist = fs_distance(X, Y)
    ok = (np.abs(X[:, chart]) > 1e-8) & (np.abs(Y[:, chart]) > 1e-8)
    Xc = X / np.where(ok, X[:, chart], 1.0)[:, None]
    Yc = Y / np.where(ok, Y[:, chart], 1.0)[:, None]
    gx = green_eval_batch(e, Xc)
    gy = green_eval_batch(e, Yc)
    diff = np.abs(gx.values - gy.values)
    ok &= ~gx.escaped & ~gy.escaped & (diff > 0) & np.isfinite(diff) & (dist > 0)
    used = int(ok.sum())
    if used < max(3, pairs // 2):
        raise StatisticalInsufficiency("too few valid pairs for a continuity fit (orbits escaped to "
                                       "indeterminacy or the potential is locally constant)",
                                       used=used,
                                       requested=pairs)
    lx = np.log(dist[ok])
    ly = np.log(diff[ok])
    A = np.stack([lx, np.ones_like(lx)], axis=1)
    coef, *_ = np.linalg.lstsq(A, ly, rcond=None)
    res = float(np.sqrt(np.mean((A @ coef - ly) ** 2)))
    return ProbeResult(float(coef[0]), res, used, pairs - used,
                       np.stack([dist[ok], diff[ok]], axis=1))
