"""Discrete mixed Monge-Ampere measure ``dd^c u ^ dd^c v`` on a box in C^2.

Potentials live on a cell-centred grid over four real axes ``(x1, y1, x2, y2)``
of an affine chart.  The grid is processed in slabs along ``x1`` so that
resolution 128 fits in memory: potentials are produced slab by slab (optionally
Gaussian-smoothed, which keeps plurisubharmonic functions plurisubharmonic),
and the wedge density is assembled from a rolling window of five slabs.

Second derivatives are products of central first differences, ``H_ab = D_a D_b``.
These operators commute, so summation by parts reduces the total mass exactly
to boundary terms, which makes the discrete mass robust.  With ``dd^c =
(i/pi) d dbar`` the density with respect to Lebesgue measure is::

    (4/pi^2) (u_11 v_22 + u_22 v_11 - 2 Re(u_12 conj(v_12))),
    u_jk = d^2 u / dz_j dzbar_k,

normalized so that the Fubini-Study form has total mass 1 on P^2.
"""

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, ndimage, special

from . import _jit
from .errors import QualityFailure, StatisticalInsufficiency, UsageError
from .green import GreenEvaluator, chart_lift
from .io import write_csv, write_pgm

__all__ = [
    "GridPotential", "DensityGrid", "ddc_wedge", "total_mass", "sample_measure",
    "support_check", "fs_box_mass", "fs_potential", "fs_calibration", "equilibrium_measure",
    "RING", "NEGATIVITY_LIMIT", "DEFAULT_SIGMA",
]

RING = 2                    # boundary cells consumed by the wide stencil
NEGATIVITY_LIMIT = 0.02     # clipped negativity allowed, relative to the total mass
DEFAULT_SIGMA = 1.5         # Gaussian pre-smoothing of Green potentials, in cells
AXES = ("x1", "y1", "x2", "y2")


def _as_box(box):
    """Normalize a box to four ``(lo, hi)`` pairs; a number R means ``[-R, R]^4``."""
    if np.isscalar(box):
        R = float(box)
        return ((-R, R),) * 4
    b = np.asarray(box, dtype=float).ravel()
    if b.size == 2:
        return ((b[0], b[1]),) * 4
    if b.size == 4:      # (lo1, hi1, lo2, hi2): the same bounds for re and im of each coordinate
        return ((b[0], b[1]), (b[0], b[1]), (b[2], b[3]), (b[2], b[3]))
    if b.size == 8:
        return tuple((b[2 * i], b[2 * i + 1]) for i in range(4))
    raise UsageError("box must be R, (lo, hi), (lo1, hi1, lo2, hi2) or four (lo, hi) pairs")


def _gauss_weights(sigma, radius):
    x = np.arange(-radius, radius + 1, dtype=float)
    w = np.exp(-0.5 * (x / sigma) ** 2)
    return w / w.sum()


class GridPotential:
    """A potential sampled at the cell centres of a box in C^2, produced slab by slab.

    ``slab_fn(p)`` returns the raw values on the padded grid at padded ``x1``
    index ``p`` as an array over the padded ``(y1, x2, y2)`` axes.  With
    ``sigma > 0`` the raw values are convolved with a Gaussian of ``sigma`` cells
    (kernel radius ``pad``) before cropping the padding away.
    """

    def __init__(self, box, resolution, slab_fn, sigma=0.0, pad=None, name="", meta=None):
        self.box = _as_box(box)
        self.resolution = int(resolution)
        if self.resolution < 2 * RING + 1:
            raise UsageError(f"resolution must be at least {2 * RING + 1}")
        for lo, hi in self.box:
            if not hi > lo:
                raise UsageError("box bounds must be increasing")
        self.sigma = float(sigma)
        if pad is None:
            pad = int(math.ceil(3.4 * self.sigma)) if self.sigma > 0 else 0
        self.pad = int(pad)
        if self.sigma > 0 and self.pad < 1:
            raise UsageError("smoothing needs a positive padding")
        self.h = tuple((hi - lo) / self.resolution for lo, hi in self.box)
        self._slab_fn = slab_fn
        self.name = name
        self.meta = dict(meta or {})
        self._values = None

    # -- geometry ------------------------------------------------------------
    def axis(self, a, padded=False):
        """Cell-centre coordinates along real axis ``a`` (optionally including the padding)."""
        lo = self.box[a][0]
        p = self.pad if padded else 0
        return lo + (np.arange(-p, self.resolution + p) + 0.5) * self.h[a]

    def same_grid(self, other):
        return (self.box == other.box and self.resolution == other.resolution)

    @property
    def shape(self):
        return (self.resolution,) * 4

    # -- construction --------------------------------------------------------
    @classmethod
    def from_function(cls, fn, box, resolution, sigma=0.0, pad=None, name="function"):
        """Potential ``fn(x1, y1, x2, y2)`` (vectorized over broadcast arrays)."""
        tmp = cls(box, resolution, None, sigma, pad, name)
        a1, a2, a3 = (tmp.axis(a, padded=True) for a in (1, 2, 3))
        a0 = tmp.axis(0, padded=True)
        Y1, X2, Y2 = np.meshgrid(a1, a2, a3, indexing="ij")

        def slab(p):
            return np.asarray(fn(a0[p], Y1, X2, Y2), dtype=float) * np.ones_like(Y1)

        tmp._slab_fn = slab
        return tmp

    @classmethod
    def from_array(cls, values, box, name="array"):
        values = np.asarray(values, dtype=float)
        if values.ndim != 4 or len(set(values.shape)) != 1:
            raise UsageError("values must be a res^4 array")
        tmp = cls(box, values.shape[0], lambda p: values[p], 0.0, 0, name)
        tmp._values = values
        return tmp

    @classmethod
    def from_green(cls, e, box=3.0, resolution=64, chart=None, sigma=DEFAULT_SIGMA, pad=None):
        """Chart potential ``G_N(z^)`` of a Green evaluator on P^2 (``z^`` the standard chart lift).

        Slabs are computed with the compiled kernel.  For real maps on boxes
        symmetric in both imaginary axes, the conjugation symmetry
        ``G(conj z) = G(z)`` halves the work.
        """
        if e.k != 2:
            raise UsageError("grid potentials are implemented for P^2 only")
        chart = 2 if chart is None else int(chart)
        ker = _jit.kernels_for(e.map)
        tmp = cls(box, resolution, None, sigma, pad, f"green-{e.direction}",
                  meta={"depth": e.depth, "chart": chart, "map": e.map.name,
                        "direction": e.direction})
        a0, a1, a2, a3 = (np.ascontiguousarray(tmp.axis(a, padded=True)) for a in range(4))
        n1 = len(a1)
        _, coefs, _ = e.map.term_table()
        real_map = bool(np.all(np.asarray(coefs).imag == 0))
        sym = (real_map and np.allclose(a1, -a1[::-1]) and np.allclose(a3, -a3[::-1]))
        half = (n1 + 1) // 2 if sym else n1
        eps2 = e.eps_ind ** 2
        depth = int(e.depth)

        def slab(p):
            out = np.empty((n1, len(a2), len(a3)))
            ker.eval_slab(float(a0[p]), a1, a2, a3, half, chart, depth, eps2, ker.fixed, out)
            if sym:
                out[n1 - half:] = out[:half][::-1, :, ::-1]
            return out

        tmp._slab_fn = slab
        tmp.meta["conjugation_symmetry"] = sym
        return tmp

    # -- streaming -----------------------------------------------------------
    def iter_slabs(self):
        """Yield ``(i, slab)`` for ``i = 0..res-1``; slabs are ``res^3`` arrays over (y1, x2, y2)."""
        res, pad = self.resolution, self.pad
        if self._values is not None:
            for i in range(res):
                yield i, self._values[i]
            return
        if self.sigma <= 0:
            for i in range(res):
                yield i, np.asarray(self._slab_fn(i + pad), dtype=float)[
                    pad:pad + res, pad:pad + res, pad:pad + res] if pad else np.asarray(
                    self._slab_fn(i), dtype=float)
            return
        w = _gauss_weights(self.sigma, pad)
        window = deque()
        crop = slice(pad, pad + res)
        for p in range(res + 2 * pad):
            raw = np.asarray(self._slab_fn(p), dtype=float)
            for ax in range(3):
                raw = ndimage.correlate1d(raw, w, axis=ax, mode="nearest")
            window.append(raw[crop, crop, crop])
            if len(window) == 2 * pad + 1:
                sm = w[0] * window[0]
                for j in range(1, 2 * pad + 1):
                    sm = sm + w[j] * window[j]
                yield p - 2 * pad, sm
                window.popleft()

    @property
    def values(self):
        """Full ``res^4`` array (materialized on first access)."""
        if self._values is None:
            out = np.empty(self.shape)
            for i, s in self.iter_slabs():
                out[i] = s
            self._values = out
        return self._values

    def to_csv(self, path):
        """All grid values; columns re(z1), im(z1), re(z2), im(z2), value."""
        V = self.values
        ax = [self.axis(a) for a in range(4)]

        def rows():
            for i, j, k, l in np.ndindex(V.shape):
                yield [ax[0][i], ax[1][j], ax[2][k], ax[3][l], V[i, j, k, l]]
        return write_csv(path, ["re(z1)", "im(z1)", "re(z2)", "im(z2)", "value"], rows())


def fs_potential(x1, y1, x2, y2):
    """``log||(z1, z2, 1)||``, the Fubini-Study potential on the chart."""
    return 0.5 * np.log1p(x1 * x1 + y1 * y1 + x2 * x2 + y2 * y2)


# ---------------------------------------------------------------------------
# Wedge
# ---------------------------------------------------------------------------

def _inplane(f, a, b, h):
    """``D_a D_b f`` for in-slab axes a, b in {1, 2, 3} on the interior block."""
    r = RING
    n = f.shape[0]
    core = [slice(r, n - r)] * 3

    def sh(offsets):
        s = list(core)
        for ax, o in offsets:
            s[ax - 1] = slice(r + o, n - r + o)
        return f[tuple(s)]

    if a == b:
        return (sh([(a, 2)]) - 2 * sh([]) + sh([(a, -2)])) / (4 * h[a] * h[a])
    return (sh([(a, 1), (b, 1)]) - sh([(a, 1), (b, -1)]) - sh([(a, -1), (b, 1)])
            + sh([(a, -1), (b, -1)])) / (4 * h[a] * h[b])


def _first(f, a, h):
    """``D_a f`` for an in-slab axis a on the interior block."""
    r = RING
    n = f.shape[0]
    s_hi = [slice(r, n - r)] * 3
    s_lo = list(s_hi)
    s_hi[a - 1] = slice(r + 1, n - r + 1)
    s_lo[a - 1] = slice(r - 1, n - r - 1)
    return (f[tuple(s_hi)] - f[tuple(s_lo)]) / (2 * h[a])


def _complex_hessian(win, h):
    """``(u_11, u_22, u_12)`` at the centre slab of a five-slab window."""
    r = RING
    n = win[2].shape[0]
    core = (slice(r, n - r),) * 3
    H = {}
    H[0, 0] = (win[4][core] - 2 * win[2][core] + win[0][core]) / (4 * h[0] * h[0])
    d0 = (win[3] - win[1]) / (2 * h[0])
    for b in (1, 2, 3):
        H[0, b] = _first(d0, b, h)
    for a in (1, 2, 3):
        for b in range(a, 4):
            H[a, b] = _inplane(win[2], a, b, h)
    u11 = (H[0, 0] + H[1, 1]) / 4
    u22 = (H[2, 2] + H[3, 3]) / 4
    u12r = (H[0, 2] + H[1, 3]) / 4
    u12i = (H[0, 3] - H[1, 2]) / 4
    return u11, u22, u12r, u12i


@dataclass
class DensityGrid:
    """Cell masses of a discrete measure on the interior cells of a chart box.

    ``cell_masses[i, j, k, l]`` belongs to the cell centred at the grid node
    ``(i + RING, j + RING, k + RING, l + RING)``.
    """
    cell_masses: np.ndarray
    box: tuple
    resolution: int
    h: tuple
    total_mass: float
    negative_clip: float
    raw_mass: float
    nan_cells: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def negativity_ratio(self):
        return self.negative_clip / self.total_mass if self.total_mass > 0 else float("inf")

    @property
    def quality_ok(self):
        return self.negativity_ratio <= NEGATIVITY_LIMIT

    def check_quality(self):
        if not self.quality_ok:
            raise QualityFailure("clipped negativity exceeds the allowed share of the mass",
                                 negative_clip=self.negative_clip, total_mass=self.total_mass)
        return self

    @property
    def cell_volume(self):
        return float(np.prod(self.h))

    def axis(self, a):
        """Cell-centre coordinates of the interior cells along real axis ``a``."""
        lo = self.box[a][0]
        n = self.cell_masses.shape[a]
        return lo + (np.arange(n) + RING + 0.5) * self.h[a]

    def inner_box(self):
        return tuple((lo + RING * h, hi - RING * h) for (lo, hi), h in zip(self.box, self.h))

    def centers(self, flat_index):
        """Chart points ``(z1, z2)`` of cells given by flat indices; shape (n, 2) complex."""
        idx = np.unravel_index(np.asarray(flat_index), self.cell_masses.shape)
        c = [self.axis(a)[idx[a]] for a in range(4)]
        return np.stack([c[0] + 1j * c[1], c[2] + 1j * c[3]], axis=-1)

    def marginal(self, axes=(0, 2)):
        """2-D marginal over the two given real axes (default: Re z1 vs Re z2)."""
        other = tuple(a for a in range(4) if a not in axes)
        m = self.cell_masses.sum(axis=other, dtype=np.float64)
        return m if axes[0] < axes[1] else m.T

    def summary(self):
        return {"total_mass": self.total_mass, "raw_mass": self.raw_mass,
                "negative_clip": self.negative_clip, "negativity_ratio": self.negativity_ratio,
                "quality_ok": self.quality_ok, "nan_cells": self.nan_cells,
                "resolution": self.resolution, "box": [list(b) for b in self.box],
                "inner_box": [list(b) for b in self.inner_box()], **self.meta}

    def to_csv(self, path, min_fraction=1e-9):
        """Cells with mass above ``min_fraction * total_mass``: centre coordinates and mass."""
        thr = min_fraction * self.total_mass
        flat = self.cell_masses.ravel()
        idx = np.flatnonzero(flat > thr)
        C = self.centers(idx)

        def rows():
            for c, m in zip(C, flat[idx]):
                yield [float(c[0].real), float(c[0].imag), float(c[1].real), float(c[1].imag),
                       float(m)]
        return write_csv(path, ["re(z1)", "im(z1)", "re(z2)", "im(z2)", "mass"], rows())

    def to_pgm(self, path, axes=(0, 2)):
        return write_pgm(path, self.marginal(axes), label=f"marginal {AXES[axes[0]]},{AXES[axes[1]]}")


def ddc_wedge(u, v, clip=True, dtype=None):
    """Discrete ``dd^c u ^ dd^c v`` on the interior cells of a common grid.

    Negative cells are clipped to zero and their total is reported as
    ``negative_clip``.  Cells whose stencil touches a NaN are dropped and counted.
    ``dtype`` defaults to float64 up to resolution 96 and float32 above.
    """
    if not u.same_grid(v):
        raise UsageError("potentials live on different grids")
    res = u.resolution
    if dtype is None:
        dtype = np.float64 if res <= 96 else np.float32
    m = res - 2 * RING
    out = np.empty((m, m, m, m), dtype=dtype)
    h = u.h
    vol = float(np.prod(h))
    c = 4.0 / math.pi ** 2
    wu, wv = deque(), deque()
    same = u is v
    pos = neg = 0.0
    nan_cells = 0
    it_u = u.iter_slabs()
    it_v = None if same else v.iter_slabs()
    for i, su in it_u:
        sv = su if same else next(it_v)[1]
        wu.append(su)
        wv.append(sv)
        if len(wu) < 2 * RING + 1:
            continue
        a11, a22, a12r, a12i = _complex_hessian(wu, h)
        if same:
            b11, b22, b12r, b12i = a11, a22, a12r, a12i
        else:
            b11, b22, b12r, b12i = _complex_hessian(wv, h)
        dens = c * (a11 * b22 + a22 * b11 - 2.0 * (a12r * b12r + a12i * b12i))
        mass = dens * vol
        bad = ~np.isfinite(mass)
        if bad.any():
            nan_cells += int(bad.sum())
            mass[bad] = 0.0
        neg += float(-mass[mass < 0].sum(dtype=np.float64))
        pos += float(mass[mass > 0].sum(dtype=np.float64))
        out[i - 2 * RING] = np.maximum(mass, 0.0) if clip else mass
        wu.popleft()
        wv.popleft()
    total = pos if clip else pos - neg
    meta = {"u": u.name, "v": v.name, "sigma_cells": u.sigma, **{f"u_{k}": x for k, x in u.meta.items()}}
    return DensityGrid(out, u.box, res, h, total, neg if clip else 0.0, pos - neg, nan_cells, meta)


def total_mass(d):
    return float(d.cell_masses.sum(dtype=np.float64))


def sample_measure(d, n, seed=0, jitter=True):
    """``n`` chart points ``(z1, z2)`` drawn cell-proportionally, uniform inside each cell."""
    flat = d.cell_masses.ravel()
    if not d.total_mass > 0:
        raise StatisticalInsufficiency("density has no mass to sample")
    rng = np.random.default_rng(seed)
    cdf = np.cumsum(flat, dtype=np.float64)
    u = rng.random(n) * cdf[-1]
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), flat.size - 1)
    C = d.centers(idx)
    if jitter:
        off = rng.uniform(-0.5, 0.5, (n, 4)) * np.asarray(d.h)
        C = C + np.stack([off[:, 0] + 1j * off[:, 1], off[:, 2] + 1j * off[:, 3]], axis=1)
    return C


def support_check(d, region, chart=2, chunk=2_000_000):
    """Share of the mass whose cell centres lie in ``region`` (anything with ``contains(lifts)``)."""
    flat = d.cell_masses.ravel()
    if not d.total_mass > 0:
        return 0.0
    idx_all = np.flatnonzero(flat > 0)
    inside = 0.0
    for s in range(0, len(idx_all), chunk):
        idx = idx_all[s:s + chunk]
        Z = chart_lift(d.centers(idx), chart, 2)
        inside += float(flat[idx][region.contains(Z)].sum(dtype=np.float64))
    return inside / float(flat.sum(dtype=np.float64))


# ---------------------------------------------------------------------------
# Calibration and the equilibrium measure
# ---------------------------------------------------------------------------

def fs_box_mass(box):
    """Exact Fubini-Study mass ``int omega^2`` of a box in the chart of P^2.

    With ``1/(1+r^2)^3 = (1/2) int t^2 e^{-t(1+r^2)} dt`` the 4-D integral of the
    density ``2/(pi^2 (1+r^2)^3)`` factorizes into error functions:
    ``(1/16) int_0^inf e^{-t} prod_a (erf(hi_a sqrt t) - erf(lo_a sqrt t)) dt``.
    """
    b = _as_box(box)

    def integrand(t):
        s = math.sqrt(t)
        p = 1.0
        for lo, hi in b:
            p *= special.erf(hi * s) - special.erf(lo * s)
        return math.exp(-t) * p

    val, _ = integrate.quad(integrand, 0.0, np.inf, limit=200, epsabs=1e-13, epsrel=1e-12)
    return val / 16.0


def fs_calibration(box=3.0, resolution=64):
    """FS x FS wedge on a grid compared with the exact FS mass of the inner box."""
    u = GridPotential.from_function(fs_potential, box, resolution, name="fs")
    dg = ddc_wedge(u, u)
    exact = fs_box_mass(dg.inner_box())
    return {"measured": dg.total_mass, "exact": exact,
            "relative_error": abs(dg.total_mass - exact) / exact,
            "extrapolated_full_mass": dg.total_mass / exact, "resolution": resolution,
            "inner_box": [list(x) for x in dg.inner_box()]}


def equilibrium_measure(pair, box=3.0, resolution=64, depth=20, sigma=DEFAULT_SIGMA, chart=None,
                        dtype=None):
    """``mu = T+ ^ T-`` on a chart box from the Green potentials of ``f`` and ``f^{-1}``."""
    u = GridPotential.from_green(GreenEvaluator.from_pair(pair, "forward", depth), box,
                                 resolution, chart, sigma)
    v = GridPotential.from_green(GreenEvaluator.from_pair(pair, "inverse", depth), box,
                                 resolution, chart, sigma)
    dg = ddc_wedge(u, v, dtype=dtype)
    dg.meta.update({"depth": depth, "sigma_cells": sigma, "map": pair.forward.name})
    return dg
