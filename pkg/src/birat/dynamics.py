"""Monte Carlo pullback masses, dynamical degrees, invariance and mixing diagnostics.

The mass of ``f^{n*}(omega^p)`` against ``omega^{k-p}`` is an average over
Fubini-Study uniform points of ``e_p(lambda_1^2, ..., lambda_k^2) / C(k, p)``,
where the ``lambda_i`` are the singular values of the projective differential
of the reduced iterate.  The integrand blows up near the indeterminacy set of
the iterate, so means are combined by median-of-means over fixed blocks, each
drawn from its own seed so results do not depend on how work is scheduled.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import IndeterminacyProximity, StatisticalInsufficiency, UsageError
from .green import chart_lift
from .projalg import fs_uniform
from .ratmap import DEFAULT_EPS_IND, _is_scalar_identity, iterate, map_differential_batch, \
    map_eval_batch

__all__ = [
    "MassEstimate", "DegreeEstimate", "CorrelationSeries", "InvarianceResult",
    "projective_differential", "projective_singular_values", "mc_mass_pullback",
    "dynamical_degree_estimate", "OBSERVABLES", "observable", "observable_range",
    "invariance_test", "mixing_correlations", "push_forward", "trapped_samples",
    "TrappedSample", "ReliabilityWarning", "BLOCKS", "REJECT_WARN",
    "DROP_LIMIT",
]

BLOCKS = 32            # median-of-means blocks
REJECT_WARN = 0.20     # rejected share above which an estimate is flagged unreliable
DROP_LIMIT = 0.10      # dropped share above which invariance/mixing statistics refuse to answer
MAX_MIXING_N = 8
DEFAULT_BOX = 3.0


class ReliabilityWarning(UserWarning):
    pass


# ---------------------------------------------------------------------------
# Projective differential
# ---------------------------------------------------------------------------

def _perp_frames(Z):
    """Orthonormal bases (as columns) of the orthogonal complements of the rows of Z."""
    n, m = Z.shape
    # QR of [z | I]: the first column of Q spans z, the remaining ones its complement
    M = np.concatenate([Z[:, :, None], np.broadcast_to(np.eye(m), (n, m, m))], axis=2)
    Q = np.linalg.qr(M, mode="complete")[0]
    return Q[:, :, 1:]


def _projective_matrices(f, Z, eps_ind):
    """Chart-free differential matrices ``A`` (n, k, k) at unit lifts Z plus a bad-row mask."""
    Z = np.asarray(Z, dtype=complex)
    Z = Z / np.linalg.norm(Z, axis=1)[:, None]
    W, bad = map_eval_batch(f, Z, eps_ind)
    nw = np.linalg.norm(W, axis=1)
    safe = np.where(bad, 1.0, nw)
    Wn = np.where(bad[:, None], Z, W / safe[:, None])
    D = map_differential_batch(f, Z)
    Qz = _perp_frames(Z)
    Qw = _perp_frames(Wn)
    A = np.conj(np.swapaxes(Qw, 1, 2)) @ D @ Qz / safe[:, None, None]
    bad = bad | ~np.all(np.isfinite(A), axis=(1, 2))
    return A, bad


def projective_differential(f, z, eps_ind=DEFAULT_EPS_IND):
    """Differential of ``[F]`` at ``[z]`` between orthonormal frames of ``z^perp`` and ``F(z)^perp``.

    The frames are taken at unit lifts; with those the FS metric is Euclidean on
    the complements and the radial part of ``dF`` is projected out.  Returns
    ``(A, singular_values)`` with singular values in decreasing order.
    """
    A, bad = _projective_matrices(f, np.atleast_2d(z), eps_ind)
    if bad[0]:
        raise IndeterminacyProximity("point is too close to the indeterminacy set",
                                     point=np.asarray(z).tolist())
    return A[0], np.linalg.svd(A[0], compute_uv=False)


def projective_singular_values(f, Z, eps_ind=DEFAULT_EPS_IND):
    """Singular values (n, k) at the rows of Z and the mask of rejected rows."""
    A, bad = _projective_matrices(f, Z, eps_ind)
    A[bad] = 0.0
    return np.linalg.svd(A, compute_uv=False), bad


def _elementary_symmetric(X, p):
    """``e_p`` of each row of X."""
    e = np.zeros((X.shape[0], p + 1))
    e[:, 0] = 1.0
    for j in range(X.shape[1]):
        for q in range(p, 0, -1):
            e[:, q] += X[:, j] * e[:, q - 1]
    return e[:, p]


# ---------------------------------------------------------------------------
# Pullback masses
# ---------------------------------------------------------------------------

@dataclass
class MassEstimate:
    value: float
    standard_error: float
    samples_used: int
    samples_rejected: int
    n: int = 1
    p: int = 1
    seed: int = 0
    reliable: bool = True
    exact: bool = False
    notes: list = field(default_factory=list)

    @property
    def requested(self):
        return self.samples_used + self.samples_rejected

    @property
    def rejected_fraction(self):
        return self.samples_rejected / self.requested if self.requested else 0.0

    def to_dict(self):
        return {"value": self.value, "standard_error": self.standard_error,
                "samples_used": self.samples_used, "samples_rejected": self.samples_rejected,
                "n": self.n, "p": self.p, "seed": self.seed, "reliable": self.reliable,
                "exact": self.exact, "notes": list(self.notes)}


def _block_sizes(samples, blocks):
    base, extra = divmod(samples, blocks)
    return [base + (b < extra) for b in range(blocks)]


def _median_of_means(means, counts):
    means = np.asarray([m for m, c in zip(means, counts) if c > 0])
    if len(means) == 0:
        return float("nan"), float("inf")
    value = float(np.median(means))
    if len(means) < 2:
        return value, float("inf")
    # asymptotic standard error of a sample median of (near-normal) block means
    se = math.sqrt(math.pi / 2) * float(np.std(means, ddof=1)) / math.sqrt(len(means))
    return value, se


def _mass_of_map(g, p, samples, seed_key, eps_ind, blocks, g_inv=None, chunk=8192):
    """Block means of the mass integrand of g.

    Without ``g_inv`` points are FS-uniform.  With the inverse iterate available the
    proposal is the defensive mixture ``(omega^k + g^* omega^k) / 2``: half of the
    points are images ``x = g_inv(y)`` of uniform points, and each value is divided
    by the mixture density ``(1 + |det dg|^2) / 2`` relative to ``omega^k``.  At
    pushed points the singular values of ``dg(x)`` are the reciprocals of those
    of ``dg_inv(y)``, which avoids evaluating g next to its indeterminacy set.
    """
    k = g.ambient
    norm = math.comb(k, p)
    means, counts, rejected = [], [], 0
    for b, size in enumerate(_block_sizes(samples, blocks)):
        rng = np.random.default_rng(np.random.SeedSequence(list(seed_key) + [b]))
        total, used = 0.0, 0
        for s in range(0, size, chunk):
            m = min(chunk, size - s)
            Z = fs_uniform(k, m, rng)
            pushed = rng.random(m) < 0.5 if g_inv is not None else np.zeros(m, dtype=bool)
            lam2 = np.empty((m, k))
            bad = np.zeros(m, dtype=bool)
            sv, bad[~pushed] = projective_singular_values(g, Z[~pushed], eps_ind)
            lam2[~pushed] = sv ** 2
            if pushed.any():
                sv, bad[pushed] = projective_singular_values(g_inv, Z[pushed], eps_ind)
                with np.errstate(divide="ignore"):
                    lam2[pushed] = 1.0 / sv ** 2
            lam2 = lam2[~bad]
            vals = _elementary_symmetric(lam2, p) / norm
            if g_inv is not None:
                with np.errstate(invalid="ignore"):
                    vals = vals / (0.5 + 0.5 * np.prod(lam2, axis=1))
            fin = np.isfinite(vals)
            rejected += int(bad.sum()) + int((~fin).sum())
            total += float(vals[fin].sum())
            used += int(fin.sum())
        means.append(total / used if used else float("nan"))
        counts.append(used)
    return means, counts, rejected


def mc_mass_pullback(f, n, p=1, samples=100_000, seed=0, eps_ind=DEFAULT_EPS_IND, blocks=BLOCKS,
                     inverse=None):
    """Monte Carlo estimate of ``int f^{n*}(omega^p) ^ omega^{k-p}``.

    ``n = 0`` and iterates that reduce to the identity give exactly 1.  Passing
    the birational ``inverse`` of ``f`` switches to the mixture proposal of
    :func:`_mass_of_map`, which keeps the variance finite when the pullback mass
    concentrates on a set of small volume.
    Estimates with more than 20% rejected samples are flagged unreliable and a
    :class:`ReliabilityWarning` is issued.
    """
    k = f.ambient
    if not 1 <= p <= k:
        raise UsageError(f"p must lie in 1..{k}")
    if n < 0:
        raise UsageError("n must be >= 0")
    if samples < blocks:
        raise UsageError(f"need at least {blocks} samples")
    if n == 0 or _is_scalar_identity(iterate(f, n) if n else f):
        return MassEstimate(1.0, 0.0, samples, 0, n, p, seed, True, True,
                            ["iterate is the identity; mass is exact"])
    g = iterate(f, n)
    g_inv = iterate(inverse, n) if inverse is not None else None
    means, counts, rejected = _mass_of_map(g, p, samples, (seed, n, p), eps_ind, blocks, g_inv)
    value, se = _median_of_means(means, counts)
    used = int(sum(counts))
    est = MassEstimate(value, se, used, rejected, n, p, seed)
    if est.rejected_fraction > REJECT_WARN or not math.isfinite(value):
        est.reliable = False
        est.notes.append(f"{est.rejected_fraction:.1%} of samples rejected near indeterminacy")
        warnings.warn(f"unreliable pullback mass for n={n}, p={p}: "
                      f"{est.rejected_fraction:.1%} rejected", ReliabilityWarning, stacklevel=2)
    return est


@dataclass
class DegreeEstimate:
    value: float
    error_bar: float              # two standard errors, delta method on the fitted slope
    masses: list
    p: int
    nmax: int
    seed: int
    reliable: bool = True

    def to_dict(self):
        return {"value": self.value, "error_bar": self.error_bar, "p": self.p,
                "nmax": self.nmax, "seed": self.seed, "reliable": self.reliable,
                "kind": "desk-scale estimate", "masses": [m.to_dict() for m in self.masses]}

    def agrees_with(self, other):
        """Equal within the sum of both error bars."""
        return abs(self.value - other.value) <= self.error_bar + other.error_bar


def dynamical_degree_estimate(f, p=1, nmax=4, samples=20_000, seed=0, eps_ind=DEFAULT_EPS_IND,
                              inverse=None):
    """``exp`` of the least-squares slope of ``log mass_n`` over ``n = 1..nmax``.

    ``inverse`` is passed on to :func:`mc_mass_pullback`.
    """
    if nmax < 2:
        raise UsageError("nmax must be >= 2")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ReliabilityWarning)
        masses = [mc_mass_pullback(f, n, p, samples, seed, eps_ind, inverse=inverse)
                  for n in range(1, nmax + 1)]
    for w in caught:
        warnings.warn(w.message, w.category, stacklevel=2)
    ns = np.arange(1, nmax + 1, dtype=float)
    y = np.log([m.value for m in masses])
    c = (ns - ns.mean()) / np.sum((ns - ns.mean()) ** 2)
    slope = float(c @ y)
    rel = np.array([m.standard_error / m.value for m in masses])
    se = float(math.sqrt(np.sum(c ** 2 * rel ** 2)))
    value = math.exp(slope)
    return DegreeEstimate(value, 2.0 * value * se, masses, p, nmax, seed,
                          all(m.reliable for m in masses))


# ---------------------------------------------------------------------------
# Observables and orbits of chart points
# ---------------------------------------------------------------------------

def _re_z1(P, R):
    return P[:, 0].real


def _abs_z1_sq(P, R):
    return np.minimum(np.abs(P[:, 0]) ** 2, R * R)


def _bump(P, R):
    r2 = (np.abs(P[:, 0]) ** 2 + np.abs(P[:, 1]) ** 2) / (R * R)
    return np.where(r2 < 1.0, (1.0 - r2) ** 2, 0.0)


def _constant(P, R):
    return np.ones(P.shape[0])


OBSERVABLES = {
    "re_z1": (_re_z1, lambda R: 2 * R),
    "abs_z1_sq": (_abs_z1_sq, lambda R: R * R),
    "bump": (_bump, lambda R: 1.0),
    "constant": (_constant, lambda R: 0.0),
}
_ALIASES = {"Re z1": "re_z1", "re(z1)": "re_z1", "|z1|^2": "abs_z1_sq", "|z1|²": "abs_z1_sq",
            "radial bump": "bump", "radial_bump": "bump", "1": "constant"}


def _resolve(name):
    key = _ALIASES.get(name, name)
    if key not in OBSERVABLES:
        raise UsageError(f"unknown observable {name!r}; choose from {', '.join(OBSERVABLES)}")
    return key


def observable(name, box=DEFAULT_BOX):
    """Vectorized observable on (n, 2) chart points; ``box`` is the half-width R of the chart box.

    ``re_z1`` is Re z1, ``abs_z1_sq`` is ``min(|z1|^2, R^2)`` and ``bump`` is
    ``(1 - |z|^2/R^2)_+^2``.
    """
    fn, _ = OBSERVABLES[_resolve(name)]
    return lambda P: fn(np.asarray(P), float(box))


def observable_range(name, box=DEFAULT_BOX):
    """Range of the observable over the box ``[-R, R]^4``."""
    return float(OBSERVABLES[_resolve(name)][1](float(box)))


def push_forward(f, P, chart=2, box=DEFAULT_BOX, eps_ind=DEFAULT_EPS_IND):
    """Image chart points of ``f`` and a mask of points that were dropped.

    A point is dropped when it is indeterminacy-proximate, when its image leaves
    the chart, or when the image lies outside the box ``[-R, R]^4``.
    """
    P = np.asarray(P, dtype=complex)
    Z = chart_lift(P, chart, 2)
    W, bad = map_eval_batch(f, Z / np.linalg.norm(Z, axis=1)[:, None], eps_ind)
    wc = W[:, chart]
    small = ~(np.abs(wc) > 1e-12 * np.max(np.abs(W), axis=1))
    others = [i for i in range(3) if i != chart]
    with np.errstate(divide="ignore", invalid="ignore"):
        Q = W[:, others] / np.where(small, 1.0, wc)[:, None]
    out = small | bad | ~np.all(np.isfinite(Q), axis=1)
    if box is not None:
        out |= np.any((np.abs(Q.real) > box) | (np.abs(Q.imag) > box), axis=1)
    Q[out] = np.nan
    return Q, out


def _orbits(f, P, nmax, chart, box, eps_ind):
    """Chart orbits ``x, f(x), ..., f^nmax(x)`` and the mask of points dropped at some step."""
    orbit = [np.asarray(P, dtype=complex)]
    dropped = np.zeros(len(P), dtype=bool)
    cur = orbit[0]
    for _ in range(nmax):
        nxt = np.full_like(cur, np.nan)
        alive = ~dropped
        if alive.any():
            q, out = push_forward(f, cur[alive], chart, box, eps_ind)
            nxt[alive] = q
            idx = np.flatnonzero(alive)
            dropped[idx[out]] = True
        orbit.append(nxt)
        cur = nxt
    return orbit, dropped


def _check_drops(dropped, what):
    n = len(dropped)
    frac = float(dropped.sum()) / n if n else 1.0
    if frac > DROP_LIMIT:
        raise StatisticalInsufficiency(f"{frac:.1%} of {what} orbits left the chart box or hit "
                                       "indeterminacy", dropped=int(dropped.sum()), samples=n)
    return frac


@dataclass
class TrappedSample:
    points: np.ndarray
    steps: int
    drawn: int
    rejected: int
    seed: int

    @property
    def acceptance(self):
        return (self.drawn - self.rejected) / self.drawn if self.drawn else 0.0

    def to_dict(self):
        return {"count": int(len(self.points)), "steps": self.steps, "drawn": self.drawn,
                "rejected": self.rejected, "acceptance": self.acceptance, "seed": self.seed}


def trapped_samples(density, pair, n, seed=0, steps=5, chart=2, box=DEFAULT_BOX,
                    eps_ind=DEFAULT_EPS_IND, min_acceptance=0.05):
    """Draws from a grid measure conditioned on the forward orbit staying in the box.

    A grid approximation of an invariant measure smears its support by a few cells.
    Smeared points off the forward-bounded set escape at a geometric rate, which
    swamps correlation estimates after a handful of steps; conditioning on
    ``steps`` trapped iterates removes them.  Rejection counts are reported.
    """
    from .currents import sample_measure

    f = getattr(pair, "forward", pair)
    keep, drawn, rejected, r = [], 0, 0, 0
    have = 0
    while have < n:
        batch = max(2 * (n - have), 1024)
        X = sample_measure(density, batch, seed=[seed, r])
        _, dropped = _orbits(f, X, steps, chart, box, eps_ind)
        drawn += batch
        rejected += int(dropped.sum())
        keep.append(X[~dropped])
        have += int((~dropped).sum())
        r += 1
        if drawn >= 20 * n and have < min_acceptance * drawn:
            raise StatisticalInsufficiency("too few sampled orbits stay in the chart box",
                                           drawn=drawn, accepted=have, steps=steps)
    return TrappedSample(np.concatenate(keep)[:n], steps, drawn, rejected, seed)


@dataclass
class InvarianceResult:
    discrepancy: float
    relative: float           # discrepancy divided by the observable range over the box
    observable: str
    samples_used: int
    samples_dropped: int
    seed: int = 0
    mean_before: float = 0.0
    mean_after: float = 0.0

    def __float__(self):
        return self.discrepancy

    def to_dict(self):
        return dict(self.__dict__)


def invariance_test(mu_samples, pair, observable_name="re_z1", seed=0, chart=2, box=DEFAULT_BOX,
                    eps_ind=DEFAULT_EPS_IND):
    """``|mean(phi o f) - mean(phi)|`` over the samples whose image stays in the chart box.

    ``seed`` is recorded only; the statistic itself is deterministic.
    """
    f = getattr(pair, "forward", pair)
    phi = observable(observable_name, box)
    P = np.asarray(mu_samples, dtype=complex)
    Q, out = push_forward(f, P, chart, box, eps_ind)
    _check_drops(out, "sample")
    keep = ~out
    a = float(np.mean(phi(P[keep])))
    b = float(np.mean(phi(Q[keep])))
    disc = abs(b - a)
    rng_ = observable_range(observable_name, box)
    return InvarianceResult(disc, disc / rng_ if rng_ > 0 else 0.0, _resolve(observable_name),
                            int(keep.sum()), int(out.sum()), seed, a, b)


@dataclass
class CorrelationSeries:
    values: list
    observables: tuple
    sample_count: int
    dropped: int = 0

    def ratio(self, n):
        c0 = abs(self.values[0])
        return abs(self.values[n]) / c0 if c0 > 0 else float("nan")

    def to_dict(self):
        return {"values": list(self.values), "observables": list(self.observables),
                "sample_count": self.sample_count, "dropped": self.dropped}

    def to_csv(self, path):
        from .io import write_csv
        return write_csv(path, ["n", "C_n"], [[n, float(v)] for n, v in enumerate(self.values)])


def mixing_correlations(mu_samples, pair, phi="re_z1", psi="re_z1", nmax=5, chart=2,
                        box=DEFAULT_BOX, eps_ind=DEFAULT_EPS_IND):
    """``C_n = mean(phi(f^n x) psi(x)) - mean(phi) mean(psi)`` for ``n = 0..nmax``.

    Averages run over samples whose orbit stays in the chart box up to ``nmax``;
    ``mean(phi)`` is taken over the same samples at time 0.
    """
    if not 0 <= nmax <= MAX_MIXING_N:
        raise UsageError(f"nmax must lie in 0..{MAX_MIXING_N}")
    f = getattr(pair, "forward", pair)
    fphi, fpsi = observable(phi, box), observable(psi, box)
    orbit, dropped = _orbits(f, np.asarray(mu_samples, dtype=complex), nmax, chart, box, eps_ind)
    _check_drops(dropped, "sample")
    keep = ~dropped
    x = orbit[0][keep]
    b = fpsi(x)
    ma, mb = float(np.mean(fphi(x))), float(np.mean(b))
    vals = [float(np.mean(fphi(orbit[n][keep]) * b) - ma * mb) for n in range(nmax + 1)]
    return CorrelationSeries(vals, (_resolve(phi), _resolve(psi)), int(keep.sum()),
                             int(dropped.sum()))
