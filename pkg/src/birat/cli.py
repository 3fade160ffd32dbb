"""Command-line entry point.

Every command writes its artifacts into ``--out`` together with a
``manifest.json`` listing them and the parameters used.  Settings come from
built-in defaults, then ``BIRAT_SEED`` (seed only), then a JSON ``--config``
file, then explicit flags; later sources win.

Exit codes: 0 success, 1 usage or invalid map, 2 file or parse error,
3 resource budget exceeded, 4 statistical insufficiency, 5 indeterminacy
proximity, 6 a check ran and failed (or a quality limit was exceeded).
"""

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .errors import BiratError, ParseError, QualityFailure, ResourceError, UsageError
from .io import write_csv, write_json
from .projalg import as_fraction, fs_uniform
from .ratmap import BirationalPair, degree_sequence, is_algebraically_stable, load_map_file, \
    verify_birational
from .zoo import ZOO_NAMES, zoo

__all__ = ["main", "RunConfig", "build_parser", "EXIT_OK", "EXIT_CHECK_FAILED"]

EXIT_OK = 0
EXIT_CHECK_FAILED = QualityFailure.exit_code

DEFAULTS = {"seed": 0, "depth": 20, "resolution": 64, "box": 3.0, "samples": 10000,
            "out_dir": "birat-out", "threads": None, "tolerances": {}}


@dataclass
class RunConfig:
    seed: int = 0
    depth: int = 20
    resolution: int = 64
    box: float = 3.0
    samples: int = 10000
    out_dir: str = "birat-out"
    threads: int = None
    tolerances: dict = field(default_factory=dict)

    def validate(self):
        if not isinstance(self.seed, int) or self.seed < 0:
            raise UsageError("seed must be a nonnegative integer")
        for name in ("depth", "resolution", "samples"):
            v = getattr(self, name)
            if not isinstance(v, int) or v <= 0:
                raise UsageError(f"{name} must be a positive integer")
        if not (isinstance(self.box, (int, float)) and self.box > 0 and math.isfinite(self.box)):
            raise UsageError("box must be a positive number")
        if self.threads is not None and (not isinstance(self.threads, int) or self.threads <= 0):
            raise UsageError("threads must be a positive integer")
        if not isinstance(self.tolerances, dict):
            raise UsageError("tolerances must be an object")
        for k, v in self.tolerances.items():
            if not isinstance(v, (int, float)) or not v > 0:
                raise UsageError(f"tolerance {k!r} must be a positive number")
        return self

    def tol(self, name, default):
        return float(self.tolerances.get(name, default))

    @classmethod
    def resolve(cls, args, env=None):
        env = os.environ if env is None else env
        values = dict(DEFAULTS)
        values["tolerances"] = {}
        if env.get("BIRAT_SEED") not in (None, ""):
            try:
                values["seed"] = int(env["BIRAT_SEED"])
            except ValueError as exc:
                raise UsageError("BIRAT_SEED must be an integer") from exc
        if getattr(args, "config", None):
            try:
                with open(args.config, encoding="utf-8") as fh:
                    doc = json.load(fh)
            except OSError as exc:
                raise ParseError(f"cannot read config file: {exc}") from exc
            except json.JSONDecodeError as exc:
                raise ParseError(f"config file is not valid JSON: {exc}") from exc
            if not isinstance(doc, dict):
                raise ParseError("config file must hold a JSON object")
            aliases = {"res": "resolution", "out": "out_dir", "N": "depth"}
            for key, v in doc.items():
                key = aliases.get(key, key)
                if key not in values:
                    raise ParseError(f"unknown config key {key!r}")
                values[key] = v
        for key, attr in (("seed", "seed"), ("depth", "depth"), ("resolution", "res"),
                          ("box", "box"), ("samples", "samples"), ("out_dir", "out"),
                          ("threads", "threads")):
            v = getattr(args, attr, None)
            if v is not None:
                values[key] = v
        for item in getattr(args, "tol", None) or []:
            name, _, v = item.partition("=")
            try:
                values["tolerances"][name] = float(v)
            except ValueError as exc:
                raise UsageError(f"bad tolerance override {item!r}; use NAME=VALUE") from exc
        if isinstance(values["box"], int):
            values["box"] = float(values["box"])
        return cls(**values).validate()


# ---------------------------------------------------------------------------
# Run directory and manifest
# ---------------------------------------------------------------------------

class Run:
    def __init__(self, command, cfg, source):
        self.command = command
        self.cfg = cfg
        self.source = source
        self.artifacts = []
        os.makedirs(cfg.out_dir, exist_ok=True)

    def path(self, name):
        return os.path.join(self.cfg.out_dir, name)

    def add(self, name, kind, **params):
        p = self.path(name)
        with open(p, "rb") as fh:
            digest = hashlib.sha256(fh.read()).hexdigest()
        self.artifacts.append({"path": name, "kind": kind, "sha256": digest, "parameters": params})
        return p

    def json(self, name, obj, kind="report", **params):
        write_json(self.path(name), obj)
        return self.add(name, kind, **params)

    def finish(self, exit_code):
        cfg = asdict(self.cfg)
        cfg.pop("out_dir")
        write_json(self.path("manifest.json"), {
            "command": self.command, "config": cfg, "map": self.source.describe(),
            "artifacts": self.artifacts, "exit_code": exit_code})
        return exit_code


# ---------------------------------------------------------------------------
# Map sources
# ---------------------------------------------------------------------------

class Source:
    def __init__(self, forward, inverse=None, label="", params=None, regions=None):
        self.forward = forward
        self.inverse = inverse
        self.label = label
        self.params = params or {}
        self.regions = regions

    @property
    def pair(self):
        if self.inverse is None:
            raise UsageError(f"{self.label or 'map'} has no inverse; this command needs a "
                             "birational pair")
        return BirationalPair.checked(self.forward, self.inverse, self.label)

    def map(self, direction="forward"):
        if direction == "inverse":
            return self.pair.inverse
        return self.forward

    def describe(self):
        return {"source": self.label, "params": self.params, "k": self.forward.ambient,
                "degree": self.forward.degree,
                "inverse_degree": self.inverse.degree if self.inverse is not None else None}


def _parse_complex_list(text):
    try:
        return [complex(t.strip().replace(" ", "")) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse complex list {text!r}") from exc


def _parse_coeffs(text):
    try:
        return [as_fraction(t.strip()) for t in text.split(",") if t.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"cannot parse coefficient list {text!r}") from exc


def load_source(args):
    if args.zoo and args.map:
        raise UsageError("give either --zoo or --map, not both")
    if args.map:
        try:
            with open(args.map, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ParseError(f"cannot read map file: {exc}") from exc
        fwd, inv, meta = load_map_file(text)
        regions = None
        if inv is not None and not verify_birational(BirationalPair(fwd, inv)):
            raise UsageError("the map file's inverse does not invert its forward map")
        return Source(fwd, inv, os.path.basename(args.map), {"metadata": meta}, regions)
    if not args.zoo:
        raise UsageError(f"choose a map with --zoo ({', '.join(ZOO_NAMES)}) or --map FILE")
    params = {}
    if args.d is not None:
        params["d"] = args.d
    if args.a is not None:
        try:
            params["a"] = as_fraction(args.a)
        except (ValueError, ZeroDivisionError) as exc:
            raise UsageError(f"cannot parse --a {args.a!r}") from exc
    if args.coeffs is not None:
        params["coeffs"] = _parse_coeffs(args.coeffs)
    if args.k is not None:
        params["k"] = args.k
    if args.matrix is not None:
        try:
            params["matrix"] = json.loads(args.matrix) if args.matrix != "identity" else "identity"
        except json.JSONDecodeError as exc:
            raise UsageError("--matrix must be a JSON list of rows or 'identity'") from exc
    entry = zoo(args.zoo, **params)
    shown = {k: (str(v) if isinstance(v, Fraction) else v) for k, v in entry.params.items()}
    if "coeffs" in shown and shown["coeffs"] is not None:
        shown["coeffs"] = [str(c) for c in shown["coeffs"]]
    return Source(entry.forward, entry.inverse, entry.name, shown, entry.regions)


def _load_regions(args, source, k):
    from .indeterminacy import load_regions, regions_from_json

    if getattr(args, "regions", None):
        return load_regions(args.regions, k)
    if source.regions is None:
        raise UsageError("no bundled regions for this map; pass --regions FILE")
    return regions_from_json(source.regions, k)


def _print(obj):
    print(json.dumps(obj, indent=1, sort_keys=True, default=_jsonable))


def _jsonable(o):
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_degrees(args, cfg, run):
    f = run.source.map(args.direction)
    seq = degree_sequence(f, args.n)
    print(list(seq))
    run.json("degrees.json", {"degrees": list(seq), "n": args.n, "direction": args.direction},
             n=args.n)
    return EXIT_OK


def cmd_stability(args, cfg, run):
    f = run.source.map(args.direction)
    rep = is_algebraically_stable(f, args.n)
    _print(rep.to_dict())
    run.json("stability.json", rep.to_dict(), n=args.n)
    return EXIT_OK


def cmd_indeterminacy(args, cfg, run):
    from .indeterminacy import numeric_scan

    tol = cfg.tol("indeterminacy", 1e-8)
    out, rows = {}, []
    maps = [("forward", run.source.forward)]
    if run.source.inverse is not None:
        maps.append(("inverse", run.source.inverse))
    for label, f in maps:
        clusters = numeric_scan(f, samples=cfg.samples, tol=tol, seed=cfg.seed)
        out[label] = [c.to_dict() for c in clusters]
        for c in clusters:
            rows.append([label] + [repr(complex(x)) for x in c.point]
                        + [c.residual, c.size, c.to_dict().get("rational") or ""])
    _print(out)
    run.json("indeterminacy.json", {"clusters": out, "samples": cfg.samples, "seed": cfg.seed,
                                    "tol": tol}, samples=cfg.samples, seed=cfg.seed)
    k = run.source.forward.ambient
    write_csv(run.path("indeterminacy.csv"),
              ["map"] + [f"z{i}" for i in range(k + 1)] + ["residual", "size", "rational"], rows)
    run.add("indeterminacy.csv", "table")
    return EXIT_OK


def cmd_check_regular(args, cfg, run):
    from .indeterminacy import check_regular

    pair = run.source.pair
    regions, witnesses, definition = _load_regions(args, run.source, pair.ambient)
    definition = args.definition or definition or "one-sided"
    rep = check_regular(pair, regions, witnesses, samples=cfg.samples, seed=cfg.seed, s=args.s,
                        definition=definition)
    d = rep.to_dict()
    _print({"verdict": d["verdict"], "label": d["label"],
            "conditions": {c: d[c]["passed"] for c in ("condition1", "condition2", "condition3")}})
    run.json("regularity.json", d, samples=cfg.samples, seed=cfg.seed, definition=definition)
    return EXIT_OK if rep.verdict else EXIT_CHECK_FAILED


def _evaluator(run, cfg, direction):
    from .green import GreenEvaluator

    if direction == "inverse":
        return GreenEvaluator.from_pair(run.source.pair, "inverse", cfg.depth)
    return GreenEvaluator(run.source.forward, cfg.depth, "forward")


def cmd_green(args, cfg, run):
    e = _evaluator(run, cfg, args.direction)
    if args.point:
        Z = np.array([_parse_complex_list(p) for p in args.point])
    else:
        Z = fs_uniform(e.k, cfg.samples, np.random.default_rng(cfg.seed))
    if Z.ndim != 2 or Z.shape[1] != e.k + 1:
        raise UsageError(f"points need {e.k + 1} homogeneous coordinates")
    b = e.batch(Z)
    rows = [[str(complex(c)) for c in z] + [float(v), float(eb), int(u), bool(x)]
            for z, v, eb, u, x in zip(Z, b.values, b.bounds, b.depth_used, b.escaped)]
    if args.point:
        _print([b[i].to_dict() for i in range(len(b))])
    else:
        print(f"{len(b)} points, mean G = {np.nanmean(b.values):.6g}")
    write_csv(run.path("green.csv"), [f"z{i}" for i in range(e.k + 1)]
              + ["value", "error_bound", "depth_used", "escaped"], rows)
    run.add("green.csv", "table", depth=cfg.depth, direction=args.direction)
    return EXIT_OK


def _slice_labels(args):
    if args.slice == "real":
        return "re z1", "re z2"
    return f"re z{args.index + 1}", f"im z{args.index + 1}"


def cmd_green_grid(args, cfg, run):
    from .green import ChartSlice, potential_grid

    e = _evaluator(run, cfg, args.direction)
    lo, hi = -cfg.box, cfg.box
    ext = (lo, hi, lo, hi)
    if args.slice == "real":
        sl = ChartSlice.real_plane(e.k, box=ext, resolution=cfg.resolution)
    else:
        base = _parse_complex_list(args.base) if args.base else None
        sl = ChartSlice.complex_line(e.k, index=args.index, base=base, box=ext,
                                     resolution=cfg.resolution)
    g = potential_grid(e, sl, subtract_fs=not args.raw)
    params = {"depth": cfg.depth, "resolution": cfg.resolution, "box": cfg.box,
              "slice": args.slice, "direction": args.direction, "subtract_fs": not args.raw}
    g.to_csv(run.path("green_grid.csv"))
    run.add("green_grid.csv", "table", **params)
    g.to_pgm(run.path("green_grid.pgm"))
    run.add("green_grid.pgm", "heatmap", **params)
    summary = g.summary()
    run.json("green_grid.json", summary, **params)
    if args.png:
        from .plotting import heatmap_png
        heatmap_png(run.path("green_grid.png"), g.values, ext, *_slice_labels(args),
                    f"{run.source.label} {args.direction}")
        run.add("green_grid.png", "image", **params)
    _print(summary)
    return EXIT_OK


def cmd_pullback(args, cfg, run):
    from .green import basin_points, pullback_convergence

    e = _evaluator(run, cfg, args.direction)
    ell = _parse_complex_list(args.ell) if args.ell else np.ones(e.k + 1)
    Z = basin_points(e, args.points, seed=cfg.seed, box=cfg.box)
    r = pullback_convergence(e, ell, Z, args.nmin, args.nmax)
    lo, hi = 1.0 / (2 * e.d), 2.0 / e.d
    report = {"n": r["n"], "mean_ratio": r["mean_ratio"], "mean_ratio_per_n": r["mean_ratio_per_n"],
              "expected_ratio": r["expected_ratio"], "window": [lo, hi],
              "within_window": bool(lo <= r["mean_ratio"] <= hi), "used": r["used"],
              "dropped": r["dropped"], "seed": cfg.seed, "depth": cfg.depth}
    _print(report)
    run.json("pullback.json", report, points=args.points, seed=cfg.seed)
    write_csv(run.path("pullback_errors.csv"), [f"n={n}" for n in r["n"]], r["errors"])
    run.add("pullback_errors.csv", "table")
    return EXIT_OK


def _measure(run, cfg, sigma):
    from .currents import equilibrium_measure

    pair = run.source.pair
    if pair.ambient != 2:
        raise UsageError("the equilibrium measure is implemented for P^2 only")
    return equilibrium_measure(pair, cfg.box, cfg.resolution, cfg.depth, sigma)


def _support_region(run, args):
    from .indeterminacy import RegionIntersection, load_regions, regions_from_json

    if getattr(args, "regions", None):
        regions, _, _ = load_regions(args.regions, 2)
    elif run.source.regions is not None:
        regions, _, _ = regions_from_json(run.source.regions, 2)
    else:
        return None
    return RegionIntersection.of_roles(regions)


def cmd_measure(args, cfg, run):
    from .currents import fs_box_mass, support_check

    dg = _measure(run, cfg, args.sigma)
    params = {"resolution": cfg.resolution, "depth": cfg.depth, "box": cfg.box, "sigma": args.sigma}
    summary = dg.summary()
    summary["fs_mass_of_inner_box"] = fs_box_mass(dg.inner_box())
    region = _support_region(run, args)
    if region is not None:
        summary["support_fraction_U+U-"] = support_check(dg, region)
    lo, hi = cfg.tol("mass_low", 0.85), cfg.tol("mass_high", 1.1)
    summary["mass_window"] = [lo, hi]
    summary["mass_in_window"] = bool(lo <= dg.total_mass <= hi)
    dg.to_csv(run.path("density.csv"))
    run.add("density.csv", "table", **params)
    dg.to_pgm(run.path("density_marginal.pgm"))
    run.add("density_marginal.pgm", "heatmap", axes="re(z1),re(z2)", **params)
    if args.png:
        from .plotting import heatmap_png
        inner = dg.inner_box()
        heatmap_png(run.path("density_marginal.png"), dg.marginal(), inner[0] + inner[2],
                    "re(z1)", "re(z2)", "equilibrium measure marginal", log=True)
        run.add("density_marginal.png", "image", **params)
    run.json("measure.json", summary, **params)
    _print({k: summary[k] for k in ("total_mass", "negative_clip", "negativity_ratio",
                                     "quality_ok", "mass_in_window") if k in summary}
           | ({"support_fraction_U+U-": summary["support_fraction_U+U-"]}
              if "support_fraction_U+U-" in summary else {}))
    if not dg.quality_ok:
        raise QualityFailure("clipped negativity exceeds 2% of the mass",
                             negativity_ratio=dg.negativity_ratio)
    return EXIT_OK


def cmd_invariance(args, cfg, run):
    from .currents import sample_measure
    from .dynamics import invariance_test

    dg = _measure(run, cfg, args.sigma)
    X = sample_measure(dg, cfg.samples, seed=cfg.seed)
    limit = cfg.tol("invariance", 0.05)
    results = []
    for ob in args.observable or ["re_z1", "abs_z1_sq", "bump"]:
        r = invariance_test(X, run.source.pair, ob, seed=cfg.seed, box=cfg.box)
        d = r.to_dict()
        d["passed"] = bool(r.relative <= limit)
        results.append(d)
    report = {"results": results, "limit_relative": limit, "samples": cfg.samples,
              "seed": cfg.seed, "resolution": cfg.resolution, "depth": cfg.depth}
    _print(report)
    run.json("invariance.json", report, samples=cfg.samples, seed=cfg.seed)
    return EXIT_OK if all(r["passed"] for r in results) else EXIT_CHECK_FAILED


def cmd_mixing(args, cfg, run):
    from .dynamics import mixing_correlations, trapped_samples

    dg = _measure(run, cfg, args.sigma)
    ts = trapped_samples(dg, run.source.pair, cfg.samples, seed=cfg.seed, steps=args.nmax,
                         box=cfg.box)
    cs = mixing_correlations(ts.points, run.source.pair, args.phi, args.psi, args.nmax,
                             box=cfg.box)
    factor = cfg.tol("mixing", 0.3)
    report = {"correlations": cs.to_dict(), "ratio_last": cs.ratio(args.nmax),
              "factor": factor, "passed": bool(cs.ratio(args.nmax) <= factor),
              "sampling": ts.to_dict(), "resolution": cfg.resolution, "depth": cfg.depth}
    _print(report)
    run.json("mixing.json", report, samples=cfg.samples, seed=cfg.seed, nmax=args.nmax)
    cs.to_csv(run.path("correlations.csv"))
    run.add("correlations.csv", "table", phi=args.phi, psi=args.psi)
    return EXIT_OK


def cmd_mc_degree(args, cfg, run):
    from .dynamics import dynamical_degree_estimate, mc_mass_pullback

    f = run.source.map(args.direction)
    other = None
    if not args.uniform and run.source.inverse is not None:
        pair = run.source.pair
        other = pair.inverse if args.direction == "forward" else pair.forward
    if args.n is not None:
        m = mc_mass_pullback(f, args.n, args.p, cfg.samples, cfg.seed, inverse=other)
        report = m.to_dict()
        print(f"mass = {m.value:.6g} +- {m.standard_error:.2g}")
    else:
        est = dynamical_degree_estimate(f, args.p, args.nmax, cfg.samples, cfg.seed,
                                        inverse=other)
        report = est.to_dict()
        print(f"d_{args.p} ~ {est.value:.6g} +- {est.error_bar:.2g}  "
              f"(masses {[round(m.value, 4) for m in est.masses]})")
    report.update({"direction": args.direction, "proposal": "uniform" if other is None
                   else "mixture"})
    run.json("mc_degree.json", report, samples=cfg.samples, seed=cfg.seed, p=args.p)
    return EXIT_OK


def _is_power_map(f):
    for i, c in enumerate(f.components):
        if len(c) != 1:
            return False
        e, coef = c.leading_term()
        if coef != 1 or e[i] != f.degree:
            return False
    return True


def verify_suite(source, cfg):
    """Invariant checks for one map; returns a list of ``{name, passed, detail}`` rows."""
    from .dynamics import mc_mass_pullback
    from .green import GreenEvaluator, basin_points, green_eval_batch, invariance_residuals, \
        pullback_convergence

    f = source.forward
    rows = []

    def add(name, passed, **detail):
        rows.append({"check": name, "passed": bool(passed), "detail": detail})

    N = int(cfg.tolerances.get("verify_n", 4))
    seq = degree_sequence(f, N)
    vals = [1] + list(seq)
    sub = all(vals[a + b] <= vals[a] * vals[b] for a in range(N + 1) for b in range(N + 1 - a))
    add("degree sequence is submultiplicative", sub, degrees=list(seq))
    stab = is_algebraically_stable(f, N)
    rows.append({"check": "algebraic stability (informational)", "passed": True,
                 "detail": {"stable": stab.stable, "first_failure": stab.first_failure}})
    if source.inverse is not None:
        add("birational inverse composes to the identity", verify_birational(source.pair))
    tol_mass = cfg.tol("mass_rel", 0.10)
    for n in (1, 2):
        m = mc_mass_pullback(f, n, 1, max(cfg.samples, 20000), cfg.seed,
                             inverse=source.inverse)
        dn = vals[n]
        add(f"pullback mass of omega under f^{n} equals deg(f^{n})",
            m.reliable and abs(m.value - dn) <= tol_mass * dn, mass=m.value,
            standard_error=m.standard_error, degree=dn)
    if f.degree >= 2:
        e = GreenEvaluator(f, max(cfg.depth, 25))
        rng = np.random.default_rng(cfg.seed)
        Z = fs_uniform(f.ambient, 100, rng)
        res = invariance_residuals(e, Z)
        res = res[np.isfinite(res)]
        add("G(F z) = d G(z)", res.size > 0 and res.max() <= cfg.tol("green_invariance", 1e-4),
            max_residual=float(res.max()) if res.size else None, points=int(res.size))
        lam = np.exp(1j * rng.uniform(0, 2 * np.pi, 100)) * np.exp(rng.uniform(-5, 5, 100))
        g0 = green_eval_batch(e, Z).values
        g1 = green_eval_batch(e, Z * lam[:, None]).values
        # relative to the size of the values compared
        scale = np.maximum(1.0, np.maximum(np.abs(g0), np.abs(g1)))
        hres = np.abs(g1 - g0 - np.log(np.abs(lam))) / scale
        hres = hres[np.isfinite(hres)]
        add("G(lambda z) = G(z) + log|lambda|",
            hres.size > 0 and hres.max() <= cfg.tol("homogeneity", 1e-12),
            max_residual=float(hres.max()) if hres.size else None)
        if _is_power_map(f):
            g = green_eval_batch(GreenEvaluator(f, 30), Z).values
            exact = np.log(np.max(np.abs(Z), axis=1))
            add("G = log max|z_i| for the power map",
                np.max(np.abs(g - exact)) <= cfg.tol("closed_form", 1e-9),
                max_error=float(np.max(np.abs(g - exact))))
        try:
            B = basin_points(e.with_depth(cfg.depth), 50, seed=cfg.seed, box=cfg.box)
            r = pullback_convergence(e.with_depth(cfg.depth), np.ones(f.ambient + 1), B)
            ok = 1 / (2 * f.degree) <= r["mean_ratio"] <= 2 / f.degree
            add("hyperplane pullbacks converge like d^-n", ok, mean_ratio=r["mean_ratio"],
                used=r["used"])
        except BiratError as exc:
            add("hyperplane pullbacks converge like d^-n", False, error=str(exc))
    return rows


def cmd_verify(args, cfg, run):
    rows = verify_suite(run.source, cfg)
    width = max(len(r["check"]) for r in rows)
    for r in rows:
        print(f"{r['check']:<{width}}  {'PASS' if r['passed'] else 'FAIL'}")
    ok = all(r["passed"] for r in rows)
    print("all invariants pass" if ok else "some invariants FAIL")
    run.json("verify.json", {"checks": rows, "passed": ok}, seed=cfg.seed, samples=cfg.samples)
    return EXIT_OK if ok else EXIT_CHECK_FAILED


COMMANDS = {
    "degrees": (cmd_degrees, "exact degree sequence deg(f^n)"),
    "stability": (cmd_stability, "algebraic stability test deg(f^n) = d^n"),
    "indeterminacy": (cmd_indeterminacy, "numerical scan for indeterminacy points"),
    "check-regular": (cmd_check_regular, "sampled regularity check against a region config"),
    "green": (cmd_green, "Green function values at points"),
    "green-grid": (cmd_green_grid, "Green potential on a chart slice (CSV, PGM)"),
    "pullback-converge": (cmd_pullback, "convergence of hyperplane pullbacks to the Green current"),
    "measure": (cmd_measure, "equilibrium measure on a chart grid"),
    "invariance": (cmd_invariance, "invariance of the equilibrium measure"),
    "mixing": (cmd_mixing, "correlation decay under the equilibrium measure"),
    "mc-degree": (cmd_mc_degree, "Monte Carlo pullback masses and dynamical degrees"),
    "verify": (cmd_verify, "run the invariant suite for a map"),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    common = _Parser(add_help=False)
    g = common.add_argument_group("map")
    g.add_argument("--zoo", choices=ZOO_NAMES, help="named example map")
    g.add_argument("--map", help="map file (JSON)")
    g.add_argument("--d", type=int, help="degree parameter")
    g.add_argument("--a", help="Jacobian parameter (decimal or fraction)")
    g.add_argument("--coeffs", help="coefficients of p, leading first, comma separated")
    g.add_argument("--k", type=int, help="dimension for power/linear maps")
    g.add_argument("--matrix", help="JSON matrix for the linear map, or 'identity'")
    r = common.add_argument_group("run")
    r.add_argument("--config", help="JSON file with run settings (flags take precedence)")
    r.add_argument("--seed", type=int, help="random seed (default: $BIRAT_SEED or 0)")
    r.add_argument("--depth", type=int, help="Green truncation depth N (default 20)")
    r.add_argument("--res", type=int, help="grid resolution per real axis (default 64)")
    r.add_argument("--box", type=float, help="chart box half-width R (default 3)")
    r.add_argument("--samples", type=int, help="Monte Carlo sample count (default 10000)")
    r.add_argument("--out", help="output directory (default ./birat-out)")
    r.add_argument("--threads", type=int, help="cap on worker threads")
    r.add_argument("--tol", action="append", metavar="NAME=VALUE",
                   help="tolerance override (repeatable)")

    p = _Parser(prog="birat", description="Dynamics of birational maps of projective space.")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    sp = {}
    for name, (_, help_) in COMMANDS.items():
        sp[name] = sub.add_parser(name, parents=[common], help=help_, description=help_)
    for name in ("degrees", "stability", "green", "green-grid", "pullback-converge", "mc-degree"):
        sp[name].add_argument("--direction", choices=("forward", "inverse"), default="forward")
    sp["degrees"].add_argument("--n", type=int, default=5, help="number of iterates")
    sp["stability"].add_argument("--n", type=int, default=6, help="number of iterates")
    sp["check-regular"].add_argument("--regions", help="region config (default: bundled)")
    sp["check-regular"].add_argument("--definition", choices=("one-sided", "two-sided"),
                                     help="conditions on (V, U) only, or on V+-, U+- and both maps")
    sp["check-regular"].add_argument("--s", type=int, default=1, help="regularity index s")
    sp["green"].add_argument("--point", action="append",
                             help="homogeneous coordinates, e.g. '1,0.5j,1' (repeatable); "
                                  "default: --samples FS-uniform points")
    sp["green-grid"].add_argument("--slice", choices=("real", "line"), default="real",
                                  help="real plane (re z1, re z2) or a complex chart line")
    sp["green-grid"].add_argument("--index", type=int, default=0,
                                  help="chart coordinate varied on a complex line")
    sp["green-grid"].add_argument("--base", help="base point of the complex line")
    sp["green-grid"].add_argument("--raw", action="store_true",
                                  help="write G itself instead of G - log||z||")
    sp["pullback-converge"].add_argument("--points", type=int, default=50)
    sp["pullback-converge"].add_argument("--nmin", type=int, default=3)
    sp["pullback-converge"].add_argument("--nmax", type=int, default=8)
    sp["pullback-converge"].add_argument("--ell", help="linear form coefficients (default 1,1,..)")
    for name in ("measure", "invariance", "mixing"):
        sp[name].add_argument("--sigma", type=float, default=1.5,
                              help="Gaussian smoothing of the potentials in cells")
    sp["measure"].add_argument("--regions", help="region config for the support check")
    for name in ("green-grid", "measure"):
        sp[name].add_argument("--png", action="store_true", help="also write a PNG heatmap")
    sp["invariance"].add_argument("--observable", action="append",
                                  choices=("re_z1", "abs_z1_sq", "bump", "constant"))
    sp["mixing"].add_argument("--phi", default="re_z1")
    sp["mixing"].add_argument("--psi", default="re_z1")
    sp["mixing"].add_argument("--nmax", type=int, default=5)
    sp["mc-degree"].add_argument("--p", type=int, default=1, help="bidegree p")
    sp["mc-degree"].add_argument("--nmax", type=int, default=4)
    sp["mc-degree"].add_argument("--n", type=int, help="estimate the single mass of f^n instead")
    sp["mc-degree"].add_argument("--uniform", action="store_true",
                                 help="FS-uniform sampling even when an inverse is known")
    return p


def _apply_threads(n):
    if n is None:
        return
    import numba
    numba.set_num_threads(max(1, min(n, numba.config.NUMBA_NUM_THREADS)))


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    try:
        args = build_parser().parse_args(argv)
        cfg = RunConfig.resolve(args)
        _apply_threads(cfg.threads)
        source = load_source(args)
        run = Run(args.command, cfg, source)
        fn, _ = COMMANDS[args.command]
        try:
            code = fn(args, cfg, run)
        except BiratError as exc:
            run.finish(exc.exit_code)
            raise
        return run.finish(code)
    except BiratError as exc:
        print(json.dumps(exc.report(), default=_jsonable), file=sys.stderr)
        return exc.exit_code
    except MemoryError:
        err = ResourceError("out of memory; lower --res or --samples")
        print(json.dumps(err.report()), file=sys.stderr)
        return err.exit_code
    except OSError as exc:
        err = ParseError(f"file error: {exc}")
        print(json.dumps(err.report()), file=sys.stderr)
        return err.exit_code


if __name__ == "__main__":
    sys.exit(main())
