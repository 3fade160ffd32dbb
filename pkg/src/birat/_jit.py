"""Per-map compiled kernels for Green-function iteration.

For each map a straight-line step function is generated from its term table and
compiled with numba, together with point and grid drivers.  Lifts are rescaled
by powers of two between steps, so the only logarithms taken are for the
initial norm, the final norm and (optionally) the last three increments.

Two shortcuts keep deep iteration cheap without changing the result beyond
rounding:

* coordinates smaller than ``1e-20`` relative to the largest one are flushed to
  zero (denormal arithmetic is very slow);
* once the lift lies on a coordinate axis ``e_q`` with ``F(e_q) = c_q e_q``, every
  remaining increment equals ``log|c_q|`` and the tail of the series is summed in
  closed form.
"""

import hashlib
import importlib.util
import math
import os
import sys
import threading
from fractions import Fraction

import numpy as np

__all__ = ["kernels_for", "fixed_axis_logs"]

_LOCK = threading.Lock()
_CACHE = {}

TINY = 1e-20


def fixed_axis_logs(f):
    """``log|c_q|`` for each axis ``e_q`` mapped to a multiple of itself (else NaN)."""
    k = f.ambient
    out = np.full(k + 1, np.nan)
    for q in range(k + 1):
        e = [Fraction(int(i == q)) for i in range(k + 1)]
        w = [c.eval_exact(e) for c in f.components]
        others = [w[i] for i in range(k + 1) if i != q]
        if w[q] != 0 and all(v == 0 for v in others):
            out[q] = math.log(abs(float(w[q])))
    return out


def _coef_literal(c):
    c = complex(c)
    if c.imag == 0.0:
        return repr(c.real)
    return f"complex({c.real!r}, {c.imag!r})"


def _source(f):
    exps, coefs, comp = f.term_table()
    m = f.ambient + 1
    d = f.degree
    zs = [f"z{q}" for q in range(m)]
    ws = [f"w{q}" for q in range(m)]
    L = []
    L.append("def step(" + ", ".join(zs) + "):")
    maxe = exps.max(axis=0) if len(exps) else np.zeros(m, int)
    for q in range(m):
        if maxe[q] >= 1:
            L.append(f"    p{q}_1 = z{q}")
        for e in range(2, int(maxe[q]) + 1):
            L.append(f"    p{q}_{e} = p{q}_{e - 1} * z{q}")
    acc = {c: [] for c in range(m)}
    for t in range(len(coefs)):
        fac = [_coef_literal(coefs[t])] + [f"p{q}_{exps[t, q]}" for q in range(m) if exps[t, q]]
        acc[int(comp[t])].append(" * ".join(fac))
    for c in range(m):
        L.append(f"    w{c} = " + (" + ".join(acc[c]) if acc[c] else "0j") + " + 0j")
    L.append("    return " + ", ".join(ws))
    L.append("")

    def maxabs(names):
        parts = []
        for n in names:
            parts += [f"abs({n}.real)", f"abs({n}.imag)"]
        return "max(" + ", ".join(parts) + ")"

    def sq(names):
        return " + ".join(f"({n}.real * {n}.real + {n}.imag * {n}.imag)" for n in names)

    def sqmax(names):
        return "max(" + ", ".join(f"{n}.real * {n}.real + {n}.imag * {n}.imag" for n in names) + ")"

    # point kernel: returns value, bound, depth used, escaped flag
    L.append("def point(" + ", ".join(zs) + ", depth, eps2, fixed, want_bound):")
    L.append(f"    s = {sq(zs)}")
    L.append("    lognz = 0.5 * math.log(s)")
    L.append(f"    mx = {maxabs(zs)}")
    L.append("    e = math.frexp(mx)[1]")
    L.append("    sc = math.ldexp(1.0, -e)")
    for z in zs:
        L.append(f"    {z} = {z} * sc")
    L.append("    logc0 = -e * LOG2 + lognz")
    L.append("    E = 0.0")
    L.append("    wt = 1.0")
    L.append("    tail = 0.0")
    L.append("    wb = -1.0")
    L.append("    i1 = 0.0")
    L.append("    i2 = 0.0")
    L.append("    i3 = 0.0")
    L.append("    bound = 0.0")
    L.append("    escaped = False")
    L.append("    j = 0")
    L.append("    while j < depth:")
    L.append("        " + ", ".join(ws) + " = step(" + ", ".join(zs) + ")")
    L.append(f"        szm = {sqmax(zs)}")
    L.append(f"        swm = {sqmax(ws)}")
    L.append(f"        if not (swm >= eps2 * szm ** {d}):")
    L.append("            escaped = True")
    L.append("            break")
    L.append("        if want_bound and j >= depth - 3:")
    L.append(f"            inc = 0.5 * math.log({sq(ws)}) - {0.5 * d!r} * math.log({sq(zs)})")
    L.append("            i1 = i2")
    L.append("            i2 = i3")
    L.append("            i3 = abs(inc)")
    L.append(f"        mx = {maxabs(ws)}")
    L.append("        ej = math.frexp(mx)[1]")
    L.append("        sc = math.ldexp(1.0, -ej)")
    L.append("        nzc = 0")
    L.append("        q = -1")
    for c in range(m):
        L.append(f"        z{c} = w{c} * sc")
        L.append(f"        if abs(z{c}.real) < TINY and abs(z{c}.imag) < TINY:")
        L.append(f"            z{c} = 0j")
        L.append("        else:")
        L.append("            nzc += 1")
        L.append(f"            q = {c}")
    L.append(f"        wt = wt / {float(d)!r}")
    L.append("        E += wt * ej")
    L.append("        j += 1")
    L.append("        if nzc == 1 and j < depth:")
    L.append("            c = fixed[q]")
    L.append("            if c == c:")
    L.append("                rem = depth - j")
    L.append(f"                tail = c * wt * (1.0 - {float(d)!r} ** (-rem)) / {float(d - 1)!r}")
    L.append(f"                wb = wt * {float(d)!r} ** (-rem)")
    L.append("                i1 = abs(c)")
    L.append("                i2 = abs(c)")
    L.append("                i3 = abs(c)")
    L.append("                j = depth")
    L.append("                break")
    L.append(f"    ln = 0.5 * math.log({sq(zs)})")
    L.append("    value = lognz + wt * ln + E * LOG2 - logc0 + tail")
    L.append("    if wb < 0.0:")
    L.append("        wb = wt")
    L.append("    if escaped:")
    L.append("        bound = math.inf")
    L.append("    elif want_bound and depth > 0:")
    L.append(f"        bound = wb * {d / (d - 1)!r} * max(i1, max(i2, i3))")
    L.append("    return value, bound, j, escaped")
    L.append("")

    # batch driver over an (n, m) array of lifts
    L.append("def eval_lifts(Z, depth, eps2, fixed, out, bound, used, esc):")
    L.append("    for i in range(Z.shape[0]):")
    L.append("        v, b, u, x = point(" + ", ".join(f"Z[i, {q}]" for q in range(m))
             + ", depth, eps2, fixed, True)")
    L.append("        out[i] = v")
    L.append("        bound[i] = b")
    L.append("        used[i] = u")
    L.append("        esc[i] = x")
    L.append("")

    if m == 3:
        # chart slab driver: lift has 1 at position `chart`, chart coords fill the others
        L.append("def eval_slab(x0, a1, a2, a3, n1, chart, depth, eps2, fixed, out):")
        L.append("    for j1 in range(n1):")
        L.append("        for j2 in range(a2.shape[0]):")
        L.append("            for j3 in range(a3.shape[0]):")
        L.append("                u = complex(x0, a1[j1])")
        L.append("                v = complex(a2[j2], a3[j3])")
        L.append("                if chart == 0:")
        L.append("                    g, b, n, x = point(1.0 + 0j, u, v, depth, eps2, fixed, False)")
        L.append("                elif chart == 1:")
        L.append("                    g, b, n, x = point(u, 1.0 + 0j, v, depth, eps2, fixed, False)")
        L.append("                else:")
        L.append("                    g, b, n, x = point(u, v, 1.0 + 0j, depth, eps2, fixed, False)")
        L.append("                out[j1, j2, j3] = math.nan if x else g")
        L.append("")
    return "\n".join(L)


class _Kernels:
    __slots__ = ("eval_lifts", "eval_slab", "fixed", "source")


def _cache_dir():
    root = os.environ.get("BIRAT_KERNEL_CACHE") or os.path.join(
        os.environ.get("XDG_CACHE_HOME") or os.path.expanduser("~/.cache"), "birat", "kernels")
    try:
        os.makedirs(root, exist_ok=True)
        return root if os.access(root, os.W_OK) else None
    except OSError:
        return None


_HEADER = """import math
import numba
import numpy as np

LOG2 = math.log(2.0)
TINY = {tiny!r}

"""


def _module_source(src):
    out = [_HEADER.format(tiny=TINY)]
    for block in src.split("\n\n"):
        block = block.strip("\n")
        if not block:
            continue
        if block.startswith("def step("):
            out.append("@numba.njit(inline='always', cache=True)\n" + block + "\n\n")
        else:
            out.append("@numba.njit(cache=True, error_model='numpy')\n" + block + "\n\n")
    return "".join(out)


def _load(src, label):
    """Import the generated kernels, from an on-disk module when a cache directory is usable."""
    modsrc = _module_source(src)
    root = _cache_dir()
    if root is not None:
        key = hashlib.sha256(modsrc.encode()).hexdigest()[:20]
        path = os.path.join(root, f"k_{key}.py")
        if not os.path.exists(path):
            tmp = f"{path}.{os.getpid()}.tmp"
            with open(tmp, "w") as fh:
                fh.write(modsrc)
            os.replace(tmp, path)
        spec = importlib.util.spec_from_file_location(f"birat_kernel_{key}", path)
        mod = importlib.util.module_from_spec(spec)
        sys.modules[spec.name] = mod
        spec.loader.exec_module(mod)
        return vars(mod)
    ns = {}
    exec(compile(modsrc, f"<birat kernel {label}>", "exec"), ns)
    return ns


def kernels_for(f):
    """Compiled kernels for ``f`` (cached per map; compilation happens once per process,
    and numba's on-disk cache makes later processes cheap)."""
    with _LOCK:
        ker = _CACHE.get(f)
        if ker is not None:
            return ker
        src = _source(f)
        ns = _load(src, f.name)
        ker = _Kernels()
        ker.eval_lifts = ns["eval_lifts"]
        ker.eval_slab = ns.get("eval_slab")
        ker.fixed = fixed_axis_logs(f)
        ker.source = src
        _CACHE[f] = ker
        return ker
