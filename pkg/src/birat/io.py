"""Delimited and image outputs shared by the grid and report writers."""

import csv
import json
import os

import numpy as np

__all__ = ["write_csv", "write_pgm", "read_pgm", "write_json", "PGM_NAN"]

PGM_NAN = 65535          # sentinel for missing cells; finite data spans 0..65534


def write_csv(path, header, rows):
    """Write rows (iterable of sequences, or a 2-D array) with full float precision."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return path


def write_pgm(path, values, label=""):
    """Plain (P2) 16-bit PGM heatmap of a 2-D array; the first axis runs down the image.

    The data range is linearly mapped to 0..65534 and recorded in a comment line;
    NaN cells are written as 65535.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 2:
        raise ValueError("PGM output needs a 2-D array")
    finite = np.isfinite(v)
    lo = float(v[finite].min()) if finite.any() else 0.0
    hi = float(v[finite].max()) if finite.any() else 0.0
    span = hi - lo if hi > lo else 1.0
    q = np.full(v.shape, PGM_NAN, dtype=np.int64)
    q[finite] = np.rint((v[finite] - lo) / span * (PGM_NAN - 1)).astype(np.int64)
    with open(path, "w", encoding="ascii") as fh:
        fh.write("P2\n")
        fh.write(f"# min={lo!r} max={hi!r} nan={PGM_NAN}" + (f" {label}" if label else "") + "\n")
        fh.write(f"{v.shape[1]} {v.shape[0]}\n{PGM_NAN}\n")
        for row in q:
            fh.write(" ".join(map(str, row.tolist())) + "\n")
    return path


def read_pgm(path):
    """Inverse of :func:`write_pgm` up to quantization: returns (values, lo, hi)."""
    lo = hi = None
    tokens = []
    with open(path, encoding="ascii") as fh:
        for line in fh:
            if line.startswith("#"):
                for part in line[1:].split():
                    if part.startswith("min="):
                        lo = float(part[4:])
                    elif part.startswith("max="):
                        hi = float(part[4:])
                continue
            tokens += line.split()
    if tokens[0] != "P2":
        raise ValueError("not a plain PGM file")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    q = np.array(tokens[4:4 + w * h], dtype=np.int64).reshape(h, w)
    span = (hi - lo) if hi > lo else 1.0
    v = lo + q / (maxval - 1) * span
    v[q == maxval] = np.nan
    return v, lo, hi


def write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True, default=_default)
        fh.write("\n")
    return path


def _default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return str(o)
    if isinstance(o, os.PathLike):
        return os.fspath(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")
