"""Static PNG heatmaps of potentials and measure marginals (matplotlib, Agg backend)."""

import numpy as np

__all__ = ["heatmap_png"]


def heatmap_png(path, values, extent, xlabel="", ylabel="", title="", log=False, cmap="viridis"):
    """Write a 2-D array as a PNG; the first axis runs along x, NaN cells are left blank."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    v = np.asarray(values, dtype=float)
    if log:
        pos = v[v > 0]
        floor = pos.min() if pos.size else 1.0
        v = np.log10(np.where(v > 0, v, floor))
    fig, ax = plt.subplots(figsize=(5, 4.2), dpi=110)
    im = ax.imshow(v.T, origin="lower", extent=extent, cmap=cmap, aspect="auto",
                   interpolation="nearest")
    fig.colorbar(im, ax=ax, label="log10" if log else "")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path
