"""SVG figure output with byte-deterministic rendering.

Figures are drawn on standalone Figure objects (no pyplot state) and
saved as SVG with a fixed hash salt and no date metadata, so rendering
the same data twice yields identical bytes.
"""

import numpy as np
from matplotlib import rc_context
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.collections import LineCollection
from matplotlib.figure import Figure

from .errors import ContractViolation

__all__ = ["emit_svplot", "emit_biplot"]

LOG_FLOOR = 1e-17

_RC = {"svg.hashsalt": "raidkit"}
_MARKERS = ("o", "s", "^", "d", "v", "*")


def _save(fig, path):
    FigureCanvasSVG(fig)
    with rc_context(_RC):
        fig.savefig(path, format="svg", metadata={"Date": None})


def emit_svplot(spectra, path):
    """Scatter base-10 logarithms of one or more singular value series.

    ``spectra`` maps series name to a nonempty sequence; values are
    plotted as markers against their 1-based index.  Nonpositive values
    cannot be log-scaled and are drawn at the 1e-17 floor, with the
    series legend noting how many were floored.
    """
    if not spectra:
        raise ContractViolation("need at least one spectrum to plot")
    fig = Figure(figsize=(6.4, 4.8))
    ax = fig.add_subplot()
    for pos, (name, values) in enumerate(spectra.items()):
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise ContractViolation(f"spectrum {name!r} must be a nonempty sequence")
        floored = values <= 0.0
        safe = np.where(floored, LOG_FLOOR, values)
        label = name
        if floored.any():
            label = f"{name} ({int(floored.sum())} value(s) at 1e-17 floor)"
        ax.plot(
            np.arange(1, values.size + 1),
            np.log10(safe),
            linestyle="none",
            marker=_MARKERS[pos % len(_MARKERS)],
            markersize=4,
            fillstyle="none",
            label=label,
        )
    ax.set_xlabel("index")
    ax.set_ylabel("log10 of singular value")
    ax.legend(loc="best")
    _save(fig, path)


def emit_biplot(scores, loadings, path):
    """Black dots at score coordinates, gray rays to loading tips.

    Both inputs must be N x 2; axes are equal-aspect so directions are
    not distorted.
    """
    scores = np.asarray(scores, dtype=np.float64)
    loadings = np.asarray(loadings, dtype=np.float64)
    for name, arr in (("scores", scores), ("loadings", loadings)):
        if arr.ndim != 2 or arr.shape[1] != 2:
            raise ContractViolation(
                f"{name} must be an N x 2 coordinate array, got shape {arr.shape}"
            )
        if not np.isfinite(arr).all():
            raise ContractViolation(f"{name} contains non-finite coordinates")
    fig = Figure(figsize=(5.6, 5.6))
    ax = fig.add_subplot()
    segments = np.zeros((loadings.shape[0], 2, 2))
    segments[:, 1, :] = loadings
    ax.add_collection(
        LineCollection(segments, colors="0.6", linewidths=0.8, zorder=1)
    )
    ax.plot(
        scores[:, 0],
        scores[:, 1],
        linestyle="none",
        marker="o",
        color="black",
        markersize=3,
        zorder=2,
    )
    span = max(
        float(np.abs(scores).max(initial=0.0)),
        float(np.abs(loadings).max(initial=0.0)),
        LOG_FLOOR,
    )
    ax.set_xlim(-1.08 * span, 1.08 * span)
    ax.set_ylim(-1.08 * span, 1.08 * span)
    ax.set_aspect("equal")
    ax.set_xlabel("component 1")
    ax.set_ylabel("component 2")
    _save(fig, path)
