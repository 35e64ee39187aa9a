"""Publication-style figures from kscontrol run artifacts.

Four figure kinds, all raster (PNG), all batch:

- ``heatmap``:     state trajectory over (x, t) from ``trajectory.csv``
- ``weights``:     weight-field profiles from ``weights.csv``
- ``decay``:       penalty decay curve from ``decay.csv`` with the fitted
                   log-log slope drawn and annotated
- ``convergence``: fixed-point profile-update history from
                   ``fixedpoint.json``

Rendering is read-only with respect to the inputs and overwrites its
output idempotently.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import EmptyInputError, MissingColumnError

KINDS = ("heatmap", "decay", "weights", "convergence")


@dataclass(frozen=True)
class FigureSpec:
    """One figure: input artifact, kind, output image path."""

    kind: str
    source: Path
    output: Path

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown figure kind {self.kind!r}; expected one of {KINDS}")


@dataclass(frozen=True)
class RenderResult:
    """Where the image went, plus per-kind extras (fitted slope, pixel boxes)."""

    path: Path
    extras: dict = field(default_factory=dict)


def _read_table(path: Path, required: tuple[str, ...]) -> dict[str, np.ndarray]:
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        has_rows = any(line.strip() for line in fh)
    for column in required:
        if column not in header:
            raise MissingColumnError(column, path)
    if not has_rows:
        raise EmptyInputError(f"no data rows in {path}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return {name: data[:, i] for i, name in enumerate(header)}


def _pivot(x: np.ndarray, t: np.ndarray, values: np.ndarray):
    xs, ts = np.unique(x), np.unique(t)
    return xs, ts, values.reshape(xs.size, ts.size)


def _axes_pixel_box(fig, ax) -> tuple[int, int, int, int]:
    """Axes interior in image-array coordinates (row0, row1, col0, col1)."""
    bbox = ax.get_window_extent(fig.canvas.get_renderer())
    height = int(round(fig.bbox.height))
    return (height - int(bbox.y1), height - int(bbox.y0), int(bbox.x0), int(bbox.x1))


def _flatten_roundoff(field2d: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Snap numerically constant fields to one value so autoscale cannot
    stretch solver round-off into full-range color noise."""
    lo, hi = float(np.min(field2d)), float(np.max(field2d))
    scale = max(abs(lo), abs(hi), 1.0)
    if hi - lo <= 1e-9 * scale:
        mid = 0.5 * (lo + hi)
        return np.full_like(field2d, mid), mid - 0.5 * scale, mid + 0.5 * scale
    return field2d, lo, hi


def _render_heatmap(spec: FigureSpec) -> RenderResult:
    cols = _read_table(spec.source, ("x", "t", "y", "z"))
    xs, ts, Y = _pivot(cols["x"], cols["t"], cols["y"])
    _, _, Z = _pivot(cols["x"], cols["t"], cols["z"])
    extent = (ts[0], ts[-1], xs[0], xs[-1])

    fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.6), constrained_layout=True)
    for ax, field2d, label in ((axes[0], Y, "density"), (axes[1], Z, "attractant")):
        shown, vmin, vmax = _flatten_roundoff(field2d)
        im = ax.imshow(shown, origin="lower", aspect="auto", extent=extent,
                       interpolation="nearest", cmap="viridis", vmin=vmin, vmax=vmax)
        ax.set_xlabel("t")
        ax.set_ylabel("x")
        ax.set_title(label)
        fig.colorbar(im, ax=ax)
    fig.canvas.draw()
    boxes = {"density_box": _axes_pixel_box(fig, axes[0]),
             "attractant_box": _axes_pixel_box(fig, axes[1])}
    fig.savefig(spec.output, dpi="figure")
    plt.close(fig)
    return RenderResult(path=spec.output, extras=boxes)


def _render_weights(spec: FigureSpec) -> RenderResult:
    cols = _read_table(spec.source, ("x", "t", "beta", "alpha", "phi_w", "log_e2sa"))
    xs, ts, beta = _pivot(cols["x"], cols["t"], cols["beta"])
    _, _, alpha = _pivot(cols["x"], cols["t"], cols["alpha"])
    _, _, phi_w = _pivot(cols["x"], cols["t"], cols["phi_w"])
    _, _, log_e2sa = _pivot(cols["x"], cols["t"], cols["log_e2sa"])
    k_mid = ts.size // 2

    fig, axes = plt.subplots(2, 2, figsize=(9.0, 6.4), constrained_layout=True)
    axes[0, 0].plot(xs, beta[:, k_mid])
    axes[0, 0].set_title("profile beta(x)")
    axes[0, 1].plot(xs, alpha[:, k_mid])
    axes[0, 1].set_title(f"alpha(x, t={ts[k_mid]:.3g})")
    axes[1, 0].semilogy(xs, phi_w[:, k_mid])
    axes[1, 0].set_title(f"phi(x, t={ts[k_mid]:.3g})")
    # endpoint slices hold -inf exponents; clip for display only
    shown = np.maximum(log_e2sa, np.nanmin(log_e2sa[:, 1:-1]) * 1.5)
    im = axes[1, 1].imshow(shown, origin="lower", aspect="auto",
                           extent=(ts[0], ts[-1], xs[0], xs[-1]),
                           interpolation="nearest", cmap="magma")
    axes[1, 1].set_title("log weight 2 s alpha")
    fig.colorbar(im, ax=axes[1, 1])
    for ax in axes.ravel():
        ax.set_xlabel("t" if ax is axes[1, 1] else "x")
    fig.savefig(spec.output, dpi="figure")
    plt.close(fig)
    return RenderResult(path=spec.output)


def _render_decay(spec: FigureSpec) -> RenderResult:
    cols = _read_table(spec.source, ("epsilon", "terminal_l2"))
    eps, term = cols["epsilon"], cols["terminal_l2"]
    if eps.size < 2:
        raise EmptyInputError(f"decay table in {spec.source} needs at least two rows")
    slope, intercept = np.polyfit(np.log(eps), np.log(term), 1)
    annotation = f"slope = {slope:.2f}"

    fig, ax = plt.subplots(figsize=(5.4, 4.2), constrained_layout=True)
    ax.loglog(eps, term, "o", label="terminal norm")
    ax.loglog(eps, np.exp(intercept) * eps**slope, "--", label=annotation)
    ax.set_xlabel("penalty epsilon")
    ax.set_ylabel("terminal L2 norm")
    ax.legend()
    ax.annotate(annotation, xy=(0.05, 0.9), xycoords="axes fraction")
    fig.savefig(spec.output, dpi="figure")
    plt.close(fig)
    return RenderResult(path=spec.output, extras={"slope": float(slope), "annotation": annotation})


def _render_convergence(spec: FigureSpec) -> RenderResult:
    payload = json.loads(Path(spec.source).read_text())
    if "eta_delta_history" not in payload:
        raise MissingColumnError("eta_delta_history", spec.source)
    history = np.asarray(payload["eta_delta_history"], dtype=float)
    if history.size == 0:
        raise EmptyInputError(f"empty convergence history in {spec.source}")

    fig, ax = plt.subplots(figsize=(5.4, 4.2), constrained_layout=True)
    ax.semilogy(np.arange(1, history.size + 1), history, "o-")
    ax.set_xlabel("outer iteration")
    ax.set_ylabel("profile update (L2 over space-time)")
    ax.set_title("fixed-point convergence")
    fig.savefig(spec.output, dpi="figure")
    plt.close(fig)
    return RenderResult(path=spec.output, extras={"iterations": int(history.size)})


_RENDERERS = {
    "heatmap": _render_heatmap,
    "weights": _render_weights,
    "decay": _render_decay,
    "convergence": _render_convergence,
}


def render(spec: FigureSpec) -> RenderResult:
    """Render one figure spec to its PNG output.

    Raises
    ------
    MissingColumnError
        A required column or JSON key is absent (carries the name).
    EmptyInputError
        The table has no data rows.
    """
    return _RENDERERS[spec.kind](spec)
