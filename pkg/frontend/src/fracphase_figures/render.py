"""Render solver outputs into static figures.

Three figure kinds mirror the experiment battery: a grid of phase-field
heatmaps (rows alpha, columns time, fixed symmetric color scale [-1, 1]),
max-norm and compatible-energy curves, and gamma-sweep error curves on a
log axis with the minimum marked.  Rendering never mutates its inputs and
is deterministic for identical input files.
"""

from __future__ import annotations

import argparse
import re
import sys
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .formats import (
    SchemaError,
    read_energy_csv,
    read_gamma_sweep_csv,
    read_snapshot,
)

HEATMAP_LIMITS = (-1.0, 1.0)
_SNAP_NAME = re.compile(r"snap_alpha(?P<alpha>[0-9.eE+-]+)_t(?P<t>[0-9.eE+-]+)\.dat$")


class FigureKind(Enum):
    SNAPSHOTS_GRID = "snapshots_grid"
    MONITOR_CURVES = "monitor_curves"
    GAMMA_SWEEP = "gamma_sweep"


@dataclass
class FigureSpec:
    kind: FigureKind
    inputs: list = field(default_factory=list)
    output: Path = Path("figure.png")


def _snapshot_key(path) -> tuple[float, float]:
    m = _SNAP_NAME.search(Path(path).name)
    if not m:
        raise SchemaError(path, 0, "snapshot name must match snap_alpha{A}_t{T}.dat")
    return float(m.group("alpha")), float(m.group("t"))


def render_snapshots_grid(paths, output) -> plt.Figure:
    entries = []
    for path in paths:
        alpha, t_name = _snapshot_key(path)
        snap = read_snapshot(path)
        entries.append((alpha, t_name, snap))
    alphas = sorted({e[0] for e in entries})
    times = sorted({e[1] for e in entries})
    by_cell = {(a, t): snap for a, t, snap in entries}
    fig, axes = plt.subplots(
        len(alphas),
        len(times),
        figsize=(3.1 * len(times), 2.8 * len(alphas)),
        squeeze=False,
    )
    image = None
    for i, alpha in enumerate(alphas):
        for j, t in enumerate(times):
            ax = axes[i][j]
            snap = by_cell.get((alpha, t))
            if snap is None:
                ax.set_axis_off()
                continue
            image = ax.imshow(
                snap.values.T,
                origin="lower",
                extent=(snap.a, snap.b, snap.a, snap.b),
                vmin=HEATMAP_LIMITS[0],
                vmax=HEATMAP_LIMITS[1],
                cmap="RdBu_r",
            )
            ax.set_title(f"alpha={alpha:g}, t={t:g}", fontsize=9)
            ax.set_xticks([])
            ax.set_yticks([])
    if image is not None:
        fig.colorbar(image, ax=[ax for row in axes for ax in row], fraction=0.02)
    fig.savefig(output, dpi=150)
    plt.close(fig)
    return fig


def _series_label(header: dict, path) -> str:
    for key in ("alpha", "model.alpha"):
        if key in header:
            return f"alpha={header[key]}"
    return Path(path).stem


def render_monitor_curves(paths, output) -> plt.Figure:
    fig, (ax_norm, ax_energy) = plt.subplots(1, 2, figsize=(9.6, 3.8))
    for path in paths:
        series = read_energy_csv(path)
        label = _series_label(series.header, path)
        ax_norm.plot(series.t, series.linf, label=label)
        keep = ~np.isnan(series.compat_energy)
        ax_energy.plot(series.t[keep], series.compat_energy[keep], label=label)
    ax_norm.axhline(1.0, color="gray", lw=0.8, ls="--")
    ax_norm.set_xlabel("t")
    ax_norm.set_ylabel("max norm")
    ax_energy.set_xlabel("t")
    ax_energy.set_ylabel("compatible energy")
    ax_norm.legend(fontsize=8)
    ax_energy.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(output, dpi=150)
    plt.close(fig)
    return fig


def render_gamma_sweep(paths, output) -> plt.Figure:
    fig, ax = plt.subplots(figsize=(5.4, 4.0))
    for path in paths:
        sweep = read_gamma_sweep_csv(path)
        (line,) = ax.semilogy(
            sweep.gammas, sweep.errors, marker=".", label=f"alpha={sweep.alpha:g}"
        )
        k = int(np.argmin(sweep.errors))
        ax.semilogy(
            [sweep.gammas[k]],
            [sweep.errors[k]],
            marker="*",
            markersize=13,
            linestyle="none",
            color=line.get_color(),
        )
        ax.annotate(
            f"min at {sweep.gammas[k]:.3g}",
            (sweep.gammas[k], sweep.errors[k]),
            textcoords="offset points",
            xytext=(6, 6),
            fontsize=8,
        )
    ax.set_xlabel("grading exponent")
    ax.set_ylabel("final-time L2 error")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(output, dpi=150)
    plt.close(fig)
    return fig


_RENDERERS = {
    FigureKind.SNAPSHOTS_GRID: render_snapshots_grid,
    FigureKind.MONITOR_CURVES: render_monitor_curves,
    FigureKind.GAMMA_SWEEP: render_gamma_sweep,
}


def render(spec: FigureSpec) -> Path:
    """Render one figure; every input must exist and parse."""
    if not spec.inputs:
        raise SchemaError("<spec>", 0, f"no inputs for {spec.kind.value}")
    for path in spec.inputs:
        if not Path(path).exists():
            raise SchemaError(path, 0, "input file does not exist")
    _RENDERERS[spec.kind](sorted(spec.inputs, key=str), spec.output)
    return Path(spec.output)


def discover_specs(out_dir: Path) -> list[FigureSpec]:
    """Map a solver output directory onto the renderable figure kinds."""
    specs = []
    snaps = sorted(out_dir.glob("snap_*.dat"))
    if snaps:
        specs.append(
            FigureSpec(FigureKind.SNAPSHOTS_GRID, snaps, out_dir / "fig_snapshots.png")
        )
    monitors = sorted(out_dir.glob("energy*.csv"))
    if monitors:
        specs.append(
            FigureSpec(FigureKind.MONITOR_CURVES, monitors, out_dir / "fig_monitor.png")
        )
    sweeps = sorted(out_dir.glob("gamma_sweep*.csv"))
    if sweeps:
        specs.append(
            FigureSpec(FigureKind.GAMMA_SWEEP, sweeps, out_dir / "fig_gamma_sweep.png")
        )
    return specs


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render_figures", description="Render fracphase output files into figures"
    )
    parser.add_argument("out_dir", help="directory holding solver outputs")
    args = parser.parse_args(argv)
    out_dir = Path(args.out_dir)
    if not out_dir.is_dir():
        print(f"error: {out_dir} is not a directory", file=sys.stderr)
        return 2
    specs = discover_specs(out_dir)
    if not specs:
        print(f"error: no renderable outputs found in {out_dir}", file=sys.stderr)
        return 1
    try:
        for spec in specs:
            path = render(spec)
            print(f"wrote {path}")
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
