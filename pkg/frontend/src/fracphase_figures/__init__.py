"""Figure rendering for fracphase solver outputs."""

from .formats import (
    GammaSweepSeries,
    MonitorSeries,
    SchemaError,
    Snapshot,
    read_energy_csv,
    read_gamma_sweep_csv,
    read_snapshot,
)
from .render import (
    HEATMAP_LIMITS,
    FigureKind,
    FigureSpec,
    discover_specs,
    render,
)

__version__ = "0.1.0"
