"""Discrete energies and step-by-step structure monitors.

Two functionals are tracked along a trajectory: the plain discrete energy

    E_h^n = (eps^2/2) ||grad_h U^n||^2 + (1/4) ||(U^n)^2 - 1||^2

and the compatible energy, which augments E_h with a fractional-integral
history of squared variational slopes weighted by the vartheta sequence:

    Ec_h^n = E_h^n + (tau^a/2) sum_(s=1..n) vartheta_(n-s) ||V^(s-1/2)||^2.

For exact step solutions the compatible energy is nonincreasing, with the
per-step residual

    Ec^n - Ec^(n-1) + (tau^a/2) vartheta_(n-1) ||V^(n-1/2)||^2 <= 0;

the monitor records that left-hand side.  Inexact inner solves perturb it by
O(fp_tol), so pass/fail checks use the slack 100 * fp_tol * max(1, tau^-a).

The compatible energy and its residual need the uniform-mesh weight algebra,
so on graded meshes only the max norm and E_h are tracked (NaN elsewhere).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .grid import Field, _lap, grad_norm_sq, norm_inf
from .stepper import MeshKind, RunConfig, Trajectory, _fsplit
from .weights import WeightSequence, vartheta_weights

__all__ = [
    "MonitorRecord",
    "MonitorLog",
    "Monitor",
    "MaxPrincipleReport",
    "discrete_energy",
    "variational_slope",
    "compatible_energy",
    "decay_residual",
    "decay_slack",
    "max_principle_check",
    "write_energy_csv",
]


def discrete_energy(u: Field, eps: float) -> float:
    """E_h = (eps^2/2) ||grad_h u||^2 + (1/4) ||u^2 - 1||^2."""
    well = u.values * u.values - 1.0
    bulk = 0.25 * u.grid.h**2 * float(np.vdot(well, well))
    return 0.5 * eps * eps * grad_norm_sq(u) + bulk


def variational_slope(un: Field, unm1: Field, eps: float) -> Field:
    """V^(n-1/2) = eps^2 Lap_h (U^n + U^(n-1))/2 - f^(n-1,n)."""
    if un.grid != unm1.grid:
        raise ValueError("grid mismatch in variational slope")
    mid = 0.5 * (un.values + unm1.values)
    return Field(
        un.grid, eps * eps * _lap(mid, un.grid.h) - _fsplit(un.values, unm1.values)
    )


def _slope_norms_sq(traj: Trajectory, n: int, eps: float) -> np.ndarray:
    """||V^(s-1/2)||^2 for s = 1..n, recomputed from the stored fields."""
    h2 = traj.config.grid.h ** 2
    out = np.empty(n)
    for s in range(1, n + 1):
        v = variational_slope(traj.field(s), traj.field(s - 1), eps)
        out[s - 1] = h2 * float(np.vdot(v.values, v.values))
    return out


def compatible_energy(
    traj: Trajectory, n: int, vartheta: WeightSequence, eps: float
) -> float:
    """Ec_h^n; equals E_h^0 at n = 0.  Requires a uniform mesh."""
    if n < 0 or n > traj.n_done:
        raise ValueError(f"step {n} not available (have {traj.n_done})")
    energy = discrete_energy(traj.field(n), eps)
    if n == 0:
        return energy
    if len(vartheta) < n:
        raise ValueError(f"need {n} vartheta weights, got {len(vartheta)}")
    tau_a = traj.config.mesh.tau ** traj.config.alpha
    slopes = _slope_norms_sq(traj, n, eps)
    return energy + 0.5 * tau_a * float(np.dot(vartheta.values[n - 1 :: -1], slopes))


def decay_residual(
    traj: Trajectory, n: int, vartheta: WeightSequence, eps: float
) -> float:
    """Ec^n - Ec^(n-1) + (tau^a/2) vartheta_(n-1) ||V^(n-1/2)||^2 (<= 0 for exact solves)."""
    if n < 1:
        raise ValueError("decay residual is defined for n >= 1")
    tau_a = traj.config.mesh.tau ** traj.config.alpha
    v = variational_slope(traj.field(n), traj.field(n - 1), eps)
    vsq = traj.config.grid.h ** 2 * float(np.vdot(v.values, v.values))
    return (
        compatible_energy(traj, n, vartheta, eps)
        - compatible_energy(traj, n - 1, vartheta, eps)
        + 0.5 * tau_a * vartheta.values[n - 1] * vsq
    )


def decay_slack(fp_tol: float, tau: float, alpha: float) -> float:
    """Tolerance for decay-residual checks under inexact fixed-point solves."""
    return 100.0 * fp_tol * max(1.0, tau ** (-alpha))


@dataclass
class MonitorRecord:
    n: int
    t: float
    linf: float
    energy: float
    compat_energy: float
    decay_residual: float
    fp_iters: int


@dataclass
class MonitorLog:
    records: list = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def decay_violations(self, slack: float) -> list[int]:
        return [
            r.n
            for r in self.records
            if r.n >= 1 and not math.isnan(r.decay_residual) and r.decay_residual > slack
        ]


class Monitor:
    """Incremental per-step monitor used by the run loop.

    Slopes are cached at step time; the compatible-energy history sum is then
    an O(n) dot per step instead of an O(n) field recomputation.
    """

    def __init__(self, config: RunConfig):
        self.config = config
        self.log = MonitorLog()
        self._slopes: list[float] = []
        self._uniform = config.mesh.kind is MeshKind.UNIFORM and config.mesh.N >= 1
        if self._uniform:
            self._vartheta = vartheta_weights(config.alpha, config.mesh.N).values
            self._tau_a = config.mesh.tau ** config.alpha
        self._prev_compat = math.nan

    def start(self, traj: Trajectory) -> None:
        u0 = traj.field(0)
        energy = discrete_energy(u0, self.config.eps)
        self._prev_compat = energy
        self.log.records.append(
            MonitorRecord(0, 0.0, norm_inf(u0), energy, energy, math.nan, 0)
        )

    def record(self, traj: Trajectory, n: int, fp_iters: int) -> None:
        cfg = self.config
        un, unm1 = traj.field(n), traj.field(n - 1)
        v = variational_slope(un, unm1, cfg.eps)
        vsq = cfg.grid.h ** 2 * float(np.vdot(v.values, v.values))
        self._slopes.append(vsq)
        energy = discrete_energy(un, cfg.eps)
        if self._uniform:
            hist = float(np.dot(self._vartheta[n - 1 :: -1], self._slopes))
            compat = energy + 0.5 * self._tau_a * hist
            residual = (
                compat - self._prev_compat + 0.5 * self._tau_a * self._vartheta[n - 1] * vsq
            )
            self._prev_compat = compat
        else:
            compat = math.nan
            residual = math.nan
        self.log.records.append(
            MonitorRecord(
                n, float(cfg.mesh.nodes[n]), norm_inf(un), energy, compat, residual, fp_iters
            )
        )


@dataclass
class MaxPrincipleReport:
    applicable: bool  # initial data satisfied ||U^0||_inf <= 1
    ok: bool
    first_violation: int  # step index, -1 if none
    worst_linf: float
    tol: float


def max_principle_check(traj: Trajectory, tol: float = 1e-12) -> MaxPrincipleReport:
    """Scan the trajectory for ||U^n||_inf <= 1 + tol; reports, never raises."""
    linf0 = norm_inf(traj.field(0))
    applicable = linf0 <= 1.0 + tol
    worst = linf0
    first = -1
    for n in range(1, traj.n_done + 1):
        linf = norm_inf(traj.field(n))
        worst = max(worst, linf)
        if applicable and first < 0 and linf > 1.0 + tol:
            first = n
    return MaxPrincipleReport(applicable, applicable and first < 0, first, worst, tol)


def write_energy_csv(path, log: MonitorLog, header: dict | None = None) -> None:
    """Write the monitor log: '#' config comments, then one row per step."""
    lines = [f"# {k} = {v}" for k, v in (header or {}).items()]
    lines.append("n,t,linf,E_h,E_c,decay_residual,fp_iters")
    for r in log.records:
        lines.append(
            f"{r.n},{r.t:.17g},{r.linf:.17g},{r.energy:.17g},"
            f"{r.compat_energy:.17g},{r.decay_residual:.17g},{r.fp_iters}"
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
