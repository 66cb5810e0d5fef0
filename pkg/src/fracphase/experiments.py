"""Reproducible experiments: coarsening run, convergence tables, gamma sweeps.

Four experiments mirror the solver's validation battery:

1. random-initial-condition coarsening with max-norm and energy monitors;
2. manufactured smooth solution (nonzero source) comparing SFTR-1/2 with
   F-BDF2 at halved steps, errors at t = T/2 against the exact solution;
3. the true model (zero source, sine initial data) against a fine SFTR-1/2
   reference, exposing the initial-singularity order reduction of F-BDF2;
4. graded-mesh L2-1sigma versus uniform SFTR-1/2 at matched step counts,
   sweeping the grading exponent over [1, 2/alpha].

Defaults match the paper-scale settings; every entry point takes scale-down
overrides so tests can run the same code paths in seconds.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .energy import MonitorLog, write_energy_csv
from .grid import Field, Grid2D, field_from_function, norm_l2, write_snapshot
from .stepper import RunConfig, Scheme, TimeMesh, run

__all__ = [
    "ConvergenceRow",
    "ConvergenceTable",
    "GammaSweep",
    "random_initial",
    "sine_initial",
    "manufactured_solution",
    "manufactured_source",
    "compute_rates",
    "field_error",
    "run_example1",
    "run_example2",
    "run_example3",
    "run_example4",
    "write_convergence_csv",
    "write_gamma_sweep_csv",
    "Example1Result",
    "Example4Result",
]

log = logging.getLogger("fracphase")

UNIT_SQUARE = (0.0, 1.0)


def random_initial(grid: Grid2D, seed: int | None) -> Field:
    """i.i.d. uniform draws on [-0.25, 0.25); deterministic for a fixed seed."""
    rng = np.random.default_rng(seed)
    return Field(grid, 0.5 * rng.random((grid.M, grid.M)) - 0.25)


def sine_initial(grid: Grid2D) -> Field:
    return field_from_function(
        grid, lambda X, Y: np.sin(2 * np.pi * X) * np.sin(2 * np.pi * Y)
    )


def manufactured_solution(x, y, t):
    """u = (1/4)(1 + t^3) sin(2 pi x) sin(2 pi y)."""
    return 0.25 * (1.0 + t**3) * np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y)


def manufactured_source(x, y, t, alpha: float, eps: float):
    """Source making `manufactured_solution` solve the fractional equation.

    s = d_t^a u - eps^2 Lap u + u^3 - u with the Caputo term evaluated
    analytically: d_t^a (1 + t^3) = 6 t^(3-a) / Gamma(4-a).
    """
    s = np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y)
    u = 0.25 * (1.0 + t**3) * s
    caputo = 0.25 * (6.0 / math.gamma(4.0 - alpha)) * t ** (3.0 - alpha) * s
    return caputo + 8.0 * np.pi**2 * eps * eps * u + u**3 - u


def compute_rates(errors) -> list[float]:
    """rates[i] = log2(errors[i] / errors[i+1]) for successively halved steps."""
    errors = list(errors)
    if any(e <= 0 for e in errors):
        raise ValueError(f"errors must be positive, got {errors}")
    return [math.log2(errors[i] / errors[i + 1]) for i in range(len(errors) - 1)]


def field_error(u: Field, ref: Field) -> float:
    """Discrete L2 norm of u - ref on a shared grid."""
    if u.grid != ref.grid:
        raise ValueError("field_error requires matching grids")
    return norm_l2(Field(u.grid, u.values - ref.values))


@dataclass
class ConvergenceRow:
    alpha: float
    scheme: str
    N: int
    tau_or_gamma: float
    error: float
    rate: float  # NaN for the first row of a block


@dataclass
class ConvergenceTable:
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def block(self, scheme: str, alpha: float | None = None) -> list[ConvergenceRow]:
        return [
            r
            for r in self.rows
            if r.scheme == scheme and (alpha is None or r.alpha == alpha)
        ]

    def add_block(self, alpha, scheme, Ns, taus_or_gammas, errors) -> None:
        rates = compute_rates(errors)
        for i, (N, tg, err) in enumerate(zip(Ns, taus_or_gammas, errors)):
            self.rows.append(
                ConvergenceRow(alpha, scheme, N, tg, err, math.nan if i == 0 else rates[i - 1])
            )


@dataclass
class GammaSweep:
    alpha: float
    N: int
    gammas: np.ndarray
    errors: np.ndarray

    @property
    def argmin_gamma(self) -> float:
        return float(self.gammas[int(np.argmin(self.errors))])

    @property
    def min_error(self) -> float:
        return float(self.errors.min())


@dataclass
class Example1Result:
    alpha: float
    seed: int
    monitor: MonitorLog
    snapshot_paths: list
    energy_csv: Path | None


def config_header(config: RunConfig, extra: dict | None = None) -> dict:
    """Effective-configuration echo written at the top of every data file."""
    head = {
        "alpha": config.alpha,
        "eps": config.eps,
        "M": config.grid.M,
        "a": config.grid.a,
        "b": config.grid.b,
        "T": config.mesh.T,
        "N": config.mesh.N,
        "mesh": config.mesh.kind.value,
        "gamma": config.mesh.gamma,
        "scheme": config.scheme.value,
        "fp_tol": config.fp_tol,
        "fp_max_iter": config.fp_max_iter,
        "seed": config.seed,
    }
    head.update(extra or {})
    return head


def run_example1(
    alpha: float,
    seed: int = 0,
    fast: bool = False,
    out_dir=None,
    M: int | None = None,
    T: float | None = None,
    tau: float = 0.05,
    eps: float = 0.01,
    snapshot_times=(5.0, 10.0, 20.0),
) -> Example1Result:
    """Random-IC coarsening with SFTR-1/2; emits snapshots and energy.csv.

    Paper-scale defaults are M = 200, T = 20; ``fast`` drops them to M = 100,
    T = 5 for desk runs.
    """
    if M is None:
        M = 100 if fast else 200
    if T is None:
        T = 5.0 if fast else 20.0
    grid = Grid2D(*UNIT_SQUARE, M)
    N = round(T / tau)
    config = RunConfig(
        alpha=alpha,
        eps=eps,
        grid=grid,
        mesh=TimeMesh.uniform(T, N),
        scheme=Scheme.SFTR_HALF,
        seed=seed,
    )
    u0 = random_initial(grid, seed)
    traj = run(config, u0)

    snap_paths = []
    energy_path = None
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for t_snap in snapshot_times:
            if t_snap > T + 1e-12:
                continue
            n = round(t_snap / config.mesh.tau)
            path = out_dir / f"snap_alpha{alpha:g}_t{t_snap:g}.dat"
            write_snapshot(path, traj.field(n), t_snap, config_header(config))
            snap_paths.append(path)
        energy_path = out_dir / f"energy_alpha{alpha:g}.csv"
        write_energy_csv(energy_path, traj.monitor, config_header(config))
    return Example1Result(alpha, seed, traj.monitor, snap_paths, energy_path)


def _manufactured_config(alpha, eps, grid, N, scheme) -> RunConfig:
    return RunConfig(
        alpha=alpha,
        eps=eps,
        grid=grid,
        mesh=TimeMesh.uniform(1.0, N),
        scheme=scheme,
        source=lambda X, Y, t: manufactured_source(X, Y, t, alpha, eps),
    )


def run_example2(
    alpha: float,
    M: int = 200,
    Ns=(20, 40, 80, 160),
    eps: float = 0.005,
    schemes=(Scheme.SFTR_HALF, Scheme.FBDF2),
    fp_tol: float = 1e-6,
) -> ConvergenceTable:
    """Manufactured smooth solution on [0,1]: errors at t = T/2 vs the exact u."""
    grid = Grid2D(*UNIT_SQUARE, M)
    table = ConvergenceTable(
        metadata={
            "example": 2,
            "M": M,
            "T": 1.0,
            "eps": eps,
            "fp_tol": fp_tol,
            "reference": "exact solution",
        }
    )
    u0 = field_from_function(grid, lambda X, Y: manufactured_solution(X, Y, 0.0))
    for scheme in schemes:
        errors = []
        for N in Ns:
            config = _manufactured_config(alpha, eps, grid, N, scheme)
            config.fp_tol = fp_tol
            traj = run(config, u0)
            n_half = N // 2
            t_half = config.mesh.nodes[n_half]
            exact = field_from_function(
                grid, lambda X, Y: manufactured_solution(X, Y, t_half)
            )
            errors.append(field_error(traj.field(n_half), exact))
        table.add_block(alpha, scheme.value, Ns, [1.0 / N for N in Ns], errors)
    return table


def run_example3(
    alpha: float,
    M: int = 200,
    Ns=(20, 40, 80, 160),
    N_ref: int = 400,
    eps: float = 0.005,
    schemes=(Scheme.SFTR_HALF, Scheme.FBDF2),
    fp_tol: float = 1e-6,
) -> ConvergenceTable:
    """Zero-source model, sine initial data; SFTR-1/2 fine run as reference.

    Errors are measured at t = T/2, a node shared by every mesh used.
    """
    grid = Grid2D(*UNIT_SQUARE, M)
    u0 = sine_initial(grid)

    def solve(scheme, N):
        config = RunConfig(
            alpha=alpha,
            eps=eps,
            grid=grid,
            mesh=TimeMesh.uniform(1.0, N),
            scheme=scheme,
            fp_tol=fp_tol,
        )
        return run(config, u0)

    ref_traj = solve(Scheme.SFTR_HALF, N_ref)
    ref_half = ref_traj.field(N_ref // 2)
    table = ConvergenceTable(
        metadata={
            "example": 3,
            "M": M,
            "T": 1.0,
            "eps": eps,
            "fp_tol": fp_tol,
            "reference": f"SFTR-1/2 at N={N_ref}",
        }
    )
    for scheme in schemes:
        errors = [field_error(solve(scheme, N).field(N // 2), ref_half) for N in Ns]
        table.add_block(alpha, scheme.value, Ns, [1.0 / N for N in Ns], errors)
    return table


@dataclass
class Example4Result:
    alpha: float
    table: ConvergenceTable  # SFTR, L2-1sigma(uniform), L2-1sigma(min) blocks
    sweeps: dict  # N -> GammaSweep


def default_gamma_grid(alpha: float, count: int = 17) -> np.ndarray:
    return np.linspace(1.0, 2.0 / alpha, count)


def run_example4(
    alpha: float,
    gammas=None,
    Ns=(32, 64, 128),
    N_ref: int = 400,
    M: int = 200,
    eps: float = 0.01,
    fp_tol: float = 1e-6,
) -> Example4Result:
    """Graded-mesh L2-1sigma gamma sweep against uniform SFTR-1/2 baselines.

    Every (gamma) cell is self-referenced: its reference is the same scheme on
    the same grading at N_ref steps, so the measured errors are purely
    temporal.  Errors are final-time L2 distances.
    """
    if gammas is None:
        gammas = default_gamma_grid(alpha)
    gammas = np.asarray(gammas, dtype=float)
    grid = Grid2D(*UNIT_SQUARE, M)
    u0 = sine_initial(grid)
    T = 1.0

    def final_field(scheme, mesh):
        config = RunConfig(
            alpha=alpha, eps=eps, grid=grid, mesh=mesh, scheme=scheme, fp_tol=fp_tol
        )
        traj = run(config, u0)
        return traj.field(mesh.N)

    table = ConvergenceTable(
        metadata={
            "example": 4,
            "M": M,
            "T": T,
            "eps": eps,
            "fp_tol": fp_tol,
            "reference": f"same scheme and grading at N={N_ref}",
        }
    )

    sftr_ref = final_field(Scheme.SFTR_HALF, TimeMesh.uniform(T, N_ref))
    sftr_errors = [
        field_error(final_field(Scheme.SFTR_HALF, TimeMesh.uniform(T, N)), sftr_ref)
        for N in Ns
    ]
    table.add_block(alpha, "sftr", Ns, [float(N) for N in Ns], sftr_errors)

    errs = np.empty((len(gammas), len(Ns)))
    for i, gamma in enumerate(gammas):
        ref = final_field(Scheme.L21SIGMA, TimeMesh.graded(T, N_ref, gamma))
        for j, N in enumerate(Ns):
            u = final_field(Scheme.L21SIGMA, TimeMesh.graded(T, N, gamma))
            errs[i, j] = field_error(u, ref)
        log.info("example4 alpha=%g gamma=%.3f done", alpha, gamma)

    sweeps = {
        N: GammaSweep(alpha, N, gammas.copy(), errs[:, j].copy())
        for j, N in enumerate(Ns)
    }
    i_uniform = int(np.argmin(np.abs(gammas - 1.0)))
    table.add_block(
        alpha, "l21sigma_uniform", Ns, [float(N) for N in Ns], list(errs[i_uniform])
    )
    table.add_block(
        alpha,
        "l21sigma_min",
        Ns,
        [sweeps[N].argmin_gamma for N in Ns],
        [sweeps[N].min_error for N in Ns],
    )
    return Example4Result(alpha, table, sweeps)


def write_convergence_csv(path, table: ConvergenceTable, header: dict | None = None) -> None:
    lines = [f"# {k} = {v}" for k, v in {**table.metadata, **(header or {})}.items()]
    lines.append("alpha,scheme,N,tau_or_gamma,error,rate")
    for r in table.rows:
        lines.append(
            f"{r.alpha:.17g},{r.scheme},{r.N},{r.tau_or_gamma:.17g},"
            f"{r.error:.17g},{r.rate:.17g}"
        )
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_gamma_sweep_csv(path, sweep: GammaSweep, header: dict | None = None) -> None:
    lines = [f"# {k} = {v}" for k, v in (header or {}).items()]
    lines.append(f"# N = {sweep.N}")
    lines.append("alpha,gamma,error")
    for gamma, err in zip(sweep.gammas, sweep.errors):
        lines.append(f"{sweep.alpha:.17g},{gamma:.17g},{err:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
