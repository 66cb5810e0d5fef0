"""Time integration of the fully discrete fractional Allen-Cahn scheme.

Three time discretizations share one step structure: a discrete fractional
derivative (convolution over the full history) balanced against a two-level
weighted diffusion term and a convex-split nonlinear term, collocated at the
half-integer node (SFTR-1/2, averaged F-BDF2) or the sigma offset point
(L2-1sigma).  Each step is solved by a fixed-point iteration whose inner
solve is a Fourier-diagonal Helmholtz solve, so one iteration costs
O(M^2 log M).

The iteration lags the cubic and the variable-diagonal part of the nonlinear
term and keeps the constant-coefficient operator implicit.  A nonnegative
relaxation shift kappa (added as kappa*I on the left and kappa*U^(k) on the
right) makes the map a sup-norm contraction even when the lagged term's
Lipschitz constant exceeds the constant shift, which happens for saturated
fields at small alpha or on the large trailing steps of strongly graded
meshes; the converged state is unchanged.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional

import numpy as np

from .grid import Field, Grid2D, solve_helmholtz, _lap
from .weights import (
    WeightSequence,
    fbdf2_weights,
    l21sigma_coefficients,
    l21sigma_offset,
    sftr_weights,
)

__all__ = [
    "MeshKind",
    "TimeMesh",
    "Scheme",
    "RunConfig",
    "Trajectory",
    "StepError",
    "nonlinear_term",
    "step_size_bounds",
    "sftr_history",
    "step_sftr",
    "step_fbdf2",
    "step_l21sigma",
    "run",
]

log = logging.getLogger("fracphase")


class MeshKind(Enum):
    UNIFORM = "uniform"
    GRADED = "graded"


@dataclass(frozen=True)
class TimeMesh:
    kind: MeshKind
    T: float
    N: int
    gamma: float
    nodes: np.ndarray

    @classmethod
    def uniform(cls, T: float, N: int) -> "TimeMesh":
        cls._check(T, N)
        nodes = T * np.arange(N + 1) / max(N, 1)
        nodes.flags.writeable = False
        return cls(MeshKind.UNIFORM, T, N, 1.0, nodes)

    @classmethod
    def graded(cls, T: float, N: int, gamma: float) -> "TimeMesh":
        cls._check(T, N)
        if gamma < 1.0:
            raise ValueError(f"grading exponent must satisfy gamma >= 1, got {gamma}")
        nodes = T * (np.arange(N + 1) / max(N, 1)) ** gamma
        nodes.flags.writeable = False
        return cls(MeshKind.GRADED, T, N, gamma, nodes)

    @staticmethod
    def _check(T: float, N: int) -> None:
        if T <= 0:
            raise ValueError(f"final time must be positive, got {T}")
        if N < 0:
            raise ValueError(f"step count must be nonnegative, got {N}")

    @property
    def tau(self) -> float:
        if self.kind is not MeshKind.UNIFORM:
            raise ValueError("tau is only defined for uniform meshes")
        if self.N == 0:
            raise ValueError("tau is undefined for an empty mesh")
        return self.T / self.N

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)


class Scheme(Enum):
    SFTR_HALF = "sftr"
    FBDF2 = "fbdf2"
    L21SIGMA = "l21sigma"


@dataclass
class RunConfig:
    """Complete specification of one solve."""

    alpha: float
    eps: float
    grid: Grid2D
    mesh: TimeMesh
    scheme: Scheme
    fp_tol: float = 1e-6
    fp_max_iter: int = 100
    source: Optional[Callable] = None  # source(X, Y, t) on coordinate arrays
    seed: Optional[int] = None

    def __post_init__(self):
        if not (0.0 < self.alpha <= 1.0):
            raise ValueError(f"fractional order must lie in (0, 1], got {self.alpha}")
        if self.eps <= 0:
            raise ValueError(f"interface width must be positive, got {self.eps}")
        if self.fp_tol <= 0:
            raise ValueError(f"fixed-point tolerance must be positive, got {self.fp_tol}")
        if self.fp_max_iter < 1:
            raise ValueError("fp_max_iter must be at least 1")
        if self.scheme in (Scheme.SFTR_HALF, Scheme.FBDF2) and self.mesh.kind is not MeshKind.UNIFORM:
            raise ValueError(f"{self.scheme.value} requires a uniform time mesh")


class StepError(RuntimeError):
    """A time step failed; ``reason`` is NON_CONVERGED or NEGATIVE_SHIFT."""

    def __init__(self, reason: str, step: int, detail: str = ""):
        self.reason = reason
        self.step = step
        msg = f"{reason} at step {step}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


@dataclass
class Trajectory:
    """Solution history U^0..U^N plus per-step fixed-point iteration counts.

    The full history is retained because every step's convolution needs it.
    """

    config: RunConfig
    stack: np.ndarray  # (N+1, M, M); rows beyond n_done are unset
    fp_iters: list = field(default_factory=list)
    n_done: int = 0
    monitor: object = None

    @classmethod
    def start(cls, config: RunConfig, u0: Field) -> "Trajectory":
        if u0.grid != config.grid:
            raise ValueError("initial condition grid does not match config grid")
        M = config.grid.M
        stack = np.empty((config.mesh.N + 1, M, M))
        stack[0] = u0.values
        return cls(config, stack)

    def field(self, n: int) -> Field:
        if n > self.n_done:
            raise IndexError(f"step {n} not computed yet (have {self.n_done})")
        return Field(self.config.grid, self.stack[n])

    def __len__(self) -> int:
        return self.n_done + 1


def _fsplit(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Convex-split bulk force: (1/3)a^3 + (1/2)b^2 a + (1/6)b^3 - (a+b)/2.

    Reduces to f(u) = u^3 - u at a = b and satisfies
    (a-b) * fsplit(a,b) - (F(a) - F(b)) = (a-b)^4 / 12 >= 0.
    """
    a2 = a * a
    b2 = b * b
    return a2 * a / 3.0 + 0.5 * b2 * a + b2 * b / 6.0 - 0.5 * (a + b)


def nonlinear_term(un: Field, unm1: Field) -> Field:
    """Two-level convex splitting of f(u) = u^3 - u between U^n and U^(n-1)."""
    if un.grid != unm1.grid:
        raise ValueError("grid mismatch in nonlinear term")
    return Field(un.grid, _fsplit(un.values, unm1.values))


def step_size_bounds(alpha: float, eps: float, h: float) -> tuple[float, float]:
    """Sufficient step-size bounds: (unique solvability, maximum principle).

    Solvability needs tau < 2^(1/a) * 2a/(a+1); the maximum principle
    additionally needs tau below (a h^2/(2 eps^2))^(1/a) * (2a/(a+1))^((a+1)/a).
    Both are sufficient, not necessary, so callers warn rather than error.
    """
    r = 2.0 * alpha / (alpha + 1.0)
    solvability = 2.0 ** (1.0 / alpha) * r
    maxprinc = (alpha * h * h / (2.0 * eps * eps)) ** (1.0 / alpha) * r ** (
        (alpha + 1.0) / alpha
    )
    return solvability, maxprinc


def sftr_history(weights: WeightSequence, traj: Trajectory, n: int) -> Field:
    """Lagged part of the SFTR convolution at step n:
    tau^(-a) * sum_(m=1..n) omega_m (U^(n-m) - U^0)."""
    if n < 1:
        raise ValueError(f"history needs n >= 1, got {n}")
    if n - 1 > traj.n_done:
        raise ValueError(f"insufficient history: step {n} requested, have {traj.n_done}")
    if len(weights) < n + 1:
        raise ValueError(f"need {n + 1} weights, got {len(weights)}")
    tau = traj.config.mesh.tau
    acc = _lagged_convolution(weights.values, traj.stack, n)
    return Field(traj.config.grid, tau ** (-traj.config.alpha) * acc)


def _lagged_convolution(w: np.ndarray, stack: np.ndarray, n: int) -> np.ndarray:
    """sum_(m=1..n) w_m (U^(n-m) - U^0), contracted over the contiguous stack.

    Reversing the short weight vector instead of the field stack keeps the
    tensordot a plain BLAS matvec with no history copy.
    """
    wrev = np.ascontiguousarray(w[1 : n + 1][::-1])  # w_n .. w_1 against U^0 .. U^(n-1)
    acc = np.tensordot(wrev, stack[:n], axes=1)
    acc -= wrev.sum() * stack[0]
    return acc


class _Workspace:
    """Per-run caches: weight arrays, coordinate grids, lagged convolutions."""

    def __init__(self, config: RunConfig):
        self.config = config
        N = config.mesh.N
        alpha = config.alpha
        if config.scheme is Scheme.SFTR_HALF:
            self.w = sftr_weights(alpha, N).values
        elif config.scheme is Scheme.FBDF2:
            self.w = fbdf2_weights(alpha, N).values
            self.prev_conv = None  # full convolution at the previous level
            self.prev_conv_n = -1
        if config.source is not None:
            self.X, self.Y = config.grid.coords()

    def source_at(self, t: float) -> Optional[np.ndarray]:
        if self.config.source is None:
            return None
        return np.asarray(self.config.source(self.X, self.Y, t), dtype=float)


def _iterate(config, c0, diffusion, rhs_const, lag_fn, lag_lipschitz, u_init, n):
    """Shared relaxed Picard loop.

    lag_fn(u) evaluates the lagged nonlinear part; lag_lipschitz(u) bounds its
    derivative over the grid.  The shift kappa = L/2 guarantees a sup-norm
    contraction factor L / (2 c0 + L) < 1 for any c0 > 0.
    """
    grid = config.grid
    u = u_init.copy()
    for k in range(1, config.fp_max_iter + 1):
        kappa = 0.5 * lag_lipschitz(u)
        rhs = rhs_const - lag_fn(u) + kappa * u
        u_next = solve_helmholtz(c0 + kappa, diffusion, Field(grid, rhs)).values
        delta = float(np.abs(u_next - u).max())
        u = u_next
        if delta <= config.fp_tol:
            return u, k
    raise StepError(
        "NON_CONVERGED",
        n,
        f"fixed point above tol {config.fp_tol} after {config.fp_max_iter} iterations",
    )


def _step_sftr(traj: Trajectory, n: int, work: _Workspace) -> tuple[np.ndarray, int]:
    config = traj.config
    tau = config.mesh.tau
    alpha = config.alpha
    w = work.w
    tau_ma = tau ** (-alpha)
    c0 = tau_ma * w[0] - 0.5
    if c0 <= 0:
        raise StepError(
            "NEGATIVE_SHIFT", n, f"tau^(-a)*omega_0 - 1/2 = {c0:.3e} <= 0"
        )
    diffusion = 0.5 * config.eps**2
    b = traj.stack[n - 1]
    b2 = b * b
    hist = _lagged_convolution(w, traj.stack, n)
    rhs_const = (
        tau_ma * (w[0] * traj.stack[0] - hist)
        + diffusion * _lap(b, config.grid.h)
        + 0.5 * b
        - b2 * b / 6.0
    )
    src = work.source_at(config.mesh.nodes[n] - 0.5 * tau)
    if src is not None:
        rhs_const = rhs_const + src

    def lag(u):
        return (u * u) * u / 3.0 + 0.5 * b2 * u

    def lip(u):
        return float((u * u + 0.5 * b2).max())

    return _iterate(config, c0, diffusion, rhs_const, lag, lip, b, n)


def _step_fbdf2(traj: Trajectory, n: int, work: _Workspace) -> tuple[np.ndarray, int]:
    config = traj.config
    tau = config.mesh.tau
    alpha = config.alpha
    w = work.w
    tau_ma = tau ** (-alpha)
    c0 = 0.5 * tau_ma * w[0] - 0.5
    if c0 <= 0:
        raise StepError(
            "NEGATIVE_SHIFT", n, f"tau^(-a)*w0/2 - 1/2 = {c0:.3e} <= 0"
        )
    diffusion = 0.5 * config.eps**2

    def full_conv(m: int) -> np.ndarray:
        # sum_(j=0..m) w_j (U^(m-j) - U^0)
        wrev = np.ascontiguousarray(w[: m + 1][::-1])
        acc = np.tensordot(wrev, traj.stack[: m + 1], axes=1)
        return acc - wrev.sum() * traj.stack[0]

    if getattr(work, "prev_conv_n", -1) == n - 1:
        conv_prev = work.prev_conv
    else:
        conv_prev = full_conv(n - 1)
    b = traj.stack[n - 1]
    b2 = b * b
    # lagged part of the t_n convolution (everything except the w_0 U^n term)
    lag_conv = _lagged_convolution(w, traj.stack, n)
    lag_conv -= w[0] * traj.stack[0]
    rhs_const = (
        -0.5 * tau_ma * (lag_conv + conv_prev)
        + diffusion * _lap(b, config.grid.h)
        + 0.5 * b
        - b2 * b / 6.0
    )
    src = work.source_at(config.mesh.nodes[n] - 0.5 * tau)
    if src is not None:
        rhs_const = rhs_const + src

    def lag(u):
        return (u * u) * u / 3.0 + 0.5 * b2 * u

    def lip(u):
        return float((u * u + 0.5 * b2).max())

    u, iters = _iterate(config, c0, diffusion, rhs_const, lag, lip, b, n)
    # lag_conv already carries the full U^0 correction, so completing the
    # t_n convolution only needs the w_0 U^n term
    work.prev_conv = lag_conv + w[0] * u
    work.prev_conv_n = n
    return u, iters


def _step_l21sigma(traj: Trajectory, n: int, work: _Workspace) -> tuple[np.ndarray, int]:
    config = traj.config
    alpha = config.alpha
    sigma = l21sigma_offset(alpha)
    nodes = config.mesh.nodes
    coeffs = l21sigma_coefficients(nodes, n, alpha)
    a0 = coeffs[0]
    c0 = a0 - sigma
    if c0 <= 0:
        raise StepError("NEGATIVE_SHIFT", n, f"A_0 - sigma = {c0:.3e} <= 0")
    diffusion = sigma * config.eps**2
    b = traj.stack[n - 1]
    if n >= 2:
        # regroup sum_(j=1..n-1) A_j (U^(n-j) - U^(n-j-1)) onto the raw fields
        bcoef = np.zeros(n)
        bcoef[1:n] += coeffs[n - 1 : 0 : -1]
        bcoef[0 : n - 1] -= coeffs[n - 1 : 0 : -1]
        hist = np.tensordot(bcoef, traj.stack[:n], axes=1)
    else:
        hist = np.zeros_like(b)
    b2 = b * b
    rhs_const = (
        a0 * b
        - hist
        + (1.0 - sigma) * config.eps**2 * _lap(b, config.grid.h)
        + (1.0 - sigma) * b
        - b2 * b / 6.0
    )
    src = work.source_at(nodes[n - 1] + sigma * (nodes[n] - nodes[n - 1]))
    if src is not None:
        rhs_const = rhs_const + src
    two_sigma = 2.0 * sigma
    shift = (1.0 - two_sigma) * b

    def lag(u):
        a = two_sigma * u + shift
        return (a * a) * a / 3.0 + 0.5 * b2 * a

    def lip(u):
        a = two_sigma * u + shift
        return float(two_sigma * (a * a + 0.5 * b2).max())

    return _iterate(config, c0, diffusion, rhs_const, lag, lip, b, n)


_STEPPERS = {
    Scheme.SFTR_HALF: _step_sftr,
    Scheme.FBDF2: _step_fbdf2,
    Scheme.L21SIGMA: _step_l21sigma,
}


def step_sftr(traj: Trajectory, n: int) -> Field:
    """One SFTR-1/2 step; returns U^n without mutating the trajectory."""
    _check_step(traj, n, Scheme.SFTR_HALF)
    u, _ = _step_sftr(traj, n, _Workspace(traj.config))
    return Field(traj.config.grid, u)


def step_fbdf2(traj: Trajectory, n: int) -> Field:
    """One averaged F-BDF2 step; returns U^n without mutating the trajectory."""
    _check_step(traj, n, Scheme.FBDF2)
    u, _ = _step_fbdf2(traj, n, _Workspace(traj.config))
    return Field(traj.config.grid, u)


def step_l21sigma(traj: Trajectory, n: int) -> Field:
    """One nonuniform L2-1sigma step; returns U^n without mutating the trajectory."""
    _check_step(traj, n, Scheme.L21SIGMA)
    u, _ = _step_l21sigma(traj, n, _Workspace(traj.config))
    return Field(traj.config.grid, u)


def _check_step(traj: Trajectory, n: int, scheme: Scheme) -> None:
    if traj.config.scheme is not scheme:
        raise ValueError(f"trajectory configured for {traj.config.scheme}, not {scheme}")
    if n < 1 or n > traj.config.mesh.N:
        raise ValueError(f"step index {n} outside 1..{traj.config.mesh.N}")
    if n - 1 > traj.n_done:
        raise ValueError(f"cannot take step {n}: only {traj.n_done} steps available")


def run(config: RunConfig, u0: Field) -> Trajectory:
    """Advance the scheme over the whole mesh, recording the monitor log.

    Warns (does not error) when the largest time step exceeds the sufficient
    solvability or maximum-principle bounds.  Raises StepError with the
    failing step index on NON_CONVERGED or NEGATIVE_SHIFT.
    """
    from .energy import Monitor  # local import to keep module dependencies one-way

    traj = Trajectory.start(config, u0)
    monitor = Monitor(config)
    monitor.start(traj)
    if config.mesh.N == 0:
        traj.monitor = monitor.log
        return traj

    solv, maxp = step_size_bounds(config.alpha, config.eps, config.grid.h)
    tau_max = float(config.mesh.steps.max())
    if tau_max >= solv:
        log.warning(
            "largest step %.3g exceeds the solvability bound %.3g", tau_max, solv
        )
    elif tau_max >= min(solv, maxp):
        log.warning(
            "largest step %.3g exceeds the maximum-principle bound %.3g "
            "(sufficient, not necessary)",
            tau_max,
            maxp,
        )

    work = _Workspace(config)
    stepper = _STEPPERS[config.scheme]
    for n in range(1, config.mesh.N + 1):
        u, iters = stepper(traj, n, work)
        traj.stack[n] = u
        traj.n_done = n
        traj.fp_iters.append(iters)
        monitor.record(traj, n, iters)
    traj.monitor = monitor.log
    return traj
