"""Periodic uniform 2D grid, discrete operators, norms, and the inner linear solve.

Grid functions live on the M x M point set x_j = y_j = a + j h, j = 1..M,
h = (b - a)/M, with periodic wraparound (index 0 aliases M, index M+1
aliases 1).  Internal storage is a 0-based row-major array: ``values[j, k]``
holds the value at (x_(j+1), y_(k+1)).

The constant-coefficient Helmholtz operator c I - d * Lap_h is diagonal in
the discrete Fourier basis, so `solve_helmholtz` is a forward real FFT, a
pointwise division, and an inverse real FFT -- exact up to roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "Grid2D",
    "Field",
    "field_from_function",
    "laplacian",
    "inner",
    "norm_l2",
    "norm_inf",
    "grad_norm_sq",
    "solve_helmholtz",
    "write_snapshot",
    "read_snapshot",
]


@dataclass(frozen=True)
class Grid2D:
    a: float
    b: float
    M: int

    def __post_init__(self):
        if self.M < 2:
            raise ValueError(f"need at least 2 points per dimension, got M={self.M}")
        if not self.b > self.a:
            raise ValueError(f"empty domain [{self.a}, {self.b}]")

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.M

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """Meshgrids X, Y with X[j, k] = a + (j+1) h, Y[j, k] = a + (k+1) h."""
        pts = self.a + self.h * np.arange(1, self.M + 1)
        return np.meshgrid(pts, pts, indexing="ij")


@dataclass
class Field:
    """Real grid function on a Grid2D; ``values[j, k]`` indexed row-major."""

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.M, self.grid.M):
            raise ValueError(
                f"values shape {vals.shape} does not match grid M={self.grid.M}"
            )
        self.values = vals

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())


def field_from_function(grid: Grid2D, fn) -> Field:
    """Sample fn(X, Y) on the grid points."""
    X, Y = grid.coords()
    return Field(grid, np.asarray(fn(X, Y), dtype=float))


def _require_same_grid(u: Field, v: Field) -> None:
    if u.grid != v.grid:
        raise ValueError(f"grid mismatch: {u.grid} vs {v.grid}")


def _lap(values: np.ndarray, h: float) -> np.ndarray:
    return (
        np.roll(values, 1, axis=0)
        + np.roll(values, -1, axis=0)
        + np.roll(values, 1, axis=1)
        + np.roll(values, -1, axis=1)
        - 4.0 * values
    ) / (h * h)


def laplacian(u: Field) -> Field:
    """Five-point periodic Laplacian (delta_x^2 + delta_y^2) u."""
    return Field(u.grid, _lap(u.values, u.grid.h))


def inner(u: Field, v: Field) -> float:
    """Discrete L2 inner product h^2 sum u_jk v_jk."""
    _require_same_grid(u, v)
    return u.grid.h**2 * float(np.vdot(u.values, v.values))


def norm_l2(u: Field) -> float:
    return u.grid.h * float(np.linalg.norm(u.values))


def norm_inf(u: Field) -> float:
    return float(np.abs(u.values).max())


def grad_norm_sq(u: Field) -> float:
    """Discrete Dirichlet energy ||grad_h u||^2 = (-Lap_h u, u).

    Evaluated as the sum of squared forward differences, which is the same
    quantity by periodic summation by parts but nonnegative also in floating
    point.
    """
    dx = np.roll(u.values, -1, axis=0) - u.values
    dy = np.roll(u.values, -1, axis=1) - u.values
    return float(np.vdot(dx, dx) + np.vdot(dy, dy))


@lru_cache(maxsize=8)
def _neg_lap_symbol(M: int, h: float) -> np.ndarray:
    """rfft2 eigenvalues of -Lap_h: (4/h^2)(sin^2(pi j/M) + sin^2(pi k/M))."""
    s = np.sin(np.pi * np.arange(M) / M) ** 2
    sym = (4.0 / (h * h)) * (s[:, None] + s[None, : M // 2 + 1])
    sym.flags.writeable = False
    return sym


def solve_helmholtz(c: float, diffusion: float, rhs: Field) -> Field:
    """Solve (c I - diffusion * Lap_h) u = rhs on the periodic grid.

    ``diffusion`` carries the full coefficient multiplying the Laplacian
    (eps^2/2 in the time stepper).  Exact to roundoff via the real 2D FFT.
    """
    if c <= 0:
        raise ValueError(f"Helmholtz shift must be positive, got c={c}")
    if diffusion < 0:
        raise ValueError(f"diffusion must be nonnegative, got {diffusion}")
    M, h = rhs.grid.M, rhs.grid.h
    rhs_hat = np.fft.rfft2(rhs.values)
    u_hat = rhs_hat / (c + diffusion * _neg_lap_symbol(M, h))
    return Field(rhs.grid, np.fft.irfft2(u_hat, s=(M, M)))


def write_snapshot(path, u: Field, t: float, header: dict | None = None) -> None:
    """Write a field snapshot: '# key = value' comment lines, then 'M a b t',
    then M rows of M values with 17 significant digits."""
    g = u.grid
    lines = []
    for key, val in (header or {}).items():
        lines.append(f"# {key} = {val}")
    lines.append(f"{g.M} {g.a:.17g} {g.b:.17g} {t:.17g}")
    for row in u.values:
        lines.append(" ".join(f"{x:.17g}" for x in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_snapshot(path) -> tuple[Field, float]:
    """Read a snapshot written by `write_snapshot`; comment lines are skipped."""
    with open(path) as fh:
        rows = [ln.strip() for ln in fh if ln.strip() and not ln.startswith("#")]
    if not rows:
        raise ValueError(f"{path}: empty snapshot")
    head = rows[0].split()
    if len(head) != 4:
        raise ValueError(f"{path}: header must be 'M a b t', got {rows[0]!r}")
    M, a, b, t = int(head[0]), float(head[1]), float(head[2]), float(head[3])
    if len(rows) != M + 1:
        raise ValueError(f"{path}: expected {M} data rows, found {len(rows) - 1}")
    values = np.array([[float(x) for x in r.split()] for r in rows[1:]])
    if values.shape != (M, M):
        raise ValueError(f"{path}: data shape {values.shape} does not match M={M}")
    return Field(Grid2D(a, b, M), values), t
