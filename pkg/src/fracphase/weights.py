"""Convolution-quadrature weight families for fractional time stepping.

Four related sequences are generated here, all tied to the same fractional
order ``alpha``:

* ``sftr`` (omega): weights of the shifted fractional trapezoidal rule with
  shift 1/2, which approximates the Caputo derivative at half-integer nodes.
* ``theta``: coefficients of (1 - xi) / omega(xi).
* ``vartheta``: coefficients of 1 / omega(xi), equal to the prefix sums of
  theta; they discretize the Riemann-Liouville integral.
* ``fbdf2``: fractional BDF2 weights, coefficients of (3/2 - 2 xi + xi^2/2)^alpha.

All recurrences run in O(n) and double precision.  The sign structure of the
omega and theta families (first weight positive, the rest negative, positive
partial sums) is what the energy-decay and maximum-principle arguments of the
solver rest on, so `validate` checks it exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "WeightKind",
    "WeightSequence",
    "ValidationReport",
    "sftr_weights",
    "theta_weights",
    "vartheta_weights",
    "fbdf2_weights",
    "convolve_prefix",
    "validate",
    "caputo_quadrature_error",
    "rl_quadrature_error",
    "l21sigma_offset",
    "l21sigma_coefficients",
]

UNDERFLOW_FLOOR = 1e-300


class WeightKind(Enum):
    SFTR_OMEGA = "sftr"
    THETA = "theta"
    VARTHETA = "vartheta"
    FBDF2 = "fbdf2"


@dataclass(frozen=True)
class WeightSequence:
    """A finite prefix w_0..w_n of one weight family.

    ``values`` is immutable after construction and safe to share between
    concurrent readers.
    """

    alpha: float
    kind: WeightKind
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)


def _check_order_count(alpha: float, n: int) -> None:
    if not (0.0 < alpha <= 1.0):
        raise ValueError(f"fractional order must lie in (0, 1], got {alpha}")
    if n < 0:
        raise ValueError(f"weight count must be nonnegative, got {n}")


def sftr_weights(alpha: float, n: int) -> WeightSequence:
    """Weights omega_0..omega_n of the shift-1/2 fractional trapezoidal rule.

    Starting values omega_0 = (2a/(a+1))^a, omega_1 = -a (2a/(a+1))^(a+1);
    the rest follow from a two-term recurrence.  At alpha = 1 the sequence
    degenerates to (1, -1, 0, ...), i.e. a Crank-Nicolson difference.
    """
    _check_order_count(alpha, n)
    w = np.zeros(n + 1)
    r = 2.0 * alpha / (alpha + 1.0)
    w[0] = r**alpha
    if n >= 1:
        w[1] = -alpha * r ** (alpha + 1.0)
    for m in range(2, n + 1):
        w[m] = (2.0 * alpha / (m * (alpha + 1.0))) * (
            ((m - 1.0) / alpha - alpha) * w[m - 1]
            + ((alpha - 1.0) / (2.0 * alpha)) * (m - 2.0) * w[m - 2]
        )
    return WeightSequence(alpha, WeightKind.SFTR_OMEGA, w)


def theta_weights(alpha: float, n: int) -> WeightSequence:
    """Coefficients theta_0..theta_n of (1 - xi)^(1-a) [1/2 + 1/(2a) + (1/2 - 1/(2a)) xi]^a.

    theta_0 = ((a+1)/(2a))^a = 1/omega_0 and theta_1 = (a-1)(2a+1)/(a+1) theta_0;
    later terms follow the two-term recurrence.  At alpha = 1 the generating
    function is identically 1, so the sequence is (1, 0, 0, ...).
    """
    _check_order_count(alpha, n)
    th = np.zeros(n + 1)
    th[0] = ((alpha + 1.0) / (2.0 * alpha)) ** alpha
    if n >= 1:
        th[1] = (alpha - 1.0) * (2.0 * alpha + 1.0) / (alpha + 1.0) * th[0]
    for m in range(2, n + 1):
        th[m] = (2.0 * alpha / (m * (1.0 + alpha))) * (
            ((m - 1.0) / alpha - (1.0 - alpha) * (2.0 * alpha + 1.0) / (2.0 * alpha))
            * th[m - 1]
            + ((1.0 - alpha) / (2.0 * alpha)) * (3.0 - m) * th[m - 2]
        )
    return WeightSequence(alpha, WeightKind.THETA, th)


def vartheta_weights(alpha: float, n: int) -> WeightSequence:
    """Prefix sums vartheta_m = theta_0 + ... + theta_m, the coefficients of 1/omega(xi).

    Strictly positive, strictly decreasing, with vartheta_m = O(m^(alpha-1));
    these weights discretize the Riemann-Liouville integral of order alpha.
    """
    th = theta_weights(alpha, n)
    return WeightSequence(alpha, WeightKind.VARTHETA, np.cumsum(th.values))


def fbdf2_weights(alpha: float, n: int) -> WeightSequence:
    """Fractional BDF2 weights: power-series coefficients of (3/2 - 2 xi + xi^2/2)^alpha.

    Computed by the standard power-of-a-polynomial recurrence obtained from
    g w' = alpha g' w, one multiply-add pair per weight.
    """
    _check_order_count(alpha, n)
    c0, c1, c2 = 1.5, -2.0, 0.5
    w = np.zeros(n + 1)
    w[0] = c0**alpha
    for m in range(1, n + 1):
        acc = (alpha - (m - 1.0)) * c1 * w[m - 1]
        if m >= 2:
            acc += (2.0 * alpha - (m - 2.0)) * c2 * w[m - 2]
        w[m] = acc / (c0 * m)
    return WeightSequence(alpha, WeightKind.FBDF2, w)


def convolve_prefix(a, b, n: int) -> np.ndarray:
    """First n+1 Cauchy-product coefficients c_m = sum_s a_s b_(m-s).

    ``a`` and ``b`` may be WeightSequence objects (orders must then agree) or
    plain coefficient arrays; both must hold at least n+1 entries.
    """
    if isinstance(a, WeightSequence) and isinstance(b, WeightSequence):
        if a.alpha != b.alpha:
            raise ValueError(f"orders differ: {a.alpha} vs {b.alpha}")
    av = a.values if isinstance(a, WeightSequence) else np.asarray(a, dtype=float)
    bv = b.values if isinstance(b, WeightSequence) else np.asarray(b, dtype=float)
    if len(av) < n + 1 or len(bv) < n + 1:
        raise ValueError(
            f"need at least {n + 1} coefficients, got {len(av)} and {len(bv)}"
        )
    return np.convolve(av[: n + 1], bv[: n + 1])[: n + 1]


@dataclass
class ValidationReport:
    kind: WeightKind
    violations: list[str]
    underflow_count: int

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(seq: WeightSequence) -> ValidationReport:
    """Check the sign/monotonicity/partial-sum structure of a weight family.

    Sign checks use tolerance 0 in double precision.  Entries with magnitude
    below 1e-300 are counted as underflow and excluded from sign checks
    rather than reported as violations.
    """
    w = seq.values
    tiny = np.abs(w) < UNDERFLOW_FLOOR
    live = ~tiny
    bad: list[str] = []

    def report(mask: np.ndarray, offset: int, what: str) -> None:
        for m in np.flatnonzero(mask)[:10]:
            bad.append(f"{what} at index {m + offset}")

    if seq.kind in (WeightKind.SFTR_OMEGA, WeightKind.THETA):
        if not w[0] > 0:
            bad.append("w_0 <= 0")
        report(~(w[1:] < 0) & live[1:], 1, "weight not negative")
        report(~(np.cumsum(w) > 0), 0, "partial sum not positive")
        if seq.kind is WeightKind.SFTR_OMEGA and len(w) > 2:
            report(
                ~(w[2:] > w[1:-1]) & live[2:] & live[1:-1], 2, "weight not increasing"
            )
    elif seq.kind is WeightKind.VARTHETA:
        report(~(w > 0), 0, "weight not positive")
        if len(w) > 1:
            report(~(w[1:] < w[:-1]) & live[1:], 1, "weight not decreasing")
    elif seq.kind is WeightKind.FBDF2:
        if seq.alpha == 1.0:
            expect = np.zeros(len(w))
            expect[:3] = (1.5, -2.0, 0.5)[: len(w)]
            if not np.array_equal(w, expect):
                bad.append("alpha=1 values differ from (3/2, -2, 1/2, 0, ...)")
    return ValidationReport(seq.kind, bad, int(tiny.sum()))


def caputo_quadrature_error(alpha: float, tau: float, t_end: float) -> float:
    """Worst-node error of the SFTR-1/2 rule on the test function phi(t) = t^2.

    Compares tau^(-a) sum omega_m (phi^(n-m) - phi^0) against the analytic
    Caputo derivative 2 t^(2-a) / Gamma(3-a) at t_(n-1/2), maximized over all
    n from 1 to t_end/tau.  The maximum sits at the first node and scales as
    tau^(2-a); errors at fixed positive time scale as tau^2.
    """
    n_steps = _step_count(tau, t_end)
    w = sftr_weights(alpha, n_steps).values
    t = tau * np.arange(n_steps + 1)
    phi = t**2
    err = 0.0
    for n in range(1, n_steps + 1):
        approx = tau ** (-alpha) * np.dot(w[: n + 1], phi[n::-1] - phi[0])
        exact = 2.0 * (t[n] - tau / 2.0) ** (2.0 - alpha) / math.gamma(3.0 - alpha)
        err = max(err, abs(approx - exact))
    return err


def rl_quadrature_error(alpha: float, tau: float, t_end: float) -> float:
    """Worst-node error of the vartheta rule for the fractional integral of t^2.

    Compares tau^a sum vartheta_m phi^(n-m) against the analytic
    Riemann-Liouville integral 2 t^(2+a) / Gamma(3+a) at t_(n+1/2).
    """
    n_steps = _step_count(tau, t_end)
    vth = vartheta_weights(alpha, n_steps).values
    t = tau * np.arange(n_steps + 1)
    phi = t**2
    err = 0.0
    for n in range(1, n_steps + 1):
        approx = tau**alpha * np.dot(vth[: n + 1], phi[n::-1])
        exact = 2.0 * (t[n] + tau / 2.0) ** (2.0 + alpha) / math.gamma(3.0 + alpha)
        err = max(err, abs(approx - exact))
    return err


def _step_count(tau: float, t_end: float) -> int:
    if tau <= 0 or t_end <= 0:
        raise ValueError("tau and t_end must be positive")
    n_steps = round(t_end / tau)
    if abs(n_steps * tau - t_end) > 1e-9 * t_end or n_steps < 1:
        raise ValueError(f"t_end={t_end} is not an integer multiple of tau={tau}")
    return n_steps


def l21sigma_offset(alpha: float) -> float:
    """Intra-step collocation fraction sigma = 1 - alpha/2 of the L2-1sigma rule."""
    _check_order_count(alpha, 0)
    return 1.0 - alpha / 2.0


_SERIES_TERMS = 44
_SERIES_SWITCH = 0.3


def _quad_moment_series(alpha: float) -> np.ndarray:
    """Taylor coefficients of g(x) = (2-x)(1-(1-x)^b)/b - 2(1-(1-x)^(b+1))/(b+1),
    b = 1 - alpha.  The x^1 and x^2 terms cancel identically; the lead term is
    (alpha/6) x^3, which direct evaluation destroys for small x."""
    beta = 1.0 - alpha
    c = np.zeros(_SERIES_TERMS + 1)  # (1-(1-x)^beta)/beta
    d = np.zeros(_SERIES_TERMS + 1)  # (1-(1-x)^(beta+1))/(beta+1)
    c[1] = d[1] = 1.0
    for j in range(1, _SERIES_TERMS):
        c[j + 1] = c[j] * (j - beta) / (j + 1.0)
        d[j + 1] = d[j] * (j - beta - 1.0) / (j + 1.0)
    g = 2.0 * c - 2.0 * d
    g[1:] -= c[:-1]
    g[:3] = 0.0
    return g


def _quad_moment(x: np.ndarray, alpha: float, gcoef: np.ndarray) -> np.ndarray:
    """g(x) evaluated stably: series for small x, expm1 form otherwise."""
    beta = 1.0 - alpha
    out = np.empty_like(x)
    small = x <= _SERIES_SWITCH
    if small.any():
        xs = x[small]
        acc = np.zeros_like(xs)
        for j in range(_SERIES_TERMS, 2, -1):
            acc = (acc + gcoef[j]) * xs
        out[small] = acc * xs * xs
    if (~small).any():
        xl = x[~small]
        lg = np.log1p(-xl)
        one_minus_pow_b = -np.expm1(beta * lg)
        one_minus_pow_b1 = -np.expm1((beta + 1.0) * lg)
        out[~small] = (2.0 - xl) * one_minus_pow_b / beta - 2.0 * one_minus_pow_b1 / (
            beta + 1.0
        )
    return out


def l21sigma_coefficients(nodes: np.ndarray, n: int, alpha: float) -> np.ndarray:
    """Nonuniform L2-1sigma coefficients A_0..A_(n-1) for the n-th step.

    The returned array discretizes the Caputo derivative at the offset point
    t_(n-1) + sigma (t_n - t_(n-1)) as sum_k A_(n-k) (u^k - u^(k-1)); A[j]
    multiplies the backward difference u^(n-j) - u^(n-j-1).  The construction
    integrates the kernel exactly against piecewise-quadratic interpolation on
    past intervals and linear interpolation on the current one, which makes
    the rule exact for quadratic polynomials on arbitrary meshes.

    Kernel moments over far-past intervals are differences of nearly equal
    powers; they are evaluated through expm1/log1p and a small-x series so the
    coefficients stay accurate on strongly graded meshes.
    """
    _check_order_count(alpha, 0)
    nodes = np.asarray(nodes, dtype=float)
    if n < 1 or n >= len(nodes):
        raise ValueError(f"step index {n} outside mesh with {len(nodes)} nodes")
    sigma = l21sigma_offset(alpha)
    tau = np.diff(nodes[: n + 1])
    tc = nodes[n - 1] + sigma * tau[n - 1]
    beta = 1.0 - alpha
    g1 = math.gamma(2.0 - alpha)

    coeffs = np.zeros(n)
    last = (sigma * tau[n - 1]) ** (1.0 - alpha) / (g1 * tau[n - 1])
    if n == 1:
        coeffs[0] = last
        return coeffs
    if alpha == 1.0:
        # limiting kernel is the Dirac mass at tc; past intervals contribute nothing
        coeffs[0] = last
        return coeffs

    r1 = tc - nodes[: n - 1]  # distance to each past interval's left edge
    x = tau[: n - 1] / r1
    # mean_k = (1/tau_k) int omega_(1-a)(tc-s) ds over [t_(k-1), t_k]
    mean = np.power(r1, beta) * (-np.expm1(beta * np.log1p(-x))) / (g1 * tau[: n - 1])
    # quad_k = (1/(tau_k+tau_(k+1))) int omega_(1-a)(tc-s) (2s-t_(k-1)-t_k) ds
    quad = (
        np.power(r1, beta + 1.0)
        * _quad_moment(x, alpha, _quad_moment_series(alpha))
        / (math.gamma(1.0 - alpha) * (tau[: n - 1] + tau[1:n]))
    )

    coeffs[0] = last + quad[n - 2] / tau[n - 1]
    body = mean - quad / tau[: n - 1]
    body[1:] += quad[:-1] / tau[1 : n - 1]
    coeffs[1:] = body[::-1]
    return coeffs
