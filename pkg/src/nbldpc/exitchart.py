"""Message-error-probability EXIT charts for q-ary LDPC ensembles.

Everything here works with the check-message error probability
``1 - Q_out`` rather than ``Q_out`` itself; at the small probabilities the
iteration integral reaches (1e-6 and below) ``1 - Q_out`` would otherwise be
lost to cancellation.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import bdtrc

from .ensemble import DegreeDistribution, rate as design_rate

GRID_SIZE = 4096
MIN_GAP = 1e-9
ITER_CAP = 10_000


class NonConvergentError(ArithmeticError):
    """The chart has (or nearly has) a fixed point between target and start."""

    def __init__(self, msg, fixed_point=None):
        super().__init__(msg)
        self.fixed_point = fixed_point


class DegenerateEnsembleError(ArithmeticError):
    pass


def _check_p(p_in, q):
    p = np.asarray(p_in, dtype=float)
    hi = (q - 1) / q
    if np.any(p < 0) or np.any(p > hi + 1e-15):
        raise ValueError(f"p_in must lie in [0, {hi:g}] for q={q}")
    return np.minimum(p, hi)


def check_error_k(p_in, k: int, q: int):
    """1 - Q_out,k: probability a degree-k check returns a wrong symbol."""
    p = _check_p(p_in, q)
    # (1 - q p/(q-1))^(k-1) - 1 via log1p/expm1; the base is >= 0 on the domain
    with np.errstate(divide="ignore"):
        err = -(q - 1) / q * np.expm1((k - 1) * np.log1p(-q * p / (q - 1)))
    return err if np.ndim(err) else float(err)


def q_out_k(p_in, k: int, q: int):
    """Probability that a degree-k check's outgoing symbol is correct.

    Q = (1 + (q-1) (1 - q p/(q-1))^(k-1)) / q for i.i.d. inputs that are wrong
    with probability p and uniform over the wrong symbols when wrong.
    """
    if k < 2:
        raise ValueError("check degree must be at least 2")
    return 1.0 - check_error_k(p_in, k, q)


def check_error(p_in, rho: dict, q: int):
    """1 - Q_out for an irregular check side."""
    return sum(frac * check_error_k(p_in, k, q) for k, frac in rho.items())


def q_out(p_in, rho: dict, q: int):
    """Mixture sum_k rho_k Q_out,k."""
    return 1.0 - check_error(p_in, rho, q)


_Q2_WARNED = False


def _l0_log_rhs(l0, i, err, q):
    # log of Q^l0 (q-1)^(i-2) / ((1-Q)^(2 l0 + 1 - i) (q-2-Q)^(i-1-l0))
    global _Q2_WARNED
    Q = 1.0 - err
    e3 = i - 1 - l0
    with np.errstate(divide="ignore"):
        out = l0 * np.log(Q) + (i - 2) * math.log(q - 1) - (2 * l0 + 1 - i) * np.log(err)
        if e3 > 0:
            tail = q - 2 - Q
            if q == 2 and not _Q2_WARNED:
                warnings.warn("q=2: (q-2-Q_out) is negative; flip-threshold rule uses |q-2-Q_out|",
                              RuntimeWarning, stacklevel=3)
                _Q2_WARNED = True
            out = out - e3 * np.log(np.abs(tail))
    return out


def select_l0(i: int, p0: float, Q_out, q: int):
    """Smallest l0 > (i-1)/2 satisfying the flip-threshold inequality, else i-1.

    ``Q_out`` may be an array; the result then has the same shape.
    """
    return _select_l0_err(i, p0, 1.0 - np.asarray(Q_out, dtype=float), q)


def _select_l0_err(i, p0, err, q):
    err = np.asarray(err, dtype=float)
    lo = (i - 1) // 2 + 1
    if i == 2 or lo >= i - 1:
        out = np.full(err.shape, i - 1, dtype=np.int64)
        return out if out.ndim else int(out)
    lhs = math.log((1.0 - p0) / p0)
    out = np.full(err.shape, i - 1, dtype=np.int64)
    done = np.zeros(err.shape, dtype=bool)
    for l0 in range(lo, i):
        ok = (_l0_log_rhs(l0, i, err, q) >= lhs) & ~done
        out[ok] = l0
        done |= ok
    return out if out.ndim else int(out)


def _f_i_err(err, i, p0, q):
    # Element chart given the check-message error probability.
    l0 = _select_l0_err(i, p0, err, q)
    # channel wrong and fewer than l0 of the i-1 messages correct
    stay = bdtrc(i - l0 - 1, i - 1, err)
    # channel right but >= l0 messages agree on one particular wrong symbol
    flip = bdtrc(l0 - 1, i - 1, err / (q - 1))
    return p0 * stay + (1.0 - p0) * (q - 1) * flip


def f_i(p_in, i: int, p0: float, rho: dict, q: int):
    """Element EXIT chart of a degree-i variable node."""
    if i < 2:
        raise ValueError("variable degree must be at least 2")
    out = _f_i_err(check_error(p_in, rho, q), i, p0, q)
    return out if np.ndim(out) else float(out)


def f_composite(p_in, dd: DegreeDistribution, p0: float, q: int):
    """sum_i lambda_i f_i(p_in); the check mixture is evaluated once per point."""
    err = check_error(p_in, dd.rho, q)
    out = sum(frac * _f_i_err(err, i, p0, q) for i, frac in dd.lam.items())
    return out if np.ndim(out) else float(out)


def f2_closed(Q_out, p0):
    """Printed small-degree closed form for degree-2 variables."""
    return 1.0 - (2.0 - p0) * Q_out


def f2_expanded(Q_out):
    """Degree-2 element chart obtained by expanding the binomial sums (l0 = 1)."""
    return 1.0 - Q_out


def f3_closed(Q_out, p0, q):
    """Printed small-degree closed form for degree-3 variables."""
    return p0 + (1.0 + p0) / (q - 1) * (1.0 - 2.0 * Q_out + Q_out ** 2) - Q_out ** 2


def f_approx(p_in, p0, lambda2, tau1, rho_tau2):
    """Linearized chart (p0 - 1) + (2 - lambda2 p0)(tau1 + rho_tau2 - 1) p_in.

    Diagnostic only: the slope is the interesting part, the intercept p0 - 1
    is what the printed closed forms produce and is negative.
    """
    return (p0 - 1.0) + approx_slope(p0, lambda2, tau1, rho_tau2) * np.asarray(p_in)


def approx_slope(p0, lambda2, tau1, rho_tau2):
    return (2.0 - lambda2 * p0) * (tau1 + rho_tau2 - 1.0)


# -- charts as callables f(p, p0) -------------------------------------------------

Chart = Callable[[np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class EnsembleChart:
    """Composite chart of an ensemble: ``chart(p, p0)``."""

    dd: DegreeDistribution
    q: int

    def __call__(self, p, p0):
        return f_composite(p, self.dd, p0, self.q)

    @property
    def upper(self) -> float:
        return (self.q - 1) / self.q


@dataclass(frozen=True)
class PolynomialChart:
    """Chart given directly as coefficients of p, p^2, ... (no constant term)."""

    coeffs: tuple

    def __call__(self, p, p0=None):
        p = np.asarray(p, dtype=float)
        out = np.zeros_like(p)
        for c in reversed(self.coeffs):
            out = (out + c) * p
        return out if out.ndim else float(out)

    upper = 1.0


def as_chart(chart_or_dd, q: int | None = None):
    if isinstance(chart_or_dd, DegreeDistribution):
        q = q if q is not None else chart_or_dd.q
        if q is None:
            raise ValueError("field order q is required for an ensemble chart")
        return EnsembleChart(chart_or_dd, q)
    if not callable(chart_or_dd):
        raise TypeError(f"expected a DegreeDistribution or chart callable, got {type(chart_or_dd)!r}")
    return chart_or_dd


def _grid(pt, p0, size=GRID_SIZE):
    edges = np.linspace(math.log(pt), math.log(p0), size + 1)
    mids = 0.5 * (edges[1:] + edges[:-1])
    return np.exp(mids), edges[1] - edges[0]


def convergence_gap(chart, p0, pt, size=GRID_SIZE):
    """min over a log grid on (pt, p0] of (p - f(p))/p, and where it occurs."""
    chart = as_chart(chart)
    p = np.exp(np.linspace(math.log(pt), math.log(p0), size))
    gap = (p - chart(p, p0)) / p
    j = int(np.argmin(gap))
    return float(gap[j]), float(p[j])


def estimate_iterations(chart, p0: float, pt: float, q: int | None = None, grid_size: int = GRID_SIZE) -> float:
    """Iteration count as the integral of dp / (p ln(p / f(p))) from pt to p0.

    Midpoint rule in log p. Raises NonConvergentError when the chart comes
    within a relative gap of 1e-9 of a fixed point on the interval.
    """
    chart = as_chart(chart, q)
    if not 0 < pt < p0:
        raise ValueError(f"need 0 < pt < p0, got pt={pt}, p0={p0}")
    gap, where = convergence_gap(chart, p0, pt, grid_size)
    p, du = _grid(pt, p0, grid_size)
    f = chart(p, p0)
    ratio = p / np.maximum(f, 0.0)
    if gap < MIN_GAP or np.any(ratio <= 1.0 + MIN_GAP):
        raise NonConvergentError(f"chart reaches a fixed point near p={where:.4g}", where)
    with np.errstate(divide="ignore"):
        inv = 1.0 / np.log(ratio)
    return float(np.sum(inv) * du)


def count_iterations_discrete(chart, p0: float, pt: float, q: int | None = None, cap: int = ITER_CAP) -> int:
    """Smallest n with p_n <= pt for p_{n+1} = f(p_n), p_0 = p0."""
    chart = as_chart(chart, q)
    p = float(p0)
    n = 0
    while p > pt:
        if n >= cap:
            raise NonConvergentError(f"p = {p:.4g} after {cap} iterations", p)
        p = float(chart(p, p0))
        n += 1
    return n


def complexity_from_iterations(N: float, R: float, q: int, rho_inv_sum: float) -> float:
    """Decoding operations per information bit, N (1-R) / (R log2 q sum rho_k/k)."""
    return N * (1.0 - R) / (R * math.log2(q) * rho_inv_sum)


def complexity(dd: DegreeDistribution, R0: float | None, q: int, p0: float, pt: float) -> float:
    """Complexity functional at rate ``R0`` (design rate of ``dd`` when None)."""
    R = design_rate(dd) if R0 is None else R0
    N = estimate_iterations(EnsembleChart(dd, q), p0, pt)
    return complexity_from_iterations(N, R, q, dd.rho_inv_sum)


def is_convergent(chart, p0, pt, size=GRID_SIZE) -> bool:
    return convergence_gap(chart, p0, pt, size)[0] >= MIN_GAP


def threshold(chart, q: int | None = None, pt: float = 1e-6, tol: float = 1e-6,
              upper: float | None = None, grid_size: int = 1024) -> float:
    """Largest p0 for which the chart started at p0 decays to pt.

    Bisection on p0; assumes convergence is monotone in p0. Returns the upper
    end of the domain when the chart converges everywhere.
    """
    chart = as_chart(chart, q)
    hi = upper if upper is not None else getattr(chart, "upper", 1.0)
    hi = hi * (1 - 1e-12)
    lo = pt * (1 + 1e-9)
    if not is_convergent(chart, lo * 1.0001, pt, grid_size):
        raise DegenerateEnsembleError("chart does not converge for any p0 above pt")
    if is_convergent(chart, hi, pt, grid_size):
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if is_convergent(chart, mid, pt, grid_size):
            lo = mid
        else:
            hi = mid
    return lo


@dataclass
class ExitEvaluation:
    """Summary of an ensemble chart at one operating point."""

    p0: float
    pt: float
    q: int
    chart: Chart = field(repr=False)
    N_estimate: float
    N_discrete: int
    K: float | None
    threshold: float | None = None

    def f(self, p):
        return self.chart(p, self.p0)


def evaluate(dd_or_chart, p0: float, pt: float, q: int, R0: float | None = None,
             with_threshold: bool = False) -> ExitEvaluation:
    chart = as_chart(dd_or_chart, q)
    N = estimate_iterations(chart, p0, pt)
    Nd = count_iterations_discrete(chart, p0, pt)
    K = None
    if isinstance(chart, EnsembleChart):
        R = design_rate(chart.dd) if R0 is None else R0
        K = complexity_from_iterations(N, R, q, chart.dd.rho_inv_sum)
    th = threshold(chart, pt=pt) if with_threshold else None
    return ExitEvaluation(p0, pt, q, chart, N, Nd, K, th)


def chart_table(chart, p0: float, points=None) -> np.ndarray:
    """(p_in, f(p_in)) pairs on a log grid, for dumping trajectories."""
    chart = as_chart(chart)
    if points is None:
        points = np.logspace(-7, math.log10(p0), 200)
    points = np.asarray(points, dtype=float)
    return np.column_stack([points, chart(points, p0)])


# Reference polynomial charts of five Gallager-b ensembles: (mean dv, mean dc),
# coefficients, estimated and observed iteration counts from 1e-2 down to 1e-6.
ITERATION_REFERENCE = [
    ((2.7, 3.75), (0.62, 4.97, -18.24, 27.53, -23.28, 10.75, -2.09), 21.1, 22),
    ((2.7, 3.6), (0.59, 5.3, -16.25, 23.20, -18.20, 8.01, -1.45), 19.04, 18),
    ((2.65, 3.53), (0.69, 4.71, -14.46, 20.11, -15.53, 6.48, -1.13), 26.67, 26),
    ((2.68, 3.94), (0.70, 5.79, -20.19, 32.23, -28.81, 14.11, -2.93), 28.81, 28),
    ((2.65, 3.68), (0.72, 5.00, -16.32, 24.15, -19.92, 8.95, -1.69), 30.97, 31),
]
