"""Complexity-minimizing ensemble search inside a re-centering inf-norm trust region."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .ensemble import MAX_DEGREE, DegreeDistribution, EnsembleError
from .exitchart import (MIN_GAP, DegenerateEnsembleError, EnsembleChart, _grid,
                        complexity_from_iterations, estimate_iterations, f_i, threshold)

EXTRA_DEGREES = (2, 3, 4, 5)
MIN_NEW_MASS = 1e-3
MIN_STEP = 1e-4
REL_STOP = 1e-4
SCAN_P0 = 0.01
E2 = math.e ** 2
RATE_SLACK = 1e-12


class OptimizerError(RuntimeError):
    pass


class InfeasibleStartError(OptimizerError):
    def __init__(self, msg, report=None):
        super().__init__(msg)
        self.report = report


class StalledError(OptimizerError):
    def __init__(self, msg, center=None):
        super().__init__(msg)
        self.center = center


@dataclass(frozen=True)
class PctConfig:
    R0: float = 0.5
    q: int = 4
    p0: float | None = None  # None: 0.95 x threshold of the starting ensemble
    pt: float = 1e-6
    zeta1: float = 0.05
    zeta2: float = 0.05
    max_rounds: int = 50
    grid_size: int = 1024
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.R0 < 1:
            raise ValueError(f"target rate R0={self.R0} must lie in (0, 1)")
        for name in ("zeta1", "zeta2"):
            z = getattr(self, name)
            if not 0 < z <= 0.2:
                raise ValueError(f"{name}={z} must lie in (0, 0.2]")
        if self.q < 2 or self.q & (self.q - 1):
            raise ValueError(f"q={self.q} is not a power of two")
        hi = (self.q - 1) / self.q
        if self.p0 is not None and not 0 < self.pt < self.p0 < hi:
            raise ValueError(f"need 0 < pt < p0 < {hi:.4g}, got pt={self.pt}, p0={self.p0}")
        if not 0 < self.pt < hi:
            raise ValueError(f"pt={self.pt} outside (0, {hi:.4g})")
        if self.max_rounds < 1 or self.grid_size < 16:
            raise ValueError("max_rounds must be >= 1 and grid_size >= 16")

    def with_p0(self, p0: float) -> PctConfig:
        return PctConfig(self.R0, self.q, p0, self.pt, self.zeta1, self.zeta2,
                         self.max_rounds, self.grid_size, self.seed)


@dataclass
class ConstraintReport:
    """Slack per constraint; a constraint holds when its slack is >= 0."""

    slack: dict

    @property
    def ok(self) -> bool:
        return all(v >= -1e-9 for v in self.slack.values())

    def __str__(self):
        return "\n".join(f"{k:>14s} {v:+.6g}" for k, v in self.slack.items())


@dataclass
class PctResult:
    dd: DegreeDistribution
    K: float
    N: float
    rounds_used: int
    constraint_report: ConstraintReport
    trajectory: list = field(default_factory=list)  # (round, K, N, threshold)
    accepted_steps: int = 0
    p0: float = 0.0
    centers: list = field(default_factory=list)  # ensemble after each round, starting point first

    def trajectory_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["round", "K", "N", "threshold"])
        for r, K, N, th in self.trajectory:
            w.writerow([r, repr(K), repr(N), "" if th is None else repr(th)])
        return buf.getvalue()


def _inf_dist(a: dict, b: dict) -> float:
    return max(abs(a.get(d, 0.0) - b.get(d, 0.0)) for d in set(a) | set(b))


def feasible(dd: DegreeDistribution, cfg: PctConfig, center: DegreeDistribution | None = None,
             p0: float | None = None) -> ConstraintReport:
    """Slack of every design constraint for ``dd`` at the operating point of ``cfg``.

    Convergence is required as f(p) < p on a log grid over (pt, p0]; the
    slack reported is the smallest relative gap (p - f(p))/p minus 1e-9.
    """
    p0 = cfg.p0 if p0 is None else p0
    if p0 is None:
        raise ValueError("operating point p0 is not set")
    p, _ = _grid(cfg.pt, p0, cfg.grid_size)
    f = EnsembleChart(dd, cfg.q)(p, p0)
    slack = {
        "convergence": float(np.min((p - f) / p)) - MIN_GAP,
        "rate": dd.lam_inv_sum - dd.rho_inv_sum / (1.0 - cfg.R0),
        "nonneg": min(min(dd.lam.values()), min(dd.rho.values())),
        "normalization": -max(abs(sum(dd.lam.values()) - 1), abs(sum(dd.rho.values()) - 1)) + 1e-12,
    }
    if center is not None:
        slack["trust_lambda"] = cfg.zeta1 - _inf_dist(dd.lam, center.lam)
        slack["trust_rho"] = cfg.zeta2 - _inf_dist(dd.rho, center.rho)
    return ConstraintReport(slack)


class _Evaluator:
    """K on a fixed grid; per-degree chart rows are cached per check-side vector."""

    def __init__(self, lam_degs, rho_degs, cfg, p0, objective=None):
        self.lam_degs = np.array(lam_degs)
        self.rho_degs = np.array(rho_degs)
        self.cfg = cfg
        self.p0 = p0
        self.p, self.du = _grid(cfg.pt, p0, cfg.grid_size)
        self.objective = objective
        self._rows = {}

    def dd(self, xl, xr):
        lam = {int(d): float(v) for d, v in zip(self.lam_degs, xl) if v > 0}
        rho = {int(d): float(v) for d, v in zip(self.rho_degs, xr) if v > 0}
        return DegreeDistribution(lam, rho, self.cfg.q)

    def rows(self, xr):
        key = xr.tobytes()
        if key not in self._rows:
            if len(self._rows) > 256:
                self._rows.clear()
            rho = {int(d): float(v) for d, v in zip(self.rho_degs, xr) if v > 0}
            self._rows[key] = np.array([f_i(self.p, int(i), self.p0, rho, self.cfg.q)
                                        for i in self.lam_degs])
        return self._rows[key]

    def N_batch(self, XL, xr):
        """Iteration estimates per row of XL; inf where the chart is not open."""
        f = XL @ self.rows(xr)
        gap = np.min((self.p - f) / self.p, axis=1)
        out = np.full(XL.shape[0], math.inf)
        ok = gap >= MIN_GAP
        if ok.any():
            out[ok] = np.sum(1.0 / np.log(self.p / f[ok]), axis=1) * self.du
        return out

    def N(self, xl, xr):
        return float(self.N_batch(xl[None, :], xr)[0])

    def K_batch(self, XL, xr):
        out = np.full(XL.shape[0], math.inf)
        if xr.min() < -1e-15:
            return out
        rho_inv = float(np.sum(xr / self.rho_degs))
        lam_inv = XL @ (1.0 / self.lam_degs)
        ok = (XL.min(axis=1) >= -1e-15) & (lam_inv >= rho_inv / (1.0 - self.cfg.R0) - RATE_SLACK)
        if not ok.any():
            return out
        N = self.N_batch(XL[ok], xr)
        K = complexity_from_iterations(N, self.cfg.R0, self.cfg.q, rho_inv)
        if self.objective is not None:
            K = np.array([float(self.objective(self.dd(x, xr))) if math.isfinite(n) else math.inf
                          for x, n in zip(XL[ok], N)])
        out[ok] = K
        return out

    def K(self, xl, xr):
        return float(self.K_batch(xl[None, :], xr)[0])


def _pair_moves(x, center, zeta, step):
    # mass transfer of ``step`` from slot i to slot j, clipped to the box and to nonnegativity
    for i in range(len(x)):
        for j in range(len(x)):
            if i == j:
                continue
            s = min(step, x[i], x[i] - (center[i] - zeta), (center[j] + zeta) - x[j])
            if s <= 1e-15:
                continue
            y = x.copy()
            y[i] -= s
            y[j] += s
            yield y


def _rate_repairs(ev, y, xr, cr, zeta):
    # check-side transfers toward higher degree that exactly restore the rate of ``y``
    R0 = ev.cfg.R0
    deficit = float(np.sum(xr / ev.rho_degs)) - (1.0 - R0) * float(np.sum(y / ev.lam_degs))
    if deficit <= 0:
        return
    for a in range(len(xr)):
        for b in range(a + 1, len(xr)):
            t = deficit / (1.0 / ev.rho_degs[a] - 1.0 / ev.rho_degs[b])
            if t > min(xr[a], xr[a] - (cr[a] - zeta), (cr[b] + zeta) - xr[b]) + 1e-15:
                continue
            z = xr.copy()
            z[a] -= t
            z[b] += t
            yield np.maximum(z, 0.0)


def _round(ev, xl, xr, cl, cr, cfg):
    """Steepest descent over pair transfers inside the box around (cl, cr).

    Candidates are a variable-side transfer, a check-side transfer, both, or
    a variable-side transfer with the check-side transfer that restores the
    rate. Returns (xl, xr, K, accepted steps, whether any candidate converged).
    """
    best = ev.K(xl, xr)
    steps = 0
    any_finite = False
    step = max(cfg.zeta1, cfg.zeta2) / 2
    while step >= MIN_STEP:
        lam_moves = list(_pair_moves(xl, cl, cfg.zeta1, step))
        XL = np.array([xl] + lam_moves)
        cand = None

        def consider(K, XL_, yr):
            nonlocal cand, any_finite
            any_finite |= bool(np.isfinite(K).any())
            j = int(np.argmin(K))
            # strict improvement; the earliest candidate wins ties
            if K[j] < best * (1 - 1e-12) and (cand is None or K[j] < cand[0]):
                cand = (float(K[j]), XL_[j], yr)

        for yr in [xr] + list(_pair_moves(xr, cr, cfg.zeta2, step)):
            K = ev.K_batch(XL, yr)
            if yr is xr:
                K[0] = math.inf  # the current point itself
            consider(K, XL, yr)
        for y in lam_moves:
            for yr in _rate_repairs(ev, y, xr, cr, cfg.zeta2):
                consider(ev.K_batch(y[None, :], yr), y[None, :], yr)
        if cand is None:
            step /= 2
            continue
        best, xl, xr = cand
        steps += 1
    return xl, xr, best, steps, any_finite


def _prune(ev, xl, xr, keep_l, keep_r, K):
    # degrees outside the starting support keep their mass only above MIN_NEW_MASS
    out = []
    for x, keep in ((xl, keep_l), (xr, keep_r)):
        y = x.copy()
        small = (~keep) & (y > 0) & (y <= MIN_NEW_MASS)
        if small.any():
            y[int(np.argmax(np.where(small, -1, y)))] += y[small].sum()
            y[small] = 0.0
        out.append(y)
    val = ev.K(*out)
    if val <= K:
        return out[0], out[1], val
    return xl, xr, K


def active_degrees(side: dict) -> list:
    """Starting support, the small degrees 2..5, and one degree above the largest."""
    return sorted(set(side) | set(EXTRA_DEGREES) | {min(max(side) + 1, MAX_DEGREE)})


def _threshold_or_none(dd, cfg):
    try:
        return threshold(dd, q=cfg.q, pt=cfg.pt)
    except DegenerateEnsembleError:
        return None


def optimize(init_dd: DegreeDistribution, cfg: PctConfig, objective=None,
             with_thresholds: bool = True) -> PctResult:
    """Lower the complexity functional starting from ``init_dd``.

    Each round runs a steepest pairwise mass-transfer search, halving the
    step from half the radius down to 1e-4, inside the inf-norm box around
    the current center, then re-centers on the best point found. Stops when
    a round improves K by less than 1e-4 relative, or after max_rounds.
    ``objective`` (dd -> float) replaces K for testing; constraints still apply.
    """
    p0 = cfg.p0
    if p0 is None:
        th = _threshold_or_none(init_dd, cfg)
        if th is None:
            raise InfeasibleStartError("starting ensemble has no convergence threshold above pt")
        p0 = 0.95 * th
        cfg = cfg.with_p0(p0)
    report = feasible(init_dd, cfg)
    if not report.ok:
        raise InfeasibleStartError(f"starting ensemble violates the design constraints:\n{report}", report)

    lam_degs = active_degrees(init_dd.lam)
    rho_degs = active_degrees(init_dd.rho)
    ev = _Evaluator(lam_degs, rho_degs, cfg, p0, objective)
    xl = np.array([init_dd.lam.get(d, 0.0) for d in lam_degs])
    xr = np.array([init_dd.rho.get(d, 0.0) for d in rho_degs])
    keep_l = np.isin(lam_degs, list(init_dd.lam))
    keep_r = np.isin(rho_degs, list(init_dd.rho))

    K = ev.K(xl, xr)
    traj = [(0, K, ev.N(xl, xr), _threshold_or_none(init_dd, cfg) if with_thresholds else None)]
    centers = [init_dd]
    total_steps = 0
    rounds = 0
    for rounds in range(1, cfg.max_rounds + 1):
        yl, yr, Kn, steps, any_finite = _round(ev, xl, xr, xl.copy(), xr.copy(), cfg)
        if steps == 0:
            if not any_finite:
                raise StalledError("every candidate step is non-convergent", ev.dd(xl, xr))
            rounds -= 1
            break
        yl, yr, Kn = _prune(ev, yl, yr, keep_l, keep_r, Kn)
        keep_l |= yl > MIN_NEW_MASS
        keep_r |= yr > MIN_NEW_MASS
        total_steps += steps
        rel = (K - Kn) / K
        xl, xr, K = yl, yr, Kn
        dd = ev.dd(xl, xr)
        centers.append(dd)
        traj.append((rounds, K, ev.N(xl, xr), _threshold_or_none(dd, cfg) if with_thresholds else None))
        if rel < REL_STOP:
            break
    dd = ev.dd(xl, xr)
    N = estimate_iterations(EnsembleChart(dd, cfg.q), p0, cfg.pt, grid_size=cfg.grid_size)
    return PctResult(dd, K, N, rounds, feasible(dd, cfg), traj, total_steps, p0, centers)


# -- minimum mean column weight per rate ------------------------------------------

def two_point(mean: float) -> dict:
    """Edge fractions of the two-adjacent-degree ensemble with node-mean ``mean``."""
    lo = math.floor(mean)
    a = lo + 1 - mean  # node fraction at degree lo
    if a >= 1 - 1e-12:
        return {lo: 1.0}
    e_lo = a * lo / mean
    return {lo: e_lo, lo + 1: 1.0 - e_lo}


def scan_ensemble(dv: float, R0: float, q: int | None = None) -> DegreeDistribution:
    """Two-point variable and check ensembles with mean dv and dv/(1-R0)."""
    return DegreeDistribution(two_point(dv), two_point(dv / (1.0 - R0)), q)


def is_valid_design(dd: DegreeDistribution, q: int, p0: float, pt: float, grid_size: int = 1024) -> bool:
    """The chart decays from p0 to pt, and f(p) >= e^2 p fails somewhere on that path."""
    p, _ = _grid(pt, p0, grid_size)
    f = EnsembleChart(dd, q)(p, p0)
    if np.min((p - f) / p) < MIN_GAP:
        return False
    return bool(np.any(f < E2 * p))


def min_valid_dv(R0: float, q: int = 4, cfg: PctConfig | None = None, lo: float = 2.0,
                 hi: float = 5.0, tol: float = 0.01) -> float | None:
    """Smallest mean variable degree at rate R0 whose scan ensemble is a valid design.

    Bisection to ``tol``; returns None when even ``hi`` is not valid. The
    design point is cfg.p0 (default 0.01) down to cfg.pt (default 1e-6).
    """
    if not 0 < R0 < 1:
        raise ValueError(f"rate {R0} outside (0, 1)")
    p0 = SCAN_P0 if cfg is None or cfg.p0 is None else cfg.p0
    pt = 1e-6 if cfg is None else cfg.pt
    grid = 1024 if cfg is None else cfg.grid_size

    def ok(dv):
        try:
            return is_valid_design(scan_ensemble(dv, R0, q), q, p0, pt, grid)
        except EnsembleError:
            return False

    if not ok(hi):
        return None
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return hi


MIN_DV_RATES = (1 / 6, 1 / 5, 1 / 4, 1 / 3, 1 / 2, 2 / 3)
MIN_DV_REFERENCE = (2.37, 2.40, 2.48, 2.56, 2.70, 2.81)
