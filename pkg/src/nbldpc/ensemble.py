"""Edge-perspective degree distributions and their integer realizations."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAX_DEGREE = 64
NORM_SLACK = 1e-4


class EnsembleError(ValueError):
    pass


class NonPositiveRateError(EnsembleError):
    pass


class RoundingError(EnsembleError):
    pass


def _clean(coeffs, side: str) -> dict[int, float]:
    out = {}
    for deg, frac in dict(coeffs).items():
        deg = int(deg)
        frac = float(frac)
        if not 2 <= deg <= MAX_DEGREE:
            raise EnsembleError(f"{side} degree {deg} outside [2, {MAX_DEGREE}]")
        if frac < 0 or not math.isfinite(frac):
            raise EnsembleError(f"{side}_{deg} = {frac} is not a nonnegative fraction")
        if frac > 0:
            out[deg] = out.get(deg, 0.0) + frac
    total = sum(out.values())
    if abs(total - 1.0) > NORM_SLACK:
        raise EnsembleError(f"{side} fractions sum to {total:.6g}, expected 1")
    # rescale visible slack only, so already-normalized values round-trip exactly
    if abs(total - 1.0) > 1e-12:
        out = {d: v / total for d, v in out.items()}
    return dict(sorted(out.items()))


@dataclass(frozen=True)
class DegreeDistribution:
    """lambda[i] / rho[k]: fraction of edges on degree-i variables / degree-k checks.

    Coefficients within 1e-4 of summing to one are renormalized (beyond 1e-12); zero entries
    are dropped. ``q`` is optional metadata carried by the text format.
    """

    lam: dict
    rho: dict
    q: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "lam", _clean(self.lam, "lambda"))
        object.__setattr__(self, "rho", _clean(self.rho, "rho"))

    @classmethod
    def regular(cls, dv: int, dc: int, q: int | None = None) -> DegreeDistribution:
        return cls({dv: 1.0}, {dc: 1.0}, q)

    @property
    def lam_inv_sum(self) -> float:
        """Sum of lambda_i / i (number of variables per edge)."""
        return sum(v / d for d, v in self.lam.items())

    @property
    def rho_inv_sum(self) -> float:
        return sum(v / d for d, v in self.rho.items())

    def rate(self) -> float:
        return rate(self)

    def mean_degrees(self) -> tuple[float, float]:
        return mean_degrees(self)

    def with_q(self, q: int | None) -> DegreeDistribution:
        return DegreeDistribution(self.lam, self.rho, q)

    def __eq__(self, other):
        if not isinstance(other, DegreeDistribution):
            return NotImplemented
        return self.lam == other.lam and self.rho == other.rho and self.q == other.q

    def __hash__(self):
        return hash((tuple(self.lam.items()), tuple(self.rho.items()), self.q))


def rate(dd: DegreeDistribution) -> float:
    """Design rate 1 - (sum rho_k/k) / (sum lambda_i/i)."""
    r = 1.0 - dd.rho_inv_sum / dd.lam_inv_sum
    if r <= 0:
        raise NonPositiveRateError(f"design rate {r:.6g} is not positive")
    return r


def mean_degrees(dd: DegreeDistribution) -> tuple[float, float]:
    """Node-perspective mean variable and check degrees."""
    return 1.0 / dd.lam_inv_sum, 1.0 / dd.rho_inv_sum


def _largest_remainder(weights: np.ndarray, total: int) -> np.ndarray:
    target = weights / weights.sum() * total
    base = np.floor(target).astype(np.int64)
    short = total - int(base.sum())
    # stable order: biggest remainder first, lower index on ties
    order = sorted(range(len(target)), key=lambda j: (-(target[j] - base[j]), j))
    for j in order[:short]:
        base[j] += 1
    return base


def _edge_dev(degs: np.ndarray, counts: np.ndarray, fracs: np.ndarray) -> float:
    e = float((degs * counts).sum())
    if e == 0:
        return math.inf
    return float(np.max(np.abs(degs * counts / e - fracs)))


def _solve_checks(degs, fracs, n_edges):
    """Check counts with exactly ``n_edges`` edges minimizing the inf-norm deviation.

    All buckets but the highest-degree one are searched in a window around
    their real-valued targets; the highest-degree bucket takes the remainder.
    """
    target = fracs * n_edges / degs
    top = len(degs) - 1
    span = int(degs.max())
    ranges = [range(max(0, int(np.floor(t)) - span), int(np.ceil(t)) + span + 1) for t in target[:top]]
    best_dev, best = math.inf, None
    for combo in itertools.product(*ranges):
        rest = n_edges - int(np.dot(degs[:top], combo)) if top else n_edges
        if rest < 0 or rest % degs[top]:
            continue
        counts = np.array(list(combo) + [rest // degs[top]], dtype=np.int64)
        if counts.sum() == 0:
            continue
        dev = _edge_dev(degs, counts, fracs)
        if dev < best_dev - 1e-15:
            best_dev, best = dev, counts
    return best, best_dev


def _polish_variables(degs, counts, fracs, score, window=3, max_sweeps=50):
    # coordinate descent on ``score``; the largest bucket absorbs the node-count constraint
    counts = counts.copy()
    total = int(counts.sum())
    sink = int(np.argmax(counts))
    best = score(counts)
    for _ in range(max_sweeps):
        improved = False
        for j in range(len(degs)):
            if j == sink:
                continue
            start = counts[j]
            for c in range(max(0, start - window), start + window + 1):
                trial = counts.copy()
                trial[j] = c
                trial[sink] = total - (trial.sum() - trial[sink])
                if trial[sink] < 0:
                    continue
                val = score(trial)
                if val < best - 1e-15:
                    best, counts, improved = val, trial, True
        if not improved:
            break
    return counts


def realize_node_counts(dd: DegreeDistribution, n: int, tol: float | None = None):
    """Integer degree sequences (variables, checks) realizing ``dd`` with ``n`` variables.

    Variable counts start from largest-remainder apportionment of the node
    fractions and are polished by coordinate descent on the worst edge-fraction
    error of both sides; for each candidate edge count the check counts are
    solved exactly. Raises RoundingError when the result misses the requested
    fractions by more than ``tol`` (default 1/n) in the inf-norm.
    """
    if n < 2:
        raise RoundingError(f"need at least 2 variable nodes, got {n}")
    tol = 1.0 / n if tol is None else tol
    vdeg = np.array(list(dd.lam), dtype=np.int64)
    vfrac = np.array(list(dd.lam.values()))
    cdeg = np.array(list(dd.rho), dtype=np.int64)
    cfrac = np.array(list(dd.rho.values()))
    check_cache = {}

    def checks_for(n_edges):
        if n_edges not in check_cache:
            check_cache[n_edges] = _solve_checks(cdeg, cfrac, n_edges)
        return check_cache[n_edges]

    def score(vc):
        return max(_edge_dev(vdeg, vc, vfrac), checks_for(int((vdeg * vc).sum()))[1])

    vcounts = _largest_remainder(vfrac / vdeg, n)
    vcounts = _polish_variables(vdeg, vcounts, vfrac, score)
    n_edges = int((vdeg * vcounts).sum())
    ccounts, cdev = checks_for(n_edges)
    if ccounts is None:
        raise RoundingError(f"no check degree sequence over {list(cdeg)} has exactly {n_edges} edges")
    dev = max(_edge_dev(vdeg, vcounts, vfrac), cdev)
    if dev > tol + 1e-12:
        raise RoundingError(f"best integer realization deviates by {dev:.3g} > {tol:.3g}")
    return np.repeat(vdeg, vcounts), np.repeat(cdeg, ccounts)


def realization_error(dd: DegreeDistribution, var_seq, chk_seq) -> float:
    """Inf-norm distance between requested and realized edge fractions."""
    lf = realized_fractions(var_seq)
    rf = realized_fractions(chk_seq)
    dl = max(abs(lf.get(d, 0.0) - dd.lam.get(d, 0.0)) for d in set(lf) | set(dd.lam))
    dr = max(abs(rf.get(d, 0.0) - dd.rho.get(d, 0.0)) for d in set(rf) | set(dd.rho))
    return max(dl, dr)


def realized_fractions(degree_seq) -> dict[int, float]:
    """Edge-perspective fractions of an integer degree sequence."""
    seq = np.asarray(degree_seq)
    total = seq.sum()
    degs, counts = np.unique(seq, return_counts=True)
    return {int(d): float(d * c / total) for d, c in zip(degs, counts)}


def format_ensemble(dd: DegreeDistribution) -> str:
    lines = []
    if dd.q is not None:
        lines.append(f"q {dd.q}")
    lines += [f"lambda {d} {v!r}" for d, v in dd.lam.items()]
    lines += [f"rho {d} {v!r}" for d, v in dd.rho.items()]
    return "\n".join(lines) + "\n"


def parse_ensemble(text: str) -> DegreeDistribution:
    lam, rho, q = {}, {}, None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "q" and len(parts) == 2:
                q = int(parts[1])
            elif parts[0] in ("lambda", "rho") and len(parts) == 3:
                (lam if parts[0] == "lambda" else rho)[int(parts[1])] = float(parts[2])
            else:
                raise ValueError
        except ValueError:
            raise EnsembleError(f"line {lineno}: cannot parse {raw!r}") from None
    if not lam or not rho:
        raise EnsembleError("ensemble needs at least one lambda and one rho line")
    return DegreeDistribution(lam, rho, q)


def read_ensemble(path) -> DegreeDistribution:
    return parse_ensemble(Path(path).read_text())


def write_ensemble(dd: DegreeDistribution, path) -> None:
    Path(path).write_text(format_ensemble(dd))


# The two 4-ary ensembles compared in the convergence experiment.
THRESHOLD_OPTIMIZED_Q4 = DegreeDistribution(
    {2: 0.249009, 3: 0.200042, 6: 0.02177703, 7: 0.161403, 9: 0.0489424,
     17: 0.0381342, 19: 0.0874772, 20: 0.0154621, 50: 0.177761},
    {8: 0.439929, 9: 0.560007},
    q=4,
)
COMPLEXITY_OPTIMIZED_Q4 = DegreeDistribution(
    {2: 0.5503, 4: 0.0297, 5: 0.1304, 16: 0.2003, 21: 0.0893},
    {4: 0.2998, 5: 0.7002},
    q=4,
)
