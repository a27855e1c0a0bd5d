"""Seeded Monte Carlo estimation of BER, WER and iteration counts."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelModel, awgn_llrv, initial_error_prob, qsc_transmit
from .decoders import fft_qspa_decode, flip_thresholds, gallager_b_decode
from .graph import Encoder, ParityCheckMatrix

DECODERS = ("gallager-b", "fft-qspa")
CHANNELS = {"gallager-b": "qsc", "fft-qspa": "awgn"}
Z95 = 1.959963984540054
CSV_COLUMNS = ("param", "ber", "wer", "mean_iters", "trials", "ber_ci", "wer_ci")


class SimConfigError(ValueError):
    pass


@dataclass
class SimConfig:
    """One sweep of a matrix over channel parameters.

    ``sweep`` holds symbol error probabilities for the q-ary symmetric channel
    (hard decoding) or Eb/N0 values in dB for BPSK-AWGN (soft decoding).
    ``rate`` defaults to the design rate 1 - m/n of the matrix.
    """

    matrix: ParityCheckMatrix
    sweep: list
    decoder: str = "fft-qspa"
    max_iter: int = 50
    min_word_errors: int = 50
    max_trials: int = 1_000_000
    seed: int = 0
    all_zero: bool = True
    channel: str | None = None
    rate: float | None = None
    batch_size: int = 64
    workers: int = 1

    def __post_init__(self):
        if self.decoder not in DECODERS:
            raise SimConfigError(f"unknown decoder {self.decoder!r}; choose from {DECODERS}")
        if self.channel is None:
            self.channel = CHANNELS[self.decoder]
        if self.channel != CHANNELS[self.decoder]:
            raise SimConfigError(f"decoder {self.decoder} needs the {CHANNELS[self.decoder]} channel")
        self.sweep = [float(x) for x in self.sweep]
        if not self.sweep:
            raise SimConfigError("sweep is empty")
        if self.max_iter < 1:
            raise SimConfigError("max_iter must be >= 1")
        if self.min_word_errors < 1 or self.max_trials < 1 or self.batch_size < 1 or self.workers < 1:
            raise SimConfigError("stop rule, batch size and workers must be positive")
        if self.rate is None:
            self.rate = 1.0 - self.matrix.m / self.matrix.n
        if not 0 < self.rate <= 1:
            raise SimConfigError(f"rate {self.rate} outside (0, 1]")
        for x in self.sweep:
            ChannelModel(self.channel, x, self.matrix.q, self.rate)

    def channel_model(self, param) -> ChannelModel:
        return ChannelModel(self.channel, param, self.matrix.q, self.rate)

    def echo(self) -> dict:
        H = self.matrix
        return {
            "matrix": f"q={H.q} n={H.n} m={H.m} E={H.E}",
            "decoder": self.decoder, "channel": self.channel, "sweep": self.sweep,
            "max_iter": self.max_iter, "min_word_errors": self.min_word_errors,
            "max_trials": self.max_trials, "seed": self.seed, "all_zero": self.all_zero,
            "rate": self.rate, "batch_size": self.batch_size,
            "ber_denominator": "bit errors over all n*log2(q) code bits" if self.all_zero
            else "bit errors over the k*log2(q) information bits",
        }


@dataclass
class PointResult:
    param: float
    trials: int
    word_errors: int
    bit_errors: int
    bits_per_word: int
    converged: int
    iter_sum: int
    hist: np.ndarray = field(repr=False)  # summed bit errors after each iteration, over all code bits

    @property
    def ber(self) -> float:
        return self.bit_errors / (self.trials * self.bits_per_word)

    @property
    def wer(self) -> float:
        return self.word_errors / self.trials

    @property
    def mean_iters(self) -> float:
        return self.iter_sum / self.converged if self.converged else math.nan

    @property
    def ber_ci(self) -> float:
        return _half_width(self.bit_errors, self.trials * self.bits_per_word)

    @property
    def wer_ci(self) -> float:
        return _half_width(self.word_errors, self.trials)

    def ber_at(self, n_iter: int, code_bits: int) -> float:
        """BER over all code bits had decoding been capped at ``n_iter`` iterations."""
        return float(self.hist[n_iter]) / (self.trials * code_bits)


def _half_width(errors, units):
    # normal approximation; with nothing observed report the rule-of-three bound
    if errors == 0:
        return 3.0 / units
    p = errors / units
    return Z95 * math.sqrt(p * (1 - p) / units)


@dataclass
class SimResult:
    config: SimConfig
    points: list

    def rows(self):
        return [(p.param, p.ber, p.wer, p.mean_iters, p.trials, p.ber_ci, p.wer_ci) for p in self.points]

    def to_csv(self, header: dict | None = None) -> str:
        buf = io.StringIO()
        for k, v in {**self.config.echo(), **(header or {})}.items():
            buf.write(f"# {k}: {v}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for row in self.rows():
            w.writerow([repr(float(x)) if isinstance(x, float) else x for x in row])
        return buf.getvalue()


def trial_rng(seed: int, point: int, trial: int) -> np.random.Generator:
    """Independent stream for one trial, derived from its coordinates alone."""
    return np.random.default_rng(np.random.SeedSequence([seed, point, trial]))


class _Trial:
    """Everything one decode needs that does not change across trials of a point."""

    def __init__(self, cfg: SimConfig, point: int):
        self.cfg = cfg
        self.point = point
        self.ch = cfg.channel_model(cfg.sweep[point])
        H = cfg.matrix
        self.encoder = None if cfg.all_zero else Encoder(H)
        self.flip = flip_thresholds(H, max(initial_error_prob(self.ch), 1e-12)) \
            if cfg.decoder == "gallager-b" else None
        self.p = H.q.bit_length() - 1

    def __call__(self, trial: int):
        cfg, H = self.cfg, self.cfg.matrix
        rng = trial_rng(cfg.seed, self.point, trial)
        if self.encoder is None:
            cw = np.zeros(H.n, dtype=np.int64)
        else:
            cw = self.encoder.encode(rng.integers(0, H.q, size=self.encoder.k))
        if cfg.decoder == "gallager-b":
            r = qsc_transmit(cw, self.ch.param, H.q, rng)
            out = gallager_b_decode(H, r, cfg.max_iter, flip_rule=self.flip, ref=cw)
        else:
            llr = awgn_llrv(cw, self.ch.param, cfg.rate, H.q, rng)
            out = fft_qspa_decode(H, llr, cfg.max_iter, ref=cw)
        diff = out.estimate ^ cw
        if self.encoder is not None:
            diff = diff[self.encoder.info_positions]
        bit_err = int(sum(bin(int(x)).count("1") for x in diff[diff != 0]))
        return bit_err, out.converged, out.iterations_used, out.bit_errors


def _run_point(cfg: SimConfig, point: int, pool) -> PointResult:
    job = _Trial(cfg, point)
    H = cfg.matrix
    bits = (H.n if cfg.all_zero else job.encoder.k) * job.p
    res = PointResult(cfg.sweep[point], 0, 0, 0, bits, 0, 0, np.zeros(cfg.max_iter + 1, dtype=np.int64))
    while res.word_errors < cfg.min_word_errors and res.trials < cfg.max_trials:
        batch = range(res.trials, min(res.trials + cfg.batch_size, cfg.max_trials))
        outs = pool.map(job, batch) if pool is not None else map(job, batch)
        for bit_err, ok, iters, hist in outs:
            res.trials += 1
            res.bit_errors += bit_err
            res.word_errors += bit_err > 0 or not ok
            if ok:
                res.converged += 1
                res.iter_sum += iters
            res.hist += hist
    return res


def run_sweep(cfg: SimConfig) -> SimResult:
    """Trials per sweep point until ``min_word_errors`` word errors or ``max_trials``.

    Trials run in fixed-size batches and the stop rule is checked only at
    batch boundaries, so results are identical for any number of workers.
    """
    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            points = [_run_point(cfg, j, pool) for j in range(len(cfg.sweep))]
    else:
        points = [_run_point(cfg, j, None) for j in range(len(cfg.sweep))]
    return SimResult(cfg, points)


@dataclass
class ProfileRow:
    param: float
    required: tuple  # smallest iteration budget reaching the target per code, or None
    ratio: float | None


@dataclass
class ConvergenceProfile:
    target_ber: float
    results: tuple  # SimResult per code
    rows: list

    def ber_curves(self, code: int, point: int) -> np.ndarray:
        res = self.results[code]
        H = res.config.matrix
        bits = H.n * (H.q.bit_length() - 1)
        pt = res.points[point]
        return pt.hist / (pt.trials * bits)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["param", "code", "max_iter", "ber"])
        for j, row in enumerate(self.rows):
            for c in range(len(self.results)):
                for n, b in enumerate(self.ber_curves(c, j)):
                    w.writerow([repr(row.param), c, n, repr(float(b))])
        return buf.getvalue()


def required_iterations(ber_curve, target: float) -> int | None:
    """Smallest iteration budget with BER <= target, or None if never reached."""
    hit = np.flatnonzero(np.asarray(ber_curve) <= target)
    return int(hit[0]) if hit.size else None


def convergence_profile(matrix_a: ParityCheckMatrix, matrix_b: ParityCheckMatrix, cfg: SimConfig,
                        target_ber: float = 1e-4) -> ConvergenceProfile:
    """BER against the iteration budget for two codes on the same sweep.

    Both codes run with ``cfg`` (its matrix is replaced); the per-iteration
    error history of each decode gives the whole BER-versus-budget curve from
    one run at ``cfg.max_iter``. ``ratio`` is required(b) / required(a).
    """
    if cfg.all_zero is False:
        raise SimConfigError("convergence profiles use the all-zero codeword")
    results = []
    for H in (matrix_a, matrix_b):
        sub = SimConfig(H, cfg.sweep, cfg.decoder, cfg.max_iter, cfg.min_word_errors, cfg.max_trials,
                        cfg.seed, True, cfg.channel, None, cfg.batch_size, cfg.workers)
        results.append(run_sweep(sub))
    prof = ConvergenceProfile(target_ber, tuple(results), [])
    for j, x in enumerate(cfg.sweep):
        req = tuple(required_iterations(prof.ber_curves(c, j), target_ber) for c in range(2))
        ratio = req[1] / req[0] if None not in req and req[0] > 0 else None
        prof.rows.append(ProfileRow(x, req, ratio))
    return prof
