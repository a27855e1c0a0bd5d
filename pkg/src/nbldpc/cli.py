"""Command-line front end: analyze, design, construct, simulate, tables.

Exit codes: 0 success, 1 domain or convergence failure, 2 usage or parse error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import zlib
from pathlib import Path

import numpy as np

from . import __version__
from .ensemble import EnsembleError, parse_ensemble, format_ensemble, realize_node_counts
from .exitchart import (ITERATION_REFERENCE, DegenerateEnsembleError, EnsembleChart, NonConvergentError,
                        PolynomialChart, chart_table, count_iterations_discrete,
                        complexity_from_iterations, estimate_iterations, threshold)
from .graph import (ConstructionError, MatrixFormatError, assign_labels, format_matrix, girth,
                    parse_matrix, peg_construct)
from .montecarlo import SimConfig, SimConfigError, run_sweep
from .optimizer import (MIN_DV_REFERENCE, MIN_DV_RATES, InfeasibleStartError, OptimizerError, PctConfig,
                        min_valid_dv, optimize)

OK, DOMAIN, USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def sub_seed(seed: int, name: str) -> int:
    """Named, independent sub-stream seed derived from the run seed."""
    ss = np.random.SeedSequence([seed, zlib.crc32(name.encode())])
    return int(ss.generate_state(1, np.uint32)[0])


def _digest(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class Manifest:
    """Config echo written as a ``#`` header into every output file."""

    def __init__(self, command: str, config: dict, inputs: dict | None = None):
        self.fields = {"command": command, "version": __version__}
        self.fields.update({k: config[k] for k in sorted(config)})
        for name, path in sorted((inputs or {}).items()):
            self.fields[f"sha256 {name}"] = _digest(Path(path).read_bytes())
        body = json.dumps(self.fields, sort_keys=True, default=str).encode()
        self.digest = _digest(body)

    def header(self) -> str:
        lines = [f"# {k}: {v}" for k, v in self.fields.items()]
        lines.append(f"# manifest: {self.digest}")
        return "\n".join(lines) + "\n"

    def write(self, path, text: str) -> None:
        data = (self.header() + text).encode()
        Path(path).write_bytes(data)
        print(f"wrote {path} sha256={_digest(data)} manifest={self.digest}")


def _read(path, parser):
    try:
        return parser(Path(path).read_text())
    except OSError as err:
        raise UsageError(f"cannot read {path}: {err.strerror}") from None
    except (EnsembleError, MatrixFormatError) as err:
        raise UsageError(f"{path}: {err}") from None


def _floats(text: str, what: str):
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"{what} must be a comma-separated list of numbers") from None
    if not vals:
        raise UsageError(f"{what} is empty")
    return vals


def _csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


# -- commands ---------------------------------------------------------------------

def cmd_analyze(a) -> int:
    if not 0 < a.pt < a.p0:
        raise UsageError(f"need 0 < pt < p0, got pt={a.pt}, p0={a.p0}")
    if (a.ensemble is None) == (a.chart_poly is None):
        raise UsageError("give exactly one of an ensemble file or --chart-poly")
    inputs = {}
    if a.chart_poly is not None:
        chart = PolynomialChart(tuple(_floats(a.chart_poly, "--chart-poly")))
        dd = None
    else:
        dd = _read(a.ensemble, parse_ensemble)
        q = a.q or dd.q
        if q is None:
            raise UsageError("field order unknown: pass --q or put a 'q' line in the ensemble file")
        if a.p0 > (q - 1) / q:
            raise UsageError(f"p0={a.p0} exceeds (q-1)/q")
        chart = EnsembleChart(dd, q)
        inputs["ensemble"] = a.ensemble
    try:
        N = estimate_iterations(chart, a.p0, a.pt)
        Nd = count_iterations_discrete(chart, a.p0, a.pt)
    except NonConvergentError as err:
        print(f"error: not convergent, fixed point near p={err.fixed_point:.6g}", file=sys.stderr)
        return DOMAIN
    print(f"N_estimate {N:.4f}")
    print(f"N_discrete {Nd}")
    if dd is not None:
        R = dd.rate()
        print(f"rate {R:.6f}")
        print(f"K {complexity_from_iterations(N, R, chart.q, dd.rho_inv_sum):.6g}")
    try:
        print(f"threshold {threshold(chart, pt=a.pt):.6g}")
    except DegenerateEnsembleError:
        print("threshold none")
    if a.out:
        cfg = {"p0": a.p0, "pt": a.pt, "q": a.q, "chart_poly": a.chart_poly}
        tab = chart_table(chart, a.p0)
        Manifest("analyze", cfg, inputs).write(a.out, _csv(tab.tolist(), ["p_in", "f"]))
    return OK


def cmd_design(a) -> int:
    init = _read(a.ensemble, parse_ensemble)
    q = a.q or init.q or 4
    try:
        cfg = PctConfig(R0=a.R0, q=q, p0=a.p0, pt=a.pt, zeta1=a.zeta1, zeta2=a.zeta2,
                        max_rounds=a.max_rounds, grid_size=a.grid_size, seed=a.seed)
    except ValueError as err:
        raise UsageError(str(err)) from None
    try:
        res = optimize(init, cfg)
    except InfeasibleStartError as err:
        print(f"error: {err}", file=sys.stderr)
        if err.report is not None:
            print(err.report, file=sys.stderr)
        return DOMAIN
    except OptimizerError as err:
        print(f"error: {err}", file=sys.stderr)
        return DOMAIN
    for r, K, N, th in res.trajectory:
        print(f"round {r:3d}  K {K:.6g}  N {N:.4f}  threshold {th if th is None else f'{th:.6g}'}")
    print(f"accepted steps {res.accepted_steps}, p0 {res.p0:.6g}")
    print(format_ensemble(res.dd), end="")
    man = Manifest("design", {**vars(cfg), "p0_used": res.p0}, {"ensemble": a.ensemble})
    if a.out:
        man.write(a.out, format_ensemble(res.dd))
    if a.trajectory:
        man.write(a.trajectory, res.trajectory_csv())
    return OK


def cmd_construct(a) -> int:
    dd = _read(a.ensemble, parse_ensemble)
    q = a.q or dd.q
    if q is None or q < 2 or q & (q - 1) or q > 256:
        raise UsageError("--q must be a power of two in [2, 256] (or set in the ensemble file)")
    if a.n < 1:
        raise UsageError("--n must be positive")
    try:
        vs, cs = realize_node_counts(dd, a.n, a.tol)
        H = peg_construct(vs, cs, seed=sub_seed(a.seed, "peg"), q=q)
        H = assign_labels(H, q, seed=sub_seed(a.seed, "labels"))
    except (EnsembleError, ConstructionError) as err:
        print(f"error: {err}", file=sys.stderr)
        return DOMAIN
    g = girth(H)
    print(f"n {H.n} m {H.m} edges {H.E} design_rate {1 - H.m / H.n:.6f} girth {g}")
    if a.out:
        cfg = {"n": a.n, "q": q, "seed": a.seed, "tol": a.tol, "girth": g}
        Manifest("construct", cfg, {"ensemble": a.ensemble}).write(a.out, format_matrix(H))
    else:
        sys.stdout.write(format_matrix(H))
    return OK


def cmd_simulate(a) -> int:
    H = _read(a.matrix, parse_matrix)
    sweep = _floats(a.sweep, "--sweep")
    try:
        cfg = SimConfig(H, sweep, a.decoder, a.max_iter, a.min_word_errors, a.max_trials, a.seed,
                        not a.random_codewords, None, a.rate, a.batch_size, a.workers)
    except (SimConfigError, ValueError) as err:
        raise UsageError(str(err)) from None
    res = run_sweep(cfg)
    text = res.to_csv()
    body = text[text.index("param,"):]
    sys.stdout.write(body)
    if a.out:
        echo = {k: v for k, v in cfg.echo().items()}
        Manifest("simulate", echo, {"matrix": a.matrix}).write(a.out, body)
    return OK


def iteration_rows():
    rows = []
    for (dv, dc), coeffs, est, act in ITERATION_REFERENCE:
        chart = PolynomialChart(coeffs)
        rows.append((dv, dc, estimate_iterations(chart, 1e-2, 1e-6), est,
                     count_iterations_discrete(chart, 1e-2, 1e-6), act))
    return rows


def min_dv_rows(q: int = 4):
    return [(R, min_valid_dv(R, q), T) for R, T in zip(MIN_DV_RATES, MIN_DV_REFERENCE)]


def cmd_tables(a) -> int:
    out = Path(a.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t1 = iteration_rows()
    t2 = min_dv_rows(a.q)
    for r in t1:
        print("iterations dv=%.2f dc=%.2f N=%.3f (reference %.2f) discrete=%d (reference %d)" % r)
    for R, T, ref in t2:
        print(f"min_dv R={R:.4f} T={T} (reference {ref})")
    man = Manifest("tables", {"q": a.q, "p0": 1e-2, "pt": 1e-6})
    man.write(out / "iterations.csv", _csv(t1, ["dv", "dc", "N_estimate", "reference_estimate",
                                            "N_discrete", "reference_actual"]))
    man.write(out / "min_dv.csv", _csv([(R, math.nan if T is None else T, ref) for R, T, ref in t2],
                                       ["rate", "min_dv", "reference"]))
    return OK


# -- argument parsing -------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="nbldpc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("analyze", help="iteration estimate, complexity and threshold of a chart")
    s.add_argument("ensemble", nargs="?")
    s.add_argument("--chart-poly", help="chart coefficients c1,c2,... of p, p^2, ...")
    s.add_argument("--p0", type=float, default=1e-2)
    s.add_argument("--pt", type=float, default=1e-6)
    s.add_argument("--q", type=int)
    s.add_argument("--out", help="CSV of the chart f(p)")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("design", help="lower the decoding complexity of an ensemble")
    s.add_argument("ensemble")
    s.add_argument("--R0", type=float, default=0.5)
    s.add_argument("--q", type=int)
    s.add_argument("--p0", type=float)
    s.add_argument("--pt", type=float, default=1e-6)
    s.add_argument("--zeta1", type=float, default=0.05)
    s.add_argument("--zeta2", type=float, default=0.05)
    s.add_argument("--max-rounds", type=int, default=50)
    s.add_argument("--grid-size", type=int, default=1024)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", help="optimized ensemble file")
    s.add_argument("--trajectory", help="per-round CSV")
    s.set_defaults(func=cmd_design)

    s = sub.add_parser("construct", help="PEG parity-check matrix for an ensemble")
    s.add_argument("ensemble")
    s.add_argument("--n", type=int, required=True)
    s.add_argument("--q", type=int)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--tol", type=float, help="allowed edge-fraction error (default 1/n)")
    s.add_argument("--out")
    s.set_defaults(func=cmd_construct)

    s = sub.add_parser("simulate", help="BER/WER sweep of a matrix")
    s.add_argument("matrix")
    s.add_argument("--decoder", choices=["gallager-b", "fft-qspa"], default="fft-qspa")
    s.add_argument("--sweep", required=True, help="comma-separated symbol error rates or Eb/N0 [dB]")
    s.add_argument("--max-iter", type=int, default=50)
    s.add_argument("--min-word-errors", type=int, default=50)
    s.add_argument("--max-trials", type=int, default=100_000)
    s.add_argument("--batch-size", type=int, default=64)
    s.add_argument("--rate", type=float)
    s.add_argument("--random-codewords", action="store_true")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("tables", help="iteration counts of the reference charts and minimum mean column weights")
    s.add_argument("--out-dir", default=".")
    s.add_argument("--q", type=int, default=4)
    s.set_defaults(func=cmd_tables)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
