"""Gallager-b (hard decision) and FFT-QSPA (soft decision) decoders over GF(q)."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .channel import llrv_to_logprob
from .exitchart import q_out, select_l0
from .graph import ParityCheckMatrix

PROB_FLOOR = 1e-30


@dataclass
class DecodeOutcome:
    estimate: np.ndarray
    iterations_used: int
    status: str  # "converged" | "max-iter"
    bit_errors: np.ndarray = field(default=None, repr=False)

    @property
    def converged(self) -> bool:
        return self.status == "converged"


def _ref(H, ref):
    if ref is None:
        return np.zeros(H.n, dtype=np.int64)
    return np.ascontiguousarray(ref, dtype=np.int64)


def flip_thresholds(H: ParityCheckMatrix, p0: float) -> np.ndarray:
    """Per-variable agreement threshold b(i) = l0 at the channel operating point.

    The check-message quality is evaluated once, at p_in = p0, with the
    matrix's realized check-degree mix.
    """
    p0 = float(np.clip(p0, 1e-12, 0.5))
    Q = q_out(min(p0, (H.q - 1) / H.q), H.rho_realized(), H.q)
    degs = H.col_weights
    table = {int(i): select_l0(int(i), p0, Q, H.q) if i >= 2 else 1 for i in np.unique(degs)}
    return np.array([table[int(i)] for i in degs], dtype=np.int64)


def gallager_b_decode(H: ParityCheckMatrix, received, max_iter: int = 50, flip_rule=None,
                      p0: float | None = None, ref=None) -> DecodeOutcome:
    """Hard-decision decoding with extrinsic majority-style flips.

    ``flip_rule`` is a per-variable threshold array; if omitted it is derived
    from ``p0`` (the channel symbol error probability) via ``flip_thresholds``.
    ``ref`` only feeds the per-iteration bit-error history.
    """
    r = np.ascontiguousarray(received, dtype=np.int64)
    if r.shape != (H.n,) or r.min(initial=0) < 0 or r.max(initial=0) >= H.q:
        raise ValueError("received word must hold n symbols in [0, q)")
    if flip_rule is None:
        if p0 is None:
            raise ValueError("give either flip_rule or the channel error probability p0")
        flip_rule = flip_thresholds(H, p0)
    b = np.ascontiguousarray(flip_rule, dtype=np.int64)
    gf = H.gf
    est, it, ok, hist = kernels.impl().gallager_b_decode(
        H.edge_var, H.edge_lab, H.chk_ptr, H.var_ptr, H.var_edges, gf.mul_table, gf.inv_table,
        r, b, int(max_iter), _ref(H, ref))
    return DecodeOutcome(est, int(it), "converged" if ok else "max-iter", hist)


def fft_qspa_decode(H: ParityCheckMatrix, llrvs, max_iter: int = 50, ref=None) -> DecodeOutcome:
    """Flooding q-ary sum-product decoding with Walsh-Hadamard check updates."""
    l = np.asarray(llrvs, dtype=float)
    if l.shape != (H.n, H.q - 1):
        raise ValueError(f"expected LLRVs of shape ({H.n}, {H.q - 1}), got {l.shape}")
    ch_log = np.ascontiguousarray(llrv_to_logprob(l))
    est, it, ok, hist = kernels.impl().qspa_decode(
        H.edge_var, H.edge_lab, H.chk_ptr, H.var_ptr, H.var_edges, H.gf.mul_table,
        ch_log, int(max_iter), _ref(H, ref), PROB_FLOOR)
    return DecodeOutcome(est, int(it), "converged" if ok else "max-iter", hist)


def check_messages(H: ParityCheckMatrix, v2c) -> np.ndarray:
    """One check-node half-iteration: (E, q) variable-to-check probabilities in, check-to-variable out."""
    v2c = np.ascontiguousarray(v2c, dtype=float)
    return kernels.impl().qspa_check_update(v2c, H.edge_lab, H.chk_ptr, H.gf.mul_table, PROB_FLOOR)


def hard_decision(llrvs) -> np.ndarray:
    """Most likely symbol per LLRV; 0 when every entry is positive, lowest index on ties."""
    lp = llrv_to_logprob(llrvs)
    return np.argmax(lp, axis=-1).astype(np.int64)
