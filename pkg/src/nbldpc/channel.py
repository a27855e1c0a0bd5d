"""Channels feeding the decoders: q-ary symmetric (hard) and BPSK-AWGN (LLRVs)."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

LLR_CLAMP = 40.0


def symbols_to_bits(symbols, p: int) -> np.ndarray:
    """Big-endian bit expansion: shape (..., p)."""
    s = np.asarray(symbols, dtype=np.int64)
    shifts = np.arange(p - 1, -1, -1)
    return (s[..., None] >> shifts) & 1


def bits_to_symbols(bits) -> np.ndarray:
    b = np.asarray(bits, dtype=np.int64)
    p = b.shape[-1]
    return (b << np.arange(p - 1, -1, -1)).sum(axis=-1)


@dataclass(frozen=True)
class ChannelModel:
    """``kind`` is "qsc" (parameter = symbol error probability) or "awgn" (Eb/N0 in dB)."""

    kind: str
    param: float
    q: int
    rate: float = 0.5

    def __post_init__(self):
        if self.kind not in ("qsc", "awgn"):
            raise ValueError(f"unknown channel kind {self.kind!r}")
        if self.kind == "qsc" and not 0 <= self.param <= (self.q - 1) / self.q + 1e-15:
            raise ValueError(f"symbol error probability {self.param} outside [0, (q-1)/q]")
        if not math.isfinite(self.param):
            raise ValueError("channel parameter must be finite")
        if not 0 < self.rate <= 1:
            raise ValueError("rate must be in (0, 1]")

    @property
    def p(self) -> int:
        return self.q.bit_length() - 1

    @property
    def symmetric(self) -> bool:
        return True

    @property
    def sigma(self) -> float:
        if self.kind != "awgn":
            raise AttributeError("sigma is defined for the AWGN channel only")
        return noise_sigma(self.param, self.rate)


def noise_sigma(ebn0_db: float, rate: float) -> float:
    """Per-bit noise std for unit-energy BPSK: sigma^2 = 1 / (2 R Eb/N0)."""
    return math.sqrt(1.0 / (2.0 * rate * 10.0 ** (ebn0_db / 10.0)))


def qsc_transmit(codeword, eps: float, q: int, rng) -> np.ndarray:
    """Replace each symbol, with probability eps, by a uniform different symbol."""
    if not 0 <= eps <= (q - 1) / q + 1e-15:
        raise ValueError(f"symbol error probability {eps} outside [0, (q-1)/q]")
    rng = np.random.default_rng(rng)
    c = np.asarray(codeword, dtype=np.int64)
    hit = rng.random(c.shape) < eps
    shift = rng.integers(1, q, size=c.shape)
    return np.where(hit, c ^ shift, c)


def awgn_bit_llrs(codeword, ebn0_db: float, rate: float, q: int, rng) -> np.ndarray:
    """Per-bit LLRs ln P(b=0|y)/P(b=1|y), shape (n, p); bit 0 maps to +1."""
    rng = np.random.default_rng(rng)
    p = q.bit_length() - 1
    bits = symbols_to_bits(codeword, p)
    sigma = noise_sigma(ebn0_db, rate)
    y = 1.0 - 2.0 * bits + sigma * rng.standard_normal(bits.shape)
    return 2.0 * y / sigma ** 2


def bit_llrs_to_llrv(bit_llrs) -> np.ndarray:
    """Symbol LLRV entries l_i = ln(P(0)/P(i)) for i = 1..q-1, clamped to +-40."""
    L = np.asarray(bit_llrs, dtype=float)
    p = L.shape[-1]
    q = 1 << p
    # l_i is the sum of the bit LLRs over the bits set in i
    B = symbols_to_bits(np.arange(1, q), p).astype(float)  # (q-1, p)
    return np.clip(L @ B.T, -LLR_CLAMP, LLR_CLAMP)


def awgn_llrv(codeword, ebn0_db: float, rate: float, q: int, rng) -> np.ndarray:
    """BPSK over AWGN, returned as per-symbol LLRVs of shape (n, q-1)."""
    return bit_llrs_to_llrv(awgn_bit_llrs(codeword, ebn0_db, rate, q, rng))


def llrv_to_logprob(llrv) -> np.ndarray:
    """Unnormalized log-probabilities (log P(0) = 0 reference), shape (..., q)."""
    l = np.asarray(llrv, dtype=float)
    zeros = np.zeros(l.shape[:-1] + (1,))
    return np.concatenate([zeros, -l], axis=-1)


def llrv_to_prob(llrv) -> np.ndarray:
    lp = llrv_to_logprob(llrv)
    lp -= lp.max(axis=-1, keepdims=True)
    p = np.exp(lp)
    return p / p.sum(axis=-1, keepdims=True)


def prob_to_llrv(prob) -> np.ndarray:
    p = np.asarray(prob, dtype=float)
    return np.log(p[..., :1]) - np.log(p[..., 1:])


def q_tail(x):
    """Gaussian tail probability Q(x)."""
    return ndtr(-np.asarray(x, dtype=float))


def initial_error_prob(ch: ChannelModel) -> float:
    """Symbol error probability of the channel output before decoding."""
    if ch.kind == "qsc":
        return float(ch.param)
    ebn0 = 10.0 ** (ch.param / 10.0)
    pb = float(q_tail(math.sqrt(2.0 * ch.rate * ebn0)))
    return -math.expm1(ch.p * math.log1p(-pb))
