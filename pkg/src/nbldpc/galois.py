"""Arithmetic over GF(2^p) and the Walsh-Hadamard transform on its additive group."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Standard primitive polynomials, bit i = coefficient of x^i.
PRIMITIVE_POLYS = {
    1: 0b11,
    2: 0b111,
    3: 0b1011,
    4: 0b10011,
    5: 0b100101,
    6: 0b1000011,
    7: 0b10001001,
    8: 0b100011101,
}


class FieldOrderError(ValueError):
    """Raised for field orders outside {2, 4, ..., 256}."""


@dataclass(frozen=True, eq=False)
class GField:
    """GF(q) for q = 2^p with exp/log and full multiplication tables.

    Elements are the integers 0..q-1 read as polynomial-basis bit vectors,
    so addition is XOR. Instances are immutable and safe to share.
    """

    q: int
    p: int = field(init=False)
    poly: int = field(init=False)
    exp: np.ndarray = field(init=False, repr=False)
    log: np.ndarray = field(init=False, repr=False)
    mul_table: np.ndarray = field(init=False, repr=False)
    inv_table: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        q = self.q
        if not isinstance(q, (int, np.integer)) or q < 2 or q > 256 or q & (q - 1):
            raise FieldOrderError(f"field order must be a power of 2 in [2, 256], got {q!r}")
        p = int(q).bit_length() - 1
        poly = PRIMITIVE_POLYS[p]
        exp = np.zeros(2 * q, dtype=np.int64)
        log = np.full(q, -1, dtype=np.int64)
        x = 1
        for k in range(q - 1):
            exp[k] = x
            log[x] = k
            x <<= 1
            if x & q:
                x ^= poly
        exp[q - 1 : 2 * q - 2] = exp[: q - 1]
        a = np.arange(q)
        la = log[a][:, None] + log[a][None, :]
        mul = np.where((a[:, None] == 0) | (a[None, :] == 0), 0, exp[np.maximum(la, 0) % (q - 1)])
        inv = np.zeros(q, dtype=np.int64)
        inv[1:] = exp[(-log[1:]) % (q - 1)]
        for name, arr in (("exp", exp), ("log", log), ("mul_table", mul), ("inv_table", inv)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "poly", poly)
        if not all(exp[log[v]] == v for v in range(1, q)):
            raise FieldOrderError(f"table construction failed for q={q}")

    @property
    def primitive_element(self) -> int:
        return int(self.exp[1]) if self.q > 2 else 1

    def add(self, a, b):
        return np.bitwise_xor(a, b)

    sub = add

    def mul(self, a, b):
        return self.mul_table[a, b]

    def inv(self, a):
        if np.any(np.asarray(a) == 0):
            raise ZeroDivisionError("inverse of 0 in GF(q)")
        return self.inv_table[a]

    def div(self, a, b):
        return self.mul(a, self.inv(b))

    def pow(self, a, n: int):
        a = np.asarray(a)
        if n == 0:
            out = np.ones_like(a)
            return out if out.ndim else int(out)
        if np.any(a == 0) and n < 0:
            raise ZeroDivisionError("negative power of 0 in GF(q)")
        out = self.exp[(self.log[np.maximum(a, 1)] * n) % (self.q - 1)]
        out = np.where(a == 0, 0, out)
        return out if out.ndim else int(out)

    def __repr__(self):
        return f"GField(q={self.q}, poly={self.poly:#b})"


_CACHE: dict[int, GField] = {}


def make_field(q: int) -> GField:
    """Return the (cached) field of order q."""
    if q not in _CACHE:
        _CACHE[q] = GField(q)
    return _CACHE[q]


def group_transform(v, direction: str = "forward", q: int | None = None) -> np.ndarray:
    """Walsh-Hadamard transform over the last axis (length must be a power of 2).

    ``inverse`` is ``forward`` scaled by 1/q, so the pair round-trips exactly.
    Pointwise products in the transform domain are convolutions under XOR.
    """
    x = np.array(v, dtype=float)
    n = x.shape[-1]
    if q is not None and n != q:
        raise ValueError(f"expected vectors of length {q}, got {n}")
    q = n
    if q < 1 or q & (q - 1):
        raise ValueError(f"transform length must be a power of 2, got {q}")
    if direction not in ("forward", "inverse"):
        raise ValueError(f"direction must be 'forward' or 'inverse', got {direction!r}")
    lead = x.shape[:-1]
    h = 1
    while h < q:
        y = x.reshape(*lead, q // (2 * h), 2, h)
        a = y[..., 0, :].copy()
        b = y[..., 1, :]
        y[..., 0, :] += b
        y[..., 1, :] = a - b
        x = y.reshape(*lead, q)
        h *= 2
    if direction == "inverse":
        x /= q
    return x


def xor_convolve(u, v) -> np.ndarray:
    """Distribution of a + b (XOR) for independent a ~ u, b ~ v."""
    return group_transform(group_transform(u) * group_transform(v), "inverse")
