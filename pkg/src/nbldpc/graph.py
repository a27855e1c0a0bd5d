"""Sparse GF(q) parity-check matrices: PEG construction, labels, girth, I/O, encoding."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from . import kernels
from .galois import GField, make_field


class ConstructionError(ValueError):
    pass


class MatrixFormatError(ValueError):
    def __init__(self, lineno, msg):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


@dataclass(frozen=True, eq=False)
class ParityCheckMatrix:
    """m x n sparse matrix over GF(q), stored check-major.

    Edges of check ``c`` are ``chk_ptr[c]:chk_ptr[c+1]`` into ``edge_var`` /
    ``edge_lab``, sorted by variable index. Labels are nonzero field elements.
    """

    q: int
    n: int
    m: int
    chk_ptr: np.ndarray
    edge_var: np.ndarray
    edge_lab: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        for name in ("chk_ptr", "edge_var", "edge_lab"):
            arr = np.ascontiguousarray(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.chk_ptr.shape != (self.m + 1,) or self.chk_ptr[-1] != self.edge_var.size:
            raise ValueError("inconsistent check pointer array")
        if self.edge_var.size and (self.edge_var.min() < 0 or self.edge_var.max() >= self.n):
            raise ValueError("variable index out of range")
        if self.edge_lab.size and (self.edge_lab.min() < 1 or self.edge_lab.max() >= self.q):
            raise ValueError("edge labels must be nonzero field elements")
        for c in range(self.m):
            cols = self.edge_var[self.chk_ptr[c]:self.chk_ptr[c + 1]]
            if np.any(np.diff(cols) <= 0):
                raise ValueError(f"check {c} has unsorted or parallel edges")

    @classmethod
    def from_adjacency(cls, q, n, rows, meta=None):
        """Build from per-check lists of (variable, label) pairs."""
        ptr = [0]
        ev, el = [], []
        for entries in rows:
            entries = sorted(entries)
            ev += [v for v, _ in entries]
            el += [h for _, h in entries]
            ptr.append(len(ev))
        return cls(q, n, len(rows), np.array(ptr), np.array(ev, dtype=np.int64),
                   np.array(el, dtype=np.int64), dict(meta or {}))

    @classmethod
    def from_dense(cls, H, q):
        H = np.asarray(H)
        rows = [[(int(j), int(H[i, j])) for j in np.flatnonzero(H[i])] for i in range(H.shape[0])]
        return cls.from_adjacency(q, H.shape[1], rows)

    @property
    def E(self) -> int:
        return int(self.edge_var.size)

    @cached_property
    def edge_chk(self) -> np.ndarray:
        return np.repeat(np.arange(self.m), np.diff(self.chk_ptr))

    @cached_property
    def var_edges(self) -> np.ndarray:
        """Edge ids grouped by variable (stable within a variable)."""
        return np.argsort(self.edge_var, kind="stable")

    @cached_property
    def var_ptr(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(np.bincount(self.edge_var, minlength=self.n))])

    @property
    def col_weights(self) -> np.ndarray:
        return np.diff(self.var_ptr)

    @property
    def row_weights(self) -> np.ndarray:
        return np.diff(self.chk_ptr)

    @property
    def gf(self) -> GField:
        return make_field(self.q)

    def to_dense(self) -> np.ndarray:
        H = np.zeros((self.m, self.n), dtype=np.int64)
        H[self.edge_chk, self.edge_var] = self.edge_lab
        return H

    def syndrome(self, word) -> np.ndarray:
        word = np.asarray(word, dtype=np.int64)
        terms = self.gf.mul_table[self.edge_lab, word[self.edge_var]]
        out = np.zeros(self.m, dtype=np.int64)
        nz = np.diff(self.chk_ptr) > 0
        out[nz] = np.bitwise_xor.reduceat(terms, self.chk_ptr[:-1][nz])
        return out

    def is_codeword(self, word) -> bool:
        return not self.syndrome(word).any()

    def rho_realized(self) -> dict:
        from .ensemble import realized_fractions
        return realized_fractions(self.row_weights)

    def lam_realized(self) -> dict:
        from .ensemble import realized_fractions
        return realized_fractions(self.col_weights)

    def same_structure(self, other) -> bool:
        return (self.q, self.n, self.m) == (other.q, other.n, other.m) and \
            np.array_equal(self.chk_ptr, other.chk_ptr) and \
            np.array_equal(self.edge_var, other.edge_var) and \
            np.array_equal(self.edge_lab, other.edge_lab)

    def __eq__(self, other):
        if not isinstance(other, ParityCheckMatrix):
            return NotImplemented
        return self.same_structure(other)

    __hash__ = object.__hash__


def peg_construct(var_seq, chk_seq, seed: int = 0, q: int = 2) -> ParityCheckMatrix:
    """Progressive edge growth for the given degree sequences (labels all 1).

    Variables are processed in nondecreasing degree order (seeded shuffle within
    a degree); each edge goes to an open check farthest from the variable's
    current neighbourhood, then lowest load, then lowest index. Check degrees
    are exact, so the last few variables may be forced into short cycles.
    """
    var_seq = np.asarray(var_seq, dtype=np.int64)
    chk_seq = np.asarray(chk_seq, dtype=np.int64)
    if var_seq.sum() != chk_seq.sum():
        raise ConstructionError(f"degree sums differ: {var_seq.sum()} variable vs {chk_seq.sum()} check")
    if var_seq.min() < 1 or chk_seq.min() < 1:
        raise ConstructionError("degrees must be positive")
    if var_seq.max() > chk_seq.size:
        raise ConstructionError("a variable degree exceeds the number of checks")
    rng = np.random.default_rng(seed)
    tiebreak = rng.permutation(var_seq.size)
    order = np.lexsort((tiebreak, var_seq))
    var_adj, chk_adj, failed = kernels.impl().peg_build(
        order.astype(np.int64), var_seq, chk_seq, int(var_seq.max()), int(chk_seq.max()))
    if failed >= 0:
        raise ConstructionError(f"variable {failed} cannot be placed without a parallel edge")
    rows = []
    for c in range(chk_seq.size):
        vs = chk_adj[c][chk_adj[c] >= 0]
        rows.append([(int(v), 1) for v in vs])
    return ParityCheckMatrix.from_adjacency(q, var_seq.size, rows, {"construction": "peg", "seed": seed})


def assign_labels(H: ParityCheckMatrix, fld, seed: int = 0) -> ParityCheckMatrix:
    """Independent uniform nonzero labels for every edge."""
    q = fld.q if isinstance(fld, GField) else int(fld)
    rng = np.random.default_rng(seed)
    labels = np.ones(H.E, dtype=np.int64) if q == 2 else rng.integers(1, q, size=H.E)
    meta = dict(H.meta, label_seed=seed)
    return ParityCheckMatrix(q, H.n, H.m, H.chk_ptr, H.edge_var, labels, meta)


def girth(H: ParityCheckMatrix) -> float:
    """Length of the shortest Tanner-graph cycle; ``math.inf`` for a forest."""
    var_chk = H.edge_chk[H.var_edges]
    g = kernels.impl().girth(H.var_ptr, var_chk, H.chk_ptr, H.edge_var)
    return math.inf if g >= (1 << 30) else int(g)


# -- text format -----------------------------------------------------------------

def format_matrix(H: ParityCheckMatrix) -> str:
    cw = H.col_weights
    rw = H.row_weights
    wmax = int(cw.max()) if H.n else 0
    lines = [f"{H.q} {H.n} {H.m}", f"{wmax} {int(rw.max()) if H.m else 0}",
             " ".join(map(str, cw)), " ".join(map(str, rw))]
    ve = H.var_edges
    for v in range(H.n):
        es = ve[H.var_ptr[v]:H.var_ptr[v + 1]]
        ent = [f"{H.edge_chk[e] + 1}:{H.edge_lab[e]}" for e in es]
        ent += ["0:0"] * (wmax - len(ent))
        lines.append(" ".join(ent))
    return "\n".join(lines) + "\n"


def _ints(line, lineno, count=None, what="integers"):
    try:
        vals = [int(t) for t in line.split()]
    except ValueError:
        raise MatrixFormatError(lineno, f"expected {what}") from None
    if count is not None and len(vals) != count:
        raise MatrixFormatError(lineno, f"expected {count} {what}, got {len(vals)}")
    return vals


def parse_matrix(text: str) -> ParityCheckMatrix:
    """Inverse of ``format_matrix``; a leading block of ``#`` lines is skipped."""
    lines = text.splitlines()
    skip = 0
    while skip < len(lines) and lines[skip].startswith("#"):
        skip += 1
    try:
        return _parse_body(lines[skip:])
    except MatrixFormatError as err:
        if not skip:
            raise
        raise MatrixFormatError(err.lineno + skip, str(err).split(": ", 1)[1]) from None


def _parse_body(lines) -> ParityCheckMatrix:
    if len(lines) < 4:
        raise MatrixFormatError(len(lines) + 1, "truncated header")
    q, n, m = _ints(lines[0], 1, 3, "header values q n m")
    if q < 2 or q > 256 or q & (q - 1) or n < 1 or m < 1:
        raise MatrixFormatError(1, f"bad header q={q} n={n} m={m}")
    wc, wr = _ints(lines[1], 2, 2, "maximum weights")
    cw = _ints(lines[2], 3, n, "column weights")
    rw = _ints(lines[3], 4, m, "row weights")
    if len(lines) < 4 + n:
        raise MatrixFormatError(len(lines) + 1, f"expected {n} column lines")
    if max(cw) != wc or max(rw) != wr:
        raise MatrixFormatError(2, "maximum weights disagree with weight lists")
    rows = [[] for _ in range(m)]
    for v in range(n):
        lineno = 5 + v
        seen = 0
        for tok in lines[4 + v].split():
            try:
                r_s, h_s = tok.split(":")
                r, h = int(r_s), int(h_s)
            except ValueError:
                raise MatrixFormatError(lineno, f"bad entry {tok!r}") from None
            if r == 0 and h == 0:
                continue
            if not 1 <= r <= m:
                raise MatrixFormatError(lineno, f"row index {r} outside 1..{m}")
            if not 1 <= h < q:
                raise MatrixFormatError(lineno, f"label {h} is not a nonzero element of GF({q})")
            rows[r - 1].append((v, h))
            seen += 1
        if seen != cw[v]:
            raise MatrixFormatError(lineno, f"column {v + 1} has {seen} entries, header says {cw[v]}")
    for c, ents in enumerate(rows):
        if len(ents) != rw[c]:
            raise MatrixFormatError(4, f"row {c + 1} has {len(ents)} entries, header says {rw[c]}")
        if len({v for v, _ in ents}) != len(ents):
            raise MatrixFormatError(4, f"row {c + 1} has a repeated column")
    for extra in range(4 + n, len(lines)):
        if lines[extra].strip():
            raise MatrixFormatError(extra + 1, "unexpected trailing content")
    return ParityCheckMatrix.from_adjacency(q, n, rows)


def write_matrix(H: ParityCheckMatrix, path) -> None:
    Path(path).write_text(format_matrix(H))


def read_matrix(path) -> ParityCheckMatrix:
    return parse_matrix(Path(path).read_text())


# -- encoding ----------------------------------------------------------------------

def row_reduce(H: ParityCheckMatrix):
    """Reduced row echelon form over GF(q): (matrix, pivot columns)."""
    fld = H.gf
    mul, inv = fld.mul_table, fld.inv_table
    A = H.to_dense()
    pivots = []
    r = 0
    for col in range(H.n):
        if r == A.shape[0]:
            break
        nz = np.flatnonzero(A[r:, col])
        if nz.size == 0:
            continue
        k = r + nz[0]
        if k != r:
            A[[r, k]] = A[[k, r]]
        A[r] = mul[inv[A[r, col]], A[r]]
        others = np.flatnonzero(A[:, col])
        others = others[others != r]
        if others.size:
            A[others] ^= mul[A[others, col][:, None], A[r][None, :]]
        pivots.append(col)
        r += 1
    return A[:r], np.array(pivots, dtype=np.int64)


class Encoder:
    """Systematic encoder from the reduced parity-check matrix.

    Information symbols occupy the non-pivot columns; a rank-deficient ``H``
    simply yields more of them (``realized_rate`` >= design rate).
    """

    def __init__(self, H: ParityCheckMatrix):
        self.H = H
        self.reduced, self.pivots = row_reduce(H)
        mask = np.ones(H.n, dtype=bool)
        mask[self.pivots] = False
        self.info_positions = np.flatnonzero(mask)
        self._parity_part = self.reduced[:, self.info_positions]

    @property
    def rank(self) -> int:
        return int(self.pivots.size)

    @property
    def k(self) -> int:
        return int(self.info_positions.size)

    @property
    def realized_rate(self) -> float:
        return self.k / self.H.n

    def encode(self, message) -> np.ndarray:
        u = np.asarray(message, dtype=np.int64)
        if u.shape != (self.k,):
            raise ValueError(f"message must have {self.k} symbols")
        mul = self.H.gf.mul_table
        c = np.zeros(self.H.n, dtype=np.int64)
        c[self.info_positions] = u
        if self.rank:
            c[self.pivots] = np.bitwise_xor.reduce(mul[self._parity_part, u[None, :]], axis=1) \
                if self.k else 0
        return c


def encode(H: ParityCheckMatrix, message) -> np.ndarray:
    return Encoder(H).encode(message)
