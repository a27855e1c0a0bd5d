"""Vectorized numpy kernels. Same signatures and results as ``_numba``."""
from collections import deque

import numpy as np

BIG = 1 << 30


def peg_build(order, var_deg, chk_cap, dv_max, dc_max):
    n = var_deg.shape[0]
    m = chk_cap.shape[0]
    var_adj = -np.ones((n, dv_max), dtype=np.int64)
    chk_adj = -np.ones((m, dc_max), dtype=np.int64)
    var_fill = np.zeros(n, dtype=np.int64)
    load = np.zeros(m, dtype=np.int64)
    idx = np.arange(m)
    for v in order:
        for k in range(var_deg[v]):
            depth = np.full(m, BIG, dtype=np.int64)
            if k > 0:
                seen = np.zeros(n, dtype=bool)
                seen[v] = True
                frontier = np.array([v])
                d = 0
                while frontier.size:
                    chks = var_adj[frontier].ravel()
                    chks = np.unique(chks[chks >= 0])
                    chks = chks[depth[chks] == BIG]
                    if chks.size == 0:
                        break
                    depth[chks] = d
                    nxt = chk_adj[chks].ravel()
                    nxt = np.unique(nxt[nxt >= 0])
                    nxt = nxt[~seen[nxt]]
                    seen[nxt] = True
                    frontier = nxt
                    d += 1
            ok = load < chk_cap
            ok[var_adj[v, : var_fill[v]]] = False
            if not ok.any():
                return var_adj, chk_adj, v
            # max depth, then min load, then min index
            key = np.lexsort((idx[ok], load[ok], -depth[ok]))
            best = idx[ok][key[0]]
            var_adj[v, var_fill[v]] = best
            var_fill[v] += 1
            chk_adj[best, load[best]] = v
            load[best] += 1
    return var_adj, chk_adj, -1


def girth(var_ptr, var_chk, chk_ptr, chk_var):
    n = var_ptr.shape[0] - 1
    best = BIG
    for s in range(n):
        dist = {s: 0}
        parent = {s: -1}
        queue = deque([s])
        while queue:
            x = queue.popleft()
            if 2 * dist[x] + 1 >= best:
                break
            if x < n:
                nbrs = var_chk[var_ptr[x]:var_ptr[x + 1]] + n
            else:
                nbrs = chk_var[chk_ptr[x - n]:chk_ptr[x - n + 1]]
            for y in nbrs.tolist():
                if y == parent[x]:
                    continue
                if y not in dist:
                    dist[y] = dist[x] + 1
                    parent[y] = x
                    queue.append(y)
                else:
                    best = min(best, dist[x] + dist[y] + 1)
    return best


_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)


def _bit_errors(est, ref):
    return int(_POPCOUNT[np.bitwise_xor(est, ref)].sum())


def _syndrome_ok(est, edge_var, edge_lab, chk_ptr, mul):
    terms = mul[edge_lab, est[edge_var]]
    return not np.bitwise_xor.reduceat(terms, chk_ptr[:-1]).any()


def gallager_b_decode(edge_var, edge_lab, chk_ptr, var_ptr, var_edges, mul, inv,
                      received, thresholds, max_iter, ref):
    n = received.shape[0]
    q = mul.shape[0]
    E = edge_var.shape[0]
    hist = np.full(max_iter + 1, -1, dtype=np.int64)
    est = received.copy()
    hist[0] = _bit_errors(est, ref)
    if _syndrome_ok(est, edge_var, edge_lab, chk_ptr, mul):
        return est, 0, True, hist
    edge_chk = np.repeat(np.arange(chk_ptr.shape[0] - 1), np.diff(chk_ptr))
    v2c = received[edge_var]
    r_edge = received[edge_var]
    b_edge = thresholds[edge_var]
    for it in range(1, max_iter + 1):
        terms = mul[edge_lab, v2c]
        synd = np.bitwise_xor.reduceat(terms, chk_ptr[:-1])
        c2v = mul[inv[edge_lab], synd[edge_chk] ^ terms]
        counts = np.zeros((n, q), dtype=np.int64)
        np.add.at(counts, (edge_var, c2v), 1)
        ext = counts[edge_var]
        ext[np.arange(E), c2v] -= 1
        ext[np.arange(E), r_edge] = -1
        hit = ext >= b_edge[:, None]
        single = hit.sum(axis=1) == 1
        v2c = np.where(single, np.argmax(hit, axis=1), r_edge)
        counts[np.arange(n), received] += 1
        # channel wins ties via the +1; argmax picks the lowest symbol otherwise
        score = counts * 2
        score[np.arange(n), received] += 1
        est = np.argmax(score, axis=1).astype(np.int64)
        hist[it] = _bit_errors(est, ref)
        if _syndrome_ok(est, edge_var, edge_lab, chk_ptr, mul):
            hist[it + 1:] = hist[it]
            return est, it, True, hist
    return est, max_iter, False, hist


def wht(x):
    """In-register Walsh-Hadamard transform along the last axis (unnormalized)."""
    q = x.shape[-1]
    lead = x.shape[:-1]
    h = 1
    while h < q:
        y = x.reshape(*lead, q // (2 * h), 2, h)
        a = y[..., 0, :]
        b = y[..., 1, :]
        x = np.stack((a + b, a - b), axis=-2).reshape(*lead, q)
        h *= 2
    return x


def _check_layout(chk_ptr):
    deg = np.diff(chk_ptr)
    m = deg.shape[0]
    dmax = int(deg.max())
    slot = np.arange(chk_ptr[-1]) - np.repeat(chk_ptr[:-1], deg)
    row = np.repeat(np.arange(m), deg)
    return row, slot, dmax


def qspa_check_update(v2c, edge_lab, chk_ptr, mul, floor):
    E, q = v2c.shape
    m = chk_ptr.shape[0] - 1
    row, slot, dmax = _check_layout(chk_ptr)
    # permute by label: y = h x
    perm = mul[edge_lab]  # (E, q): perm[e, x] = h_e * x
    spec_e = np.empty_like(v2c)
    np.put_along_axis(spec_e, perm, v2c, axis=1)
    pad = np.zeros((m, dmax, q))
    pad[:, :, 0] = 1.0  # delta at 0 is the identity for convolution
    pad[row, slot] = spec_e
    spectra = wht(pad)
    fwd = np.cumprod(np.concatenate([np.ones((m, 1, q)), spectra], axis=1), axis=1)
    bwd = np.cumprod(np.concatenate([np.ones((m, 1, q)), spectra[:, ::-1]], axis=1), axis=1)[:, ::-1]
    loo = fwd[row, slot] * bwd[row, slot + 1]
    dist = wht(loo) / q
    out = np.take_along_axis(dist, perm, axis=1)
    out = np.clip(out, floor, 1.0)
    return out / out.sum(axis=1, keepdims=True)


def _softmax_rows(a, floor):
    z = np.exp(a - a.max(axis=1, keepdims=True))
    z /= z.sum(axis=1, keepdims=True)
    z = np.maximum(z, floor)
    return z / z.sum(axis=1, keepdims=True)


def qspa_var_update(c2v, ch_log, var_ptr, var_edges, floor):
    n, q = ch_log.shape
    lg = np.log(c2v)
    deg = np.diff(var_ptr)
    owner = np.repeat(np.arange(n), deg)
    total = ch_log.copy()
    np.add.at(total, owner, lg[var_edges])
    ext = np.empty_like(c2v)
    ext[var_edges] = total[owner] - lg[var_edges]
    return _softmax_rows(ext, floor), total


def qspa_decode(edge_var, edge_lab, chk_ptr, var_ptr, var_edges, mul, ch_log, max_iter, ref, floor):
    hist = np.full(max_iter + 1, -1, dtype=np.int64)
    est = np.argmax(ch_log, axis=1).astype(np.int64)
    hist[0] = _bit_errors(est, ref)
    if _syndrome_ok(est, edge_var, edge_lab, chk_ptr, mul):
        return est, 0, True, hist
    v2c = _softmax_rows(ch_log[edge_var], floor)
    for it in range(1, max_iter + 1):
        c2v = qspa_check_update(v2c, edge_lab, chk_ptr, mul, floor)
        v2c, total = qspa_var_update(c2v, ch_log, var_ptr, var_edges, floor)
        est = np.argmax(total, axis=1).astype(np.int64)
        hist[it] = _bit_errors(est, ref)
        if _syndrome_ok(est, edge_var, edge_lab, chk_ptr, mul):
            hist[it + 1:] = hist[it]
            return est, it, True, hist
    return est, max_iter, False, hist
