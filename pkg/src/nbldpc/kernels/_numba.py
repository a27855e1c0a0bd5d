"""Loop kernels compiled with numba. Same signatures as ``_numpy``."""
import numpy as np
from numba import njit

BIG = 1 << 30


@njit(cache=True, nogil=True)
def peg_build(order, var_deg, chk_cap, dv_max, dc_max):
    n = var_deg.shape[0]
    m = chk_cap.shape[0]
    var_adj = -np.ones((n, dv_max), dtype=np.int64)
    chk_adj = -np.ones((m, dc_max), dtype=np.int64)
    var_fill = np.zeros(n, dtype=np.int64)
    load = np.zeros(m, dtype=np.int64)
    depth = np.empty(m, dtype=np.int64)
    seen = np.zeros(n, dtype=np.bool_)
    queue_v = np.empty(n, dtype=np.int64)
    adjacent = np.zeros(m, dtype=np.bool_)
    for t in range(order.shape[0]):
        v = order[t]
        for k in range(var_deg[v]):
            depth[:] = BIG
            if k > 0:
                # level-synchronous BFS from v through the current graph
                seen[:] = False
                seen[v] = True
                head = 0
                tail = 1
                queue_v[0] = v
                d = 0
                while head < tail:
                    level_end = tail
                    while head < level_end:
                        u = queue_v[head]
                        head += 1
                        for a in range(var_fill[u]):
                            c = var_adj[u, a]
                            if depth[c] == BIG:
                                depth[c] = d
                                for b in range(load[c]):
                                    w = chk_adj[c, b]
                                    if not seen[w]:
                                        seen[w] = True
                                        queue_v[tail] = w
                                        tail += 1
                    d += 1
            for a in range(var_fill[v]):
                adjacent[var_adj[v, a]] = True
            best = -1
            for c in range(m):
                if load[c] >= chk_cap[c] or adjacent[c]:
                    continue
                if best < 0 or depth[c] > depth[best] or (depth[c] == depth[best] and load[c] < load[best]):
                    best = c
            for a in range(var_fill[v]):
                adjacent[var_adj[v, a]] = False
            if best < 0:
                return var_adj, chk_adj, v
            var_adj[v, var_fill[v]] = best
            var_fill[v] += 1
            chk_adj[best, load[best]] = v
            load[best] += 1
    return var_adj, chk_adj, -1


@njit(cache=True, nogil=True)
def girth(var_ptr, var_chk, chk_ptr, chk_var):
    # shortest cycle through each variable node; every cycle has one
    n = var_ptr.shape[0] - 1
    m = chk_ptr.shape[0] - 1
    best = BIG
    dist = np.empty(n + m, dtype=np.int64)
    parent = np.empty(n + m, dtype=np.int64)
    queue = np.empty(n + m, dtype=np.int64)
    for s in range(n):
        dist[:] = -1
        dist[s] = 0
        parent[s] = -1
        head = 0
        tail = 1
        queue[0] = s
        while head < tail:
            x = queue[head]
            head += 1
            if 2 * dist[x] + 1 >= best:
                break
            if x < n:
                lo = var_ptr[x]
                hi = var_ptr[x + 1]
            else:
                lo = chk_ptr[x - n]
                hi = chk_ptr[x - n + 1]
            for a in range(lo, hi):
                y = var_chk[a] + n if x < n else chk_var[a]
                if y == parent[x]:
                    continue
                if dist[y] < 0:
                    dist[y] = dist[x] + 1
                    parent[y] = x
                    queue[tail] = y
                    tail += 1
                else:
                    cyc = dist[x] + dist[y] + 1
                    if cyc < best:
                        best = cyc
    return best


@njit(cache=True, nogil=True)
def _bits(x):
    c = 0
    while x:
        c += x & 1
        x >>= 1
    return c


@njit(cache=True, nogil=True)
def _syndrome_ok(est, edge_var, edge_lab, chk_ptr, mul):
    m = chk_ptr.shape[0] - 1
    for c in range(m):
        s = 0
        for e in range(chk_ptr[c], chk_ptr[c + 1]):
            s ^= mul[edge_lab[e], est[edge_var[e]]]
        if s != 0:
            return False
    return True


@njit(cache=True, nogil=True)
def _bit_errors(est, ref):
    tot = 0
    for j in range(est.shape[0]):
        tot += _bits(est[j] ^ ref[j])
    return tot


@njit(cache=True, nogil=True)
def gallager_b_decode(edge_var, edge_lab, chk_ptr, var_ptr, var_edges, mul, inv,
                      received, thresholds, max_iter, ref):
    n = received.shape[0]
    m = chk_ptr.shape[0] - 1
    E = edge_var.shape[0]
    q = mul.shape[0]
    hist = np.full(max_iter + 1, -1, dtype=np.int64)
    v2c = np.empty(E, dtype=np.int64)
    c2v = np.empty(E, dtype=np.int64)
    for e in range(E):
        v2c[e] = received[edge_var[e]]
    est = received.copy()
    hist[0] = _bit_errors(est, ref)
    if _syndrome_ok(est, edge_var, edge_lab, chk_ptr, mul):
        return est, 0, True, hist
    counts = np.zeros(q, dtype=np.int64)
    for it in range(1, max_iter + 1):
        for c in range(m):
            s = 0
            for e in range(chk_ptr[c], chk_ptr[c + 1]):
                s ^= mul[edge_lab[e], v2c[e]]
            for e in range(chk_ptr[c], chk_ptr[c + 1]):
                c2v[e] = mul[inv[edge_lab[e]], s ^ mul[edge_lab[e], v2c[e]]]
        for v in range(n):
            r = received[v]
            counts[:] = 0
            for a in range(var_ptr[v], var_ptr[v + 1]):
                counts[c2v[var_edges[a]]] += 1
            b = thresholds[v]
            for a in range(var_ptr[v], var_ptr[v + 1]):
                e = var_edges[a]
                own = c2v[e]
                counts[own] -= 1
                pick = r
                hits = 0
                for s in range(q):
                    if s != r and counts[s] >= b:
                        hits += 1
                        pick = s
                if hits != 1:
                    pick = r
                v2c[e] = pick
                counts[own] += 1
            # plurality with the channel value counted once; channel wins ties
            counts[r] += 1
            best = r
            for s in range(q):
                if counts[s] > counts[best]:
                    best = s
            est[v] = best
        hist[it] = _bit_errors(est, ref)
        if _syndrome_ok(est, edge_var, edge_lab, chk_ptr, mul):
            hist[it + 1:] = hist[it]
            return est, it, True, hist
    return est, max_iter, False, hist


@njit(cache=True, nogil=True)
def _wht(x):
    q = x.shape[0]
    h = 1
    while h < q:
        for i in range(0, q, 2 * h):
            for j in range(i, i + h):
                a = x[j]
                b = x[j + h]
                x[j] = a + b
                x[j + h] = a - b
        h *= 2


@njit(cache=True, nogil=True)
def qspa_check_update(v2c, edge_lab, chk_ptr, mul, floor):
    E, q = v2c.shape
    m = chk_ptr.shape[0] - 1
    out = np.empty_like(v2c)
    dmax = 0
    for c in range(m):
        if chk_ptr[c + 1] - chk_ptr[c] > dmax:
            dmax = chk_ptr[c + 1] - chk_ptr[c]
    spectra = np.empty((dmax, q))
    fwd = np.empty((dmax + 1, q))
    bwd = np.empty((dmax + 1, q))
    tmp = np.empty(q)
    for c in range(m):
        lo = chk_ptr[c]
        d = chk_ptr[c + 1] - lo
        for j in range(d):
            h = edge_lab[lo + j]
            for x in range(q):
                spectra[j, mul[h, x]] = v2c[lo + j, x]
            _wht(spectra[j])
        fwd[0, :] = 1.0
        for j in range(d):
            for x in range(q):
                fwd[j + 1, x] = fwd[j, x] * spectra[j, x]
        bwd[d, :] = 1.0
        for j in range(d - 1, -1, -1):
            for x in range(q):
                bwd[j, x] = bwd[j + 1, x] * spectra[j, x]
        for j in range(d):
            for x in range(q):
                tmp[x] = fwd[j, x] * bwd[j + 1, x]
            _wht(tmp)
            h = edge_lab[lo + j]
            tot = 0.0
            for x in range(q):
                val = tmp[mul[h, x]] / q
                if val < floor:
                    val = floor
                elif val > 1.0:
                    val = 1.0
                out[lo + j, x] = val
                tot += val
            for x in range(q):
                out[lo + j, x] /= tot
    return out


@njit(cache=True, nogil=True)
def qspa_var_update(c2v, ch_log, var_ptr, var_edges, floor):
    E, q = c2v.shape
    n = ch_log.shape[0]
    v2c = np.empty_like(c2v)
    total = np.empty((n, q))
    lg = np.log(c2v)
    row = np.empty(q)
    for v in range(n):
        for x in range(q):
            total[v, x] = ch_log[v, x]
        for a in range(var_ptr[v], var_ptr[v + 1]):
            e = var_edges[a]
            for x in range(q):
                total[v, x] += lg[e, x]
        for a in range(var_ptr[v], var_ptr[v + 1]):
            e = var_edges[a]
            mx = -np.inf
            for x in range(q):
                row[x] = total[v, x] - lg[e, x]
                if row[x] > mx:
                    mx = row[x]
            tot = 0.0
            for x in range(q):
                row[x] = np.exp(row[x] - mx)
                tot += row[x]
            tot2 = 0.0
            for x in range(q):
                val = row[x] / tot
                if val < floor:
                    val = floor
                row[x] = val
                tot2 += val
            for x in range(q):
                v2c[e, x] = row[x] / tot2
    return v2c, total


@njit(cache=True, nogil=True)
def _softmax_rows(a, floor):
    out = np.empty_like(a)
    q = a.shape[1]
    for r in range(a.shape[0]):
        mx = -np.inf
        for x in range(q):
            if a[r, x] > mx:
                mx = a[r, x]
        tot = 0.0
        for x in range(q):
            out[r, x] = np.exp(a[r, x] - mx)
            tot += out[r, x]
        tot2 = 0.0
        for x in range(q):
            val = out[r, x] / tot
            if val < floor:
                val = floor
            out[r, x] = val
            tot2 += val
        for x in range(q):
            out[r, x] /= tot2
    return out


@njit(cache=True, nogil=True)
def _argmax_rows(a):
    out = np.empty(a.shape[0], dtype=np.int64)
    for r in range(a.shape[0]):
        best = 0
        for x in range(1, a.shape[1]):
            if a[r, x] > a[r, best]:
                best = x
        out[r] = best
    return out


@njit(cache=True, nogil=True)
def qspa_decode(edge_var, edge_lab, chk_ptr, var_ptr, var_edges, mul, ch_log, max_iter, ref, floor):
    hist = np.full(max_iter + 1, -1, dtype=np.int64)
    est = _argmax_rows(ch_log)
    hist[0] = _bit_errors(est, ref)
    if _syndrome_ok(est, edge_var, edge_lab, chk_ptr, mul):
        return est, 0, True, hist
    E = edge_var.shape[0]
    q = ch_log.shape[1]
    init = np.empty((E, q))
    for e in range(E):
        init[e, :] = ch_log[edge_var[e], :]
    v2c = _softmax_rows(init, floor)
    for it in range(1, max_iter + 1):
        c2v = qspa_check_update(v2c, edge_lab, chk_ptr, mul, floor)
        v2c, total = qspa_var_update(c2v, ch_log, var_ptr, var_edges, floor)
        est = _argmax_rows(total)
        hist[it] = _bit_errors(est, ref)
        if _syndrome_ok(est, edge_var, edge_lab, chk_ptr, mul):
            hist[it + 1:] = hist[it]
            return est, it, True, hist
    return est, max_iter, False, hist
