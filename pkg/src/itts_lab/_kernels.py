"""Hot loops: same-padded convolution, LSTM scan, CART growth, tree prediction.

Each kernel exists as ``*_nb`` (numba) and ``*_np`` (numpy). The two are
written to accumulate in the same order, so per-element results do not
depend on how many rows are computed at once. That property is what lets
the forward-state cache reproduce uncached results bit for bit.
"""

import numpy as np

from ._accel import USE_NUMBA, njit

# ---------------------------------------------------------------------------
# convolution


@njit
def conv1d_relu_nb(x, w, b, start, stop):
    L, cin = x.shape
    width, _, cout = w.shape
    r = width // 2
    out = np.empty((stop - start, cout), dtype=np.float32)
    acc = np.empty(cout, dtype=np.float32)
    for t in range(start, stop):
        for o in range(cout):
            acc[o] = b[o]
        for j in range(width):
            src = t + j - r
            if src < 0 or src >= L:
                continue
            for i in range(cin):
                xi = x[src, i]
                for o in range(cout):
                    acc[o] += xi * w[j, i, o]
        for o in range(cout):
            v = acc[o]
            out[t - start, o] = v if v > 0 else np.float32(0.0)
    return out


def conv1d_relu_np(x, w, b, start, stop):
    L, cin = x.shape
    width, _, cout = w.shape
    r = width // 2
    rows = np.arange(start, stop)
    out = np.empty((stop - start, cout), dtype=np.float32)
    out[:] = b
    for j in range(width):
        src = rows + j - r
        ok = (src >= 0) & (src < L)
        if not ok.any():
            continue
        dst = np.flatnonzero(ok)
        xs = x[src[ok]]
        for i in range(cin):
            out[dst] += xs[:, i : i + 1] * w[j, i]
    return np.maximum(out, np.float32(0.0))


# ---------------------------------------------------------------------------
# LSTM


@njit
def input_projection_nb(x, w_in, bias):
    L, nin = x.shape
    g4 = bias.shape[0]
    out = np.empty((L, g4), dtype=np.float32)
    for t in range(L):
        for g in range(g4):
            out[t, g] = bias[g]
        for i in range(nin):
            xi = x[t, i]
            for g in range(g4):
                out[t, g] += xi * w_in[i, g]
    return out


def input_projection_np(x, w_in, bias):
    out = np.empty((x.shape[0], bias.shape[0]), dtype=np.float32)
    out[:] = bias
    for i in range(x.shape[1]):
        out += x[:, i : i + 1] * w_in[i]
    return out


@njit
def lstm_scan_nb(xp, w_rec, h0, c0, start, stop, step):
    """Run the recurrence over ``range(start, stop, step)``.

    ``xp`` holds the precomputed input projections (gate order i, f, g, o).
    Rows of the returned state arrays that were not visited are left zero.
    """
    L, g4 = xp.shape
    H = g4 // 4
    hs = np.zeros((L, H), dtype=np.float32)
    cs = np.zeros((L, H), dtype=np.float32)
    h = h0.copy()
    c = c0.copy()
    gates = np.empty(g4, dtype=np.float32)
    one = np.float32(1.0)
    for t in range(start, stop, step):
        for g in range(g4):
            gates[g] = xp[t, g]
        for i in range(H):
            hi = h[i]
            for g in range(g4):
                gates[g] += hi * w_rec[i, g]
        for u in range(H):
            ig = one / (one + np.exp(-gates[u]))
            fg = one / (one + np.exp(-gates[H + u]))
            gg = np.tanh(gates[2 * H + u])
            og = one / (one + np.exp(-gates[3 * H + u]))
            c[u] = fg * c[u] + ig * gg
            h[u] = og * np.tanh(c[u])
        for u in range(H):
            hs[t, u] = h[u]
            cs[t, u] = c[u]
    return hs, cs


def _sigmoid32(v):
    one = np.float32(1.0)
    return one / (one + np.exp(-v))


def lstm_scan_np(xp, w_rec, h0, c0, start, stop, step):
    L, g4 = xp.shape
    H = g4 // 4
    hs = np.zeros((L, H), dtype=np.float32)
    cs = np.zeros((L, H), dtype=np.float32)
    h = h0.copy()
    c = c0.copy()
    for t in range(start, stop, step):
        gates = xp[t].copy()
        for i in range(H):
            gates += h[i] * w_rec[i]
        ig = _sigmoid32(gates[:H])
        fg = _sigmoid32(gates[H : 2 * H])
        gg = np.tanh(gates[2 * H : 3 * H])
        og = _sigmoid32(gates[3 * H :])
        c = fg * c + ig * gg
        h = og * np.tanh(c)
        hs[t] = h
        cs[t] = c
    return hs, cs


# ---------------------------------------------------------------------------
# CART (weighted, exhaustive thresholds, MSE criterion)
#
# Node arrays: feature (-1 for leaves), threshold, left, right, value,
# weight (sum of sample weights), impurity (weighted variance).
# Samples go left when x <= threshold.

_REL_TOL = 1e-12


@njit
def _better(score, best):
    return score > best + _REL_TOL * abs(best)


@njit
def grow_tree_nb(X, y, w, presorted):
    n, F = X.shape
    # active samples, kept in ascending index order
    n_act = 0
    for s in range(n):
        if w[s] > 0:
            n_act += 1
    idx = np.empty(n_act, dtype=np.int64)
    pos = 0
    for s in range(n):
        if w[s] > 0:
            idx[pos] = s
            pos += 1
    order = np.empty((F, n_act), dtype=np.int64)
    for f in range(F):
        pos = 0
        for q in range(n):
            s = presorted[f, q]
            if w[s] > 0:
                order[f, pos] = s
                pos += 1

    cap = 2 * n_act + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap, dtype=np.float64)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap, dtype=np.float64)
    weight = np.zeros(cap, dtype=np.float64)
    impurity = np.zeros(cap, dtype=np.float64)

    go_left = np.zeros(n, dtype=np.bool_)
    buf = np.empty(n_act, dtype=np.int64)

    stack_node = np.empty(cap, dtype=np.int64)
    stack_lo = np.empty(cap, dtype=np.int64)
    stack_hi = np.empty(cap, dtype=np.int64)
    sp = 0
    n_nodes = 1
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = n_act
    sp = 1

    while sp > 0:
        sp -= 1
        node = stack_node[sp]
        lo = stack_lo[sp]
        hi = stack_hi[sp]

        sw = 0.0
        swy = 0.0
        swyy = 0.0
        for q in range(lo, hi):
            s = idx[q]
            sw += w[s]
            swy += w[s] * y[s]
            swyy += w[s] * y[s] * y[s]
        mean = swy / sw
        weight[node] = sw
        value[node] = mean
        imp = swyy / sw - mean * mean
        impurity[node] = imp if imp > 0.0 else 0.0

        if hi - lo < 2:
            continue
        pure = True
        y0 = y[idx[lo]]
        for q in range(lo + 1, hi):
            if y[idx[q]] != y0:
                pure = False
                break
        if pure:
            continue

        best_f = -1
        best_thr = 0.0
        best_score = -np.inf
        for f in range(F):
            wl = 0.0
            syl = 0.0
            for q in range(lo, hi - 1):
                s = order[f, q]
                wl += w[s]
                syl += w[s] * y[s]
                xa = X[s, f]
                xb = X[order[f, q + 1], f]
                if xb <= xa:
                    continue
                wr = sw - wl
                syr = swy - syl
                score = syl * syl / wl + syr * syr / wr
                if best_f < 0 or _better(score, best_score):
                    best_f = f
                    best_score = score
                    thr = (xa + xb) / 2.0
                    if thr >= xb:
                        thr = xa
                    best_thr = thr
        if best_f < 0:
            continue

        for q in range(lo, hi):
            s = idx[q]
            go_left[s] = X[s, best_f] <= best_thr
        # stable partition of every ordering plus the index list
        n_left = 0
        for f in range(F + 1):
            a = lo
            bq = 0
            for q in range(lo, hi):
                s = order[f, q] if f < F else idx[q]
                if go_left[s]:
                    if f < F:
                        order[f, a] = s
                    else:
                        idx[a] = s
                    a += 1
                else:
                    buf[bq] = s
                    bq += 1
            for q in range(bq):
                if f < F:
                    order[f, a + q] = buf[q]
                else:
                    idx[a + q] = buf[q]
            n_left = a - lo

        li = n_nodes
        ri = n_nodes + 1
        n_nodes += 2
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = li
        right[node] = ri
        # right pushed first so the left subtree is finished first
        stack_node[sp] = ri
        stack_lo[sp] = lo + n_left
        stack_hi[sp] = hi
        sp += 1
        stack_node[sp] = li
        stack_lo[sp] = lo
        stack_hi[sp] = lo + n_left
        sp += 1

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy(), weight[:n_nodes].copy(),
            impurity[:n_nodes].copy())


def _node_stats_np(yv, wv):
    sw = 0.0
    swy = 0.0
    swyy = 0.0
    # sequential sums in index order, matching the compiled kernel
    for wi, yi in zip(wv.tolist(), yv.tolist()):
        sw += wi
        swy += wi * yi
        swyy += wi * yi * yi
    return sw, swy, swyy


def grow_tree_np(X, y, w, presorted):
    n, F = X.shape
    active = w > 0
    feature, threshold, left, right = [], [], [], []
    value, weight, impurity = [], [], []

    def new_node():
        for arr, v in ((feature, -1), (threshold, 0.0), (left, -1), (right, -1),
                       (value, 0.0), (weight, 0.0), (impurity, 0.0)):
            arr.append(v)
        return len(feature) - 1

    root = new_node()
    stack = [(root, np.flatnonzero(active))]
    while stack:
        node, idx = stack.pop()
        yv = y[idx]
        wv = w[idx]
        sw, swy, swyy = _node_stats_np(yv, wv)
        mean = swy / sw
        weight[node] = sw
        value[node] = mean
        imp = swyy / sw - mean * mean
        impurity[node] = imp if imp > 0.0 else 0.0
        if len(idx) < 2 or np.all(yv == yv[0]):
            continue

        best_f, best_thr, best_score = -1, 0.0, -np.inf
        for f in range(F):
            xs = X[idx, f]
            o = np.argsort(xs, kind="stable")
            xo = xs[o]
            wo = wv[o]
            wl = np.cumsum(wo)[:-1]
            syl = np.cumsum(wo * yv[o])[:-1]
            valid = xo[1:] > xo[:-1]
            if not valid.any():
                continue
            wr = sw - wl
            syr = swy - syl
            with np.errstate(divide="ignore", invalid="ignore"):
                scores = syl * syl / wl + syr * syr / wr
            cand = np.flatnonzero(valid)
            sc = scores[cand]
            q = 0
            while q < len(cand):
                if best_f < 0:
                    hit = q
                else:
                    nxt = np.flatnonzero(sc[q:] > best_score + _REL_TOL * abs(best_score))
                    if len(nxt) == 0:
                        break
                    hit = q + nxt[0]
                c = cand[hit]
                best_f, best_score = f, sc[hit]
                xa, xb = xo[c], xo[c + 1]
                thr = (xa + xb) / 2.0
                best_thr = xa if thr >= xb else thr
                q = hit + 1
        if best_f < 0:
            continue
        mask = X[idx, best_f] <= best_thr
        li = new_node()
        ri = new_node()
        feature[node], threshold[node] = best_f, best_thr
        left[node], right[node] = li, ri
        stack.append((ri, idx[~mask]))
        stack.append((li, idx[mask]))

    return (np.asarray(feature, dtype=np.int64), np.asarray(threshold, dtype=np.float64),
            np.asarray(left, dtype=np.int64), np.asarray(right, dtype=np.int64),
            np.asarray(value, dtype=np.float64), np.asarray(weight, dtype=np.float64),
            np.asarray(impurity, dtype=np.float64))


@njit
def predict_tree_nb(feature, threshold, left, right, value, X):
    n = X.shape[0]
    out = np.empty(n, dtype=np.float64)
    for s in range(n):
        node = 0
        while feature[node] >= 0:
            if X[s, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[s] = value[node]
    return out


def predict_tree_np(feature, threshold, left, right, value, X):
    node = np.zeros(X.shape[0], dtype=np.int64)
    rows = np.arange(X.shape[0])
    while True:
        f = feature[node]
        internal = f >= 0
        if not internal.any():
            break
        r = rows[internal]
        nd = node[internal]
        goes_left = X[r, f[internal]] <= threshold[nd]
        node[internal] = np.where(goes_left, left[nd], right[nd])
    return value[node]


if USE_NUMBA:
    conv1d_relu = conv1d_relu_nb
    input_projection = input_projection_nb
    lstm_scan = lstm_scan_nb
    grow_tree = grow_tree_nb
    predict_tree = predict_tree_nb
else:
    conv1d_relu = conv1d_relu_np
    input_projection = input_projection_np
    lstm_scan = lstm_scan_np
    grow_tree = grow_tree_np
    predict_tree = predict_tree_np
