"""Exhaustive best-split regression tree for tiny datasets.

Every (feature, threshold) pair between consecutive distinct values is
scored by the weighted sum of squared errors of the two children, computed
directly from the member lists. Ties (within a relative 1e-12) keep the
first candidate in (feature, threshold) order.
"""


def _sse(ys, ws):
    W = sum(ws)
    mean = sum(y * w for y, w in zip(ys, ws)) / W
    return sum(w * (y - mean) ** 2 for y, w in zip(ys, ws))


def _leaf_value(ys, ws):
    return sum(y * w for y, w in zip(ys, ws)) / sum(ws)


def build(X, y, w=None, rows=None):
    """Nested dicts: {"leaf": value} or {"feature", "threshold", "left", "right"}."""
    n = len(y)
    if w is None:
        w = [1.0] * n
    if rows is None:
        rows = [i for i in range(n) if w[i] > 0]
    ys = [y[i] for i in rows]
    ws = [w[i] for i in rows]
    if len(rows) < 2 or len(set(ys)) == 1:
        return {"leaf": _leaf_value(ys, ws)}
    best = None
    for f in range(len(X[0])):
        values = sorted({X[i][f] for i in rows})
        for a, b in zip(values, values[1:]):
            thr = (a + b) / 2.0
            if thr >= b:
                thr = a
            left = [i for i in rows if X[i][f] <= thr]
            right = [i for i in rows if X[i][f] > thr]
            score = (_sse([y[i] for i in left], [w[i] for i in left])
                     + _sse([y[i] for i in right], [w[i] for i in right]))
            if best is None or score < best[0] - 1e-12 * max(abs(best[0]), 1e-300):
                best = (score, f, thr, left, right)
    if best is None:
        return {"leaf": _leaf_value(ys, ws)}
    _, f, thr, left, right = best
    return {"feature": f, "threshold": thr, "left": build(X, y, w, left), "right": build(X, y, w, right)}


def from_arrays(tree, node=0):
    """Convert a fitted package tree into the same nested form."""
    if tree.feature[node] < 0:
        return {"leaf": float(tree.value[node])}
    return {"feature": int(tree.feature[node]), "threshold": float(tree.threshold[node]),
            "left": from_arrays(tree, int(tree.left[node])), "right": from_arrays(tree, int(tree.right[node]))}
