"""Array-level honest regression tree builder and forest predictor.

Trees are grown greedily by variance reduction on a *structure* sample while
leaf values are means over a disjoint *estimation* sample.  Everything works
on flat numpy arrays so the hot loops compile with numba and release the GIL
(tree building parallelizes across threads).

Split search: for each of ``mtry`` randomly chosen features, candidate
thresholds are the midpoints between consecutive sorted unique values.
Features taking few integer values (ages, one-hot dummies, a treatment flag)
use a bucket-count scan instead of a sort; both paths visit thresholds in
ascending order and break ties toward the first candidate, so results are
identical and deterministic.
"""

from __future__ import annotations

import numpy as np
from numba import njit

#: integer-valued features with value range at most this use the bucket scan.
_BUCKET_RANGE = 64


@njit(cache=True, nogil=True)
def build_tree(Xs, ys, Xe, ye, min_node, mtry, rand, feat, thr, left, right, value, est_n):
    """Grow one honest tree; returns the number of nodes written.

    Xs/ys: structure rows (ys centered for numerically stable scoring).
    Xe/ye: estimation rows (raw targets; leaf values are their means).
    rand: pre-drawn uniforms consumed for per-node feature subsampling.
    Output arrays are preallocated by the caller; feat[node] == -1 marks a
    leaf.  Leaves with no estimation rows inherit the nearest ancestor's
    estimation mean.
    """
    ns = Xs.shape[0]
    ne = Xe.shape[0]
    p = Xs.shape[1]
    sidx = np.arange(ns)
    eidx = np.arange(ne)
    cap = 2 * ns + 2
    stack = np.empty((cap, 5), dtype=np.int64)
    inherit = np.empty(cap, dtype=np.float64)
    featbuf = np.empty(p, dtype=np.int64)
    bcnt = np.empty(_BUCKET_RANGE + 1, dtype=np.int64)
    bsum = np.empty(_BUCKET_RANGE + 1, dtype=np.float64)
    n_nodes = 1
    top = 0
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = ns
    stack[0, 3] = 0
    stack[0, 4] = ne
    inherit[0] = 0.0
    rcur = 0
    rlen = rand.shape[0]
    while top >= 0:
        node = stack[top, 0]
        slo = stack[top, 1]
        shi = stack[top, 2]
        elo = stack[top, 3]
        ehi = stack[top, 4]
        inh = inherit[top]
        top -= 1
        m = shi - slo
        if ehi > elo:
            acc = 0.0
            for k in range(elo, ehi):
                acc += ye[eidx[k]]
            node_mean = acc / (ehi - elo)
        else:
            node_mean = inh
        best_f = -1
        best_t = 0.0
        if m >= 2 * min_node:
            tot = 0.0
            for k in range(slo, shi):
                tot += ys[sidx[k]]
            base = -(tot * tot) / m
            best_score = base
            for k in range(p):
                featbuf[k] = k
            # mtry features drawn without replacement; a node whose sampled
            # features are all locally constant becomes a leaf (reference
            # random-forest semantics, no redraw).
            for t in range(mtry):
                r = rand[rcur % rlen]
                rcur += 1
                j = t + int(r * (p - t))
                if j >= p:
                    j = p - 1
                tmp = featbuf[t]
                featbuf[t] = featbuf[j]
                featbuf[j] = tmp
                f = featbuf[t]
                vmin = Xs[sidx[slo], f]
                vmax = vmin
                int_ok = True
                for k in range(slo, shi):
                    v = Xs[sidx[k], f]
                    if v < vmin:
                        vmin = v
                    if v > vmax:
                        vmax = v
                    if int_ok and v != np.floor(v):
                        int_ok = False
                if vmax == vmin:
                    continue
                if int_ok and vmax - vmin <= _BUCKET_RANGE:
                    nbins = int(vmax - vmin) + 1
                    for b in range(nbins):
                        bcnt[b] = 0
                        bsum[b] = 0.0
                    for k in range(slo, shi):
                        b = int(Xs[sidx[k], f] - vmin)
                        bcnt[b] += 1
                        bsum[b] += ys[sidx[k]]
                    nl = 0
                    suml = 0.0
                    prev = -1
                    for b in range(nbins):
                        if bcnt[b] == 0:
                            continue
                        if prev >= 0 and nl >= min_node and m - nl >= min_node:
                            sr = tot - suml
                            sc = -(suml * suml / nl + sr * sr / (m - nl))
                            if sc < best_score:
                                best_score = sc
                                best_f = f
                                best_t = 0.5 * ((vmin + prev) + (vmin + b))
                        nl += bcnt[b]
                        suml += bsum[b]
                        prev = b
                else:
                    vals = np.empty(m, dtype=np.float64)
                    for k in range(m):
                        vals[k] = Xs[sidx[slo + k], f]
                    order = np.argsort(vals, kind="mergesort")
                    tg = np.empty(m, dtype=np.float64)
                    for k in range(m):
                        tg[k] = ys[sidx[slo + order[k]]]
                    vs = vals[order]
                    csum = 0.0
                    for k in range(m - 1):
                        csum += tg[k]
                        nl = k + 1
                        if nl < min_node:
                            continue
                        if m - nl < min_node:
                            break
                        if vs[k] == vs[k + 1]:
                            continue
                        sr = tot - csum
                        sc = -(csum * csum / nl + sr * sr / (m - nl))
                        if sc < best_score:
                            best_score = sc
                            best_f = f
                            best_t = 0.5 * (vs[k] + vs[k + 1])
        if best_f < 0:
            feat[node] = -1
            value[node] = node_mean
            est_n[node] = ehi - elo
            continue
        i = slo
        j = shi - 1
        while i <= j:
            if Xs[sidx[i], best_f] <= best_t:
                i += 1
            else:
                tmp = sidx[i]
                sidx[i] = sidx[j]
                sidx[j] = tmp
                j -= 1
        smid = i
        i = elo
        j = ehi - 1
        while i <= j:
            if Xe[eidx[i], best_f] <= best_t:
                i += 1
            else:
                tmp = eidx[i]
                eidx[i] = eidx[j]
                eidx[j] = tmp
                j -= 1
        emid = i
        lid = n_nodes
        rid = n_nodes + 1
        n_nodes += 2
        feat[node] = best_f
        thr[node] = best_t
        left[node] = lid
        right[node] = rid
        value[node] = node_mean
        est_n[node] = ehi - elo
        top += 1
        stack[top, 0] = lid
        stack[top, 1] = slo
        stack[top, 2] = smid
        stack[top, 3] = elo
        stack[top, 4] = emid
        inherit[top] = node_mean
        top += 1
        stack[top, 0] = rid
        stack[top, 1] = smid
        stack[top, 2] = shi
        stack[top, 3] = emid
        stack[top, 4] = ehi
        inherit[top] = node_mean
    return n_nodes


@njit(cache=True, nogil=True)
def forest_predict(offsets, feat, thr, left, right, value, X, out):
    """Average leaf values over all trees for every row of X (into ``out``)."""
    n = X.shape[0]
    n_trees = offsets.shape[0] - 1
    for t in range(n_trees):
        base = offsets[t]
        for i in range(n):
            node = base
            while feat[node] >= 0:
                if X[i, feat[node]] <= thr[node]:
                    node = base + left[node]
                else:
                    node = base + right[node]
            out[i] += value[node]
    inv = 1.0 / n_trees
    for i in range(n):
        out[i] *= inv
