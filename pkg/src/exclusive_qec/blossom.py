"""Compiled maximum-weight matching (Edmonds' blossom algorithm).

A numba translation of the classic O(n^3) primal-dual algorithm, with the
recursive helpers rewritten as explicit stacks.  Weights must be integers,
which keeps every dual update exact.  :func:`min_weight_perfect_matching`
wraps it for the minimum-weight perfect matching problems produced by the
exclusive decoder.
"""

from __future__ import annotations

import numba
import numpy as np

__all__ = ["max_weight_matching", "min_weight_perfect_matching"]


@numba.njit(cache=True)
def max_weight_matching(ei, ej, ew, nvertex, maxcardinality):
    """Maximum-weight matching of the graph with integer edges ``(ei, ej, ew)``.

    Returns ``mate`` where ``mate[v]`` is the partner of ``v`` or -1.
    """
    nedge = ei.shape[0]
    mate = np.full(nvertex, -1, np.int64)
    if nedge == 0 or nvertex == 0:
        return mate
    maxweight = 0
    for k in range(nedge):
        if ew[k] > maxweight:
            maxweight = ew[k]
    n2 = 2 * nvertex
    endpoint = np.empty(2 * nedge, np.int64)
    for k in range(nedge):
        endpoint[2 * k] = ei[k]
        endpoint[2 * k + 1] = ej[k]
    deg = np.zeros(nvertex + 1, np.int64)
    for k in range(nedge):
        deg[ei[k] + 1] += 1
        deg[ej[k] + 1] += 1
    nbptr = np.cumsum(deg)
    fill = nbptr[:-1].copy()
    nbend = np.empty(2 * nedge, np.int64)
    for k in range(nedge):
        nbend[fill[ei[k]]] = 2 * k + 1
        fill[ei[k]] += 1
        nbend[fill[ej[k]]] = 2 * k
        fill[ej[k]] += 1

    label = np.zeros(n2, np.int64)
    labelend = np.full(n2, -1, np.int64)
    inblossom = np.arange(nvertex)
    blossomparent = np.full(n2, -1, np.int64)
    childs = np.full((n2, nvertex + 1), -1, np.int64)
    endps = np.full((n2, nvertex + 1), -1, np.int64)
    nchild = np.zeros(n2, np.int64)
    blossombase = np.full(n2, -1, np.int64)
    for v in range(nvertex):
        blossombase[v] = v
    bestedge = np.full(n2, -1, np.int64)
    bbe = np.full((n2, n2), -1, np.int64)
    nbbe = np.full(n2, -1, np.int64)  # -1 means "no list"
    unused = np.empty(nvertex, np.int64)
    nunused = nvertex
    for i in range(nvertex):
        unused[i] = nvertex + i
    dualvar = np.zeros(n2, np.int64)
    for v in range(nvertex):
        dualvar[v] = maxweight
    allowedge = np.zeros(nedge, np.bool_)
    queue = np.empty(4 * n2 + 4, np.int64)
    qlen = 0
    stk = np.empty(4 * n2 + 4, np.int64)
    leafa = np.empty(nvertex, np.int64)
    leafb = np.empty(nvertex, np.int64)
    bestedgeto = np.full(n2, -1, np.int64)
    path_tmp = np.empty(nvertex + 1, np.int64)
    endp_tmp = np.empty(nvertex + 1, np.int64)
    tasks_b = np.empty(4 * n2 + 4, np.int64)
    tasks_v = np.empty(4 * n2 + 4, np.int64)

    def slack(k):
        return dualvar[ei[k]] + dualvar[ej[k]] - 2 * ew[k]

    def leaves(b, out):
        cnt = 0
        sp = 1
        stk[0] = b
        while sp > 0:
            sp -= 1
            x = stk[sp]
            if x < nvertex:
                out[cnt] = x
                cnt += 1
            else:
                for t in range(nchild[x]):
                    stk[sp] = childs[x, t]
                    sp += 1
        return cnt

    def assign_label(w, t, p, qlen):
        while True:
            b = inblossom[w]
            label[w] = t
            label[b] = t
            labelend[w] = p
            labelend[b] = p
            bestedge[w] = -1
            bestedge[b] = -1
            if t == 1:
                cnt = leaves(b, leafa)
                for i in range(cnt):
                    queue[qlen] = leafa[i]
                    qlen += 1
                return qlen
            base = blossombase[b]
            w = endpoint[mate[base]]
            t = 1
            p = mate[base] ^ 1

    def scan_blossom(v, w):
        np_ = 0
        base = -1
        while v != -1 or w != -1:
            b = inblossom[v]
            if label[b] & 4:
                base = blossombase[b]
                break
            path_tmp[np_] = b
            np_ += 1
            label[b] = 5
            if labelend[b] == -1:
                v = -1
            else:
                v = endpoint[labelend[b]]
                b = inblossom[v]
                v = endpoint[labelend[b]]
            if w != -1:
                tmp = v
                v = w
                w = tmp
        for i in range(np_):
            label[path_tmp[i]] = 1
        return base

    def add_blossom(base, k, qlen, nunused):
        v = ei[k]
        w = ej[k]
        bb = inblossom[base]
        bv = inblossom[v]
        bw = inblossom[w]
        nunused -= 1
        b = unused[nunused]
        blossombase[b] = base
        blossomparent[b] = -1
        blossomparent[bb] = b
        np_ = 0
        while bv != bb:
            blossomparent[bv] = b
            path_tmp[np_] = bv
            endp_tmp[np_] = labelend[bv]
            np_ += 1
            v = endpoint[labelend[bv]]
            bv = inblossom[v]
        # path = [bb] + reversed(path_tmp), endps = reversed(endp_tmp) + [2k]
        childs[b, 0] = bb
        for i in range(np_):
            childs[b, 1 + i] = path_tmp[np_ - 1 - i]
            endps[b, i] = endp_tmp[np_ - 1 - i]
        endps[b, np_] = 2 * k
        cnt = np_ + 1
        while bw != bb:
            blossomparent[bw] = b
            childs[b, cnt] = bw
            endps[b, cnt] = labelend[bw] ^ 1
            cnt += 1
            w = endpoint[labelend[bw]]
            bw = inblossom[w]
        nchild[b] = cnt
        label[b] = 1
        labelend[b] = labelend[bb]
        dualvar[b] = 0
        nl = leaves(b, leafa)
        for i in range(nl):
            v = leafa[i]
            if label[inblossom[v]] == 2:
                queue[qlen] = v
                qlen += 1
            inblossom[v] = b
        for i in range(n2):
            bestedgeto[i] = -1
        for ci in range(cnt):
            bv = childs[b, ci]
            if nbbe[bv] == -1:
                nl = leaves(bv, leafb)
                for li in range(nl):
                    lv = leafb[li]
                    for pp in range(nbptr[lv], nbptr[lv + 1]):
                        kk = nbend[pp] // 2
                        i = ei[kk]
                        j = ej[kk]
                        if inblossom[j] == b:
                            tmp = i
                            i = j
                            j = tmp
                        bj = inblossom[j]
                        if bj != b and label[bj] == 1 and (bestedgeto[bj] == -1 or slack(kk) < slack(bestedgeto[bj])):
                            bestedgeto[bj] = kk
            else:
                for li in range(nbbe[bv]):
                    kk = bbe[bv, li]
                    i = ei[kk]
                    j = ej[kk]
                    if inblossom[j] == b:
                        tmp = i
                        i = j
                        j = tmp
                    bj = inblossom[j]
                    if bj != b and label[bj] == 1 and (bestedgeto[bj] == -1 or slack(kk) < slack(bestedgeto[bj])):
                        bestedgeto[bj] = kk
            nbbe[bv] = -1
            bestedge[bv] = -1
        m = 0
        for i in range(n2):
            if bestedgeto[i] != -1:
                bbe[b, m] = bestedgeto[i]
                m += 1
        nbbe[b] = m
        bestedge[b] = -1
        for i in range(m):
            kk = bbe[b, i]
            if bestedge[b] == -1 or slack(kk) < slack(bestedge[b]):
                bestedge[b] = kk
        return qlen, nunused

    def expand_blossom(b0, endstage, qlen, nunused):
        # Explicit stack replaces recursion on zero-dual sub-blossoms.
        ns = 1
        tasks_b[0] = b0
        while ns > 0:
            ns -= 1
            b = tasks_b[ns]
            for ci in range(nchild[b]):
                s = childs[b, ci]
                blossomparent[s] = -1
                if s < nvertex:
                    inblossom[s] = s
                elif endstage and dualvar[s] == 0:
                    tasks_b[ns] = s
                    ns += 1
                else:
                    nl = leaves(s, leafa)
                    for i in range(nl):
                        inblossom[leafa[i]] = s
            if (not endstage) and label[b] == 2:
                entrychild = inblossom[endpoint[labelend[b] ^ 1]]
                L = nchild[b]
                j = 0
                for i in range(L):
                    if childs[b, i] == entrychild:
                        j = i
                        break
                if j & 1:
                    j -= L
                    jstep = 1
                    endptrick = 0
                else:
                    jstep = -1
                    endptrick = 1
                p = labelend[b]
                while j != 0:
                    label[endpoint[p ^ 1]] = 0
                    label[endpoint[endps[b, (j - endptrick) % L] ^ endptrick ^ 1]] = 0
                    qlen = assign_label(endpoint[p ^ 1], 2, p, qlen)
                    allowedge[endps[b, (j - endptrick) % L] // 2] = True
                    j += jstep
                    p = endps[b, (j - endptrick) % L] ^ endptrick
                    allowedge[p // 2] = True
                    j += jstep
                bv = childs[b, j % L]
                label[endpoint[p ^ 1]] = 2
                label[bv] = 2
                labelend[endpoint[p ^ 1]] = p
                labelend[bv] = p
                bestedge[bv] = -1
                j += jstep
                while childs[b, j % L] != entrychild:
                    bv = childs[b, j % L]
                    if label[bv] == 1:
                        j += jstep
                        continue
                    nl = leaves(bv, leafb)
                    found = -1
                    for i in range(nl):
                        if label[leafb[i]] != 0:
                            found = leafb[i]
                            break
                    if found >= 0:
                        v = found
                        label[v] = 0
                        label[endpoint[mate[blossombase[bv]]]] = 0
                        qlen = assign_label(v, 2, labelend[v], qlen)
                    j += jstep
            label[b] = -1
            labelend[b] = -1
            nchild[b] = 0
            blossombase[b] = -1
            nbbe[b] = -1
            bestedge[b] = -1
            unused[nunused] = b
            nunused += 1
        return qlen, nunused

    def augment_blossom(b0, v0):
        # Sub-blossom augmentations touch disjoint structures, so they are
        # queued instead of recursed into.
        nt = 1
        tasks_b[0] = b0
        tasks_v[0] = v0
        while nt > 0:
            nt -= 1
            b = tasks_b[nt]
            v = tasks_v[nt]
            t = v
            while blossomparent[t] != b:
                t = blossomparent[t]
            if t >= nvertex:
                tasks_b[nt] = t
                tasks_v[nt] = v
                nt += 1
            L = nchild[b]
            i = 0
            for q in range(L):
                if childs[b, q] == t:
                    i = q
                    break
            j = i
            if i & 1:
                j -= L
                jstep = 1
                endptrick = 0
            else:
                jstep = -1
                endptrick = 1
            while j != 0:
                j += jstep
                t = childs[b, j % L]
                p = endps[b, (j - endptrick) % L] ^ endptrick
                if t >= nvertex:
                    tasks_b[nt] = t
                    tasks_v[nt] = endpoint[p]
                    nt += 1
                j += jstep
                t = childs[b, j % L]
                if t >= nvertex:
                    tasks_b[nt] = t
                    tasks_v[nt] = endpoint[p ^ 1]
                    nt += 1
                mate[endpoint[p]] = p ^ 1
                mate[endpoint[p ^ 1]] = p
            # rotate so the child containing v comes first
            for q in range(L):
                path_tmp[q] = childs[b, (q + i) % L]
                endp_tmp[q] = endps[b, (q + i) % L]
            for q in range(L):
                childs[b, q] = path_tmp[q]
                endps[b, q] = endp_tmp[q]
            blossombase[b] = v

    def augment_matching(k):
        for side in range(2):
            if side == 0:
                s = ei[k]
                p = 2 * k + 1
            else:
                s = ej[k]
                p = 2 * k
            while True:
                bs = inblossom[s]
                if bs >= nvertex:
                    augment_blossom(bs, s)
                mate[s] = p
                if labelend[bs] == -1:
                    break
                t = endpoint[labelend[bs]]
                bt = inblossom[t]
                s = endpoint[labelend[bt]]
                j = endpoint[labelend[bt] ^ 1]
                if bt >= nvertex:
                    augment_blossom(bt, j)
                mate[j] = labelend[bt]
                p = labelend[bt] ^ 1

    for _stage in range(nvertex):
        label[:] = 0
        bestedge[:] = -1
        for b in range(nvertex, n2):
            nbbe[b] = -1
        allowedge[:] = False
        qlen = 0
        for v in range(nvertex):
            if mate[v] == -1 and label[inblossom[v]] == 0:
                qlen = assign_label(v, 1, -1, qlen)
        augmented = False
        while True:
            while qlen > 0 and not augmented:
                qlen -= 1
                v = queue[qlen]
                for pp in range(nbptr[v], nbptr[v + 1]):
                    p = nbend[pp]
                    k = p // 2
                    w = endpoint[p]
                    if inblossom[v] == inblossom[w]:
                        continue
                    kslack = 0
                    if not allowedge[k]:
                        kslack = slack(k)
                        if kslack <= 0:
                            allowedge[k] = True
                    if allowedge[k]:
                        if label[inblossom[w]] == 0:
                            qlen = assign_label(w, 2, p ^ 1, qlen)
                        elif label[inblossom[w]] == 1:
                            base = scan_blossom(v, w)
                            if base >= 0:
                                qlen, nunused = add_blossom(base, k, qlen, nunused)
                            else:
                                augment_matching(k)
                                augmented = True
                                break
                        elif label[w] == 0:
                            label[w] = 2
                            labelend[w] = p ^ 1
                    elif label[inblossom[w]] == 1:
                        b = inblossom[v]
                        if bestedge[b] == -1 or kslack < slack(bestedge[b]):
                            bestedge[b] = k
                    elif label[w] == 0:
                        if bestedge[w] == -1 or kslack < slack(bestedge[w]):
                            bestedge[w] = k
            if augmented:
                break
            deltatype = -1
            delta = 0
            deltaedge = -1
            deltablossom = -1
            if not maxcardinality:
                deltatype = 1
                delta = dualvar[0]
                for v in range(nvertex):
                    if dualvar[v] < delta:
                        delta = dualvar[v]
            for v in range(nvertex):
                if label[inblossom[v]] == 0 and bestedge[v] != -1:
                    dd = slack(bestedge[v])
                    if deltatype == -1 or dd < delta:
                        delta = dd
                        deltatype = 2
                        deltaedge = bestedge[v]
            for b in range(n2):
                if blossomparent[b] == -1 and label[b] == 1 and bestedge[b] != -1:
                    dd = slack(bestedge[b]) // 2
                    if deltatype == -1 or dd < delta:
                        delta = dd
                        deltatype = 3
                        deltaedge = bestedge[b]
            for b in range(nvertex, n2):
                if blossombase[b] >= 0 and blossomparent[b] == -1 and label[b] == 2:
                    if deltatype == -1 or dualvar[b] < delta:
                        delta = dualvar[b]
                        deltatype = 4
                        deltablossom = b
            if deltatype == -1:
                deltatype = 1
                delta = dualvar[0]
                for v in range(nvertex):
                    if dualvar[v] < delta:
                        delta = dualvar[v]
                if delta < 0:
                    delta = 0
            for v in range(nvertex):
                lb = label[inblossom[v]]
                if lb == 1:
                    dualvar[v] -= delta
                elif lb == 2:
                    dualvar[v] += delta
            for b in range(nvertex, n2):
                if blossombase[b] >= 0 and blossomparent[b] == -1:
                    if label[b] == 1:
                        dualvar[b] += delta
                    elif label[b] == 2:
                        dualvar[b] -= delta
            if deltatype == 1:
                break
            elif deltatype == 2:
                allowedge[deltaedge] = True
                i = ei[deltaedge]
                if label[inblossom[i]] == 0:
                    i = ej[deltaedge]
                queue[qlen] = i
                qlen += 1
            elif deltatype == 3:
                allowedge[deltaedge] = True
                queue[qlen] = ei[deltaedge]
                qlen += 1
            else:
                qlen, nunused = expand_blossom(deltablossom, False, qlen, nunused)
        if not augmented:
            break
        for b in range(nvertex, n2):
            if blossomparent[b] == -1 and blossombase[b] >= 0 and label[b] == 1 and dualvar[b] == 0:
                qlen, nunused = expand_blossom(b, True, qlen, nunused)

    for v in range(nvertex):
        if mate[v] >= 0:
            mate[v] = endpoint[mate[v]]
    return mate


@numba.njit(cache=True)
def min_weight_perfect_matching(ei, ej, ew, nvertex):
    """Minimum-weight perfect matching; returns ``(mate, weight)``.

    ``weight`` is -1 when no perfect matching exists.
    """
    big = 1
    for k in range(ew.shape[0]):
        big += abs(ew[k])
    mate = max_weight_matching(ei, ej, big - ew, nvertex, True)
    total = 0
    for v in range(nvertex):
        if mate[v] < 0:
            return mate, -1
    for k in range(ei.shape[0]):
        if mate[ei[k]] == ej[k]:
            total += ew[k]
    return mate, total
