"""Compiled batch projection of many rows onto one pivot.

The search is the same optimisation the weighted trie solves, reorganised for
speed: instead of materialising the trie for each row, coordinates are
bucketed digit by digit (least significant first) and subtrees are explored
in order of their optimistic bound.  A subtree whose bound exceeds the
incumbent cannot hold a minimal leaf and is skipped.  Ties between minimal
leaves are resolved by the digit-reversed key of ``c``, which is exactly the
order in which an ascending-digit depth-first traversal meets them.  The
incumbent starts at ``c = 0`` (smallest key, loss equal to the row's own
norm), so rows already orthogonal to the pivot are decided in a single pass.
"""

import numba as nb
import numpy as np

_BIG = np.int64(2**62)


@nb.njit(cache=True, nogil=True, inline="always")
def _mulmod(a, b, M, rM):
    # a, b < M <= 2**22, so a * b is exact in int64 and the float quotient is off by at most one
    z = a * b
    t = z - np.int64(z * rM) * M
    if t < 0:
        t += M
    elif t >= M:
        t -= M
    return t


@nb.njit(cache=True, nogil=True)
def project_rows_kernel(Y, C, rows, nu1, inv, p, E, pw, eps, dig, vtab, cval, clead, out_c, out_w):
    """Fill ``out_c``/``out_w`` with the optimal scalar and path weight of ``Y[rows]``.

    ``nu1[d]`` is the valuation of the pivot coordinate (E when it is zero),
    ``inv[d]`` the inverse modulo ``p**E`` of its unit part.  With
    ``z = y * inv[d] mod p**E`` the ratio digits are ``z``'s digits from
    position ``nu1[d]`` upward.  ``dig[x, k]`` is the k-th base-p digit of x and
    ``vtab[x]`` its valuation (both tabulated over ``range(p**E)``).  ``C`` holds
    the compact code ``v * p + leading digit`` of every entry of ``Y``, decoded
    by ``cval``/``clead``; the certificate pass reads only ``C``.
    """
    D = Y.shape[1]
    M = pw[E]
    rM = 1.0 / M
    idx = np.empty(D, np.int64)
    tmp = np.empty(D, np.int64)
    enu = np.empty(D, np.int64)
    edep = np.empty(D, np.int64)
    ez = np.empty(D, np.int64)
    cnt = np.zeros(p + 1, np.int64)
    start = np.zeros(p + 1, np.int64)
    cb = np.empty(p, np.int64)
    ccum = np.empty(p, np.int64)
    order = np.empty(p, np.int64)
    hcnt = np.empty(E * (E + 1) + 1, np.int64)
    sav = np.empty(E * p + 1, np.int64)
    S = D * E + 2
    s_lo = np.empty(S, np.int64)
    s_hi = np.empty(S, np.int64)
    s_lv = np.empty(S, np.int64)
    s_c = np.empty(S, np.int64)
    s_cum = np.empty(S, np.int64)
    s_bd = np.empty(S, np.int64)

    # per-pivot tables indexed by (coordinate, code): the slot each entry
    # counts into and where its potential saving goes (dummies hit junk slots)
    NC = cval.shape[0]
    HS = E * (E + 1) + 1
    SS = E * p + 1
    tp = np.empty((D, NC), np.int64)
    ti = np.empty((D, NC), np.int64)
    tv = np.empty((D, NC), np.int64)
    for d in range(D):
        n1 = nu1[d]
        li = inv[d] % p
        for code in range(NC):
            vy = cval[code]
            tp[d, code] = HS - 1
            ti[d, code] = SS - 1
            tv[d, code] = 0
            if n1 >= E or vy < n1:
                continue
            tp[d, code] = n1 * (E + 1) + vy - n1
            if vy < E:
                # leading digit of the ratio is lead(y) / lead(x) mod p
                ti[d, code] = (vy - n1) * p + (clead[code] * li) % p
                tv[d, code] = eps[vy]
    for ii in range(rows.shape[0]):
        i = rows[ii]
        # certificate pass: c = 0 is optimal unless some valuation class k
        # and leading digit r can save more than the class is forced to lose
        for k in range(HS):
            hcnt[k] = 0
        for k in range(SS):
            sav[k] = 0
        for d in range(D):
            code = C[i, d]
            hcnt[tp[d, code]] += 1
            sav[ti[d, code]] += tv[d, code]
        viable = False
        w_zero = 0
        for k in range(E):
            # pen = sum over coordinates with ratio valuation a > k of eps[n1 + k] - eps[n1 + a]
            pen = 0
            for a in range(k + 1, E + 1):
                for n1 in range(E - a + 1):
                    h = hcnt[n1 * (E + 1) + a]
                    pen += h * (eps[n1 + k] - eps[n1 + a])
            for r in range(1, p):
                if sav[k * p + r] > pen:
                    viable = True
        for n1 in range(E):
            for a in range(E - n1 + 1):
                w_zero += hcnt[n1 * (E + 1) + a] * eps[n1 + a]
        if not viable:
            out_c[ii] = 0
            out_w[ii] = w_zero
            continue

        m = 0
        w0 = 0
        for d in range(D):
            n1 = nu1[d]
            y = Y[i, d]
            if n1 >= E or vtab[y] < n1:
                continue
            enu[m] = n1
            edep[m] = E - n1
            ez[m] = _mulmod(y, inv[d], M, rM)
            idx[m] = m
            w0 += eps[n1]
            m += 1
        best_w = w_zero
        best_c = 0
        best_key = 0

        s_lo[0] = 0
        s_hi[0] = m
        s_lv[0] = 0
        s_c[0] = 0
        s_cum[0] = w0
        s_bd[0] = -_BIG
        top = 1
        while top > 0:
            top -= 1
            if s_bd[top] > best_w:
                continue
            lo = s_lo[top]
            hi = s_hi[top]
            j = s_lv[top]
            c = s_c[top]
            cum = s_cum[top]
            for r in range(p + 1):
                cnt[r] = 0
            leaf = True
            for k in range(lo, hi):
                e = idx[k]
                if edep[e] > j:
                    leaf = False
                    cnt[dig[ez[e], enu[e] + j] + 1] += 1
                else:
                    cnt[0] += 1
            if leaf:
                key = 0
                cc = c
                for _ in range(E):
                    key = key * p + cc % p
                    cc //= p
                if cum < best_w or (cum == best_w and key < best_key):
                    best_w = cum
                    best_c = c
                    best_key = key
                continue

            # stable counting sort: finished entries, then one bucket per digit
            start[0] = lo
            for r in range(1, p + 1):
                start[r] = start[r - 1] + cnt[r - 1]
            for r in range(p):
                cb[r] = 0
                ccum[r] = 0
            for k in range(lo, hi):
                e = idx[k]
                if edep[e] > j:
                    r = dig[ez[e], enu[e] + j]
                    tmp[start[r + 1]] = e
                    start[r + 1] += 1
                    ccum[r] += eps[enu[e] + j + 1] - eps[enu[e] + j]
                    cb[r] += eps[enu[e] + j]
                else:
                    tmp[start[0]] = e
                    start[0] += 1
            for k in range(lo, hi):
                idx[k] = tmp[k]

            nch = 0
            for r in range(p):
                if cnt[r + 1] > 0:
                    order[nch] = r
                    nch += 1
            # best bound first; insertion sort keeps equal bounds in digit order
            for a in range(1, nch):
                v = order[a]
                b = a - 1
                while b >= 0 and cb[order[b]] < cb[v]:
                    order[b + 1] = order[b]
                    b -= 1
                order[b + 1] = v
            for a in range(nch - 1, -1, -1):
                r = order[a]
                bd = cum - cb[r]
                if bd > best_w:
                    continue
                s_hi[top] = start[r + 1]
                s_lo[top] = start[r + 1] - cnt[r + 1]
                s_lv[top] = j + 1
                s_c[top] = c + r * pw[j]
                s_cum[top] = cum + ccum[r]
                s_bd[top] = bd
                top += 1
        out_c[ii] = best_c
        out_w[ii] = best_w


@nb.njit(cache=True, nogil=True)
def digit_tables(p, E):
    M = p**E
    dig = np.zeros((M, E), np.int8)
    vtab = np.zeros(M, np.int8)
    for x in range(M):
        t = x
        for k in range(E):
            dig[x, k] = t % p
            t //= p
        if x == 0:
            vtab[x] = E
        else:
            k = 0
            t = x
            while t % p == 0:
                t //= p
                k += 1
            vtab[x] = k
    return dig, vtab


@nb.njit(cache=True)
def code_tables(p, E, dig, vtab):
    M = p**E
    code = np.empty(M, np.int16)
    cval = np.empty((E + 1) * p, np.int64)
    clead = np.empty((E + 1) * p, np.int64)
    for v in range(E + 1):
        for r in range(p):
            cval[v * p + r] = v
            clead[v * p + r] = r
    for x in range(M):
        v = vtab[x]
        code[x] = v * p + (dig[x, v] if v < E else 0)
    return code, cval, clead


@nb.njit(cache=True)
def _inverse(a, m):
    # extended Euclid; a is a unit modulo m
    r0, r1 = m, a % m
    s0, s1 = 0, 1
    while r1 != 0:
        qt = r0 // r1
        r0, r1 = r1, r0 - qt * r1
        s0, s1 = s1, s0 - qt * s1
    return s0 % m


@nb.njit(cache=True)
def pivot_tables_kernel(x, p, E, pw, nu1, inv):
    for d in range(x.shape[0]):
        v = x[d]
        if v == 0:
            nu1[d] = E
            inv[d] = 0
            continue
        k = 0
        while v % p == 0:
            v //= p
            k += 1
        nu1[d] = k
        inv[d] = _inverse(v, pw[E])
