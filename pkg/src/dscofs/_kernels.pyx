# cython: language_level=3
"""Compiled hot kernels; semantics mirror ``_fallback.py`` loop for loop.

All heavy loops run without the GIL so independent solves can share a
thread pool. Dense products go through the BLAS bundled with scipy.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, isfinite
from libc.stdlib cimport malloc, free
from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

cdef enum:
    CONVERGED = 0
    MAX_ITER = 1
    STALLED = 2
    NONFINITE = 3


cdef void _gemm(char ta, char tb, double alpha, double[:, ::1] A,
                double[:, ::1] B, double beta, double[:, ::1] C) noexcept nogil:
    # C = alpha op(A) op(B) + beta C for row-major operands: BLAS sees the
    # transposes, so compute C^T = op(B)^T op(A)^T.
    cdef int M = C.shape[0]
    cdef int N = C.shape[1]
    cdef int K = A.shape[1] if ta == b'N' else A.shape[0]
    cdef int lda = A.shape[1]
    cdef int ldb = B.shape[1]
    cdef int ldc = N
    dgemm(&tb, &ta, &N, &M, &K, &alpha, &B[0, 0], &ldb, &A[0, 0], &lda,
          &beta, &C[0, 0], &ldc)


# ---------------------------------------------------------------- selection

cdef double _kth_smallest(double* a, Py_ssize_t n, Py_ssize_t k) noexcept nogil:
    # three-way quickselect; tolerates long runs of equal values (zeros)
    cdef Py_ssize_t lo = 0, hi = n - 1, lt, gt, i
    cdef double pivot, tmp, x, y, z
    while lo < hi:
        x = a[lo]
        y = a[lo + (hi - lo) // 2]
        z = a[hi]
        if x > y:
            x, y = y, x
        if y > z:
            y = z
        if x > y:
            y = x
        pivot = y
        lt = lo
        gt = hi
        i = lo
        while i <= gt:
            if a[i] < pivot:
                tmp = a[lt]; a[lt] = a[i]; a[i] = tmp
                lt += 1
                i += 1
            elif a[i] > pivot:
                tmp = a[gt]; a[gt] = a[i]; a[i] = tmp
                gt -= 1
            else:
                i += 1
        if k < lt:
            hi = lt - 1
        elif k > gt:
            lo = gt + 1
        else:
            return pivot
    return a[k]


cdef void _keep_top(double* scores, Py_ssize_t n, Py_ssize_t budget,
                    char* keep) noexcept nogil:
    cdef Py_ssize_t i, kept = 0
    cdef double t
    cdef double* buf
    if budget <= 0:
        for i in range(n):
            keep[i] = 0
        return
    if budget >= n:
        for i in range(n):
            keep[i] = 1
        return
    buf = <double*> malloc(n * sizeof(double))
    for i in range(n):
        buf[i] = scores[i]
    t = _kth_smallest(buf, n, n - budget)
    free(buf)
    for i in range(n):
        if scores[i] > t:
            keep[i] = 1
            kept += 1
        else:
            keep[i] = 0
    for i in range(n):
        if kept >= budget:
            break
        if scores[i] == t:
            keep[i] = 1
            kept += 1


def threshold_elements(W, Py_ssize_t s):
    cdef double[:, ::1] w = np.ascontiguousarray(W, dtype=np.float64)
    out_arr = np.zeros((w.shape[0], w.shape[1]))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t d = w.shape[0], m = w.shape[1], n = d * m, i, j
    cdef double* mag
    cdef char* keep
    if n == 0:
        return out_arr
    with nogil:
        mag = <double*> malloc(n * sizeof(double))
        keep = <char*> malloc(n)
        for i in range(d):
            for j in range(m):
                mag[i * m + j] = fabs(w[i, j])
        _keep_top(mag, n, s, keep)
        for i in range(d):
            for j in range(m):
                if keep[i * m + j]:
                    out[i, j] = w[i, j]
        free(mag)
        free(keep)
    return out_arr


def threshold_rows(V, Py_ssize_t r):
    cdef double[:, ::1] v = np.ascontiguousarray(V, dtype=np.float64)
    out_arr = np.zeros((v.shape[0], v.shape[1]))
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t d = v.shape[0], m = v.shape[1], i, j
    cdef double acc
    cdef double* sq
    cdef char* keep
    if d == 0 or m == 0:
        return out_arr
    with nogil:
        sq = <double*> malloc(d * sizeof(double))
        keep = <char*> malloc(d)
        for i in range(d):
            acc = v[i, 0] * v[i, 0]
            for j in range(1, m):
                acc = acc + v[i, j] * v[i, j]
            sq[i] = acc
        _keep_top(sq, d, r, keep)
        for i in range(d):
            if keep[i]:
                for j in range(m):
                    out[i, j] = v[i, j]
        free(sq)
        free(keep)
    return out_arr


# ------------------------------------------------------- penalty descent

cdef double _dot(double[:, ::1] a, double[:, ::1] b) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double acc = 0.0
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            acc += a[i, j] * b[i, j]
    return acc


cdef double _evaluate(double[:, ::1] L, double[:, ::1] X, double[:, ::1] Xk,
                      double[:, ::1] Yk, double[:, ::1] Zk, double mu1,
                      double mu2, double tau1, double beta,
                      double[:, ::1] T, double[:, ::1] G, double[:, ::1] Lam,
                      double[:, ::1] E, double[:, ::1] W, double[:, ::1] D) noexcept nogil:
    cdef Py_ssize_t d = X.shape[0], m = X.shape[1], i, j
    cdef double dy, dz, dx, h, sy = 0.0, sz = 0.0, sx = 0.0, sym
    _gemm(b'T', b'N', 1.0, L, X, 0.0, T)
    _gemm(b'N', b'N', -2.0, L, T, 0.0, G)
    for i in range(d):
        for j in range(m):
            dy = X[i, j] - Yk[i, j]
            dz = X[i, j] - Zk[i, j]
            dx = X[i, j] - Xk[i, j]
            G[i, j] = G[i, j] + 2.0 * mu1 * dy + 2.0 * mu2 * dz + 2.0 * tau1 * dx
            sy += dy * dy
            sz += dz * dz
            sx += dx * dx
    _gemm(b'T', b'N', 1.0, X, G, 0.0, Lam)
    for i in range(m):
        for j in range(i + 1, m):
            sym = 0.5 * (Lam[i, j] + Lam[j, i])
            Lam[i, j] = sym
            Lam[j, i] = sym
    _gemm(b'T', b'N', 1.0, X, X, 0.0, E)
    for i in range(m):
        E[i, i] -= 1.0
    for i in range(m):
        for j in range(m):
            W[i, j] = beta * E[i, j] - Lam[i, j]
    for i in range(d):
        for j in range(m):
            D[i, j] = G[i, j]
    _gemm(b'N', b'N', 1.0, X, W, 1.0, D)
    h = (-_dot(T, T) + mu1 * sy + mu2 * sz + tau1 * sx
         - 0.5 * _dot(Lam, E) + 0.25 * beta * _dot(E, E))
    return h


cdef double _bb_step(double[:, ::1] Xn, double[:, ::1] X, double[:, ::1] Dn,
                     double[:, ::1] D, bint use_bb1, double prev,
                     double floor, double cap) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double a, b, sxx = 0.0, sxd = 0.0, sdd = 0.0, eta
    for i in range(X.shape[0]):
        for j in range(X.shape[1]):
            a = Xn[i, j] - X[i, j]
            b = Dn[i, j] - D[i, j]
            sxx += a * a
            sxd += a * b
            sdd += b * b
    sxd = fabs(sxd)
    if use_bb1:
        if sxd == 0.0:
            return prev
        eta = sxx / sxd
    else:
        if sdd == 0.0:
            return prev
        eta = sxd / sdd
    if eta < floor:
        eta = floor
    if eta > cap:
        eta = cap
    return eta


def penalty_descent(L, Xk, Yk, Zk, double mu1, double mu2, double tau1,
                    double beta, double rho, double tol, int max_iter,
                    int window=5, int max_halvings=20, double floor=1e-10,
                    double cap=1e10):
    cdef double[:, ::1] Lv = np.ascontiguousarray(L, dtype=np.float64)
    cdef double[:, ::1] xk = np.ascontiguousarray(Xk, dtype=np.float64)
    cdef double[:, ::1] yk = np.ascontiguousarray(Yk, dtype=np.float64)
    cdef double[:, ::1] zk = np.ascontiguousarray(Zk, dtype=np.float64)
    cdef Py_ssize_t d = xk.shape[0], m = xk.shape[1], q = Lv.shape[1], i, j
    X_arr = np.array(xk, copy=True)
    cdef double[:, ::1] X = X_arr
    cdef double[:, ::1] Xn = np.empty((d, m))
    cdef double[:, ::1] D = np.empty((d, m))
    cdef double[:, ::1] Dn = np.empty((d, m))
    cdef double[:, ::1] T = np.empty((q, m))
    cdef double[:, ::1] G = np.empty((d, m))
    cdef double[:, ::1] Lam = np.empty((m, m))
    cdef double[:, ::1] E = np.empty((m, m))
    cdef double[:, ::1] W = np.empty((m, m))
    merits_arr = np.empty(max_iter + 1)
    norms_arr = np.empty(max_iter + 1)
    gnorms_arr = np.empty(max_iter + 1)
    cdef double[::1] merits = merits_arr
    cdef double[::1] norms = norms_arr
    cdef double[::1] gnorms = gnorms_arr
    recent_arr = np.empty(max(window, 1))
    cdef double[::1] recent = recent_arr
    cdef int n_recent = 1, head = 0, it = 0, status = MAX_ITER, ls, k
    cdef double h, hn, gnorm, thr, eta, href, nrm, scale
    cdef bint accepted

    with nogil:
        h = _evaluate(Lv, X, xk, yk, zk, mu1, mu2, tau1, beta, T, G, Lam, E, W, D)
        gnorm = sqrt(_dot(D, D))
        merits[0] = h
        norms[0] = sqrt(_dot(X, X))
        gnorms[0] = gnorm
        if not (isfinite(h) and isfinite(gnorm)):
            status = NONFINITE
        else:
            thr = tol * (gnorm if gnorm > 1.0 else 1.0)
            eta = 1.0 / (gnorm if gnorm > 1.0 else 1.0)
            recent[0] = h
            while it < max_iter:
                if gnorm <= thr:
                    status = CONVERGED
                    break
                href = recent[0]
                for k in range(1, n_recent):
                    if recent[k] > href:
                        href = recent[k]
                accepted = False
                for ls in range(max_halvings + 1):
                    for i in range(d):
                        for j in range(m):
                            Xn[i, j] = X[i, j] - eta * D[i, j]
                    nrm = sqrt(_dot(Xn, Xn))
                    if nrm > rho:
                        scale = rho / nrm
                        for i in range(d):
                            for j in range(m):
                                Xn[i, j] = Xn[i, j] * scale
                    hn = _evaluate(Lv, Xn, xk, yk, zk, mu1, mu2, tau1, beta,
                                   T, G, Lam, E, W, Dn)
                    if isfinite(hn) and hn < href:
                        accepted = True
                        break
                    eta = eta * 0.5
                if not accepted:
                    status = STALLED
                    break
                eta = _bb_step(Xn, X, Dn, D, it % 2 == 0, eta, floor, cap)
                for i in range(d):
                    for j in range(m):
                        X[i, j] = Xn[i, j]
                        D[i, j] = Dn[i, j]
                h = hn
                gnorm = sqrt(_dot(D, D))
                it += 1
                merits[it] = h
                norms[it] = sqrt(_dot(X, X))
                gnorms[it] = gnorm
                if n_recent < window:
                    recent[n_recent] = h
                    n_recent += 1
                else:
                    recent[head] = h
                    head = (head + 1) % window

    n = it + 1
    return X_arr, merits_arr[:n], norms_arr[:n], gnorms_arr[:n], status, it


# ------------------------------------------------------------------ k-means

def lloyd(P, C, int max_iter=300, double tol=1e-6):
    cdef double[:, ::1] pts = np.ascontiguousarray(P, dtype=np.float64)
    C_arr = np.array(C, dtype=np.float64, copy=True, order="C")
    cdef double[:, ::1] cen = C_arr
    cdef Py_ssize_t n = pts.shape[0], p = pts.shape[1], k = cen.shape[0]
    newC_arr = np.empty((k, p))
    cdef double[:, ::1] newC = newC_arr
    labels_arr = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] labels = labels_arr
    cdef double[::1] mind = np.empty(n)
    cdef cnp.int64_t[::1] counts = np.empty(k, dtype=np.int64)
    cdef cnp.int8_t[::1] taken = np.empty(n, dtype=np.int8)
    cdef Py_ssize_t i, j, c, best, far_i, n_iter = 0, it
    cdef double acc, diff, bestd, shift, far
    cdef double inertia = 0.0

    with nogil:
        for it in range(1, max_iter + 1):
            n_iter = it
            for i in range(n):
                best = 0
                bestd = 0.0
                for c in range(k):
                    diff = pts[i, 0] - cen[c, 0]
                    acc = diff * diff
                    for j in range(1, p):
                        diff = pts[i, j] - cen[c, j]
                        acc = acc + diff * diff
                    if c == 0 or acc < bestd:
                        bestd = acc
                        best = c
                labels[i] = best
                mind[i] = bestd
                taken[i] = 0
            for c in range(k):
                counts[c] = 0
                for j in range(p):
                    newC[c, j] = 0.0
            for i in range(n):
                c = labels[i]
                counts[c] += 1
                for j in range(p):
                    newC[c, j] += pts[i, j]
            for c in range(k):
                if counts[c] > 0:
                    for j in range(p):
                        newC[c, j] /= counts[c]
                else:
                    far = -2.0
                    far_i = 0
                    for i in range(n):
                        if taken[i]:
                            acc = -1.0
                        else:
                            acc = mind[i]
                        if acc > far:
                            far = acc
                            far_i = i
                    taken[far_i] = 1
                    for j in range(p):
                        newC[c, j] = pts[far_i, j]
            shift = 0.0
            for c in range(k):
                for j in range(p):
                    diff = newC[c, j] - cen[c, j]
                    shift += diff * diff
                    cen[c, j] = newC[c, j]
            if sqrt(shift) <= tol:
                break
        for i in range(n):
            best = 0
            bestd = 0.0
            for c in range(k):
                diff = pts[i, 0] - cen[c, 0]
                acc = diff * diff
                for j in range(1, p):
                    diff = pts[i, j] - cen[c, j]
                    acc = acc + diff * diff
                if c == 0 or acc < bestd:
                    bestd = acc
                    best = c
            labels[i] = best
            inertia += bestd
    return labels_arr, C_arr, inertia, n_iter
