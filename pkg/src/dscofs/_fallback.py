"""Pure numpy implementations of the hot kernels.

These define the reference semantics; ``_kernels.pyx`` mirrors them loop for
loop. Status codes returned by :func:`penalty_descent`:

    0  gradient-norm tolerance reached
    1  iteration cap reached
    2  line search could not find a decrease (stalled)
    3  non-finite merit value
"""
import math

import numpy as np

CONVERGED, MAX_ITER, STALLED, NONFINITE = 0, 1, 2, 3


def _sequential_row_sumsq(V):
    # column-by-column accumulation so row scores match the compiled loop bit for bit
    acc = V[:, 0] * V[:, 0]
    for j in range(1, V.shape[1]):
        acc = acc + V[:, j] * V[:, j]
    return acc


def _keep_top(scores, budget):
    """Boolean mask of the ``budget`` largest scores, ties to the lowest index."""
    n = scores.size
    keep = np.zeros(n, dtype=bool)
    if budget <= 0:
        return keep
    if budget >= n:
        keep[:] = True
        return keep
    t = np.partition(scores, n - budget)[n - budget]
    keep = scores > t
    missing = budget - int(np.count_nonzero(keep))
    if missing > 0:
        keep[np.flatnonzero(scores == t)[:missing]] = True
    return keep


def threshold_elements(W, s):
    W = np.ascontiguousarray(W, dtype=float)
    keep = _keep_top(np.abs(W).ravel(), int(s))
    return np.where(keep.reshape(W.shape), W, 0.0)


def threshold_rows(V, r):
    V = np.ascontiguousarray(V, dtype=float)
    keep = _keep_top(_sequential_row_sumsq(V), int(r))
    return np.where(keep[:, None], V, 0.0)


def _evaluate(L, X, Xk, Yk, Zk, mu1, mu2, tau1, beta):
    T = L.T @ X
    dy, dz, dx = X - Yk, X - Zk, X - Xk
    G = -2.0 * (L @ T) + 2.0 * mu1 * dy + 2.0 * mu2 * dz + 2.0 * tau1 * dx
    P = X.T @ G
    Lam = 0.5 * (P + P.T)
    E = X.T @ X
    E[np.diag_indices_from(E)] -= 1.0
    D = G + X @ (beta * E - Lam)
    h = (
        -np.vdot(T, T)
        + mu1 * np.vdot(dy, dy)
        + mu2 * np.vdot(dz, dz)
        + tau1 * np.vdot(dx, dx)
        - 0.5 * np.vdot(Lam, E)
        + 0.25 * beta * np.vdot(E, E)
    )
    return float(h), D


def bb_step(dX, dD, use_bb1, prev, floor=1e-10, cap=1e10):
    sxx = float(np.vdot(dX, dX))
    sxd = abs(float(np.vdot(dX, dD)))
    sdd = float(np.vdot(dD, dD))
    if use_bb1:
        if sxd == 0.0:
            return prev
        eta = sxx / sxd
    else:
        if sdd == 0.0:
            return prev
        eta = sxd / sdd
    return min(max(eta, floor), cap)


def penalty_descent(L, Xk, Yk, Zk, mu1, mu2, tau1, beta, rho, tol, max_iter,
                    window=5, max_halvings=20, floor=1e-10, cap=1e10):
    """Projected approximate-gradient descent on the exact-penalty merit.

    Returns ``(X, merits, norms, grad_norms, status, n_iter)``; the traces
    hold one entry for the start point plus one per accepted step.
    """
    X = np.array(Xk, dtype=float, copy=True)
    merits = np.empty(max_iter + 1)
    norms = np.empty(max_iter + 1)
    gnorms = np.empty(max_iter + 1)

    h, D = _evaluate(L, X, Xk, Yk, Zk, mu1, mu2, tau1, beta)
    gnorm = float(np.linalg.norm(D))
    merits[0], norms[0], gnorms[0] = h, float(np.linalg.norm(X)), gnorm
    if not (math.isfinite(h) and math.isfinite(gnorm)):
        return X, merits[:1], norms[:1], gnorms[:1], NONFINITE, 0

    thr = tol * max(1.0, gnorm)
    eta = 1.0 / max(1.0, gnorm)
    recent = [h]
    status = MAX_ITER
    it = 0
    while it < max_iter:
        if gnorm <= thr:
            status = CONVERGED
            break
        href = max(recent)
        accepted = False
        for _ in range(max_halvings + 1):
            Xn = X - eta * D
            nrm = float(np.linalg.norm(Xn))
            if nrm > rho:
                Xn *= rho / nrm
            hn, Dn = _evaluate(L, Xn, Xk, Yk, Zk, mu1, mu2, tau1, beta)
            if math.isfinite(hn) and hn < href:
                accepted = True
                break
            eta *= 0.5
        if not accepted:
            status = STALLED
            break
        dX = Xn - X
        dD = Dn - D
        X, D, h = Xn, Dn, hn
        gnorm = float(np.linalg.norm(D))
        it += 1
        merits[it], norms[it], gnorms[it] = h, float(np.linalg.norm(X)), gnorm
        recent.append(h)
        if len(recent) > window:
            recent.pop(0)
        eta = bb_step(dX, dD, (it - 1) % 2 == 0, eta, floor, cap)
    n = it + 1
    return X, merits[:n], norms[:n], gnorms[:n], status, it


def _sq_dist(P, C):
    diff = P[:, None, :] - C[None, :, :]
    sq = diff * diff
    acc = sq[:, :, 0].copy()
    for j in range(1, P.shape[1]):
        acc += sq[:, :, j]
    return acc


def lloyd(P, C, max_iter=300, tol=1e-6):
    """Lloyd iterations from the given centres.

    ``P`` is ``n x p`` (samples as rows), ``C`` is ``k x p``. Returns
    ``(labels, centres, inertia, n_iter)``. An emptied cluster is re-seeded at
    the point currently farthest from its own centre.
    """
    P = np.ascontiguousarray(P, dtype=float)
    C = np.array(C, dtype=float, copy=True)
    n, k = P.shape[0], C.shape[0]
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        dist = _sq_dist(P, C)
        labels = np.argmin(dist, axis=1)
        mind = dist[np.arange(n), labels]
        newC = np.zeros_like(C)
        counts = np.bincount(labels, minlength=k)
        np.add.at(newC, labels, P)
        taken = np.zeros(n, dtype=bool)
        for c in range(k):
            if counts[c] > 0:
                newC[c] /= counts[c]
            else:
                far = np.where(taken, -1.0, mind)
                i = int(np.argmax(far))
                taken[i] = True
                newC[c] = P[i]
        shift = math.sqrt(float(np.vdot(newC - C, newC - C)))
        C = newC
        if shift <= tol:
            break
    dist = _sq_dist(P, C)
    labels = np.argmin(dist, axis=1)
    inertia = float(dist[np.arange(n), labels].sum())
    return labels.astype(np.int64), C, inertia, n_iter
