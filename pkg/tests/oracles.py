"""Independent reference computations.

Nothing here calls into the recursions under test; each oracle takes a
different route to the same quantity.
"""

import itertools

import numpy as np


def cost_by_loops(game, u, v, x0=None):
    """Per-player cost by explicit scalar loops over every index."""
    d = game.dims
    x = [np.array(game.x0 if x0 is None else x0, float)]
    for k in range(d.K):
        nxt = np.zeros(d.n)
        for a in range(d.n):
            acc = 0.0
            for b in range(d.n):
                acc += game.A[k][a, b] * x[k][b]
            for b in range(d.mt):
                acc += game.B[k][a, b] * u[k][b]
            nxt[a] = acc
        x.append(nxt)
    J = []
    for i in range(d.N):
        tot = 0.0
        for k in range(d.K + 1):
            for a in range(d.n):
                tot += game.pi[k, i][a] * x[k][a]
                for b in range(d.n):
                    tot += 0.5 * x[k][a] * game.Qi[k, i][a, b] * x[k][b]
                for b in range(d.st):
                    tot += x[k][a] * game.Li[k, i][a, b] * v[k][b]
            for a in range(d.st):
                tot += game.di[k, i][a] * v[k][a]
                for b in range(d.st):
                    tot += 0.5 * v[k][a] * game.Di[k, i][a, b] * v[k][b]
            if k < d.K:
                for a in range(d.mt):
                    for b in range(d.mt):
                        tot += 0.5 * u[k][a] * game.Ri[k, i][a, b] * u[k][b]
        J.append(tot)
    return np.array(x), np.array(J)


def dp_lqr(A, B, Q, p, R, x0):
    """Finite-horizon LQ with linear state cost by value iteration in feedback form.

    ``V_k(x) = 1/2 x'P_k x + s_k'x``; ``u_k = -F_k x_k - f_k``.
    """
    K = len(A)
    P, s = Q[K].copy(), p[K].copy()
    F, f = [None] * K, [None] * K
    for k in range(K - 1, -1, -1):
        G = R[k] + B[k].T @ P @ B[k]
        F[k] = np.linalg.solve(G, B[k].T @ P @ A[k])
        f[k] = np.linalg.solve(G, B[k].T @ s)
        Acl = A[k] - B[k] @ F[k]
        P_new = Q[k] + F[k].T @ R[k] @ F[k] + Acl.T @ P @ Acl
        s = p[k] + Acl.T @ (s - P @ B[k] @ f[k]) + F[k].T @ R[k] @ f[k]
        P = 0.5 * (P_new + P_new.T)
    x = [np.asarray(x0, float)]
    u = []
    for k in range(K):
        u.append(-F[k] @ x[k] - f[k])
        x.append(A[k] @ x[k] + B[k] @ u[k])
    return np.array(x), np.array(u)


def fd_hessian(f, z, h=1e-4):
    """Central-difference Hessian of a scalar function (exact for quadratics up to rounding)."""
    z = np.asarray(z, float)
    n = z.size
    H = np.zeros((n, n))
    for a in range(n):
        for b in range(a, n):
            ea = np.zeros(n)
            eb = np.zeros(n)
            ea[a] = h
            eb[b] = h
            H[a, b] = (f(z + ea + eb) - f(z + ea - eb) - f(z - ea + eb) + f(z - ea - eb)) / (4 * h * h)
            H[b, a] = H[a, b]
    return H


def brute_lcp(M, q, tol=1e-9):
    """All LCP solutions by trying each complementary support (independent of the package)."""
    d = len(q)
    sols = []
    for mask in itertools.product([0, 1], repeat=d):
        idx = [j for j in range(d) if mask[j]]
        z = np.zeros(d)
        if idx:
            try:
                z[idx] = np.linalg.solve(M[np.ix_(idx, idx)], -q[idx])
            except np.linalg.LinAlgError:
                continue
        w = M @ z + q
        if z.min() >= -tol and w.min() >= -tol and abs(z @ w) <= tol * (1 + np.linalg.norm(z) * np.linalg.norm(w)):
            if not any(np.allclose(z, s, atol=1e-9) for s in sols):
                sols.append(z)
    return sols


def lifted_hessian(game, ocp):
    """Hessian of the pooled objective in stacked ``(u, v)`` via dense state lifting.

    ``x_stack = Sx x0 + Su u_stack`` over stages 0..K; the objective is then an
    explicit quadratic form.
    """
    d = game.dims
    K, n, m, s = d.K, d.n, d.mt, d.st
    Su = np.zeros(((K + 1) * n, K * m))
    for k in range(1, K + 1):
        for j in range(k):
            blk = game.B[j]
            for t in range(j + 1, k):
                blk = game.A[t] @ blk
            Su[k * n:(k + 1) * n, j * m:(j + 1) * m] = blk
    Qb = np.zeros(((K + 1) * n,) * 2)
    Lb = np.zeros(((K + 1) * n, (K + 1) * s))
    Db = np.zeros(((K + 1) * s,) * 2)
    Rb = np.zeros((K * m, K * m))
    for k in range(K + 1):
        Qb[k * n:(k + 1) * n, k * n:(k + 1) * n] = ocp.Q[k]
        Lb[k * n:(k + 1) * n, k * s:(k + 1) * s] = ocp.L[k]
        Db[k * s:(k + 1) * s, k * s:(k + 1) * s] = ocp.D[k]
    for k in range(K):
        Rb[k * m:(k + 1) * m, k * m:(k + 1) * m] = ocp.R[k]
    Huu = Rb + Su.T @ Qb @ Su
    Huv = Su.T @ Lb
    return np.block([[Huu, Huv], [Huv.T, Db]])
