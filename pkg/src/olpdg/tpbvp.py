"""Backward recursions, transition matrices and stacked state maps.

With the co-state taken affine in the state, ``lambda_k = H_k x_k + beta_k``,
the optimality system splits into a Riccati-type recursion for ``H_k``, a
linear backward recursion for ``beta_k`` driven by ``(v, mu)``, and a forward
state recursion.  Everything here is indexed on the stage ``k = 0..K``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .game_core import EquilibriumTrajectory, LqGame
from .potential_check import OcpData

RCOND_MIN = 1e-12


class GammaSingularError(np.linalg.LinAlgError):
    def __init__(self, k, rcond):
        super().__init__(f"Gamma_{k + 1}^{k} is singular or ill-conditioned (rcond={rcond:.2e})")
        self.stage = k
        self.rcond = rcond


@dataclass(frozen=True, eq=False)
class BackwardPass:
    """``H[k]`` for k = 0..K; the remaining stacks are indexed by k = 0..K-1.

    ``Gamma[k]`` is ``I + S_k H_{k+1}`` and ``G[k]`` is ``G_{k+1}``, the
    one-step transition of the ``beta`` recursion from stage ``k+1`` to ``k``.
    """

    H: np.ndarray
    Gamma: np.ndarray
    S: np.ndarray
    Abar: np.ndarray
    Bbar: np.ndarray
    G: np.ndarray

    @property
    def K(self) -> int:
        return self.Gamma.shape[0]

    @property
    def n(self) -> int:
        return self.H.shape[1]


@dataclass(frozen=True, eq=False)
class AffineMaps:
    """``x_stack = Phi0 x0 + Phi1 p_stack + Phi2 y`` over stages 1..K."""

    Phi0: np.ndarray
    Phi1: np.ndarray
    Phi2: np.ndarray


def _rcond(X):
    if X.size == 0:
        return 1.0
    norm = np.linalg.norm(X, 1)
    try:
        inv_norm = np.linalg.norm(np.linalg.inv(X), 1)
    except np.linalg.LinAlgError:
        return 0.0
    return 1.0 / (norm * inv_norm)


def backward_pass(ocp: OcpData, game: LqGame) -> BackwardPass:
    K, n = game.dims.K, game.dims.n
    H = np.empty((K + 1, n, n))
    Gamma = np.empty((K, n, n))
    S = np.empty((K, n, n))
    Abar = np.empty((K, n, n))
    Bbar = np.empty((K, n, n))
    G = np.empty((K, n, n))
    H[K] = ocp.Q[K]
    eye = np.eye(n)
    for k in range(K - 1, -1, -1):
        Bk = game.B[k]
        chol = sla.cho_factor(ocp.R[k])
        S[k] = Bk @ sla.cho_solve(chol, Bk.T)
        Gamma[k] = eye + S[k] @ H[k + 1]
        rc = _rcond(Gamma[k])
        if rc < RCOND_MIN:
            raise GammaSingularError(k, rc)
        lu = sla.lu_factor(Gamma[k])
        Abar[k] = sla.lu_solve(lu, game.A[k])
        Bbar[k] = -sla.lu_solve(lu, S[k])
        H[k] = ocp.Q[k] + game.A[k].T @ H[k + 1] @ Abar[k]
        G[k] = game.A[k].T + game.A[k].T @ H[k + 1] @ Bbar[k]
    return BackwardPass(H=H, Gamma=Gamma, S=S, Abar=Abar, Bbar=Bbar, G=G)


def psi(bp: BackwardPass, k: int, tau: int) -> np.ndarray:
    """``G_{k+1} G_{k+2} ... G_tau``; the identity when ``tau == k``."""
    if k > tau:
        raise ValueError(f"psi needs k <= tau, got k={k}, tau={tau}")
    out = np.eye(bp.n)
    for j in range(k + 1, tau + 1):
        out = out @ bp.G[j - 1]
    return out


def phi(bp: BackwardPass, rho: int, k: int) -> np.ndarray:
    """``Abar_{k-1} ... Abar_rho``; the identity when ``rho == k``."""
    if rho > k:
        raise ValueError(f"phi needs rho <= k, got rho={rho}, k={k}")
    out = np.eye(bp.n)
    for j in range(rho, k):
        out = bp.Abar[j] @ out
    return out


def coupling_block(ocp: OcpData, game: LqGame, tau: int) -> np.ndarray:
    """``[L_tau, -M_tau']``: how ``(v_tau, mu_tau)`` drive the co-state."""
    return np.hstack([ocp.L[tau], -game.M[tau].T])


def assemble_affine_maps(bp: BackwardPass, ocp: OcpData, game: LqGame) -> AffineMaps:
    d = game.dims
    K, n, w = d.K, d.n, d.st + d.l
    phis = {(rho, k): phi(bp, rho, k) for k in range(K + 1) for rho in range(k + 1)}
    psis = {(k, tau): psi(bp, k, tau) for tau in range(K + 1) for k in range(tau + 1)}
    Phi0 = np.vstack([phis[(0, k)] for k in range(1, K + 1)])
    Phi1 = np.zeros((K * n, K * n))
    Phi2 = np.zeros((K * n, K * w))
    for k in range(1, K + 1):
        rows = slice((k - 1) * n, k * n)
        for tau in range(1, K + 1):
            blk = np.zeros((n, n))
            for rho in range(1, min(k, tau) + 1):
                blk += phis[(rho, k)] @ bp.Bbar[rho - 1] @ psis[(rho, tau)]
            Phi1[rows, (tau - 1) * n:tau * n] = blk
            Phi2[rows, (tau - 1) * w:tau * w] = blk @ coupling_block(ocp, game, tau)
    return AffineMaps(Phi0=Phi0, Phi1=Phi1, Phi2=Phi2)


def beta_sequence(bp: BackwardPass, ocp: OcpData, game: LqGame, v, mu) -> np.ndarray:
    """Backward recursion for the co-state offset; returns ``beta`` of shape (K+1, n)."""
    K = game.dims.K
    beta = np.empty((K + 1, game.dims.n))
    drive = lambda k: ocp.p[k] + ocp.L[k] @ v[k] - game.M[k].T @ mu[k]  # noqa: E731
    beta[K] = drive(K)
    for k in range(K - 1, -1, -1):
        beta[k] = drive(k) + bp.G[k] @ beta[k + 1]
    return beta


def split_stacked(y, game: LqGame):
    """Unpack ``(v_1, mu_1, ..., v_K, mu_K)`` into arrays of shape (K, s) and (K, l)."""
    d = game.dims
    Y = np.asarray(y, float).reshape(d.K, d.st + d.l)
    return Y[:, :d.st], Y[:, d.st:]


def recover_trajectory(bp: BackwardPass, ocp: OcpData, game: LqGame, y, v0mu0) -> EquilibriumTrajectory:
    """Rebuild states, controls and co-states from the complementarity solution."""
    d = game.dims
    K = d.K
    vs, mus = split_stacked(y, game)
    v = np.vstack([np.asarray(v0mu0[0], float).reshape(1, d.st), vs])
    mu = np.vstack([np.asarray(v0mu0[1], float).reshape(1, d.l), mus])
    beta = beta_sequence(bp, ocp, game, v, mu)
    x = np.empty((K + 1, d.n))
    u = np.empty((K, d.mt))
    x[0] = game.x0
    for k in range(K):
        x[k + 1] = bp.Abar[k] @ x[k] + bp.Bbar[k] @ beta[k + 1]
        u[k] = -np.linalg.solve(ocp.R[k], game.B[k].T @ (bp.H[k + 1] @ x[k + 1] + beta[k + 1]))
    lam = np.einsum("kij,kj->ki", bp.H, x) + beta
    return EquilibriumTrajectory(x=x, u=u, v=v, lam=lam, mu=mu)
