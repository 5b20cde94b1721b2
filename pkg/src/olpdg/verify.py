"""Certificates for a computed equilibrium.

* ``kkt_residuals``: first-order optimality system of the pooled problem.
* ``sufficiency_pass`` / ``build_hessian``: value-function recursion and the
  Hessian of the control-only objective; positive definiteness makes the
  complementarity solution a global minimizer of the pooled problem.
* ``best_response_check``: each player's own constrained problem with the
  others frozen, solved from scratch, compared with the candidate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg as sla

from .game_core import Dims, EquilibriumTrajectory, LqGame, player_costs, rollout, simulate
from .pipeline import solve_ocp
from .potential_check import OcpData, build_ocp, potential_total

RCOND_MIN = 1e-12
PD_RTOL = 1e-10


# --- first-order conditions ------------------------------------------------

@dataclass(frozen=True)
class KktReport:
    stationarity_u: float
    dynamics: float
    costate: float
    comp_v: float
    comp_mu: float
    scale: float = 1.0

    @property
    def max_residual(self) -> float:
        return max(self.stationarity_u, self.dynamics, self.costate, self.comp_v, self.comp_mu)

    @property
    def max_scaled(self) -> float:
        return self.max_residual / self.scale

    def as_dict(self) -> dict:
        return {"stationarity_u": self.stationarity_u, "dynamics": self.dynamics,
                "costate": self.costate, "comp_v": self.comp_v, "comp_mu": self.comp_mu,
                "scale": self.scale, "max_scaled": self.max_scaled}


def _comp_violation(a, b) -> float:
    """``max(neg(a), neg(b), |a*b|)`` over all entries."""
    a, b = np.asarray(a, float), np.asarray(b, float)
    if a.size == 0:
        return 0.0
    return float(max(np.max(-a, initial=0.0), np.max(-b, initial=0.0), np.max(np.abs(a * b))))


def kkt_residuals(ocp: OcpData, game: LqGame, traj: EquilibriumTrajectory) -> KktReport:
    """Max-norm residuals of stationarity, dynamics, co-state and both complementarity pairs."""
    K = game.dims.K
    x, u, v, lam, mu = traj.x, traj.u, traj.v, traj.lam, traj.mu
    stat = dyn = cost = 0.0
    dyn = float(np.max(np.abs(x[0] - game.x0)))
    for k in range(K):
        stat = max(stat, float(np.max(np.abs(ocp.R[k] @ u[k] + game.B[k].T @ lam[k + 1]))))
        dyn = max(dyn, float(np.max(np.abs(x[k + 1] - game.A[k] @ x[k] - game.B[k] @ u[k]))))
        rhs = ocp.Q[k] @ x[k] + ocp.p[k] + ocp.L[k] @ v[k] + game.A[k].T @ lam[k + 1] - game.M[k].T @ mu[k]
        cost = max(cost, float(np.max(np.abs(lam[k] - rhs))))
    rhs = ocp.Q[K] @ x[K] + ocp.p[K] + ocp.L[K] @ v[K] - game.M[K].T @ mu[K]
    cost = max(cost, float(np.max(np.abs(lam[K] - rhs))))
    cv = cm = 0.0
    for k in range(K + 1):
        gv = ocp.D[k] @ v[k] + ocp.d[k] + ocp.L[k].T @ x[k] - game.Ncon[k].T @ mu[k]
        h = game.M[k] @ x[k] + game.Ncon[k] @ v[k] + game.r[k]
        cv = max(cv, _comp_violation(v[k], gv))
        cm = max(cm, _comp_violation(mu[k], h))
    scale = 1.0 + max(float(np.max(np.abs(a))) for a in (x, u, v, lam, mu) if np.size(a))
    return KktReport(stationarity_u=stat, dynamics=dyn, costate=cost, comp_v=cv, comp_mu=cm, scale=scale)


# --- second-order conditions -----------------------------------------------

@dataclass(frozen=True, eq=False)
class SufficiencyPass:
    E: np.ndarray          # (K+1, n, n)
    e: np.ndarray          # (K+1, n)
    w: np.ndarray          # (K+1,)
    T: np.ndarray          # (K, m, m)
    T_invertible: np.ndarray

    @property
    def complete(self) -> bool:
        return bool(np.all(self.T_invertible))


def _rcond(X) -> float:
    try:
        return 1.0 / np.linalg.cond(X, 1)
    except np.linalg.LinAlgError:
        return 0.0


def sufficiency_pass(ocp: OcpData, game: LqGame, v_star, mu_star) -> SufficiencyPass:
    """Value function ``W_k = 1/2 x'E_k x + e_k'x + w_k`` of the pooled problem with ``(v*, mu*)`` frozen."""
    K, n, mt = game.dims.K, game.dims.n, game.dims.mt
    E = np.zeros((K + 1, n, n))
    e = np.zeros((K + 1, n))
    w = np.zeros(K + 1)
    T = np.zeros((K, mt, mt))
    ok = np.zeros(K, dtype=bool)
    drive = lambda k: ocp.p[k] + ocp.L[k] @ v_star[k] - game.M[k].T @ mu_star[k]  # noqa: E731
    E[K] = ocp.Q[K]
    e[K] = drive(K)
    for k in range(K - 1, -1, -1):
        A, B = game.A[k], game.B[k]
        T[k] = ocp.R[k] + B.T @ E[k + 1] @ B
        ok[k] = _rcond(T[k]) >= RCOND_MIN
        if not ok[k]:
            E[:k + 1] = np.nan
            e[:k + 1] = np.nan
            w[:k + 1] = np.nan
            break
        BtE = B.T @ E[k + 1]
        Tinv_BtEA = np.linalg.solve(T[k], BtE @ A)
        Tinv_Bte = np.linalg.solve(T[k], B.T @ e[k + 1])
        Ek = A.T @ E[k + 1] @ A + ocp.Q[k] - (BtE @ A).T @ Tinv_BtEA
        E[k] = 0.5 * (Ek + Ek.T)
        e[k] = A.T @ e[k + 1] - (BtE @ A).T @ Tinv_Bte + drive(k)
        w[k] = w[k + 1] - 0.5 * (B.T @ e[k + 1]) @ Tinv_Bte
    return SufficiencyPass(E=E, e=e, w=w, T=T, T_invertible=ok)


def _trans(game: LqGame, a: int, b: int) -> np.ndarray:
    """``A_{b-1} ... A_a`` (identity when ``a == b``)."""
    out = np.eye(game.dims.n)
    for j in range(a, b):
        out = game.A[j] @ out
    return out


@dataclass(frozen=True, eq=False)
class HessianData:
    """``H = [[Y, C], [C', Dblk]]`` over stacked ``(u_0..u_{K-1}, v_0..v_K)``.

    ``C`` has one block row per ``u_l`` and one block column per ``v_k``.
    """

    Y: np.ndarray
    C: np.ndarray
    Dblk: np.ndarray
    H: np.ndarray
    pd: bool
    min_pivot: float
    status: str


def definiteness(H, rtol: float = PD_RTOL):
    """Classify a symmetric matrix through the pivots of a Bunch-Kaufman factorization."""
    if H.size == 0:
        return "positive_definite", np.inf
    _, dmat, _ = sla.ldl(H)
    piv = np.linalg.eigvalsh(dmat)  # 1x1 and 2x2 pivot blocks; same inertia as H
    thr = rtol * max(np.linalg.norm(H, 2), 1.0)
    low = float(np.min(piv))
    if low > thr:
        return "positive_definite", low
    if low >= -thr:
        return "semidefinite", low
    return "indefinite", low


def build_hessian(ocp: OcpData, game: LqGame, suff: SufficiencyPass) -> HessianData:
    d = game.dims
    K, m, s = d.K, d.mt, d.st
    Dblk = sla.block_diag(*[ocp.D[k] for k in range(K + 1)])
    if not suff.complete:
        nan = np.full((K * m, K * m), np.nan)
        return HessianData(Y=nan, C=np.full((K * m, (K + 1) * s), np.nan), Dblk=Dblk,
                           H=np.full((K * m + (K + 1) * s,) * 2, np.nan), pd=False,
                           min_pivot=np.nan, status="skipped")
    E, T, A, B = suff.E, suff.T, game.A, game.B

    def upsilon(k, tau):
        return B[tau].T @ E[tau + 1] @ _trans(game, k + 1, tau + 1)

    def tail_sum(k):
        acc = np.zeros((d.n, d.n))
        for tau in range(k + 1, K):
            U = upsilon(k, tau)
            acc += U.T @ np.linalg.solve(T[tau], U)
        return acc

    Y = np.zeros((K * m, K * m))
    for k in range(K):
        S_k = tail_sum(k)
        bk = slice(k * m, (k + 1) * m)
        Y[bk, bk] = T[k] + B[k].T @ S_k @ B[k]
        for l_ in range(k):
            Phi = _trans(game, l_ + 1, k + 1)
            blk = B[k].T @ E[k + 1] @ Phi @ B[l_] + B[k].T @ S_k @ Phi @ B[l_]
            bl = slice(l_ * m, (l_ + 1) * m)
            Y[bk, bl] = blk
            Y[bl, bk] = blk.T
    C = np.zeros((K * m, (K + 1) * s))
    for l_ in range(K):
        for k in range(l_ + 1, K + 1):
            C[l_ * m:(l_ + 1) * m, k * s:(k + 1) * s] = B[l_].T @ _trans(game, l_ + 1, k).T @ ocp.L[k]
    H = np.block([[Y, C], [C.T, Dblk]])
    H = 0.5 * (H + H.T)
    status, low = definiteness(H)
    return HessianData(Y=Y, C=C, Dblk=Dblk, H=H, pd=status == "positive_definite",
                       min_pivot=low, status=status)


def unstack_controls(game: LqGame, z):
    """Split a stacked ``(u_0..u_{K-1}, v_0..v_K)`` vector."""
    d = game.dims
    z = np.asarray(z, float)
    return z[:d.K * d.mt].reshape(d.K, d.mt), z[d.K * d.mt:].reshape(d.K + 1, d.st)


def condensed_objective(ocp: OcpData, game: LqGame, suff: SufficiencyPass, z, v_star, mu_star) -> float:
    """Completed-square form of the pooled objective as a function of stacked controls only."""
    u, v = unstack_controls(game, z)
    x = rollout(game, u)
    K = game.dims.K
    E, e, T = suff.E, suff.e, suff.T
    val = 0.5 * x[0] @ E[0] @ x[0] + e[0] @ x[0] + suff.w[0]
    for k in range(K):
        dev = u[k] + np.linalg.solve(T[k], game.B[k].T @ (E[k + 1] @ game.A[k] @ x[k] + e[k + 1]))
        val += 0.5 * dev @ T[k] @ dev
    for k in range(K + 1):
        val += (0.5 * v[k] @ ocp.D[k] @ v[k] + ocp.d[k] @ v[k] + x[k] @ ocp.L[k] @ (v[k] - v_star[k])
                + mu_star[k] @ game.M[k] @ x[k])
    return float(val)


def pooled_objective(ocp: OcpData, game: LqGame, z) -> float:
    """Pooled objective with the state eliminated by the dynamics."""
    u, v = unstack_controls(game, z)
    return potential_total(ocp, rollout(game, u), u, v)


# --- Nash property -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class BestResponse:
    player: int
    gap: float                  # J^i(best response) - J^i(candidate); >= -tol at a Nash point
    J_candidate: float
    J_best: float
    u: np.ndarray
    v: np.ndarray
    inner_pd: bool
    sampled_improvement: float  # best decrease in J^i found by random feasible perturbation
    samples: int = 0
    info: dict = field(default_factory=dict)


def single_player_game(game: LqGame, u, v, i: int):
    """Player ``i``'s own problem with everyone else's controls frozen at ``(u, v)``.

    The state is augmented with a constant 1 so that frozen inputs become a
    drift column.  The own control is shifted, ``u^i = w + delta_k``, to cancel
    the linear term coming from the cross block of ``R^i``.  Returns the game
    and ``delta`` of shape (K, m_i).
    """
    d = game.dims
    K, n = d.K, d.n
    ui, vi = d.u_slice(i), d.v_slice(i)
    uo = np.ones(d.mt, bool)
    uo[ui] = False
    vo = np.ones(d.st, bool)
    vo[vi] = False
    na = n + 1
    A = np.zeros((K, na, na))
    B = np.zeros((K, na, d.m[i]))
    R = np.zeros((K, 1, d.m[i], d.m[i]))
    delta = np.zeros((K, d.m[i]))
    for k in range(K):
        Rk = game.Ri[k, i]
        R[k, 0] = Rk[ui, ui]
        delta[k] = -np.linalg.solve(Rk[ui, ui], Rk[ui][:, uo] @ u[k, uo])
        Bi = game.B[k][:, ui]
        A[k, :n, :n] = game.A[k]
        A[k, :n, n] = game.B[k][:, uo] @ u[k, uo] + Bi @ delta[k]
        A[k, n, n] = 1.0
        B[k, :n] = Bi
    Q = np.zeros((K + 1, 1, na, na))
    p = np.zeros((K + 1, 1, na))
    D = np.zeros((K + 1, 1, d.s[i], d.s[i]))
    dd = np.zeros((K + 1, 1, d.s[i]))
    L = np.zeros((K + 1, 1, na, d.s[i]))
    M = np.zeros((K + 1, d.l, na))
    r = np.zeros((K + 1, d.l))
    for k in range(K + 1):
        Li = game.Li[k, i]
        Q[k, 0, :n, :n] = game.Qi[k, i]
        p[k, 0, :n] = game.pi[k, i] + Li[:, vo] @ v[k, vo]
        Dk = game.Di[k, i]
        D[k, 0] = Dk[vi, vi]
        dd[k, 0] = game.di[k, i][vi] + Dk[vi][:, vo] @ v[k, vo]
        L[k, 0, :n] = Li[:, vi]
        M[k, :, :n] = game.M[k]
        r[k] = game.r[k] + game.Ncon[k][:, vo] @ v[k, vo]
    dims = Dims(n=na, N=1, K=K, m=(d.m[i],), s=(d.s[i],), l=d.l)
    sub = LqGame(dims=dims, A=A, B=B, Qi=Q, pi=p, Ri=R, Di=D, di=dd, Li=L, M=M,
                 Ncon=game.Ncon[:, :, vi], r=r, x0=np.concatenate([game.x0, [1.0]]))
    return sub, delta


def _perturbation_search(game, u, v, i, J0, trials, rng, scale):
    d = game.dims
    ui, vi = d.u_slice(i), d.v_slice(i)
    best = -np.inf
    used = 0
    for _ in range(trials):
        step = scale
        for _ in range(8):
            uu, vv = u.copy(), v.copy()
            uu[:, ui] += step * rng.standard_normal(uu[:, ui].shape)
            vv[:, vi] = np.maximum(vv[:, vi] + step * rng.standard_normal(vv[:, vi].shape), 0.0)
            sim = simulate(game, uu, vv)
            if sim.feasible.all():
                best = max(best, J0 - sim.costs[i])
                used += 1
                break
            step *= 0.5
    return best, used


def best_response_check(game: LqGame, traj: EquilibriumTrajectory, i: int, trials: int = 0,
                        rng=None, scale: float = 1e-2) -> BestResponse:
    """Solve player ``i``'s (0-based) constrained problem against the frozen others.

    States are re-simulated from the candidate controls before costs are
    compared.  A negative ``gap`` is the cost decrease the player could
    secure by deviating.
    """
    d = game.dims
    u, v = np.array(traj.u, float), np.array(traj.v, float)
    x = rollout(game, u)
    J0 = float(player_costs(game, x, u, v)[i])
    sub, delta = single_player_game(game, u, v, i)
    sol = solve_ocp(sub, build_ocp(sub))
    t = sol.trajectory
    ub, vb = u.copy(), v.copy()
    ub[:, d.u_slice(i)] = t.u + delta
    vb[:, d.v_slice(i)] = t.v
    J1 = float(player_costs(game, rollout(game, ub), ub, vb)[i])
    suff = sufficiency_pass(sol.ocp, sub, t.v, t.mu)
    inner = build_hessian(sol.ocp, sub, suff)
    improvement, used = -np.inf, 0
    if trials:
        improvement, used = _perturbation_search(game, u, v, i, J0, trials,
                                                 np.random.default_rng(rng), scale)
    return BestResponse(player=i, gap=J1 - J0, J_candidate=J0, J_best=J1, u=ub, v=vb,
                        inner_pd=inner.pd, sampled_improvement=float(improvement), samples=used,
                        info={"lcp_status": sol.lcp.status, "pivots": sol.lcp.pivots})


# --- bundle ------------------------------------------------------------------

@dataclass(eq=False)
class Certificate:
    kkt: KktReport
    hessian: HessianData
    responses: list
    kkt_tol: float = 1e-8
    gap_tol: float = 1e-6

    @property
    def checks(self) -> dict:
        return {
            "kkt": self.kkt.max_scaled <= self.kkt_tol,
            "hessian_pd": self.hessian.pd,
            "best_response": all(r.gap >= -self.gap_tol for r in self.responses),
        }

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def certify(game: LqGame, traj: EquilibriumTrajectory, ocp: Optional[OcpData] = None,
            kkt_tol: float = 1e-8, gap_tol: float = 1e-6, trials: int = 0, seed=None) -> Certificate:
    ocp = build_ocp(game) if ocp is None else ocp
    kkt = kkt_residuals(ocp, game, traj)
    hess = build_hessian(ocp, game, sufficiency_pass(ocp, game, traj.v, traj.mu))
    rng = np.random.default_rng(seed)
    responses = [best_response_check(game, traj, i, trials=trials, rng=rng)
                 for i in range(game.dims.N)]
    return Certificate(kkt=kkt, hessian=hess, responses=responses, kkt_tol=kkt_tol, gap_tol=gap_tol)
