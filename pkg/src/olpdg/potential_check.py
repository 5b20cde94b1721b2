"""Potential-game conditions for LQ games and the pooled optimal control data."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .game_core import LqGame


@dataclass(frozen=True, eq=False)
class OcpData:
    """Cost data of the optimal control problem whose minimizer is an equilibrium.

    Shapes: ``Q (K+1, n, n)``, ``p (K+1, n)``, ``R (K, m, m)``,
    ``D (K+1, s, s)``, ``d (K+1, s)``, ``L (K+1, n, s)``.
    """

    Q: np.ndarray
    p: np.ndarray
    R: np.ndarray
    D: np.ndarray
    d: np.ndarray
    L: np.ndarray

    @property
    def K(self) -> int:
        return self.R.shape[0]


@dataclass
class PotentialReport:
    # entries are (condition_id, k, (i, j), max_abs_deviation); players 1-based
    violations: list = field(default_factory=list)

    @property
    def is_potential(self) -> bool:
        return not self.violations


class NotPotentialError(ValueError):
    pass


def _differs(a, b, rtol, atol):
    dev = float(np.max(np.abs(a - b))) if a.size else 0.0
    scale = max(float(np.max(np.abs(a))) if a.size else 0.0,
                float(np.max(np.abs(b))) if b.size else 0.0)
    return dev > rtol * scale + atol, dev


def check_conditions(game: LqGame, rtol: float = 1e-10, atol: float = 1e-12) -> PotentialReport:
    """Test the cross-player equalities that make the LQ game an exact potential game.

    For every stage and every player pair ``i < j``: the coupling blocks
    ``[R^i]_{ij}`` and ``[R^j]_{ij}`` agree, as do ``[D^i]_{ij}`` and
    ``[D^j]_{ij}``, and ``Q``, ``p`` and ``L`` are common to all players.
    Own-player diagonal blocks are not compared.
    """
    d = game.dims
    rep = PotentialReport()

    def record(cid, k, i, j, a, b):
        bad, dev = _differs(a, b, rtol, atol)
        if bad:
            rep.violations.append((cid, k, (i + 1, j + 1), dev))

    for k in range(d.K + 1):
        for i in range(d.N):
            for j in range(i + 1, d.N):
                if k < d.K:
                    ui, uj = d.u_slice(i), d.u_slice(j)
                    record("Ri-Rj", k, i, j, game.Ri[k, i][ui, uj], game.Ri[k, j][ui, uj])
                record("Qi-Qj", k, i, j, game.Qi[k, i], game.Qi[k, j])
                record("pi-pj", k, i, j, game.pi[k, i], game.pi[k, j])
                record("Li-Lj", k, i, j, game.Li[k, i], game.Li[k, j])
                vi, vj = d.v_slice(i), d.v_slice(j)
                record("Di-Dj", k, i, j, game.Di[k, i][vi, vj], game.Di[k, j][vi, vj])
    return rep


def _pooled_symmetric(name, X, k):
    dev = float(np.max(np.abs(X - X.T)))
    if dev > 1e-10 * max(float(np.max(np.abs(X))), 1.0):
        raise AssertionError(f"pooled {name}_{k} asymmetric by {dev:.3e}; tolerance interplay")
    return 0.5 * (X + X.T)


def build_ocp(game: LqGame, rtol: float = 1e-10, atol: float = 1e-12) -> OcpData:
    """Pool each player's own rows of ``R``, ``D``, ``d`` into the potential cost."""
    report = check_conditions(game, rtol, atol)
    if not report.is_potential:
        raise NotPotentialError(f"game is not an exact potential game: {report.violations}")
    d = game.dims
    R = np.zeros((d.K, d.mt, d.mt))
    D = np.zeros((d.K + 1, d.st, d.st))
    dd = np.zeros((d.K + 1, d.st))
    for i in range(d.N):
        ui, vi = d.u_slice(i), d.v_slice(i)
        R[:, ui, :] = game.Ri[:, i, ui, :]
        D[:, vi, :] = game.Di[:, i, vi, :]
        dd[:, vi] = game.di[:, i, vi]
    R = np.stack([_pooled_symmetric("R", R[k], k) for k in range(d.K)])
    D = np.stack([_pooled_symmetric("D", D[k], k) for k in range(d.K + 1)])
    return OcpData(Q=np.array(game.Qi[:, 0]), p=np.array(game.pi[:, 0]), R=R, D=D, d=dd,
                   L=np.array(game.Li[:, 0]))


def potential_value(ocp: OcpData, x, u, v, k: int) -> float:
    """Stage potential ``1/2 x'Qx + p'x + 1/2 u'Ru + 1/2 v'Dv + d'v + x'Lv`` (no u term at k = K)."""
    x, v = np.asarray(x, float), np.asarray(v, float)
    val = 0.5 * x @ ocp.Q[k] @ x + ocp.p[k] @ x
    val += 0.5 * v @ ocp.D[k] @ v + ocp.d[k] @ v + x @ ocp.L[k] @ v
    if k < ocp.K:
        u = np.asarray(u, float)
        val += 0.5 * u @ ocp.R[k] @ u
    return float(val)


def potential_total(ocp: OcpData, x, u, v) -> float:
    """Total potential along a trajectory (the optimal-control objective)."""
    K = ocp.K
    return sum(potential_value(ocp, x[k], u[k] if k < K else None, v[k], k) for k in range(K + 1))


def game_from_ocp(ocp: OcpData, template: LqGame, rng=None, scale: float = 1.0) -> LqGame:
    """Split pooled data back into a potential game.

    Each player receives the pooled ``Q``, ``p``, ``L`` and the pooled rows of
    ``R``/``D``/``d`` it owns; the blocks that belong to other players' rows are
    filled with random symmetric noise (which the potential conditions leave
    free).  Dynamics and constraints come from ``template``.
    """
    d = template.dims
    rng = np.random.default_rng(rng)
    Ri = np.zeros((d.K, d.N, d.mt, d.mt))
    Di = np.zeros((d.K + 1, d.N, d.st, d.st))
    di = np.zeros((d.K + 1, d.N, d.st))
    for i in range(d.N):
        for k in range(d.K):
            X = rng.normal(scale=scale, size=(d.mt, d.mt))
            X = X + X.T
            own = d.u_slice(i)
            X[own, :] = ocp.R[k][own, :]
            X[:, own] = ocp.R[k][:, own]
            Ri[k, i] = X
        for k in range(d.K + 1):
            X = rng.normal(scale=scale, size=(d.st, d.st))
            X = X + X.T
            own = d.v_slice(i)
            X[own, :] = ocp.D[k][own, :]
            X[:, own] = ocp.D[k][:, own]
            Di[k, i] = X
            di[k, i] = rng.normal(scale=scale, size=d.st)
            di[k, i, own] = ocp.d[k][own]
    # off-diagonal blocks are shared by everyone; only [R^i]_jj, [D^i]_jj (j != i) stay random
    for k in range(d.K):
        for i in range(d.N):
            for j in range(d.N):
                for l_ in range(d.N):
                    if j != l_:
                        sj, sl = d.u_slice(j), d.u_slice(l_)
                        Ri[k, i][sj, sl] = ocp.R[k][sj, sl]
    for k in range(d.K + 1):
        for i in range(d.N):
            for j in range(d.N):
                for l_ in range(d.N):
                    if j != l_:
                        sj, sl = d.v_slice(j), d.v_slice(l_)
                        Di[k, i][sj, sl] = ocp.D[k][sj, sl]
    rep = lambda a: np.repeat(np.asarray(a)[:, None], d.N, axis=1)  # noqa: E731
    return LqGame(dims=d, A=template.A, B=template.B, Qi=rep(ocp.Q), pi=rep(ocp.p), Ri=Ri,
                  Di=Di, di=di, Li=rep(ocp.L), M=template.M, Ncon=template.Ncon, r=template.r,
                  x0=template.x0)


__all__ = [
    "OcpData", "PotentialReport", "NotPotentialError", "check_conditions", "build_ocp",
    "potential_value", "potential_total", "game_from_ocp",
]
