"""Smart grid with per-user battery storage, cast as a constrained LQ game.

Users consume or contribute energy ``I_k^i`` for ``m_i`` activities and keep
``K_k^i`` units in a private battery.  The grid state is the resource vector
``X_k``; the LQ state stacks ``x_k = [X_k; X_{k-1}]`` so that the
resource-change penalty becomes a plain quadratic form.  Unsatisfied demand is
the control ``u_k^i = P^i X_k - I_k^i`` and battery levels are the
constraint-entering controls ``v_k``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from .game_core import Dims, EquilibriumTrajectory, LqGame, player_costs


@dataclass(frozen=True, eq=False)
class SmartGridScenario:
    """Per-stage data; ``q`` has K+1 entries with ``q[K]`` the terminal weight.

    Shapes: ``Atilde (K, S, S)``, ``Btilde (K, S, sum m)`` and ``P (K, sum m, S)``
    stack the users' column/row blocks, ``rcost (K, N)``, ``b, a (K+1, N)``,
    ``Ltilde (K+1, S, N)``, ``eps (K+1,)``, ``Kmax (N,)``, ``X0, Xminus1 (S,)``.
    """

    S: int
    N: int
    K: int
    m: tuple
    Atilde: np.ndarray
    Btilde: np.ndarray
    P: np.ndarray
    q: np.ndarray
    rcost: np.ndarray
    b: np.ndarray
    a: np.ndarray
    Ltilde: np.ndarray
    eps: np.ndarray
    Kmax: np.ndarray
    X0: np.ndarray
    Xminus1: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "m", tuple(int(x) for x in self.m))
        for f in ("Atilde", "Btilde", "P", "q", "rcost", "b", "a", "Ltilde", "eps", "Kmax",
                  "X0", "Xminus1"):
            arr = np.array(getattr(self, f), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, f, arr)

    @property
    def mt(self) -> int:
        return sum(self.m)

    def u_slice(self, i: int) -> slice:
        off = sum(self.m[:i])
        return slice(off, off + self.m[i])

    def expected_shapes(self) -> dict:
        S, N, K, mt = self.S, self.N, self.K, self.mt
        return {
            "Atilde": (K, S, S), "Btilde": (K, S, mt), "P": (K, mt, S), "q": (K + 1,),
            "rcost": (K, N), "b": (K + 1, N), "a": (K + 1, N), "Ltilde": (K + 1, S, N),
            "eps": (K + 1,), "Kmax": (N,), "X0": (S,), "Xminus1": (S,),
        }

    def problems(self) -> list:
        out = []
        if len(self.m) != self.N:
            out.append(f"m has {len(self.m)} entries for N={self.N} users")
            return out
        for name, want in self.expected_shapes().items():
            got = getattr(self, name).shape
            if got != want:
                out.append(f"{name} has shape {got}, expected {want}")
        if out:
            return out
        for name in ("q", "rcost", "eps"):
            if np.any(getattr(self, name) <= 0):
                out.append(f"{name} must be positive")
        if np.any(self.b < 0):
            out.append("b must be nonnegative")
        if np.any(self.Kmax < 0):
            out.append("Kmax must be nonnegative")
        return out

    def replace(self, **changes) -> "SmartGridScenario":
        return dataclasses.replace(self, **changes)


def default_scenario() -> SmartGridScenario:
    """Two identical households over twelve two-hour periods, three resources."""
    K, S, N, m = 12, 3, 2, (2, 2)
    Bt = np.array([[0.75, 0.0], [0.0, 0.375], [0.0, 0.75]])
    Pi = 0.375 * np.ones((2, S))
    q = np.ones(K + 1)
    q[K] = 2.5
    return SmartGridScenario(
        S=S, N=N, K=K, m=m,
        Atilde=np.repeat(np.eye(S)[None], K, axis=0),
        Btilde=np.repeat(np.hstack([Bt, Bt])[None], K, axis=0),
        P=np.repeat(np.vstack([Pi, Pi])[None], K, axis=0),
        q=q,
        rcost=np.full((K, N), 0.7),
        b=np.full((K + 1, N), 1.6),
        a=np.tile([3.4, 4.0], (K + 1, 1)),
        Ltilde=np.full((K + 1, S, N), 0.5),
        eps=np.full(K + 1, 3.5),
        Kmax=np.array([11.2, 12.2]),
        X0=np.full(S, 4.0),
        Xminus1=np.zeros(S),
    )


def to_nzdg(sc: SmartGridScenario) -> LqGame:
    """Build the LQ game with state ``[X_k; X_{k-1}]`` and controls ``(u, K)``."""
    bad = sc.problems()
    if bad:
        raise ValueError("invalid scenario: " + "; ".join(bad))
    S, N, K, mt = sc.S, sc.N, sc.K, sc.mt
    n, l = 2 * S, N + 1
    dims = Dims(n=n, N=N, K=K, m=sc.m, s=(1,) * N, l=l)
    I_S = np.eye(S)

    A = np.zeros((K, n, n))
    B = np.zeros((K, n, mt))
    for k in range(K):
        A[k, :S, :S] = sc.Atilde[k] + sc.Btilde[k] @ sc.P[k]
        A[k, S:, :S] = I_S
        B[k, :S] = -sc.Btilde[k]

    Q = np.zeros((K + 1, n, n))
    for k in range(K):
        Q[k] = np.kron(np.array([[1.0, -1.0], [-1.0, 1.0]]), sc.q[k] * I_S)
    Q[K] = np.kron(np.array([[1.0, 0.0], [0.0, 0.0]]), sc.q[K] * I_S)

    Ri = np.zeros((K, N, mt, mt))
    Di = np.zeros((K + 1, N, N, N))
    di = np.zeros((K + 1, N, N))
    for i in range(N):
        sl = sc.u_slice(i)
        Ri[:, i, sl, sl] = sc.rcost[:, i, None, None] * np.eye(sc.m[i])
        Di[:, i, i, i] = sc.b[:, i]
        di[:, i, i] = -sc.a[:, i]

    # the common incentive is subtracted from the cost and acts on X_k only
    L = np.zeros((K + 1, n, N))
    L[:, :S, :] = -sc.Ltilde

    M = np.zeros((K + 1, l, n))
    M[:, 0, :S] = 1.0
    Ncon = np.repeat(-np.vstack([np.ones((1, N)), np.eye(N)])[None], K + 1, axis=0)
    r = np.zeros((K + 1, l))
    r[:, 0] = -sc.eps
    r[:, 1:] = sc.Kmax

    rep = lambda a: np.repeat(a[:, None], N, axis=1)  # noqa: E731
    return LqGame(dims=dims, A=A, B=B, Qi=rep(Q), pi=np.zeros((K + 1, N, n)), Ri=Ri,
                  Di=Di, di=di, Li=rep(L), M=M, Ncon=Ncon, r=r,
                  x0=np.concatenate([sc.X0, sc.Xminus1]))


def scale_parameter(sc: SmartGridScenario, name: str, factor: float) -> SmartGridScenario:
    """Scale one named parameter; ``a2``/``b1``/``Kmax2`` address a single user (1-based)."""
    simple = {"q": "q", "qK": None, "r": "rcost", "b": "b", "a": "a", "eps": "eps",
              "L": "Ltilde", "Kmax": "Kmax", "X0": "X0"}
    if name == "qK":
        q = np.array(sc.q)
        q[-1] *= factor
        return sc.replace(q=q)
    if name in simple:
        return sc.replace(**{simple[name]: np.asarray(getattr(sc, simple[name])) * factor})
    for prefix, field_ in (("Kmax", "Kmax"), ("a", "a"), ("b", "b"), ("r", "rcost")):
        tail = name[len(prefix):]
        if name.startswith(prefix) and tail.isdigit():
            i = int(tail) - 1
            if not 0 <= i < sc.N:
                raise ValueError(f"user index out of range in {name!r}")
            arr = np.array(getattr(sc, field_))
            arr[..., i] *= factor
            return sc.replace(**{field_: arr})
    raise ValueError(f"unknown scenario parameter {name!r}")


@dataclass(frozen=True, eq=False)
class SmartGridReport:
    """Physical quantities and the per-user cost split.

    ``demand (K, N)``, ``balance (K, N)``, ``storage (K+1, N)``, ``incentive (K+1, N)``
    and ``salvage (N,)`` satisfy
    ``salvage + demand.sum(0) + balance.sum(0) + storage.sum(0) - incentive.sum(0) = total``.
    """

    X: np.ndarray
    consumption: np.ndarray
    battery: np.ndarray
    demand: np.ndarray
    balance: np.ndarray
    storage: np.ndarray
    incentive: np.ndarray
    salvage: np.ndarray
    total: np.ndarray
    storage_margin: np.ndarray
    capacity_margin: np.ndarray


def extract_report(traj: EquilibriumTrajectory, sc: SmartGridScenario) -> SmartGridReport:
    S, N, K = sc.S, sc.N, sc.K
    X = np.asarray(traj.x)[:, :S]
    Xprev = np.vstack([sc.Xminus1[None], X[:-1]])
    u = np.asarray(traj.u)
    Kb = np.asarray(traj.v)
    cons = np.einsum("kms,ks->km", sc.P, X[:K]) - u

    demand = np.zeros((K, N))
    balance = np.zeros((K, N))
    for i in range(N):
        ui = u[:, sc.u_slice(i)]
        demand[:, i] = 0.5 * sc.rcost[:, i] * np.sum(ui ** 2, axis=1)
        balance[:, i] = 0.5 * sc.q[:K] * np.sum((X[:K] - Xprev[:K]) ** 2, axis=1)
    storage = 0.5 * sc.b * Kb ** 2
    common = np.einsum("ks,ksn,kn->k", X, sc.Ltilde, Kb)
    incentive = sc.a * Kb + common[:, None]
    salvage = np.full(N, 0.5 * sc.q[K] * X[K] @ X[K])
    total = salvage + demand.sum(0) + balance.sum(0) + storage.sum(0) - incentive.sum(0)
    return SmartGridReport(
        X=X, consumption=cons, battery=Kb, demand=demand, balance=balance, storage=storage,
        incentive=incentive, salvage=salvage, total=total,
        storage_margin=X.sum(1) - sc.eps - Kb.sum(1),
        capacity_margin=sc.Kmax[None] - Kb,
    )


def switch_stages(consumption: np.ndarray) -> list:
    """First stage at which each column turns from contribution (>0) to consumption (<0)."""
    out = []
    for col in np.asarray(consumption).T:
        hit = None
        for k in range(1, col.size):
            if col[k - 1] > 0 >= col[k]:
                hit = k
                break
        out.append(hit)
    return out


def full_capacity_stages(battery: np.ndarray, Kmax, tol: float = 1e-6) -> list:
    """Stages where each user's battery sits within ``tol`` of its capacity."""
    return [np.flatnonzero(np.abs(battery[:, i] - Kmax[i]) <= tol).tolist()
            for i in range(battery.shape[1])]


def check_costs(game: LqGame, traj: EquilibriumTrajectory, sc: SmartGridScenario) -> float:
    """Largest gap between the cost split and the generic per-player costs."""
    rep = extract_report(traj, sc)
    J = player_costs(game, traj.x, traj.u, traj.v)
    return float(np.max(np.abs(rep.total - J)))
