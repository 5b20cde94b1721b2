"""Data model for constrained linear-quadratic and nonlinear difference games.

Stages run ``k = 0..K``.  Dynamics-entering controls ``u`` exist for
``k = 0..K-1``; constraint-entering controls ``v`` and the multipliers ``mu``
exist for every stage.  Player-indexed arrays carry the player on axis 1,
e.g. ``Qi[k, i]`` is player ``i``'s state weight at stage ``k``.  Joint
controls are stacked player by player, so player ``i`` owns the slice
``dims.u_slice(i)`` of ``u_k`` and ``dims.v_slice(i)`` of ``v_k``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

SYM_RTOL = 1e-12
FEAS_TOL = 1e-9


@dataclass(frozen=True)
class Dims:
    n: int
    N: int
    K: int
    m: tuple
    s: tuple
    l: int

    def __post_init__(self):
        object.__setattr__(self, "m", tuple(int(x) for x in self.m))
        object.__setattr__(self, "s", tuple(int(x) for x in self.s))
        if self.n < 1 or self.N < 1 or self.K < 1 or self.l < 1:
            raise ValueError(f"n, N, K, l must be >= 1, got {self}")
        if len(self.m) != self.N or len(self.s) != self.N:
            raise ValueError("m and s need one entry per player")
        if min(self.m) < 1 or min(self.s) < 1:
            raise ValueError("per-player control dimensions must be >= 1")

    @property
    def mt(self) -> int:
        """Total u dimension."""
        return sum(self.m)

    @property
    def st(self) -> int:
        """Total v dimension."""
        return sum(self.s)

    def u_slice(self, i: int) -> slice:
        off = sum(self.m[:i])
        return slice(off, off + self.m[i])

    def v_slice(self, i: int) -> slice:
        off = sum(self.s[:i])
        return slice(off, off + self.s[i])


def _asym(X):
    return float(np.max(np.abs(X - X.T))) if X.size else 0.0


def _symmetrize_stack(name, arr):
    """Symmetrize round-off asymmetries in the trailing two axes, in place."""
    flat = arr.reshape(-1, arr.shape[-2], arr.shape[-1])
    for X in flat:
        dev = _asym(X)
        if dev == 0.0:
            continue
        scale = max(float(np.max(np.abs(X))), 1.0)
        if dev <= SYM_RTOL * scale:
            warnings.warn(f"{name}: symmetrizing asymmetry {dev:.3e}", stacklevel=3)
            X[...] = 0.5 * (X + X.T)
    return arr


@dataclass(frozen=True, eq=False)
class LqGame:
    """N-player finite-horizon LQ difference game with coupled constraints.

    Shapes (``m``/``s`` are the joint control sizes)::

        A (K, n, n)          B (K, n, m)
        Qi (K+1, N, n, n)    pi (K+1, N, n)
        Ri (K, N, m, m)
        Di (K+1, N, s, s)    di (K+1, N, s)    Li (K+1, N, n, s)
        M (K+1, l, n)        Ncon (K+1, l, s)  r (K+1, l)
        x0 (n,)

    Player ``i``'s input matrix is the column block ``B[k][:, dims.u_slice(i)]``.
    """

    dims: Dims
    A: np.ndarray
    B: np.ndarray
    Qi: np.ndarray
    pi: np.ndarray
    Ri: np.ndarray
    Di: np.ndarray
    di: np.ndarray
    Li: np.ndarray
    M: np.ndarray
    Ncon: np.ndarray
    r: np.ndarray
    x0: np.ndarray

    def __post_init__(self):
        for name in ("A", "B", "Qi", "pi", "Ri", "Di", "di", "Li", "M", "Ncon", "r", "x0"):
            arr = np.array(getattr(self, name), dtype=float)
            if name in ("Qi", "Ri", "Di") and arr.ndim >= 2 and arr.shape[-1] == arr.shape[-2]:
                _symmetrize_stack(name, arr)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def B_player(self, k: int, i: int) -> np.ndarray:
        return self.B[k][:, self.dims.u_slice(i)]

    def expected_shapes(self) -> dict:
        d = self.dims
        n, N, K, m, s, l = d.n, d.N, d.K, d.mt, d.st, d.l
        return {
            "A": (K, n, n), "B": (K, n, m),
            "Qi": (K + 1, N, n, n), "pi": (K + 1, N, n),
            "Ri": (K, N, m, m),
            "Di": (K + 1, N, s, s), "di": (K + 1, N, s), "Li": (K + 1, N, n, s),
            "M": (K + 1, l, n), "Ncon": (K + 1, l, s), "r": (K + 1, l),
            "x0": (n,),
        }


@dataclass(frozen=True, eq=False)
class EquilibriumTrajectory:
    x: np.ndarray       # (K+1, n)
    u: np.ndarray       # (K, m)
    v: np.ndarray       # (K+1, s)
    lam: np.ndarray     # (K+1, n)
    mu: np.ndarray      # (K+1, l)


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def __str__(self):
        return "valid" if self.ok else "\n".join(self.violations)


def validate(game: LqGame) -> ValidationReport:
    """List every shape mismatch, asymmetric weight and non-PD own-control weight.

    Positive definiteness is required of each player's own block
    ``[Ri]_ii``; off-diagonal blocks couple players and may leave the full
    ``Ri`` singular (as in the smart-grid model).
    """
    rep = ValidationReport()
    shapes = game.expected_shapes()
    bad_shape = False
    for name, want in shapes.items():
        got = getattr(game, name).shape
        if got != want:
            rep.violations.append(f"{name} has shape {got}, expected {want}")
            bad_shape = True
    if bad_shape:
        return rep

    d = game.dims
    for name, kmax in (("Qi", d.K + 1), ("Ri", d.K), ("Di", d.K + 1)):
        arr = getattr(game, name)
        for k in range(kmax):
            for i in range(d.N):
                X = arr[k, i]
                dev = _asym(X)
                scale = max(float(np.max(np.abs(X))), 1.0) if X.size else 1.0
                if dev > SYM_RTOL * scale:
                    rep.violations.append(
                        f"{name[0]} not symmetric at k={k}, i={i + 1} (max |X - X'| = {dev:.3e})")
    for k in range(d.K):
        for i in range(d.N):
            sl = d.u_slice(i)
            Rii = game.Ri[k, i][sl, sl]
            try:
                np.linalg.cholesky(0.5 * (Rii + Rii.T))
            except np.linalg.LinAlgError:
                rep.violations.append(f"R not positive definite at k={k}, i={i + 1}")
    return rep


def _check_controls(game: LqGame, u, v):
    d = game.dims
    u = np.asarray(u, dtype=float).reshape(d.K, d.mt) if np.size(u) == d.K * d.mt else None
    v = np.asarray(v, dtype=float).reshape(d.K + 1, d.st) if np.size(v) == (d.K + 1) * d.st else None
    if u is None or v is None:
        raise ValueError(f"controls must have shapes ({d.K}, {d.mt}) and ({d.K + 1}, {d.st})")
    return u, v


def rollout(game: LqGame, u, x0=None) -> np.ndarray:
    """State sequence under ``x_{k+1} = A_k x_k + B_k u_k``."""
    d = game.dims
    x = np.empty((d.K + 1, d.n))
    x[0] = game.x0 if x0 is None else x0
    for k in range(d.K):
        x[k + 1] = game.A[k] @ x[k] + game.B[k] @ u[k]
    return x


def player_costs(game: LqGame, x, u, v) -> np.ndarray:
    d = game.dims
    J = np.zeros(d.N)
    for i in range(d.N):
        tot = 0.0
        for k in range(d.K + 1):
            xk, vk = x[k], v[k]
            tot += 0.5 * xk @ game.Qi[k, i] @ xk + game.pi[k, i] @ xk
            tot += 0.5 * vk @ game.Di[k, i] @ vk + game.di[k, i] @ vk + xk @ game.Li[k, i] @ vk
            if k < d.K:
                tot += 0.5 * u[k] @ game.Ri[k, i] @ u[k]
        J[i] = tot
    return J


def constraint_values(game: LqGame, x, v) -> np.ndarray:
    """``h_k = M_k x_k + N_k v_k + r_k`` for every stage, shape (K+1, l)."""
    return np.einsum("kln,kn->kl", game.M, x) + np.einsum("kls,ks->kl", game.Ncon, v) + game.r


@dataclass(frozen=True, eq=False)
class Simulation:
    states: np.ndarray
    costs: np.ndarray
    feasible: np.ndarray


def simulate(game: LqGame, u, v, x0=None) -> Simulation:
    """Roll the dynamics forward, evaluate every player's cost and per-stage feasibility."""
    u, v = _check_controls(game, u, v)
    x = rollout(game, u, x0)
    h = constraint_values(game, x, v)
    feas = np.all(h >= -FEAS_TOL, axis=1) & np.all(v >= -FEAS_TOL, axis=1)
    return Simulation(states=x, costs=player_costs(game, x, u, v), feasible=feas)


def trajectory_from_controls(game: LqGame, u, v) -> EquilibriumTrajectory:
    """Wrap controls into a trajectory with re-simulated states and zero duals."""
    d = game.dims
    u, v = _check_controls(game, u, v)
    x = rollout(game, u)
    return EquilibriumTrajectory(x=x, u=u, v=v, lam=np.zeros((d.K + 1, d.n)),
                                 mu=np.zeros((d.K + 1, d.l)))


@dataclass(frozen=True, eq=False)
class NonlinearGame:
    """General game given by evaluation callbacks.

    ``stage_cost(k, i, x, u, v)`` is player ``i``'s cost for ``k < K`` and
    ``terminal_cost(i, x, v)`` the salvage term.  ``dynamics(k, x, u)`` and
    ``constraints(k, x, v)`` are optional; the potential machinery only needs
    the costs.  ``gradient(k, i, x, u, v)``, when given, returns the analytic
    gradient of player ``i``'s cost with respect to ``(x, u, v)`` (``(x, v)``
    at ``k = K``, where ``u`` is passed as ``None``).
    """

    dims: Dims
    stage_cost: Callable
    terminal_cost: Callable
    dynamics: Optional[Callable] = None
    constraints: Optional[Callable] = None
    gradient: Optional[Callable] = None

    def cost(self, k, i, x, u, v) -> float:
        if k == self.dims.K:
            return float(self.terminal_cost(i, x, v))
        return float(self.stage_cost(k, i, x, u, v))


def lq_as_nonlinear(game: LqGame) -> NonlinearGame:
    """View an LQ game through the callback interface, with analytic gradients."""
    d = game.dims

    def stage_cost(k, i, x, u, v):
        return (0.5 * x @ game.Qi[k, i] @ x + game.pi[k, i] @ x + 0.5 * u @ game.Ri[k, i] @ u
                + 0.5 * v @ game.Di[k, i] @ v + game.di[k, i] @ v + x @ game.Li[k, i] @ v)

    def terminal_cost(i, x, v):
        K = d.K
        return (0.5 * x @ game.Qi[K, i] @ x + game.pi[K, i] @ x
                + 0.5 * v @ game.Di[K, i] @ v + game.di[K, i] @ v + x @ game.Li[K, i] @ v)

    def gradient(k, i, x, u, v):
        gx = game.Qi[k, i] @ x + game.pi[k, i] + game.Li[k, i] @ v
        gv = game.Di[k, i] @ v + game.di[k, i] + game.Li[k, i].T @ x
        if u is None:
            return np.concatenate([gx, gv])
        return np.concatenate([gx, game.Ri[k, i] @ u, gv])

    def dynamics(k, x, u):
        return game.A[k] @ x + game.B[k] @ u

    def constraints(k, x, v):
        return game.M[k] @ x + game.Ncon[k] @ v + game.r[k]

    return NonlinearGame(dims=d, stage_cost=stage_cost, terminal_cost=terminal_cost,
                         dynamics=dynamics, constraints=constraints, gradient=gradient)
