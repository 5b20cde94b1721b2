"""Linear complementarity problems: assembly and solvers.

An LCP(q, M) asks for ``z >= 0`` with ``w = M z + q >= 0`` and ``z'w = 0``.
``lemke_solve`` is Lemke's complementary pivoting method with a unit
covering vector and lexicographic ratio tests; ``enumerate_solve`` checks
every complementary basis and serves as an oracle on small problems.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .game_core import LqGame
from .potential_check import OcpData
from .tpbvp import AffineMaps

SOLVED = "solved"
RAY = "ray_termination"
MAX_PIVOTS = "max_pivots"
INFEASIBLE_STAGE = "infeasible_stage"
SINGULAR = "singular_pivot"

ENUM_CAP = 20


class LcpError(RuntimeError):
    def __init__(self, msg, solution=None):
        super().__init__(msg)
        self.solution = solution


@dataclass(frozen=True, eq=False)
class LcpProblem:
    M: np.ndarray
    q: np.ndarray
    labels: Optional[list] = None

    def __post_init__(self):
        M = np.atleast_2d(np.asarray(self.M, float))
        q = np.asarray(self.q, float).ravel()
        if M.shape[0] != M.shape[1] or M.shape[0] != q.size:
            raise ValueError(f"LCP needs square M matching q, got {M.shape} and {q.shape}")
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "q", q)

    @property
    def size(self) -> int:
        return self.q.size


@dataclass(frozen=True, eq=False)
class LcpSolution:
    z: np.ndarray
    w: np.ndarray
    status: str
    pivots: int = 0
    basis: Optional[tuple] = None
    info: dict = field(default_factory=dict)

    @property
    def solved(self) -> bool:
        return self.status == SOLVED

    @property
    def active(self) -> frozenset:
        return active_set(self.z)


def active_set(z, tol: float = 1e-9) -> frozenset:
    return frozenset(int(i) for i in np.flatnonzero(np.asarray(z) > tol))


def complementarity_residual(M, q, z) -> float:
    """Largest violation of ``0 <= z _|_ Mz + q >= 0`` (negativity or product)."""
    z = np.asarray(z, float)
    w = M @ z + q
    return float(max(np.max(-z, initial=0.0), np.max(-w, initial=0.0), np.max(np.abs(z * w), initial=0.0)))


def is_lcp_solution(M, q, z, tol: float = 1e-9) -> bool:
    z = np.asarray(z, float)
    w = M @ z + q
    return bool(np.all(z >= -tol) and np.all(w >= -tol)
                and abs(z @ w) <= tol * (1.0 + np.linalg.norm(z) * np.linalg.norm(w)))


def _lexmin_row(tab, rows, col, d):
    """Row among ``rows`` minimizing ``(rhs, B^-1 row) / tab[row, col]`` lexicographically.

    ``col=None`` compares the undivided rows (initial entry of the covering variable).
    """
    best = None
    best_key = None
    for r in rows:
        key = np.concatenate(([tab[r, -1]], tab[r, :d]))
        if col is not None:
            key = key / tab[r, col]
        if best is None:
            best, best_key = r, key
            continue
        diff = key - best_key
        nz = np.flatnonzero(np.abs(diff) > 1e-13 * (1.0 + np.abs(best_key)))
        if nz.size and diff[nz[0]] < 0:
            best, best_key = r, key
    return best


def _polish(problem: LcpProblem, zset):
    """Solve the complementary basis directly to recover an accurate z."""
    d = problem.size
    z = np.zeros(d)
    idx = np.array(sorted(zset), dtype=int)
    if idx.size:
        z[idx] = np.linalg.solve(problem.M[np.ix_(idx, idx)], -problem.q[idx])
    return z


def lemke_solve(problem: LcpProblem, max_pivots: Optional[int] = None, tol: float = 1e-9) -> LcpSolution:
    """Lemke's method with covering vector ``e = 1`` and lexicographic pivoting.

    Tableau columns are ``[w (d) | z (d) | z0 | rhs]``; the ``w`` block holds
    the current basis inverse, which drives the lexicographic tie-breaking.
    """
    M, q = problem.M, problem.q
    d = problem.size
    if max_pivots is None:
        max_pivots = max(100, 50 * d)
    if np.all(q >= 0):
        return LcpSolution(z=np.zeros(d), w=q.copy(), status=SOLVED, pivots=0, basis=tuple(range(d)))

    tab = np.hstack([np.eye(d), -M, -np.ones((d, 1)), q[:, None]])
    basis = list(range(d))  # variable ids: w_i = i, z_i = d + i, z0 = 2d
    z0 = 2 * d

    # z0 enters; the lexicographically smallest (most negative) row leaves
    r = _lexmin_row(tab, range(d), None, d)
    pivots = 0

    def pivot(row, col):
        piv = tab[row, col]
        tab[row] /= piv
        others = np.arange(d) != row
        tab[others] -= np.outer(tab[others, col], tab[row])

    if abs(tab[r, z0]) < 1e-12:
        return LcpSolution(z=np.zeros(d), w=q.copy(), status=SINGULAR, pivots=0)
    leaving = basis[r]
    pivot(r, z0)
    basis[r] = z0
    pivots += 1
    status = MAX_PIVOTS
    while pivots < max_pivots:
        entering = leaving + d if leaving < d else leaving - d
        col = tab[:, entering]
        cand = np.flatnonzero(col > 1e-12)
        if cand.size == 0:
            status = RAY
            break
        r = _lexmin_row(tab, cand, entering, d)
        if abs(tab[r, entering]) < 1e-12:
            status = SINGULAR
            break
        leaving = basis[r]
        pivot(r, entering)
        basis[r] = entering
        pivots += 1
        if leaving == z0:
            status = SOLVED
            break

    vals = np.zeros(2 * d + 1)
    for row, var in enumerate(basis):
        vals[var] = tab[row, -1]
    z = vals[d:2 * d]
    info = {"z0": float(vals[z0])}
    if status == SOLVED:
        zset = {var - d for var in basis if d <= var < 2 * d}
        try:
            zp = _polish(problem, zset)
            if is_lcp_solution(M, q, zp, tol):
                z = zp
        except np.linalg.LinAlgError:
            pass
        z = np.where(np.abs(z) < 1e-14, 0.0, z)
        w = M @ z + q
        if not is_lcp_solution(M, q, z, tol):
            info["residual"] = complementarity_residual(M, q, z)
            status = SINGULAR
        return LcpSolution(z=z, w=w, status=status, pivots=pivots, basis=tuple(sorted(zset)), info=info)
    return LcpSolution(z=z, w=M @ z + q, status=status, pivots=pivots, info=info)


def enumerate_solve(problem: LcpProblem, tol: float = 1e-9) -> list:
    """Every solution found by trying all ``2^d`` complementary index sets."""
    M, q = problem.M, problem.q
    d = problem.size
    if d > ENUM_CAP:
        raise ValueError(f"enumeration capped at d <= {ENUM_CAP}, got {d}")
    found = []
    for size in range(d + 1):
        for idx in itertools.combinations(range(d), size):
            idx = list(idx)
            z = np.zeros(d)
            if idx:
                sub = M[np.ix_(idx, idx)]
                try:
                    z[idx] = np.linalg.solve(sub, -q[idx])
                except np.linalg.LinAlgError:
                    continue
                if not np.all(np.isfinite(z)):
                    continue
            if not is_lcp_solution(M, q, z, tol):
                continue
            if any(np.max(np.abs(z - s.z)) <= 1e-9 * (1.0 + np.max(np.abs(z))) for s in found):
                continue
            found.append(LcpSolution(z=z, w=M @ z + q, status=SOLVED, basis=tuple(idx)))
    return found


# --- assembly for the stacked game LCP -------------------------------------

@dataclass(frozen=True, eq=False)
class StageBlocks:
    """Block-diagonal stage data for stages 1..K (rows ordered v then mu)."""

    Mtilde: np.ndarray
    qtilde: np.ndarray
    stilde: np.ndarray


def stage_matrix(ocp: OcpData, game: LqGame, k: int) -> np.ndarray:
    N = game.Ncon[k]
    l = N.shape[0]
    return np.block([[ocp.D[k], -N.T], [N, np.zeros((l, l))]])


def stage_offset_matrix(ocp: OcpData, game: LqGame, k: int) -> np.ndarray:
    return np.vstack([ocp.L[k].T, game.M[k]])


def assemble_stage_blocks(ocp: OcpData, game: LqGame) -> StageBlocks:
    d = game.dims
    K, w, n = d.K, d.st + d.l, d.n
    Mt = np.zeros((K * w, K * w))
    qt = np.zeros((K * w, K * n))
    st = np.zeros(K * w)
    for k in range(1, K + 1):
        rs = slice((k - 1) * w, k * w)
        Mt[rs, rs] = stage_matrix(ocp, game, k)
        qt[rs, (k - 1) * n:k * n] = stage_offset_matrix(ocp, game, k)
        st[rs] = np.concatenate([ocp.d[k], game.r[k]])
    return StageBlocks(Mtilde=Mt, qtilde=qt, stilde=st)


def stacked_labels(game: LqGame, stages) -> list:
    """``(stage, kind, index)`` per row; index is the 1-based player for v rows."""
    d = game.dims
    owner = [i + 1 for i in range(d.N) for _ in range(d.s[i])]
    labels = []
    for k in stages:
        labels += [(k, "v", owner[j]) for j in range(d.st)]
        labels += [(k, "mu", j + 1) for j in range(d.l)]
    return labels


def assemble_lcp(blocks: StageBlocks, maps: AffineMaps, game: LqGame, ocp: OcpData) -> LcpProblem:
    pstack = ocp.p[1:].ravel()
    Mbig = blocks.Mtilde + blocks.qtilde @ maps.Phi2
    qbig = blocks.qtilde @ (maps.Phi0 @ game.x0 + maps.Phi1 @ pstack) + blocks.stilde
    return LcpProblem(M=Mbig, q=qbig, labels=stacked_labels(game, range(1, game.dims.K + 1)))


def stage0_problem(ocp: OcpData, game: LqGame, x0=None) -> LcpProblem:
    x0 = game.x0 if x0 is None else np.asarray(x0, float)
    q = stage_offset_matrix(ocp, game, 0) @ x0 + np.concatenate([ocp.d[0], game.r[0]])
    return LcpProblem(M=stage_matrix(ocp, game, 0), q=q, labels=stacked_labels(game, [0]))


def solve_stage0(ocp: OcpData, game: LqGame, x0=None, **kw):
    """Solve the stage-0 complementarity block for ``(v_0, mu_0)``."""
    sol = lemke_solve(stage0_problem(ocp, game, x0), **kw)
    if not sol.solved:
        raise LcpError(f"stage-0 complementarity problem: {sol.status}", sol)
    s = game.dims.st
    return sol.z[:s], sol.z[s:]
