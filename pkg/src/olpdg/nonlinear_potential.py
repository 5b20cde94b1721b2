"""Numerical potential-game tests for games given by cost callbacks.

A stage point is the concatenation ``(x, u, v)`` (``(x, v)`` at the terminal
stage).  The field ``F_k`` stacks the shared state gradient with each
player's gradient in its own controls; when the cross-player second
derivatives are symmetric it is conservative and its line integral from a
base point is a potential.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import simpson

from .game_core import NonlinearGame

FD_HESS = 1e-5
FD_GRAD = 1e-6


@dataclass
class SymmetryReport:
    # entries: (condition, k, (i, j), sample index, max |deviation|); players 1-based
    entries: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    tol: float = 1e-4

    @property
    def holds(self) -> bool:
        return all(e[4] <= self.tol for e in self.entries)

    @property
    def worst(self) -> list:
        return sorted((e for e in self.entries if e[4] > self.tol), key=lambda e: -e[4])


@dataclass(frozen=True, eq=False)
class PathSpec:
    base_point: Optional[np.ndarray] = None
    quadrature_nodes: int = 16

    def __post_init__(self):
        if self.quadrature_nodes < 2:
            raise ValueError("quadrature_nodes must be >= 2")


def _layout(game: NonlinearGame, k: int):
    d = game.dims
    terminal = k == d.K
    n, mt, st = d.n, 0 if terminal else d.mt, d.st
    return n, mt, st, terminal


def split_point(game: NonlinearGame, k: int, point):
    n, mt, st, terminal = _layout(game, k)
    point = np.asarray(point, float)
    if point.size != n + mt + st:
        raise ValueError(f"stage {k} point needs {n + mt + st} entries, got {point.size}")
    x, u, v = point[:n], point[n:n + mt], point[n + mt:]
    return x, (None if terminal else u), v


def _cost(game, k, i, point):
    x, u, v = split_point(game, k, point)
    return game.cost(k, i, x, u, v)


def _index_blocks(game: NonlinearGame, k: int):
    """Index arrays of x, each player's u and each player's v within a stage point."""
    d = game.dims
    n, mt, st, terminal = _layout(game, k)
    xs = np.arange(n)
    us = [] if terminal else [n + np.arange(d.mt)[d.u_slice(i)] for i in range(d.N)]
    vs = [n + mt + np.arange(d.st)[d.v_slice(i)] for i in range(d.N)]
    return xs, us, vs


def _fd_grad(f, p, idx, h):
    g = np.empty(len(idx))
    for a, ia in enumerate(idx):
        e = np.zeros_like(p)
        e[ia] = h
        g[a] = (f(p + e) - f(p - e)) / (2 * h)
    return g


def _fd_cross(f, p, rows, cols, h):
    """Central four-point estimate of ``d^2 f / dp[rows] dp[cols]``."""
    out = np.empty((len(rows), len(cols)))
    for a, ia in enumerate(rows):
        for b, ib in enumerate(cols):
            ea = np.zeros_like(p)
            eb = np.zeros_like(p)
            ea[ia] = h
            eb[ib] = h
            out[a, b] = (f(p + ea + eb) - f(p + ea - eb) - f(p - ea + eb) + f(p - ea - eb)) / (4 * h * h)
    return out


def check_symmetry(game: NonlinearGame, sample_points, fd_step: float = FD_HESS,
                   tol: float = 1e-4) -> SymmetryReport:
    """Finite-difference test of the cross-player symmetry conditions.

    ``sample_points`` is a list of ``(k, point)``.  Conditions: ``ux`` compares
    the ``(u^i, u^j)`` second derivatives of ``g^i`` and ``g^j``; ``vv`` does the
    same for ``v``; ``px`` compares the state gradients of ``g^i`` and ``g^j``;
    ``sep`` requires ``d^2 g^i / du^i dv^j`` to vanish.
    """
    if fd_step <= 0:
        raise ValueError("fd_step must be positive")
    d = game.dims
    rep = SymmetryReport(tol=tol)
    for idx, (k, point) in enumerate(sample_points):
        p = np.asarray(point, float)
        xs, us, vs = _index_blocks(game, k)
        f = [lambda q, i=i: _cost(game, k, i, q) for i in range(d.N)]
        try:
            found = []
            grads_x = [_fd_grad(f[i], p, xs, FD_GRAD) for i in range(d.N)]
            for i in range(d.N):
                for j in range(i + 1, d.N):
                    found.append(("px", k, (i + 1, j + 1), idx,
                                  float(np.max(np.abs(grads_x[i] - grads_x[j])))))
                    if us:
                        a = _fd_cross(f[i], p, us[i], us[j], fd_step)
                        b = _fd_cross(f[j], p, us[i], us[j], fd_step)
                        found.append(("ux", k, (i + 1, j + 1), idx, float(np.max(np.abs(a - b)))))
                    a = _fd_cross(f[i], p, vs[i], vs[j], fd_step)
                    b = _fd_cross(f[j], p, vs[i], vs[j], fd_step)
                    found.append(("vv", k, (i + 1, j + 1), idx, float(np.max(np.abs(a - b)))))
            if us:
                for i in range(d.N):
                    for j in range(d.N):
                        c = _fd_cross(f[i], p, us[i], vs[j], fd_step)
                        found.append(("sep", k, (i + 1, j + 1), idx, float(np.max(np.abs(c)))))
        except Exception as exc:  # evaluator failure flags the sample only
            rep.failures.append((idx, k, repr(exc)))
            continue
        rep.entries.extend(found)
    return rep


def build_field(game: NonlinearGame, k: int, point) -> np.ndarray:
    """``[dg^1/dx; dg^1/du^1; ...; dg^N/du^N; dg^1/dv^1; ...; dg^N/dv^N]`` at ``point``."""
    d = game.dims
    p = np.asarray(point, float)
    x, u, v = split_point(game, k, p)
    xs, us, vs = _index_blocks(game, k)
    if game.gradient is not None:
        g = [np.asarray(game.gradient(k, i, x, u, v), float) for i in range(d.N)]
        parts = [g[0][xs]] + [g[i][us[i]] for i in range(len(us))] + [g[i][vs[i]] for i in range(d.N)]
        return np.concatenate(parts)
    parts = []
    for name, i, idx in ([("x", 0, xs)] + [("u", i, us[i]) for i in range(len(us))]
                         + [("v", i, vs[i]) for i in range(d.N)]):
        try:
            parts.append(_fd_grad(lambda q: _cost(game, k, i, q), p, idx, FD_GRAD))
        except Exception as exc:
            raise RuntimeError(f"cost evaluation failed in the {name}-block of player {i + 1}") from exc
    return np.concatenate(parts)


def integrate_potential(game: NonlinearGame, k: int, point, path: Optional[PathSpec] = None) -> float:
    """Line integral of ``F_k`` along the segment from ``path.base_point`` to ``point``.

    Composite Simpson with ``path.quadrature_nodes`` panels; the integration
    constant is zero, so the value at the base point is 0.
    """
    path = path or PathSpec()
    p = np.asarray(point, float)
    base = np.zeros_like(p) if path.base_point is None else np.asarray(path.base_point, float)
    if base.shape != p.shape:
        raise ValueError("base point and target point differ in dimension")
    dz = p - base
    zs = np.linspace(0.0, 1.0, 2 * path.quadrature_nodes + 1)
    vals = np.array([build_field(game, k, base + z * dz) @ dz for z in zs])
    return float(simpson(vals, x=zs))
