"""Numerical potential test for games given only by cost callbacks."""

import numpy as np

from olpdg.game_core import Dims, NonlinearGame
from olpdg.nonlinear_potential import PathSpec, check_symmetry, integrate_potential

dims = Dims(n=1, N=2, K=1, m=(1, 1), s=(1, 1), l=1)


def shared(k, i, x, u, v):
    # common state/control coupling plus a term in each player's own control
    return np.sin(x[0]) * u[0] * u[1] + x[0] ** 2 + v[0] * v[1] + (i + 1) * u[i] ** 4


def lopsided(k, i, x, u, v):
    # player 1 weighs the interaction twice as much as player 2
    return (2.0 if i == 0 else 1.0) * u[0] * u[1] + x[0] ** 2


pts = [(0, p) for p in np.random.default_rng(0).normal(size=(4, 5))]
for name, cost in (("shared", shared), ("lopsided", lopsided)):
    game = NonlinearGame(dims=dims, stage_cost=cost, terminal_cost=lambda i, x, v: 0.0)
    rep = check_symmetry(game, pts)
    print(f"{name}: conditions hold = {rep.holds}")
    for cond, k, players, idx, dev in rep.worst[:3]:
        print(f"   {cond} players {players} sample {idx}: {dev:.3f}")

# line integral of the field from the origin gives the potential value
game = NonlinearGame(dims=dims, stage_cost=shared, terminal_cost=lambda i, x, v: 0.0)
p = np.array([0.5, 0.3, -0.2, 0.1, 0.4])
for nodes in (4, 16, 64):
    print(f"{nodes:3d} nodes: potential {integrate_potential(game, 0, p, PathSpec(quadrature_nodes=nodes)):.10f}")
