"""When is a two-player LQ game a potential game, and what does the potential buy us."""

import numpy as np

from olpdg.game_core import Dims, LqGame, player_costs, rollout
from olpdg.potential_check import build_ocp, check_conditions, potential_total

rng = np.random.default_rng(7)
dims = Dims(n=2, N=2, K=4, m=(1, 1), s=(1, 1), l=1)
K, n = dims.K, dims.n

# shared state costs, shared cross blocks in R and D, own diagonal blocks free
A = np.repeat(np.array([[0.9, 0.2], [0.0, 0.8]])[None], K, 0)
B = np.repeat(np.array([[1.0, 0.0], [0.5, 1.0]])[None], K, 0)
Q = np.repeat(np.eye(n)[None, None], K + 1, 0).repeat(2, 1)
R = np.zeros((K, 2, 2, 2))
R[:, 0] = [[2.0, 0.3], [0.3, 5.0]]
R[:, 1] = [[7.0, 0.3], [0.3, 1.5]]
D = np.zeros((K + 1, 2, 2, 2))
D[:, 0] = [[1.0, 0.1], [0.1, 0.0]]
D[:, 1] = [[0.0, 0.1], [0.1, 2.0]]
game = LqGame(dims=dims, A=A, B=B, Qi=Q, pi=np.zeros((K + 1, 2, n)), Ri=R, Di=D,
              di=np.zeros((K + 1, 2, 2)), Li=np.zeros((K + 1, 2, n, 2)),
              M=np.zeros((K + 1, 1, n)), Ncon=np.ones((K + 1, 1, 2)), r=np.ones((K + 1, 1)),
              x0=np.array([1.0, -1.0]))

print("potential game:", check_conditions(game).is_potential)
ocp = build_ocp(game)
print("pooled R_0 takes each player's own rows:\n", ocp.R[0])

# a unilateral change moves the potential exactly as much as the mover's cost
u = rng.normal(size=(K, 2))
v = rng.uniform(size=(K + 1, 2))
u2 = u.copy()
u2[:, 1] += 0.5
dP = potential_total(ocp, rollout(game, u2), u2, v) - potential_total(ocp, rollout(game, u), u, v)
dJ = player_costs(game, rollout(game, u2), u2, v) - player_costs(game, rollout(game, u), u, v)
print(f"change in potential {dP:.6f}, change in player 2 cost {dJ[1]:.6f}, player 1 {dJ[0]:.6f}")

# break the shared cross block for one player
R_bad = R.copy()
R_bad[2, 1] = [[7.0, 0.8], [0.8, 1.5]]
bad = LqGame(**{**game.__dict__, "Ri": R_bad})
rep = check_conditions(bad)
print("\nafter editing player 2's cross block at k=2:", rep.is_potential)
for cond, k, players, dev in rep.violations:
    print(f"  {cond} at k={k}, players {players}, deviation {dev:.2f}")
