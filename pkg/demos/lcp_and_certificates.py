"""Lemke pivoting, the enumeration oracle, and the second-order certificate on a small game."""

import numpy as np

from olpdg.game_core import Dims, LqGame
from olpdg.lcp import LcpProblem, enumerate_solve, lemke_solve
from olpdg.pipeline import solve
from olpdg.verify import best_response_check, build_hessian, kkt_residuals, sufficiency_pass

rng = np.random.default_rng(3)

# a symmetric positive definite LCP has exactly one solution
X = rng.normal(size=(6, 6))
prob = LcpProblem(X @ X.T / 6 + 0.5 * np.eye(6), rng.normal(size=6))
lem = lemke_solve(prob)
print("Lemke:", lem.status, "after", lem.pivots, "pivots, support", sorted(lem.active))
sols = enumerate_solve(prob)
print("enumeration finds", len(sols), "solution(s); max difference", np.abs(sols[0].z - lem.z).max())

# a nonconvex instance can have several
many = enumerate_solve(LcpProblem([[1.0, 2.0], [2.0, 1.0]], [-1.0, -1.0]))
print("indefinite 2x2 example:", [s.z.round(3).tolist() for s in many])

# a three-player game with one coupled constraint  x_1 - v^1 - v^2 - v^3 + 2 >= 0
dims = Dims(n=2, N=3, K=5, m=(1, 1, 1), s=(1, 1, 1), l=1)
K = dims.K
A = np.repeat(np.array([[1.0, 0.1], [0.0, 0.95]])[None], K, 0)
B = np.repeat(np.array([[0.0, 0.1, 0.2], [0.1, 0.0, 0.1]])[None], K, 0)
R = np.repeat(np.eye(3)[None, None], K, 0).repeat(3, 1)
D = np.repeat((np.eye(3) + 0.2)[None, None], K + 1, 0).repeat(3, 1)
L = np.zeros((K + 1, 3, 2, 3))
L[:, :, 0, :] = -0.3
game = LqGame(dims=dims, A=A, B=B, Qi=np.repeat(np.eye(2)[None, None], K + 1, 0).repeat(3, 1),
              pi=np.zeros((K + 1, 3, 2)), Ri=R, Di=D, di=-np.ones((K + 1, 3, 3)), Li=L,
              M=np.repeat(np.array([[1.0, 0.0]])[None], K + 1, 0),
              Ncon=-np.ones((K + 1, 1, 3)), r=2.0 * np.ones((K + 1, 1)), x0=np.array([1.0, 1.0]))
sol = solve(game)
t = sol.trajectory
print("\nstacked LCP size", sol.problem.size, sol.lcp.status)
print("v (rows are stages):\n", t.v.round(4))
print("constraint multipliers:", t.mu.ravel().round(4))
print("max KKT residual", kkt_residuals(sol.ocp, game, t).max_residual)

hd = build_hessian(sol.ocp, game, sufficiency_pass(sol.ocp, game, t.v, t.mu))
print("Hessian of the control-only objective:", hd.status, "smallest pivot", round(hd.min_pivot, 4))
for i in range(3):
    print(f"player {i + 1} best-response gap {best_response_check(game, t, i).gap:.2e}")
