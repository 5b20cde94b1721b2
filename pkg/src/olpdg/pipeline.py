"""Potential check -> pooled OCP -> backward pass -> LCP -> trajectory."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .game_core import EquilibriumTrajectory, LqGame
from .lcp import (INFEASIBLE_STAGE, LcpError, LcpProblem, LcpSolution, assemble_lcp,
                  assemble_stage_blocks, lemke_solve, stage0_problem)
from .potential_check import OcpData, PotentialReport, build_ocp, check_conditions
from .tpbvp import AffineMaps, BackwardPass, assemble_affine_maps, backward_pass, recover_trajectory


@dataclass(eq=False)
class EquilibriumSolution:
    game: LqGame
    potential: PotentialReport
    ocp: OcpData
    backward: BackwardPass
    maps: AffineMaps
    problem: LcpProblem
    lcp: LcpSolution
    stage0: LcpSolution
    trajectory: EquilibriumTrajectory


def solve_ocp(game: LqGame, ocp: OcpData, max_pivots: Optional[int] = None) -> EquilibriumSolution:
    """Solve the optimality system of the pooled problem for a given ``ocp``."""
    bp = backward_pass(ocp, game)
    maps = assemble_affine_maps(bp, ocp, game)
    problem = assemble_lcp(assemble_stage_blocks(ocp, game), maps, game, ocp)
    sol = lemke_solve(problem, max_pivots=max_pivots)
    if not sol.solved:
        raise LcpError(f"stacked LCP (d={problem.size}): {sol.status}; no equilibrium certificate", sol)
    s0 = lemke_solve(stage0_problem(ocp, game), max_pivots=max_pivots)
    if not s0.solved:
        raise LcpError(f"stage-0 LCP: {INFEASIBLE_STAGE} ({s0.status})", s0)
    st = game.dims.st
    traj = recover_trajectory(bp, ocp, game, sol.z, (s0.z[:st], s0.z[st:]))
    return EquilibriumSolution(game=game, potential=PotentialReport(), ocp=ocp, backward=bp,
                               maps=maps, problem=problem, lcp=sol, stage0=s0, trajectory=traj)


def solve(game: LqGame, max_pivots: Optional[int] = None, rtol: float = 1e-10) -> EquilibriumSolution:
    """Compute the potential-refined open-loop Nash equilibrium of ``game``."""
    report = check_conditions(game, rtol=rtol)
    ocp = build_ocp(game, rtol=rtol)
    out = solve_ocp(game, ocp, max_pivots=max_pivots)
    out.potential = report
    return out
