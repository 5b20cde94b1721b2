import dataclasses

import numpy as np
import pytest

from factories import random_potential_game
from olpdg.game_core import Dims, NonlinearGame, lq_as_nonlinear
from olpdg.nonlinear_potential import (PathSpec, build_field, check_symmetry, integrate_potential)
from olpdg.potential_check import potential_value


def callback_game(stage, terminal=None, dims=None, gradient=None):
    dims = dims or Dims(n=1, N=2, K=1, m=(1, 1), s=(1, 1), l=1)
    terminal = terminal or (lambda i, x, v: 0.0)
    return NonlinearGame(dims=dims, stage_cost=stage, terminal_cost=terminal, gradient=gradient)


def lq_points(rng, g, count):
    d = g.dims
    out = []
    for _ in range(count):
        k = int(rng.integers(0, d.K + 1))
        size = d.n + (0 if k == d.K else d.mt) + d.st
        out.append((k, rng.normal(size=size)))
    return out


def test_mismatched_cross_terms_fail():
    g = callback_game(lambda k, i, x, u, v: (1.0 if i == 0 else 2.0) * u[0] * u[1])
    rep = check_symmetry(g, [(0, np.array([0.3, 0.1, -0.2, 0.5, 0.4]))])
    assert not rep.holds
    worst = rep.worst[0]
    assert worst[0] == "ux" and worst[2] == (1, 2)
    assert abs(worst[4] - 1.0) < 1e-4


def test_identical_costs_hold():
    cost = lambda k, i, x, u, v: np.sin(x[0]) * u[0] * u[1] + x[0] ** 2 + v[0] * v[1]  # noqa: E731
    g = callback_game(cost)
    pts = [(0, p) for p in np.random.default_rng(0).normal(size=(5, 5))]
    assert check_symmetry(g, pts).holds


def test_separability_extension_flags_uv_coupling():
    g = callback_game(lambda k, i, x, u, v: u[i] * v[1 - i])
    rep = check_symmetry(g, [(0, np.zeros(5))])
    assert not rep.holds
    assert {e[0] for e in rep.worst} == {"sep"}


def test_single_player_always_holds():
    d = Dims(n=2, N=1, K=1, m=(2,), s=(1,), l=1)
    g = callback_game(lambda k, i, x, u, v: np.exp(x[0] * u[1]) + u[0] * x[1], dims=d)
    pts = [(0, p) for p in np.random.default_rng(1).normal(scale=0.5, size=(4, 5))]
    assert check_symmetry(g, pts).holds


def test_failing_evaluator_flags_sample_only():
    def cost(k, i, x, u, v):
        if x[0] > 5:
            raise FloatingPointError("outside the domain")
        return u[0] * u[1]
    g = callback_game(cost)
    rep = check_symmetry(g, [(0, np.zeros(5)), (0, np.array([10.0, 0, 0, 0, 0]))])
    assert len(rep.failures) == 1 and rep.failures[0][0] == 1
    assert rep.holds


def test_lq_potential_games_hold():
    rng = np.random.default_rng(2)
    for _ in range(5):
        g, _ = random_potential_game(rng)
        nl = lq_as_nonlinear(g)
        assert check_symmetry(nl, lq_points(rng, g, 3)).holds


def test_field_at_origin_is_linear_terms():
    rng = np.random.default_rng(3)
    g, ocp = random_potential_game(rng)
    nl = lq_as_nonlinear(g)
    d = g.dims
    F = build_field(nl, 0, np.zeros(d.n + d.mt + d.st))
    assert np.allclose(F, np.concatenate([ocp.p[0], np.zeros(d.mt), ocp.d[0]]))
    nl_fd = dataclasses.replace(nl, gradient=None)
    assert np.allclose(build_field(nl_fd, 0, np.zeros(d.n + d.mt + d.st)), F, atol=1e-7)


def test_field_zero_costs_and_hand_gradient():
    d = Dims(n=1, N=1, K=1, m=(1,), s=(1,), l=1)
    zero = callback_game(lambda k, i, x, u, v: 0.0, dims=d)
    assert np.array_equal(build_field(zero, 0, np.ones(3)), np.zeros(3))
    g = callback_game(lambda k, i, x, u, v: 0.5 * x[0] ** 2 + x[0] * u[0], dims=d)
    assert np.allclose(build_field(g, 0, [1.0, 1.0, 0.0]), [2.0, 1.0, 0.0], atol=1e-8)


def test_field_rejects_wrong_dimension():
    g = callback_game(lambda k, i, x, u, v: 0.0)
    with pytest.raises(ValueError):
        build_field(g, 0, np.zeros(4))


def test_integral_of_shared_square():
    d = Dims(n=1, N=2, K=1, m=(1, 1), s=(1, 1), l=1)
    g = callback_game(lambda k, i, x, u, v: 0.5 * x[0] ** 2, dims=d)
    assert np.isclose(integrate_potential(g, 0, [2.0, 0, 0, 0, 0], PathSpec(quadrature_nodes=2)), 2.0)


def test_integral_matches_closed_form_lq():
    rng = np.random.default_rng(5)
    for _ in range(5):
        g, ocp = random_potential_game(rng)
        nl = lq_as_nonlinear(g)
        d = g.dims
        for k, p in lq_points(rng, g, 3):
            x, rest = p[:d.n], p[d.n:]
            u = None if k == d.K else rest[:d.mt]
            v = rest[-d.st:]
            assert abs(integrate_potential(nl, k, p) - potential_value(ocp, x, u, v, k)) <= 1e-8


def test_path_independence():
    rng = np.random.default_rng(6)
    g, _ = random_potential_game(rng)
    nl = lq_as_nonlinear(g)
    d = g.dims
    size = d.n + d.mt + d.st
    p1, p2, b1, b2 = rng.normal(size=(4, size))
    diff1 = integrate_potential(nl, 0, p1, PathSpec(b1)) - integrate_potential(nl, 0, p2, PathSpec(b1))
    diff2 = integrate_potential(nl, 0, p1, PathSpec(b2)) - integrate_potential(nl, 0, p2, PathSpec(b2))
    assert abs(diff1 - diff2) <= 1e-7


def test_simpson_order():
    # F(x) = exp(x) from a shared cost exp(x); the integral from 0 to 1 is e - 1
    d = Dims(n=1, N=1, K=1, m=(1,), s=(1,), l=1)
    g = callback_game(lambda k, i, x, u, v: np.exp(x[0]), dims=d,
                      gradient=lambda k, i, x, u, v: np.array([np.exp(x[0]), 0.0, 0.0]))
    errs = [abs(integrate_potential(g, 0, [1.0, 0, 0], PathSpec(quadrature_nodes=n)) - (np.e - 1.0))
            for n in (2, 4, 8)]
    assert errs[0] / errs[1] >= 8 and errs[1] / errs[2] >= 8


def test_pathspec_validation():
    with pytest.raises(ValueError):
        PathSpec(quadrature_nodes=1)
