import itertools

import numpy as np
import pytest

from statecoord.coordination import (
    AuxChannel,
    CoordinationProblem,
    WrongMarginalError,
    baselines,
    cardinality_stress,
    constraint_slack,
    is_implementable_causal,
    is_implementable_noncausal,
    max_constraint_slack,
    optimize_payoff_causal,
    optimize_payoff_noncausal,
    simulate_causal_scheme,
)
from statecoord.probability import Alphabet, CondPmf, JointPmf
from statecoord.simplexopt import OptConfig

AX2 = Alphabet(2)


def random_qbar(rng, shape=(2, 2, 2)):
    arr = rng.gamma(1.0, 1.0, size=shape)
    return JointPmf(tuple(Alphabet(s) for s in shape), arr / arr.sum())


def random_channel(rng, shape3=(2, 2, 2), ny=2):
    rows = rng.dirichlet(np.ones(ny), size=shape3)
    axes = tuple(Alphabet(s) for s in shape3)
    return CondPmf(axes, (Alphabet(ny),), rows)


def noiseless_x1_channel():
    ch = np.zeros((2, 2, 2, 2))
    ch[:, 0, :, 0] = 1.0
    ch[:, 1, :, 1] = 1.0
    return CondPmf((AX2, AX2, AX2), (AX2,), ch)


def boundary_qbar():
    # x2 = x0 uniform, x1 uniform independent
    qb = np.zeros((2, 2, 2))
    for x0 in range(2):
        for x1 in range(2):
            qb[x0, x1, x0] = 0.25
    return JointPmf((AX2, AX2, AX2), qb)


def slack_oracle(qbar, aux_kernel, ch_probs):
    """Independent slack evaluation through the probability primitives."""
    q = (qbar.probs[..., None, None]
         * ch_probs[..., None] * aux_kernel[:, :, :, None, :])
    joint = JointPmf(tuple(Alphabet(s) for s in q.shape), q / q.sum())
    # axes: x0 x1 x2 y v
    return (joint.conditional_mutual_information([4], [3], [2])
            - joint.conditional_mutual_information([4], [0], [2])
            - joint.mutual_information([0], [2]))


def test_constraint_slack_matches_oracle():
    rng = np.random.default_rng(1)
    for _ in range(25):
        qbar = random_qbar(rng)
        channel = random_channel(rng)
        kern = rng.dirichlet(np.ones(3), size=(2, 2, 2))
        aux = AuxChannel(CondPmf((AX2, AX2, AX2), (Alphabet(3),), kern), 3)
        got = constraint_slack(qbar, aux, channel)
        want = slack_oracle(qbar, kern, channel.probs)
        assert got == pytest.approx(want, abs=1e-9)


def test_boundary_instance_slack_zero():
    rep = max_constraint_slack(boundary_qbar(), noiseless_x1_channel(), 8)
    assert rep.slack == pytest.approx(0.0, abs=1e-4)
    assert rep.implementable


def test_degenerate_channel_slack_is_minus_entropy():
    # y carries nothing: slack = -I(X0;X2) = -H(X0) for the x2=x0 target
    ch = np.zeros((2, 2, 2, 1))
    ch[..., 0] = 1.0
    channel = CondPmf((AX2, AX2, AX2), (Alphabet(1),), ch)
    rep = max_constraint_slack(boundary_qbar(), channel, 8)
    assert rep.slack == pytest.approx(-1.0, abs=1e-6)
    assert not rep.implementable


def test_max_slack_dominates_deterministic_kernels():
    rng = np.random.default_rng(4)
    for _ in range(5):
        qbar = random_qbar(rng)
        channel = random_channel(rng)
        best_det = -np.inf
        for assign in itertools.product(range(3), repeat=8):
            kern = np.zeros((2, 2, 2, 3))
            kern.reshape(8, 3)[np.arange(8), assign] = 1.0
            aux = AuxChannel(CondPmf((AX2, AX2, AX2), (Alphabet(3),), kern), 3)
            best_det = max(best_det, constraint_slack(qbar, aux, channel))
        rep = max_constraint_slack(qbar, channel, 3,
                                   cfg=OptConfig(seed=0, restarts=16))
        assert rep.slack >= best_det - 1e-8


def test_causal_factorization_check():
    rng = np.random.default_rng(8)
    rho0 = rng.dirichlet(np.ones(2))
    px2 = rng.dirichlet(np.ones(2))
    cond = rng.dirichlet(np.ones(2), size=(2, 2))  # P(x1|x0,x2)
    qb = rho0[:, None, None] * px2[None, None, :] * np.transpose(
        cond, (0, 2, 1))
    qbar = JointPmf((AX2, AX2, AX2), qb)
    assert is_implementable_causal(qbar)
    assert not is_implementable_causal(boundary_qbar())


def test_wrong_marginal_raises():
    qbar = boundary_qbar()
    prior = JointPmf((AX2,), np.array([0.9, 0.1]))
    with pytest.raises(WrongMarginalError):
        is_implementable_noncausal(qbar, noiseless_x1_channel(), 4,
                                   state_prior=prior)


def exhaustive_causal(problem):
    rho0 = problem.state_prior.probs
    w = problem.payoff
    n0, n1, n2 = w.shape
    best = -np.inf
    for x2 in range(n2):
        for f in itertools.product(range(n1), repeat=n0):
            val = sum(rho0[a] * w[a, f[a], x2] for a in range(n0))
            best = max(best, val)
    return best


def test_causal_optimum_matches_exhaustive():
    rng = np.random.default_rng(11)
    for _ in range(30):
        prior = JointPmf((AX2,), rng.dirichlet(np.ones(2)))
        channel = random_channel(rng)
        w = rng.normal(size=(2, 2, 2))
        problem = CoordinationProblem(prior, channel, w)
        _, _, val = optimize_payoff_causal(problem)
        assert val == pytest.approx(exhaustive_causal(problem), abs=1e-12)


def test_noncausal_payoff_between_causal_and_costless():
    rng = np.random.default_rng(21)
    prior = JointPmf((AX2,), np.array([0.6, 0.4]))
    channel = noiseless_x1_channel()
    w = rng.normal(size=(2, 2, 2))
    problem = CoordinationProblem(prior, channel, w)
    costless, _ = baselines(problem)
    _, _, causal_val = optimize_payoff_causal(problem)
    qbar, val, rep = optimize_payoff_noncausal(
        problem, 8, cfg=OptConfig(seed=0, outer_restarts=4, restarts=16))
    assert causal_val - 1e-9 <= val <= costless + 1e-6
    assert rep.slack >= -1e-9
    assert np.allclose(qbar.probs.sum(axis=(1, 2)), prior.probs, atol=1e-6)


def test_noncausal_beats_grid_lower_bound():
    """With a noiseless x1 channel, V = X1 certifies feasibility of any law
    with H(X1|X0,X2) - I(X0;X2) >= 0; a coarse grid over such laws gives a
    sound lower bound the optimizer must match."""
    rng = np.random.default_rng(33)
    prior = JointPmf((AX2,), np.array([0.5, 0.5]))
    channel = noiseless_x1_channel()
    w = rng.normal(size=(2, 2, 2))
    problem = CoordinationProblem(prior, channel, w)

    best_grid = -np.inf
    grid = np.linspace(0.0, 1.0, 9)
    rho0 = prior.probs
    for p2 in grid:
        px2 = np.array([p2, 1 - p2])
        for a0 in grid:
            for a1 in grid:
                # P(x1=1|x0,x2) = a_{x0} (x2-independent rows keep it simple)
                cond = np.array([[1 - a0, a0], [1 - a1, a1]])
                qb = (rho0[:, None, None] * px2[None, None, :]
                      * np.transpose(
                          np.broadcast_to(cond[:, None, :], (2, 2, 2)),
                          (0, 2, 1)))
                qbar = JointPmf((AX2, AX2, AX2), qb)
                # causal-factorized, hence feasible
                best_grid = max(best_grid, float(np.sum(qb * w)))
    _, val, _ = optimize_payoff_noncausal(
        problem, 8, cfg=OptConfig(seed=0, outer_restarts=6, restarts=16))
    assert val >= best_grid - 1e-3


def test_simulate_causal_scheme_concentrates():
    rng = np.random.default_rng(17)
    rho0 = rng.dirichlet(np.ones(2))
    px2 = rng.dirichlet(np.ones(2))
    cond = rng.dirichlet(np.ones(2), size=(2, 2))
    qb = rho0[:, None, None] * px2[None, None, :] * np.transpose(
        cond, (0, 2, 1))
    qbar = JointPmf((AX2, AX2, AX2), qb)
    problem = CoordinationProblem(
        JointPmf((AX2,), rho0), noiseless_x1_channel(),
        np.zeros((2, 2, 2)))
    emp, maxdev = simulate_causal_scheme(problem, qbar, T=100_000, seed=0)
    assert maxdev <= 0.02
    emp2, maxdev2 = simulate_causal_scheme(problem, qbar, T=100_000, seed=0)
    assert np.array_equal(emp.probs, emp2.probs)


def test_simulate_rejects_nonfactorized():
    problem = CoordinationProblem(
        JointPmf((AX2,), np.array([0.5, 0.5])), noiseless_x1_channel(),
        np.zeros((2, 2, 2)))
    with pytest.raises(ValueError):
        simulate_causal_scheme(problem, boundary_qbar(), T=100, seed=0)


def test_cardinality_stress_monotone():
    rng = np.random.default_rng(41)
    qbar = random_qbar(rng)
    channel = random_channel(rng)
    rows = cardinality_stress(qbar, channel, seed=0, restarts=8, v_max=6)
    slacks = [s for _, s in rows]
    assert all(b >= a - 1e-12 for a, b in zip(slacks, slacks[1:]))
