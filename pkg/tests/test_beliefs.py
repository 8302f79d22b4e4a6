import math

import numpy as np
import pytest

from mergegame.beliefs import (
    BeliefConfig,
    BeliefState,
    likelihood,
    residual,
    update_belief,
)
from mergegame.dynamics import VehicleParams, VehicleState
from mergegame.rewards import PairState, RoadGeometry

PARAMS = VehicleParams()
ROAD = RoadGeometry()


def test_scalar_normal_likelihood_oracle():
    # standard normal density at 0 and 2
    assert likelihood(np.array([0.0]), np.array([[1.0]])) == pytest.approx(0.3989423, abs=1e-6)
    assert likelihood(np.array([2.0]), np.array([[1.0]])) == pytest.approx(0.0539910, abs=1e-6)


def test_multivariate_likelihood_factorizes_for_diagonal_W():
    W = np.diag([0.25, 0.01])
    r = np.array([0.3, -0.05])
    expect = 1.0
    for ri, wi in zip(r, np.diag(W)):
        expect *= math.exp(-0.5 * ri**2 / wi) / math.sqrt(2 * math.pi * wi)
    assert likelihood(r, W) == pytest.approx(expect, rel=1e-12)


def test_posterior_oracle():
    # prior (0.5, 0.5), likelihoods phi(0)=0.39894, phi(2)=0.05399 -> p_leader = 0.8808
    cfg = BeliefConfig()
    post = update_belief(cfg.initial_belief(), 0.39894, 0.05399, cfg)
    assert post.p_leader == pytest.approx(0.8808, abs=1e-4)
    assert post.p_leader + post.p_follower == pytest.approx(1.0, abs=1e-12)


def test_update_applies_transition_before_evidence():
    # with equal likelihoods the posterior is exactly the transition-propagated prior
    pi = np.array([[0.9, 0.2], [0.1, 0.8]])
    cfg = BeliefConfig(transition=pi)
    prior = BeliefState(0.5, 0.5)
    post = update_belief(prior, 1.0, 1.0, cfg)
    expect = pi @ prior.as_array()
    assert post.p_leader == pytest.approx(expect[0], abs=1e-12)


def test_floor_prevents_absorbing_zero():
    cfg = BeliefConfig(floor=1e-6)
    b = BeliefState(0.5, 0.5)
    for _ in range(50):
        b = update_belief(b, 1.0, 0.0, cfg)
    assert b.p_follower >= 1e-7  # floored, so one later contrary observation can recover
    recovered = b
    for _ in range(60):
        recovered = update_belief(recovered, 0.0, 1.0, cfg)
    assert recovered.p_follower > 0.9


def test_degenerate_evidence_keeps_prior():
    cfg = BeliefConfig()
    prior = BeliefState(0.7, 0.3)
    post = update_belief(prior, 0.0, 0.0, cfg)
    assert post.p_leader == pytest.approx(0.7, abs=1e-6)


def test_belief_state_validation():
    with pytest.raises(ValueError):
        BeliefState(0.6, 0.6)
    with pytest.raises(ValueError):
        BeliefState(-0.1, 1.1)
    with pytest.raises(ValueError):
        update_belief(BeliefState(0.5, 0.5), -1.0, 0.5, BeliefConfig())


def test_config_validation():
    with pytest.raises(ValueError):
        BeliefConfig(W=np.array([[1.0, 2.0], [2.0, 1.0]]))  # not positive definite
    with pytest.raises(ValueError):
        BeliefConfig(transition=np.array([[0.5, 0.5], [0.4, 0.5]]))
    with pytest.raises(ValueError):
        BeliefConfig(p0=(0.6, 0.6))
    with pytest.raises(ValueError):
        BeliefConfig(residual_scope="ego")


def _pair(ego, other):
    return PairState(ego=ego, other=other, ego_params=PARAMS, other_params=PARAMS, road=ROAD)


def test_residual_scopes():
    obs = _pair(VehicleState(1.0, 0.0, 20.0, 0.0), VehicleState(10.0, 3.6, 22.0, 0.0))
    pred = _pair(VehicleState(0.5, 0.0, 20.0, 0.0), VehicleState(9.0, 3.6, 21.0, 0.0))
    r = residual(obs, pred)
    assert np.allclose(r, [1.0, 0.0, 1.0, 0.0])
    r8 = residual(obs, pred, scope="pair")
    assert r8.shape == (8,)
    assert np.allclose(r8[:4], [0.5, 0.0, 0.0, 0.0])
    assert np.allclose(r8[4:], r)


def test_repeated_consistent_evidence_converges():
    cfg = BeliefConfig()
    W = cfg.W
    r_match = np.zeros(4)
    r_miss = np.array([1.5, 0.0, 1.5, 0.0])  # several sigma off in x and v
    b = cfg.initial_belief()
    for _ in range(5):
        b = update_belief(b, likelihood(r_match, W), likelihood(r_miss, W), cfg)
    assert b.p_leader > 0.99
