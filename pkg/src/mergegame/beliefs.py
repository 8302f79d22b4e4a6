"""Online Bayesian estimation of an interacting vehicle's leader/follower role from
one-step prediction residuals under a Gaussian perturbation model."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .rewards import PairState


def _default_W() -> np.ndarray:
    # one-step residual covariance on the interacting vehicle's (x, y, v, psi)
    return np.diag([0.25, 0.01, 0.25, 0.001])


@dataclass
class BeliefState:
    p_leader: float
    p_follower: float

    def __post_init__(self):
        if not (0 <= self.p_leader <= 1 and 0 <= self.p_follower <= 1):
            raise ValueError("belief probabilities must lie in [0, 1]")
        if abs(self.p_leader + self.p_follower - 1.0) > 1e-12:
            raise ValueError("belief must sum to 1")

    def as_array(self) -> np.ndarray:
        return np.array([self.p_leader, self.p_follower])


@dataclass
class BeliefConfig:
    W: np.ndarray = field(default_factory=_default_W)
    transition: np.ndarray = field(default_factory=lambda: np.eye(2))  # pi[l, k]: k -> l
    p0: Tuple[float, float] = (0.5, 0.5)
    floor: float = 1e-6
    residual_scope: str = "other"  # "other": interacting vehicle's sub-state; "pair": joint state

    def __post_init__(self):
        self.W = np.atleast_2d(np.asarray(self.W, dtype=float))
        try:
            np.linalg.cholesky(self.W)
        except np.linalg.LinAlgError as e:
            raise ValueError("residual covariance W must be symmetric positive-definite") from e
        self.transition = np.asarray(self.transition, dtype=float)
        if not np.allclose(self.transition.sum(axis=0), 1.0):
            raise ValueError("transition matrix columns must sum to 1")
        if abs(sum(self.p0) - 1.0) > 1e-12:
            raise ValueError("initial belief must sum to 1")
        if self.residual_scope not in ("other", "pair"):
            raise ValueError("residual_scope must be 'other' or 'pair'")

    def initial_belief(self) -> BeliefState:
        return BeliefState(*self.p0)


def residual(observed: PairState, predicted: PairState, scope: str = "other") -> np.ndarray:
    """Componentwise difference between the observed and role-conditioned predicted state.

    By default only the interacting vehicle's sub-state enters: both role-conditioned
    predictions share the ego's own plan, so the ego components carry no role information.
    """
    d_other = observed.other.as_array() - predicted.other.as_array()
    if scope == "other":
        return d_other
    return np.concatenate([observed.ego.as_array() - predicted.ego.as_array(), d_other])


def likelihood(r: np.ndarray, W: np.ndarray) -> float:
    """Multivariate normal density with mean 0 and covariance W, evaluated at r."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    W = np.atleast_2d(np.asarray(W, dtype=float))
    k = len(r)
    L = np.linalg.cholesky(W)
    z = np.linalg.solve(L, r)
    log_det = 2.0 * np.sum(np.log(np.diag(L)))
    log_pdf = -0.5 * (k * np.log(2 * np.pi) + log_det + z @ z)
    return float(np.exp(log_pdf))


def update_belief(
    prior: BeliefState, lam_leader: float, lam_follower: float, cfg: BeliefConfig
) -> BeliefState:
    """Posterior ~ likelihood * (transition @ prior), normalized, floored, renormalized.

    Degenerate evidence (both likelihoods zero) leaves the belief unchanged.
    """
    if lam_leader < 0 or lam_follower < 0:
        raise ValueError("likelihoods must be nonnegative")
    predicted = cfg.transition @ prior.as_array()
    post = np.array([lam_leader, lam_follower]) * predicted
    total = post.sum()
    if total <= 0.0:
        post = prior.as_array()
    else:
        post = post / total
    post = np.maximum(post, cfg.floor)
    post = post / post.sum()
    return BeliefState(float(post[0]), float(post[1]))
