# coding=utf-8

# SPDX-FileCopyrightText: Copyright (c) 2023 The torch-winrate Authors. All rights reserved.
# SPDX-License-Identifier: BSD-3-Clause
# 
# Redistribution and use in source and binary forms, with or without
# modification, are permitted provided that the following conditions are met:
#
# 1. Redistributions of source code must retain the above copyright notice, this
# list of conditions and the following disclaimer.
#
# 2. Redistributions in binary form must reproduce the above copyright notice,
# this list of conditions and the following disclaimer in the documentation
# and/or other materials provided with the distribution.
#
# 3. Neither the name of the copyright holder nor the names of its
# contributors may be used to endorse or promote products derived from
# this software without specific prior written permission.
#
# THIS SOFTWARE IS PROVIDED BY THE COPYRIGHT HOLDERS AND CONTRIBUTORS "AS IS"
# AND ANY EXPRESS OR IMPLIED WARRANTIES, INCLUDING, BUT NOT LIMITED TO, THE
# IMPLIED WARRANTIES OF MERCHANTABILITY AND FITNESS FOR A PARTICULAR PURPOSE ARE
# DISCLAIMED. IN NO EVENT SHALL THE COPYRIGHT HOLDER OR CONTRIBUTORS BE LIABLE
# FOR ANY DIRECT, INDIRECT, INCIDENTAL, SPECIAL, EXEMPLARY, OR CONSEQUENTIAL
# DAMAGES (INCLUDING, BUT NOT LIMITED TO, PROCUREMENT OF SUBSTITUTE GOODS OR
# SERVICES; LOSS OF USE, DATA, OR PROFITS; OR BUSINESS INTERRUPTION) HOWEVER
# CAUSED AND ON ANY THEORY OF LIABILITY, WHETHER IN CONTRACT, STRICT LIABILITY,
# OR TORT (INCLUDING NEGLIGENCE OR OTHERWISE) ARISING IN ANY WAY OUT OF THE USE
# OF THIS SOFTWARE, EVEN IF ADVISED OF THE POSSIBILITY OF SUCH DAMAGE.
#

import math
import logging
from dataclasses import dataclass

import numpy as np
import torch

from .errors import ParameterError

logger = logging.getLogger(__name__)


def _check_finite(**kwargs):
    for name, value in kwargs.items():
        if not math.isfinite(value):
            raise ParameterError(f"{name} must be finite, got {value}")


def _check_sigma(name, sigma):
    if not sigma > 0:
        raise ParameterError(f"{name} must be positive, got {sigma}")


def normal_cdf(x):
    r"""
    Standard normal CDF $\Phi(x) = \frac{1}{2} \mathrm{erfc}(-x/\sqrt{2})$ in double
    precision, with relative error below 1e-12 for x down to -12.
    """
    x = torch.as_tensor(x, dtype=torch.float64)
    return 0.5 * torch.special.erfc(-x / math.sqrt(2.0))


@dataclass(frozen=True)
class BanditParams:
    """Means and standard deviations of the two Gaussian score arms."""

    mu1: float
    sigma1: float
    mu2: float
    sigma2: float

    def __post_init__(self):
        _check_finite(mu1=self.mu1, sigma1=self.sigma1, mu2=self.mu2, sigma2=self.sigma2)
        _check_sigma("sigma1", self.sigma1)
        _check_sigma("sigma2", self.sigma2)

    def arm(self, i):
        if i == 1:
            return self.mu1, self.sigma1
        elif i == 2:
            return self.mu2, self.sigma2
        else:
            raise ParameterError(f"arm must be 1 or 2, got {i}")


@dataclass(frozen=True)
class ArmStats:
    """
    Expected score reward and expected outcome reward of a single arm.
    loss_prob is P(score <= 0), computed separately so that ranking in the
    saturated upper tail stays exact.
    """

    score_mean: float
    win_prob: float
    loss_prob: float = float("nan")


def arm_stats(mu, sigma):
    r"""
    Closed-form statistics of an arm with score $\mathcal{N}(\mu, \sigma^2)$:
    the score mean is $\mu$ and the winning probability $P(r > 0) = \Phi(\mu/\sigma)$.
    """
    _check_finite(mu=mu, sigma=sigma)
    _check_sigma("sigma", sigma)

    z = torch.tensor([mu / sigma, -mu / sigma], dtype=torch.float64)
    win, loss = normal_cdf(z).tolist()

    return ArmStats(score_mean=float(mu), win_prob=win, loss_prob=loss)


def in_disagreement_region(p: BanditParams) -> bool:
    r"""
    True iff arm 1 has the larger expected score but the smaller winning probability,
    i.e. $\mu_1 > \mu_2 > 0$ and $\sigma_1 > \sigma_2 \mu_1 / \mu_2$, or
    $\mu_2 < \mu_1 < 0$ and $\sigma_1 < \sigma_2 \mu_1 / \mu_2$.
    All inequalities are strict, so boundary parameters return False.
    """
    mu1, sigma1, mu2, sigma2 = p.mu1, p.sigma1, p.mu2, p.sigma2

    # the ratio conditions are cross-multiplied by mu2 to avoid a rounded division
    if mu1 > mu2 > 0:
        return sigma1 * mu2 > sigma2 * mu1
    if mu2 < mu1 < 0:
        return sigma1 * mu2 > sigma2 * mu1
    return False


def score_preference(p: BanditParams) -> int:
    """Arm with the larger expected score reward, 0 on ties."""
    if p.mu1 > p.mu2:
        return 1
    if p.mu2 > p.mu1:
        return 2
    return 0


def outcome_preference(p: BanditParams) -> int:
    """Arm with the larger winning probability, 0 on ties."""
    s1 = arm_stats(p.mu1, p.sigma1)
    s2 = arm_stats(p.mu2, p.sigma2)

    if s1.win_prob > s2.win_prob or (s1.win_prob == s2.win_prob and s1.loss_prob < s2.loss_prob):
        return 1
    if s2.win_prob > s1.win_prob or (s1.win_prob == s2.win_prob and s2.loss_prob < s1.loss_prob):
        return 2
    return 0


def outcome_prefers_higher_variance(p: BanditParams):
    """
    When the two rewards prefer different arms, returns whether the outcome reward
    picks the arm with the larger score variance. Returns None when they agree.
    Losing arms (negative means) favour the riskier arm, winning arms the safer one.
    """
    spref = score_preference(p)
    opref = outcome_preference(p)
    if spref == 0 or opref == 0 or spref == opref:
        return None

    _, sigma_chosen = p.arm(opref)
    _, sigma_other = p.arm(spref)
    return sigma_chosen > sigma_other


def monte_carlo_arm_stats(p: BanditParams, arm, n, seed):
    """
    Empirical score mean and winning frequency of n draws from the given arm.
    The draws come from a Philox stream keyed by seed, so the result is a pure
    function of its arguments.
    """
    if n < 1:
        raise ParameterError(f"n must be at least 1, got {n}")
    mu, sigma = p.arm(arm)

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    samples = rng.normal(mu, sigma, size=n)

    return ArmStats(score_mean=float(samples.mean()),
                    win_prob=float(np.count_nonzero(samples > 0) / n),
                    loss_prob=float(np.count_nonzero(samples <= 0) / n))


def _preference(better1, better2):
    return np.where(better1, 1, np.where(better2, 2, 0))


def bandit_scan(mus, sigmas):
    """
    Evaluates both reward preferences and the disagreement flag on the full grid
    mus x sigmas x mus x sigmas, vectorized over all tuples.

    Returns
    -------
    dict of flat numpy arrays with keys
    mu1, sigma1, mu2, sigma2, score_pref, outcome_pref, disagree
    """
    mus = np.asarray(mus, dtype=np.float64)
    sigmas = np.asarray(sigmas, dtype=np.float64)
    if not (np.all(np.isfinite(mus)) and np.all(np.isfinite(sigmas))):
        raise ParameterError("grid values must be finite")
    if np.any(sigmas <= 0):
        raise ParameterError("grid sigmas must be positive")

    mu1, sigma1, mu2, sigma2 = (g.ravel() for g in np.meshgrid(mus, sigmas, mus, sigmas, indexing="ij"))

    z = torch.from_numpy(np.stack([mu1 / sigma1, mu2 / sigma2, -mu1 / sigma1, -mu2 / sigma2]))
    win1, win2, loss1, loss2 = normal_cdf(z).numpy()

    score_pref = _preference(mu1 > mu2, mu2 > mu1)
    outcome_pref = _preference((win1 > win2) | ((win1 == win2) & (loss1 < loss2)),
                               (win2 > win1) | ((win1 == win2) & (loss2 < loss1)))

    # strict region of arm 1 winning on score and losing on outcome
    same_sign = ((mu1 > mu2) & (mu2 > 0)) | ((mu2 < mu1) & (mu1 < 0))
    disagree = same_sign & (sigma1 * mu2 > sigma2 * mu1)

    logger.debug("scanned %d bandit parameter tuples", mu1.size)

    return dict(mu1=mu1, sigma1=sigma1, mu2=mu2, sigma2=sigma2,
                score_pref=score_pref, outcome_pref=outcome_pref, disagree=disagree)
