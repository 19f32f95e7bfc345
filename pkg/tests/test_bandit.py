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
import time
import unittest
from parameterized import parameterized

import numpy as np

from torch_winrate.bandit import *
from torch_winrate.errors import ParameterError


class TestArmStats(unittest.TestCase):

    @parameterized.expand([
        [0.0, 1.0, 0.5],
        [2.0, 4.0, 0.6914624612740131],
        [1.0, 1.0, 0.8413447460685429],
        [-1.0, 1.0, 0.15865525393145707],
    ])
    def test_closed_form(self, mu, sigma, expected):
        print(f"Testing closed-form arm statistics for mu={mu}, sigma={sigma}")

        s = arm_stats(mu, sigma)
        self.assertEqual(s.score_mean, mu)
        self.assertAlmostEqual(s.win_prob, expected, delta=1e-12 * expected)
        self.assertAlmostEqual(s.win_prob + s.loss_prob, 1.0, places=14)

    def test_erf_oracle(self):
        print("Testing normal CDF against the error function")

        for x in np.linspace(-12, 12, 241):
            exact = 0.5 * math.erfc(-x / math.sqrt(2.0))
            self.assertLessEqual(abs(float(normal_cdf(x)) - exact), 1e-12 * exact)

    @parameterized.expand([
        [0.0, 0.0],
        [1.0, -1.0],
        [float("nan"), 1.0],
        [float("inf"), 1.0],
    ])
    def test_invalid(self, mu, sigma):
        print(f"Testing rejection of mu={mu}, sigma={sigma}")

        with self.assertRaises(ParameterError):
            arm_stats(mu, sigma)

    def test_monotone(self):
        print("Testing monotonicity of the winning probability")

        mus = np.arange(-3, 3.01, 0.5)
        sigmas = np.arange(0.25, 4.01, 0.25)

        # Phi saturates to 1.0 beyond mu / sigma ~ 8.3
        for sigma in sigmas[sigmas >= 1.0]:
            w = [arm_stats(mu, sigma).win_prob for mu in mus]
            self.assertTrue(all(a < b for a, b in zip(w, w[1:])))
        for mu in (-2.0, 2.0):
            w = [arm_stats(mu, sigma).win_prob for sigma in sigmas]
            if mu > 0:
                self.assertTrue(all(a > b for a, b in zip(w, w[1:])))
            else:
                self.assertTrue(all(a < b for a, b in zip(w, w[1:])))


class TestDisagreementRegion(unittest.TestCase):

    @parameterized.expand([
        [2.0, 4.0, 1.0, 1.0, True],
        [1.0, 1.0, 1.0, 1.0, False],
        [-1.0, 1.0, -2.0, 4.0, True],
        # boundary sigma1 = sigma2 * mu1 / mu2 is excluded
        [2.0, 2.0, 1.0, 1.0, False],
        [-1.0, 2.0, -2.0, 4.0, False],
        [1.0, 4.0, -1.0, 1.0, False],
    ])
    def test_examples(self, mu1, sigma1, mu2, sigma2, expected):
        print(f"Testing disagreement region at ({mu1}, {sigma1}, {mu2}, {sigma2})")

        p = BanditParams(mu1, sigma1, mu2, sigma2)
        self.assertEqual(in_disagreement_region(p), expected)

        if expected:
            s1, s2 = arm_stats(mu1, sigma1), arm_stats(mu2, sigma2)
            self.assertGreater(s1.score_mean, s2.score_mean)
            self.assertLess(s1.win_prob, s2.win_prob)

    def test_grid(self):
        print("Testing disagreement region against direct ranking on the full grid")

        mus = np.arange(-3, 3.01, 0.5)
        mus = mus[mus != 0]
        sigmas = np.arange(0.25, 4.01, 0.25)

        checked = 0
        for mu1 in mus:
            for sigma1 in sigmas:
                s1 = arm_stats(mu1, sigma1)
                for mu2 in mus:
                    for sigma2 in sigmas:
                        s2 = arm_stats(mu2, sigma2)
                        if mu1 == mu2 or mu1 * sigma2 == mu2 * sigma1:
                            continue
                        direct = s1.score_mean > s2.score_mean and s1.win_prob < s2.win_prob
                        self.assertEqual(in_disagreement_region(BanditParams(mu1, sigma1, mu2, sigma2)), direct)
                        checked += 1

        self.assertGreaterEqual(checked, 10**4)

    def test_scan(self):
        print("Testing vectorized bandit scan")

        mus = np.arange(-3, 3.01, 0.5)
        sigmas = np.arange(0.25, 4.01, 0.25)

        start = time.perf_counter()
        scan = bandit_scan(mus, sigmas)
        elapsed = time.perf_counter() - start

        n = (mus.shape[0] * sigmas.shape[0])**2
        self.assertEqual(scan["disagree"].shape, (n,))
        self.assertLess(elapsed, 1.0)

        rng = np.random.default_rng(0)
        for k in rng.integers(0, n, size=500):
            p = BanditParams(scan["mu1"][k], scan["sigma1"][k], scan["mu2"][k], scan["sigma2"][k])
            self.assertEqual(bool(scan["disagree"][k]), in_disagreement_region(p))
            self.assertEqual(int(scan["score_pref"][k]), score_preference(p))
            if p.mu1 * p.sigma2 != p.mu2 * p.sigma1:
                self.assertEqual(int(scan["outcome_pref"][k]), outcome_preference(p))

    def test_scan_outcome_grid(self):
        print("Testing outcome preferences of the scan against the z-score ordering")

        mus = np.arange(-3, 3.01, 0.5)
        sigmas = np.arange(0.25, 4.01, 0.25)
        scan = bandit_scan(mus, sigmas)

        # Phi is strictly increasing, so the preferred arm has the larger z-score
        cross = scan["mu1"] * scan["sigma2"] - scan["mu2"] * scan["sigma1"]
        expected = np.where(cross > 0, 1, np.where(cross < 0, 2, 0))
        self.assertTrue(np.array_equal(scan["outcome_pref"], expected))

        p = BanditParams(-3.0, 0.25, -2.5, 0.25)
        self.assertEqual(outcome_preference(p), 2)
        self.assertGreater(arm_stats(-2.5, 0.25).win_prob, arm_stats(-3.0, 0.25).win_prob)
        self.assertGreater(arm_stats(-3.0, 0.25).win_prob, 0.0)

    def test_variance_reading(self):
        print("Testing variance preference of the outcome reward")

        # both winning: outcome picks the safer arm
        self.assertFalse(outcome_prefers_higher_variance(BanditParams(2.0, 4.0, 1.0, 1.0)))
        # both losing: outcome picks the riskier arm
        self.assertTrue(outcome_prefers_higher_variance(BanditParams(-1.0, 1.0, -2.0, 4.0)))
        self.assertIsNone(outcome_prefers_higher_variance(BanditParams(2.0, 1.0, 1.0, 1.0)))


class TestMonteCarlo(unittest.TestCase):

    @parameterized.expand([
        [0.0, 1.0, 10**6, 1, 0.5, 0.002],
        [2.0, 4.0, 10**6, 7, 0.691462, 0.002],
    ])
    def test_win_prob(self, mu, sigma, n, seed, expected, tol):
        print(f"Testing Monte Carlo winning frequency for mu={mu}, sigma={sigma}")

        s = monte_carlo_arm_stats(BanditParams(mu, sigma, 0.0, 1.0), 1, n, seed)
        self.assertLess(abs(s.win_prob - expected), tol)

    def test_mean(self):
        print("Testing Monte Carlo score mean")

        s = monte_carlo_arm_stats(BanditParams(0.0, 1.0, -3.0, 1.0), 2, 10**5, 3)
        self.assertLess(abs(s.score_mean + 3.0), 0.02)

    def test_deterministic(self):
        print("Testing determinism of the Monte Carlo stream")

        p = BanditParams(1.0, 2.0, 0.5, 1.0)
        self.assertEqual(monte_carlo_arm_stats(p, 1, 1000, 11), monte_carlo_arm_stats(p, 1, 1000, 11))

    def test_convergence(self):
        print("Testing Monte Carlo convergence over seeds")

        p = BanditParams(0.7, 1.3, 0.0, 1.0)
        exact = arm_stats(0.7, 1.3).win_prob
        n = 10**4
        within = sum(abs(monte_carlo_arm_stats(p, 1, n, seed).win_prob - exact) <= 4 * math.sqrt(0.25 / n)
                     for seed in range(100))
        self.assertGreaterEqual(within, 99)

    def test_invalid(self):
        print("Testing rejection of empty samples")

        with self.assertRaises(ParameterError):
            monte_carlo_arm_stats(BanditParams(0.0, 1.0, 0.0, 1.0), 1, 0, 0)
        with self.assertRaises(ParameterError):
            BanditParams(0.0, 1.0, 0.0, 1.0).arm(3)


if __name__ == '__main__':
    unittest.main()
