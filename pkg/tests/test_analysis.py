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

import os
import tempfile
import unittest
from parameterized import parameterized

import numpy as np

from torch_winrate.analysis import *
from torch_winrate.mdp import generate, replicate_seed, level_offset, make_deterministic
from torch_winrate.parallel import map_replicates
from torch_winrate.solver import RewardKind, solve_optimal, evaluate_policy
from torch_winrate.examples import constant_leaf_mdp
from torch_winrate.errors import ParameterError, FormatError, ReplicateError

SLOW = bool(os.getenv("TORCH_WINRATE_SLOW"))


class TestWinrateGap(unittest.TestCase):

    def setUp(self):
        self.cfg = ExperimentConfig(branch=2, depth=4, num_actions=2, runs=40, base_seed=1)

    def test_signs(self):
        print("Testing signs of the winrate gap by level")

        curve = winrate_gap_by_level(self.cfg)
        self.assertEqual(len(curve), self.cfg.depth + 1)
        self.assertEqual(curve.aggregate[-1], 0.0)
        self.assertTrue(np.all(curve.aggregate >= -1e-12))
        self.assertEqual(curve.count.tolist(), [self.cfg.runs * 2**l for l in range(self.cfg.depth + 1)])
        self.assertEqual(curve.x_low.tolist(), list(range(self.cfg.depth + 1)))
        self.assertEqual(curve.counters["states"], self.cfg.runs * 31)

    def test_root_gap(self):
        print("Testing positive winrate gap at the root")

        cfg = ExperimentConfig(runs=200, base_seed=0)
        curve = winrate_gap_by_level(cfg)
        self.assertGreater(curve.aggregate[0], 0.0)

    def test_single_replicate(self):
        print("Testing a single replicate against a hand-run pipeline")

        cfg = ExperimentConfig(branch=3, depth=3, num_actions=2, runs=1, base_seed=9)
        curve = winrate_gap_by_level(cfg)

        mdp = generate(3, 3, 2, replicate_seed(9, 0))
        pi_score = solve_optimal(mdp, RewardKind.SCORE).policy
        gap = (solve_optimal(mdp, RewardKind.OUTCOME).v - evaluate_policy(mdp, pi_score, RewardKind.OUTCOME).v).numpy()
        expected = [gap[level_offset(3, l):level_offset(3, l + 1)].mean() for l in range(4)]

        self.assertTrue(np.allclose(curve.aggregate, expected, rtol=0, atol=1e-15))

    def test_threads(self):
        print("Testing independence of the winrate gap from the thread count")

        serial = winrate_gap_by_level(self.cfg)
        threaded = winrate_gap_by_level(ExperimentConfig(branch=2, depth=4, num_actions=2, runs=40,
                                                         base_seed=1, threads=4))
        self.assertTrue(np.array_equal(serial.aggregate, threaded.aggregate))
        self.assertEqual(serial.counters, threaded.counters)

    def test_pooling(self):
        print("Testing pooling modes of the winrate gap")

        states = winrate_gap_by_level(self.cfg)
        mdp = winrate_gap_by_level(ExperimentConfig(branch=2, depth=4, num_actions=2, runs=40,
                                                    base_seed=1, pooling="mdp"))
        # every replicate has the same number of states per level
        self.assertTrue(np.allclose(states.aggregate, mdp.aggregate, rtol=0, atol=1e-12))

    def test_bootstrap(self):
        print("Testing bootstrap confidence interval")

        values = np.concatenate([np.zeros(50), np.ones(50)])
        low, high = bootstrap_ci(values, seed=3)
        self.assertLess(low, 0.5)
        self.assertGreater(high, 0.5)
        self.assertEqual((low, high), bootstrap_ci(values, seed=3))
        self.assertEqual(bootstrap_ci(np.full(10, 2.0)), (2.0, 2.0))

        with self.assertRaises(ParameterError):
            bootstrap_ci(values, confidence=1.0)

    @unittest.skipUnless(SLOW, "set TORCH_WINRATE_SLOW to run")
    def test_defaults(self):
        print("Testing the winrate gap at default size")

        cfg = ExperimentConfig(base_seed=1)
        per_level = level_gap_replicates(cfg)
        self.assertEqual(per_level.shape, (2000, 7))

        low, _ = bootstrap_ci(per_level[:, 0], seed=0)
        self.assertGreater(low, 0.0)
        self.assertTrue(np.all(per_level.mean(axis=0) >= -1e-12))
        self.assertTrue(np.all(per_level[:, -1] == 0))


class TestVariancePreference(unittest.TestCase):

    def setUp(self):
        self.cfg = ExperimentConfig(branch=2, depth=5, num_actions=2, runs=30, bins=10, base_seed=2)

    @parameterized.expand([
        ["outcome"],
        ["score"],
    ])
    def test_accounting(self, plus):
        print(f"Testing sample accounting of the variance preference with plus={plus}")

        curve = variance_preference_curve(self.cfg, plus)
        c = curve.counters
        self.assertEqual(c["emitted"] + c["equal_action"] + c["zero_variance"], c["states"])
        self.assertEqual(c["states"], self.cfg.runs * 31)
        self.assertEqual(int(curve.count.sum()), c["emitted"])
        self.assertEqual(len(curve), 10)
        self.assertTrue(np.all(np.isnan(curve.aggregate[curve.count == 0])))

    def test_equal_policies(self):
        print("Testing that equal policies emit no samples")

        mdp = constant_leaf_mdp(generate(2, 3, 2, 0), 2)
        samples = variance_preference_samples(mdp, "outcome")
        self.assertEqual(len(samples), mdp.num_internal)
        self.assertTrue(all(s.skipped == "equal_action" for s in samples))

    def test_samples(self):
        print("Testing per-state samples against the pooled collection")

        cfg = ExperimentConfig(branch=2, depth=4, num_actions=2, runs=1, base_seed=5)
        x, y, replicate, counters = collect_variance_preference(cfg, "outcome")
        samples = variance_preference_samples(cfg.replicate(0), "outcome")

        emitted = [s for s in samples if s.skipped is None]
        self.assertEqual([s.x for s in emitted], x.tolist())
        self.assertEqual([s.y for s in emitted], y.tolist())
        self.assertTrue(np.all(replicate == 0))
        self.assertTrue(all(s.skipped in SKIP_REASONS for s in samples if s.skipped is not None))
        self.assertTrue(np.all((x >= 0) & (x <= 1)))

    def test_threads(self):
        print("Testing independence of the variance preference from the thread count")

        serial = variance_preference_curve(self.cfg, "outcome")
        threaded = variance_preference_curve(ExperimentConfig(branch=2, depth=5, num_actions=2, runs=30, bins=10,
                                                              base_seed=2, threads=3), "outcome")
        self.assertTrue(np.array_equal(serial.aggregate, threaded.aggregate, equal_nan=True))
        self.assertTrue(np.array_equal(serial.count, threaded.count))

    def test_binning(self):
        print("Testing equal-width binning over [0, 1]")

        self.assertEqual(bin_index([0.0, 0.049, 0.05, 0.999, 1.0], 20).tolist(), [0, 0, 1, 19, 19])

        curve = binned_median(np.array([0.1, 0.2, 0.3, 0.9]), np.array([1.0, 3.0, 2.0, -1.0]), 2)
        self.assertEqual(curve.count.tolist(), [3, 1])
        self.assertEqual(curve.aggregate.tolist(), [2.0, -1.0])

        # median of per-replicate medians
        curve = binned_median(np.array([0.1, 0.2, 0.3]), np.array([1.0, 3.0, 10.0]), 1, np.array([0, 0, 1]))
        self.assertEqual(curve.aggregate.tolist(), [6.0])

    def test_trend(self):
        print("Testing band medians and the rank trend")

        x = np.array([0.1, 0.2, 0.5, 0.8, 0.9])
        y = np.array([2.0, 1.0, 0.0, -1.0, -3.0])
        self.assertEqual(band_median(x, y, 0.0, 0.25), 1.5)
        self.assertEqual(band_median(x, y, 0.75, 1.0), -2.0)
        self.assertTrue(np.isnan(band_median(x, y, 0.3, 0.4)))

        curve = binned_median(x, y, 10)
        self.assertAlmostEqual(spearman_trend(curve), -1.0)

    @parameterized.expand([
        ["outcome", -1],
        ["score", 1],
    ])
    @unittest.skipUnless(SLOW, "set TORCH_WINRATE_SLOW to run")
    def test_defaults(self, plus, sign):
        print(f"Testing the variance preference at default size with plus={plus}")

        cfg = ExperimentConfig(base_seed=1)
        x, y, _, _ = collect_variance_preference(cfg, plus)
        curve = binned_median(x, y, cfg.bins)

        self.assertEqual(np.sign(spearman_trend(curve)), sign)
        self.assertEqual(np.sign(band_median(x, y, 0.0, 0.25)), -sign)
        self.assertEqual(np.sign(band_median(x, y, 0.75, 1.0)), sign)


class TestCsv(unittest.TestCase):

    def test_empty_bin(self):
        print("Testing CSV rows of empty and non-empty bins")

        curve = BinnedCurve(x_low=[0.0, 0.5], x_high=[0.5, 1.0], aggregate=[0.1, np.nan], count=[3, 0])
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "curve.csv")
            emit_csv(curve, path)
            with open(path, "rb") as f:
                lines = f.read().decode("utf-8").split("\n")

            self.assertEqual(lines, ["x_low,x_high,count,aggregate", "0,0.5,3,0.10000000000000001", "0.5,1,0,", ""])

            back = read_csv(path)
            self.assertTrue(np.array_equal(back.aggregate, curve.aggregate, equal_nan=True))
            self.assertTrue(np.array_equal(back.count, curve.count))

    def test_round_trip(self):
        print("Testing exact CSV round trip of a computed curve")

        curve = variance_preference_curve(ExperimentConfig(branch=2, depth=4, runs=10, bins=7, base_seed=4), "score")
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "curve.csv")
            emit_csv(curve, path)
            back = read_csv(path)

        self.assertTrue(np.array_equal(back.x_low, curve.x_low))
        self.assertTrue(np.array_equal(back.x_high, curve.x_high))
        self.assertTrue(np.array_equal(back.aggregate, curve.aggregate, equal_nan=True))

    def test_missing_column(self):
        print("Testing rejection of a CSV without the aggregate column")

        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "bad.csv")
            with open(path, "w") as f:
                f.write("x_low,x_high,count\n0,1,2\n")
            with self.assertRaises(FormatError):
                read_csv(path)


class TestConfig(unittest.TestCase):

    @parameterized.expand([
        [dict(runs=0)],
        [dict(bins=0)],
        [dict(base_seed=-1)],
        [dict(threads=0)],
        [dict(pooling="levels")],
        [dict(branch=1)],
    ])
    def test_invalid(self, kwargs):
        print(f"Testing rejection of experiment parameters {kwargs}")

        with self.assertRaises(ParameterError):
            ExperimentConfig(**kwargs)

    def test_replicate_error(self):
        print("Testing replicate index of propagated errors")

        def fail(i):
            if i == 3:
                raise ValueError("boom")
            return i

        for threads in (1, 2):
            with self.assertRaises(ReplicateError) as ctx:
                map_replicates(fail, 5, threads)
            self.assertEqual(ctx.exception.replicate, 3)
            self.assertIsInstance(ctx.exception.cause, ValueError)

        self.assertEqual(map_replicates(lambda i: i * i, 6, 3), [0, 1, 4, 9, 16, 25])


if __name__ == '__main__':
    unittest.main()
