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

import csv
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import ParameterError, FormatError
from .mdp import generate, replicate_seed, level_offset, validate_shape, make_rng
from .parallel import map_replicates
from .solver import RewardKind, solve_optimal, evaluate_policy, score_variance, count_ties

logger = logging.getLogger(__name__)

POOLINGS = ("states", "mdp")


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Parameters of a batch of random action-shared tree MDP experiments.
    Replicate i is generated from the stream replicate_seed(base_seed, i).

    pooling "states" weighs every state once across all MDPs; "mdp" first
    aggregates within each MDP and then across MDPs.
    """

    branch: int = 2
    depth: int = 6
    num_actions: int = 2
    runs: int = 2000
    bins: int = 100
    base_seed: int = 0
    threads: int = 1
    pooling: str = "states"

    def __post_init__(self):
        validate_shape(self.branch, self.depth, self.num_actions)
        if self.runs < 1:
            raise ParameterError(f"runs must be at least 1, got {self.runs}")
        if self.bins < 1:
            raise ParameterError(f"bins must be at least 1, got {self.bins}")
        if self.base_seed < 0:
            raise ParameterError(f"seed must be non-negative, got {self.base_seed}")
        if self.threads < 1:
            raise ParameterError(f"threads must be at least 1, got {self.threads}")
        if self.pooling not in POOLINGS:
            raise ParameterError(f"pooling must be one of {POOLINGS}, got {self.pooling!r}")

    def replicate(self, i):
        return generate(self.branch, self.depth, self.num_actions, replicate_seed(self.base_seed, i))


@dataclass
class BinnedCurve:
    """
    Per-bin aggregate of a sample over a partition of the x-range. Bins without
    samples have count 0 and a NaN aggregate.
    """

    x_low: np.ndarray
    x_high: np.ndarray
    aggregate: np.ndarray
    count: np.ndarray
    kind: str = "median"
    counters: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x_low = np.asarray(self.x_low, dtype=np.float64)
        self.x_high = np.asarray(self.x_high, dtype=np.float64)
        self.aggregate = np.asarray(self.aggregate, dtype=np.float64)
        self.count = np.asarray(self.count, dtype=np.int64)
        n = self.x_low.shape[0]
        if not (self.x_high.shape == self.aggregate.shape == self.count.shape == (n,)):
            raise ParameterError("bin arrays must have equal length")
        if np.any(self.count < 0):
            raise ParameterError("bin counts must be non-negative")
        if self.kind not in ("mean", "median"):
            raise ParameterError(f"unknown aggregation {self.kind!r}")

    def __len__(self):
        return self.x_low.shape[0]

    @property
    def centers(self):
        return 0.5 * (self.x_low + self.x_high)

    def nonempty(self):
        return self.count > 0


@dataclass(frozen=True)
class VarPrefSample:
    """
    Log-ratio y of the score variances of the actions chosen by pi+ and pi- at a
    state with best winrate x. Skipped states carry the reason and a NaN y.
    """

    x: float
    y: float
    skipped: str = None


SKIP_REASONS = ("equal_action", "zero_variance")


# winrate lost by the score-optimal policy

def _gap_replicate(cfg, i):
    mdp = cfg.replicate(i)

    outcome = solve_optimal(mdp, RewardKind.OUTCOME)
    score = solve_optimal(mdp, RewardKind.SCORE)
    cross = evaluate_policy(mdp, score.policy, RewardKind.OUTCOME)

    gap = (outcome.v - cross.v).numpy()
    b = cfg.branch
    sums = np.array([gap[level_offset(b, l):level_offset(b, l + 1)].sum() for l in range(cfg.depth + 1)])
    counts = np.array([b**l for l in range(cfg.depth + 1)], dtype=np.int64)

    return sums, counts, count_ties(score), count_ties(outcome)


def _gap_batch(cfg, progress=False):
    results = map_replicates(lambda i: _gap_replicate(cfg, i), cfg.runs, cfg.threads, progress=progress)
    sums = np.stack([r[0] for r in results])
    counts = np.stack([r[1] for r in results])
    counters = {
        "runs": cfg.runs,
        "states": int(counts.sum()),
        "score_ties": int(sum(r[2] for r in results)),
        "outcome_ties": int(sum(r[3] for r in results)),
    }
    return sums, counts, counters


def level_gap_replicates(cfg):
    """
    Per-replicate mean of v_outcome(pi_outcome) - v_outcome(pi_score) over the
    states of each level. Shape (runs, depth + 1).
    """
    sums, counts, _ = _gap_batch(cfg)
    return sums / counts


def winrate_gap_by_level(cfg, progress=False):
    """
    Mean winrate lost at each level when playing the score-optimal policy instead
    of the outcome-optimal one, over all states of all replicate MDPs.
    One bin per level 0..depth, with x_low = level and x_high = level + 1.
    """
    sums, counts, counters = _gap_batch(cfg, progress=progress)

    if cfg.pooling == "states":
        aggregate = sums.sum(axis=0) / counts.sum(axis=0)
    else:
        aggregate = (sums / counts).mean(axis=0)

    levels = np.arange(cfg.depth + 1)
    logger.info("winrate gap at the root %.6g over %d runs (ties: score %d, outcome %d)",
                aggregate[0], cfg.runs, counters["score_ties"], counters["outcome_ties"])

    return BinnedCurve(x_low=levels, x_high=levels + 1, aggregate=aggregate,
                       count=counts.sum(axis=0), kind="mean", counters=counters)


def bootstrap_ci(values, n_resamples=1000, confidence=0.95, seed=0):
    """Percentile bootstrap confidence interval of the mean of values."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.shape[0] < 1:
        raise ParameterError("values must be a non-empty 1-d array")
    if not 0 < confidence < 1:
        raise ParameterError(f"confidence must lie in (0, 1), got {confidence}")

    rng = make_rng(seed)
    idx = rng.integers(0, values.shape[0], size=(n_resamples, values.shape[0]))
    means = values[idx].mean(axis=1)
    alpha = 0.5 * (1 - confidence)

    return float(np.quantile(means, alpha)), float(np.quantile(means, 1 - alpha))


# variance preference of the two optimal policies

def _policies(mdp, plus):
    plus = RewardKind(plus)
    outcome = solve_optimal(mdp, RewardKind.OUTCOME)
    score = solve_optimal(mdp, RewardKind.SCORE)
    if plus is RewardKind.OUTCOME:
        return outcome, outcome.policy, score.policy
    return outcome, score.policy, outcome.policy


def _variance_preference(mdp, plus):
    outcome, pi_plus, pi_minus = _policies(mdp, plus)

    # variances along the trajectories of pi+
    var = score_variance(mdp, pi_plus).numpy()
    rows = np.arange(mdp.num_internal)
    ap = pi_plus.actions.numpy()
    am = pi_minus.actions.numpy()
    vp = var[rows, ap]
    vm = var[rows, am]
    x = outcome.v.numpy()[:mdp.num_internal]

    equal = ap == am
    zero = ~equal & ~((vp > 0) & (vm > 0))
    with np.errstate(divide="ignore", invalid="ignore"):
        y = np.log(vp) - np.log(vm)
    # distinct actions with identical variances carry no preference
    equal |= ~zero & (y == 0)
    emitted = ~equal & ~zero

    return x, y, equal, zero, emitted


def variance_preference_samples(mdp, plus):
    """One VarPrefSample per non-leaf state of a single MDP, skipped ones included."""
    x, y, equal, zero, emitted = _variance_preference(mdp, plus)
    samples = []
    for s in range(x.shape[0]):
        if emitted[s]:
            samples.append(VarPrefSample(float(x[s]), float(y[s])))
        else:
            samples.append(VarPrefSample(float(x[s]), float("nan"), "equal_action" if equal[s] else "zero_variance"))
    return samples


def collect_variance_preference(cfg, plus, progress=False):
    """
    Emitted (x, y) samples of all replicate MDPs, concatenated in replicate order,
    the replicate index of every sample and the skip counters.
    """
    def run(i):
        x, y, equal, zero, emitted = _variance_preference(cfg.replicate(i), plus)
        return x[emitted], y[emitted], int(equal.sum()), int(zero.sum()), x.shape[0]

    results = map_replicates(run, cfg.runs, cfg.threads, progress=progress)

    x = np.concatenate([r[0] for r in results])
    y = np.concatenate([r[1] for r in results])
    replicate = np.concatenate([np.full(r[0].shape[0], i, dtype=np.int64) for i, r in enumerate(results)])
    counters = {
        "runs": cfg.runs,
        "states": sum(r[4] for r in results),
        "emitted": int(x.shape[0]),
        "equal_action": sum(r[2] for r in results),
        "zero_variance": sum(r[3] for r in results),
    }
    logger.info("variance preference (plus=%s): %d emitted, %d equal action, %d zero variance",
                RewardKind(plus).value, counters["emitted"], counters["equal_action"], counters["zero_variance"])

    return x, y, replicate, counters


def bin_index(x, bins):
    """Equal-width bins over [0, 1]; x = 1 falls into the last bin."""
    return np.clip(np.floor(np.asarray(x) * bins).astype(np.int64), 0, bins - 1)


def binned_median(x, y, bins, replicate=None):
    """
    Median of y per equal-width x bin over [0, 1]. With replicate indices given,
    the median of per-replicate medians is taken instead.
    """
    idx = bin_index(x, bins)
    aggregate = np.full(bins, np.nan)
    count = np.bincount(idx, minlength=bins)

    for k in np.flatnonzero(count):
        mask = idx == k
        if replicate is None:
            aggregate[k] = np.median(y[mask])
        else:
            r = replicate[mask]
            yk = y[mask]
            aggregate[k] = np.median([np.median(yk[r == i]) for i in np.unique(r)])

    edges = np.arange(bins + 1) / bins
    return BinnedCurve(x_low=edges[:-1], x_high=edges[1:], aggregate=aggregate, count=count, kind="median")


def variance_preference_curve(cfg, plus, progress=False):
    """
    Binned median of y(s) = log Var(pi+(s)) - log Var(pi-(s)) against the best
    winrate v_outcome(pi_outcome)(s), over the states where the two policies pick
    different actions with positive variances.
    """
    x, y, replicate, counters = collect_variance_preference(cfg, plus, progress=progress)
    curve = binned_median(x, y, cfg.bins, replicate if cfg.pooling == "mdp" else None)
    curve.counters = counters
    return curve


def band_median(x, y, low, high):
    """Pooled median of y over low <= x <= high, NaN when the band is empty."""
    mask = (x >= low) & (x <= high)
    if not np.any(mask):
        return float("nan")
    return float(np.median(y[mask]))


def spearman_trend(curve):
    """Spearman rank correlation between bin center and aggregate over non-empty bins."""
    mask = curve.nonempty()
    if np.count_nonzero(mask) < 2:
        return float("nan")
    return float(stats.spearmanr(curve.centers[mask], curve.aggregate[mask]).correlation)


# CSV

def _fmt(value):
    return f"{value:.17g}"


def emit_csv(curve, path):
    """
    Writes columns x_low,x_high,count,aggregate with 17 significant digits and
    an empty aggregate cell for empty bins.
    """
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["x_low", "x_high", "count", "aggregate"])
        for lo, hi, n, agg in zip(curve.x_low, curve.x_high, curve.count, curve.aggregate):
            writer.writerow([_fmt(lo), _fmt(hi), int(n), "" if n == 0 or np.isnan(agg) else _fmt(agg)])


def read_csv(path, kind="median"):
    columns = {"x_low": [], "x_high": [], "count": [], "aggregate": []}
    with open(path, "r", encoding="utf-8", newline="") as f:
        for row in csv.DictReader(f):
            for key in columns:
                if key not in row:
                    raise FormatError(key, f"missing column in {path}")
            columns["x_low"].append(float(row["x_low"]))
            columns["x_high"].append(float(row["x_high"]))
            columns["count"].append(int(row["count"]))
            columns["aggregate"].append(float(row["aggregate"]) if row["aggregate"] != "" else np.nan)
    return BinnedCurve(kind=kind, **columns)
