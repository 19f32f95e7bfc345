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
import math
import logging
from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .mdp import ROOT, make_rng
from .parallel import map_replicates
from .solver import RewardKind

logger = logging.getLogger(__name__)

# exploration constants for the two value scales
DEFAULT_C_PUCT = {RewardKind.SCORE: 1.5, RewardKind.OUTCOME: 1.0}


@dataclass(frozen=True)
class SearchConfig:
    """
    Parameters of the PUCT search.

    Parameters
    ----------
    visits : int
        number of simulations per search
    c_puct : float, default is None
        exploration constant; None selects 1.5 for the score reward and 1.0
        for the outcome reward
    rollouts_per_eval : int
        uniform random rollouts averaged to evaluate a newly expanded state
    seed : int
        seed of the search stream when no generator is passed
    fpu : float
        value assumed for actions that have not been visited yet
    """

    visits: int = 800
    c_puct: float = None
    rollouts_per_eval: int = 1
    seed: int = 0
    fpu: float = 0.0

    def __post_init__(self):
        if self.visits < 1:
            raise ParameterError(f"visits must be at least 1, got {self.visits}")
        if self.c_puct is not None and not self.c_puct > 0:
            raise ParameterError(f"c_puct must be positive, got {self.c_puct}")
        if self.rollouts_per_eval < 1:
            raise ParameterError(f"rollouts_per_eval must be at least 1, got {self.rollouts_per_eval}")
        if self.seed < 0:
            raise ParameterError(f"seed must be non-negative, got {self.seed}")

    def exploration(self, kind):
        if self.c_puct is not None:
            return self.c_puct
        return DEFAULT_C_PUCT[RewardKind(kind)]


class SearchNode:
    """
    Statistics of a non-leaf state in the search tree: visit counts N(a),
    accumulated values W(a) and uniform priors P(a), plus the expanded children
    keyed by state.
    """

    __slots__ = ("state", "N", "W", "P", "children")

    def __init__(self, state, num_actions):
        self.state = state
        self.N = [0] * num_actions
        self.W = [0.0] * num_actions
        self.P = [1.0 / num_actions] * num_actions
        self.children = {}

    def q(self, a, fpu=0.0):
        if self.N[a] == 0:
            return fpu
        return self.W[a] / self.N[a]

    def select(self, c_puct, fpu=0.0):
        r"""
        $a^* = \arg\max_a Q(a) + U(a)$ with
        $U(a) = c_{puct} P(a) \sqrt{\sum_b N(b)} / (1 + N(a))$, lowest index on ties.
        """
        sqrt_total = math.sqrt(sum(self.N))
        best, best_value = 0, -math.inf
        for a in range(len(self.N)):
            value = self.q(a, fpu) + c_puct * self.P[a] * sqrt_total / (1 + self.N[a])
            if value > best_value:
                best, best_value = a, value
        return best

    def backup(self, a, value):
        self.N[a] += 1
        self.W[a] += value


@dataclass(frozen=True)
class SearchResult:
    """Chosen action, normalized root visit distribution and root action values."""

    action: int
    visits: np.ndarray
    q: np.ndarray
    counts: np.ndarray


def leaf_value(mdp, state, kind):
    """Score scaled to [-1, 1] by 1/b^d, or the 0/1 outcome."""
    score = mdp.leaf_score(state)
    if kind is RewardKind.SCORE:
        return score / mdp.max_score
    return 1.0 if score > 0 else 0.0


def rollout(mdp, state, kind, rng):
    """Uniformly random actions down to a leaf; returns the leaf value."""
    while not mdp.is_leaf(state):
        a = min(int(rng.random() * mdp.num_actions), mdp.num_actions - 1)
        state = mdp.sample_child(state, a, rng)
    return leaf_value(mdp, state, kind)


def _simulate(mdp, root, kind, cfg, c_puct, rng):
    node = root
    path = []

    while True:
        a = node.select(c_puct, cfg.fpu)
        path.append((node, a))
        # chance node resolved by sampling the environment
        child = mdp.sample_child(node.state, a, rng)

        if mdp.is_leaf(child):
            value = leaf_value(mdp, child, kind)
            break

        if child not in node.children:
            node.children[child] = SearchNode(child, mdp.num_actions)
            value = sum(rollout(mdp, child, kind, rng) for _ in range(cfg.rollouts_per_eval)) / cfg.rollouts_per_eval
            break

        node = node.children[child]

    for n, a in path:
        n.backup(a, value)


def search(mdp, root, kind, cfg, rng=None):
    """
    Runs cfg.visits PUCT simulations from root and returns the most visited
    action (lowest index on ties). Without an explicit generator the search
    stream is seeded from cfg.seed, so the result is deterministic.
    """
    kind = RewardKind(kind)
    if mdp.is_leaf(root):
        raise ParameterError(f"root {root} is a leaf")
    if rng is None:
        rng = make_rng(cfg.seed)

    c_puct = cfg.exploration(kind)
    tree = SearchNode(root, mdp.num_actions)
    for _ in range(cfg.visits):
        _simulate(mdp, tree, kind, cfg, c_puct, rng)

    counts = np.array(tree.N, dtype=np.int64)
    assert(counts.sum() == cfg.visits)

    return SearchResult(action=int(np.argmax(counts)),
                        visits=counts / counts.sum(),
                        q=np.array([tree.q(a, cfg.fpu) for a in range(mdp.num_actions)]),
                        counts=counts)


class SearchAgent:
    """Plays the most visited action of a fresh PUCT search at every move."""

    def __init__(self, kind, cfg):
        self.kind = RewardKind(kind)
        self.cfg = cfg
        self.seed = cfg.seed

    def __repr__(self):
        return f"SearchAgent({self.kind.value}, visits={self.cfg.visits})"

    def act(self, mdp, state, rng):
        return search(mdp, state, self.kind, self.cfg, rng).action


class PolicyAgent:
    """Plays a fixed deterministic policy, e.g. an exact optimal one."""

    def __init__(self, policy, name="policy"):
        self.policy = policy
        self.name = name
        self.seed = 0

    def __repr__(self):
        return f"PolicyAgent({self.name})"

    def act(self, mdp, state, rng):
        return self.policy.action(state, mdp.branch)


def play_episode(mdp, agent, env_rng, agent_rng):
    """Single episode from the root; returns the final leaf score."""
    state = ROOT
    while not mdp.is_leaf(state):
        a = agent.act(mdp, state, agent_rng)
        state = mdp.sample_child(state, a, env_rng)
    return mdp.leaf_score(state)


@dataclass
class MatchResult:
    """Final score and outcome of every episode, one row per agent."""

    agents: tuple
    scores: np.ndarray

    @property
    def episodes(self):
        return self.scores.shape[1]

    @property
    def outcomes(self):
        return (self.scores > 0).astype(np.int64)

    def mean_score(self, j):
        return float(self.scores[j].mean())

    def mean_outcome(self, j):
        return float(self.outcomes[j].mean())

    def stderr_outcome(self, j):
        if self.episodes < 2:
            return float("nan")
        return float(self.outcomes[j].std(ddof=1) / math.sqrt(self.episodes))

    def write_csv(self, path, labels=("A", "B")):
        with open(path, "w", encoding="utf-8", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(["episode", "agent", "score", "outcome"])
            for e in range(self.episodes):
                for j, label in enumerate(labels):
                    writer.writerow([e, label, int(self.scores[j, e]), int(self.outcomes[j, e])])


def match(mdp, agent_a, agent_b, episodes, seed, threads=1):
    """
    Each agent plays `episodes` episodes of the MDP. Episode e of both agents
    shares the environment stream (seed, e), so equal agents produce equal
    results; an agent's own stream is derived from (seed, agent seed, e).
    """
    if episodes < 1:
        raise ParameterError(f"episodes must be at least 1, got {episodes}")
    if seed < 0:
        raise ParameterError(f"seed must be non-negative, got {seed}")
    agents = (agent_a, agent_b)

    def run(e):
        scores = []
        for agent in agents:
            env_rng = make_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(e, 0)))
            agent_rng = make_rng(np.random.SeedSequence(entropy=[int(seed), int(agent.seed)], spawn_key=(e, 1)))
            scores.append(play_episode(mdp, agent, env_rng, agent_rng))
        return scores

    scores = np.array(map_replicates(run, episodes, threads), dtype=np.int64).T
    result = MatchResult(agents=agents, scores=scores)

    logger.info("%r vs %r: mean outcome %.4f vs %.4f over %d episodes",
                agent_a, agent_b, result.mean_outcome(0), result.mean_outcome(1), episodes)

    return result
