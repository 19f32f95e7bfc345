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

import enum
import numbers
import itertools
import logging
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn

from .errors import ParameterError
from .mdp import StateId, level_offset, make_rng

logger = logging.getLogger(__name__)


class RewardKind(enum.Enum):
    """Score reward, or the win/lose outcome 1{score > 0} derived from it."""

    SCORE = "score"
    OUTCOME = "outcome"

    def leaf_rewards(self, mdp):
        scores = np.asarray(mdp.leaf_scores)
        if self is RewardKind.SCORE:
            return scores.astype(np.float64)
        return (scores > 0).astype(np.float64)


@dataclass(frozen=True, eq=False)
class Policy:
    """
    Deterministic policy: one action per non-leaf state, in canonical flat order.
    """

    actions: torch.Tensor

    def __post_init__(self):
        actions = self.actions
        if isinstance(actions, torch.Tensor):
            integral = not (actions.is_floating_point() or actions.is_complex() or actions.dtype == torch.bool)
        elif isinstance(actions, np.ndarray):
            integral = np.issubdtype(actions.dtype, np.integer)
        else:
            actions = list(actions)
            for i, a in enumerate(actions):
                if isinstance(a, bool) or not isinstance(a, numbers.Integral):
                    raise ParameterError(f"policy entry {i} must be an integer action, got {a!r}")
            integral = True
        if not integral:
            raise ParameterError(f"policy actions must be integers, got dtype {actions.dtype}")
        object.__setattr__(self, "actions", torch.as_tensor(actions, dtype=torch.int64).flatten())

    def __eq__(self, other):
        if not isinstance(other, Policy):
            return NotImplemented
        return torch.equal(self.actions, other.actions)

    __hash__ = None

    def __len__(self):
        return self.actions.shape[0]

    def action(self, state, branch):
        return int(self.actions[state.flat(branch)])

    def check(self, mdp):
        if self.actions.shape != (mdp.num_internal,):
            raise ParameterError(f"policy has {self.actions.shape[0]} entries, expected {mdp.num_internal}")
        bad = torch.nonzero((self.actions < 0) | (self.actions >= mdp.num_actions)).flatten()
        if bad.numel() > 0:
            s = StateId.from_flat(int(bad[0]), mdp.branch)
            raise ParameterError(f"action {int(self.actions[bad[0]])} at state {s} outside [0, {mdp.num_actions})")


@dataclass(frozen=True, eq=False)
class SolveResult:
    """
    Values of every state and state-action values of every non-leaf state,
    in canonical flat order, together with the policy that produced them.
    """

    kind: RewardKind
    v: torch.Tensor
    q: torch.Tensor
    policy: Policy

    def level_values(self, mdp, level):
        start = level_offset(mdp.branch, level)
        return self.v[start:start + mdp.branch**level]


class BackwardInduction(nn.Module):
    r"""
    Single backward sweep over an action-shared tree. On a finite tree this is the
    exact fixed point of value iteration. For each level from d-1 down to 0

    $q(s, a) = \sum_{s' \in C_s} p(s' | s, a) v(s')$

    followed by $v(s) = \max_a q(s, a)$ (lowest index on ties) or, for a fixed
    policy, $v(s) = q(s, \pi(s))$.
    The per-level transition tensors are kept as buffers, the contraction with the
    child values is an einsum over the shared child index.
    """

    def __init__(self, mdp):
        super().__init__()

        self.branch = mdp.branch
        self.depth = mdp.depth
        self.num_actions = mdp.num_actions

        for level, p in enumerate(mdp.transitions):
            self.register_buffer(f"p{level}", torch.from_numpy(np.array(p)), persistent=False)

    def extra_repr(self):
        return f"branch={self.branch}, depth={self.depth}, num_actions={self.num_actions}"

    def forward(self, leaf_values: torch.Tensor, policy: torch.Tensor = None):

        assert(leaf_values.shape[-1] == self.branch**self.depth)

        v = leaf_values
        vs = [v]
        qs = []
        actions = []

        for level in reversed(range(self.depth)):
            p = getattr(self, f"p{level}")
            nstates = self.branch**level

            # contraction over the shared child set
            q = torch.einsum("sak,sk->sa", p.to(v.dtype), v.reshape(nstates, self.branch))

            if policy is None:
                a = torch.argmax(q, dim=-1)
            else:
                start = level_offset(self.branch, level)
                a = policy[start:start + nstates]

            v = torch.gather(q, -1, a.unsqueeze(-1)).squeeze(-1)

            vs.append(v)
            qs.append(q)
            actions.append(a)

        v = torch.cat(vs[::-1])
        q = torch.cat(qs[::-1])
        a = torch.cat(actions[::-1])

        return v, q, a


def _leaf_tensor(mdp, kind):
    return torch.from_numpy(kind.leaf_rewards(mdp))


def solve_optimal(mdp, kind):
    """Optimal values, state-action values and greedy policy for the given reward."""
    kind = RewardKind(kind)
    with torch.no_grad():
        v, q, a = BackwardInduction(mdp)(_leaf_tensor(mdp, kind))
    return SolveResult(kind=kind, v=v, q=q, policy=Policy(a))


def evaluate_policy(mdp, pi, kind):
    """Values of a fixed deterministic policy. The result's policy echoes pi."""
    kind = RewardKind(kind)
    pi.check(mdp)
    with torch.no_grad():
        v, q, _ = BackwardInduction(mdp)(_leaf_tensor(mdp, kind), policy=pi.actions)
    return SolveResult(kind=kind, v=v, q=q, policy=pi)


def second_moment(mdp, pi):
    r"""
    $E_\pi[r_{score}^2 | s, a]$ for every non-leaf state and action, following pi
    after the first action. Shape (num_internal, num_actions).
    """
    pi.check(mdp)
    scores = torch.from_numpy(np.asarray(mdp.leaf_scores, dtype=np.float64))
    with torch.no_grad():
        _, m2, _ = BackwardInduction(mdp)(scores**2, policy=pi.actions)
    return m2


def score_variance(mdp, pi):
    r"""
    Variance of the final score over trajectories following pi from (s, a),
    computed as $E_\pi[r^2 | s, a] - q^{score}_\pi(s, a)^2$.

    Cancellation can leave tiny negative values; those in $[-10^{-9} b^{2d}, 0)$
    are clamped to 0. Anything below is flagged as a numerical error and set to NaN.
    """
    m2 = second_moment(mdp, pi)
    q = evaluate_policy(mdp, pi, RewardKind.SCORE).q
    var = m2 - q**2

    tol = 1e-9 * float(mdp.max_score)**2
    flagged = var < -tol
    if torch.any(flagged):
        logger.warning("%d score variances below -%g flagged as numerical errors", int(flagged.sum()), tol)
    var = torch.where((var < 0) & ~flagged, torch.zeros_like(var), var)
    var = torch.where(flagged, torch.full_like(var, float("nan")), var)

    return var


def count_ties(result):
    """Number of non-leaf states whose maximal state-action value is attained more than once."""
    qmax = result.q.max(dim=-1, keepdim=True).values
    return int(((result.q == qmax).sum(dim=-1) > 1).sum())


def enumerate_policies(mdp, limit=2**16):
    """All deterministic policies of a small MDP, in lexicographic order."""
    count = mdp.num_actions**mdp.num_internal
    if count > limit:
        raise ParameterError(f"{count} policies exceed the enumeration limit {limit}")
    for actions in itertools.product(range(mdp.num_actions), repeat=mdp.num_internal):
        yield Policy(torch.tensor(actions, dtype=torch.int64))


def rollout_statistics(mdp, pi, state, action, n, seed):
    """
    Monte Carlo mean and unbiased variance of the final score over n trajectories
    that take `action` in `state` and follow pi afterwards.
    """
    pi.check(mdp)
    if mdp.is_leaf(state):
        raise ParameterError(f"state {state} is a leaf")
    if not 0 <= action < mdp.num_actions:
        raise ParameterError(f"action {action} outside [0, {mdp.num_actions})")
    if n < 2:
        raise ParameterError(f"n must be at least 2, got {n}")

    rng = make_rng(seed)
    actions = pi.actions.numpy()
    b = mdp.branch

    index = np.full(n, state.index, dtype=np.int64)
    act = np.full(n, action, dtype=np.int64)
    for level in range(state.level, mdp.depth):
        if level > state.level:
            act = actions[level_offset(b, level) + index]
        cum = np.cumsum(mdp.transitions[level][index, act], axis=-1)
        u = rng.random(n)
        k = np.minimum((u[:, None] >= cum).sum(axis=-1), b - 1)
        index = b * index + k

    scores = np.asarray(mdp.leaf_scores, dtype=np.float64)[index]

    return float(scores.mean()), float(scores.var(ddof=1))


def result_to_dict(result):
    return {
        "reward": result.kind.value,
        "v": result.v.tolist(),
        "q": result.q.tolist(),
        "policy": result.policy.actions.tolist(),
    }
