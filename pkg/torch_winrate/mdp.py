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

import json
import logging
from dataclasses import dataclass
from functools import cached_property
from numbers import Integral

import numpy as np

from .errors import ParameterError, FormatError

logger = logging.getLogger(__name__)

# largest admissible number of leaves b^d
MAX_LEAVES = 2**31

# absolute tolerance on the normalization of a transition vector
SUM_TOL = 1e-12


def level_offset(branch, level):
    r"""
    Flat index of the first state at a level, $(b^\ell - 1) / (b - 1)$.
    """
    return (branch**level - 1) // (branch - 1)


@dataclass(frozen=True, order=True)
class StateId:
    """
    Position of a state in the tree. Children of (level, index) are
    (level + 1, branch * index + k) for k in [0, branch).
    """

    level: int
    index: int

    def flat(self, branch):
        return level_offset(branch, self.level) + self.index

    @staticmethod
    def from_flat(flat, branch):
        level = 0
        while level_offset(branch, level + 1) <= flat:
            level += 1
        return StateId(level, flat - level_offset(branch, level))

    def child(self, branch, k):
        return StateId(self.level + 1, branch * self.index + k)

    def children(self, branch):
        return [self.child(branch, k) for k in range(branch)]

    def parent(self, branch):
        if self.level == 0:
            return None
        return StateId(self.level - 1, self.index // branch)


ROOT = StateId(0, 0)


def make_rng(seed):
    """
    Philox-backed generator for an integer seed or a SeedSequence.
    Philox is counter based, so independent streams never overlap.
    """
    if isinstance(seed, np.random.SeedSequence):
        seq = seed
    else:
        if not isinstance(seed, Integral) or isinstance(seed, bool):
            raise ParameterError(f"seed must be an integer, got {seed!r}")
        if seed < 0:
            raise ParameterError(f"seed must be non-negative, got {seed}")
        seq = np.random.SeedSequence(int(seed))
    return np.random.Generator(np.random.Philox(seq))


def replicate_seed(base_seed, replicate):
    """
    Stream of replicate i of a batch: SeedSequence(entropy=base_seed, spawn_key=(i,)).
    This is the i-th child of SeedSequence(base_seed).spawn(...), and depends only on
    (base_seed, i), so batches reproduce regardless of how replicates are scheduled.
    """
    if base_seed < 0:
        raise ParameterError(f"seed must be non-negative, got {base_seed}")
    return np.random.SeedSequence(entropy=int(base_seed), spawn_key=(int(replicate),))


def _check_shape(branch, depth, num_actions, error):
    for name, value, low in (("branch", branch, 2), ("depth", depth, 1), ("num_actions", num_actions, 2)):
        if not isinstance(value, Integral) or isinstance(value, bool):
            raise error(name, f"must be an integer, got {value!r}")
        if value < low:
            raise error(name, f"must be at least {low}, got {value}")
    if depth > 31 or branch**depth > MAX_LEAVES:
        raise error("depth", f"branch**depth = {branch}**{depth} exceeds {MAX_LEAVES}")


def validate_shape(branch, depth, num_actions):
    """Raises ParameterError unless b >= 2, d >= 1, A >= 2 and b**d <= 2**31."""
    _check_shape(branch, depth, num_actions, _parameter_error)


def _invariant_violations(branch, depth, num_actions, leaf_scores, transitions, bound=None):
    nleaves = branch**depth
    bound = nleaves if bound is None else bound

    if leaf_scores.shape != (nleaves,):
        yield "leaf_scores", f"expected {nleaves} entries, got {leaf_scores.shape[0] if leaf_scores.ndim else 0}"
        return
    bad = np.flatnonzero(np.abs(leaf_scores) > bound)
    if bad.size > 0:
        yield f"leaf_scores[{bad[0]}]", f"score {leaf_scores[bad[0]]} outside [-{bound}, {bound}]"
        return

    if len(transitions) != depth:
        yield "transitions", f"expected {depth} levels, got {len(transitions)}"
        return
    for level, p in enumerate(transitions):
        shape = (branch**level, num_actions, branch)
        if p.shape != shape:
            yield f"transitions[{level}]", f"expected shape {shape}, got {p.shape}"
            return
        if not np.all(np.isfinite(p)):
            s, a, _ = np.argwhere(~np.isfinite(p))[0]
            yield f"transitions[{level}][{s}][{a}]", "non-finite probability"
            return
        if np.any(p < 0):
            s, a, _ = np.argwhere(p < 0)[0]
            yield f"transitions[{level}][{s}][{a}]", "negative probability"
            return
        err = np.abs(p.sum(axis=-1) - 1.0)
        if np.any(err > SUM_TOL):
            s, a = np.argwhere(err > SUM_TOL)[0]
            yield f"transitions[{level}][{s}][{a}]", f"probabilities sum to {p[s, a].sum()!r}, not 1"
            return


def _frozen(array, dtype):
    array = np.array(array, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


def _parameter_error(field, message):
    return ParameterError(f"{field}: {message}")


@dataclass(frozen=True, eq=False)
class AstMdp:
    """
    Action-shared tree MDP. States are partitioned by levels 0..depth with
    branch**level states at each level; every state shares its child set across
    all actions, and actions differ only in their transition probabilities.
    Leaves at level depth carry an integer score; all other rewards are zero.

    Parameters
    ----------
    branch : int
        number b of children per state, at least 2
    depth : int
        level d of the leaves, at least 1
    num_actions : int
        number A of actions of every non-leaf state, at least 2
    leaf_scores : array of int, shape (b**d,)
        score reward of every leaf, in [-b**d, b**d]
    transitions : sequence of arrays
        transitions[l] has shape (b**l, A, b); entry [i, a, k] is the probability
        of moving from (l, i) to its k-th child under action a
    score_bound : int, default is None
        bound on the absolute leaf scores; None means b**d. Hand-built fixtures
        may use a wider bound, which also sets the score scaling of the search
    """

    branch: int
    depth: int
    num_actions: int
    leaf_scores: np.ndarray
    transitions: tuple
    score_bound: int = None

    def __post_init__(self):
        _check_shape(self.branch, self.depth, self.num_actions, _parameter_error)
        if self.score_bound is None:
            object.__setattr__(self, "score_bound", self.branch**self.depth)
        elif not isinstance(self.score_bound, Integral) or self.score_bound < 1:
            raise ParameterError(f"score_bound must be a positive integer, got {self.score_bound!r}")

        object.__setattr__(self, "leaf_scores", _frozen(self.leaf_scores, np.int64))
        object.__setattr__(self, "transitions", tuple(_frozen(p, np.float64) for p in self.transitions))

        for field, message in _invariant_violations(self.branch, self.depth, self.num_actions,
                                                    self.leaf_scores, self.transitions, self.score_bound):
            raise ParameterError(f"{field}: {message}")

    def __eq__(self, other):
        if not isinstance(other, AstMdp):
            return NotImplemented
        return (self.branch == other.branch and self.depth == other.depth
                and self.num_actions == other.num_actions
                and self.score_bound == other.score_bound
                and np.array_equal(self.leaf_scores, other.leaf_scores)
                and all(np.array_equal(p, q) for p, q in zip(self.transitions, other.transitions)))

    __hash__ = None

    def __repr__(self):
        return f"AstMdp(branch={self.branch}, depth={self.depth}, num_actions={self.num_actions})"

    @property
    def num_leaves(self):
        return self.branch**self.depth

    @property
    def max_score(self):
        """bound on the absolute leaf score, b**d unless given explicitly"""
        return self.score_bound

    @property
    def num_internal(self):
        """number of non-leaf states, levels 0..depth-1"""
        return level_offset(self.branch, self.depth)

    @property
    def num_states(self):
        return level_offset(self.branch, self.depth + 1)

    def is_leaf(self, state):
        return state.level == self.depth

    def transition(self, state, action):
        if not 0 <= action < self.num_actions:
            raise ParameterError(f"action {action} outside [0, {self.num_actions})")
        return self.transitions[state.level][state.index, action]

    def leaf_score(self, state):
        return int(self.leaf_scores[state.index])

    @cached_property
    def _cumulative(self):
        cum = []
        for p in self.transitions:
            c = np.cumsum(p, axis=-1)
            c[..., -1] = 1.0
            cum.append(c)
        return cum

    def sample_child(self, state, action, rng):
        """Draws the next state from p(. | state, action) by inverse CDF."""
        cum = self._cumulative[state.level][state.index, action]
        k = int(np.searchsorted(cum, rng.random(), side="right"))
        return state.child(self.branch, min(k, self.branch - 1))


def generate(branch, depth, num_actions, seed):
    r"""
    Random action-shared tree MDP. Leaf scores are i.i.d. uniform integers on the
    closed interval $[-b^d, b^d]$; every transition vector is an independent
    Dirichlet(1, ..., 1) draw obtained by normalizing b standard exponentials.
    Leaves are drawn first, then transitions level by level, so the result is a
    pure function of (branch, depth, num_actions, seed).
    """
    _check_shape(branch, depth, num_actions, _parameter_error)
    rng = make_rng(seed)

    nleaves = branch**depth
    leaf_scores = rng.integers(-nleaves, nleaves, size=nleaves, endpoint=True)

    transitions = []
    for level in range(depth):
        e = rng.standard_exponential(size=(branch**level, num_actions, branch))
        transitions.append(e / e.sum(axis=-1, keepdims=True))

    return AstMdp(branch, depth, num_actions, leaf_scores, tuple(transitions))


def make_deterministic(mdp, seed):
    """
    Same tree and leaf scores, with every transition vector replaced by a one-hot
    vector on a child chosen uniformly at random.
    """
    rng = make_rng(seed)
    eye = np.eye(mdp.branch)

    transitions = []
    for level in range(mdp.depth):
        choice = rng.integers(0, mdp.branch, size=(mdp.branch**level, mdp.num_actions))
        transitions.append(eye[choice])

    return AstMdp(mdp.branch, mdp.depth, mdp.num_actions, mdp.leaf_scores, tuple(transitions), mdp.score_bound)


def serialize(mdp):
    """
    JSON document with fields branch, depth, num_actions, leaf_scores, transitions,
    and score_bound when it differs from b**d.
    Probabilities are written with the shortest decimal representation that
    round-trips bit-exactly (at most 17 significant digits).
    """
    doc = {
        "branch": mdp.branch,
        "depth": mdp.depth,
        "num_actions": mdp.num_actions,
        "leaf_scores": [int(s) for s in mdp.leaf_scores],
        "transitions": [p.tolist() for p in mdp.transitions],
    }
    if mdp.score_bound != mdp.num_leaves:
        doc["score_bound"] = mdp.score_bound
    return json.dumps(doc)


def _require_int(doc, field):
    if field not in doc:
        raise FormatError(field, "missing")
    value = doc[field]
    if not isinstance(value, int) or isinstance(value, bool):
        raise FormatError(field, f"expected an integer, got {value!r}")
    return value


def deserialize(text):
    """Inverse of serialize. Raises FormatError naming the offending field."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError("document", f"invalid JSON ({e})") from e
    if not isinstance(doc, dict):
        raise FormatError("document", "expected a JSON object")

    branch = _require_int(doc, "branch")
    depth = _require_int(doc, "depth")
    num_actions = _require_int(doc, "num_actions")
    _check_shape(branch, depth, num_actions, FormatError)

    if "leaf_scores" not in doc:
        raise FormatError("leaf_scores", "missing")
    scores = doc["leaf_scores"]
    if not isinstance(scores, list):
        raise FormatError("leaf_scores", "expected a list")
    for i, s in enumerate(scores):
        if not isinstance(s, int) or isinstance(s, bool):
            raise FormatError(f"leaf_scores[{i}]", f"expected an integer, got {s!r}")
    try:
        leaf_scores = np.array(scores, dtype=np.int64)
    except OverflowError as e:
        raise FormatError("leaf_scores", "score does not fit in 64 bits") from e

    if "transitions" not in doc:
        raise FormatError("transitions", "missing")
    if not isinstance(doc["transitions"], list):
        raise FormatError("transitions", "expected a list of levels")
    score_bound = None
    if "score_bound" in doc:
        score_bound = _require_int(doc, "score_bound")
        if score_bound < 1:
            raise FormatError("score_bound", f"must be positive, got {score_bound}")

    transitions = []
    for level, p in enumerate(doc["transitions"]):
        try:
            transitions.append(np.array(p, dtype=np.float64))
        except (ValueError, TypeError) as e:
            raise FormatError(f"transitions[{level}]", f"not a rectangular numeric array ({e})") from e

    for field, message in _invariant_violations(branch, depth, num_actions, leaf_scores, transitions, score_bound):
        raise FormatError(field, message)

    return AstMdp(branch, depth, num_actions, leaf_scores, tuple(transitions), score_bound)


def save(mdp, path):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(serialize(mdp))
        f.write("\n")
    logger.info("wrote %r to %s", mdp, path)


def load(path):
    with open(path, "r", encoding="utf-8") as f:
        return deserialize(f.read())
