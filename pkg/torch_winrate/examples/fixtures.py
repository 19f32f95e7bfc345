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

import numpy as np

from ..mdp import AstMdp


def counterexample_mdp():
    r"""
    Smallest MDP on which the score-optimal policy loses winrate.
    b=3, d=1, leaf scores (+10, +1, -1) and two actions at the root:
    action 0 moves to the first or last leaf with probability 1/2 each,
    action 1 moves to the middle leaf.

    Score values are q = (4.5, 1), so the score-optimal action is 0, while the
    winrates are (0.5, 1) and the outcome-optimal action is 1.
    """
    transitions = (np.array([[[0.5, 0.0, 0.5],
                              [0.0, 1.0, 0.0]]]),)
    return AstMdp(branch=3, depth=1, num_actions=2, leaf_scores=np.array([10, 1, -1]),
                  transitions=transitions, score_bound=10)


def constant_leaf_mdp(mdp, score):
    """Copy of mdp whose leaves all carry the same score."""
    leaf_scores = np.full(mdp.num_leaves, score, dtype=np.int64)
    return AstMdp(mdp.branch, mdp.depth, mdp.num_actions, leaf_scores, mdp.transitions,
                  max(mdp.score_bound, abs(int(score)), 1))
