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
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, log_expit
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import ParameterError, FormatError, EstimationError, DivergenceError
from .mdp import make_rng

logger = logging.getLogger(__name__)

# Elo points per natural logit unit
ELO_SCALE = 400.0 / math.log(10.0)

# ratings beyond this magnitude are treated as divergent
ELO_LIMIT = 1e5


def win_probability(elo_i, elo_j):
    r"""
    Logistic Elo model $P(i \text{ beats } j) = 1 / (1 + 10^{(e_j - e_i)/400})$.
    """
    if not (math.isfinite(elo_i) and math.isfinite(elo_j)):
        raise ParameterError("ratings must be finite")
    return float(expit((elo_i - elo_j) / ELO_SCALE))


def elo_difference(p):
    """Rating gap e_i - e_j at which i beats j with probability p, e.g. 55% -> 34.86."""
    if not 0 < p < 1:
        raise ParameterError(f"probability must lie in (0, 1), got {p}")
    return 400.0 * math.log10(p / (1 - p))


@dataclass
class MatchGrid:
    """
    Pairwise results between named players. wins[i, j] counts the games player i
    won against player j. anchors maps player names to their fixed ratings.
    """

    players: list
    wins: np.ndarray
    anchors: dict = field(default_factory=dict)

    def __post_init__(self):
        self.players = list(self.players)
        self.wins = np.asarray(self.wins)
        n = len(self.players)

        if len(set(self.players)) != n:
            raise ParameterError("player names must be unique")
        if self.wins.shape != (n, n):
            raise ParameterError(f"wins must have shape ({n}, {n}), got {self.wins.shape}")
        if not np.all(np.isfinite(self.wins)) or np.any(self.wins < 0) or np.any(self.wins != np.round(self.wins)):
            raise ParameterError("wins must be non-negative integers")
        if np.any(np.diag(self.wins) != 0):
            raise ParameterError("players cannot play themselves")
        self.wins = self.wins.astype(np.int64)

        if not self.anchors:
            raise ParameterError("at least one anchor is required")
        for name, value in self.anchors.items():
            if name not in self.players:
                raise ParameterError(f"anchor {name!r} is not a player")
            if not math.isfinite(value):
                raise ParameterError(f"anchor {name!r} must be finite")

    @classmethod
    def from_pairs(cls, pairs, anchors):
        """
        Builds a grid from (player_i, player_j, wins_ij, wins_ji) tuples; repeated
        pairs are summed. Players are ordered by first appearance.
        """
        players = []
        index = {}
        for row in pairs:
            for name in row[:2]:
                if name not in index:
                    index[name] = len(players)
                    players.append(name)
        for name in anchors:
            if name not in index:
                index[name] = len(players)
                players.append(name)

        wins = np.zeros((len(players), len(players)), dtype=np.int64)
        for pi, pj, wij, wji in pairs:
            if pi == pj:
                raise ParameterError(f"player {pi!r} cannot play themselves")
            if wij < 0 or wji < 0:
                raise ParameterError(f"negative win count for {pi!r} vs {pj!r}")
            wins[index[pi], index[pj]] += wij
            wins[index[pj], index[pi]] += wji

        return cls(players, wins, dict(anchors))

    @property
    def games(self):
        return self.wins + self.wins.T

    def anchor_mask(self):
        return np.array([p in self.anchors for p in self.players])


@dataclass(frozen=True)
class Ratings:
    elo: dict
    log_likelihood: float
    converged: bool
    iterations: int

    def __getitem__(self, name):
        return self.elo[name]


def log_likelihood(grid, elo):
    """Bernoulli log-likelihood of the grid under ratings given per player."""
    e = np.array([elo[p] for p in grid.players], dtype=np.float64) if isinstance(elo, dict) else np.asarray(elo)
    d = (e[:, None] - e[None, :]) / ELO_SCALE
    mask = grid.wins > 0
    return float((grid.wins[mask] * log_expit(d[mask])).sum())


def _check_connected(grid):
    anchored = grid.anchor_mask()
    games = grid.games
    ncomp, labels = connected_components(csr_matrix(games > 0), directed=False)

    unreachable = [p for k in range(ncomp) if not np.any(anchored[labels == k])
                   for p, lab in zip(grid.players, labels) if lab == k]
    if unreachable:
        raise EstimationError(f"players not connected to any anchor: {', '.join(map(str, unreachable))}", unreachable)


def _check_bounded(grid):
    # with all anchors merged into one node, a finite maximizer exists iff every
    # player both wins and loses along a directed cycle through the anchor node
    anchored = grid.anchor_mask()
    free = np.flatnonzero(~anchored)
    node = np.zeros(len(grid.players), dtype=np.int64)
    node[free] = np.arange(1, free.shape[0] + 1)

    beats = np.zeros((free.shape[0] + 1, free.shape[0] + 1), dtype=bool)
    i, j = np.nonzero(grid.wins > 0)
    beats[node[i], node[j]] = True
    np.fill_diagonal(beats, False)

    _, labels = connected_components(csr_matrix(beats), directed=True, connection="strong")
    divergent = [grid.players[k] for k in free if labels[node[k]] != labels[0]]
    if divergent:
        raise DivergenceError(f"ratings unbounded for players {', '.join(map(str, divergent))} "
                              "(all wins or all losses against the rest); "
                              "consider virtual_draws > 0", divergent)


def fit(grid, tol=1e-9, max_iter=10000, virtual_draws=0.0):
    r"""
    Maximum-likelihood Elo ratings with anchored players held fixed.

    Maximizes $\sum_{i,j} w_{ij} \log P(i \text{ beats } j)$ over the free ratings by
    damped Newton steps (the objective is concave in the ratings). Iteration stops
    once the largest rating change falls below tol * 400 Elo.

    Parameters
    ----------
    grid : MatchGrid
    tol : float, default is 1e-9
        convergence tolerance in units of 400 Elo
    max_iter : int, default is 10000
    virtual_draws : float, default is 0
        Laplace-style regularization: every pair that played receives
        virtual_draws / 2 extra wins on each side, which keeps 100% score
        edges finite.
    """
    if virtual_draws < 0:
        raise ParameterError(f"virtual_draws must be non-negative, got {virtual_draws}")
    if max_iter < 1:
        raise ParameterError(f"max_iter must be at least 1, got {max_iter}")

    _check_connected(grid)
    if virtual_draws == 0:
        _check_bounded(grid)

    anchored = grid.anchor_mask()
    free = np.flatnonzero(~anchored)

    wins = grid.wins.astype(np.float64)
    if virtual_draws > 0:
        wins = wins + 0.5 * virtual_draws * (grid.games > 0)
    games = wins + wins.T

    # natural logit units
    theta = np.zeros(len(grid.players))
    anchor_values = np.array([grid.anchors[p] for p in grid.players if p in grid.anchors])
    theta[anchored] = anchor_values / ELO_SCALE
    theta[free] = anchor_values.mean() / ELO_SCALE

    def objective(t):
        d = t[:, None] - t[None, :]
        mask = wins > 0
        return float((wins[mask] * log_expit(d[mask])).sum())

    converged = free.shape[0] == 0
    iterations = 0
    ll = objective(theta)

    while not converged and iterations < max_iter:
        iterations += 1

        p = expit(theta[:, None] - theta[None, :])
        grad = (wins - games * p).sum(axis=1)
        curv = games * p * (1 - p)
        hess = -curv
        np.fill_diagonal(hess, curv.sum(axis=1))

        step = np.linalg.solve(hess[np.ix_(free, free)], grad[free])

        # step halving keeps the ascent monotone
        t = 1.0
        while True:
            candidate = theta.copy()
            candidate[free] += t * step
            ll_new = objective(candidate)
            if ll_new >= ll or t < 1e-10:
                break
            t *= 0.5

        theta = candidate
        ll = ll_new
        delta = np.max(np.abs(t * step)) * ELO_SCALE

        if np.max(np.abs(theta)) * ELO_SCALE > ELO_LIMIT:
            raise DivergenceError("ratings diverged during the fit", [grid.players[k] for k in free])
        if delta < tol * 400:
            converged = True

    if not converged:
        logger.warning("Elo fit did not converge in %d iterations", iterations)
    logger.debug("Elo fit: %d iterations, log-likelihood %.6f", iterations, ll)

    elo = {name: float(theta[k] * ELO_SCALE) for k, name in enumerate(grid.players)}
    # anchors are reported exactly
    elo.update({name: float(value) for name, value in grid.anchors.items()})

    return Ratings(elo=elo, log_likelihood=log_likelihood(grid, elo), converged=converged, iterations=iterations)


def simulate_grid(true_elo, games_per_pair, anchors, seed):
    """Round-robin results drawn from the logistic model at the given ratings."""
    if games_per_pair < 1:
        raise ParameterError(f"games_per_pair must be at least 1, got {games_per_pair}")
    rng = make_rng(seed)
    names = list(true_elo)
    pairs = []
    for a in range(len(names)):
        for b in range(a + 1, len(names)):
            p = win_probability(true_elo[names[a]], true_elo[names[b]])
            w = int(rng.binomial(games_per_pair, p))
            pairs.append((names[a], names[b], w, games_per_pair - w))
    return MatchGrid.from_pairs(pairs, anchors)


# CSV

def _read_rows(path, columns):
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        missing = [c for c in columns if c not in (reader.fieldnames or [])]
        if missing:
            raise FormatError(missing[0], f"missing column in {path}")
        return list(reader)


def _parse(row, column, cast, line):
    try:
        return cast(row[column])
    except (TypeError, ValueError) as e:
        raise FormatError(f"{column} (line {line})", f"cannot parse {row[column]!r}") from e


def read_games(path):
    """Rows (player_i, player_j, wins_ij, wins_ji) of a games CSV."""
    rows = _read_rows(path, ("player_i", "player_j", "wins_ij", "wins_ji"))
    return [(row["player_i"], row["player_j"], _parse(row, "wins_ij", int, n + 2), _parse(row, "wins_ji", int, n + 2))
            for n, row in enumerate(rows)]


def read_anchors(path):
    """Mapping player -> fixed Elo from an anchors CSV with columns player,elo."""
    rows = _read_rows(path, ("player", "elo"))
    return {row["player"]: _parse(row, "elo", float, n + 2) for n, row in enumerate(rows)}


def write_ratings(ratings, path, anchors=()):
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["player", "elo", "anchored"])
        for name, value in ratings.elo.items():
            writer.writerow([name, f"{value:.17g}", int(name in anchors)])
