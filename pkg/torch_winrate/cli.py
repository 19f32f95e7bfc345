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
import sys
import csv
import json
import hashlib
import logging
import argparse

import numpy as np

from . import __version__
from . import bandit, mdp as mdplib, solver, analysis, mcts, elo
from .errors import WinrateError, ParameterError, FormatError, EstimationError, ReplicateError

logger = logging.getLogger(__name__)

PROG = "torch-winrate"


# run manifest

def _digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def write_manifest(subcommand, params, base_seed, outputs, anchor=None, stdout=None):
    """
    Writes <first output>.manifest.json with the subcommand, the resolved
    parameters, the base seed, the tool version and the digest of every output.
    Contains no timestamps, so reruns produce identical manifests.

    Without file outputs the manifest is written to <anchor>.manifest.json.
    Text written to stdout is digested under the key "<stdout>".
    """
    outputs = [p for p in outputs if p]
    if not outputs and anchor is None:
        return None
    digests = {os.path.basename(p): _digest(p) for p in outputs}
    if stdout is not None:
        digests["<stdout>"] = "sha256:" + hashlib.sha256(stdout.encode("utf-8")).hexdigest()
    manifest = {
        "subcommand": subcommand,
        "parameters": params,
        "base_seed": base_seed,
        "version": __version__,
        "outputs": digests,
    }
    path = (outputs[0] if outputs else anchor) + ".manifest.json"
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    logger.info("wrote manifest %s", path)
    return path


def _params(args, exclude=("func", "verbose", "progress")):
    return {k: v for k, v in sorted(vars(args).items()) if k not in exclude}


def _fmt(x):
    return f"{x:.17g}"


def _grid(low, high, step):
    if not step > 0:
        raise ParameterError(f"grid step must be positive, got {step}")
    if high < low:
        raise ParameterError(f"grid bounds reversed: {low} > {high}")
    n = int(round((high - low) / step)) + 1
    return low + step * np.arange(n)


# subcommands

def cmd_bandit_scan(args):
    mus = _grid(args.mu_min, args.mu_max, args.mu_step)
    if args.exclude_zero:
        mus = mus[mus != 0]
    sigmas = _grid(args.sigma_min, args.sigma_max, args.sigma_step)

    scan = bandit.bandit_scan(mus, sigmas)

    with open(args.out, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(["mu1", "sigma1", "mu2", "sigma2", "score_pref", "outcome_pref", "disagree"])
        for row in zip(scan["mu1"], scan["sigma1"], scan["mu2"], scan["sigma2"],
                       scan["score_pref"], scan["outcome_pref"], scan["disagree"]):
            writer.writerow([_fmt(row[0]), _fmt(row[1]), _fmt(row[2]), _fmt(row[3]),
                             int(row[4]), int(row[5]), int(row[6])])

    logger.info("%d of %d tuples in the disagreement region", int(scan["disagree"].sum()), scan["disagree"].size)
    write_manifest("bandit-scan", _params(args), None, [args.out])
    return 0


def cmd_gen_mdp(args):
    m = mdplib.generate(args.branch, args.depth, args.actions, args.seed)
    if args.deterministic_seed is not None:
        m = mdplib.make_deterministic(m, args.deterministic_seed)
    mdplib.save(m, args.out)
    write_manifest("gen-mdp", _params(args), args.seed, [args.out])
    return 0


def _write_json(doc, path):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(doc, f)
        f.write("\n")


def _read_policy(path):
    with open(path, "r", encoding="utf-8") as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as e:
            raise FormatError("policy", f"invalid JSON ({e})") from e
    if not isinstance(doc, dict) or "policy" not in doc:
        raise FormatError("policy", "missing")
    actions = doc["policy"]
    if not isinstance(actions, list):
        raise FormatError("policy", f"expected a list of actions, got {type(actions).__name__}")
    for i, a in enumerate(actions):
        if isinstance(a, bool) or not isinstance(a, int):
            raise FormatError(f"policy[{i}]", f"expected an integer action, got {a!r}")
    return solver.Policy(actions)


def cmd_solve(args):
    m = mdplib.load(args.mdp)
    kind = solver.RewardKind(args.reward)

    if args.policy is not None:
        result = solver.evaluate_policy(m, _read_policy(args.policy), kind)
    else:
        result = solver.solve_optimal(m, kind)
        logger.info("%d tied states", solver.count_ties(result))

    doc = solver.result_to_dict(result)
    stdout = None
    if args.out:
        _write_json(doc, args.out)
    else:
        stdout = json.dumps(doc) + "\n"
        sys.stdout.write(stdout)

    if args.policy_out:
        _write_json({"policy": doc["policy"]}, args.policy_out)

    # a stdout-only run keeps its manifest next to the MDP, apart from gen-mdp's
    write_manifest("solve", _params(args), None, [args.out, args.policy_out],
                   anchor=args.mdp + ".solve", stdout=stdout)
    return 0


def _experiment_config(args):
    return analysis.ExperimentConfig(branch=args.branch, depth=args.depth, num_actions=args.actions,
                                     runs=args.runs, bins=getattr(args, "bins", 100), base_seed=args.seed,
                                     threads=args.threads, pooling=args.pooling)


def _maybe_svg(curve, args, **kwargs):
    if args.svg:
        from .plotting import plot_curve
        plot_curve(curve, args.svg, **kwargs)


def cmd_fig3(args):
    cfg = _experiment_config(args)
    curve = analysis.winrate_gap_by_level(cfg, progress=args.progress)
    analysis.emit_csv(curve, args.out)
    _maybe_svg(curve, args, xlabel="level", ylabel="mean winrate gap",
               title=f"b={cfg.branch}, d={cfg.depth}, A={cfg.num_actions}, runs={cfg.runs}")
    write_manifest("fig3", _params(args), cfg.base_seed, [args.out, args.svg])
    return 0


def cmd_fig4(args):
    cfg = _experiment_config(args)
    curve = analysis.variance_preference_curve(cfg, args.plus, progress=args.progress)
    analysis.emit_csv(curve, args.out)
    _maybe_svg(curve, args, style="scatter", xlabel="best winrate", ylabel="median log variance ratio",
               title=f"chosen by {args.plus}-optimal policy")
    logger.info("spearman trend %.4f", analysis.spearman_trend(curve))
    write_manifest("fig4", _params(args), cfg.base_seed, [args.out, args.svg])
    return 0


def cmd_mcts_match(args):
    m = mdplib.load(args.mdp)
    agent_a = mcts.SearchAgent(args.reward_a, mcts.SearchConfig(visits=args.visits_a, c_puct=args.c_puct_a,
                                                                rollouts_per_eval=args.rollouts))
    agent_b = mcts.SearchAgent(args.reward_b, mcts.SearchConfig(visits=args.visits_b, c_puct=args.c_puct_b,
                                                                rollouts_per_eval=args.rollouts))
    result = mcts.match(m, agent_a, agent_b, args.episodes, args.seed, threads=args.threads)
    result.write_csv(args.out)
    write_manifest("mcts-match", _params(args), args.seed, [args.out])
    return 0


def cmd_elo(args):
    grid = elo.MatchGrid.from_pairs(elo.read_games(args.games), elo.read_anchors(args.anchors))
    ratings = elo.fit(grid, tol=args.tol, max_iter=args.max_iter, virtual_draws=args.virtual_draws)
    if not ratings.converged:
        logger.warning("fit stopped after %d iterations without converging", ratings.iterations)
    elo.write_ratings(ratings, args.out, anchors=grid.anchors)
    write_manifest("elo", _params(args), None, [args.out])
    return 0


# parser

def _add_shape(p):
    p.add_argument("--branch", type=int, default=2, help="children per state b")
    p.add_argument("--depth", type=int, default=6, help="leaf level d")
    p.add_argument("--actions", type=int, default=2, help="actions per state A")


def _add_experiment(p):
    _add_shape(p)
    p.add_argument("--runs", type=int, default=2000, help="number of random MDPs")
    p.add_argument("--seed", type=int, default=0, help="base seed of the replicate streams")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--pooling", choices=analysis.POOLINGS, default="states")
    p.add_argument("--out", required=True, help="output CSV")
    p.add_argument("--svg", default=None, help="optional SVG rendering of the curve")
    p.add_argument("--progress", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog=PROG, description="Score versus winrate optimality experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="subcommand", metavar="subcommand")
    sub.required = True

    p = sub.add_parser("bandit-scan", help="disagreement grid of the 2-armed Gaussian bandit")
    p.add_argument("--mu-min", type=float, default=-3.0)
    p.add_argument("--mu-max", type=float, default=3.0)
    p.add_argument("--mu-step", type=float, default=0.5)
    p.add_argument("--sigma-min", type=float, default=0.25)
    p.add_argument("--sigma-max", type=float, default=4.0)
    p.add_argument("--sigma-step", type=float, default=0.25)
    p.add_argument("--exclude-zero", action="store_true", help="drop mu = 0 from the grid")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_bandit_scan)

    p = sub.add_parser("gen-mdp", help="generate a random action-shared tree MDP")
    _add_shape(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--deterministic-seed", type=int, default=None,
                   help="replace transitions by random one-hot vectors drawn with this seed")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_mdp)

    p = sub.add_parser("solve", help="solve or evaluate an MDP by backward induction")
    p.add_argument("--mdp", required=True)
    p.add_argument("--reward", choices=[k.value for k in solver.RewardKind], default="score")
    p.add_argument("--policy", default=None, help="evaluate this policy instead of optimizing")
    p.add_argument("--out", default=None, help="result JSON, stdout when omitted")
    p.add_argument("--policy-out", default=None)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("fig3", help="winrate gap of the score-optimal policy by level")
    _add_experiment(p)
    p.set_defaults(func=cmd_fig3)

    p = sub.add_parser("fig4", help="variance preference of the optimal policies")
    _add_experiment(p)
    p.add_argument("--plus", choices=[k.value for k in solver.RewardKind], default="outcome")
    p.add_argument("--bins", type=int, default=100)
    p.set_defaults(func=cmd_fig4)

    p = sub.add_parser("mcts-match", help="PUCT agents with score or outcome backup on an MDP")
    p.add_argument("--mdp", required=True)
    for side in ("a", "b"):
        p.add_argument(f"--visits-{side}", type=int, default=100)
        p.add_argument(f"--reward-{side}", choices=[k.value for k in solver.RewardKind], default="outcome")
        p.add_argument(f"--c-puct-{side}", type=float, default=None)
    p.add_argument("--rollouts", type=int, default=1, help="rollouts per evaluation")
    p.add_argument("--episodes", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mcts_match)

    p = sub.add_parser("elo", help="maximum-likelihood Elo ratings")
    p.add_argument("--games", required=True, help="CSV player_i,player_j,wins_ij,wins_ji")
    p.add_argument("--anchors", required=True, help="CSV player,elo")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--max-iter", type=int, default=10000)
    p.add_argument("--virtual-draws", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_elo)

    return parser


def _fail(message, code):
    print(f"{PROG}: error: {message}", file=sys.stderr)
    return code


def run(argv=None):
    """Parses argv, runs the subcommand and returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code

    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)

    try:
        return args.func(args)
    except ReplicateError as e:
        return _fail(str(e), 1 if isinstance(e.cause, OSError) else 2)
    except (ParameterError, FormatError, EstimationError) as e:
        return _fail(str(e), 2)
    except OSError as e:
        if e.filename is not None:
            return _fail(f"{e.filename}: {e.strerror}", 1)
        return _fail(str(e), 1)
    except WinrateError as e:
        return _fail(str(e), 1)


def main():
    sys.exit(run())
