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

import logging

import numpy as np

logger = logging.getLogger(__name__)


def _pyplot():
    try:
        import matplotlib
    except ImportError as e:
        raise ImportError("SVG output requires matplotlib, install torch_winrate[plot]") from e
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return matplotlib, plt


def plot_curve(curve, path, title="", xlabel="x", ylabel="", style="line"):
    """
    Renders a BinnedCurve to a single self-contained SVG file. Text is converted
    to paths and the document carries no date, so equal curves give equal files.
    Empty bins are left out.
    """
    matplotlib, plt = _pyplot()

    mask = curve.nonempty() & ~np.isnan(curve.aggregate)
    x = curve.centers[mask]
    y = curve.aggregate[mask]

    with matplotlib.rc_context({"svg.fonttype": "path", "svg.hashsalt": "torch_winrate"}):
        fig, ax = plt.subplots(figsize=(6, 4))
        if style == "scatter":
            ax.scatter(x, y, s=8)
        else:
            ax.plot(x, y, marker="o", markersize=3)
        ax.axhline(0.0, color="gray", linewidth=0.5)
        ax.set_title(title)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)

    logger.info("wrote %d points to %s", int(mask.sum()), path)
