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
from concurrent.futures import ThreadPoolExecutor

from .errors import ParameterError, ReplicateError

try:
    from tqdm import tqdm
except ImportError:
    tqdm = lambda x, **kwargs : x

logger = logging.getLogger(__name__)


def _guarded(fn, replicate):
    try:
        return fn(replicate)
    except ReplicateError:
        raise
    except Exception as e:
        raise ReplicateError(replicate, e) from e


def map_replicates(fn, runs, threads=1, progress=False):
    """
    Evaluates fn(i) for i in [0, runs) and returns the results ordered by i.
    Replicates must not share mutable state; results are reduced by the caller in
    index order, so the output does not depend on the number of threads.
    Exceptions are re-raised as ReplicateError carrying the replicate index.
    """
    if runs < 1:
        raise ParameterError(f"runs must be at least 1, got {runs}")
    if threads < 1:
        raise ParameterError(f"threads must be at least 1, got {threads}")

    logger.debug("running %d replicates on %d thread(s)", runs, threads)

    indices = range(runs)
    if progress:
        indices = tqdm(indices, total=runs)

    if threads == 1:
        return [_guarded(fn, i) for i in indices]

    with ThreadPoolExecutor(max_workers=threads) as pool:
        # map preserves submission order
        return list(pool.map(lambda i: _guarded(fn, i), indices))
