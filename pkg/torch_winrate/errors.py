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

class WinrateError(Exception):
    """Base class of all errors raised by torch_winrate."""


class ParameterError(WinrateError, ValueError):
    """An argument violates its documented bounds."""


class FormatError(WinrateError, ValueError):
    """
    A serialized document is malformed or violates an invariant on load.
    The offending field is available as `field`.
    """

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field


class EstimationError(WinrateError):
    """The rating problem is ill-posed, e.g. players not connected to an anchor."""

    def __init__(self, message, players=()):
        super().__init__(message)
        self.players = tuple(players)


class DivergenceError(EstimationError):
    """The likelihood has no finite maximizer for some players."""


class ReplicateError(WinrateError):
    """An error raised while running a single experiment replicate."""

    def __init__(self, replicate, cause):
        super().__init__(f"replicate {replicate}: {cause}")
        self.replicate = replicate
        self.cause = cause
