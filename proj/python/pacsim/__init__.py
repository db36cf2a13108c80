# Copyright 2026 The pacsim Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Python bindings for the pacsim simulator."""

from fractions import Fraction

from ._pacsim import (
    EncoderState,
    Model,
    PacsimError,
    SparsityVector,
    compression_stats,
    configure_cycles,
    count_cycles,
    count_sparsity,
    counter_width,
    decompose,
    energy_ratio,
    exact_binary_mac,
    exact_mac,
    hybrid_mac,
    hypergeometric_std,
    memory_traffic,
    recompose,
    rmse_experiment,
    run_cli,
    speculate,
)
from . import _pacsim

__version__ = "0.1.0"


def pac_estimate(s_x, s_w, n):
    """S_x * S_w / n as an exact Fraction."""
    return Fraction(*_pacsim.pac_estimate(s_x, s_w, n))


def hybrid_mac_exact(x, w, approx_bits=4):
    """Hybrid MAC before the final rounding, as an exact Fraction."""
    return Fraction(*_pacsim.hybrid_mac_exact(x, w, approx_bits))


__all__ = [
    "EncoderState",
    "Model",
    "PacsimError",
    "SparsityVector",
    "compression_stats",
    "configure_cycles",
    "count_cycles",
    "count_sparsity",
    "counter_width",
    "decompose",
    "energy_ratio",
    "exact_binary_mac",
    "exact_mac",
    "hybrid_mac",
    "hybrid_mac_exact",
    "hypergeometric_std",
    "memory_traffic",
    "pac_estimate",
    "recompose",
    "rmse_experiment",
    "run_cli",
    "speculate",
]
