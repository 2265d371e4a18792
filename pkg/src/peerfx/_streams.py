"""Counter-keyed random streams.

Every stream is a Philox generator keyed by the master seed with a distinct
256-bit counter block, so any stream can be opened directly without touching
the others. Matches own the blocks (0, match, phase, 0); global setup draws
live under (0, purpose, phase, 1). Blocks are 2**64 draws apart, far beyond
anything a single match consumes, and reopening the same block replays the
same draws regardless of which other streams were used in between.
"""

from __future__ import annotations

import numpy as np

# phase within a match block
PHASE_COMPOSE = 0
PHASE_OUTCOME = 1

# purpose of a setup block
SETUP_MODES = 0
SETUP_PARTIES = 1
SETUP_ALPHAS = 2

_MASK64 = (1 << 64) - 1


def match_stream(seed: int, match_counter: int, phase: int) -> np.random.Generator:
    """Open the stream for one match: composition draws or outcome draws."""
    bitgen = np.random.Philox(key=seed & _MASK64,
                              counter=[0, match_counter, phase, 0])
    return np.random.Generator(bitgen)


def setup_stream(seed: int, purpose: int) -> np.random.Generator:
    """Open a global setup stream (mode sequence, party pool, alpha draws)."""
    bitgen = np.random.Philox(key=seed & _MASK64, counter=[0, purpose, 0, 1])
    return np.random.Generator(bitgen)
