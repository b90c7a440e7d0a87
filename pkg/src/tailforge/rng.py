"""Counter-based random streams keyed by (seed, stream index)."""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def stream(seed: int, index: int) -> np.random.Generator:
    """Philox generator for one independent stream.

    Streams for different ``index`` never overlap, and stream ``k`` does not
    depend on how many other streams are drawn.
    """
    if seed < 0 or index < 0:
        raise ValueError("seed and index must be nonnegative")
    return np.random.Generator(np.random.Philox(key=[seed & _MASK64, index & _MASK64]))


def uniforms(seed: int, index: int, size: int) -> np.ndarray:
    return stream(seed, index).random(size)
