"""Pure-python (numpy) fallback for the masked-marginal enumeration kernel.

Computes log-sum over all completions of the masked positions of the chain
log-probability.  The sum is a literal enumeration over the V^m grid of
completions, vectorized with numpy broadcasting; only terms touching a
masked position vary, so the grid carries the varying terms and the fixed
remainder is added as a scalar.
"""

from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

BACKEND = "python"


def masked_logmarginal(log_init: np.ndarray, log_trans: np.ndarray,
                       ids: np.ndarray, masked: np.ndarray) -> float:
    """log sum_{completions of masked positions} P(sequence).

    ``ids`` holds vocabulary indices for every position; entries at ``masked``
    positions are ignored.  ``masked`` must be sorted and duplicate-free.
    """
    V = log_init.shape[0]
    L = ids.shape[0]
    m = len(masked)
    masked_set = {int(p) for p in masked}
    axis_of = {int(p): j for j, p in enumerate(masked)}

    fixed = 0.0
    grid = np.zeros((1,) * m) if m else np.zeros(())

    def axis_shape(axes: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(V if j in axes else 1 for j in range(m))

    for t in range(L):
        left_masked = t > 0 and (t - 1) in masked_set
        right_masked = t in masked_set
        if t == 0:
            if right_masked:
                grid = grid + log_init.reshape(axis_shape((axis_of[0],)))
            else:
                fixed += log_init[ids[0]]
            continue
        if not left_masked and not right_masked:
            fixed += log_trans[ids[t - 1], ids[t]]
        elif right_masked and not left_masked:
            grid = grid + log_trans[ids[t - 1], :].reshape(
                axis_shape((axis_of[t],)))
        elif left_masked and not right_masked:
            grid = grid + log_trans[:, ids[t]].reshape(
                axis_shape((axis_of[t - 1],)))
        else:
            ja, jb = axis_of[t - 1], axis_of[t]
            grid = grid + _pair_reshape(log_trans, ja, jb, m, V)
    if m == 0:
        return float(fixed)
    return float(fixed + logsumexp(grid))


def _pair_reshape(block: np.ndarray, ja: int, jb: int, m: int, V: int) -> np.ndarray:
    """Reshape a (V, V) term so its first index lies on axis ja, second on jb."""
    out = block.reshape((V, V) + (1,) * (m - 2))
    return np.moveaxis(out, (0, 1), (ja, jb))
