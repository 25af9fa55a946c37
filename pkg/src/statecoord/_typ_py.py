"""Pure-numpy fallback for the typicality scan kernel."""
from __future__ import annotations

import numpy as np

_CHUNK = 65536


def typical_mask(codewords: np.ndarray, ctx: np.ndarray, q: np.ndarray,
                 eps: float) -> np.ndarray:
    """Robust-typicality mask of each codeword row against a (context, symbol)
    law; same contract as the compiled kernel."""
    m_count, n = codewords.shape
    n_ctx, n_sym = q.shape
    cells = n_ctx * n_sym
    target = n * q.ravel()
    tol = eps * target
    out = np.zeros(m_count, dtype=np.uint8)
    base = ctx.astype(np.int64) * n_sym
    for lo in range(0, m_count, _CHUNK):
        block = codewords[lo:lo + _CHUNK]
        flat = base[None, :] + block
        flat = flat + (np.arange(len(block), dtype=np.int64) * cells)[:, None]
        counts = np.bincount(flat.ravel(), minlength=len(block) * cells)
        counts = counts.reshape(len(block), cells)
        ok = np.all(np.abs(counts - target[None, :]) <= tol[None, :], axis=1)
        out[lo:lo + _CHUNK] = ok
    return out
