"""Exponentiated-gradient ascent over products of probability simplices.

The feasibility and payoff programs in this package all optimize an
objective over a stack of conditional pmfs (one simplex per conditioning
tuple).  The multiplicative update P <- P * exp(eta * grad), row-normalized,
keeps iterates on the simplex; the step size is found by backtracking.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class OptConfig:
    """Knobs shared by the iterative optimizers.

    seed feeds a per-restart seed-split stream, so results are identical
    whether restarts run sequentially or in parallel.
    """

    seed: int = 0
    restarts: int = 64
    max_iter: int = 400
    step0: float = 1.0
    min_step: float = 1e-12
    value_tol: float = 1e-11
    outer_restarts: int = 32
    outer_rounds: int = 10

    def rng(self, *stream: int) -> np.random.Generator:
        return np.random.default_rng([self.seed & 0xFFFFFFFF, *stream])


def normalize_rows(p: np.ndarray) -> np.ndarray:
    s = p.sum(axis=-1, keepdims=True)
    return np.where(s > 0, p / np.where(s > 0, s, 1.0), 1.0 / p.shape[-1])


def eg_ascent(
    p0: np.ndarray,
    value_fn: Callable[[np.ndarray], float],
    grad_fn: Callable[[np.ndarray], np.ndarray],
    max_iter: int = 400,
    step0: float = 1.0,
    min_step: float = 1e-12,
    value_tol: float = 1e-11,
) -> tuple[np.ndarray, float]:
    """Maximize value_fn over row simplices (last axis) starting from p0.

    Returns the best iterate and its value.  Entries that start at exactly
    zero stay at zero: deterministic starting kernels keep their support.
    """
    p = normalize_rows(np.asarray(p0, dtype=float).copy())
    val = value_fn(p)
    step = step0
    for _ in range(max_iter):
        g = grad_fn(p)
        # center per row for numerical range; shifts cancel on renormalization
        g = g - g.max(axis=-1, keepdims=True)
        improved = False
        while step >= min_step:
            cand = normalize_rows(p * np.exp(step * g))
            cand_val = value_fn(cand)
            if cand_val > val + value_tol:
                p, val = cand, cand_val
                step = min(step * 1.5, 1e3)
                improved = True
                break
            step *= 0.5
        if not improved:
            break
    return p, val


def dirichlet_rows(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    """Dirichlet(1) sample on each row simplex of the given shape."""
    x = rng.gamma(1.0, 1.0, size=shape)
    return normalize_rows(x)
