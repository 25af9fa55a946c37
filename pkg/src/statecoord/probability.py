"""Exact probability primitives over products of finite alphabets.

Everything downstream (feasibility checks, payoff optimization, distortion
optima, codec simulation) is expressed in terms of two value types defined
here: a dense joint pmf over a tuple of finite alphabets, and a conditional
kernel mapping a tuple of conditioning symbols to a pmf over the remaining
axes.  All information quantities are in bits.

Conventions:
  * 0 * log 0 = 0 everywhere.
  * conditioning rows with zero probability are filled with the uniform
    pmf; they carry zero weight in every expectation.
  * mutual-information round-off: values in [-1e-9, 0) are clamped to 0,
    anything more negative raises InternalConsistencyError.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SUM_TOL = 1e-12
_NEG_CLAMP = 1e-9


class DimensionMismatch(ValueError):
    """Axes or shapes of two objects do not line up."""


class InvalidDistribution(ValueError):
    """Entries are negative or do not sum to one."""


class InternalConsistencyError(RuntimeError):
    """A quantity violated a mathematical invariant beyond round-off."""


@dataclass(frozen=True)
class Alphabet:
    """A finite symbol set, optionally with human-readable labels."""

    size: int
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.size < 1:
            raise ValueError(f"alphabet size must be >= 1, got {self.size}")
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
            if len(self.labels) != self.size:
                raise ValueError("labels length must equal alphabet size")
            if len(set(self.labels)) != self.size:
                raise ValueError("labels must be distinct")


def _as_prob_array(probs, shape) -> np.ndarray:
    arr = np.asarray(probs, dtype=float)
    if arr.shape != shape:
        raise DimensionMismatch(f"probs shape {arr.shape} != axes shape {shape}")
    if np.any(arr < 0):
        worst = float(arr.min())
        if worst < -SUM_TOL:
            raise InvalidDistribution(f"negative probability entry {worst}")
        arr = np.clip(arr, 0.0, None)
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


def _entropy_bits(p: np.ndarray) -> float:
    """Shannon entropy of a (possibly unnormalized-by-roundoff) pmf array."""
    pz = p[p > 0]
    return float(-np.sum(pz * np.log2(pz)))


def _clamp_information(value: float, what: str) -> float:
    if value < 0:
        if value < -_NEG_CLAMP:
            raise InternalConsistencyError(f"{what} = {value} < 0 beyond round-off")
        return 0.0
    return value


@dataclass(frozen=True)
class JointPmf:
    """Dense joint pmf over an ordered tuple of finite alphabets."""

    axes: tuple[Alphabet, ...]
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "axes", tuple(self.axes))
        shape = tuple(a.size for a in self.axes)
        arr = _as_prob_array(self.probs, shape)
        total = float(arr.sum())
        if abs(total - 1.0) > max(SUM_TOL, 1e-13 * arr.size):
            raise InvalidDistribution(f"pmf sums to {total}, expected 1")
        object.__setattr__(self, "probs", arr)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.probs.shape

    # ---- construction helpers -------------------------------------------

    @staticmethod
    def uniform(axes: Sequence[Alphabet]) -> "JointPmf":
        shape = tuple(a.size for a in axes)
        return JointPmf(tuple(axes), np.full(shape, 1.0 / np.prod(shape)))

    @staticmethod
    def point_mass(axes: Sequence[Alphabet], symbols: Sequence[int]) -> "JointPmf":
        shape = tuple(a.size for a in axes)
        arr = np.zeros(shape)
        arr[tuple(symbols)] = 1.0
        return JointPmf(tuple(axes), arr)

    # ---- core operations ------------------------------------------------

    def marginalize(self, keep_axes: Sequence[int]) -> "JointPmf":
        """Sum out every axis not listed in ``keep_axes`` (order preserved)."""
        keep = list(keep_axes)
        if not keep:
            raise ValueError("keep_axes must be nonempty")
        if len(set(keep)) != len(keep) or any(
            k < 0 or k >= len(self.axes) for k in keep
        ):
            raise ValueError(f"invalid keep_axes {keep_axes}")
        drop = tuple(i for i in range(len(self.axes)) if i not in keep)
        summed = self.probs.sum(axis=drop) if drop else self.probs
        # axes in `keep` order, not positional order
        order = [sorted(keep).index(k) for k in keep]
        summed = np.transpose(summed, order)
        return JointPmf(tuple(self.axes[k] for k in keep), summed)

    def condition(self, given_axes: Sequence[int]) -> "CondPmf":
        """Conditional law of the remaining axes given ``given_axes``.

        Rows whose conditioning probability is zero are set to the uniform
        pmf, so the kernel is total.
        """
        given = list(given_axes)
        if not given or len(given) >= len(self.axes):
            raise ValueError("given_axes must be a proper nonempty subset")
        out = [i for i in range(len(self.axes)) if i not in given]
        perm = given + out
        arr = np.transpose(self.probs, perm)
        g_shape = arr.shape[: len(given)]
        o_shape = arr.shape[len(given):]
        flat = arr.reshape(int(np.prod(g_shape)), int(np.prod(o_shape)))
        row_sums = flat.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            rows = np.where(row_sums > 0, flat / np.where(row_sums > 0, row_sums, 1.0),
                            1.0 / flat.shape[1])
        return CondPmf(
            tuple(self.axes[i] for i in given),
            tuple(self.axes[i] for i in out),
            rows.reshape(g_shape + o_shape),
        )

    def entropy(self) -> float:
        """Entropy in bits."""
        return _entropy_bits(self.probs)

    def mutual_information(self, axes_a: Sequence[int], axes_b: Sequence[int]) -> float:
        """I(A;B) in bits; all other axes are marginalized out first."""
        a, b = list(axes_a), list(axes_b)
        if set(a) & set(b):
            raise ValueError("axes_a and axes_b must be disjoint")
        ab = self.marginalize(a + b).probs
        ha = _entropy_bits(ab.sum(axis=tuple(range(len(a), len(a) + len(b)))))
        hb = _entropy_bits(ab.sum(axis=tuple(range(len(a)))))
        return _clamp_information(ha + hb - _entropy_bits(ab), "mutual information")

    def conditional_mutual_information(
        self, axes_a: Sequence[int], axes_b: Sequence[int], axes_c: Sequence[int]
    ) -> float:
        """I(A;B|C) in bits via the entropy decomposition."""
        a, b, c = list(axes_a), list(axes_b), list(axes_c)
        if set(a) & set(b) or set(a) & set(c) or set(b) & set(c):
            raise ValueError("axis sets must be pairwise disjoint")
        p = self.marginalize(a + b + c).probs
        na, nb = len(a), len(b)
        h_ac = _entropy_bits(p.sum(axis=tuple(range(na, na + nb))))
        h_bc = _entropy_bits(p.sum(axis=tuple(range(na))))
        h_abc = _entropy_bits(p)
        h_c = _entropy_bits(p.sum(axis=tuple(range(na + nb))))
        return _clamp_information(h_ac + h_bc - h_abc - h_c,
                                  "conditional mutual information")

    def total_variation(self, other: "JointPmf") -> tuple[float, float]:
        """Return (total variation, max absolute entrywise deviation)."""
        if self.shape != other.shape:
            raise DimensionMismatch(
                f"shape mismatch {self.shape} vs {other.shape}")
        diff = np.abs(self.probs - other.probs)
        return 0.5 * float(diff.sum()), float(diff.max())

    # ---- serialization ---------------------------------------------------

    def to_json_dict(self) -> dict:
        return {
            "axes": [a.size for a in self.axes],
            "labels": [list(a.labels) if a.labels else None for a in self.axes],
            "probs": [float(x) for x in self.probs.ravel()],
        }

    @staticmethod
    def from_json_dict(obj: dict) -> "JointPmf":
        sizes = obj["axes"]
        labels = obj.get("labels") or [None] * len(sizes)
        axes = tuple(
            Alphabet(s, tuple(l) if l else None) for s, l in zip(sizes, labels)
        )
        arr = np.asarray(obj["probs"], dtype=float).reshape(tuple(sizes))
        return JointPmf(axes, arr)

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


@dataclass(frozen=True)
class CondPmf:
    """Conditional pmf P(out | given): one pmf row per conditioning tuple."""

    given_axes: tuple[Alphabet, ...]
    out_axes: tuple[Alphabet, ...]
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "given_axes", tuple(self.given_axes))
        object.__setattr__(self, "out_axes", tuple(self.out_axes))
        shape = tuple(a.size for a in self.given_axes) + tuple(
            a.size for a in self.out_axes
        )
        arr = _as_prob_array(self.probs, shape)
        g = int(np.prod([a.size for a in self.given_axes]))
        rows = arr.reshape(g, -1)
        bad = np.abs(rows.sum(axis=1) - 1.0) > max(SUM_TOL, 1e-13 * rows.shape[1])
        if np.any(bad):
            raise InvalidDistribution(
                f"{int(bad.sum())} conditional rows do not sum to 1")
        object.__setattr__(self, "probs", arr)

    @property
    def out_axis(self) -> Alphabet:
        if len(self.out_axes) != 1:
            raise ValueError("kernel has more than one output axis")
        return self.out_axes[0]

    def to_json_dict(self) -> dict:
        axes = list(self.given_axes) + list(self.out_axes)
        return {
            "axes": [a.size for a in axes],
            "given": len(self.given_axes),
            "labels": [list(a.labels) if a.labels else None for a in axes],
            "probs": [float(x) for x in self.probs.ravel()],
        }

    @staticmethod
    def from_json_dict(obj: dict) -> "CondPmf":
        sizes = obj["axes"]
        g = int(obj["given"])
        labels = obj.get("labels") or [None] * len(sizes)
        axes = [Alphabet(s, tuple(l) if l else None) for s, l in zip(sizes, labels)]
        arr = np.asarray(obj["probs"], dtype=float).reshape(tuple(sizes))
        return CondPmf(tuple(axes[:g]), tuple(axes[g:]), arr)

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


def compose(prior: JointPmf, kernel: CondPmf, given_idx: Sequence[int]) -> JointPmf:
    """Chain a joint prior with a conditional kernel.

    ``given_idx[k]`` is the position in ``prior.axes`` that feeds the k-th
    conditioning axis of ``kernel``.  The result is a joint pmf over
    ``prior.axes + kernel.out_axes`` with entries
    prior(a) * kernel(b | a restricted to given_idx).
    """
    given_idx = list(given_idx)
    if len(given_idx) != len(kernel.given_axes):
        raise DimensionMismatch("given_idx length != kernel conditioning arity")
    for pos, ax in zip(given_idx, kernel.given_axes):
        if pos < 0 or pos >= len(prior.axes):
            raise DimensionMismatch(f"axis index {pos} out of range")
        if prior.axes[pos].size != ax.size:
            raise DimensionMismatch(
                f"axis {pos}: prior size {prior.axes[pos].size} != "
                f"kernel size {ax.size}")
    if len(set(given_idx)) != len(given_idx):
        raise DimensionMismatch("given_idx entries must be distinct")

    n_prior = len(prior.axes)
    n_out = len(kernel.out_axes)
    # broadcast the kernel over the prior layout
    order = np.argsort(given_idx)
    k = np.transpose(
        kernel.probs,
        list(order) + list(range(len(given_idx), len(given_idx) + n_out)),
    )
    shape = [1] * n_prior + list(k.shape[len(given_idx):])
    for sorted_pos, orig in enumerate(sorted(given_idx)):
        shape[orig] = k.shape[sorted_pos]
    k = k.reshape(shape)
    joint = prior.probs.reshape(prior.shape + (1,) * n_out) * k
    return JointPmf(prior.axes + kernel.out_axes, joint)
