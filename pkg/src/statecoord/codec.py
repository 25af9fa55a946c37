"""Block-Markov covering/packing codec simulator.

Implements the two-pass random-coding scheme for state communication with a
strictly-causal decoder: per-block codebooks C_U and C_V, a covering encoder
that chains the V-codebook's first index to the next block's U-index, a
symbol-wise causal decoder x2_t = g(u_t, y_t), and an end-of-block joint
typicality search that recovers the next block's index.  Error events E0-E4
and the empirical distortion are reported per run.

All codeword indices in results and traces are 0-based.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from ._typbackend import typical_mask
from .probability import Alphabet, JointPmf
from .state_comm import StateCommProblem

MAX_CODEBOOK_SYMBOLS = 10 ** 9


class CodebookSizeError(Exception):
    """Total codebook storage would exceed the memory guard."""


@dataclass(frozen=True)
class BlockCodeParams:
    n: int
    B: int
    R: float
    R_tilde: float
    eps1: float = 0.05
    eps2: float = 0.10
    eps3: float = 0.15
    eps_tilde: float = 0.20
    eps: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.B < 1:
            raise ValueError("n and B must be positive integers")
        if self.R < 0 or self.R_tilde < 0:
            raise ValueError("rates must be nonnegative")
        ladder = (self.eps1, self.eps2, self.eps3, self.eps_tilde, self.eps)
        if not all(a < b for a, b in zip(ladder, ladder[1:])) or self.eps1 <= 0:
            raise ValueError(
                "typicality ladder must satisfy 0 < eps1 < eps2 < eps3 "
                "< eps_tilde < eps")

    @property
    def num_u(self) -> int:
        return max(1, math.floor(2.0 ** (self.n * self.R)))

    @property
    def num_v_per_j(self) -> int:
        return max(1, math.floor(2.0 ** (self.n * self.R_tilde)))

    def total_symbols(self) -> int:
        per_block = self.n * (self.num_u + self.num_u * self.num_v_per_j)
        return self.B * per_block


@dataclass
class Codebooks:
    """Per-block codeword arrays; v[b] is flattened over (j, ell)."""

    params: BlockCodeParams
    u: list  # B arrays of shape (num_u, n), int32
    v: list  # B arrays of shape (num_u * num_v_per_j, n), int32

    def v_word(self, b: int, j: int, ell: int) -> np.ndarray:
        return self.v[b][j * self.params.num_v_per_j + ell]

    def v_rows_for_j(self, b: int, j: int) -> np.ndarray:
        m = self.params.num_v_per_j
        return self.v[b][j * m:(j + 1) * m]


@dataclass(frozen=True)
class CoveringFailure:
    """Encoder search came up empty; the run continues with index 0."""

    event: str  # "E0" or "E1"
    block: int


@dataclass(frozen=True)
class PackingFailure:
    """No jointly typical (j, ell) pair at the end of a block."""

    block: int


def _sample_rows(rng, pmf: np.ndarray, shape) -> np.ndarray:
    cdf = np.cumsum(pmf)
    cdf[-1] = 1.0
    r = rng.random(shape)
    return np.searchsorted(cdf, r, side="right").astype(np.int32)


def _sample_conditional(rng, cond_rows: np.ndarray) -> np.ndarray:
    """One draw per row from a stack of categorical rows."""
    cdf = np.cumsum(cond_rows, axis=1)
    cdf[:, -1] = 1.0
    r = rng.random(len(cond_rows))
    return (r[:, None] >= cdf).sum(axis=1).astype(np.int32)


def generate_codebooks(params: BlockCodeParams, q_u: np.ndarray,
                       q_v: np.ndarray) -> Codebooks:
    """Draw all per-block codebooks i.i.d. from the single-letter marginals."""
    q_u = np.asarray(q_u, dtype=float)
    q_v = np.asarray(q_v, dtype=float)
    if params.total_symbols() > MAX_CODEBOOK_SYMBOLS:
        raise CodebookSizeError(
            f"codebooks would hold {params.total_symbols():.3e} symbols "
            f"(guard: {MAX_CODEBOOK_SYMBOLS:.0e}); lower n, B or the rates")
    mu, mv = params.num_u, params.num_v_per_j
    u_books, v_books = [], []
    for b in range(params.B):
        rng = np.random.default_rng(
            [params.seed & 0xFFFFFFFF, 0xCB, b])
        u_books.append(_sample_rows(rng, q_u, (mu, params.n)))
        v_books.append(_sample_rows(rng, q_v, (mu * mv, params.n)))
    return Codebooks(params, u_books, v_books)


def is_typical(seqs, law: JointPmf, eps: float) -> bool:
    """Robust typicality of a tuple of aligned sequences against a joint law:
    every cell's empirical frequency lies within a factor (1 +- eps) of its
    probability, and cells with zero probability never occur."""
    arrs = [np.asarray(s, dtype=np.int64) for s in seqs]
    n = len(arrs[0])
    if any(len(a) != n for a in arrs):
        raise ValueError("sequences must have equal length")
    if len(arrs) != law.probs.ndim:
        raise ValueError("sequence count must match law dimensionality")
    flat = np.ravel_multi_index(arrs, law.probs.shape)
    counts = np.bincount(flat, minlength=law.probs.size)
    target = n * law.probs.ravel()
    return bool(np.all(np.abs(counts - target) <= eps * target))


def _scan(rows: np.ndarray, ctx: np.ndarray, q2: np.ndarray,
          eps: float) -> np.ndarray:
    rows = np.ascontiguousarray(rows, dtype=np.int32)
    ctx = np.ascontiguousarray(ctx, dtype=np.int32)
    q2 = np.ascontiguousarray(q2, dtype=np.float64)
    return typical_mask(rows, ctx, q2, eps)


@dataclass
class CodecLaws:
    """Single-letter law of one coded symbol, with every marginal the
    pipeline scans against precomputed."""

    joint: np.ndarray  # (n0, nu, nv, n1)
    channel: np.ndarray  # (n0, n1, ny)
    g: np.ndarray  # (nu, ny) -> x2 index
    q5: np.ndarray = field(init=False)  # (x0, u, v, x1, y)
    q_u: np.ndarray = field(init=False)
    q_v: np.ndarray = field(init=False)
    q_x0u: np.ndarray = field(init=False)
    q_x0uv: np.ndarray = field(init=False)
    q_uvy: np.ndarray = field(init=False)
    q7: np.ndarray = field(init=False)  # adds x2 = g(u, y)
    x1_cond: np.ndarray = field(init=False)  # (n0, nu, nv, n1)

    def __post_init__(self):
        joint = np.asarray(self.joint, dtype=float)
        ch = np.asarray(self.channel, dtype=float)
        self.joint = joint
        self.channel = ch
        self.g = np.asarray(self.g, dtype=np.int64)
        self.q5 = joint[..., None] * ch[:, None, None, :, :]
        self.q_u = joint.sum(axis=(0, 2, 3))
        self.q_v = joint.sum(axis=(0, 1, 3))
        self.q_x0u = joint.sum(axis=(2, 3))
        self.q_x0uv = joint.sum(axis=3)
        self.q_uvy = self.q5.sum(axis=(0, 3))
        nu, ny = self.g.shape
        n2 = int(self.g.max()) + 1
        q7 = np.zeros(self.q5.shape + (n2,))
        for u in range(nu):
            for y in range(ny):
                q7[:, u, :, :, y, self.g[u, y]] = self.q5[:, u, :, :, y]
        self.q7 = q7
        denom = self.q_x0uv[..., None]
        with np.errstate(invalid="ignore", divide="ignore"):
            cond = np.where(denom > 0, joint / np.where(denom > 0, denom, 1.0),
                            0.0)
        flat_bad = cond.sum(axis=3) <= 0
        cond[flat_bad] = 1.0 / joint.shape[3]
        self.x1_cond = cond


def make_codec_laws(problem: StateCommProblem, law, g) -> CodecLaws:
    """Assemble the scan tables from an encoder law Q(x0,u,v,x1) and a
    decoding table g(u, y)."""
    joint = law.probs if isinstance(law, JointPmf) else np.asarray(law, float)
    if joint.ndim != 4:
        raise ValueError("law must be a joint over (x0, u, v, x1)")
    return CodecLaws(joint, problem.channel.probs, np.asarray(g))


@dataclass(frozen=True)
class RateChoice:
    feasible: bool
    r: float
    r_tilde: float
    gap: float
    i_x0_u: float
    i_v_x0u: float
    i_v_yu: float
    deltas: tuple

    def to_json_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "R": self.r,
            "R_tilde": self.r_tilde,
            "gap": self.gap,
            "i_x0_u": self.i_x0_u,
            "i_v_x0u": self.i_v_x0u,
            "i_v_yu": self.i_v_yu,
            "deltas": list(self.deltas),
        }


def _mi_groups(law: JointPmf, group_a, group_b) -> float:
    ha = law.marginalize(tuple(group_a)).entropy()
    hb = law.marginalize(tuple(group_b)).entropy()
    hab = law.marginalize(tuple(group_a) + tuple(group_b)).entropy()
    return max(0.0, ha + hb - hab)


def rate_region_check(law5: JointPmf, deltas=(0.05, 0.05, 0.05)) -> RateChoice:
    """Pick midpoint rates inside the admissible region, or report that the
    region is empty.

    The region is R > I(X0;U) + d1, R~ > I(V;X0,U) + d2 and
    R + R~ < I(V;Y,U) - d3; both returned rates sit a third of the slack
    above their lower bounds.
    """
    if law5.probs.ndim != 5:
        raise ValueError("law must be a joint over (x0, u, v, x1, y)")
    d1, d2, d3 = deltas
    i_x0_u = _mi_groups(law5, (0,), (1,))
    i_v_x0u = _mi_groups(law5, (2,), (0, 1))
    i_v_yu = _mi_groups(law5, (2,), (4, 1))
    gap = (i_v_yu - d3) - (i_x0_u + d1) - (i_v_x0u + d2)
    r = i_x0_u + d1 + gap / 3.0
    r_tilde = i_v_x0u + d2 + gap / 3.0
    return RateChoice(gap > 0, r, r_tilde, gap, i_x0_u, i_v_x0u, i_v_yu,
                      tuple(deltas))


class CausalDecoder:
    """Consumes channel outputs one symbol at a time.

    The decode of time t uses only the pre-committed codeword index for the
    current block and y_t; feeding symbols in order is the causality contract.
    """

    def __init__(self, g: np.ndarray, u_codeword: np.ndarray):
        self.g = np.asarray(g, dtype=np.int64)
        self.u = np.asarray(u_codeword, dtype=np.int64)
        self.t = 0

    def feed(self, y_t: int) -> int:
        x2 = int(self.g[self.u[self.t], int(y_t)])
        self.t += 1
        return x2


def decode_symbol(t: int, y_t: int, u_codeword, g) -> int:
    return int(np.asarray(g)[int(np.asarray(u_codeword)[t]), int(y_t)])


def find_cover_index(x0_block, u_book, laws: CodecLaws, eps1: float):
    """Smallest U-index jointly typical with the state block, or None."""
    mask = _scan(u_book, x0_block, laws.q_x0u, eps1)
    hits = np.flatnonzero(mask)
    return (int(hits[0]) if len(hits) else None), mask


def encode_block(b, x0_block, codebooks: Codebooks, laws: CodecLaws,
                 params: BlockCodeParams, state: dict):
    """Second-pass encoding of one block.

    `state` carries the first-pass index table "i" (with the chaining
    j_b = i_{b+1} already applied via state["j"]) and the encoder rng.
    Returns (i_b, ell_b, x1_block), or a CoveringFailure; after an E1 failure
    the caller falls back to ell_b = 0 and still synthesizes x1.
    """
    i_b = int(state["i"][b])
    j_b = int(state["j"][b])
    rng = state["rng"]
    nu = laws.q_x0u.shape[1]
    u_row = codebooks.u[b][i_b]
    ctx = x0_block.astype(np.int64) * nu + u_row
    rows = codebooks.v_rows_for_j(b, j_b)
    q2 = laws.q_x0uv.reshape(-1, laws.q_x0uv.shape[2])
    mask = _scan(rows, ctx, q2, params.eps2)
    hits = np.flatnonzero(mask)
    if len(hits):
        ell_b = int(rng.choice(hits))
        v_row = codebooks.v_word(b, j_b, ell_b)
        failure = None
    else:
        # search failed: transmit from the first codewords and count the event
        ell_b = 0
        v_row = codebooks.v_word(b, 0, 0)
        failure = CoveringFailure("E1", b)
    cond_rows = laws.x1_cond[x0_block, u_row, v_row]
    x1_block = _sample_conditional(rng, cond_rows)
    if failure is not None:
        state["x1_fallback"] = (i_b, ell_b, x1_block)
        return failure
    return i_b, ell_b, x1_block


def decode_block_end(b, y_block, codebooks: Codebooks, laws: CodecLaws,
                     params: BlockCodeParams, i_hat_b: int, rng):
    """End-of-block joint typicality search over the whole V-codebook.

    Returns ((j_hat, ell_hat), wrong_j_exists_mask_info) or a PackingFailure.
    """
    ny = laws.channel.shape[2]
    u_row = codebooks.u[b][i_hat_b]
    ctx = u_row.astype(np.int64) * ny + y_block
    q2 = np.ascontiguousarray(
        np.transpose(laws.q_uvy, (0, 2, 1))).reshape(-1, laws.q_uvy.shape[1])
    mask = _scan(codebooks.v[b], ctx, q2, params.eps3)
    hits = np.flatnonzero(mask)
    if not len(hits):
        return PackingFailure(b), hits
    pick = int(rng.choice(hits))
    mv = params.num_v_per_j
    return (pick // mv, pick % mv), hits


@dataclass
class SimResult:
    params: BlockCodeParams
    events: np.ndarray  # (B, 5) bool, columns E0..E4
    distortion: float
    block_distortion: np.ndarray  # (B,)
    empirical_type: JointPmf  # joint type of (x0, x1, x2)
    trace: dict  # i, j, ell, i_hat, j_hat, ell_hat arrays of length B
    rate_choice: RateChoice | None = None

    @property
    def event_counts(self) -> dict:
        return {f"e{k}": int(self.events[:, k].sum()) for k in range(5)}

    def block_error_fraction(self) -> float:
        return float(self.events.any(axis=1).mean())

    def to_json_dict(self) -> dict:
        out = {
            "n": self.params.n,
            "B": self.params.B,
            "R": self.params.R,
            "R_tilde": self.params.R_tilde,
            "seed": self.params.seed,
            "events": self.events.astype(int).tolist(),
            "event_counts": self.event_counts,
            "distortion": self.distortion,
            "block_distortion": [float(d) for d in self.block_distortion],
            "block_error_fraction": self.block_error_fraction(),
            "empirical_type": self.empirical_type.to_json_dict(),
            "trace": {k: [int(x) for x in v] for k, v in self.trace.items()},
        }
        if self.rate_choice is not None:
            out["rate_choice"] = self.rate_choice.to_json_dict()
        return out

    def per_block_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["block", "e0", "e1", "e2", "e3", "e4", "distortion"])
        for b in range(self.params.B):
            writer.writerow(
                [b] + [int(e) for e in self.events[b]]
                + [f"{self.block_distortion[b]:.12g}"])
        return buf.getvalue()


def run_simulation(problem: StateCommProblem, law, g,
                   params: BlockCodeParams,
                   rate_choice: RateChoice | None = None) -> SimResult:
    """Full pipeline over T = n*B symbols.

    Feasibility of the rates is the caller's responsibility (failure-regime
    experiments deliberately pick rates outside the region).
    """
    laws = make_codec_laws(problem, law, g)
    n, big_b = params.n, params.B
    rho0 = problem.state_prior.probs
    codebooks = generate_codebooks(params, laws.q_u, laws.q_v)

    rng_state = np.random.default_rng([params.seed & 0xFFFFFFFF, 0x57])
    rng_enc = np.random.default_rng([params.seed & 0xFFFFFFFF, 0xE2])
    rng_dec = np.random.default_rng([params.seed & 0xFFFFFFFF, 0xDE])

    x0_all = _sample_rows(rng_state, rho0, (big_b, n))

    # pass 1: covering indices; i_1 is pinned, the other blocks search.
    i_idx = np.zeros(big_b, dtype=np.int64)
    e0 = np.zeros(big_b, dtype=bool)
    for b in range(big_b):
        found, _ = find_cover_index(x0_all[b], codebooks.u[b], laws,
                                    params.eps1)
        e0[b] = found is None
        if b > 0:
            i_idx[b] = 0 if found is None else found
    j_idx = np.zeros(big_b, dtype=np.int64)
    j_idx[:-1] = i_idx[1:]

    # pass 2: conditional covering and channel-input synthesis.
    ell_idx = np.zeros(big_b, dtype=np.int64)
    e1 = np.zeros(big_b, dtype=bool)
    x1_all = np.zeros((big_b, n), dtype=np.int32)
    enc_state = {"i": i_idx, "j": j_idx, "rng": rng_enc}
    for b in range(big_b):
        out = encode_block(b, x0_all[b], codebooks, laws, params, enc_state)
        if isinstance(out, CoveringFailure):
            e1[b] = True
            _, ell_idx[b], x1_all[b] = enc_state.pop("x1_fallback")
        else:
            _, ell_idx[b], x1_all[b] = out

    # channel
    y_all = np.zeros((big_b, n), dtype=np.int32)
    for b in range(big_b):
        rows = laws.channel[x0_all[b], x1_all[b]]
        y_all[b] = _sample_conditional(rng_state, rows)

    # decoding: causal symbol stream plus end-of-block index recovery.
    i_hat = np.zeros(big_b, dtype=np.int64)
    j_hat = np.zeros(big_b, dtype=np.int64)
    ell_hat = np.zeros(big_b, dtype=np.int64)
    e2 = np.zeros(big_b, dtype=bool)
    e3 = np.zeros(big_b, dtype=bool)
    e4 = np.zeros(big_b, dtype=bool)
    x2_all = np.zeros((big_b, n), dtype=np.int32)
    mv = params.num_v_per_j
    law5_pmf = _array_pmf(laws.q5)
    law7_pmf = _array_pmf(laws.q7)
    for b in range(big_b):
        dec = CausalDecoder(laws.g, codebooks.u[b][i_hat[b]])
        for t in range(n):
            x2_all[b, t] = dec.feed(y_all[b, t])
        out, hits = decode_block_end(b, y_all[b], codebooks, laws, params,
                                     int(i_hat[b]), rng_dec)
        if isinstance(out, PackingFailure):
            j_hat[b], ell_hat[b] = 0, 0
        else:
            j_hat[b], ell_hat[b] = out
        e3[b] = bool(np.any(hits // mv != j_idx[b]))
        if b + 1 < big_b:
            i_hat[b + 1] = j_hat[b]
        v_row = codebooks.v_word(b, int(j_idx[b]), int(ell_idx[b]))
        u_hat_row = codebooks.u[b][i_hat[b]]
        tup5 = (x0_all[b], u_hat_row, v_row, x1_all[b], y_all[b])
        e2[b] = not is_typical(tup5, law5_pmf, params.eps3)
        if b >= 1:
            e4[b] = not is_typical(tup5 + (x2_all[b],), law7_pmf,
                                   params.eps_tilde)

    dist = problem.distortion[x0_all, x2_all]
    block_distortion = dist.mean(axis=1)
    n0, n1v, n2 = (problem.n0, problem.n1, problem.n2)
    flat = (x0_all.astype(np.int64) * n1v + x1_all) * n2 + x2_all
    type_counts = np.bincount(flat.ravel(), minlength=n0 * n1v * n2)
    type_probs = type_counts.reshape(n0, n1v, n2) / (n * big_b)
    emp_type = JointPmf(
        (Alphabet(n0), Alphabet(n1v), Alphabet(n2)), type_probs)

    events = np.stack([e0, e1, e2, e3, e4], axis=1)
    trace = {
        "i": i_idx, "j": j_idx, "ell": ell_idx,
        "i_hat": i_hat, "j_hat": j_hat, "ell_hat": ell_hat,
    }
    return SimResult(params, events, float(dist.mean()), block_distortion,
                     emp_type, trace, rate_choice)


def _array_pmf(arr: np.ndarray) -> JointPmf:
    axes = tuple(Alphabet(s) for s in arr.shape)
    total = arr.sum()
    return JointPmf(axes, arr / total if total > 0 else arr)
