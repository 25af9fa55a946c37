"""Implementability of coordination targets and payoff optimization.

A target is a joint law over (state, action-1, action-2).  Non-causal
implementability is governed by the information constraint

    I(X0;X2) <= I(V;Y|X2) - I(V;X0|X2)

for some auxiliary channel P(V|X0,X1,X2); causal implementability by a
factorization of the target.  This module evaluates the constraint slack,
maximizes it over the auxiliary channel, optimizes expected payoffs over
implementable targets, and Monte-Carlo-checks causal targets by running
the symbol-by-symbol scheme that achieves them.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .probability import (
    Alphabet,
    CondPmf,
    JointPmf,
    _entropy_bits,
)
from .simplexopt import OptConfig, dirichlet_rows, eg_ascent, normalize_rows

DEFAULT_SLACK_TOL = 1e-7
_CERT_TOL = 1e-9
_MARGINAL_TOL = 1e-9


class WrongMarginalError(ValueError):
    """The target's state marginal does not match the state prior."""


@dataclass(frozen=True)
class CoordinationProblem:
    """State prior, channel to agent 2, and a common payoff tensor."""

    state_prior: JointPmf
    channel: CondPmf
    payoff: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.payoff, dtype=float)
        if not np.all(np.isfinite(w)):
            raise ValueError("payoff tensor must be finite")
        n0 = self.state_prior.shape[0]
        if len(self.channel.given_axes) != 3:
            raise ValueError("channel must condition on (x0, x1, x2)")
        expected = (n0,) + tuple(a.size for a in self.channel.given_axes[1:])
        if w.shape != expected or self.channel.given_axes[0].size != n0:
            raise ValueError(
                f"payoff shape {w.shape} inconsistent with alphabets {expected}")
        w = w.copy()
        w.setflags(write=False)
        object.__setattr__(self, "payoff", w)

    @property
    def x0(self) -> Alphabet:
        return self.state_prior.axes[0]

    @property
    def x1(self) -> Alphabet:
        return self.channel.given_axes[1]

    @property
    def x2(self) -> Alphabet:
        return self.channel.given_axes[2]

    @property
    def y(self) -> Alphabet:
        return self.channel.out_axis


@dataclass(frozen=True)
class AuxChannel:
    """The auxiliary conditional law P(V | X0, X1, X2) of the constraint."""

    kernel: CondPmf
    v_size: int

    def __post_init__(self):
        if self.kernel.out_axis.size != self.v_size:
            raise ValueError("kernel output size != v_size")


@dataclass(frozen=True)
class FeasibilityReport:
    """Outcome of a constraint-slack maximization."""

    slack: float
    best_aux: AuxChannel
    implementable: bool
    tol: float
    v_size: int
    restarts: int
    trace: tuple = ()
    status: str = "ok"

    def to_json_dict(self) -> dict:
        return {
            "slack": self.slack,
            "implementable": bool(self.implementable),
            "tol": self.tol,
            "v_size": self.v_size,
            "restarts": self.restarts,
            "trace": [[int(i), float(v)] for i, v in self.trace],
            "status": self.status,
        }


# ---------------------------------------------------------------------------
# slack evaluation
# ---------------------------------------------------------------------------


def _safe_log2_frac(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    """log2(num/den) where both are positive, else 0."""
    mask = (num > 0) & (den > 0)
    out = np.zeros_like(num)
    out[mask] = np.log2(num[mask]) - np.log2(den[mask])
    return out


def _slack_terms(w_full: np.ndarray, qb: np.ndarray, p_aux: np.ndarray):
    """Marginals of Q = qbar * channel * aux needed for slack and gradients.

    w_full = qbar[..., None] * channel, shape (n0, n1, n2, ny).
    """
    a = np.einsum("abcy,abcv->cyv", w_full, p_aux)  # (x2, y, v)
    b = np.einsum("abc,abcv->acv", qb, p_aux)       # (x0, x2, v)
    m = qb.sum(axis=1)                              # (x0, x2)
    return a, b, m


def _slack_from_marginals(a: np.ndarray, b: np.ndarray, m: np.ndarray) -> float:
    i_vy_x2 = (
        _entropy_bits(a.sum(axis=2))
        + _entropy_bits(a.sum(axis=1))
        - _entropy_bits(a)
        - _entropy_bits(a.sum(axis=(1, 2)))
    )
    i_vx0_x2 = (
        _entropy_bits(b.sum(axis=2))
        + _entropy_bits(b.sum(axis=0))
        - _entropy_bits(b)
        - _entropy_bits(b.sum(axis=(0, 2)))
    )
    i_x0x2 = (
        _entropy_bits(m.sum(axis=1))
        + _entropy_bits(m.sum(axis=0))
        - _entropy_bits(m)
    )
    return i_vy_x2 - i_vx0_x2 - i_x0x2


def _slack_value(w_full, qb, p_aux) -> float:
    a, b, m = _slack_terms(w_full, qb, p_aux)
    return _slack_from_marginals(a, b, m)


def _log_ratios(a: np.ndarray, b: np.ndarray):
    """Pointwise log-derivative tables of the two conditional MI terms."""
    a2 = a.sum(axis=(1, 2))
    l1 = _safe_log2_frac(a * a2[:, None, None],
                         a.sum(axis=2)[:, :, None] * a.sum(axis=1)[:, None, :])
    b2 = b.sum(axis=(0, 2))
    l2 = _safe_log2_frac(b * b2[None, :, None],
                         b.sum(axis=2)[:, :, None] * b.sum(axis=0)[None, :, :])
    return l1, l2


def _slack_grad_aux(w_full, qb, p_aux) -> np.ndarray:
    """Gradient of the slack w.r.t. the auxiliary kernel entries."""
    a, b, _ = _slack_terms(w_full, qb, p_aux)
    l1, l2 = _log_ratios(a, b)
    g1 = np.einsum("abcy,cyv->abcv", w_full, l1)
    g2 = qb[..., None] * l2[:, None, :, :]
    return g1 - g2


def _slack_grad_qbar(ch: np.ndarray, qb: np.ndarray, p_aux: np.ndarray) -> np.ndarray:
    """Gradient of the slack w.r.t. the target entries, fixed aux kernel."""
    w_full = qb[..., None] * ch
    a, b, m = _slack_terms(w_full, qb, p_aux)
    l1, l2 = _log_ratios(a, b)
    lm = _safe_log2_frac(m, m.sum(axis=1)[:, None] * m.sum(axis=0)[None, :])
    t1 = np.einsum("abcy,abcv,cyv->abc", ch, p_aux, l1)
    t2 = np.einsum("abcv,acv->abc", p_aux, l2)
    return t1 - t2 - lm[:, None, :]


def constraint_slack(qbar: JointPmf, aux: AuxChannel, channel: CondPmf) -> float:
    """RHS - LHS of the information constraint, in bits, for a fixed aux."""
    qb = qbar.probs
    ch = channel.probs
    if ch.shape[:3] != qb.shape:
        raise ValueError(
            f"channel conditioning shape {ch.shape[:3]} != target shape {qb.shape}")
    if aux.kernel.probs.shape[:3] != qb.shape:
        raise ValueError("aux kernel conditioning shape != target shape")
    return _slack_value(qb[..., None] * ch, qb, aux.kernel.probs)


# ---------------------------------------------------------------------------
# slack maximization over the auxiliary channel
# ---------------------------------------------------------------------------


def _structured_aux_starts(shape3: tuple[int, int, int], v_size: int):
    """Deterministic kernels worth trying before random restarts.

    Constant V, V equal to each coordinate, and V indexing the full triple
    (when v_size permits) cover the exact optima of every degenerate and
    boundary instance we care about.
    """
    n0, n1, n2 = shape3
    starts = []
    const = np.zeros(shape3 + (v_size,))
    const[..., 0] = 1.0
    starts.append(const)
    grids = np.meshgrid(np.arange(n0), np.arange(n1), np.arange(n2),
                        indexing="ij")
    for k, n in enumerate((n0, n1, n2)):
        if n <= v_size:
            p = np.zeros(shape3 + (v_size,))
            np.put_along_axis(p, grids[k][..., None], 1.0, axis=-1)
            starts.append(p)
    if n0 * n1 * n2 <= v_size:
        flat = (grids[0] * n1 + grids[1]) * n2 + grids[2]
        p = np.zeros(shape3 + (v_size,))
        np.put_along_axis(p, flat[..., None], 1.0, axis=-1)
        starts.append(p)
    return starts


def _slack_batch_deterministic(w_full, qb, v_size: int, chunk: int = 8192):
    """Slack of every deterministic aux kernel; (assignments, values).

    Assignment rows map each conditioning triple (row-major) to a V symbol.
    """
    n0, n1, n2 = qb.shape
    cells = n0 * n1 * n2
    assigns = np.array(list(itertools.product(range(v_size), repeat=cells)),
                       dtype=np.int64)
    vals = np.empty(len(assigns))
    eye = np.eye(v_size)
    for lo in range(0, len(assigns), chunk):
        block = assigns[lo:lo + chunk]
        p = eye[block].reshape(len(block), n0, n1, n2, v_size)
        a = np.einsum("abcy,kabcv->kcyv", w_full, p)
        b = np.einsum("abc,kabcv->kacv", qb, p)
        m = qb.sum(axis=1)
        i3 = (_entropy_bits(m.sum(axis=1)) + _entropy_bits(m.sum(axis=0))
              - _entropy_bits(m))
        def h(x, axes):
            s = x.sum(axis=axes) if axes else x
            return -np.sum(np.where(s > 0, s * np.log2(np.where(s > 0, s, 1.0)), 0.0),
                           axis=tuple(range(1, s.ndim)))
        i1 = h(a, (3,)) + h(a, (2,)) - h(a, ()) - h(a, (2, 3))
        i2 = h(b, (3,)) + h(b, (1,)) - h(b, ()) - h(b, (1, 3))
        vals[lo:lo + chunk] = i1 - i2 - i3
    return assigns, vals


def max_constraint_slack(
    qbar: JointPmf,
    channel: CondPmf,
    v_size: int,
    cfg: OptConfig | None = None,
    tol: float = DEFAULT_SLACK_TOL,
    extra_starts: list | None = None,
) -> FeasibilityReport:
    """Multi-start ascent of the constraint slack over the auxiliary kernel.

    The returned slack is a lower bound on the true maximum (each candidate
    kernel is evaluated exactly).  Deterministic given cfg.seed.
    """
    cfg = cfg or OptConfig()
    qb = qbar.probs
    ch = channel.probs
    n0, n1, n2 = qb.shape
    w_full = qb[..., None] * ch

    def value(p):
        return _slack_value(w_full, qb, p)

    def grad(p):
        return _slack_grad_aux(w_full, qb, p)

    starts: list[tuple[int, np.ndarray]] = []
    for p0 in _structured_aux_starts((n0, n1, n2), v_size):
        starts.append((len(starts), p0))
    if extra_starts:
        for p0 in extra_starts:
            starts.append((len(starts), np.asarray(p0, dtype=float)))
    if v_size ** (n0 * n1 * n2) <= 1e6:
        assigns, vals = _slack_batch_deterministic(w_full, qb, v_size)
        eye = np.eye(v_size)
        for idx in np.argsort(vals)[-4:][::-1]:
            p0 = eye[assigns[idx]].reshape(n0, n1, n2, v_size)
            starts.append((len(starts), p0))
    n_struct = len(starts)
    for r in range(cfg.restarts):
        rng = cfg.rng(1, r)
        starts.append((n_struct + r, dirichlet_rows(rng, (n0, n1, n2, v_size))))

    best_val = -np.inf
    best_p = None
    trace = []
    for idx, p0 in starts:
        p, val = eg_ascent(p0, value, grad, max_iter=cfg.max_iter,
                           step0=cfg.step0, value_tol=cfg.value_tol)
        v0 = value(normalize_rows(p0))
        if v0 > val:  # ascent never worsens a start, but keep the exact value
            p, val = normalize_rows(p0), v0
        trace.append((idx, float(val)))
        if val > best_val:
            best_val, best_p = val, p

    kernel = CondPmf(
        (qbar.axes[0], qbar.axes[1], qbar.axes[2]),
        (Alphabet(v_size),),
        best_p,
    )
    return FeasibilityReport(
        slack=float(best_val),
        best_aux=AuxChannel(kernel, v_size),
        implementable=bool(best_val >= -tol),
        tol=tol,
        v_size=v_size,
        restarts=len(starts),
        trace=tuple(trace),
    )


def is_implementable_noncausal(
    qbar: JointPmf,
    channel: CondPmf,
    v_size: int,
    tol: float = DEFAULT_SLACK_TOL,
    cfg: OptConfig | None = None,
    state_prior: JointPmf | None = None,
) -> FeasibilityReport:
    """Non-causal implementability verdict for a target law.

    If a state prior is supplied, the marginal hypothesis sum_{x1,x2} qbar
    = rho0 is checked first and a violation raises WrongMarginalError
    rather than producing a feasibility verdict.
    """
    if state_prior is not None:
        dev = np.abs(qbar.probs.sum(axis=(1, 2)) - state_prior.probs).max()
        if dev > _MARGINAL_TOL:
            raise WrongMarginalError(
                f"state marginal deviates from prior by {dev}")
    return max_constraint_slack(qbar, channel, v_size, cfg=cfg, tol=tol)


def is_implementable_causal(
    qbar: JointPmf,
    tol: float = 1e-6,
    state_prior: JointPmf | None = None,
) -> bool:
    """True iff the target factorizes as rho0(x0) P(x2) P(x1|x0,x2)."""
    qb = qbar.probs
    rho0 = state_prior.probs if state_prior is not None else qb.sum(axis=(1, 2))
    if state_prior is not None:
        if np.abs(qb.sum(axis=(1, 2)) - rho0).max() > tol:
            return False
    px2 = qb.sum(axis=(0, 1))
    cond = qbar.condition([0, 2]).probs  # (x0, x2, x1)
    rebuilt = rho0[:, None, None] * px2[None, None, :] * np.transpose(
        cond, (0, 2, 1))
    return bool(np.abs(rebuilt - qb).max() <= tol)


# ---------------------------------------------------------------------------
# payoff optimization
# ---------------------------------------------------------------------------


def baselines(problem: CoordinationProblem):
    """Costless-communication optimum and all constant-action-pair payoffs."""
    rho0 = problem.state_prior.probs
    w = problem.payoff
    costless = float(np.sum(rho0 * w.reshape(w.shape[0], -1).max(axis=1)))
    constant_pair = {
        (a, b): float(np.sum(rho0 * w[:, a, b]))
        for a in range(w.shape[1])
        for b in range(w.shape[2])
    }
    return costless, constant_pair


def optimize_payoff_causal(problem: CoordinationProblem):
    """Exact causal optimum: constant x2, per-state best response of agent 1.

    Returns (x2_star, policy mapping x0 -> x1, value).  Ties break to the
    smallest symbol index.
    """
    rho0 = problem.state_prior.probs
    w = problem.payoff
    per_x2 = np.einsum("a,ac->c", rho0, w.max(axis=1))  # value of each x2
    x2_star = int(np.argmax(per_x2))
    policy = np.argmax(w[:, :, x2_star], axis=1).astype(int)
    value = float(per_x2[x2_star])
    return x2_star, policy, value


def _causal_target(problem: CoordinationProblem) -> JointPmf:
    """Target law induced by the optimal semi-coordinated policy."""
    x2_star, policy, _ = optimize_payoff_causal(problem)
    rho0 = problem.state_prior.probs
    qb = np.zeros((len(rho0), problem.x1.size, problem.x2.size))
    qb[np.arange(len(rho0)), policy, x2_star] = rho0
    return JointPmf((problem.x0, problem.x1, problem.x2), qb)


def optimize_payoff_noncausal(
    problem: CoordinationProblem,
    v_size: int,
    cfg: OptConfig | None = None,
):
    """Best-effort payoff maximization over non-causally implementable laws.

    Alternating scheme: for fixed auxiliary kernel, exponentiated-gradient
    ascent on the conditional target P(x1,x2|x0) of payoff plus an exact
    penalty on negative slack; then re-maximize the slack.  Every candidate
    is certified feasible (max slack >= -1e-9, via an independent slack
    maximization) before it may become the incumbent, so the returned value
    is a feasible lower bound.  The semi-coordinated causal optimum seeds
    the incumbent, hence value >= causal optimum always.
    """
    cfg = cfg or OptConfig()
    rho0 = problem.state_prior.probs
    ch = problem.channel.probs
    w = problem.payoff
    n0, n1, n2 = w.shape
    m = n1 * n2
    w_rows = w.reshape(n0, m)

    def qb_of(c_rows):
        return (rho0[:, None] * c_rows).reshape(n0, n1, n2)

    def payoff_of(c_rows):
        return float(np.sum(rho0[:, None] * c_rows * w_rows))

    cert_cfg = OptConfig(seed=cfg.seed ^ 0x5EED, restarts=8,
                         max_iter=cfg.max_iter, step0=cfg.step0)

    def certify(qb, warm_aux=None):
        extra = [warm_aux] if warm_aux is not None else None
        rep = max_constraint_slack(
            JointPmf(qbar_axes, qb), problem.channel, v_size,
            cfg=cert_cfg, extra_starts=extra)
        return rep

    qbar_axes = (problem.x0, problem.x1, problem.x2)
    anchor = _causal_target(problem)
    anchor_rows = (anchor.probs / np.where(rho0 > 0, rho0, 1.0)[:, None, None]
                   ).reshape(n0, m)
    anchor_rows = normalize_rows(anchor_rows)

    best_qb = anchor.probs
    _, _, best_val = optimize_payoff_causal(problem)
    best_rep = certify(best_qb)

    # starting conditionals: causal anchor, greedy argmax, random rows
    starts = [anchor_rows.copy()]
    greedy = np.zeros((n0, m))
    greedy[np.arange(n0), np.argmax(w_rows, axis=1)] = 1.0
    starts.append(greedy)
    for r in range(cfg.outer_restarts - len(starts)):
        starts.append(dirichlet_rows(cfg.rng(2, r), (n0, m)))

    for ridx, c0 in enumerate(starts):
        c_rows = normalize_rows(np.maximum(c0, 1e-9))  # keep support workable
        p_aux = dirichlet_rows(cfg.rng(3, ridx), (n0, n1, n2, v_size))
        lam = 16.0
        for _ in range(cfg.outer_rounds):
            qb = qb_of(c_rows)
            w_full = qb[..., None] * ch
            p_aux, _ = eg_ascent(
                p_aux,
                lambda p: _slack_value(w_full, qb, p),
                lambda p: _slack_grad_aux(w_full, qb, p),
                max_iter=120, step0=cfg.step0)

            def j_value(c, lam=lam, p_aux=p_aux):
                qb = qb_of(c)
                s = _slack_value(qb[..., None] * ch, qb, p_aux)
                return payoff_of(c) + lam * min(0.0, s) ** 2 * (-1.0)

            def j_grad(c, lam=lam, p_aux=p_aux):
                qb = qb_of(c)
                s = _slack_value(qb[..., None] * ch, qb, p_aux)
                g = rho0[:, None] * w_rows
                if s < 0:
                    gs = _slack_grad_qbar(ch, qb, p_aux).reshape(n0, m)
                    g = g + (-2.0 * lam * s) * rho0[:, None] * gs
                return g

            c_rows, _ = eg_ascent(c_rows, j_value, j_grad,
                                  max_iter=120, step0=cfg.step0)
            qb = qb_of(c_rows)
            s = _slack_value(qb[..., None] * ch, qb, p_aux)
            if s < -1e-8:
                lam = min(lam * 2.0, 1e7)

        qb = qb_of(c_rows)
        val = payoff_of(c_rows)
        if val <= best_val + 1e-12:
            continue
        rep = certify(qb, warm_aux=p_aux)
        if rep.slack >= -_CERT_TOL:
            best_qb, best_val, best_rep = qb, val, rep
            continue
        # repair: blend toward the causal anchor until certified feasible
        for alpha in (1e-3, 3e-3, 1e-2, 3e-2, 0.1, 0.3, 1.0):
            qb2 = (1 - alpha) * qb + alpha * anchor.probs
            val2 = float(np.sum(qb2 * w))
            if val2 <= best_val + 1e-12:
                break
            rep2 = certify(qb2, warm_aux=p_aux)
            if rep2.slack >= -_CERT_TOL:
                best_qb, best_val, best_rep = qb2, val2, rep2
                break

    qbar_star = JointPmf(qbar_axes, np.clip(best_qb, 0.0, None)
                         / np.clip(best_qb, 0.0, None).sum())
    return qbar_star, best_val, best_rep


# ---------------------------------------------------------------------------
# Monte-Carlo check of the causal scheme
# ---------------------------------------------------------------------------


def simulate_causal_scheme(
    problem: CoordinationProblem,
    qbar: JointPmf,
    T: int,
    seed: int = 0,
    eps1: float = 0.01,
    max_retries: int = 100,
):
    """Run the symbol-by-symbol causal scheme against a factorized target.

    Agent 2 commits to a fixed sequence whose empirical type is within
    eps1 relative deviation of P(x2) (i.i.d. sampling with retries; after
    max_retries the closest attempt is used).  Agent 1 best-responds
    randomly through P(x1|x0,x2).  Returns the time-averaged empirical
    joint law and its max-abs deviation from the target.
    """
    if not is_implementable_causal(qbar, tol=1e-9):
        raise ValueError("target is not causal-factorized")
    qb = qbar.probs
    n0, n1, n2 = qb.shape
    rho0 = qb.sum(axis=(1, 2))
    px2 = qb.sum(axis=(0, 1))
    cond = qbar.condition([0, 2]).probs  # (x0, x2, x1)

    rng = np.random.default_rng([seed & 0xFFFFFFFF, 0xC0])
    best_seq, best_dev = None, np.inf
    support = px2 > 0
    for _ in range(max_retries):
        x2_seq = rng.choice(n2, size=T, p=px2)
        emp = np.bincount(x2_seq, minlength=n2) / T
        rel = np.abs(emp[support] - px2[support]) / px2[support]
        dev = float(rel.max())
        if dev < best_dev:
            best_dev, best_seq = dev, x2_seq
        if dev <= eps1:
            break
    x2_seq = best_seq

    x0_seq = rng.choice(n0, size=T, p=rho0)
    cum = np.cumsum(cond, axis=-1)  # (x0, x2, x1)
    u = rng.random(T)
    x1_seq = (u[:, None] > cum[x0_seq, x2_seq]).sum(axis=1)

    flat = (x0_seq * n1 + x1_seq) * n2 + x2_seq
    counts = np.bincount(flat, minlength=n0 * n1 * n2).reshape(n0, n1, n2)
    empirical = JointPmf(qbar.axes, counts / T)
    maxdev = float(np.abs(empirical.probs - qb).max())
    return empirical, maxdev


# ---------------------------------------------------------------------------
# cardinality stress
# ---------------------------------------------------------------------------


def cardinality_stress(
    qbar: JointPmf,
    channel: CondPmf,
    seed: int = 0,
    restarts: int = 64,
    v_max: int | None = None,
):
    """Best slack as a function of auxiliary cardinality.

    Sweeps v_size from 1 to |X0||X1||X2| + 2.  Each level is seeded with
    the previous level's best kernel (zero-padded), so the reported column
    is non-decreasing by construction.
    """
    n0, n1, n2 = qbar.probs.shape
    cap = n0 * n1 * n2
    v_max = v_max or cap + 2
    rows = []
    prev_best = None
    best_so_far = -np.inf
    for v in range(1, v_max + 1):
        extra = None
        if prev_best is not None:
            padded = np.zeros(prev_best.shape[:-1] + (v,))
            padded[..., : prev_best.shape[-1]] = prev_best
            extra = [padded]
        cfg = OptConfig(seed=seed, restarts=restarts)
        rep = max_constraint_slack(qbar, channel, v, cfg=cfg,
                                   extra_starts=extra)
        prev_best = rep.best_aux.kernel.probs
        best_so_far = max(best_so_far, rep.slack)
        rows.append((v, best_so_far))
    return rows
