"""Minimal-distortion state communication under causality constraints.

Four observation structures are covered: the encoder sees the state
non-causally or causally, and the decoder acts causally or strictly
causally.  The non-causal-encoder cases minimize expected distortion over
an auxiliary law P(u,v,x1|x0) subject to the information constraint

    I(U;X0) <= I(V;Y|U) - I(V;X0|U),

with the decoder realized as the pointwise argmin map; the causal-encoder
cases are solved exactly (exhaustive search / constant guess).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .probability import CondPmf, JointPmf, _entropy_bits
from .simplexopt import OptConfig, dirichlet_rows, eg_ascent, normalize_rows

_FEAS_TOL = 1e-6
_EXACT_GUARD = 1e7


@dataclass(frozen=True)
class StateCommProblem:
    """State prior, channel Gamma(y|x0,x1), distortion table and aux sizes."""

    state_prior: JointPmf
    channel: CondPmf
    distortion: np.ndarray  # (|X0|, |X2|)
    d_max: float
    u_size: int | None = None
    v_size: int | None = None

    def __post_init__(self):
        d = np.asarray(self.distortion, dtype=float)
        if np.any(d < 0) or np.any(d > self.d_max):
            raise ValueError("distortion entries must lie in [0, d_max]")
        if len(self.channel.given_axes) != 2:
            raise ValueError("channel must condition on (x0, x1)")
        if d.shape[0] != self.state_prior.shape[0]:
            raise ValueError("distortion rows must match |X0|")
        d = d.copy()
        d.setflags(write=False)
        object.__setattr__(self, "distortion", d)
        if self.u_size is None:
            object.__setattr__(self, "u_size", self.n0 + 1)
        if self.v_size is None:
            object.__setattr__(self, "v_size", self.n0 * self.n1 + 1)

    @property
    def n0(self) -> int:
        return self.state_prior.shape[0]

    @property
    def n1(self) -> int:
        return self.channel.given_axes[1].size

    @property
    def n2(self) -> int:
        return self.distortion.shape[1]

    @property
    def ny(self) -> int:
        return self.channel.out_axis.size


@dataclass(frozen=True)
class DistortionReport:
    """Achievable distortion and the strategy realizing it."""

    min_distortion: float
    decoder: np.ndarray          # (|U|,|Y|) or (|Y|,) or scalar array
    encoder: np.ndarray          # P(u,v,x1|x0) or deterministic map x0->x1
    slack: float | None = None   # information-constraint slack (Theorem-3 cases)
    mode: str = "exact"
    fallback: bool = False

    def to_json_dict(self) -> dict:
        return {
            "min_distortion": self.min_distortion,
            "decoder": np.asarray(self.decoder).tolist(),
            "encoder": np.asarray(self.encoder).tolist(),
            "slack": self.slack,
            "mode": self.mode,
            "fallback": self.fallback,
        }


# ---------------------------------------------------------------------------
# causal encoder
# ---------------------------------------------------------------------------


def min_dist_c_enc_sc_dec(problem: StateCommProblem) -> DistortionReport:
    """Strictly causal decoder, causal encoder: best constant guess."""
    rho0 = problem.state_prior.probs
    per_x2 = rho0 @ problem.distortion
    x2 = int(np.argmin(per_x2))
    return DistortionReport(float(per_x2[x2]), np.array(x2), np.zeros(0, int),
                            mode="exact")


class InstanceTooLarge(ValueError):
    """Exhaustive mode would exceed the size guard."""


def _best_decoder_and_dist(q_cy: np.ndarray, delta: np.ndarray):
    """Pointwise argmin decoder for a context-state law q(x0, context)."""
    scores = np.einsum("ac,ax->cx", q_cy, delta)  # (context, x2)
    g = np.argmin(scores, axis=1)
    return g, float(scores[np.arange(len(g)), g].sum())


def min_dist_c_enc_c_dec(problem: StateCommProblem,
                         cfg: OptConfig | None = None,
                         force_fallback: bool = False) -> DistortionReport:
    """Causal encoder and decoder: exact search over deterministic maps.

    Deterministic encoders suffice because the objective is linear in
    P(x1|x0) once the decoder is fixed; the decoder is the pointwise
    argmin map y -> x2.  Falls back to alternating optimization when the
    search space exceeds the guard.
    """
    n0, n1, ny = problem.n0, problem.n1, problem.ny
    n_enc = float(n1) ** n0
    n_dec = float(problem.n2) ** ny
    if force_fallback or n_enc * n_dec > _EXACT_GUARD:
        if not force_fallback:
            rep = _t4_alternating(problem, cfg or OptConfig())
            return DistortionReport(rep.min_distortion, rep.decoder,
                                    rep.encoder, mode="alternating",
                                    fallback=True)
        return _t4_alternating(problem, cfg or OptConfig())

    rho0 = problem.state_prior.probs
    ch = problem.channel.probs  # (x0, x1, y)
    best = (np.inf, None, None)
    for f in itertools.product(range(n1), repeat=n0):
        q_xy = rho0[:, None] * ch[np.arange(n0), list(f), :]  # (x0, y)
        g, dist = _best_decoder_and_dist(q_xy, problem.distortion)
        if dist < best[0] - 1e-15:
            best = (dist, g, np.array(f, dtype=int))
    return DistortionReport(best[0], best[1], best[2], mode="exact")


def _t4_alternating(problem: StateCommProblem, cfg: OptConfig) -> DistortionReport:
    """Alternating encoder/decoder improvement for the causal-encoder case."""
    n0, n1 = problem.n0, problem.n1
    rho0 = problem.state_prior.probs
    ch = problem.channel.probs
    best = (np.inf, None, None)
    for r in range(min(cfg.restarts, 16)):
        rng = cfg.rng(11, r)
        p = dirichlet_rows(rng, (n0, n1))
        for _ in range(60):
            q_xy = np.einsum("a,ab,aby->ay", rho0, p, ch)
            g, _ = _best_decoder_and_dist(q_xy, problem.distortion)
            cost = np.einsum("aby,ay->ab", ch, problem.distortion[:, g])
            f = np.argmin(cost, axis=1)
            p_new = np.zeros_like(p)
            p_new[np.arange(n0), f] = 1.0
            if np.array_equal(p_new, p):
                break
            p = p_new
        q_xy = np.einsum("a,ab,aby->ay", rho0, p, ch)
        g, dist = _best_decoder_and_dist(q_xy, problem.distortion)
        if dist < best[0] - 1e-15:
            best = (dist, g, np.argmax(p, axis=1))
    return DistortionReport(best[0], best[1], best[2], mode="alternating")


# ---------------------------------------------------------------------------
# non-causal encoder (Wyner-Ziv / Gel'fand-Pinsker style auxiliaries)
# ---------------------------------------------------------------------------


def _wz_marginals(rho0, ch, p_law):
    """Marginals of Q = rho0 * P(u,v,x1|x0) * Gamma used by slack/gradients."""
    k = np.einsum("a,auvb->auv", rho0, p_law)           # (x0, u, v)
    j = k.sum(axis=2)                                   # (x0, u)
    a = np.einsum("a,auvb,aby->uvy", rho0, p_law, ch)   # (u, v, y)
    return j, k, a


def _wz_slack(j, k, a) -> float:
    i_ux0 = _entropy_bits(j.sum(0)) + _entropy_bits(j.sum(1)) - _entropy_bits(j)
    i_vx0_u = (_entropy_bits(k.sum(2)) + _entropy_bits(k.sum(0))
               - _entropy_bits(k) - _entropy_bits(k.sum((0, 2))))
    i_vy_u = (_entropy_bits(a.sum(1)) + _entropy_bits(a.sum(2))
              - _entropy_bits(a) - _entropy_bits(a.sum((1, 2))))
    return i_vy_u - i_vx0_u - i_ux0


def _safe_l2(num, den):
    mask = (num > 0) & (den > 0)
    out = np.zeros_like(num)
    out[mask] = np.log2(num[mask]) - np.log2(den[mask])
    return out


def _wz_slack_grad(rho0, ch, p_law):
    j, k, a = _wz_marginals(rho0, ch, p_law)
    lj = _safe_l2(j, j.sum(1)[:, None] * j.sum(0)[None, :])
    ku = k.sum((0, 2))
    lk = _safe_l2(k * ku[None, :, None],
                  k.sum(2)[:, :, None] * k.sum(0)[None, :, :])
    au = a.sum((1, 2))
    la = _safe_l2(a * au[:, None, None],
                  a.sum(1)[:, None, :] * a.sum(2)[:, :, None])
    term_a = np.einsum("aby,uvy->auvb", ch, la)
    grad = term_a - lk[:, :, :, None] - lj[:, :, None, None]
    return rho0[:, None, None, None] * grad, _wz_slack(j, k, a)


def _wz_distortion_parts(rho0, ch, p_law, delta, use_u: bool):
    """Optimal pointwise decoder and resulting expected distortion."""
    q_xuy = np.einsum("a,auvb,aby->auy", rho0, p_law, ch)  # (x0, u, y)
    if use_u:
        scores = np.einsum("auy,ax->uyx", q_xuy, delta)
        g = np.argmin(scores, axis=2)                      # (u, y)
        nu, ny = g.shape
        dist = float(scores[np.arange(nu)[:, None], np.arange(ny)[None, :], g].sum())
        cost_xuy = delta[:, g]                             # (x0, u, y)
    else:
        scores = np.einsum("auy,ax->yx", q_xuy, delta)
        g = np.argmin(scores, axis=1)                      # (y,)
        dist = float(scores[np.arange(len(g)), g].sum())
        cost_xuy = np.broadcast_to(
            delta[:, g][:, None, :], q_xuy.shape)          # (x0, u, y)
    return g, dist, cost_xuy


def _wz_structured_laws(problem: StateCommProblem, nu: int, nv: int,
                        extra_laws=None):
    n0, n1 = problem.n0, problem.n1
    laws = []

    def det(u_of, v_of, x1_of):
        p = np.zeros((n0, nu, nv, n1))
        for x0 in range(n0):
            p[x0, u_of(x0), v_of(x0), x1_of(x0)] = 1.0
        return p

    laws.append(det(lambda a: 0, lambda a: 0, lambda a: 0))
    if n1 >= 2:
        # embed the exact causal-encoder solution: u, v constant
        t4 = min_dist_c_enc_c_dec(problem)
        if t4.encoder.size == n0:
            f = t4.encoder
            laws.append(det(lambda a: 0, lambda a: 0, lambda a: int(f[a])))
    if nv >= n0:
        laws.append(det(lambda a: 0, lambda a: a, lambda a: 0))
        if n1 >= n0:
            laws.append(det(lambda a: 0, lambda a: a, lambda a: a))
    if n1 >= n0:
        laws.append(det(lambda a: 0, lambda a: 0, lambda a: a))
    if nu >= n0:
        laws.append(det(lambda a: a, lambda a: 0, lambda a: 0))
        if nv >= n0 and n1 >= n0:
            laws.append(det(lambda a: a, lambda a: a, lambda a: a))
    if extra_laws:
        laws.extend(np.asarray(p, dtype=float) for p in extra_laws)
    return laws


def _wz_optimize(problem: StateCommProblem, cfg: OptConfig, use_u: bool,
                 extra_laws=None) -> DistortionReport:
    rho0 = problem.state_prior.probs
    ch = problem.channel.probs
    delta = problem.distortion
    n0, n1 = problem.n0, problem.n1
    nu, nv = problem.u_size, problem.v_size

    def evaluate(p_law):
        """(distortion, slack, decoder) with the optimal pointwise decoder."""
        g, dist, _ = _wz_distortion_parts(rho0, ch, p_law, delta, use_u)
        j, k, a = _wz_marginals(rho0, ch, p_law)
        return dist, _wz_slack(j, k, a), g

    best = (np.inf, None, None, None)  # dist, law, g, slack

    def consider(p_law):
        nonlocal best
        dist, s, g = evaluate(p_law)
        if s >= -_FEAS_TOL and dist < best[0] - 1e-15:
            best = (dist, p_law, g, s)

    laws = _wz_structured_laws(problem, nu, nv, extra_laws)
    for p0 in laws:
        consider(p0)

    n_starts = min(cfg.outer_restarts, 32)
    starts = [normalize_rows(np.maximum(p, 1e-9).reshape(n0, -1)).reshape(
        n0, nu, nv, n1) for p in laws[:4]]
    for r in range(n_starts - len(starts)):
        starts.append(dirichlet_rows(cfg.rng(21, r), (n0, nu, nv, n1)))

    for p0 in starts:
        p_law = p0.copy()
        lam = 16.0
        for _ in range(cfg.outer_rounds):
            def value(p, lam=lam):
                _, dist, _ = _wz_distortion_parts(rho0, ch, p, delta, use_u)
                gs, s = None, None
                j, k, a = _wz_marginals(rho0, ch, p)
                s = _wz_slack(j, k, a)
                return -dist - lam * min(0.0, s) ** 2

            def grad(p, lam=lam):
                g, _, cost_xuy = _wz_distortion_parts(rho0, ch, p, delta, use_u)
                gd = np.broadcast_to(
                    rho0[:, None, None, None] * np.einsum(
                        "aby,auy->aub", ch, cost_xuy)[:, :, None, :],
                    p.shape).copy()
                gs, s = _wz_slack_grad(rho0, ch, p)
                out = -gd
                if s < 0:
                    out = out + (-2.0 * lam * s) * gs
                return out

            p_law, _ = eg_ascent(
                p_law.reshape(n0, -1),
                lambda q: value(q.reshape(n0, nu, nv, n1)),
                lambda q: grad(q.reshape(n0, nu, nv, n1)).reshape(n0, -1),
                max_iter=120, step0=cfg.step0)
            p_law = p_law.reshape(n0, nu, nv, n1)
            _, s, _ = evaluate(p_law)
            if s < -1e-8:
                lam = min(lam * 2.0, 1e7)
        consider(p_law)

    dist, law, g, s = best
    return DistortionReport(dist, np.asarray(g), law, slack=float(s),
                            mode="penalized-gradient")


def min_dist_nc_enc_sc_dec(problem: StateCommProblem,
                           cfg: OptConfig | None = None) -> DistortionReport:
    """Non-causal encoder, strictly causal decoder g: Y -> X2."""
    return _wz_optimize(problem, cfg or OptConfig(), use_u=False)


def min_dist_nc_enc_c_dec(problem: StateCommProblem,
                          cfg: OptConfig | None = None) -> DistortionReport:
    """Non-causal encoder, causal decoder g: U x Y -> X2.

    The strictly-causal solution is computed first and re-polished under
    the richer decoder class, so the value never exceeds the strictly
    causal one.
    """
    cfg = cfg or OptConfig()
    sc = _wz_optimize(problem, cfg, use_u=False)
    return _wz_optimize(problem, cfg, use_u=True, extra_laws=[sc.encoder])
