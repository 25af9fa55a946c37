"""Two-pair interference-channel power control as a coordination problem.

The global state is the 4-tuple of link gains, each a two-level Bernoulli
variable; both transmitters pick a power in {0, Pmax}; the common payoff
is the sum-rate sum_k log2(1 + SINR_k).  Transmitter 2 observes agent 1's
binary power decision through a binary symmetric channel.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .coordination import (
    CoordinationProblem,
    baselines,
    optimize_payoff_causal,
    optimize_payoff_noncausal,
)
from .probability import Alphabet, CondPmf, JointPmf
from .simplexopt import OptConfig

SWEEP_HEADER = ["snr_db", "method", "payoff", "status"]
SWEEP_METHODS = ["costless", "noncausal", "causal", "full_power"]


@dataclass(frozen=True)
class PowerControlConfig:
    """Scenario parameters; defaults follow the benchmark configuration."""

    g_min: float = 0.1
    g_max: float = 2.0
    sigma2: float = 1.0
    p: tuple[float, float, float, float] = (0.5, 0.1, 0.1, 0.5)  # Pr[g=g_min]
    bsc_e: float = 0.05
    snr_db_list: tuple[float, ...] = tuple(range(0, 11))
    v_size: int = 10

    def __post_init__(self):
        if self.g_min <= 0 or self.g_max <= 0 or self.sigma2 <= 0:
            raise ValueError("gains and noise variance must be positive")
        if any(not 0 <= q <= 1 for q in self.p):
            raise ValueError("Bernoulli parameters must be in [0,1]")
        if not 0 <= self.bsc_e <= 0.5:
            raise ValueError("bsc_e must be in [0, 0.5]")
        object.__setattr__(self, "p", tuple(self.p))
        object.__setattr__(self, "snr_db_list", tuple(self.snr_db_list))

    @staticmethod
    def from_json_dict(obj: dict) -> "PowerControlConfig":
        return PowerControlConfig(**obj)


@dataclass(frozen=True)
class SweepRow:
    snr_db: float
    method: str
    payoff: float
    status: str = "ok"


def sinr(g_kk: float, g_jk: float, x_k: float, x_j: float, sigma2: float) -> float:
    """Signal-to-interference-plus-noise ratio at receiver k."""
    if min(g_kk, g_jk, x_k, x_j) < 0 or sigma2 <= 0:
        raise ValueError("gains/powers must be >= 0, sigma2 > 0")
    return g_kk * x_k / (sigma2 + g_jk * x_j)


def p_max_from_snr_db(snr_db: float, sigma2: float) -> float:
    return sigma2 * 10.0 ** (snr_db / 10.0)


def state_gains(config: PowerControlConfig, x0: int):
    """Decode a state index into (g11, g12, g21, g22).

    g11 occupies the most significant bit; bit value 0 means g_min.
    """
    bits = [(x0 >> (3 - k)) & 1 for k in range(4)]
    return tuple(config.g_min if b == 0 else config.g_max for b in bits)


def build_problem(config: PowerControlConfig, snr_db: float) -> CoordinationProblem:
    """Instantiate the scenario at one SNR point as a CoordinationProblem."""
    p_max = p_max_from_snr_db(snr_db, config.sigma2)
    powers = np.array([0.0, p_max])
    n0 = 16

    rho0 = np.zeros(n0)
    labels = []
    for x0 in range(n0):
        prob = 1.0
        for k in range(4):
            bit = (x0 >> (3 - k)) & 1
            prob *= config.p[k] if bit == 0 else 1.0 - config.p[k]
        rho0[x0] = prob
        g = state_gains(config, x0)
        labels.append("g" + "".join("L" if gv == config.g_min else "H" for gv in g))
    state_prior = JointPmf((Alphabet(n0, tuple(labels)),), rho0)

    w = np.zeros((n0, 2, 2))
    for x0 in range(n0):
        g11, g12, g21, g22 = state_gains(config, x0)
        for a in range(2):
            for b in range(2):
                x1p, x2p = powers[a], powers[b]
                s1 = sinr(g11, g21, x1p, x2p, config.sigma2)
                s2 = sinr(g22, g12, x2p, x1p, config.sigma2)
                w[x0, a, b] = np.log2(1.0 + s1) + np.log2(1.0 + s2)

    # agent 2 observes bit(x1) through a BSC; x0 and x2 do not enter
    e = config.bsc_e
    ch = np.zeros((n0, 2, 2, 2))
    ch[:, 0, :, 0] = 1.0 - e
    ch[:, 0, :, 1] = e
    ch[:, 1, :, 0] = e
    ch[:, 1, :, 1] = 1.0 - e
    act = Alphabet(2, ("off", "pmax"))
    channel = CondPmf((state_prior.axes[0], act, act), (Alphabet(2, ("0", "1")),), ch)
    return CoordinationProblem(state_prior, channel, w)


def snr_sweep(config: PowerControlConfig, seed: int = 0,
              cfg: OptConfig | None = None) -> list[SweepRow]:
    """Evaluate all four methods at every SNR point of the config."""
    if not config.snr_db_list:
        raise ValueError("snr_db_list must be nonempty")
    rows = []
    for i, snr_db in enumerate(config.snr_db_list):
        problem = build_problem(config, snr_db)
        costless, constant_pair = baselines(problem)
        _, _, causal_val = optimize_payoff_causal(problem)
        opt_cfg = cfg or OptConfig(seed=seed, outer_restarts=6, restarts=24)
        opt_cfg = OptConfig(**{**opt_cfg.__dict__, "seed": (seed << 8) | i})
        _, nc_val, rep = optimize_payoff_noncausal(
            problem, config.v_size, cfg=opt_cfg)
        full = constant_pair[(1, 1)]
        rows.append(SweepRow(snr_db, "costless", costless))
        rows.append(SweepRow(snr_db, "noncausal", nc_val, rep.status))
        rows.append(SweepRow(snr_db, "causal", causal_val))
        rows.append(SweepRow(snr_db, "full_power", full))
    return rows


def sweep_to_csv(rows: list[SweepRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for r in rows:
        writer.writerow([f"{r.snr_db:g}", r.method, f"{r.payoff:.12g}", r.status])
    return buf.getvalue()
