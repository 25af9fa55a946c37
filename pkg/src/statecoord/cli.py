"""Command-line entry point.

Subcommands bind the library operations to JSON/CSV files:

  check              feasibility of a target joint law (causal / non-causal)
  optimize           best implementable expected payoff
  sweep              power-control benchmark: payoff-vs-SNR CSV
  state-distortion   minimal expected distortion of state communication
  simulate           block-Markov codec Monte Carlo run
  stress-cardinality best constraint slack vs auxiliary alphabet size

Exit codes: 0 success / implementable; 2 malformed input; 3 target not
implementable; 4 state marginal mismatch; 5 rate region empty without
--force.  All randomness flows from --seed; identical inputs and seed give
byte-identical outputs.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import codec, coordination, power_control, state_comm
from .probability import CondPmf, InvalidDistribution, JointPmf
from .simplexopt import OptConfig

EXIT_OK = 0
EXIT_BAD_INPUT = 2
EXIT_NOT_IMPLEMENTABLE = 3
EXIT_WRONG_MARGINAL = 4
EXIT_INFEASIBLE_RATES = 5


class InputError(Exception):
    """Any malformed-input condition; mapped to exit code 2."""


def _load_json(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def _emit(obj: dict, out_path: str | None) -> None:
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)


def _joint(obj, what: str) -> JointPmf:
    try:
        return JointPmf.from_json_dict(obj)
    except (KeyError, ValueError, TypeError, InvalidDistribution) as exc:
        raise InputError(f"bad {what}: {exc}") from exc


def _cond(obj, what: str) -> CondPmf:
    try:
        return CondPmf.from_json_dict(obj)
    except (KeyError, ValueError, TypeError, InvalidDistribution) as exc:
        raise InputError(f"bad {what}: {exc}") from exc


def _coordination_problem(obj: dict) -> coordination.CoordinationProblem:
    try:
        prior = _joint(obj["state_prior"], "state_prior")
        channel = _cond(obj["channel"], "channel")
        payoff = np.asarray(obj["payoff"], dtype=float)
        return coordination.CoordinationProblem(prior, channel, payoff)
    except InputError:
        raise
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"bad problem file: {exc}") from exc


def _state_comm_problem(obj: dict) -> state_comm.StateCommProblem:
    try:
        prior = _joint(obj["state_prior"], "state_prior")
        channel = _cond(obj["channel"], "channel")
        dist = np.asarray(obj["distortion"], dtype=float)
        d_max = float(obj.get("d_max", dist.max() if dist.size else 0.0))
        return state_comm.StateCommProblem(
            prior, channel, dist, d_max,
            u_size=obj.get("u_size"), v_size=obj.get("v_size"))
    except InputError:
        raise
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"bad problem file: {exc}") from exc


def cmd_check(args) -> int:
    spec = _load_json(args.input)
    qbar = _joint(spec["qbar"] if "qbar" in spec else spec, "qbar")
    if qbar.probs.ndim != 3:
        raise InputError("qbar must be a joint over (x0, x1, x2)")
    prior = (_joint(spec["state_prior"], "state_prior")
             if isinstance(spec, dict) and "state_prior" in spec else None)
    if args.mode == "causal":
        try:
            ok = coordination.is_implementable_causal(
                qbar, tol=args.tol, state_prior=prior)
        except (ValueError, TypeError) as exc:
            raise InputError(str(exc)) from exc
        report = {"mode": "causal", "implementable": bool(ok),
                  "tol": args.tol}
        _emit(report, args.out)
        return EXIT_OK if ok else EXIT_NOT_IMPLEMENTABLE
    channel = _cond(spec["channel"], "channel")
    cfg = OptConfig(seed=args.seed)
    try:
        rep = coordination.is_implementable_noncausal(
            qbar, channel, args.v_size, tol=args.tol, cfg=cfg,
            state_prior=prior)
    except coordination.WrongMarginalError as exc:
        _emit({"mode": "noncausal", "error": str(exc)}, args.out)
        return EXIT_WRONG_MARGINAL
    report = rep.to_json_dict()
    report["mode"] = "noncausal"
    _emit(report, args.out)
    return EXIT_OK if rep.implementable else EXIT_NOT_IMPLEMENTABLE


def cmd_optimize(args) -> int:
    problem = _coordination_problem(_load_json(args.input))
    if args.mode == "causal":
        x2_star, policy, value = coordination.optimize_payoff_causal(problem)
        _emit({"mode": "causal", "value": value, "x2": x2_star,
               "policy": [int(p) for p in policy]}, args.out)
        return EXIT_OK
    cfg = OptConfig(seed=args.seed)
    qbar, value, rep = coordination.optimize_payoff_noncausal(
        problem, args.v_size, cfg=cfg)
    _emit({"mode": "noncausal", "value": value,
           "qbar": qbar.to_json_dict(),
           "feasibility": rep.to_json_dict()}, args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    obj = _load_json(args.input)
    try:
        config = power_control.PowerControlConfig.from_json_dict(obj)
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad sweep config: {exc}") from exc
    if not config.snr_db_list:
        raise InputError("snr_db_list is empty")
    rows = power_control.snr_sweep(config, seed=args.seed)
    text = power_control.sweep_to_csv(rows)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


_DIST_MODES = {
    "nc-c": state_comm.min_dist_nc_enc_c_dec,
    "nc-sc": state_comm.min_dist_nc_enc_sc_dec,
    "c-c": state_comm.min_dist_c_enc_c_dec,
    "c-sc": state_comm.min_dist_c_enc_sc_dec,
}


def cmd_state_distortion(args) -> int:
    problem = _state_comm_problem(_load_json(args.input))
    fn = _DIST_MODES[args.dist_mode]
    if args.dist_mode in ("nc-c", "nc-sc", "c-c"):
        rep = fn(problem, cfg=OptConfig(seed=args.seed))
    else:
        rep = fn(problem)
    out = rep.to_json_dict()
    out["mode_requested"] = args.dist_mode
    _emit(out, args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec = _load_json(args.input)
    try:
        problem = _state_comm_problem(spec["problem"])
        law = np.asarray(spec["law"], dtype=float)
        g = np.asarray(spec["g"], dtype=int)
        params_obj = dict(spec.get("params", {}))
        deltas = tuple(spec.get("deltas", (0.05, 0.05, 0.05)))
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"bad run spec: {exc}") from exc
    if law.ndim != 4:
        raise InputError("law must be a joint over (x0, u, v, x1)")

    laws = codec.make_codec_laws(problem, law, g)
    rate = codec.rate_region_check(codec._array_pmf(laws.q5), deltas)
    if not rate.feasible and not args.force:
        _emit({"error": "rate region empty",
               "rate_choice": rate.to_json_dict()}, args.out)
        return EXIT_INFEASIBLE_RATES
    params_obj.setdefault("R", rate.r if rate.feasible else 0.0)
    params_obj.setdefault("R_tilde", rate.r_tilde if rate.feasible else 0.0)
    params_obj.setdefault("seed", args.seed)
    try:
        params = codec.BlockCodeParams(**params_obj)
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad codec params: {exc}") from exc
    try:
        result = codec.run_simulation(problem, law, g, params,
                                      rate_choice=rate)
    except codec.CodebookSizeError as exc:
        raise InputError(str(exc)) from exc
    _emit(result.to_json_dict(), args.out)
    if args.csv:
        with open(args.csv, "w") as fh:
            fh.write(result.per_block_csv())
    return EXIT_OK


def cmd_stress_cardinality(args) -> int:
    spec = _load_json(args.input)
    qbar = _joint(spec["qbar"], "qbar")
    channel = _cond(spec["channel"], "channel")
    rows = coordination.cardinality_stress(
        qbar, channel, seed=args.seed, restarts=args.restarts,
        v_max=args.v_size if args.v_size else None)
    _emit({"slack_by_v": [{"v": v, "slack": s} for v, s in rows]}, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="statecoord",
        description="coordination and state-communication toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, v_size_default=None):
        p.add_argument("input", help="input JSON file")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", default=None, help="also write JSON here")
        p.add_argument("--threads", type=int, default=0,
                       help="cap worker threads (best effort)")
        p.add_argument("--v-size", dest="v_size", type=int,
                       default=v_size_default)

    p = sub.add_parser("check", help="implementability of a target law")
    common(p, v_size_default=8)
    p.add_argument("--mode", choices=["causal", "noncausal"],
                   default="noncausal")
    p.add_argument("--tol", type=float, default=1e-6)
    p.set_defaults(fn=cmd_check)

    p = sub.add_parser("optimize", help="maximize expected payoff")
    common(p, v_size_default=8)
    p.add_argument("--mode", choices=["causal", "noncausal"],
                   default="noncausal")
    p.set_defaults(fn=cmd_optimize)

    p = sub.add_parser("sweep", help="power-control payoff-vs-SNR CSV")
    common(p)
    p.set_defaults(fn=cmd_sweep)

    p = sub.add_parser("state-distortion", help="minimal expected distortion")
    common(p)
    p.add_argument("--mode", dest="dist_mode",
                   choices=sorted(_DIST_MODES), default="nc-c")
    p.set_defaults(fn=cmd_state_distortion)

    p = sub.add_parser("simulate", help="block-Markov codec Monte Carlo")
    common(p)
    p.add_argument("--force", action="store_true",
                   help="run even if the rate region is empty")
    p.add_argument("--csv", default=None, help="per-block event CSV path")
    p.set_defaults(fn=cmd_simulate)

    p = sub.add_parser("stress-cardinality",
                       help="constraint slack vs auxiliary alphabet size")
    common(p)
    p.add_argument("--restarts", type=int, default=64)
    p.set_defaults(fn=cmd_stress_cardinality)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_BAD_INPUT
    except InvalidDistribution as exc:
        sys.stderr.write(f"error: invalid distribution: {exc}\n")
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
