"""Command-line interface.

Every run prints a JSON manifest to stdout: subcommand, input paths, echoed
parameters, package version, wall-clock duration, and a result summary.
Result files requested with --output are deterministic for fixed inputs
(matrices as 17-significant-digit CSV, structured results as sorted JSON).
Exit codes: 0 success, 1 usage/data errors, 2 valid run whose certificate or
feasibility check fails.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
import time

import numpy as np

from netcontract import __version__
from netcontract import fhn
from netcontract.balancing import balance, imbalance
from netcontract.hierarchy import (
    BlockNorm,
    BlockPartition,
    block_bound_matrix,
    synthesize_gains,
)
from netcontract.matrixio import read_matrix, read_vector, write_matrix_csv
from netcontract.metzler import IRREDUCIBLE, classify, norm_kind, spectral_abscissa
from netcontract.stabilization import minimal_effort_stabilize

FEASIBILITY_TOL = 1e-8


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


def _build_parser() -> _Parser:
    p = _Parser(prog="netcontract",
                description="Contraction certificates and minimum-effort gains "
                            "for networked dynamical systems.")
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("balance", help="balance a Metzler matrix by diagonal similarity")
    b.add_argument("--input", required=True, help="matrix file (Matrix Market or CSV)")
    b.add_argument("--tol", type=float, default=1e-10)
    b.add_argument("--output", "--out", dest="output", help="write result JSON here")
    b.add_argument("--balanced-output", dest="balanced_output",
                   help="write the balanced matrix as CSV here")

    s = sub.add_parser("stabilize", help="minimum-effort diagonal stabilization")
    s.add_argument("--input", required=True, help="matrix file (Matrix Market or CSV)")
    s.add_argument("--weights", help="weight vector file (default: all ones)")
    s.add_argument("--target", type=float, required=True,
                   help="target spectral abscissa of the closed loop")
    s.add_argument("--tol", type=float, default=1e-10)
    s.add_argument("--output", "--out", dest="output", help="write result JSON here")

    bd = sub.add_parser("bound", help="block-reduced Metzler bound of a matrix")
    bd.add_argument("--input", required=True, help="matrix file (Matrix Market or CSV)")
    bd.add_argument("--partition", required=True,
                    help="comma-separated block sizes, e.g. 2,2,3")
    bd.add_argument("--norms",
                    help="comma-separated per-block norms from {1,2,inf} "
                         "(default: all 2)")
    bd.add_argument("--output", "--out", dest="output",
                    help="write the bound matrix as CSV here")

    sy = sub.add_parser("synthesize", help="gains for a reduced Jacobian bound")
    sy.add_argument("--jhat", required=True,
                    help="bound matrix file (Matrix Market or CSV)")
    sy.add_argument("--weights", help="weight vector file (default: all ones)")
    sy.add_argument("--rate", type=float, required=True,
                    help="required contraction rate eta > 0")
    sy.add_argument("--tol", type=float, default=1e-10)
    sy.add_argument("--output", "--out", dest="output", help="write result JSON here")

    f = sub.add_parser("fhn", help="FitzHugh-Nagumo network experiments")
    fsub = f.add_subparsers(dest="fhn_command", required=True)

    fs = fsub.add_parser("simulate", help="integrate the closed-loop network")
    fs.add_argument("--config", required=True, help="network config JSON")
    fs.add_argument("--output", "--out", dest="output", help="write trajectory CSV here")
    fs.add_argument("--seed", type=int, help="override the config seed")
    fs.add_argument("--t-end", type=float, dest="t_end", help="override the horizon")
    fs.add_argument("--step", type=float, help="override the integration step")

    fc = fsub.add_parser("certify", help="check the contraction certificate")
    fc.add_argument("--config", required=True, help="network config JSON")
    fc.add_argument("--output", "--out", dest="output", help="write certificate JSON here")

    fg = fsub.add_parser("gains", help="minimum-effort gains for the config's rate")
    fg.add_argument("--config", required=True, help="network config JSON")
    fg.add_argument("--output", "--out", dest="output", help="write gains JSON here")
    return p


def _write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_weights(path, n: int) -> np.ndarray:
    if path is None:
        return np.ones(n)
    return read_vector(path)


def _cmd_balance(args):
    M = read_matrix(args.input)
    res = balance(M, tol=args.tol)
    payload = {
        "d": res.d.tolist(),
        "iterations": res.iterations,
        "residual": res.residual,
        "clamped": res.clamped,
    }
    if args.output:
        _write_json(args.output, payload)
    if args.balanced_output:
        write_matrix_csv(args.balanced_output, res.balanced)
    result = dict(payload)
    result["output"] = args.output
    result["balanced_output"] = args.balanced_output
    return ({"input": args.input}, {"tol": args.tol}, result, 0)


def _cmd_stabilize(args):
    M = read_matrix(args.input)
    w = _read_weights(args.weights, M.shape[0])
    res = minimal_effort_stabilize(M, w, args.target, tol=args.tol)
    payload = {
        "ell_star": res.ell_star.tolist(),
        "d_star": res.d_star.tolist(),
        "target": res.target,
        "achieved": res.achieved,
        "cost": res.cost,
        "positive_gains": res.positive_gains,
        "eigen_residual": res.eigen_residual,
        "feasibility_residual": res.feasibility_residual,
    }
    if args.output:
        _write_json(args.output, payload)
    result = dict(payload)
    result["output"] = args.output
    code = 0 if res.feasibility_residual <= FEASIBILITY_TOL else 2
    return ({"input": args.input, "weights": args.weights},
            {"target": args.target, "tol": args.tol}, result, code)


def _parse_partition(args, n: int) -> BlockPartition:
    try:
        sizes = tuple(int(s) for s in args.partition.split(","))
    except ValueError:
        raise ValueError(f"cannot parse partition {args.partition!r}") from None
    if args.norms:
        kinds = [norm_kind(k) for k in args.norms.split(",")]
    else:
        kinds = ["two"] * len(sizes)
    if len(kinds) != len(sizes):
        raise ValueError(f"{len(kinds)} norms given for {len(sizes)} blocks")
    part = BlockPartition(sizes, tuple(BlockNorm(k) for k in kinds))
    if part.total != n:
        raise ValueError(f"partition covers {part.total} indices, matrix has {n}")
    return part


def _cmd_bound(args):
    M = read_matrix(args.input)
    part = _parse_partition(args, M.shape[0])
    B = block_bound_matrix(M, part)
    if args.output:
        write_matrix_csv(args.output, B)
    abscissa = None
    if classify(B).kind == IRREDUCIBLE:
        abscissa = spectral_abscissa(B)
    result = {
        "b": B.tolist(),
        "abscissa": abscissa,
        "imbalance": imbalance(B),
        "output": args.output,
    }
    return ({"input": args.input},
            {"partition": args.partition, "norms": args.norms}, result, 0)


def _cmd_synthesize(args):
    J = read_matrix(args.jhat)
    w = _read_weights(args.weights, J.shape[0])
    res = synthesize_gains(J, w, args.rate, tol=args.tol)
    payload = {
        "v_star": res.v_star.tolist(),
        "rate": res.rate,
        "cost": res.cost,
        "closed_loop_abscissa": res.closed_loop_abscissa,
    }
    if args.output:
        _write_json(args.output, payload)
    result = dict(payload)
    result["output"] = args.output
    ok = abs(res.closed_loop_abscissa + res.rate) <= FEASIBILITY_TOL * (1.0 + res.rate)
    return ({"jhat": args.jhat, "weights": args.weights},
            {"rate": args.rate, "tol": args.tol}, result, 0 if ok else 2)


def _cmd_fhn_simulate(args):
    config = fhn.load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.t_end is not None:
        overrides["t_end"] = args.t_end
    if args.step is not None:
        overrides["step"] = args.step
    if overrides:
        config = dataclasses.replace(config, **overrides)
    traj = fhn.simulate(config)
    if args.output:
        fhn.write_trajectory_csv(args.output, traj)
    result = {
        "n_neurons": traj.n_neurons,
        "n_samples": int(traj.times.shape[0]),
        "t_end": float(traj.times[-1]),
        "final_state": traj.states[-1].tolist(),
        "output": args.output,
    }
    params = {"seed": config.seed, "t_end": config.t_end, "step": config.step}
    return ({"config": args.config}, params, result, 0)


def _certificate_payload(cert: fhn.ContractionCertificate) -> dict:
    return {
        "eta_requested": cert.eta_requested,
        "eta_certified": cert.eta_certified,
        "mu_scaled": cert.mu_scaled,
        "passed": cert.passed,
        "checks": [{"name": c.name, "passed": c.passed, "residual": c.residual}
                   for c in cert.checks],
    }


def _cmd_fhn_certify(args):
    config = fhn.load_config(args.config)
    cert = fhn.certify(config)
    payload = _certificate_payload(cert)
    if args.output:
        _write_json(args.output, payload)
    result = dict(payload)
    result["output"] = args.output
    return ({"config": args.config}, {"eta": config.eta}, result,
            0 if cert.passed else 2)


def _cmd_fhn_gains(args):
    config = fhn.load_config(args.config)
    ell = fhn.resolved_gains(config)
    cert = fhn.certify(config)
    payload = {
        "gains": ell.tolist(),
        "eta": config.eta,
        "certificate": _certificate_payload(cert),
    }
    if args.output:
        _write_json(args.output, payload)
    result = dict(payload)
    result["output"] = args.output
    return ({"config": args.config}, {"eta": config.eta}, result, 0)


_HANDLERS = {
    "balance": _cmd_balance,
    "stabilize": _cmd_stabilize,
    "bound": _cmd_bound,
    "synthesize": _cmd_synthesize,
    ("fhn", "simulate"): _cmd_fhn_simulate,
    ("fhn", "certify"): _cmd_fhn_certify,
    ("fhn", "gains"): _cmd_fhn_gains,
}


def dispatch(argv) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(list(argv))
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return 0 if exc.code in (0, None) else int(exc.code)
    key = args.command if args.command != "fhn" else ("fhn", args.fhn_command)
    handler = _HANDLERS[key]
    name = key if isinstance(key, str) else " ".join(key)
    start = time.perf_counter()
    try:
        inputs, params, result, code = handler(args)
    except (ValueError, RuntimeError, OSError, KeyError, json.JSONDecodeError) as exc:
        detail = f"missing field {exc}" if isinstance(exc, KeyError) else str(exc)
        print(f"error: {detail}", file=sys.stderr)
        return 1
    manifest = {
        "subcommand": name,
        "inputs": inputs,
        "params": params,
        "version": __version__,
        "duration_s": round(time.perf_counter() - start, 6),
        "result": result,
    }
    print(json.dumps(manifest, indent=2, sort_keys=True))
    return code


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
