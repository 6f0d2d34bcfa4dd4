"""Command-line entry points.

    rwabounds run --example {ex1|ex2|ex3|redfield} --config cfg.json --out out.csv
    rwabounds bounds eval --inputs inputs.json
    rwabounds norms diamond --choi choi.json --seed 7

``run`` sweeps the named experiment and writes the CSV
(omega,kappa,exact_distance,bound,equation_tag); a dominance violation
aborts with a nonzero exit code.  ``bounds eval`` evaluates the closed-form
bound for scalar inputs given as JSON.  ``norms diamond`` reads a
coefficient (Choi) matrix from JSON ({"dim": d, "coefficients": [[[re,
im], ...], ...]}) and reports the numeric diamond norm and its bracket.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .bounds import BoundInputs, theorem41_bound
from .experiments import DominanceError, ExperimentConfig, rows_to_csv, run_experiment
from .norms import diamond_numeric, diamond_sandwich, superop_from_choi


def _cmd_run(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    if args.example != config.example:
        raise SystemExit(
            f"--example {args.example} does not match config example {config.example!r}"
        )
    try:
        rows = run_experiment(config)
    except DominanceError as exc:
        print(f"dominance violation: {exc}", file=sys.stderr)
        return 2
    csv_text = rows_to_csv(rows)
    if args.out == "-":
        sys.stdout.write(csv_text)
    else:
        with open(args.out, "w") as fh:
            fh.write(csv_text)
        print(f"wrote {len(rows)} rows to {args.out}")
    return 0


def _cmd_bounds_eval(args) -> int:
    with open(args.inputs) as fh:
        data = json.load(fh)
    peripheral = bool(data.pop("peripheral", False))
    t = data.pop("t", None)
    p_coeffs = data.pop("p_coeffs", None)
    eta = data.pop("eta", None)
    inputs = BoundInputs(
        D=float(data["D"]),
        Dbar=float(data["Dbar"]),
        S_sup=float(data["S_sup"]),
        eta=np.inf if eta in (None, "inf") else float(eta),
        R=float(data.get("R", 0.0)),
        T=float(data["T"]),
        kappa=float(data.get("kappa", 1.0)),
        contractive=bool(data.get("contractive", False)),
        s_sup_source=data.get("s_sup_source", "analytic"),
    )
    report = theorem41_bound(inputs, peripheral_variant=peripheral, t=t, p_coeffs=p_coeffs)
    print(json.dumps({"value": report.value, "equation_tag": report.equation_tag}))
    return 0


def _cmd_norms_diamond(args) -> int:
    with open(args.choi) as fh:
        data = json.load(fh)
    c = np.array([[complex(re, im) for re, im in row] for row in data["coefficients"]])
    d = int(data.get("dim", round(np.sqrt(c.shape[0]))))
    if c.shape != (d * d, d * d):
        raise SystemExit(f"coefficient matrix must be {d * d} x {d * d}")
    superop = superop_from_choi(c)
    value = diamond_numeric(superop, seed=args.seed)
    lower, upper = diamond_sandwich(superop)
    print(json.dumps({"diamond_numeric": value, "lower": lower, "upper": upper}))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rwabounds",
        description="Sweep worked examples and evaluate approximation-error bounds",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an example sweep and emit CSV")
    run_p.add_argument("--example", required=True, choices=["ex1", "ex2", "ex3", "redfield"])
    run_p.add_argument("--config", required=True, help="JSON config file")
    run_p.add_argument("--out", required=True, help="output CSV path, or - for stdout")
    run_p.set_defaults(func=_cmd_run)

    bounds_p = sub.add_parser("bounds", help="bound evaluation utilities")
    bounds_sub = bounds_p.add_subparsers(dest="bounds_command", required=True)
    eval_p = bounds_sub.add_parser("eval", help="evaluate the closed-form bound")
    eval_p.add_argument("--inputs", required=True, help="JSON file of scalar inputs")
    eval_p.set_defaults(func=_cmd_bounds_eval)

    norms_p = sub.add_parser("norms", help="norm utilities")
    norms_sub = norms_p.add_subparsers(dest="norms_command", required=True)
    diamond_p = norms_sub.add_parser("diamond", help="numeric diamond norm from a Choi file")
    diamond_p.add_argument("--choi", required=True, help="JSON file with the coefficient matrix")
    diamond_p.add_argument("--seed", type=int, required=True)
    diamond_p.set_defaults(func=_cmd_norms_diamond)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
