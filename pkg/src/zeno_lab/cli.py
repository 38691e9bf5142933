"""Command-line entry point ``zeno-lab``.

Exit codes: 0 success, 1 validation error, 2 numerical guard trip.
"""
import argparse
import json
import logging
import sys

import numpy as np

from . import engine
from .exceptions import NumericalGuardError, ValidationError
from .functions import BUILTIN_IDS, builtin, cutoff_regularize, IntervalUnion, verify_admissible
from .harness import load_config, run_experiment
from .models import ModelSpec, describe_model, momentum_circle_model, momentum_test_vectors

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 1, 2


def _cmd_run(args):
    config = load_config(args.config)
    if args.output:
        config.output = args.output
    records, summary = run_experiment(config)
    print(f"model {summary['model']['name']}: {summary['cells']} cells -> {config.output}")
    for fit in summary["rate_fits"]:
        if fit["fitted"]:
            print(f"  {fit['function_id']:<22} t={fit['t']:<8g} beta={fit['beta']:.4f} r2={fit['r_squared']:.4f}")
        else:
            print(f"  {fit['function_id']:<22} t={fit['t']:<8g} no fit (converged or too few points)")
    b = summary["bound"]
    if b["passed"] or b["failed"]:
        print(f"  bound certification: {b['passed']} passed, {b['failed']} failed")
    if summary["cells_with_notes"]:
        print(f"  {summary['cells_with_notes']} cells carry notes (see records.json)")
    return EXIT_OK


def _cmd_functions_list(args):
    for fid in BUILTIN_IDS:
        print(fid)
    return EXIT_OK


def _cmd_functions_verify(args):
    spec = builtin(args.id)
    if args.cutoff:
        spec = cutoff_regularize(spec, IntervalUnion.from_json(json.loads(args.cutoff)))
    report = verify_admissible(spec)
    d = report.to_dict()
    print(f"function={spec.id}")
    print(f"admissible={str(report.admissible).lower()} (on grid)")
    print(f"im_nonpositive={str(report.im_nonpositive).lower()} (on grid)")
    print(f"bounded_by_one={str(report.bounded_by_one).lower()} value_one_at_zero={str(report.value_one_at_zero).lower()}")
    dz = report.derivative_at_zero
    print(f"derivative_at_zero={dz.real:.3e}{dz.imag:+.12f}i")
    if d["violating_point_count"]:
        print(f"violating_points={d['violating_point_count']} first={d['violating_points'][0]:.6g}")
    return EXIT_OK


def _cmd_models_describe(args):
    try:
        data = json.loads(args.spec)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"--spec is not valid JSON: {exc}") from exc
    model = ModelSpec.from_dict(data).build()
    for key, value in describe_model(model).items():
        print(f"{key}={value}")
    return EXIT_OK


def _cmd_counterexample(args):
    model = momentum_circle_model(args.n)
    vectors = momentum_test_vectors(model, args.t)
    out = engine.counterexample_run(model, args.t, args.steps, vectors)
    print(f"model={model.name} window=[{model.meta['window'][0]:.6g}, {model.meta['window'][1]:.6g}] t={args.t:g} steps={args.steps}")
    print(f"identity_residual={out.identity_residual:.3e}")
    print(f"limit_residual={out.limit_residual:.3e}")
    print(f"contraction_witness={out.contraction_witness:.6f}")
    print(f"interior_norm={out.norms[1]:.12f}")
    print(f"note: {out.note}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="zeno-lab", description="Finite-dimensional Zeno product formula laboratory")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a sweep from a JSON config")
    p.add_argument("--config", required=True)
    p.add_argument("--output", help="override the config's output directory")
    p.set_defaults(func=_cmd_run)

    pf = sub.add_parser("functions", help="list or verify builtin functions")
    fsub = pf.add_subparsers(dest="action", required=True)
    fsub.add_parser("list").set_defaults(func=_cmd_functions_list)
    pv = fsub.add_parser("verify")
    pv.add_argument("--id", required=True)
    pv.add_argument("--cutoff", help='interval list as JSON, e.g. "[[0, 3.14]]"')
    pv.set_defaults(func=_cmd_functions_verify)

    pm = sub.add_parser("models", help="inspect models")
    msub = pm.add_subparsers(dest="action", required=True)
    pd = msub.add_parser("describe")
    pd.add_argument("--spec", required=True, help="inline JSON model spec")
    pd.set_defaults(func=_cmd_models_describe)

    pc = sub.add_parser("counterexample", help="momentum-operator counterexample")
    pc.add_argument("--n", type=int, required=True, help="grid size (power of two >= 64)")
    pc.add_argument("--t", type=float, required=True)
    pc.add_argument("--steps", type=int, default=1024, help="interlaced steps (default 1024)")
    pc.set_defaults(func=_cmd_counterexample)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_VALIDATION
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (NumericalGuardError, np.linalg.LinAlgError) as exc:
        print(f"numerical guard: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValidationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
