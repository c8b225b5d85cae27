"""Command line entry point: ``rkbs-mirror run|baseline|check``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError, NumericalError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; here 2 means numerical failure
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rkbs-mirror", description="Mirror descent on p-norm RKBS: experiments and checks.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a p-sweep experiment from a JSON config")
    run.add_argument("config", help="path to a JSON config file")
    run.add_argument("--out", dest="output_dir", help="output directory")
    run.add_argument("--seed", type=int)
    run.add_argument("--p", dest="p_values", type=_float_list, help="comma separated exponents")
    run.add_argument("--eta", type=_float_list, help="step size or comma separated grid")
    run.add_argument("--iters", dest="T", type=int, help="iteration budget T")
    run.add_argument("--mode", choices=["unreg", "reg", "proj"])
    run.add_argument("--lambda", dest="lam", type=float, help="regularization weight")
    run.add_argument("--radius", type=float, help="p-norm ball radius (proj mode)")
    run.add_argument("--inverse", choices=["exact", "alg1"])
    run.add_argument("--kernel", choices=["lab", "gaussian"])

    base = sub.add_parser("baseline", help="Gaussian direct-solve baseline only")
    base.add_argument("config")
    base.add_argument("--out", dest="output_dir")

    chk = sub.add_parser("check", help="run the invariant self-test")
    chk.add_argument("--seed", type=int, default=0)
    return parser


def _overrides(args) -> dict:
    keys = ("output_dir", "seed", "p_values", "eta", "T", "mode", "lam", "radius", "inverse", "kernel")
    out = {k: getattr(args, k, None) for k in keys}
    if out["eta"] is not None and len(out["eta"]) == 1:
        out["eta"] = out["eta"][0]
    return out


def _cmd_run(args) -> int:
    from .experiment import load_config, run_experiment

    config = load_config(args.config, **_overrides(args))
    report = run_experiment(config)
    n = report.dataset.n
    for run in report.runs:
        print(f"p={run.p:g} eta={run.eta:.6g} final_mse={run.final_loss / n:.6g} "
              f"steps={run.result.steps} stop={run.result.converged_reason.value}")
    print(f"baseline sigma2={report.baseline['sigma2']:g} mse={report.baseline['loss'] / n:.6g}")
    print(f"report: {report.output_dir / 'report.json'}")
    return EXIT_OK


def _cmd_baseline(args) -> int:
    from .experiment import load_config, run_baseline

    config = load_config(args.config, output_dir=args.output_dir)
    doc = run_baseline(config)
    print(json.dumps({k: doc[k] for k in ("sigma2", "loss", "mse")}))
    return EXIT_OK


def _cmd_check(args) -> int:
    from .checks import run_checks

    results = run_checks(args.seed)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_NUMERICAL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "baseline": _cmd_baseline, "check": _cmd_check}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
