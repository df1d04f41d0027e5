"""Command-line entry point: ``qsl-lab {simulate,qsl,scan,classify,models}``.

Exit status is 0 on success, 1 for bad input and 2 for numerical failures.
"""
import argparse
import json
import sys

from . import __version__
from .divisibility import DEFAULT_WINDOW, classify
from .errors import DomainError, NumericalError
from .qsl import qsl_ratio
from .rates import BUILTIN_MODELS, build_model, rates_from_table, read_rate_table
from .scan import ScanConfig, load_config, qsl_surface_scan, trajectory_panel, write_metadata


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _model_args(p):
    p.add_argument("--model", help=f"built-in model: {', '.join(BUILTIN_MODELS)}")
    p.add_argument("--rates-csv", metavar="PATH", help="tabulated rates (t,gamma1,gamma2,gamma3[,omega])")
    p.add_argument("--nu", type=float)
    p.add_argument("--omega", type=float)
    p.add_argument("--k", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--config", metavar="PATH", help="flat TOML file; flags override it")


def _parser():
    parser = _Parser(prog="qsl-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="trajectory panel as CSV")
    _model_args(p)
    p.add_argument("--a", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--nodes", type=int)
    p.add_argument("--output", metavar="PATH")

    p = sub.add_parser("qsl", help="speed-limit report for one (a, tau) as JSON")
    _model_args(p)
    p.add_argument("--a", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--nodes", type=int)

    p = sub.add_parser("scan", help="(a, tau) surface as CSV")
    _model_args(p)
    p.add_argument("--a-count", type=int)
    p.add_argument("--tau-count", type=int)
    p.add_argument("--tau-max", type=float)
    p.add_argument("--rtol", type=float)
    p.add_argument("--atol", type=float)
    p.add_argument("--threads", type=int)
    p.add_argument("--output", metavar="PATH")
    p.add_argument("--metadata", metavar="PATH", help="write config, verdict and provenance as JSON")

    p = sub.add_parser("classify", help="divisibility verdict as JSON")
    _model_args(p)
    p.add_argument("--horizon", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--borderline", choices=("strict", "derivative"))

    sub.add_parser("models", help="list built-in models")
    return parser


def _settings(args):
    """Config-file values overlaid with every flag that was given."""
    values = load_config(args.config) if getattr(args, "config", None) else {}
    for key, value in vars(args).items():
        if key not in ("command", "config") and value is not None:
            values[key] = value
    return values


def _model(values):
    if values.get("rates_csv"):
        return rates_from_table(read_rate_table(values["rates_csv"]))
    if not values.get("model"):
        raise DomainError(f"--model is required; choose from {', '.join(BUILTIN_MODELS)}")
    return build_model(values["model"], **{p: values.get(p) for p in ("nu", "omega", "k", "gamma")})


def _require(values, *names):
    missing = [n for n in names if values.get(n) is None]
    if missing:
        raise DomainError(f"missing required settings: {', '.join('--' + m for m in missing)}")


def _open_output(path):
    return open(path, "w", newline="", encoding="utf-8") if path else sys.stdout


def _run(args):
    if args.command == "models":
        for name, (_, params, doc) in BUILTIN_MODELS.items():
            print(f"{name:18s} params: {', '.join(params) or '-':10s} {doc}")
        return

    values = _settings(args)
    model = _model(values)

    if args.command == "classify":
        verdict = classify(
            model,
            T=values.get("horizon", DEFAULT_WINDOW),
            samples=values.get("samples", 10_000),
            borderline=values.get("borderline", "strict"),
        )
        print(verdict.to_json())
    elif args.command == "qsl":
        _require(values, "a", "tau")
        print(qsl_ratio(model, values["a"], values["tau"], n_nodes=values.get("nodes", 2001)).to_json())
    elif args.command == "simulate":
        _require(values, "a", "tau")
        panel = trajectory_panel(model, values["a"], values["tau"], n_nodes=values.get("nodes", 2001))
        fh = _open_output(values.get("output"))
        try:
            panel.write_csv(fh)
        finally:
            if fh is not sys.stdout:
                fh.close()
    elif args.command == "scan":
        keys = {"model", "nu", "omega", "k", "gamma", "a_count", "tau_count", "tau_max", "rtol", "atol", "output", "threads"}
        cfg = ScanConfig.from_mapping({k: v for k, v in values.items() if k in keys and v is not None} | {"model": values.get("model", "table")})
        result = qsl_surface_scan(cfg, model=model)
        fh = _open_output(cfg.output)
        try:
            result.write_csv(fh)
        finally:
            if fh is not sys.stdout:
                fh.close()
        if values.get("metadata"):
            write_metadata(result, values["metadata"])


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        _run(args)
    except DomainError as exc:
        print(f"qsl-lab: error: {exc}", file=sys.stderr)
        return 1
    except NumericalError as exc:
        print(f"qsl-lab: numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"qsl-lab: error: {exc}", file=sys.stderr)
        return 1
    return 0


cli_main = main

if __name__ == "__main__":
    sys.exit(main())
