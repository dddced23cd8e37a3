"""Command-line front end.

Subcommands:
  simulate       run a config, write decay.csv and metadata.json
  fit            fit a decay.csv, write fit.json, print a summary line
  check-channel  print the worst-vs-average loss bound report for a config's noise

Exit codes: 0 when the pipeline ran (fit warnings and flags are data, not
failures), 1 for usage or config errors, 2 for I/O errors.
"""

import argparse
import json
import math
import os
import sys
from dataclasses import asdict
from importlib import resources

from . import __version__
from .analysis import (
    FLAG_B_MINUS_A_NEGATIVE,
    FLAG_PLATEAU,
    fit_loss_decay,
    fit_rb_decay,
    plateau_test,
    prop1_check,
)
from .config import ConfigError, parse_config
from .protocol import read_decay_csv, run_protocol

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2

_MIN_PLATEAU_POINTS = 8


class _Parser(argparse.ArgumentParser):
    """argparse with usage errors mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _fail(code: int, message: str) -> int:
    print(f"lossbench: error: {message}", file=sys.stderr)
    return code


def _load_config_text(name: str) -> str:
    """Read a config from the filesystem, falling back to bundled configs."""
    if os.path.exists(name):
        with open(name) as fh:
            return fh.read()
    if os.sep not in name and "/" not in name:
        for candidate in (name, name + ".config"):
            ref = resources.files("lossbench").joinpath("configs", candidate)
            if ref.is_file():
                return ref.read_text()
    raise FileNotFoundError(f"config not found: {name}")


def _config_arg(args) -> str:
    positional = getattr(args, "config", None)
    flagged = getattr(args, "config_flag", None)
    if (positional is None) == (flagged is None):
        raise SystemExit(
            _fail(EXIT_USAGE, "give a config path (positional or --config, not both)")
        )
    return positional if positional is not None else flagged


def _parse_run_config(args):
    name = _config_arg(args)
    try:
        text = _load_config_text(name)
    except FileNotFoundError as exc:
        raise SystemExit(_fail(EXIT_USAGE, str(exc))) from None
    except OSError as exc:
        raise SystemExit(_fail(EXIT_IO, f"cannot read {name}: {exc}")) from None
    try:
        return parse_config(text, seed_override=getattr(args, "seed", None))
    except ConfigError as exc:
        for line in exc.errors:
            print(f"lossbench: config error: {line}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE) from None


def _write_text(path: str, content: str) -> None:
    with open(path, "w") as fh:
        fh.write(content)


def _json_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _cmd_simulate(args) -> int:
    rc = _parse_run_config(args)
    out_dir = args.out or rc.output_dir or "."
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot create {out_dir}: {exc}")

    ds = run_protocol(rc.protocol)
    metadata = {
        "tool": "lossbench",
        "version": __version__,
        "config_fingerprint": rc.protocol.fingerprint(),
        "master_seed": rc.seed,
        "gateset": rc.gateset_name,
        "gateset_labels": list(rc.protocol.gateset.labels),
        "dim": rc.protocol.gateset.dim,
        "noise_type": rc.noise_type,
        "resolved_theta": rc.resolved_theta,
        "variant": rc.protocol.variant,
        "m_grid": list(rc.protocol.m_grid),
        "n_sequences": rc.protocol.n_sequences,
        "shots": "exact" if rc.protocol.shots is None else rc.protocol.shots,
    }
    csv_path = os.path.join(out_dir, "decay.csv")
    meta_path = os.path.join(out_dir, "metadata.json")
    try:
        ds.to_csv(csv_path)
        _write_text(meta_path, _json_dumps(metadata))
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot write outputs: {exc}")
    print(f"wrote {csv_path} ({len(ds.m_values)} rows) and {meta_path}")
    return EXIT_OK


def _rb_flags(fit) -> list:
    b_minus_a = fit.B_hat - fit.A_hat
    var = fit.covariance[0, 0] + fit.covariance[1, 1] - 2.0 * fit.covariance[0, 1]
    sigma = max(math.sqrt(max(var, 0.0)), 1e-12)
    return [FLAG_B_MINUS_A_NEGATIVE] if b_minus_a / sigma < -3.0 else []


def _cmd_fit(args) -> int:
    try:
        ds = read_decay_csv(args.csv)
    except FileNotFoundError:
        return _fail(EXIT_USAGE, f"CSV not found: {args.csv}")
    except ValueError as exc:
        return _fail(EXIT_USAGE, str(exc))
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot read {args.csv}: {exc}")

    try:
        if args.model == "loss":
            fit = fit_loss_decay(ds)
            plateau = (
                plateau_test(ds, fit) if len(ds.m_values) >= _MIN_PLATEAU_POINTS else None
            )
            flags = [FLAG_PLATEAU] if plateau is not None and plateau.flagged else []
            report = {
                "S_hat": fit.S_hat,
                "S_stderr": fit.stderr_S,
                "B0_hat": fit.B0_hat,
                "B0_stderr": fit.stderr_B0,
                "chi2_per_dof": fit.chi2_per_dof,
                "converged": fit.converged,
                "n_iterations": fit.n_iterations,
                "flags": flags,
                "plateau": None if plateau is None else asdict(plateau),
            }
            summary = (
                f"S_hat = {fit.S_hat:.6f} +/- {fit.stderr_S:.6f} "
                f"(chi2/dof = {fit.chi2_per_dof:.3f})"
            )
        else:
            fit = fit_rb_decay(ds)
            flags = _rb_flags(fit)
            report = {
                "A_hat": fit.A_hat,
                "A_stderr": fit.stderr_A,
                "B_hat": fit.B_hat,
                "B_stderr": fit.stderr_B,
                "p_hat": fit.p_hat,
                "p_stderr": fit.stderr_p,
                "chi2_per_dof": fit.chi2_per_dof,
                "converged": fit.converged,
                "n_iterations": fit.n_iterations,
                "flags": flags,
            }
            summary = (
                f"p_hat = {fit.p_hat:.6f} +/- {fit.stderr_p:.6f} "
                f"(chi2/dof = {fit.chi2_per_dof:.3f})"
            )
    except ValueError as exc:
        return _fail(EXIT_USAGE, str(exc))

    out_dir = args.out or "."
    try:
        os.makedirs(out_dir, exist_ok=True)
        _write_text(os.path.join(out_dir, "fit.json"), _json_dumps(report))
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot write fit.json: {exc}")
    print(summary)
    return EXIT_OK


def _cmd_check_channel(args) -> int:
    rc = _parse_run_config(args)
    report = prop1_check(rc.protocol.noise)
    payload = {
        "dim": rc.protocol.noise.dim,
        "avg_loss": report.avg_loss,
        "worst_loss": report.worst_loss,
        "bound": report.bound,
        "slack": report.slack,
        "satisfied": report.satisfied,
        "complement_survival": report.complement_survival,
    }
    print(_json_dumps(payload), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="lossbench",
        description="Randomized-sequence loss-rate characterization toolkit.",
    )
    parser.add_argument("--version", action="version", version=f"lossbench {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a config and write decay.csv")
    sim.add_argument("config", nargs="?", help="config path or bundled config name")
    sim.add_argument("--config", dest="config_flag", metavar="PATH", help="config path")
    sim.add_argument("--seed", type=int, help="override the config's master seed")
    sim.add_argument("--out", metavar="DIR", help="output directory")
    sim.set_defaults(func=_cmd_simulate)

    fit = sub.add_parser("fit", help="fit a decay.csv and write fit.json")
    fit.add_argument("csv", help="dataset produced by simulate")
    fit.add_argument("--model", choices=("loss", "rb"), default="loss")
    fit.add_argument("--out", metavar="DIR", help="output directory")
    fit.set_defaults(func=_cmd_fit)

    chk = sub.add_parser("check-channel", help="report the loss bound for a config's noise")
    chk.add_argument("config", nargs="?", help="config path or bundled config name")
    chk.add_argument("--config", dest="config_flag", metavar="PATH", help="config path")
    chk.add_argument("--seed", type=int, help="override the config's master seed")
    chk.set_defaults(func=_cmd_check_channel)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)
