"""Command line front end.

    pshsym analyze ex-4.1
    pshsym analyze log-norm --n 3
    pshsym verify --all
    pshsym verify demailly --eps 0.25,0.5,0.75
    pshsym reproduce

Exit codes: 0 on success, 1 on a hard error or a failed check (verify),
2 when a run completes but some slope estimate is flagged unstable.
"""

import argparse
import logging
import os
import sys

from . import pipeline, reporting
from .config import load_config
from .errors import PshError

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_UNSTABLE = 2


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of numbers, got {text!r}")


def _formats(text):
    return tuple(x.strip() for x in text.split(",") if x.strip())


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("target", nargs="?", help="catalog name or path to a JSON spec")
    src = common.add_mutually_exclusive_group()
    src.add_argument("--spec", metavar="PATH", help="JSON function spec")
    src.add_argument("--catalog", metavar="NAME", help="builtin catalog entry")
    common.add_argument("--n", type=int, help="dimension for the log-norm family")
    common.add_argument("--eps", type=_floats, help="comma separated Demailly parameters")
    common.add_argument("--config", metavar="FILE", help="JSON config file")
    common.add_argument("--seed", type=int, help="64-bit seed (fallback: PSH_SYMM_SEED)")
    common.add_argument("--mc-samples", type=int, dest="mc_samples")
    common.add_argument("--t-min", type=float, dest="t_min")
    common.add_argument("--rel-tol", type=float, dest="rel_tol")
    common.add_argument("--out", metavar="DIR")
    common.add_argument("--format", type=_formats, dest="formats", help="subset of json,csv,svg")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="pshsym",
                                     description="Singularity invariants and Schwarz symmetrization "
                                                 "of symmetric plurisubharmonic functions.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analyze", parents=[common], help="invariants and symmetrization of one target")
    p = sub.add_parser("verify", parents=[common], help="run the theorem checks")
    p.add_argument("--all", action="store_true", help="every builtin catalog entry")
    sub.add_parser("reproduce", parents=[common], help="table of the worked examples")
    return parser


def _config(args):
    overrides = {"seed": args.seed, "mc_samples": args.mc_samples, "t_min": args.t_min,
                 "rel_tol": args.rel_tol, "out": args.out, "formats": args.formats}
    return load_config(args.config, overrides)


def _targets(args, config):
    return pipeline.resolve(args.target, args.spec, args.catalog, args.n, args.eps,
                            seed=config.seed, t_min=config.t_min)


def cmd_analyze(args, config):
    code = EXIT_OK
    for tgt in _targets(args, config):
        a = pipeline.analyze(tgt.spec, tgt.expected, config)
        path = pipeline.write_outputs(config.out, a, config)
        r = a.report
        print(f"{a.spec.name}: nu={r.nu.slope:.6g} nu_hat={r.nu_hat.slope:.6g} "
              f"iota={r.iota_volume.slope:.6g} tau_hat={r.tau_hat:.6g} -> {path}")
        if r.unstable:
            code = EXIT_UNSTABLE
            print(f"{a.spec.name}: UNSTABLE slope estimate, see report.json", file=sys.stderr)
    return code


def cmd_verify(args, config):
    targets = pipeline.all_targets() if args.all else _targets(args, config)
    lines = ["| target | check | status | margin | tolerance |", "|---|---|---|---|---|"]
    failed, shaky = False, False
    for tgt in targets:
        a = pipeline.analyze(tgt.spec, tgt.expected, config)
        theorems = pipeline.verify(a, config)
        pipeline.write_outputs(config.out, a, config, theorems)
        for c in theorems["checks"]:
            lines.append(f"| {a.spec.name} | {c['id']} | {c['status']} | "
                         f"{reporting._num(c.get('margin'))} | {reporting._num(c.get('tolerance'))} |")
            if c["status"] == "FAIL":
                failed = True
                print(f"{a.spec.name}: {c['id']} FAIL", file=sys.stderr)
        shaky = shaky or a.report.unstable
    table = "\n".join(lines) + "\n"
    os.makedirs(config.out, exist_ok=True)
    reporting.write_text(os.path.join(config.out, "verify_summary.md"), table)
    print(table, end="")
    if failed:
        return EXIT_ERROR
    return EXIT_UNSTABLE if shaky else EXIT_OK


def cmd_reproduce(args, config):
    analyses = []
    for name in pipeline.REPRODUCE:
        tgt = pipeline.resolve(name)[0]
        a = pipeline.analyze(tgt.spec, tgt.expected, config)
        pipeline.write_outputs(config.out, a, config)
        analyses.append(a)
    rows = pipeline.reproduce_rows(analyses)
    md = pipeline.reproduce_md(rows)
    with reporting.AtomicDir(os.path.join(config.out, "reproduce")) as tmp:
        reporting.write_text(os.path.join(tmp, "summary.md"), md)
        if "json" in config.formats:
            reporting.write_text(os.path.join(tmp, "report.json"),
                                 reporting.dumps({"config": config.to_dict(), "rows": rows}))
    print(md, end="")
    return EXIT_UNSTABLE if any(a.report.unstable for a in analyses) else EXIT_OK


COMMANDS = {"analyze": cmd_analyze, "verify": cmd_verify, "reproduce": cmd_reproduce}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = _config(args)
        return COMMANDS[args.command](args, config)
    except PshError as err:
        print(f"error: {err.code}: {err}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as err:
        print(f"error: FILE_ERROR: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
