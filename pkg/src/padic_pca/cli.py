"""Command-line front end: ``padic-pca {generate,fit,detect,experiment}``.

Exit codes: 0 success, 2 configuration error, 3 file error, 4 internal
invariant violation, 1 anything else.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline
from .config import FIELD_NAMES, ConfigError, RunConfig, build_config
from .core import ParamsError
from .io import FormatError, load_dataset, load_model, report_text, save_dataset, save_model, save_report
from .pca import BudgetTooLarge, residual, total_loss

EXIT_OK = 0
EXIT_OTHER = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_INVARIANT = 4

log = logging.getLogger("padic_pca")


class InvariantError(RuntimeError):
    """A post-condition the library guarantees did not hold."""


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_config_flags(ap: argparse.ArgumentParser) -> None:
    g = ap.add_argument_group("run configuration (flags override the config file)")
    g.add_argument("--config", type=Path, help="INI file with a [run] section")
    g.add_argument("--preset", choices=["paper", "smoke"], help="named parameter preset")
    g.add_argument("--p", type=str)
    g.add_argument("--E", type=str)
    g.add_argument("--q", type=str)
    g.add_argument("--D", type=str)
    g.add_argument("--algorithm", type=str, help="RPCA or NRPCA")
    g.add_argument("--d-minus", dest="d_minus", type=str)
    g.add_argument("--d-prime-minus", dest="d_prime_minus", type=str)
    g.add_argument("--t-io", dest="t_io", type=str, help="pivot-visit cap (integer or inf)")
    g.add_argument("--t-ls", dest="t_ls", type=str, help="line-search step cap (integer or inf)")
    g.add_argument("--eps-ad", dest="eps_ad", type=str, help="anomaly threshold, e.g. 1/5")
    g.add_argument("--generator", type=str, help="balls or affine")
    g.add_argument("--B", type=str, help="number of balls")
    g.add_argument("--D-prime", dest="D_prime", type=str, help="affine subspace dimension")
    g.add_argument("--rate", dest="rate_r", type=str, help="anomaly rate r in percent")
    g.add_argument("--count", type=str, help="number of samples")
    g.add_argument("--seed", type=str)
    g.add_argument("--workers", type=str)
    g.add_argument(
        "--coordinate-descent",
        dest="coordinate_descent",
        action="store_const",
        const="true",
        help="refine with a coordinate descent after the PCA",
    )
    g.add_argument(
        "--line-search-random",
        dest="line_search_random",
        type=str,
        metavar="K",
        help="refine with a line search over K random directions",
    )
    g.add_argument("--report-formats", dest="report_formats", type=str, help="comma list of csv,json,txt")


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="padic-pca", description="p-adic PCA and anomaly detection")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic labeled dataset")
    _add_config_flags(p)
    p.add_argument("--out", type=Path, required=True, help="dataset path (.csv text, .bin binary)")

    p = sub.add_parser("fit", help="fit a factor model to a dataset")
    _add_config_flags(p)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="model JSON path")

    p = sub.add_parser("detect", help="score a dataset against a model")
    _add_config_flags(p)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="report prefix (writes .csv/.json/.txt)")

    p = sub.add_parser("experiment", help="generate, fit and detect in one run")
    _add_config_flags(p)
    p.add_argument("--out", type=Path, required=True, help="report prefix (writes .csv/.json/.txt)")
    p.add_argument("--save-data", type=Path, help="also write the generated dataset")
    p.add_argument("--save-model", type=Path, help="also write the fitted model")
    return ap


def config_from_args(args: argparse.Namespace, data_params=None) -> RunConfig:
    overrides = {k: getattr(args, k) for k in FIELD_NAMES if getattr(args, k, None) is not None}
    if data_params is not None:
        # a dataset header fixes p, E, q, D unless flags say otherwise
        for name in ("p", "E", "q", "D"):
            overrides.setdefault(name, getattr(data_params, name))
    return build_config(args.preset, args.config, overrides)


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def _check_params(cfg: RunConfig, params, what: str) -> None:
    if (cfg.p, cfg.E, cfg.q, cfg.D) != (params.p, params.E, params.q, params.D):
        raise ConfigError(
            f"{what} header (p={params.p}, E={params.E}, q={params.q}, D={params.D}) "
            f"does not match the configuration (p={cfg.p}, E={cfg.E}, q={cfg.q}, D={cfg.D})"
        )


def cmd_generate(args) -> int:
    cfg = config_from_args(args)
    ds = pipeline.generate(cfg)
    save_dataset(args.out, ds)
    print(f"wrote {ds.Y.shape[0]} rows to {args.out}")
    return EXIT_OK


def _verify_fit(model, Y, params) -> None:
    losses = model.info["losses"]
    if losses["pca"] > losses["data"]:
        raise InvariantError("PCA increased the total loss")
    steps = [losses[k] for k in ("pca", "coordinate_descent", "line_search") if k in losses]
    if any(b > a for a, b in zip(steps, steps[1:])):
        raise InvariantError("a refinement pass increased the total loss")
    if total_loss(residual(Y, model), params) != steps[-1]:
        raise InvariantError("tracked loss disagrees with the recomputed residual")


def cmd_fit(args) -> int:
    ds = load_dataset(args.data)
    cfg = config_from_args(args, ds.params)
    _check_params(cfg, ds.params, "dataset")
    model = pipeline.fit(cfg, ds.Y)
    _verify_fit(model, ds.Y, cfg.params)
    save_model(args.out, model)
    print(json.dumps({"components": len(model), "losses": model.info["losses"]}))
    return EXIT_OK


def cmd_detect(args) -> int:
    ds = load_dataset(args.data)
    model = load_model(args.model)
    cfg = config_from_args(args, ds.params)
    _check_params(cfg, ds.params, "dataset")
    _check_params(cfg, model.params, "model")
    if model.n_samples != ds.Y.shape[0]:
        raise ConfigError(f"model has {model.n_samples} coefficient columns, dataset {ds.Y.shape[0]} rows")
    if ds.labels is None:
        log.warning("dataset has no labels; reporting aggregate row only")
    report = pipeline.detect(cfg, ds, model)
    _verify_report(report, ds.Y.shape[0])
    save_report(args.out, report, cfg.report_formats)
    print(report_text(report), end="")
    return EXIT_OK


def _verify_report(report, n: int) -> None:
    main = [r for r in report.rows if r.group in ("A", "N", "all")]
    if sum(r.size for r in main) != n:
        raise InvariantError("report rows do not partition the samples")
    for r in report.rows:
        for x in (r.r_A, r.r_C):
            if x is not None and not 0 <= x <= 1:
                raise InvariantError(f"ratio {x} of group {r.group} outside [0, 1]")


def cmd_experiment(args) -> int:
    cfg = config_from_args(args)
    ds, model, report = pipeline.experiment(cfg)
    _verify_fit(model, ds.Y, cfg.params)
    _verify_report(report, ds.Y.shape[0])
    if args.save_data:
        save_dataset(args.save_data, ds)
    if args.save_model:
        save_model(args.save_model, model)
    save_report(args.out, report, cfg.report_formats)
    print(report_text(report), end="")
    return EXIT_OK


COMMANDS = {"generate": cmd_generate, "fit": cmd_fit, "detect": cmd_detect, "experiment": cmd_experiment}


def main(argv=None) -> int:
    ap = make_parser()
    args = ap.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, ParamsError, BudgetTooLarge) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, FormatError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except InvariantError as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_OTHER


if __name__ == "__main__":
    sys.exit(main())
