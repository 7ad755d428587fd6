"""Command-line entry point.

Exit codes: 0 success, 1 numeric or acceptance failure, 2 input error.
"""

from __future__ import annotations

import argparse
import copy
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import data as D
from . import oracle
from .ga import (GAError, IslandConfig, Layout, ParamRanges, decode_params, run_islands,
                 sharing_schedule)
from .metrics import MetricsError, refine_chi
from .solution import (SchemaError, Solution, build_report, load_solution, write_chi_table,
                       write_dispersion, write_history)

log = logging.getLogger("eann")

CONFIG_SCHEMA_VERSION = 1

DEFAULT_CONFIG = {
    "schema_version": CONFIG_SCHEMA_VERSION,
    "dataset": {"path": None, "n_targets": 1,
                "synthetic": {"records": 3848, "seed": 0}},
    "dims": {"P": 20, "D": 12},
    "bits": 20,
    "ranges": ParamRanges().to_dict(),
    "split": {"train_fraction": 0.75, "seed": 0},
    "ga": {"islands": 10, "population": 250, "cycles": 20000, "p_mut": None,
           "upsilon": 1.0, "radii": None, "exchange_period": 100, "log_interval": 10,
           "workers": 1},
    "seed": 0,
    "output_dir": "eann-run",
}


class InputError(Exception):
    pass


def _merge(base: dict, over: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if k not in base:
            raise InputError(f"unknown config key '{path}{k}'")
        if isinstance(base[k], dict) and isinstance(v, dict):
            out[k] = _merge(base[k], v, f"{path}{k}.")
        else:
            out[k] = v
    return out


def load_config(path) -> dict:
    if path is None:
        return copy.deepcopy(DEFAULT_CONFIG)
    try:
        with open(path) as fh:
            user = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(user, dict):
        raise InputError(f"{path}: config must be a JSON object")
    if user.get("schema_version", CONFIG_SCHEMA_VERSION) != CONFIG_SCHEMA_VERSION:
        raise InputError(f"{path}: unsupported schema_version {user['schema_version']!r}")
    return _merge(DEFAULT_CONFIG, user)


def check_config(cfg: dict) -> None:
    dims = cfg["dims"]
    if int(dims["P"]) < 1 or int(dims["D"]) < 1:
        raise InputError("dims P and D must be positive")
    if cfg["seed"] is None:
        raise InputError("a seed is required")
    g = cfg["ga"]
    if int(g["islands"]) < 1:
        raise InputError("need at least one island")
    if g["radii"] is not None and len(g["radii"]) != int(g["islands"]):
        raise InputError("ga.radii must list one radius per island")
    try:
        ParamRanges.from_dict(cfg["ranges"])
    except ValueError as exc:
        raise InputError(str(exc)) from None


def resolve_dataset(cfg: dict) -> D.RawDataset:
    ds = cfg["dataset"]
    if ds["path"]:
        return D.load_csv(ds["path"], int(ds["n_targets"]))
    syn = ds["synthetic"]
    log.info("no dataset path given; using the synthetic surrogate")
    return D.synthetic_surrogate(int(syn["records"]), int(syn["seed"]))


def partitions(raw: D.RawDataset, norm: D.NormParams | None, train_fraction: float, seed: int):
    """Normalize and split; returns (parts, indices, params)."""
    normed, fresh = D.normalize(raw)
    if norm is not None and not (np.array_equal(fresh.scale, norm.scale)
                                 and np.array_equal(fresh.offset, norm.offset)):
        log.warning("dataset differs from the training data; applying stored normalization")
        normed, fresh = D.apply_normalization(raw, norm), norm
    tr_idx, te_idx = D.split_indices(raw.n_records, train_fraction, seed)
    train, test = D.split(normed, train_fraction, seed)
    return {"train": train, "test": test}, {"train": tr_idx, "test": te_idx}, fresh


def island_configs(cfg: dict) -> list:
    g = cfg["ga"]
    n = int(g["islands"])
    radii = g["radii"] if g["radii"] is not None else sharing_schedule(n)
    return [IslandConfig(population=int(g["population"]), p_mut=g["p_mut"],
                         upsilon=float(g["upsilon"]), cycles=int(g["cycles"]),
                         radius=float(r), exchange_period=int(g["exchange_period"]),
                         log_interval=int(g["log_interval"]), seed=int(cfg["seed"]))
            for r in radii]


# ---------------------------------------------------------------- commands

def cmd_init(args) -> int:
    text = json.dumps(DEFAULT_CONFIG, indent=2, sort_keys=True) + "\n"
    if args.init == "-":
        sys.stdout.write(text)
    else:
        Path(args.init).write_text(text)
    return 0


def cmd_stats(args) -> int:
    d = D.load_csv(args.data, args.n_targets)
    report = D.stats_report(d)
    if args.output:
        D.write_json(report, args.output)
    else:
        print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def cmd_validate(args) -> int:
    report = oracle.validate(seed=args.seed, draws=args.draws)
    if args.output:
        D.write_json(report, args.output)
    for name, f in report["formulas"].items():
        status = "ok  " if f["passed"] else "FAIL"
        print(f"{status} {name:10s} max rel error {f['max_rel_error']:.3e} "
              f"(tolerance {f['tolerance']:.0e}, {f['count']} checks)")
    return 0 if report["passed"] else 1


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    for key, dest in (("seed", "seed"), ("output_dir", "output_dir")):
        if getattr(args, dest) is not None:
            cfg[key] = getattr(args, dest)
    if args.dataset is not None:
        cfg["dataset"]["path"] = args.dataset
    for key in ("islands", "population", "cycles", "workers"):
        if getattr(args, key) is not None:
            cfg["ga"][key] = getattr(args, key)
    check_config(cfg)
    raw = resolve_dataset(cfg)
    frac, split_seed = float(cfg["split"]["train_fraction"]), int(cfg["split"]["seed"])
    parts, indices, norm = partitions(raw, None, frac, split_seed)
    train = parts["train"]
    stats = D.compute_stats(train)
    layout = Layout(raw.n_features, raw.n_targets, int(cfg["dims"]["P"]), int(cfg["dims"]["D"]),
                    int(cfg["bits"]), ParamRanges.from_dict(cfg["ranges"]))
    configs = island_configs(cfg)
    res = run_islands(configs, layout, train, stats, workers=int(cfg["ga"]["workers"]))
    best = res.best
    if best.c is None:
        raise GAError("no island produced a finite energy")
    net, basis = decode_params(best.bits, layout)
    sol = Solution(layout, net, basis, best.c, norm, frac, split_seed)
    report = build_report(sol, parts)
    sol.reports = report["partitions"]
    sol.run = {
        "seed": int(cfg["seed"]),
        "best_island": res.best_island,
        "evaluations": sum(isl.evaluations for isl in res.islands),
        "failures": {str(k): v for k, v in res.failures.items()},
        "initial_best_E_r": res.initial_best_error,
        "islands": [{"index": isl.index, "radius": isl.config.radius, "p_mut": isl.p_mut}
                    for isl in res.islands],
        "genotype": "".join(map(str, best.bits.tolist())),
    }
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    D.write_json(sol.to_dict(), out / "solution.json")
    D.write_json(report, out / "report.json")
    write_history(out / "history.jsonl", res.history)
    write_dispersion(out / "dispersion.csv", net, parts, indices)
    D.write_json(cfg, out / "config.json")
    tr = report["partitions"]["train"]
    print(f"best E {tr['E']:.6e}  E_r train {tr['E_r'][0]:.4f}%  -> {out}")
    return 0


def cmd_evaluate(args) -> int:
    sol = load_solution(args.solution)
    if args.dataset:
        raw = D.load_csv(args.dataset, sol.layout.n_outputs)
    else:
        log.info("no dataset given; using the synthetic surrogate")
        raw = D.synthetic_surrogate(args.records, args.synthetic_seed)
    if raw.n_features != sol.layout.n_inputs:
        raise InputError(f"dataset has {raw.n_features} features, solution expects "
                         f"{sol.layout.n_inputs}")
    parts, indices, _ = partitions(raw, sol.normalization, sol.train_fraction, sol.split_seed)
    report = build_report(sol, parts)
    if args.output:
        D.write_json(report, args.output)
    else:
        print(json.dumps(report, indent=2, sort_keys=True))
    if args.dispersion:
        write_dispersion(args.dispersion, sol.net, parts, indices)
    if args.chi_table:
        train = parts["train"]
        stats = D.compute_stats(train)
        chi0 = report["partitions"]["train"]["chi"][0]
        table = refine_chi(sol.basis, sol.c, sol.net, stats, chi0, train.x,
                           iterations=args.chi_iterations)
        write_chi_table(args.chi_table, table)
        log.info("chi table: %d iterations, converged=%s, masked fraction %.3f",
                 table.iterations, table.converged, table.masked_fraction)
    failed = [k for k, p in report["partitions"].items() if p.get("E") is None]
    return 1 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eann", description=__doc__.splitlines()[0])
    p.add_argument("--init", metavar="PATH", nargs="?", const="-",
                   help="write the default config template (stdout when no path)")
    p.add_argument("-v", "--verbose", action="store_true")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS)
    sub = p.add_subparsers(dest="command")

    s = sub.add_parser("stats", parents=[common], help="statistics of a CSV dataset")
    s.add_argument("data")
    s.add_argument("--n-targets", type=int, default=1)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_stats)

    s = sub.add_parser("validate", parents=[common], help="closed forms against quadrature")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--draws", type=int, default=100)
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("train", parents=[common], help="run the genetic algorithm")
    s.add_argument("--config")
    s.add_argument("--dataset")
    s.add_argument("--seed", type=int)
    s.add_argument("--islands", type=int)
    s.add_argument("--population", type=int)
    s.add_argument("--cycles", type=int)
    s.add_argument("--workers", type=int)
    s.add_argument("--output-dir", dest="output_dir")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("evaluate", parents=[common], help="report a solution on train and test partitions")
    s.add_argument("solution")
    s.add_argument("--dataset")
    s.add_argument("--records", type=int, default=3848, help="synthetic surrogate size")
    s.add_argument("--synthetic-seed", type=int, default=0)
    s.add_argument("-o", "--output")
    s.add_argument("--dispersion", help="write observed/computed CSV here")
    s.add_argument("--chi-table", dest="chi_table", help="write the refined residual-scale table here")
    s.add_argument("--chi-iterations", type=int, default=50)
    s.set_defaults(func=cmd_evaluate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        if args.init is not None:
            return cmd_init(args)
        if args.command is None:
            parser.print_help(sys.stderr)
            return 2
        return args.func(args)
    except (InputError, SchemaError, D.DatasetError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (GAError, MetricsError, ArithmeticError) as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
