"""Batch command line: configure, run, and export experiments.

Subcommands: eigen, simulate, kac, compare, diagnose, robustness.
Options resolve in three layers — built-in defaults, then a config
file (INI with one section per subcommand, or a previously emitted
manifest.json), then command-line flags.  Unknown config keys are
rejected by name.  Every run writes manifest.json echoing the fully
resolved configuration, and re-running from that manifest reproduces
the run byte for byte.

Exit codes: 0 success, 2 configuration/usage errors, 3 numerical
failures.
"""

import argparse
import configparser
import json
import math
import os
import sys

from .eigen import BoundaryCondition, asymptotic_deviation, eigen_solve
from .errors import (DomainError, InvariantViolation, NumericError,
                     PreconditionError, UsageError)
from .harness import (ExperimentConfig, build_basis_pair, contiguity_diagnostic,
                      covariance_check, gap_diagnostics, run_experiment,
                      summarize, sup_eps_diagnostic, write_summary)
from .kernels import (expected_count_closed, kac_rice_expected,
                      second_order_exact, second_order_stationary)
from .weights import TWO_PI, builtin_weights

_INT = "int"
_FLOAT = "float"
_STR = "str"
_BOOL = "bool"
_INT_LIST = "int_list"
_STR_LIST = "str_list"

KEY_TYPES = {
    "weight": _STR,
    "n_list": _INT_LIST,
    "replicates": _INT,
    "seed": _INT,
    "kinds": _STR_LIST,
    "grid_factor": _INT,
    "k_max": _INT,
    "timing": _BOOL,
    "x_ref": _FLOAT,
    "pert_c0": _FLOAT,
    "pert_c1": _FLOAT,
    "out": _STR,
}

SUBCOMMAND_KEYS = {
    "eigen": ("weight", "k_max", "out"),
    "simulate": ("weight", "n_list", "replicates", "seed", "kinds",
                 "grid_factor", "k_max", "timing", "out"),
    "kac": ("weight", "n_list", "out"),
    "compare": ("weight", "n_list", "replicates", "seed", "grid_factor",
                "k_max", "timing", "out"),
    "diagnose": ("weight", "n_list", "replicates", "seed", "k_max",
                 "x_ref", "out"),
    "robustness": ("weight", "n_list", "replicates", "seed", "grid_factor",
                   "timing", "pert_c0", "pert_c1", "out"),
}

DEFAULTS = {
    "weight": "sine2",
    "n_list": (50, 100, 200, 400),
    "replicates": 2000,
    "seed": 20260819,
    "kinds": ("f_n", "X_n"),
    "grid_factor": 16,
    "k_max": None,
    "timing": False,
    "x_ref": math.pi / 3.0,
    "pert_c0": 0.5,
    "pert_c1": 1.0,
    "out": "slzeros_out",
}
DEFAULT_OVERRIDES = {
    "diagnose": {"replicates": 5000},
}


def _parse_value(key, raw):
    kind = KEY_TYPES[key]
    if isinstance(raw, str):
        raw = raw.strip()
        try:
            if kind == _INT:
                return int(raw)
            if kind == _FLOAT:
                return float(raw)
            if kind == _BOOL:
                low = raw.lower()
                if low in ("1", "true", "yes", "on"):
                    return True
                if low in ("0", "false", "no", "off"):
                    return False
                raise ValueError(raw)
            if kind == _INT_LIST:
                return tuple(int(p) for p in raw.split(",") if p.strip())
            if kind == _STR_LIST:
                return tuple(p.strip() for p in raw.split(",") if p.strip())
            return raw
        except ValueError:
            raise UsageError("bad value for %s: %r" % (key, raw))
    if kind in (_INT_LIST, _STR_LIST):
        return tuple(raw)
    return raw


def _load_file_layer(path, subcommand):
    if not os.path.exists(path):
        raise UsageError("config file not found: %s" % path)
    allowed = SUBCOMMAND_KEYS[subcommand]
    layer = {}
    if path.endswith(".json"):
        with open(path) as fh:
            manifest = json.load(fh)
        if manifest.get("subcommand") != subcommand:
            raise UsageError(
                "manifest %s is for subcommand %r, not %r"
                % (path, manifest.get("subcommand"), subcommand))
        source = manifest.get("config", {})
    else:
        parser = configparser.ConfigParser()
        try:
            parser.read(path)
        except configparser.Error as exc:
            raise UsageError("cannot parse config %s: %s" % (path, exc))
        source = dict(parser[subcommand]) if parser.has_section(subcommand) else {}
    for key, raw in source.items():
        if key not in allowed:
            raise UsageError("unknown config key %r for subcommand %s"
                             % (key, subcommand))
        layer[key] = _parse_value(key, raw)
    return layer


def _resolve(subcommand, args):
    cfg = dict(DEFAULTS)
    cfg.update(DEFAULT_OVERRIDES.get(subcommand, {}))
    if args.config is not None:
        cfg.update(_load_file_layer(args.config, subcommand))
    for key in SUBCOMMAND_KEYS[subcommand]:
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            cfg[key] = _parse_value(key, flag_val)
    return {key: cfg[key] for key in SUBCOMMAND_KEYS[subcommand]}


def _write_manifest(out_dir, subcommand, cfg):
    os.makedirs(out_dir, exist_ok=True)
    body = {}
    for key, val in cfg.items():
        body[key] = list(val) if isinstance(val, tuple) else val
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump({"subcommand": subcommand, "config": body}, fh,
                  indent=2, sort_keys=True)
        fh.write("\n")


def _cell(value):
    if isinstance(value, float):
        return "%.17g" % value
    return str(value)


def _write_table(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")


def _experiment_config(cfg, kinds, output_path):
    return ExperimentConfig(
        weight_name=cfg["weight"], n_list=tuple(cfg["n_list"]),
        replicates=cfg["replicates"], master_seed=cfg["seed"],
        process_kinds=kinds, output_path=output_path,
        grid_factor=cfg.get("grid_factor", 16), k_max=cfg.get("k_max"),
        timing=cfg.get("timing", False),
        pert_c0=cfg.get("pert_c0", 0.5), pert_c1=cfg.get("pert_c1", 1.0))


def cmd_eigen(cfg):
    weight = builtin_weights(cfg["weight"])
    k_max = cfg["k_max"] if cfg["k_max"] is not None else 20
    rows = []
    for bc in (BoundaryCondition.C, BoundaryCondition.D):
        basis = eigen_solve(weight, bc, k_max)
        ks, d, d1 = asymptotic_deviation(basis)
        for pair, dev, dev1 in zip(basis.pairs, d, d1):
            root = math.sqrt(pair.eigenvalue)
            rows.append((bc.value, pair.index, pair.eigenvalue,
                         root - pair.index / 2.0, dev, pair.index * dev, dev1))
    _write_table(os.path.join(cfg["out"], "eigen_table.csv"),
                 ("family", "k", "lambda", "sqrt_lambda_minus_half_k",
                  "d", "k_d", "d1"),
                 rows)
    return 0


def cmd_simulate(cfg, kinds=None):
    config = _experiment_config(cfg, kinds or tuple(cfg["kinds"]), cfg["out"])
    records = run_experiment(config)
    write_summary(summarize(records), os.path.join(cfg["out"], "summary.json"))
    return records


def cmd_kac(cfg):
    weight = builtin_weights(cfg["weight"])
    rows = []
    for n in cfg["n_list"]:
        integral_x = kac_rice_expected(second_order_exact(n, weight), (0.0, TWO_PI))
        integral_t = kac_rice_expected(second_order_stationary(n), (0.0, TWO_PI))
        rows.append((n, "X_n", integral_x, expected_count_closed(n, "X_n")))
        rows.append((n, "T_n", integral_t, expected_count_closed(n, "T_n")))
    _write_table(os.path.join(cfg["out"], "kac_table.csv"),
                 ("n", "kind", "expected_count", "closed_form"), rows)
    return 0


def cmd_compare(cfg):
    records = cmd_simulate(cfg, kinds=("f_n", "X_n"))
    contiguity = contiguity_diagnostic(records)
    sup_eps = sup_eps_diagnostic(records)
    _write_table(os.path.join(cfg["out"], "contiguity.csv"),
                 ("n", "contiguity"),
                 [(n, v) for n, v in sorted(contiguity.items())])
    _write_table(os.path.join(cfg["out"], "sup_eps.csv"),
                 ("n", "median_scaled", "p99_scaled"),
                 [(n, q["median"], q["p99"])
                  for n, q in sorted(sup_eps["quantiles"].items())])
    with open(os.path.join(cfg["out"], "compare.json"), "w") as fh:
        json.dump({"contiguity": {str(n): v for n, v in contiguity.items()},
                   "sup_eps_quantiles": {str(n): q for n, q in
                                         sup_eps["quantiles"].items()},
                   "median_loglog_slope": sup_eps["median_loglog_slope"]},
                  fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def cmd_diagnose(cfg):
    weight = builtin_weights(cfg["weight"])
    n_max = max(cfg["n_list"])
    k_max = cfg["k_max"] if cfg["k_max"] is not None else n_max
    if k_max < n_max:
        raise PreconditionError("k_max=%d is smaller than max(n_list)=%d"
                                % (k_max, n_max))
    basis_pair = build_basis_pair(weight, k_max)
    rows = []
    for n in cfg["n_list"]:
        diag = gap_diagnostics(basis_pair, weight, n, x_ref=cfg["x_ref"])
        rows.append((n, diag.alpha_sup, diag.delta_sup, n * diag.delta_sup,
                     diag.beta_sup, diag.beta_sup * n / math.log(n)))
    _write_table(os.path.join(cfg["out"], "gap_table.csv"),
                 ("n", "alpha_sup", "delta_sup", "n_delta_sup", "beta_sup",
                  "beta_scaled"), rows)
    check = covariance_check(weight, n_max, basis_pair=basis_pair,
                             m=cfg["replicates"], master_seed=cfg["seed"])
    pair_rows = []
    for i in range(check["x_pairs"].shape[0]):
        x, y = check["x_pairs"][i]
        pair_rows.append((float(x), float(y), float(check["cov_empirical"][i]),
                          float(check["cov_exact"][i]),
                          abs(float(check["cov_empirical"][i]
                                    - check["cov_exact"][i]))))
    _write_table(os.path.join(cfg["out"], "cov_check.csv"),
                 ("x", "y", "cov_empirical", "cov_exact", "abs_error"),
                 pair_rows)
    var_rows = [(float(x), float(v), abs(float(v) - 1.0))
                for x, v in zip(check["var_f_points"],
                                check["var_f_empirical"])]
    _write_table(os.path.join(cfg["out"], "var_check.csv"),
                 ("x", "var_f_empirical", "abs_error"), var_rows)
    return 0


def cmd_robustness(cfg):
    records = cmd_simulate(cfg, kinds=("T_n", "perturbed"))
    by_n = {}
    for rec in records:
        by_n.setdefault(rec.n, []).append(rec)
    rows = []
    for n in sorted(by_n):
        recs = by_n[n]
        m = len(recs)
        mean_t = sum(r.n_tn for r in recs) / m
        mean_p = sum(r.n_pert for r in recs) / m
        var_p = sum((r.n_pert - mean_p) ** 2 for r in recs) / (m - 1)
        se_p = math.sqrt(var_p / m)
        closed = expected_count_closed(n, "T_n")
        rows.append((n, mean_t, mean_p, closed, se_p,
                     abs(mean_p - closed) / se_p if se_p > 0 else 0.0))
    _write_table(os.path.join(cfg["out"], "robustness.csv"),
                 ("n", "mean_T", "mean_perturbed", "closed_form_T",
                  "se_perturbed", "gap_over_se"), rows)
    return 0


_DISPATCH = {
    "eigen": cmd_eigen,
    "simulate": cmd_simulate,
    "kac": cmd_kac,
    "compare": cmd_compare,
    "diagnose": cmd_diagnose,
    "robustness": cmd_robustness,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="slzeros",
        description="Zero-count experiments for Sturm-Liouville random sums")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in _DISPATCH:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None,
                       help="INI config or a previously emitted manifest.json")
        p.add_argument("--out", default=None, help="output directory")
        keys = SUBCOMMAND_KEYS[name]
        if "weight" in keys:
            p.add_argument("--weight", default=None)
        if "n_list" in keys:
            p.add_argument("--n-list", dest="n_list", default=None,
                           help="comma-separated, ascending")
        if "replicates" in keys:
            p.add_argument("--replicates", default=None)
        if "seed" in keys:
            p.add_argument("--seed", default=None)
        if "grid_factor" in keys:
            p.add_argument("--grid-factor", dest="grid_factor", default=None)
        if "k_max" in keys:
            p.add_argument("--k-max", dest="k_max", default=None)
        if "kinds" in keys:
            p.add_argument("--kinds", default=None,
                           help="comma-separated process kinds")
        if "timing" in keys:
            p.add_argument("--timing", action="store_const", const=True,
                           default=None,
                           help="record wall times to timing.csv (not "
                                "byte-reproducible)")
        if "x_ref" in keys:
            p.add_argument("--x-ref", dest="x_ref", default=None)
        if "pert_c0" in keys:
            p.add_argument("--pert-c0", dest="pert_c0", default=None)
            p.add_argument("--pert-c1", dest="pert_c1", default=None)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve(args.subcommand, args)
        _write_manifest(cfg["out"], args.subcommand, cfg)
        _DISPATCH[args.subcommand](cfg)
    except (UsageError, DomainError, PreconditionError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except (NumericError, InvariantViolation) as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
