"""Command-line interface: ``scents {fit,fit-hd,bootstrap,simulate,spline-check}``.

Every command writes one JSON report to standard output. Failures write a JSON
error object to standard error and exit with status 1; usage errors exit with 2.
"""
import argparse
import csv
import json
import math
import os
import sys
import time
import warnings
from dataclasses import fields, replace

import numpy as np

from . import __version__, spline
from .errors import DataFormatError, IdentificationWarning, InvalidArgumentError, ScentsError
from .estimator import Dataset, FitConfig, fit
from .highdim import HighDimConfig, fit_hd
from .inference import bootstrap_ci
from .simulate import DgpConfig, draw, monte_carlo, reference_dgp, reference_hd_dgp

SCHEMA_VERSION = 1
MISSING = {"", "na", "nan", "null", "none"}
PRESETS = {"reference": reference_dgp, "reference_hd": reference_hd_dgp}


class UsageError(InvalidArgumentError):
    pass


def _parse_cell(cell, row, column):
    text = cell.strip()
    if text.lower() in MISSING:
        return math.nan
    try:
        value = float(text)
    except ValueError:
        value = None
    if value is None or not math.isfinite(value):
        raise DataFormatError(f"row {row} (line {row + 1}), column {column}: cannot parse {cell!r} as a finite number")
    return value


def _load_mapping(path):
    with open(path, encoding="utf-8") as fh:
        mapping = json.load(fh)
    if not isinstance(mapping, dict):
        raise DataFormatError(f"{path}: mapping must be a JSON object")
    out = {"y": mapping.get("y", "y"), "q": mapping.get("q", "q")}
    for key in ("x", "z"):
        cols = mapping.get(key)
        if cols is not None and (not isinstance(cols, list) or not all(isinstance(c, str) for c in cols)):
            raise DataFormatError(f"{path}: '{key}' must be a list of column names")
        out[key] = cols
    return out


def ingest_csv(path, mapping=None):
    """Read a CSV with a header row into a :class:`Dataset`.

    Columns: ``y``, ``q``, ``x_*`` (outcome covariates) and ``z_*`` (score
    covariates), unless ``mapping`` (a dict with keys ``y``, ``q``, ``x``, ``z``)
    names them. Rows with a missing value in any used column are dropped.
    Returns ``(dataset, n_dropped)``. Row numbers in errors count data rows from 1.
    """
    mapping = dict(mapping or {})
    with open(path, newline="", encoding="utf-8-sig") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataFormatError(f"{path}: empty file, expected a header row")
    header = [h.strip() for h in rows[0]]
    y_col = mapping.get("y") or "y"
    q_col = mapping.get("q") or "q"
    x_cols = mapping.get("x")
    z_cols = mapping.get("z")
    if x_cols is None:
        x_cols = [h for h in header if h.startswith("x_")]
    if z_cols is None:
        z_cols = [h for h in header if h.startswith("z_")]
    missing = [c for c in [y_col, q_col, *x_cols, *z_cols] if c not in header]
    if missing:
        raise DataFormatError(f"{path}: missing required columns {missing}")
    if not z_cols:
        raise DataFormatError(f"{path}: no score covariate columns (z_*)")
    used = [y_col, q_col, *x_cols, *z_cols]
    index = [header.index(c) for c in used]

    values = []
    for i, row in enumerate(rows[1:], start=1):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DataFormatError(f"row {i} (line {i + 1}): expected {len(header)} fields, found {len(row)}")
        values.append([_parse_cell(row[j], i, c) for j, c in zip(index, used)])
    table = np.array(values, dtype=float).reshape(-1, len(used))
    keep = ~np.isnan(table).any(axis=1)
    table = table[keep]
    p1 = len(x_cols)
    data = Dataset(
        y=table[:, 0],
        q=table[:, 1],
        X=table[:, 2 : 2 + p1],
        Z=table[:, 2 + p1 :],
        x_names=tuple(x_cols),
        z_names=tuple(z_cols),
    )
    return data, int((~keep).sum())


def write_csv(path, data):
    header = ["y", "q", *data.x_names, *data.z_names]
    table = np.column_stack([data.y, data.q, data.X, data.Z])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in table:
            writer.writerow([repr(float(v)) for v in row])


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


def dumps(report):
    """Serialize with insertion key order and shortest round-trip floats."""
    return json.dumps(_jsonable(report), indent=2, allow_nan=False)


def parse_dgp(specs, seed=None):
    """Build a :class:`DgpConfig` from ``key=value`` tokens.

    Values are read as JSON when possible (``beta0=[1,-1]``, ``heteroskedastic=true``),
    otherwise kept as strings (``b_kind=linear``). ``preset=reference`` or
    ``preset=reference_hd`` starts from a named design. ``seed`` applies unless the
    tokens set one.
    """
    tokens = _split_tokens(specs or [])
    values = {}
    for tok in tokens:
        if "=" not in tok:
            raise UsageError(f"--dgp expects key=value, got {tok!r}")
        key, raw = tok.split("=", 1)
        try:
            val = json.loads(raw)
        except json.JSONDecodeError:
            val = raw
        values[key.strip()] = val
    if seed is not None:
        values.setdefault("seed", seed)
    preset = values.pop("preset", "reference")
    if preset not in PRESETS:
        raise UsageError(f"unknown DGP preset {preset!r}; choose from {sorted(PRESETS)}")
    known = {f.name for f in fields(DgpConfig)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise UsageError(f"unknown DGP keys {unknown}")
    for key in ("beta0", "gamma0", "sparsity"):
        if isinstance(values.get(key), list):
            values[key] = tuple(values[key])
    base = PRESETS[preset]()
    if ("p1" in values or "p2" in values) and preset == "reference":
        base = replace(base, beta0=None, gamma0=None)
    try:
        return replace(base, **values)
    except TypeError as exc:
        raise UsageError(str(exc)) from None


def _split_tokens(specs):
    """Split on whitespace and commas, except inside brackets."""
    tokens = []
    for spec in specs:
        depth = 0
        cur = ""
        for ch in spec:
            if ch in "[(":
                depth += 1
            elif ch in "])":
                depth -= 1
            if depth == 0 and (ch.isspace() or ch == ","):
                if cur:
                    tokens.append(cur)
                cur = ""
            else:
                cur += ch
        if cur:
            tokens.append(cur)
    return tokens


def _tau(text):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive number or 'auto', got {text!r}") from None


def _K(text):
    if text == "auto":
        return "auto"
    try:
        return int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'auto', got {text!r}") from None


def _default_threads():
    raw = os.environ.get("SCENTS_THREADS", "1")
    try:
        return max(int(raw), 1)
    except ValueError:
        return 1


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for splits, resamples and simulations")
    common.add_argument("--threads", type=int, default=None, help="worker threads (default: $SCENTS_THREADS or 1)")
    common.add_argument("--timing", action="store_true", help="add wall-clock runtime to the diagnostics")

    data_opts = argparse.ArgumentParser(add_help=False)
    data_opts.add_argument("--input", required=True, help="CSV file with a header row")
    data_opts.add_argument("--map", help="JSON file naming the y, q, x and z columns")
    data_opts.add_argument("--tau", type=_tau, default="auto")
    data_opts.add_argument("--K", type=_K, default="auto")
    data_opts.add_argument("--split", choices=("shuffle", "round_robin"), default="shuffle")

    parser = argparse.ArgumentParser(prog="scents", description="Treatment-effect estimation under an endogenous score.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", parents=[common, data_opts], help="fixed-dimension estimate")
    p.add_argument("--wls", action="store_true", help="variance-weighted least squares")

    p = sub.add_parser("fit-hd", parents=[common, data_opts], help="high-dimensional debiased estimate")
    p.add_argument("--lambda-mode", choices=("cv", "cv1se", "theory"), default="theory")
    p.add_argument("--level", type=float, default=0.95)

    p = sub.add_parser("bootstrap", parents=[common, data_opts], help="pairs-bootstrap confidence interval")
    p.add_argument("--B", type=int, default=500)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--wls", action="store_true")
    p.add_argument("--resplit", action=argparse.BooleanOptionalAction, default=True,
                   help="re-randomize the three-way split in every replicate")

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo study or synthetic dataset")
    p.add_argument("--dgp", action="append", default=[], help="key=value DGP settings, e.g. 'n=900 rho=0.6'")
    p.add_argument("--R", type=int, default=200)
    p.add_argument("--method", choices=("fixed", "wls", "highdim"), default="fixed")
    p.add_argument("--lambda-mode", choices=("cv", "cv1se", "theory"), default="theory")
    p.add_argument("--output", help="write one generated dataset to this CSV instead of running a study")

    p = sub.add_parser("spline-check", parents=[common], help="numerical checks of the spline basis")
    p.add_argument("--tau", type=float, default=1.0)
    p.add_argument("--K", type=int, default=8)
    return parser


def _data_summary(data, n_dropped):
    return {
        "n": data.n,
        "n_dropped": n_dropped,
        "p1": data.p1,
        "p2": data.p2,
        "x_names": list(data.x_names),
        "z_names": list(data.z_names),
    }


def _load(args):
    mapping = _load_mapping(args.map) if args.map else None
    return ingest_csv(args.input, mapping)


def _run_fit(args, threads):
    data, dropped = _load(args)
    cfg = FitConfig(tau=args.tau, K=args.K, seed=args.seed, wls=args.wls, split=args.split)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IdentificationWarning)
        res = fit(data, cfg)
    names = ["S", *data.x_names, *data.z_names]
    result = {
        "alpha_bar": res.alpha_bar,
        "alpha_per_rotation": res.alpha_per_rotation,
        "theta": dict(zip(names, res.theta.tolist())),
        "gamma_hat": dict(zip(data.z_names, res.gamma_hat.tolist())),
        "omega_tau_hat": res.omega_tau_hat,
        "n_used": res.n_used,
        "identification_warning": res.identification_warning,
    }
    config = {"tau": args.tau, "K": args.K, "seed": args.seed, "wls": args.wls, "split": args.split}
    return config, _data_summary(data, dropped), result, res.diagnostics


def _run_fit_hd(args, threads):
    data, dropped = _load(args)
    cfg = HighDimConfig(tau=args.tau, K=args.K, seed=args.seed, split=args.split,
                        lambda_mode=args.lambda_mode, level=args.level)
    res = fit_hd(data, cfg)
    result = {
        "alpha_hat": res.alpha_hat,
        "se": res.se,
        "ci": list(res.ci95),
        "level": args.level,
        "sigma1_hat": res.sigma1_hat,
        "sigma2_hat": res.sigma2_hat,
        "n3": res.n3,
        "lambdas": res.lambdas,
        "gamma_hat": res.gamma_hat,
        "omega_b_hat": res.omega_b_hat,
        "theta_S": res.theta_S,
        "theta_Y": res.theta_Y,
    }
    config = {"tau": args.tau, "K": args.K, "seed": args.seed, "split": args.split,
              "lambda_mode": args.lambda_mode, "level": args.level}
    return config, _data_summary(data, dropped), result, res.diagnostics


def _run_bootstrap(args, threads):
    data, dropped = _load(args)
    cfg = FitConfig(tau=args.tau, K=args.K, seed=args.seed, wls=args.wls, split=args.split)
    res = bootstrap_ci(data, cfg, B=args.B, level=args.level, seed=args.seed, threads=threads, resplit=args.resplit)
    result = res.table()
    result.update({"B": res.B, "level": res.level, "n_failed": res.n_failed})
    config = {"tau": args.tau, "K": args.K, "seed": args.seed, "wls": args.wls, "split": args.split,
              "B": args.B, "level": args.level, "resplit": args.resplit}
    return config, _data_summary(data, dropped), result, {}


def _dgp_dict(dgp):
    return {f.name: getattr(dgp, f.name) for f in fields(DgpConfig)}


def _run_simulate(args, threads):
    dgp = parse_dgp(args.dgp, seed=args.seed)
    if args.output:
        data, _, _ = draw(dgp)
        write_csv(args.output, data)
        config = {"dgp": _dgp_dict(dgp), "output": args.output}
        return config, _data_summary(data, 0), {"written": args.output}, {}
    summary = monte_carlo(dgp, R=args.R, method=args.method, threads=threads, lasso_mode=args.lambda_mode)
    config = {"dgp": _dgp_dict(dgp), "R": args.R, "method": args.method}
    if args.method == "highdim":
        config["lambda_mode"] = args.lambda_mode
    return config, None, summary.as_dict(), {}


def _run_spline_check(args, threads):
    checks = spline.check_properties(args.tau, args.K, seed=args.seed)
    result = {"all_passed": all(c["passed"] for c in checks), "checks": checks}
    return {"tau": args.tau, "K": args.K, "seed": args.seed}, None, result, {}


RUNNERS = {
    "fit": _run_fit,
    "fit-hd": _run_fit_hd,
    "bootstrap": _run_bootstrap,
    "simulate": _run_simulate,
    "spline-check": _run_spline_check,
}


def _error_payload(exc):
    err = {"type": type(exc).__name__, "message": str(exc)}
    for attr in ("columns", "condition", "kkt", "n_iter"):
        val = getattr(exc, attr, None)
        if val is None or (isinstance(val, list) and not val):
            continue
        # strict JSON has no infinity; keep the diagnostic readable as text
        err[attr] = str(float(val)) if isinstance(val, float) and not math.isfinite(val) else val
    return {"schema_version": SCHEMA_VERSION, "error": err}


def run(argv=None, stdout=None, stderr=None):
    """Parse ``argv``, run the command and return the exit status."""
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    threads = args.threads if args.threads is not None else _default_threads()
    if threads < 1:
        stderr.write(dumps(_error_payload(UsageError("--threads must be at least 1"))) + "\n")
        return 2
    start = time.perf_counter()
    try:
        config, data, result, diagnostics = RUNNERS[args.command](args, threads)
    except InvalidArgumentError as exc:
        stderr.write(dumps(_error_payload(exc)) + "\n")
        return 2
    except (ScentsError, OSError, json.JSONDecodeError) as exc:
        stderr.write(dumps(_error_payload(exc)) + "\n")
        return 1
    report = {"schema_version": SCHEMA_VERSION, "command": args.command, "config": config}
    if data is not None:
        report["data"] = data
    report["result"] = result
    diagnostics = dict(diagnostics)
    if args.timing:
        diagnostics["runtime_seconds"] = time.perf_counter() - start
    report["diagnostics"] = diagnostics
    stdout.write(dumps(report) + "\n")
    return 0


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
