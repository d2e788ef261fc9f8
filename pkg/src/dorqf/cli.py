"""Command-line front end.

Subcommands: quantiles, fit, predict, cv, band, test, simulate. Tabular
data travels as CSV, structured results as JSON; every run writes a
manifest echoing the resolved configuration. Exit codes: 1 usage, 2 data,
3 numerical failure.
"""

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .archive import load_fit, save_fit
from .bernstein import bernstein_eval
from .design import Dataset
from .inference import band_global_pvalue, bootstrap_effect_test, joint_band
from .model import cross_validate, fit_dorqf
from .qp import QpError
from .quantiles import default_grid, empirical_quantile
from .simulate import (ScenarioSpec, run_coverage_study, run_estimation_study,
                       run_power_study)

__all__ = ["main", "build_parser"]


class DataError(Exception):
    """Bad or inconsistent input data; exits with code 2."""


class _Parser(argparse.ArgumentParser):
    # usage problems exit 1, not argparse's default 2
    def error(self, message):
        self.exit(1, f"{self.prog}: error: {message}\n")


def _default_threads():
    env = os.environ.get("DORQF_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DataError(f"DORQF_THREADS is not an integer: {env!r}")
    return os.cpu_count() or 1


def _utc_now():
    return datetime.now(timezone.utc).isoformat()


def _digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _write_manifest(primary_out, command, config, extra=None):
    path = os.path.splitext(primary_out)[0] + "_manifest.json"
    doc = {
        "command": command,
        "config": config,
        "version": __version__,
        "numpy": np.__version__,
        "written": _utc_now(),
    }
    if extra:
        doc.update(extra)
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, default=str)
    return path


def _config_of(args):
    skip = {"func", "_parser"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


# ---------------------------------------------------------------- CSV I/O


def _float(text, path, lineno):
    try:
        return float(text)
    except ValueError:
        raise DataError(f"{path}:{lineno}: not a number: {text!r}")


def read_long_csv(path):
    """Long observation file: header id,variable,value."""
    out = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        if [c.strip().lower() for c in header[:3]] != ["id", "variable", "value"]:
            raise DataError(f"{path}:1: expected header id,variable,value")
        lineno = 1
        for row in reader:
            lineno += 1
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise DataError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            sid, var = row[0].strip(), row[1].strip()
            out.setdefault(var, {}).setdefault(sid, []).append(
                _float(row[2], path, lineno))
    if not out:
        raise DataError(f"{path}: no observations")
    return out


def read_wide_csv(path):
    """Wide quantile file: header p,<id>,...; returns (grid, ids, matrix)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        if len(header) < 2 or header[0].strip().lower() != "p":
            raise DataError(f"{path}:1: expected header p,<subject ids>")
        ids = [c.strip() for c in header[1:]]
        grid = []
        rows = []
        lineno = 1
        for row in reader:
            lineno += 1
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            grid.append(_float(row[0], path, lineno))
            rows.append([_float(v, path, lineno) for v in row[1:]])
    if not rows:
        raise DataError(f"{path}: no grid rows")
    return np.array(grid), ids, np.array(rows).T


def write_wide_csv(path, grid, ids, matrix):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["p"] + list(ids))
        for l, p in enumerate(grid):
            writer.writerow([repr(float(p))] + [repr(float(v)) for v in matrix[:, l]])


def read_covariate_csv(path):
    """Covariate file: header id,<name>,...; returns (ids, names, matrix)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DataError(f"{path}: empty file")
        if len(header) < 2 or header[0].strip().lower() != "id":
            raise DataError(f"{path}:1: expected header id,<covariate names>")
        names = [c.strip() for c in header[1:]]
        ids = []
        rows = []
        lineno = 1
        for row in reader:
            lineno += 1
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise DataError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            ids.append(row[0].strip())
            rows.append([_float(v, path, lineno) for v in row[1:]])
    if not rows:
        raise DataError(f"{path}: no covariate rows")
    return ids, names, np.array(rows)


def read_curve_csv(path):
    """Single-curve file: header p,value."""
    grid, ids, matrix = read_wide_csv(path)
    if matrix.shape[0] != 1:
        raise DataError(f"{path}: expected exactly one value column")
    return grid, matrix[0]


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, float) else v
                             for v in row])


def _align(master_ids, other_ids, path):
    missing = [i for i in master_ids if i not in set(other_ids)]
    extra = [i for i in other_ids if i not in set(master_ids)]
    if missing or extra:
        raise DataError(
            f"{path}: subject ids do not match the outcome file"
            f" (missing: {missing or 'none'}; unexpected: {extra or 'none'})")
    pos = {sid: k for k, sid in enumerate(other_ids)}
    return [pos[sid] for sid in master_ids]


# ---------------------------------------------------------------- commands


def cmd_quantiles(args):
    data = read_long_csv(args.input)
    grid = default_grid(args.m, args.grid_lo, args.grid_hi)
    rejects = []
    outputs = []
    tables = {}
    for var in sorted(data):
        ids = []
        curves = []
        for sid, values in data[var].items():
            if len(values) < 2:
                rejects.append((sid, var, len(values)))
                continue
            ids.append(sid)
            curves.append(empirical_quantile(values, grid))
        if ids:
            tables[var] = (ids, np.array(curves))
    if not tables:
        raise DataError("no subject has enough observations for any variable")
    for var, (ids, curves) in tables.items():
        path = f"{args.out_prefix}_{var}.csv"
        write_wide_csv(path, grid, ids, curves)
        outputs.append(path)
    rej_path = f"{args.out_prefix}_rejects.csv"
    _write_rows(rej_path, ["id", "variable", "count"], rejects)
    outputs.append(rej_path)
    _write_manifest(f"{args.out_prefix}.csv", "quantiles", _config_of(args),
                    {"outputs": outputs,
                     "input_sha256": _digest(args.input),
                     "rejected": len(rejects)})
    print(f"wrote {len(tables)} variable file(s), {len(rejects)} subject(s) rejected")
    return 0


def _load_dataset(args):
    grid, ids, outcome = read_wide_csv(args.outcome)
    covariates = None
    predictor = None
    if getattr(args, "covariates", None):
        cov_ids, names, Z = read_covariate_csv(args.covariates)
        order = _align(ids, cov_ids, args.covariates)
        covariates = Z[order]
    if getattr(args, "predictor", None):
        pg, pids, PX = read_wide_csv(args.predictor)
        if pg.shape != grid.shape or not np.allclose(pg, grid, atol=1e-9):
            raise DataError(f"{args.predictor}: grid differs from the outcome grid")
        order = _align(ids, pids, args.predictor)
        predictor = PX[order]
    try:
        data = Dataset.from_raw(grid, outcome, covariates=covariates,
                                predictor=predictor)
    except ValueError as exc:
        raise DataError(str(exc))
    return data, ids


def _check_submodel(parser_error, submodel, have_cov, have_pred):
    if submodel == "qfosr" and have_pred:
        parser_error("--submodel qfosr does not take a predictor file")
    if submodel == "qfosr" and not have_cov:
        parser_error("--submodel qfosr needs a covariate file")
    if submodel == "dod" and have_cov:
        parser_error("--submodel dod does not take scalar covariates")
    if submodel == "dod" and not have_pred:
        parser_error("--submodel dod needs a predictor file")
    if submodel == "dorqf" and not (have_cov and have_pred):
        parser_error("--submodel dorqf needs covariates and a predictor")


def cmd_fit(args):
    _check_submodel(args._parser.error, args.submodel,
                    bool(args.covariates), bool(args.predictor))
    data, ids = _load_dataset(args)
    t0 = time.perf_counter()
    cv_report = None
    if args.order is None:
        cv_report = cross_validate(data, orders=tuple(args.cv_orders),
                                   folds=args.folds, seed=args.seed)
        order = cv_report.selected_order
    else:
        order = args.order
    provenance = {
        "command": "fit",
        "seed": args.seed,
        "written": _utc_now(),
        "inputs": {os.path.basename(p): _digest(p)
                   for p in [args.outcome, args.covariates, args.predictor] if p},
        "version": __version__,
    }
    fit = fit_dorqf(data, order, ridge=args.ridge, pve=args.pve,
                    provenance=provenance)
    save_fit(fit, args.out)
    base = os.path.splitext(args.out)[0]
    outputs = [args.out]

    coef_path = base + "_coefficients.csv"
    B0 = bernstein_eval(data.grid, order)
    header = ["p"] + [f"beta{j}" for j in range(data.q + 1)]
    cols = [B0 @ fit.psi_r[fit.layout.beta_slice(j)] for j in range(data.q + 1)]
    rows = [[float(p)] + [float(c[l]) for c in cols]
            for l, p in enumerate(data.grid)]
    _write_rows(coef_path, header, rows)
    outputs.append(coef_path)

    if data.has_predictor:
        h_path = base + "_h.csv"
        xg = np.linspace(0.0, 1.0, 200)
        lo, hi = data.predictor_scale
        hv = fit.h_curve(xg)
        _write_rows(h_path, ["x", "x_raw", "h"],
                    [[float(x), float(lo + x * (hi - lo)), float(v)]
                     for x, v in zip(xg, hv)])
        outputs.append(h_path)

    if cv_report is not None:
        cv_path = base + "_cv.csv"
        _write_cv_csv(cv_path, cv_report)
        outputs.append(cv_path)

    _write_manifest(args.out, "fit", _config_of(args), {
        "outputs": outputs,
        "order": order,
        "subjects": len(ids),
        "runtime_s": time.perf_counter() - t0,
    })
    print(f"order N = {order}" + (" (cross-validated)" if cv_report else ""))
    print(f"RSS constrained   = {fit.rss:.6g}")
    print(f"RSS unconstrained = {fit.rss_unconstrained:.6g}")
    labels = fit.constraints.row_labels
    print(f"active constraints: {len(fit.active_set)} of {len(labels)}")
    for k in fit.active_set:
        print(f"  {labels[k]}")
    return 0


def cmd_predict(args):
    fit = _load_fit(args.fit)
    ids = None
    Z = None
    QX = None
    if args.covariates:
        ids, _, Z = read_covariate_csv(args.covariates)
    if args.predictor:
        pg, pids, QX = read_wide_csv(args.predictor)
        if pg.shape != fit.grid.shape or not np.allclose(pg, fit.grid, atol=1e-9):
            raise DataError(f"{args.predictor}: grid differs from the fit grid")
        if ids is None:
            ids = pids
        else:
            QX = QX[_align(ids, pids, args.predictor)]
    if fit.q and Z is None:
        raise DataError("fit uses scalar covariates: --covariates required")
    if fit.layout.has_distributional and QX is None:
        raise DataError("fit uses a distributional predictor: --predictor required")
    if ids is None:
        raise DataError("no input subjects")
    pred = fit.predict_batch(Z, QX)
    write_wide_csv(args.out, fit.grid, ids, pred)
    _write_manifest(args.out, "predict", _config_of(args),
                    {"outputs": [args.out], "subjects": len(ids)})
    print(f"predicted {len(ids)} subject(s)")
    return 0


def _write_cv_csv(path, report):
    rows = []
    for k, N in enumerate(report.orders):
        val = report.cvsse[k]
        rows.append([N, repr(float(val)) if np.isfinite(val) else "failed",
                     int(N == report.selected_order)])
    _write_rows(path, ["order", "cvsse", "selected"], rows)


def cmd_cv(args):
    data, _ = _load_dataset(args)
    report = cross_validate(data, orders=tuple(args.cv_orders),
                            folds=args.folds, seed=args.seed,
                            weighted=not args.unweighted)
    _write_cv_csv(args.out, report)
    _write_manifest(args.out, "cv", _config_of(args), {
        "outputs": [args.out],
        "selected_order": report.selected_order,
        "failed_orders": list(report.failed_orders),
    })
    print(f"selected order N = {report.selected_order}")
    return 0


def _load_fit(path):
    try:
        return load_fit(path)
    except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise DataError(f"{path}: cannot load fit archive ({exc})")


def cmd_band(args):
    fit = _load_fit(args.fit)
    if fit.delta_n is None:
        raise DataError(f"{args.fit}: archive has no coefficient covariance")
    qx = None
    if args.qx:
        qg, qv = read_curve_csv(args.qx)
        if qg.shape != fit.grid.shape or not np.allclose(qg, fit.grid, atol=1e-9):
            raise DataError(f"{args.qx}: grid differs from the fit grid")
        qx = qv
    try:
        band = joint_band(fit, args.target, alpha=args.alpha, draws=args.B,
                          seed=args.seed, qx_raw=qx)
        result = band_global_pvalue(fit, args.target, band=band)
    except ValueError as exc:
        raise DataError(str(exc))
    _write_rows(args.out, ["grid", "center", "lower", "upper"],
                [[float(g), float(c), float(lo), float(up)]
                 for g, c, lo, up in zip(band.grid, band.center,
                                         band.lower, band.upper)])
    base = os.path.splitext(args.out)[0]
    summary = base + "_summary.json"
    with open(summary, "w") as fh:
        json.dump({
            "target": args.target,
            "alpha": band.alpha,
            "critical": band.critical,
            "statistic": result.statistic,
            "p_value": result.p_value,
            "B": band.draws,
            "seed": band.seed,
        }, fh, indent=2)
    _write_manifest(args.out, "band", _config_of(args),
                    {"outputs": [args.out, summary]})
    print(f"sup statistic = {result.statistic:.6g}, p = {result.p_value:.6g}")
    return 0


def _parse_drop(drop, q, has_predictor, parser_error):
    if drop in ("predictor", "x"):
        if not has_predictor:
            raise DataError("no distributional predictor to drop")
        return "predictor"
    if drop.startswith("z"):
        try:
            j = int(drop[1:])
        except ValueError:
            parser_error(f"bad --drop value {drop!r}")
        if not 1 <= j <= q:
            raise DataError(f"no scalar covariate {drop} (model has q={q})")
        return j - 1
    parser_error(f"bad --drop value {drop!r}")


def cmd_test(args):
    data, _ = _load_dataset(args)
    drop = _parse_drop(args.drop, data.q, data.has_predictor, args._parser.error)
    result = bootstrap_effect_test(data, args.order, drop, draws=args.B,
                                   seed=args.seed)
    with open(args.out, "w") as fh:
        json.dump({
            "statistic": result.statistic,
            "p_value": result.p_value,
            "B": result.draws,
            "method": result.method,
            "null": result.null_spec,
            "seed": result.seed,
            "order": args.order,
        }, fh, indent=2)
    _write_manifest(args.out, "test", _config_of(args), {"outputs": [args.out]})
    print(f"T = {result.statistic:.6g}, p = {result.p_value:.6g}"
          f" ({result.null_spec})")
    return 0


# ------------------------------------------------------------- simulate


def _sim_spec(args, scenario, n, L, stream, reps, order):
    return ScenarioSpec(
        scenario=scenario, n=n, L=L, m=args.m, reps=reps, seed=args.seed,
        noise_level=args.noise, noise_is_sd=args.noise_sd,
        n_test=args.n_test, noise_after=args.noise_after, order=order,
        cv_orders=tuple(args.cv_orders), folds=args.folds, stream=stream,
    )


def cmd_simulate(args):
    t0 = time.perf_counter()
    table = args.table
    ns = args.n or [200, 300, 400]
    Ls = args.L or {"1": [200, 400], "2": [200, 400], "s1": [200, 400]}.get(table, [200])
    reps = args.reps if args.reps is not None else (200 if table == "power" else 100)
    threads = args.threads
    rows = []
    failures = []
    extra = {}

    if table in ("1", "2", "s1"):
        header = {"1": ["n", "L", "reps", "bias2", "var", "mse"],
                  "2": ["n", "L", "reps", "bias2", "var", "mse"],
                  "s1": ["n", "L", "reps", "wd_mean", "wd_se"]}[table]
        target = "beta1" if table == "1" else "gamma"
        orders_seen = {}
        stream = 0
        for n in sorted(ns):
            for L in sorted(Ls):
                spec = _sim_spec(args, "A1", n, L, stream, reps, args.order)
                stream += 1
                rep = run_estimation_study(spec, threads=threads)
                failures.extend([n, L, *f] for f in rep.failures)
                orders_seen[f"n={n},L={L}"] = list(rep.selected_orders)
                if table == "s1":
                    rows.append([n, L, rep.reps_used,
                                 float(rep.wd_mean), float(rep.wd_se)])
                else:
                    m = rep.metrics[target]
                    rows.append([n, L, rep.reps_used, float(m.bias2),
                                 float(m.var), float(m.mse)])
        extra["selected_orders"] = orders_seen
    elif table == "3":
        header = ["n", "L", "method", "reps", "bias2", "var", "mse"]
        orders_seen = {}
        stream = 0
        for n in sorted(ns):
            L = sorted(Ls)[0]
            spec = _sim_spec(args, "B", n, L, stream, reps, args.order)
            stream += 1
            rep = run_estimation_study(spec, threads=threads)
            failures.extend([n, L, *f] for f in rep.failures)
            orders_seen[f"n={n}"] = list(rep.selected_orders)
            md = rep.metrics["gamma"]
            mp = rep.metrics["gamma_pava"]
            rows.append([n, L, "dorqf", rep.reps_used, float(md.bias2),
                         float(md.var), float(md.mse)])
            rows.append([n, L, "pava", rep.reps_used, float(mp.bias2),
                         float(mp.var), float(mp.mse)])
        extra["selected_orders"] = orders_seen
    elif table == "s2":
        header = ["n", "L", "order", "reps", "coverage", "mean_width"]
        B = args.B if args.B is not None else 1000
        stream = 0
        for n in sorted(ns):
            L = sorted(Ls)[0]
            spec = _sim_spec(args, "A1", n, L, stream, reps, None)
            stream += 1
            rep = run_coverage_study(spec, orders=tuple(args.orders),
                                     alpha=args.alpha, draws=B, threads=threads)
            failures.extend([n, L, *f] for f in rep.failures)
            for cell in rep.cells:
                rows.append([n, L, cell.order, cell.reps_used,
                             float(cell.coverage), float(cell.mean_width)])
    elif table == "power":
        header = ["n", "L", "d", "reps", "rejections", "power"]
        B = args.B if args.B is not None else 500
        d_grid = args.d or [0.0, 0.1, 0.25, 0.5, 0.75, 1.0]
        stream = 0
        for n in sorted(ns):
            L = sorted(Ls)[0]
            spec = _sim_spec(args, "A2", n, L, stream, reps, args.order)
            stream += 1
            rep = run_power_study(spec, d_grid=tuple(sorted(d_grid)),
                                  alpha=args.alpha, draws=B,
                                  method=args.test_method, threads=threads)
            failures.extend([n, L, *f] for f in rep.failures)
            for cell in rep.cells:
                rows.append([n, L, float(cell.d), cell.reps_used,
                             cell.rejections, float(cell.rate)])
        extra["method"] = args.test_method
    else:  # pragma: no cover - argparse restricts choices
        raise DataError(f"unknown table {table!r}")

    _write_rows(args.out, header, rows)
    extra.update({
        "outputs": [args.out],
        "failures": failures,
        "runtime_s": time.perf_counter() - t0,
        "threads": threads,
    })
    _write_manifest(args.out, "simulate", _config_of(args), extra)
    print(f"wrote {args.out} ({len(rows)} rows, {len(failures)} failed reps)")
    return 0


# ---------------------------------------------------------------- parser


def _add_dataset_args(p, predictor_required=False):
    p.add_argument("--outcome", required=True, help="wide outcome quantile CSV")
    p.add_argument("--covariates", help="scalar covariate CSV (id,<names>)")
    p.add_argument("--predictor", required=predictor_required,
                   help="wide predictor quantile CSV")


def build_parser():
    parser = _Parser(prog="dorqf", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("quantiles", parents=[], prog="dorqf quantiles",
                       help="empirical quantile functions from raw long CSV")
    p.add_argument("input", help="long CSV with header id,variable,value")
    p.add_argument("--out-prefix", required=True)
    p.add_argument("--m", type=int, default=100)
    p.add_argument("--grid-lo", type=float, default=0.005)
    p.add_argument("--grid-hi", type=float, default=0.995)
    p.set_defaults(func=cmd_quantiles)

    p = sub.add_parser("fit", prog="dorqf fit",
                       help="fit the shape-constrained model")
    _add_dataset_args(p)
    p.add_argument("--out", required=True, help="fit archive JSON path")
    p.add_argument("--order", type=int, help="basis order; omit to cross-validate")
    p.add_argument("--cv-orders", type=int, nargs="+",
                   default=list(range(1, 9)))
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--ridge", type=float, default=0.0)
    p.add_argument("--pve", type=float, default=0.99)
    p.add_argument("--submodel", choices=["auto", "dorqf", "qfosr", "dod"],
                   default="auto")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", prog="dorqf predict",
                       help="predict outcome quantile functions")
    p.add_argument("--fit", required=True)
    p.add_argument("--covariates")
    p.add_argument("--predictor")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("cv", prog="dorqf cv",
                       help="cross-validate the basis order")
    _add_dataset_args(p)
    p.add_argument("--out", required=True)
    p.add_argument("--cv-orders", type=int, nargs="+",
                   default=list(range(1, 9)))
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--unweighted", action="store_true",
                   help="plain stacked squared error instead of quadrature")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("band", prog="dorqf band",
                       help="projection-based joint confidence band")
    p.add_argument("--fit", required=True)
    p.add_argument("--target", required=True,
                   help="beta0..beta{q}, h, or gamma (needs --qx)")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--B", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--qx", help="reference predictor curve CSV (p,value)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_band)

    p = sub.add_parser("test", prog="dorqf test",
                       help="bootstrap test for a global distributional effect")
    _add_dataset_args(p)
    p.add_argument("--drop", required=True,
                   help="z1..zq or 'predictor': the term the null removes")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--B", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="JSON result path")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("simulate", prog="dorqf simulate",
                       help="Monte-Carlo study tables")
    p.add_argument("--table", required=True,
                   choices=["1", "2", "3", "s1", "s2", "power"])
    p.add_argument("--n", type=int, action="append")
    p.add_argument("--L", type=int, action="append")
    p.add_argument("--d", type=float, action="append",
                   help="departure grid for --table power")
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--m", type=int, default=100)
    p.add_argument("--n-test", type=int, default=100)
    p.add_argument("--order", type=int,
                   help="fixed basis order; omit to cross-validate")
    p.add_argument("--cv-orders", type=int, nargs="+",
                   default=list(range(1, 9)))
    p.add_argument("--orders", type=int, nargs="+", default=[2, 3, 4],
                   help="band orders for --table s2")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--B", type=int, help="band/bootstrap draws")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--noise", type=float, default=0.1)
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--noise-sd", dest="noise_sd", action="store_true",
                     default=True,
                     help="read --noise as a standard deviation (default)")
    grp.add_argument("--noise-variance", dest="noise_sd", action="store_false",
                     help="read --noise as a variance")
    p.add_argument("--noise-after", action="store_true",
                   help="add noise to the summarized curves instead of raw draws")
    p.add_argument("--test-method", choices=["band", "bootstrap"],
                   default="band")
    p.add_argument("--threads", type=int)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    args._parser = parser
    if getattr(args, "threads", None) is None and args.command == "simulate":
        args.threads = _default_threads()
    try:
        return args.func(args)
    except DataError as exc:
        print(f"dorqf: data error: {exc}", file=sys.stderr)
        return 2
    except (QpError, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"dorqf: numerical failure: {exc}", file=sys.stderr)
        return 3
    except RuntimeError as exc:
        print(f"dorqf: numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"dorqf: data error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"dorqf: data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
