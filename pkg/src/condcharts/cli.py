"""Command-line surface.

Subcommands: ``fit``, ``screen``, ``test``, ``diagnose``, ``simulate``.
Flags may also come from a JSON config file (``--config``); explicit
flags win.  Every machine-readable output records the resolved
configuration.  All outputs are deterministic given flags and seed.

Exit codes: 0 success, 2 input error, 3 numerical error, 4 config
error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import diagnosis, simlab
from .chartmodel import (DEFAULT_TAU_GRID, ModelConfig, ScreeningQuery,
                         bootstrap_bands, fit, load_model, predict,
                         save_model, screen)
from .errors import (CondchartsError, ConfigError, FitError, InputError,
                     NumericalError)
from .longdata import load_csv
from .numstat import RngStream
from .ranktest import TestSpec, rank_score_test
from .splines import KnotSpec
from .svgplot import render_chart, render_qq

__all__ = ["main"]


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_file(args)
        return args.handler(args)
    except (InputError, FitError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 4
    except CondchartsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="condcharts",
        description="Conditional growth charts from longitudinal data")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file with default flag values")
        p.add_argument("--seed", type=int, default=None,
                       help="RNG seed (default 0)")
        p.add_argument("--out", help="output file path")
        p.add_argument("--threads", type=int, default=None,
                       help="worker processes for replicate-level work")

    def model_flags(p):
        p.add_argument("--p", type=int, default=None, help="lag order")
        p.add_argument("--knots", default=None,
                       help="comma-separated interior knots, e.g. 0.5,1,1.5")
        p.add_argument("--order", type=int, default=None,
                       help="spline order (4 = cubic)")
        p.add_argument("--domain", default=None,
                       help="lo,hi spline domain (default: span of the data)")
        p.add_argument("--tau-grid", default=None,
                       help="comma-separated quantile levels")

    p = sub.add_parser("fit", help="fit a centile model and write it as JSON")
    p.add_argument("data", help="input CSV")
    model_flags(p)
    common(p)
    p.set_defaults(handler=_cmd_fit)

    p = sub.add_parser("screen", help="screen one measurement against a model")
    p.add_argument("model", help="model JSON from `fit`")
    p.add_argument("--history", required=True,
                   help="prior measurements as t:y,t:y,... ascending in t")
    p.add_argument("--covariates", default="",
                   help="comma-separated covariates at the query time")
    p.add_argument("--t", type=float, required=True, help="query time")
    p.add_argument("--y", type=float, required=True, help="current measurement")
    p.add_argument("--svg", help="write a chart SVG here")
    p.add_argument("--bootstrap", type=int, default=None,
                   help="bootstrap replicates for confidence bands")
    p.add_argument("--data", help="fitting CSV (required with --bootstrap)")
    p.add_argument("--level", type=float, default=None,
                   help="bootstrap confidence level (default 0.90)")
    common(p)
    p.set_defaults(handler=_cmd_screen)

    p = sub.add_parser("test", help="rank score test of linear coefficients")
    p.add_argument("data", help="input CSV")
    p.add_argument("--tau", type=float, default=None, help="quantile level")
    p.add_argument("--columns", default=None,
                   help="linear-block columns to test jointly "
                        "(indices or names, comma-separated)")
    p.add_argument("--per-column", action="store_true",
                   help="additionally test every linear column on its own")
    model_flags(p)
    common(p)
    p.set_defaults(handler=_cmd_test)

    p = sub.add_parser("diagnose", help="simulation-based goodness of fit")
    p.add_argument("data", help="input CSV")
    p.add_argument("--model", help="model JSON (default: fit from the data)")
    p.add_argument("--j", type=int, required=True,
                   help="measurement index to assess (1-based)")
    p.add_argument("--group", default=None,
                   help="subgroup descriptor: all | first<q0.25 | "
                        "first>=q0.25 | x1<q0.25@j2")
    p.add_argument("--size", type=int, default=None,
                   help="simulated sample size (default 5000)")
    p.add_argument("--svg", help="write a QQ plot SVG here")
    model_flags(p)
    common(p)
    p.set_defaults(handler=_cmd_diagnose)

    p = sub.add_parser("simulate",
                       help="Monte Carlo Type I error of the rank score test")
    p.add_argument("--model-id", type=int, default=None, help="design 1..6")
    p.add_argument("--tau", type=float, default=None, help="quantile level")
    p.add_argument("--knots", type=int, default=None,
                   help="number of uniform interior knots")
    p.add_argument("--reps", type=int, default=None, help="replicates")
    p.add_argument("--n", type=int, default=None, help="subjects per replicate")
    p.add_argument("--m", type=int, default=None,
                   help="measurements per subject")
    p.add_argument("--tested", choices=["lag", "pair"], default=None,
                   help="test the lag column alone (q=1) or jointly with "
                        "the lag-distance column (q=2)")
    p.add_argument("--alpha", type=float, default=None,
                   help="nominal level of the test")
    common(p)
    p.set_defaults(handler=_cmd_simulate)

    return parser


_FALLBACKS = {"seed": 0, "threads": 1, "bootstrap": 0, "level": 0.90,
              "size": 5000, "group": "all"}


def _apply_config_file(args):
    """Fill unset flags from the JSON config file; explicit flags win;
    remaining gaps fall back to the built-in defaults."""
    if getattr(args, "config", None):
        try:
            with open(args.config, "r", encoding="utf-8") as fh:
                values = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file {args.config}: {exc}")
        if not isinstance(values, dict):
            raise ConfigError("config file must hold a JSON object")
        for key, value in values.items():
            attr = key.replace("-", "_")
            if not hasattr(args, attr):
                raise ConfigError(f"unknown config key {key!r}")
            if getattr(args, attr) is None:
                if isinstance(value, list):
                    value = ",".join(str(v) for v in value)
                setattr(args, attr, value)
    for attr, fallback in _FALLBACKS.items():
        if hasattr(args, attr) and getattr(args, attr) is None:
            setattr(args, attr, fallback)


def _parse_floats(text, what):
    if text is None or text == "":
        return ()
    try:
        return tuple(float(tok) for tok in str(text).split(","))
    except ValueError:
        raise ConfigError(f"cannot parse {what}: {text!r}")


def _model_config(args, dataset):
    p = 1 if args.p is None else int(args.p)
    order = 4 if args.order is None else int(args.order)
    interior = _parse_floats(args.knots, "--knots")
    taus = _parse_floats(args.tau_grid, "--tau-grid") or DEFAULT_TAU_GRID
    domain = _parse_floats(args.domain, "--domain")
    if domain:
        if len(domain) != 2:
            raise ConfigError("--domain needs exactly lo,hi")
        knots = KnotSpec(interior, order, domain[0], domain[1])
    else:
        times = dataset.all_times()
        if times.size == 0:
            raise InputError("dataset holds no measurements")
        knots = KnotSpec.from_times(times, interior, order)
    return ModelConfig(p, knots, taus)


def _resolved_config(args, **extra):
    skip = {"handler", "command", "config", "out"}
    doc = {k: v for k, v in sorted(vars(args).items())
           if k not in skip and v is not None}
    doc.update(extra)
    return doc


def _write_out(args, text, default_stream=None):
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    elif default_stream is not None:
        default_stream.write(text)


def _cmd_fit(args):
    dataset = load_csv(args.data)
    config = _model_config(args, dataset)
    model = fit(dataset, config, processes=max(1, args.threads))
    out = args.out or "model.json"
    save_model(model, out)
    print(f"config: p={config.p} order={config.knots.order} "
          f"knots={list(config.knots.interior_knots)} "
          f"domain=[{config.knots.t_lower:g}, {config.knots.t_upper:g}]")
    print(f"rows used: {model.n_rows}; subjects used: "
          f"{model.n_subjects_used}; subjects skipped: "
          f"{model.n_subjects_skipped}")
    for tf in model.tau_fits:
        flag = " (degenerate)" if tf.degenerate else ""
        print(f"tau {tf.tau:g}: objective={tf.objective:.6f}{flag}")
    print(f"model written to {out}")
    return 0


def _parse_history(text):
    pairs = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            t_str, y_str = tok.split(":")
            pairs.append((float(t_str), float(y_str)))
        except ValueError:
            raise InputError(f"cannot parse history token {tok!r}; "
                             "expected t:y")
    return tuple(pairs)


def _cmd_screen(args):
    model = load_model(args.model)
    query = ScreeningQuery(
        _parse_history(args.history),
        _parse_floats(args.covariates, "--covariates"),
        args.t, args.y)
    report = screen(model, query)

    band = None
    if args.bootstrap:
        if not args.data:
            raise ConfigError("--bootstrap needs --data for refitting")
        dataset = load_csv(args.data)
        band = bootstrap_bands(dataset, model.config, query,
                               args.bootstrap, args.level, args.seed,
                               processes=max(1, args.threads))

    print(f"conditional centiles at t={query.t_query:g} "
          f"given {len(query.history)} prior measurements:")
    for tau, value in zip(report.centiles.tau_grid, report.centiles.values):
        extra = ""
        if band is not None:
            k = report.centiles.tau_grid.index(tau)
            extra = (f"   [{band.lower[k]:.4f}, {band.upper[k]:.4f}] "
                     f"@{band.level:g}")
        print(f"  tau {tau:g}: {value:.4f}{extra}")
    print(f"current measurement y={report.y_query:g}: {report.label}")

    doc = {
        "run_config": _resolved_config(args),
        "t_query": query.t_query,
        "y_query": report.y_query,
        "band": report.label,
        "tau_grid": list(report.centiles.tau_grid),
        "centiles": [float(v) for v in report.centiles.values],
        "monotonicity_repaired": report.centiles.monotonicity_repaired,
    }
    if band is not None:
        doc["bootstrap"] = {
            "level": band.level,
            "replicates": band.n_replicates,
            "lower": [float(v) for v in band.lower],
            "upper": [float(v) for v in band.upper],
        }
    _write_out(args, json.dumps(doc, indent=2) + "\n")

    if args.svg:
        svg = _screen_svg(model, query, report, band, args)
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(svg)
    return 0


def _screen_svg(model, query, report, band, args):
    knots = model.config.knots
    if query.history:
        t_last = query.history[-1][0]
    else:
        t_last = max(knots.t_lower,
                     query.t_query - 0.25 * (knots.t_upper - knots.t_lower))
    gap = query.t_query - t_last
    t_start = t_last + gap / 50.0
    t_end = min(knots.t_upper, query.t_query + 0.25 * gap)
    times = np.linspace(t_start, t_end, 60)
    curves = np.array([
        predict(model, ScreeningQuery(query.history, query.covariates,
                                      float(t))).values
        for t in times])
    band_tuple = None
    if band is not None:
        band_tuple = (band.tau_grid, band.lower, band.upper, query.t_query)
    svg = render_chart(report.centiles.tau_grid, curves, times,
                       list(query.history), (query.t_query, report.y_query),
                       band=band_tuple)
    header = f"<!-- condcharts screen: {json.dumps(_resolved_config(args))} -->\n"
    return header + svg


_LAG_NAME = "y_lag{k}"
_DIST_NAME = "d{k}_y_lag{k}"


def _linear_column_names(p, l):
    names = []
    for k in range(1, p + 1):
        names.append(_LAG_NAME.format(k=k))
        names.append(_DIST_NAME.format(k=k))
    names.extend(f"x{i}" for i in range(1, l + 1))
    return names


def _parse_columns(text, names):
    cols = []
    for tok in str(text).split(","):
        tok = tok.strip()
        if not tok:
            continue
        if tok in names:
            cols.append(names.index(tok))
        else:
            try:
                cols.append(int(tok))
            except ValueError:
                raise InputError(
                    f"unknown column {tok!r}; known names: {names}")
    if not cols:
        raise ConfigError("--columns is empty")
    return tuple(cols)


def _cmd_test(args):
    from .longdata import build_design

    dataset = load_csv(args.data)
    config = _model_config(args, dataset)
    tau = 0.5 if args.tau is None else float(args.tau)
    names = _linear_column_names(config.p, dataset.l)
    if args.columns is None and not args.per_column:
        raise ConfigError("specify --columns and/or --per-column")

    design = build_design(dataset, config.p, config.knots)
    doc = {"run_config": _resolved_config(args, tau=tau), "tau": tau,
           "columns_available": names}

    if args.columns is not None:
        cols = _parse_columns(args.columns, names)
        result = rank_score_test(design, TestSpec(cols, tau))
        doc["joint"] = {
            "columns": [names[c] for c in cols],
            "statistic": result.statistic,
            "dof": result.dof,
            "p_value": result.p_value,
            "restricted_objective": result.restricted_objective,
        }
        print(f"joint rank score test at tau={tau:g} of "
              f"{[names[c] for c in cols]}: T={result.statistic:.4f}, "
              f"q={result.dof}, p={result.p_value:.4f}")

    if args.per_column:
        full = fit(dataset, ModelConfig(config.p, config.knots, (tau,)))
        beta = full.tau_fits[0].beta
        rows = []
        print(f"per-column estimates at tau={tau:g} "
              "(rank score p-values in parentheses):")
        for c, name in enumerate(names):
            result = rank_score_test(design, TestSpec((c,), tau))
            rows.append({"column": c, "name": name,
                         "estimate": float(beta[c]),
                         "statistic": result.statistic,
                         "p_value": result.p_value})
            print(f"  {name}: {beta[c]:.4f} ({result.p_value:.3f})")
        doc["per_column"] = rows

    _write_out(args, json.dumps(doc, indent=2) + "\n")
    return 0


def _cmd_diagnose(args):
    dataset = load_csv(args.data)
    if args.model:
        model = load_model(args.model)
    else:
        model = fit(dataset, _model_config(args, dataset),
                    processes=max(1, args.threads))
    rule = diagnosis.parse_subgroup(args.group)
    group = diagnosis.subgroup(dataset, rule)
    stream = RngStream(args.seed, 0)
    report = diagnosis.diagnose(model, group, args.j, stream,
                                size=args.size, group_label=args.group)

    print(f"goodness of fit at j={report.j}, group={report.group_label!r}, "
          f"n_observed={report.n_observed}")
    for pt in report.tau_points:
        print(f"  tau {pt.tau:.2f}: tau_hat={pt.tau_hat:.3f} z={pt.z:+.2f}")
    if report.max_abs_z is not None:
        print(f"max |z| = {report.max_abs_z:.2f}")

    doc = {
        "run_config": _resolved_config(args),
        "j": report.j,
        "group": report.group_label,
        "n_observed": report.n_observed,
        "tau_points": [{"tau": pt.tau, "tau_hat": pt.tau_hat, "z": pt.z}
                       for pt in report.tau_points],
        "qq_pairs": [[sim, obs] for sim, obs in report.qq_pairs],
    }
    _write_out(args, json.dumps(doc, indent=2) + "\n")

    if args.svg:
        if not report.qq_pairs:
            raise InputError("empty subgroup: nothing to plot")
        svg = render_qq(report.qq_pairs,
                        title=f"j={report.j}, group {report.group_label}, "
                              f"n={report.n_observed}")
        header = (f"<!-- condcharts diagnose: "
                  f"{json.dumps(_resolved_config(args))} -->\n")
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(header + svg)
    return 0


def _cmd_simulate(args):
    model_id = 1 if args.model_id is None else int(args.model_id)
    tau = 0.5 if args.tau is None else float(args.tau)
    knots = 1 if args.knots is None else int(args.knots)
    reps = 2000 if args.reps is None else int(args.reps)
    n = 200 if args.n is None else int(args.n)
    m = 10 if args.m is None else int(args.m)
    tested = (0, 1) if args.tested == "pair" else (0,)
    alpha = 0.05 if args.alpha is None else float(args.alpha)

    spec = simlab.SimModelSpec(model_id, n, m, 0.0)
    result = simlab.type1_error(spec, tau, knots, reps, args.seed,
                                tested=tested, alpha=alpha,
                                processes=max(1, args.threads))
    header = [
        f"model_id={model_id} tau={tau!r} knots={knots} reps={reps} "
        f"n={n} m={m} tested={'pair' if len(tested) == 2 else 'lag'} "
        f"alpha={alpha!r} seed={args.seed}",
    ]
    text = simlab.calibration_csv([result], header_lines=header)
    _write_out(args, text, default_stream=sys.stdout)
    if args.out:
        print(f"rejection rate {result.rejection_rate!r} "
              f"(mc se {result.mc_standard_error:.5f}) written to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
