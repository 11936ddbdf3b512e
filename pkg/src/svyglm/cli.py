"""Command-line front end: fit models from CSV, run Wald tests, simulate data.

Exit codes: 0 success, 1 input or validation error, 2 fit did not converge
(the report is still written).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import families as fm
from .design import DesignColumns, design_summary, load_dataset, summary_from_arrays
from .errors import ConfigError, SurveyGlmError
from .fit import FitConfig, fit_pseudo_mle
from .formula import parse_formula
from .frame import CenteredTerm, build_model_frame
from .inference import (
    ContrastMatrix,
    coefficient_table,
    contrast_from_names,
    wald_test,
)
from .report import build_report, render_csv, render_json, render_text
from .simulate import SimulationConfig, simulate_dataset
from .variance import VarianceOptions, sandwich_variance


def _read_config_file(path):
    """key=value lines mirroring the long flags; '#' starts a comment."""
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            value = value.strip()
            if key == "test":
                values.setdefault("test", []).append(value)
            else:
                values[key] = value
    return values


def _merge(args, file_values, key, default=None, cast=str):
    value = getattr(args, key, None)
    if value is None:
        raw = file_values.get(key)
        if raw is None:
            return default
        try:
            return cast(raw)
        except (TypeError, ValueError):
            raise ConfigError(f"config value {key}={raw!r} is invalid") from None
    return value


def _parse_df_mode(text):
    if text in ("design", "paper"):
        return text
    try:
        return float(text)
    except ValueError:
        raise ConfigError(
            f"df-mode must be 'design', 'paper', or a number, not {text!r}") from None


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="svyglm",
        description="Survey-weighted generalized linear models with "
                    "linearization variance and Wald tests.")
    sub = parser.add_subparsers(dest="command", required=True)

    fit_p = sub.add_parser("fit", help="fit a model to a CSV dataset")
    fit_p.add_argument("--config", help="key=value file mirroring the flags")
    fit_p.add_argument("--data", help="input CSV path")
    fit_p.add_argument("--model", help="formula, e.g. 'y ~ 1 + x + C(g, ref=a)'")
    fit_p.add_argument("--family", choices=fm.FAMILY_KINDS)
    fit_p.add_argument("--link", choices=fm.LINK_KINDS)
    fit_p.add_argument("--weight", help="weight column")
    fit_p.add_argument("--strata", help="stratum column")
    fit_p.add_argument("--psu", help="PSU column")
    fit_p.add_argument("--fpc", help="sampling-fraction column")
    fit_p.add_argument("--categorical", help="comma list of columns forced categorical")
    fit_p.add_argument("--centering", choices=("weighted", "unweighted"))
    fit_p.add_argument("--dispersion", choices=fm.DISPERSION_RULES)
    fit_p.add_argument("--nb-k", dest="nb_k", type=float,
                       help="negative-binomial shape k (default 1.0)")
    fit_p.add_argument("--test", action="append",
                       help="comma list of coefficient names to test jointly; repeatable")
    fit_p.add_argument("--test-file", dest="test_file", action="append",
                       help="CSV file with an explicit contrast matrix; repeatable")
    fit_p.add_argument("--df-mode", dest="df_mode",
                       help="design | paper | fixed number (default design)")
    fit_p.add_argument("--level", type=float, help="CI level (default 0.95)")
    fit_p.add_argument("--singleton", choices=("error", "centered", "certainty"))
    fit_p.add_argument("--max-iter", dest="max_iter", type=int)
    fit_p.add_argument("--tol", type=float)
    fit_p.add_argument("--beta-tol", dest="beta_tol", type=float)
    fit_p.add_argument("--ridge-init", dest="ridge_init", type=float)
    fit_p.add_argument("--mu-floor", dest="mu_floor", type=float)
    fit_p.add_argument("--out-format", dest="out_format",
                       choices=("text", "json", "csv"))
    fit_p.add_argument("--out", help="output path (default stdout)")

    sim_p = sub.add_parser("simulate", help="write a synthetic survey CSV")
    sim_p.add_argument("--seed", type=int, required=True)
    sim_p.add_argument("--beta", required=True, help="comma list of true coefficients")
    sim_p.add_argument("--strata", type=int, default=2, help="number of strata")
    sim_p.add_argument("--psus", type=int, default=2, help="PSUs per stratum")
    sim_p.add_argument("--obs", type=int, default=25, help="observations per PSU")
    sim_p.add_argument("--family", choices=fm.FAMILY_KINDS, default="normal")
    sim_p.add_argument("--link", choices=fm.LINK_KINDS)
    sim_p.add_argument("--numeric", help="comma list of numeric covariate names")
    sim_p.add_argument("--categorical", action="append", default=[],
                       help="name=level1,level2,... ; repeatable")
    sim_p.add_argument("--no-intercept", action="store_true")
    sim_p.add_argument("--unit-weights", action="store_true")
    sim_p.add_argument("--fpc", type=float, default=0.0)
    sim_p.add_argument("--dispersion-value", dest="dispersion_value",
                       type=float, default=1.0)
    sim_p.add_argument("--nb-k", dest="nb_k", type=float, default=1.0)
    sim_p.add_argument("--out", help="output CSV path (default stdout)")
    sim_p.add_argument("--truth-out", dest="truth_out",
                       help="side file for the true parameters (JSON); "
                            "defaults to <out>.truth.json when --out is given")
    return parser


def _load_contrast_file(path, column_labels):
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            rows.append([float(cell) for cell in line.split(",")])
    L = np.asarray(rows, dtype=float)
    if L.ndim != 2 or L.shape[1] != len(column_labels):
        raise ConfigError(
            f"{path}: contrast matrix must have {len(column_labels)} columns")
    labels = tuple(f"row{i + 1}" for i in range(L.shape[0]))
    return ContrastMatrix(L=L, labels=labels)


def _run_fit(args):
    file_values = _read_config_file(args.config) if args.config else {}
    data_path = _merge(args, file_values, "data")
    model = _merge(args, file_values, "model")
    if not data_path or not model:
        raise ConfigError("fit requires --data and --model (flag or config file)")

    family_kind = _merge(args, file_values, "family", default="normal")
    nb_k = _merge(args, file_values, "nb_k", cast=float)
    dispersion = _merge(args, file_values, "dispersion")
    ancillary = None
    if family_kind == "negative_binomial":
        ancillary = 1.0 if nb_k is None else nb_k
    fam = fm.family(family_kind, ancillary=ancillary, dispersion=dispersion)
    link_kind = _merge(args, file_values, "link")
    lnk = fm.Link(link_kind) if link_kind else fm.default_link(fam)

    bindings = DesignColumns(
        weight=_merge(args, file_values, "weight"),
        stratum=_merge(args, file_values, "strata"),
        psu=_merge(args, file_values, "psu"),
        fpc=_merge(args, file_values, "fpc"),
    )
    forced = _merge(args, file_values, "categorical", default="")
    force_categorical = tuple(s.strip() for s in forced.split(",") if s.strip())
    ds = load_dataset(data_path, bindings, force_categorical=force_categorical)
    full_design = design_summary(ds)

    spec = parse_formula(model)
    centering = _merge(args, file_values, "centering", default="weighted")
    if centering == "unweighted":
        terms = tuple(CenteredTerm(t.column, weighted=False)
                      if isinstance(t, CenteredTerm) else t for t in spec.terms)
        spec = type(spec)(response=spec.response, terms=terms, intercept=spec.intercept)
    frame = build_model_frame(ds, spec)
    analysis_design = summary_from_arrays(frame.strata, frame.psu, frame.weights)

    fit_config = FitConfig(
        max_iter=_merge(args, file_values, "max_iter", default=50, cast=int),
        tol=_merge(args, file_values, "tol", default=1e-10, cast=float),
        beta_tol=_merge(args, file_values, "beta_tol", default=1e-8, cast=float),
        ridge_init=_merge(args, file_values, "ridge_init", default=1e-4, cast=float),
        mu_floor=_merge(args, file_values, "mu_floor", default=1e-10, cast=float),
    )
    result = fit_pseudo_mle(frame, fam, lnk, fit_config)

    vopts = VarianceOptions(
        singleton=_merge(args, file_values, "singleton", default="error"))
    vc = sandwich_variance(result, frame, analysis_design, vopts)

    df_mode = _parse_df_mode(_merge(args, file_values, "df_mode", default="design"))
    level = _merge(args, file_values, "level", default=0.95, cast=float)
    table = coefficient_table(result, vc, level=level, df_mode=df_mode,
                              design=analysis_design)

    tests = []
    for spec_str in (args.test or file_values.get("test") or []):
        names = [s.strip() for s in spec_str.split(",") if s.strip()]
        cm = contrast_from_names(names, list(frame.column_labels))
        tests.append((spec_str, wald_test(result.beta, vc.vbeta, cm,
                                          df_mode=df_mode, design=analysis_design)))
    for path in (args.test_file or []):
        cm = _load_contrast_file(path, frame.column_labels)
        tests.append((path, wald_test(result.beta, vc.vbeta, cm,
                                      df_mode=df_mode, design=analysis_design)))

    df_mode_desc = df_mode if isinstance(df_mode, str) else f"fixed({df_mode:g})"
    report = build_report(
        command="fit", data_path=data_path, formula=model, fam=fam, lnk=lnk,
        full_design=full_design, analysis_design=analysis_design,
        dropped_rows=ds.n_rows - frame.n, fit=result, table=table, tests=tests,
        df_mode_desc=df_mode_desc, level=level,
        options={
            "centering": centering,
            "singleton": vopts.singleton,
            "max_iter": fit_config.max_iter,
            "tol": fit_config.tol,
            "beta_tol": fit_config.beta_tol,
        })

    out_format = _merge(args, file_values, "out_format", default="text")
    if out_format == "json":
        text = render_json(report)
    elif out_format == "csv":
        text = render_csv(report)
    else:
        text = render_text(report)
    out_path = _merge(args, file_values, "out")
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if result.converged else 2


def _parse_categorical_specs(specs):
    out = []
    for spec in specs:
        if "=" not in spec:
            raise ConfigError(
                f"categorical spec {spec!r} must look like name=level1,level2,...")
        name, _, levels = spec.partition("=")
        level_list = tuple(s.strip() for s in levels.split(",") if s.strip())
        out.append((name.strip(), level_list))
    return tuple(out)


def _run_simulate(args):
    beta = tuple(float(s) for s in args.beta.split(",") if s.strip())
    numeric = tuple(s.strip() for s in (args.numeric or "").split(",") if s.strip())
    categorical = _parse_categorical_specs(args.categorical)
    if not numeric and not categorical and len(beta) > int(not args.no_intercept):
        # convenience: invent numeric covariates to match beta's length
        numeric = tuple(f"x{i + 1}"
                        for i in range(len(beta) - int(not args.no_intercept)))
    config = SimulationConfig(
        seed=args.seed, beta=beta, n_strata=args.strata,
        psus_per_stratum=args.psus, obs_per_psu=args.obs,
        family_kind=args.family, link_kind=args.link,
        numeric=numeric, categorical=categorical,
        intercept=not args.no_intercept, unit_weights=args.unit_weights,
        fpc=args.fpc, dispersion=args.dispersion_value, nb_k=args.nb_k)
    csv_text, truth = simulate_dataset(config)

    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(csv_text)
    else:
        sys.stdout.write(csv_text)
    truth_path = args.truth_out or (f"{args.out}.truth.json" if args.out else None)
    if truth_path:
        with open(truth_path, "w", encoding="utf-8") as fh:
            json.dump(truth, fh, indent=2)
            fh.write("\n")
    return 0


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "fit":
            return _run_fit(args)
        return _run_simulate(args)
    except SurveyGlmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
