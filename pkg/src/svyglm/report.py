"""Report assembly and rendering (text, json, csv).

The JSON report is the canonical machine-readable artifact (schema_version
1, full float precision); the text rendering shows the same numbers to six
significant digits; the csv rendering is the coefficient table alone.
"""

from __future__ import annotations

import json
import math

SCHEMA_VERSION = 1


def _num(value):
    if value is None:
        return None
    return float(value)


def build_report(*, command, data_path, formula, fam, lnk, full_design,
                 analysis_design, dropped_rows, fit, table, tests, df_mode_desc,
                 level, options):
    """Assemble the versioned report dictionary."""
    coefficients = []
    include_rr = lnk.kind == "log"
    for row in table:
        entry = {
            "label": row.label,
            "est": _num(row.est),
            "se": _num(row.se),
            "t": _num(row.t),
            "p": _num(row.p),
            "ci_lo": _num(row.ci_lo),
            "ci_hi": _num(row.ci_hi),
        }
        if include_rr:
            entry["risk_ratio"] = math.exp(row.est)
        coefficients.append(entry)

    report = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "input": {
            "data": str(data_path),
            "formula": formula,
            "family": fam.kind,
            "link": lnk.kind,
            "ancillary": _num(fam.ancillary),
            "dispersion_rule": fam.dispersion_rule,
        },
        "design": {
            "strata": full_design.H,
            "psus": full_design.n_psu,
            "rows": full_design.n,
            "sum_weights": _num(full_design.sum_weights),
            "psus_per_stratum": dict(zip(full_design.strata, full_design.n_h)),
        },
        "analysis": {
            "rows_used": analysis_design.n,
            "rows_dropped": dropped_rows,
            "strata": analysis_design.H,
            "psus": analysis_design.n_psu,
            "sum_weights": _num(analysis_design.sum_weights),
            "df_design": analysis_design.n_psu - analysis_design.H,
        },
        "fit": {
            "converged": fit.converged,
            "iterations": fit.iterations,
            "loglik": _num(fit.loglik),
            "dispersion": _num(fit.phi),
            "loglik_trace": [_num(v) for v in fit.loglik_trace],
        },
        "inference": {
            "df_mode": df_mode_desc,
            "level": level,
            "coefficients": coefficients,
            "wald_tests": [
                {
                    "label": label,
                    "f": _num(res.f_stat),
                    "ndf": res.ndf,
                    "ddf": _num(res.ddf),
                    "p": _num(res.p_value),
                }
                for label, res in tests
            ],
        },
        "options": options,
    }
    return report


def render_json(report):
    return json.dumps(report, indent=2) + "\n"


def _fmt(value):
    if value is None:
        return "."
    return format(value, ".6g")


def render_text(report):
    lines = []
    inp = report["input"]
    design = report["design"]
    analysis = report["analysis"]
    fit = report["fit"]
    inference = report["inference"]

    lines.append("survey GLM fit")
    lines.append("==============")
    lines.append(f"data:    {inp['data']}")
    lines.append(f"model:   {inp['formula']}")
    extra = f", k={_fmt(inp['ancillary'])}" if inp["ancillary"] is not None else ""
    lines.append(f"family:  {inp['family']} (link {inp['link']}{extra}, "
                 f"dispersion {inp['dispersion_rule']})")
    lines.append("")
    lines.append("design")
    lines.append(f"  strata:          {design['strata']}")
    lines.append(f"  PSUs:            {design['psus']}")
    lines.append(f"  rows:            {design['rows']}"
                 + (f" ({analysis['rows_dropped']} dropped, "
                    f"{analysis['rows_used']} used)"
                    if analysis["rows_dropped"] else ""))
    lines.append(f"  sum of weights:  {_fmt(design['sum_weights'])}")
    lines.append(f"  design df:       {analysis['df_design']}")
    lines.append("")
    lines.append("fit")
    lines.append(f"  converged:       {'yes' if fit['converged'] else 'NO'}"
                 f" ({fit['iterations']} iterations)")
    lines.append(f"  log-likelihood:  {_fmt(fit['loglik'])}")
    lines.append(f"  dispersion:      {_fmt(fit['dispersion'])}")
    lines.append("")

    has_rr = any("risk_ratio" in c for c in inference["coefficients"])
    level_pct = format(100.0 * inference["level"], "g")
    lines.append(f"coefficients (df mode {inference['df_mode']}, {level_pct}% CI)")
    header = f"  {'term':<24} {'est':>12} {'se':>12} {'t':>10} {'p':>10} " \
             f"{'ci_lo':>12} {'ci_hi':>12}"
    if has_rr:
        header += f" {'RR':>12}"
    lines.append(header)
    for c in inference["coefficients"]:
        row = (f"  {c['label']:<24} {_fmt(c['est']):>12} {_fmt(c['se']):>12} "
               f"{_fmt(c['t']):>10} {_fmt(c['p']):>10} "
               f"{_fmt(c['ci_lo']):>12} {_fmt(c['ci_hi']):>12}")
        if has_rr:
            row += f" {_fmt(c.get('risk_ratio')):>12}"
        lines.append(row)

    if inference["wald_tests"]:
        lines.append("")
        lines.append("Wald tests")
        for t in inference["wald_tests"]:
            lines.append(f"  {t['label']}: F = {_fmt(t['f'])}, "
                         f"ndf = {t['ndf']}, ddf = {_fmt(t['ddf'])}, "
                         f"p = {_fmt(t['p'])}")
    lines.append("")
    return "\n".join(lines)


def render_csv(report):
    """Coefficient table as CSV, full precision."""
    coefficients = report["inference"]["coefficients"]
    has_rr = any("risk_ratio" in c for c in coefficients)
    cols = ["label", "est", "se", "t", "p", "ci_lo", "ci_hi"]
    if has_rr:
        cols.append("risk_ratio")
    lines = [",".join(cols)]
    for c in coefficients:
        cells = []
        for col in cols:
            v = c.get(col)
            cells.append("" if v is None else (v if isinstance(v, str) else repr(v)))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
