"""Synthetic stratified-cluster survey data for validation runs.

Generates a nested design (strata of PSUs of observations), covariates
with a mild within-PSU correlation, and a response drawn from the chosen
family at mu = g^{-1}(X beta_true). Output is deterministic for a fixed
seed.
"""

from __future__ import annotations

import io
import csv
from dataclasses import dataclass

import numpy as np

from . import families as fm
from .errors import ConfigError

_PSU_EFFECT_SCALE = 0.3


@dataclass(frozen=True)
class SimulationConfig:
    seed: int
    beta: tuple[float, ...]
    n_strata: int = 2
    psus_per_stratum: int = 2
    obs_per_psu: int = 25
    family_kind: str = "normal"
    link_kind: str | None = None
    numeric: tuple[str, ...] = ()
    categorical: tuple[tuple[str, tuple[str, ...]], ...] = ()
    intercept: bool = True
    unit_weights: bool = False
    fpc: float = 0.0
    dispersion: float = 1.0
    nb_k: float = 1.0

    def __post_init__(self):
        if self.n_strata < 1 or self.psus_per_stratum < 1 or self.obs_per_psu < 1:
            raise ConfigError("strata, PSUs per stratum, and obs per PSU must be >= 1")
        if not (0.0 <= self.fpc < 1.0):
            raise ConfigError("fpc must lie in [0, 1)")
        if self.dispersion <= 0.0:
            raise ConfigError("dispersion must be positive")
        if self.family_kind not in fm.FAMILY_KINDS:
            raise ConfigError(f"unknown family {self.family_kind!r}")
        for name, levels in self.categorical:
            if len(levels) < 2:
                raise ConfigError(f"categorical {name!r} needs at least 2 levels")
            if len(set(levels)) != len(levels):
                raise ConfigError(f"categorical {name!r} has duplicate levels")
        p = int(self.intercept) + len(self.numeric) + sum(
            len(levels) - 1 for _, levels in self.categorical)
        if p == 0:
            raise ConfigError("model has no columns")
        if len(self.beta) != p:
            raise ConfigError(
                f"beta has length {len(self.beta)}, design implies {p} columns")


def _truth_labels(config):
    labels = ["(Intercept)"] if config.intercept else []
    labels.extend(config.numeric)
    for name, levels in config.categorical:
        ordered = sorted(levels)
        for level in ordered[1:]:
            labels.append(f"{name}={level}")
    return labels


def _suggested_formula(config):
    parts = ["1" if config.intercept else "-1"]
    parts.extend(config.numeric)
    for name, levels in config.categorical:
        parts.append(f"C({name}, ref={sorted(levels)[0]})")
    return "y ~ " + " + ".join(parts)


def _draw_response(rng, kind, mu, dispersion, nb_k):
    if kind == "normal":
        return rng.normal(mu, np.sqrt(dispersion))
    if kind == "poisson":
        return rng.poisson(mu).astype(float)
    if kind == "binomial":
        return (rng.random(mu.shape) < mu).astype(float)
    if kind == "gamma":
        return rng.gamma(shape=1.0 / dispersion, scale=mu * dispersion)
    if kind == "negative_binomial":
        if nb_k == 0.0:
            return rng.poisson(mu).astype(float)
        lam = rng.gamma(shape=1.0 / nb_k, scale=nb_k * mu)
        return rng.poisson(lam).astype(float)
    return rng.wald(mu, 1.0 / dispersion)


def simulate_dataset(config):
    """Returns (csv_text, truth) where truth documents the generator."""
    rng = np.random.default_rng(config.seed)
    fam = fm.family(config.family_kind,
                    ancillary=config.nb_k if config.family_kind == "negative_binomial" else None)
    lnk = fm.Link(config.link_kind) if config.link_kind else fm.default_link(fam)
    if not fm.is_valid_pair(fam, lnk):
        raise ConfigError(
            f"link {lnk.kind!r} is not supported with family {fam.kind!r}")

    strata, psus, weights = [], [], []
    numeric_cols = {name: [] for name in config.numeric}
    categorical_cols = {name: [] for name, _ in config.categorical}
    for h in range(1, config.n_strata + 1):
        for i in range(1, config.psus_per_stratum + 1):
            effect = rng.normal(0.0, 1.0)
            for _ in range(config.obs_per_psu):
                strata.append(f"s{h}")
                psus.append(f"s{h}p{i}")
                weights.append(1.0 if config.unit_weights else rng.uniform(1.0, 3.0))
                for name in config.numeric:
                    numeric_cols[name].append(rng.normal() + _PSU_EFFECT_SCALE * effect)
                for name, levels in config.categorical:
                    categorical_cols[name].append(levels[rng.integers(len(levels))])
    n = len(strata)

    blocks = []
    if config.intercept:
        blocks.append(np.ones((n, 1)))
    for name in config.numeric:
        blocks.append(np.asarray(numeric_cols[name]).reshape(-1, 1))
    for name, levels in config.categorical:
        ordered = sorted(levels)
        observed = set(categorical_cols[name])
        missing = [lv for lv in ordered if lv not in observed]
        if missing:
            raise ConfigError(
                f"level(s) {missing} of {name!r} were never drawn; "
                "increase the sample size or change the seed")
        values = categorical_cols[name]
        for level in ordered[1:]:
            blocks.append(np.asarray([1.0 if v == level else 0.0 for v in values])
                          .reshape(-1, 1))
    X = np.hstack(blocks)
    beta = np.asarray(config.beta, dtype=float)
    mu = fm.link_invert(lnk, X @ beta)
    try:
        fm.variance_fn(fam, mu)
    except Exception:
        raise ConfigError(
            "true means fall outside the family domain; adjust beta or the link") from None
    y = _draw_response(rng, fam.kind, mu, config.dispersion, config.nb_k)

    integer_response = fam.kind in ("poisson", "binomial", "negative_binomial")
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    header = (["y"] + list(config.numeric) + [name for name, _ in config.categorical]
              + ["weight", "stratum", "psu", "fpc"])
    writer.writerow(header)
    for i in range(n):
        row = [str(int(y[i])) if integer_response else repr(float(y[i]))]
        row.extend(repr(float(numeric_cols[name][i])) for name in config.numeric)
        row.extend(categorical_cols[name][i] for name, _ in config.categorical)
        row.append(repr(float(weights[i])))
        row.append(strata[i])
        row.append(psus[i])
        row.append(repr(float(config.fpc)))
        writer.writerow(row)

    truth = {
        "seed": config.seed,
        "family": fam.kind,
        "link": lnk.kind,
        "beta": dict(zip(_truth_labels(config), [float(b) for b in beta])),
        "dispersion": config.dispersion,
        "design": {
            "n_strata": config.n_strata,
            "psus_per_stratum": config.psus_per_stratum,
            "obs_per_psu": config.obs_per_psu,
            "fpc": config.fpc,
            "n_rows": n,
            "unit_weights": config.unit_weights,
        },
        "formula": _suggested_formula(config),
        "bindings": {"weight": "weight", "stratum": "stratum",
                     "psu": "psu", "fpc": "fpc"},
    }
    if fam.kind == "negative_binomial":
        truth["nb_k"] = config.nb_k
    return out.getvalue(), truth
