"""Design-based covariance of the fitted coefficients.

Sandwich form Q^{-1} G Q^{-1}: Q is the expected-information matrix at the
estimate, and G accumulates between-PSU variability of the per-PSU score
sums within each stratum, with a finite-population factor (1 - f_h) and a
small-sample factor (n - 1) / (n - p).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import families as fm
from .design import summary_from_arrays
from .errors import DomainError, RankDeficientError, SingletonStratumError

SINGLETON_POLICIES = ("error", "centered", "certainty")


@dataclass(frozen=True)
class VarianceOptions:
    singleton: str = "error"       # error | centered | certainty
    small_sample_n: str = "obs"    # which n enters (n-1)/(n-p): obs | psu
    apply_small_sample: bool = True

    def __post_init__(self):
        if self.singleton not in SINGLETON_POLICIES:
            raise DomainError(f"unknown singleton policy {self.singleton!r}")
        if self.small_sample_n not in ("obs", "psu"):
            raise DomainError("small_sample_n must be 'obs' or 'psu'")


@dataclass(frozen=True)
class VarianceComponents:
    Q: np.ndarray
    score_psu: dict
    stratum_means: dict
    G: np.ndarray
    vbeta: np.ndarray
    df_design: int


def _residual_scores(fit, frame):
    """Per-row score contribution r_i = w_i (y_i - mu_i) / (V(mu_i) g'(mu_i)).

    Dispersion-free on purpose: phi cancels between Q and G in the
    sandwich, so neither side carries it.
    """
    gp, _ = fm.link_derivs(fit.link, fit.mu)
    V, _ = fm.variance_fn(fit.family, fit.mu)
    r = frame.weights * (frame.y - fit.mu) / (V * gp)
    we0 = frame.weights / (V * gp * gp)
    return r, we0


def _grouped(frame):
    """(stratum, psu) -> row indices, strata and PSUs in sorted label order."""
    order = {}
    for idx, (s, p) in enumerate(zip(frame.strata, frame.psu)):
        order.setdefault((s, p), []).append(idx)
    return dict(sorted(order.items()))


def psu_score_sums(fit, frame):
    """Per-PSU sums of the score contributions, keyed by (stratum, psu)."""
    r, _ = _residual_scores(fit, frame)
    R = frame.X * r[:, None]
    return {key: R[rows].sum(axis=0) for key, rows in _grouped(frame).items()}


def _stratum_fpc(frame):
    fpc = {}
    for s, f in zip(frame.strata, frame.fpc):
        fpc.setdefault(s, float(f))
    return fpc


def sandwich_variance(fit, frame, design=None, options=None):
    """Covariance of beta-hat under the stratified cluster design.

    design defaults to the summary of the frame's own design vectors
    (i.e. counts after listwise deletion). The n in (n - 1) / (n - p) is
    the observation count unless options.small_sample_n = "psu".
    """
    options = options or VarianceOptions()
    if design is None:
        design = summary_from_arrays(frame.strata, frame.psu, frame.weights)
    X = frame.X
    p = X.shape[1]

    r, we0 = _residual_scores(fit, frame)
    Q = (X * we0[:, None]).T @ X
    Q = 0.5 * (Q + Q.T)

    groups = _grouped(frame)
    R = X * r[:, None]
    score_psu = {key: R[rows].sum(axis=0) for key, rows in groups.items()}
    by_stratum = {}
    for (s, psu_label), e in score_psu.items():
        by_stratum.setdefault(s, []).append(e)

    fpc = _stratum_fpc(frame)
    grand_mean = np.mean(list(score_psu.values()), axis=0)

    G = np.zeros((p, p))
    stratum_means = {}
    for s in sorted(by_stratum):
        E = np.asarray(by_stratum[s])
        n_h = E.shape[0]
        ebar = E.mean(axis=0)
        stratum_means[s] = ebar
        f_h = fpc[s]
        if n_h == 1:
            if options.singleton == "error":
                raise SingletonStratumError(
                    f"stratum {s!r} has a single PSU; set a singleton policy "
                    "('centered' or 'certainty') to proceed")
            if options.singleton == "certainty":
                continue
            dev = E[0] - grand_mean
            G += (1.0 - f_h) * np.outer(dev, dev)
            continue
        dev = E - ebar
        G += (n_h * (1.0 - f_h) / (n_h - 1.0)) * (dev.T @ dev)

    if options.apply_small_sample and np.any(G != 0.0):
        n_small = design.n if options.small_sample_n == "obs" else design.n_psu
        if n_small <= p:
            raise DomainError(
                f"small-sample factor needs n ({n_small}) > p ({p})")
        G *= (n_small - 1.0) / (n_small - p)
    G = 0.5 * (G + G.T)

    try:
        cho = scipy.linalg.cho_factor(Q, check_finite=False)
    except scipy.linalg.LinAlgError:
        raise RankDeficientError("information matrix Q is not positive definite") from None
    vbeta = scipy.linalg.cho_solve(cho, scipy.linalg.cho_solve(cho, G).T)
    vbeta = 0.5 * (vbeta + vbeta.T)

    for arr in (Q, G, vbeta):
        arr.setflags(write=False)
    return VarianceComponents(
        Q=Q, score_psu=score_psu, stratum_means=stratum_means, G=G,
        vbeta=vbeta, df_design=design.n_psu - design.H)
