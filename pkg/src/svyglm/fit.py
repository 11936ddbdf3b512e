"""Pseudo-maximum-likelihood fitting by ridge-stabilized Newton-Raphson.

The estimating equations weight each case by its sampling weight. The
Newton step solves (-H) d = s; whenever -H is not positive definite or a
step fails to improve the weighted log likelihood, the diagonal of -H is
inflated multiplicatively with a geometrically growing ridge until the
step succeeds. Dispersion is profiled out: the step direction does not
depend on phi, so iteration runs at phi = 1 and the family's dispersion
rule is applied once at the optimum.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from . import _kernels as kernels
from . import families as fm
from .errors import DomainError, NonPositiveDfError, RankDeficientError

PHI_FLOOR = 1e-10


@dataclass(frozen=True)
class FitConfig:
    max_iter: int = 50
    tol: float = 1e-10          # relative log-likelihood change
    beta_tol: float = 1e-8      # max |delta beta|
    ridge_init: float = 1e-4
    ridge_growth: float = 10.0
    mu_floor: float = 1e-10     # distance kept from the mean-domain boundary
    max_ridge_tries: int = 30
    update_ancillary: bool = False   # method-of-moments refresh of the NB shape
    ancillary_tol: float = 1e-8
    max_ancillary_rounds: int = 20

    def __post_init__(self):
        if self.max_iter < 1:
            raise DomainError("max_iter must be at least 1")
        for name in ("tol", "beta_tol", "ridge_init", "ridge_growth", "mu_floor"):
            if getattr(self, name) <= 0:
                raise DomainError(f"{name} must be positive")


@dataclass(frozen=True)
class FitResult:
    beta: np.ndarray
    eta: np.ndarray
    mu: np.ndarray
    phi: float
    loglik: float
    loglik_trace: tuple[float, ...]
    iterations: int
    converged: bool
    neg_hessian: np.ndarray
    we_diag: np.ndarray
    family: fm.Family
    link: fm.Link
    column_labels: tuple[str, ...]


def _evaluate(X, y, w, family, link, beta, phi, mu_floor):
    """One fused kernel pass at the given coefficients."""
    eta = np.ascontiguousarray(X @ beta)
    n = len(y)
    mu = np.empty(n)
    u = np.empty(n)
    w0 = np.empty(n)
    we = np.empty(n)
    nb_k = family.ancillary if family.kind == "negative_binomial" else 0.0
    ll = kernels.glm_pass(
        kernels.FAMILY_CODES[family.kind], kernels.LINK_CODES[link.kind],
        nb_k, phi, mu_floor,
        np.ascontiguousarray(y), eta, np.ascontiguousarray(w),
        mu, u, w0, we)
    return eta, mu, u, w0, we, ll


def weighted_loglik(frame, family, link, beta, phi, mu_floor=1e-10):
    """Weighted log likelihood sum_i w_i log f(y_i; mu_i, phi) at beta."""
    beta = np.asarray(beta, dtype=float)
    _, _, _, _, _, ll = _evaluate(frame.X, frame.y, frame.weights,
                                  family, link, beta, phi, mu_floor)
    if not np.isfinite(ll):
        raise DomainError("log likelihood is not finite at the given coefficients")
    return ll


def score_vector(frame, family, link, beta, phi, mu_floor=1e-10):
    """Gradient of the weighted log likelihood with respect to beta."""
    beta = np.asarray(beta, dtype=float)
    _, _, u, _, _, _ = _evaluate(frame.X, frame.y, frame.weights,
                                 family, link, beta, phi, mu_floor)
    return frame.X.T @ u


def hessian_matrix(frame, family, link, beta, phi, mu_floor=1e-10):
    """(H, w0): H = -X^T W0 X and the diagonal of W0."""
    beta = np.asarray(beta, dtype=float)
    _, _, _, w0, _, _ = _evaluate(frame.X, frame.y, frame.weights,
                                  family, link, beta, phi, mu_floor)
    A = (frame.X * w0[:, None]).T @ frame.X
    H = -0.5 * (A + A.T)
    return H, w0


def check_rank(X, labels):
    """Pivoted-QR rank check; names the aliased columns on failure."""
    n, p = X.shape
    R, perm = scipy.linalg.qr(X, mode="r", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = diag[0] * max(n, p) * np.finfo(float).eps if diag.size else 0.0
    rank = int(np.sum(diag > tol))
    if rank < p:
        aliased = tuple(labels[j] for j in perm[rank:])
        raise RankDeficientError(f"design matrix has rank {rank} < {p} columns",
                                 aliased=aliased)


def _warm_start(X, y, w, family, link, mu_floor):
    """One weighted least-squares solve on the linearized link."""
    ybar = float(np.sum(w * y) / np.sum(w))
    floor = max(mu_floor, 1e-8)
    mu0 = fm.floor_mean(family, (y + ybar) / 2.0, floor)
    if link.kind == "log":
        # the family domain may allow what the link cannot (normal with log)
        mu0 = np.maximum(mu0, floor)
    elif link.kind == "inverse":
        mu0 = np.where(np.abs(mu0) < floor,
                       np.where(mu0 < 0, -floor, floor), mu0)
    eta0 = fm.link_apply(link, mu0)
    gp, _ = fm.link_derivs(link, mu0)
    V, _ = fm.variance_fn(family, mu0)
    z = eta0 + (y - mu0) * gp
    ww = w / (V * gp * gp)
    A = (X * ww[:, None]).T @ X
    b = X.T @ (ww * z)
    try:
        return np.linalg.solve(A, b)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(A, b, rcond=None)[0]


def fit_pseudo_mle(frame, family, link, config=None, start=None):
    """Maximize the weighted log likelihood over beta.

    Raises RankDeficientError when X has linearly dependent columns (or
    fewer rows than columns). A fit that exhausts max_iter or the ridge
    ladder is returned with converged=False rather than raised.
    """
    config = config or FitConfig()
    if not fm.is_valid_pair(family, link):
        raise DomainError(
            f"link {link.kind!r} is not supported with family {family.kind!r}")
    X, y, w = frame.X, frame.y, frame.weights
    n, p = X.shape
    if n < p:
        raise RankDeficientError(f"{n} rows cannot identify {p} coefficients")
    fm.validate_response(family, y)
    check_rank(X, frame.column_labels)

    if config.update_ancillary and family.kind == "negative_binomial":
        return _fit_with_ancillary_updates(frame, family, link, config, start)
    return _fit_newton(frame, family, link, config, start)


def _fit_newton(frame, family, link, config, start):
    X, y, w = frame.X, frame.y, frame.weights
    p = X.shape[1]
    floor = config.mu_floor

    if start is None:
        beta = _warm_start(X, y, w, family, link, floor)
    else:
        beta = np.asarray(start, dtype=float).copy()
        if beta.shape != (p,):
            raise DomainError(f"start must have length {p}")

    eta, mu, u, w0, we, ll = _evaluate(X, y, w, family, link, beta, 1.0, floor)
    if not np.isfinite(ll):
        raise DomainError("log likelihood is not finite at the starting values")
    trace = [ll]
    converged = False
    iterations = 0

    for iterations in range(1, config.max_iter + 1):
        s = X.T @ u
        A = (X * w0[:, None]).T @ X
        A = 0.5 * (A + A.T)
        step = None
        for attempt in range(config.max_ridge_tries + 1):
            if attempt == 0:
                damped = A
            else:
                lam = config.ridge_init * config.ridge_growth ** (attempt - 1)
                damped = A + lam * np.diag(np.diag(A))
            try:
                cho = scipy.linalg.cho_factor(damped, check_finite=False)
                delta = scipy.linalg.cho_solve(cho, s, check_finite=False)
            except (scipy.linalg.LinAlgError, ValueError):
                continue
            cand = beta + delta
            state = _evaluate(X, y, w, family, link, cand, 1.0, floor)
            ll_new = state[5]
            if np.isfinite(ll_new) and ll_new >= ll - 1e-12 * (1.0 + abs(ll)):
                step = (cand, state)
                break
        if step is None:
            break
        cand, (eta, mu, u, w0, we, ll_new) = step
        max_dbeta = float(np.max(np.abs(cand - beta)))
        rel_dll = abs(ll_new - ll) / (1.0 + abs(ll_new))
        beta = cand
        ll = ll_new
        trace.append(ll)
        if rel_dll < config.tol and max_dbeta < config.beta_tol:
            converged = True
            break

    phi = max(fm.estimate_dispersion(family, y, mu, w, p), PHI_FLOOR)
    eta, mu, u, w0, we, ll = _evaluate(X, y, w, family, link, beta, phi, floor)
    score = X.T @ u
    neg_hessian = (X * w0[:, None]).T @ X
    neg_hessian = 0.5 * (neg_hessian + neg_hessian.T)
    converged = bool(converged
                     and np.max(np.abs(score)) <= 1e-6 * (1.0 + abs(ll)))

    for arr in (beta, eta, mu, neg_hessian, we):
        arr.setflags(write=False)
    return FitResult(
        beta=beta, eta=eta, mu=mu, phi=phi, loglik=ll,
        loglik_trace=tuple(trace), iterations=iterations, converged=converged,
        neg_hessian=neg_hessian, we_diag=we, family=family, link=link,
        column_labels=frame.column_labels)


def _pearson_ratio(y, mu, w, p, k):
    V = mu + k * mu * mu
    sum_w = float(np.sum(w))
    return float(np.sum(w * (y - mu) ** 2 / V) / (sum_w - p))


def _moments_ancillary(y, mu, w, p, k_max=1e6):
    """Shape k solving Pearson chi-square / (sum_w - p) = 1, by bisection."""
    if float(np.sum(w)) <= p:
        raise NonPositiveDfError("ancillary update needs sum of weights > p")
    if _pearson_ratio(y, mu, w, p, 0.0) <= 1.0:
        return 0.0
    if _pearson_ratio(y, mu, w, p, k_max) > 1.0:
        return k_max
    lo, hi = 0.0, k_max
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _pearson_ratio(y, mu, w, p, mid) > 1.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * (1.0 + hi):
            break
    return 0.5 * (lo + hi)


def _fit_with_ancillary_updates(frame, family, link, config, start):
    """Alternate Newton fits with moments updates of the NB shape."""
    p = frame.X.shape[1]
    fam = family
    result = _fit_newton(frame, fam, link, config, start)
    for _ in range(config.max_ancillary_rounds):
        k_new = _moments_ancillary(frame.y, result.mu, frame.weights, p)
        if abs(k_new - fam.ancillary) <= config.ancillary_tol * (1.0 + k_new):
            break
        fam = replace(fam, ancillary=k_new)
        result = _fit_newton(frame, fam, link, config, start=result.beta)
    return result
