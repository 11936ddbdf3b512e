"""Distribution families and link functions.

Families carry the mean-variance relationship V(mu) and a dispersion rule;
links carry g, g', g'' and the inverse map. All evaluation functions accept
scalars or numpy arrays and preserve the input kind.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, xlogy

from .errors import DomainError, NonPositiveDfError

FAMILY_KINDS = (
    "normal",
    "poisson",
    "binomial",
    "gamma",
    "negative_binomial",
    "inverse_gaussian",
)
LINK_KINDS = ("identity", "log", "logit", "inverse")
DISPERSION_RULES = ("fixed", "moments", "mle")

# Default dispersion rule per family. Poisson, binomial and the negative
# binomial (whose shape enters through the ancillary, not phi) keep phi = 1.
_DEFAULT_DISPERSION = {
    "normal": "mle",
    "poisson": "fixed",
    "binomial": "fixed",
    "gamma": "moments",
    "negative_binomial": "fixed",
    "inverse_gaussian": "moments",
}

# Links usable with each family: the canonical link first.
VALID_LINKS = {
    "normal": ("identity", "log", "inverse"),
    "poisson": ("log", "identity"),
    "binomial": ("logit", "log", "identity"),
    "gamma": ("inverse", "log", "identity"),
    "negative_binomial": ("log", "identity"),
    "inverse_gaussian": ("inverse", "log", "identity"),
}

LOG2PI = np.log(2.0 * np.pi)

# Guards used when inverting links inside iterative code. The logit clamp is
# part of the public contract; the eta cap only prevents exp overflow.
LOGIT_EPS = 1e-12
MAX_EXP_ARG = 700.0
MAX_INVERSE_MU = 1e300


@dataclass(frozen=True)
class Family:
    """A response distribution: kind, optional ancillary, dispersion rule."""

    kind: str
    ancillary: float | None = None
    dispersion_rule: str = "fixed"

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise DomainError(f"unknown family {self.kind!r}")
        if self.dispersion_rule not in DISPERSION_RULES:
            raise DomainError(f"unknown dispersion rule {self.dispersion_rule!r}")
        if self.kind == "negative_binomial":
            if self.ancillary is None or self.ancillary < 0:
                raise DomainError("negative_binomial requires ancillary k >= 0")
        elif self.ancillary is not None:
            raise DomainError(f"family {self.kind!r} takes no ancillary parameter")


@dataclass(frozen=True)
class Link:
    """A monotone map g from the mean to the linear predictor."""

    kind: str

    def __post_init__(self):
        if self.kind not in LINK_KINDS:
            raise DomainError(f"unknown link {self.kind!r}")


def family(kind, ancillary=None, dispersion=None):
    """Build a Family with the per-kind default dispersion rule."""
    if kind not in FAMILY_KINDS:
        raise DomainError(f"unknown family {kind!r}")
    if dispersion is None:
        dispersion = _DEFAULT_DISPERSION[kind]
    return Family(kind=kind, ancillary=ancillary, dispersion_rule=dispersion)


def link(kind):
    return Link(kind=kind)


def default_link(fam):
    """Canonical-style default link for a family."""
    kind = fam.kind if isinstance(fam, Family) else fam
    return Link(VALID_LINKS[kind][0])


def is_valid_pair(fam, lnk):
    return lnk.kind in VALID_LINKS[fam.kind]


def _as_array(x):
    arr = np.asarray(x, dtype=float)
    return arr, arr.ndim == 0


def _unwrap(value, scalar):
    return float(value) if scalar else value


def link_apply(lnk, mu):
    """g(mu): map means to the linear predictor."""
    m, scalar = _as_array(mu)
    kind = lnk.kind
    if kind == "identity":
        out = m.copy()
    elif kind == "log":
        if np.any(m <= 0):
            raise DomainError("log link requires mu > 0")
        out = np.log(m)
    elif kind == "logit":
        if np.any((m <= 0) | (m >= 1)):
            raise DomainError("logit link requires 0 < mu < 1")
        out = np.log(m / (1.0 - m))
    else:
        if np.any(m == 0):
            raise DomainError("inverse link requires mu != 0")
        out = 1.0 / m
    return _unwrap(out, scalar)


def link_invert(lnk, eta):
    """g^{-1}(eta). The logit inverse is clamped to (eps, 1 - eps), eps = 1e-12."""
    e, scalar = _as_array(eta)
    kind = lnk.kind
    if kind == "identity":
        out = e.copy()
    elif kind == "log":
        out = np.exp(e)
    elif kind == "logit":
        # numerically stable sigmoid, then the contractual clamp
        out = np.where(e >= 0, 1.0 / (1.0 + np.exp(-np.abs(e))),
                       np.exp(-np.abs(e)) / (1.0 + np.exp(-np.abs(e))))
        out = np.clip(out, LOGIT_EPS, 1.0 - LOGIT_EPS)
    else:
        if np.any(e == 0):
            raise DomainError("inverse link cannot invert eta = 0")
        out = 1.0 / e
    return _unwrap(out, scalar)


def link_derivs(lnk, mu):
    """(g'(mu), g''(mu)) in closed form."""
    m, scalar = _as_array(mu)
    kind = lnk.kind
    if kind == "identity":
        gp = np.ones_like(m)
        gpp = np.zeros_like(m)
    elif kind == "log":
        if np.any(m <= 0):
            raise DomainError("log link requires mu > 0")
        gp = 1.0 / m
        gpp = -1.0 / (m * m)
    elif kind == "logit":
        if np.any((m <= 0) | (m >= 1)):
            raise DomainError("logit link requires 0 < mu < 1")
        v = m * (1.0 - m)
        gp = 1.0 / v
        gpp = (2.0 * m - 1.0) / (v * v)
    else:
        if np.any(m == 0):
            raise DomainError("inverse link requires mu != 0")
        gp = -1.0 / (m * m)
        gpp = 2.0 / (m * m * m)
    return _unwrap(gp, scalar), _unwrap(gpp, scalar)


def variance_fn(fam, mu):
    """(V(mu), V'(mu)) for the family's mean-variance relationship."""
    m, scalar = _as_array(mu)
    kind = fam.kind
    if kind == "normal":
        V = np.ones_like(m)
        Vp = np.zeros_like(m)
    elif kind == "poisson":
        _require(m > 0, "poisson requires mu > 0")
        V = m.copy()
        Vp = np.ones_like(m)
    elif kind == "binomial":
        _require((m > 0) & (m < 1), "binomial requires 0 < mu < 1")
        V = m * (1.0 - m)
        Vp = 1.0 - 2.0 * m
    elif kind == "gamma":
        _require(m > 0, "gamma requires mu > 0")
        V = m * m
        Vp = 2.0 * m
    elif kind == "negative_binomial":
        _require(m > 0, "negative_binomial requires mu > 0")
        k = fam.ancillary
        V = m + k * m * m
        Vp = 1.0 + 2.0 * k * m
    else:
        _require(m > 0, "inverse_gaussian requires mu > 0")
        V = m ** 3
        Vp = 3.0 * m * m
    return _unwrap(V, scalar), _unwrap(Vp, scalar)


def _require(cond, message):
    if not np.all(cond):
        raise DomainError(message)


def floor_mean(fam, mu, floor):
    """Pull means back into the family's domain interior (in place on a copy)."""
    m, scalar = _as_array(mu)
    m = m.copy()
    kind = fam.kind
    if kind == "binomial":
        m = np.clip(m, floor, 1.0 - floor)
    elif kind == "normal":
        # only the inverse link can reach mu = 0; keep it away from the pole
        tiny = (np.abs(m) < floor)
        if np.any(tiny):
            m = np.where(tiny, np.where(m < 0, -floor, floor), m)
    else:
        m = np.maximum(m, floor)
    return _unwrap(m, scalar)


def validate_response(fam, y):
    """Check that the response vector lies in the family's support."""
    arr = np.asarray(y, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("response contains non-finite values")
    kind = fam.kind
    if kind == "poisson" or kind == "negative_binomial":
        _require(arr >= 0, f"{kind} requires y >= 0")
    elif kind == "binomial":
        _require((arr >= 0) & (arr <= 1), "binomial requires 0 <= y <= 1")
    elif kind in ("gamma", "inverse_gaussian"):
        _require(arr > 0, f"{kind} requires y > 0")


def log_likelihood(fam, y, mu, w, phi):
    """Sum of w_i * log f(y_i; mu_i, phi) for the family's density."""
    y = np.asarray(y, dtype=float)
    m = np.asarray(mu, dtype=float)
    w = np.asarray(w, dtype=float)
    kind = fam.kind
    if kind == "normal":
        terms = -0.5 * ((y - m) ** 2 / phi + np.log(2.0 * np.pi * phi))
    elif kind == "poisson":
        terms = xlogy(y, m) - m - gammaln(y + 1.0)
    elif kind == "binomial":
        terms = xlogy(y, m) + xlogy(1.0 - y, 1.0 - m)
    elif kind == "gamma":
        a = 1.0 / phi
        terms = a * np.log(y / (m * phi)) - y / (m * phi) - np.log(y) - gammaln(a)
    elif kind == "negative_binomial":
        k = fam.ancillary
        if k == 0.0:
            terms = xlogy(y, m) - m - gammaln(y + 1.0)
        else:
            ik = 1.0 / k
            terms = (gammaln(y + ik) - gammaln(ik) - gammaln(y + 1.0)
                     + xlogy(y, k * m) - (y + ik) * np.log1p(k * m))
    else:
        terms = -0.5 * (np.log(2.0 * np.pi * phi * y ** 3) + (y - m) ** 2 / (phi * m * m * y))
    return float(np.sum(w * terms))


def estimate_dispersion(fam, y, mu, w, p):
    """Dispersion estimate following the family's rule.

    fixed   -> 1
    moments -> weighted Pearson chi-square over (sum_w - p)
    mle     -> closed-form maximum likelihood (normal, inverse_gaussian)
    """
    rule = fam.dispersion_rule
    if rule == "fixed":
        return 1.0
    y = np.asarray(y, dtype=float)
    m = np.asarray(mu, dtype=float)
    w = np.asarray(w, dtype=float)
    sum_w = float(np.sum(w))
    if rule == "moments":
        # the Pearson denominator is the rule's degrees of freedom
        if sum_w <= p:
            raise NonPositiveDfError(
                f"dispersion needs sum of weights ({sum_w:g}) greater than p ({p})")
        V, _ = variance_fn(fam, m)
        return float(np.sum(w * (y - m) ** 2 / V) / (sum_w - p))
    # maximum likelihood, closed form where it exists
    if sum_w <= 0:
        raise NonPositiveDfError("dispersion needs a positive sum of weights")
    if fam.kind == "normal":
        return float(np.sum(w * (y - m) ** 2) / sum_w)
    if fam.kind == "inverse_gaussian":
        return float(np.sum(w * (y - m) ** 2 / (m * m * y)) / sum_w)
    raise DomainError(
        f"mle dispersion is not available for family {fam.kind!r}; use moments")
