"""Pure-numpy fallback for the per-observation fitting kernel.

Composes the reference implementations in svyglm.families, so the compiled
kernel is always checked against the public formulas via the parity tests.
"""

import numpy as np

from .. import families as _fam
from ._codes import FAMILY_CODES, LINK_CODES

_FAMILY_BY_CODE = {v: k for k, v in FAMILY_CODES.items()}
_LINK_BY_CODE = {v: k for k, v in LINK_CODES.items()}


def glm_pass(family, link, nb_k, phi, mu_floor, y, eta, w, mu, u, w0, we):
    """One fused pass over the observations.

    Writes into the preallocated output arrays:
      mu  inverse link of eta, floored into the family domain
      u   score weights      w * (y - mu) / (V * g' * phi)
      we  expected weights   w / (V * g'^2 * phi)
      w0  observed weights   we + w * (y - mu) * (V g'' + V' g') / (V^2 g'^3 phi)

    Returns the weighted log likelihood at mu.
    """
    fam_kind = _FAMILY_BY_CODE[family]
    link_kind = _LINK_BY_CODE[link]
    fam = _fam.Family(
        kind=fam_kind,
        ancillary=nb_k if fam_kind == "negative_binomial" else None,
    )
    lnk = _fam.Link(kind=link_kind)

    # non-finite intermediates on extreme inputs are handled by the caller
    # (a candidate step with non-finite loglik is rejected), so stay silent
    # like the compiled kernel
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        e = np.asarray(eta)
        if link_kind == "log":
            m = np.exp(np.minimum(e, _fam.MAX_EXP_ARG))
        elif link_kind == "inverse":
            m = np.where(e != 0.0, 1.0 / np.where(e != 0.0, e, 1.0),
                         _fam.MAX_INVERSE_MU)
            m = np.clip(m, -_fam.MAX_INVERSE_MU, _fam.MAX_INVERSE_MU)
        else:
            m = _fam.link_invert(lnk, e)
        m = _fam.floor_mean(fam, m, mu_floor)
        mu[:] = m

        gp, gpp = _fam.link_derivs(lnk, m)
        V, Vp = _fam.variance_fn(fam, m)
        r = np.asarray(y) - m
        wa = np.asarray(w)
        u[:] = wa * r / (V * gp * phi)
        we[:] = wa / (V * gp * gp * phi)
        w0[:] = we + wa * r * (V * gpp + Vp * gp) / (V * V * gp ** 3 * phi)
        return _fam.log_likelihood(fam, y, m, wa, phi)
