# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-observation kernel for the Newton fitting loop.

Single pass per iteration: inverse link, domain flooring, score weights,
observed and expected weight diagonals, and the weighted log likelihood,
with no intermediate arrays. Must stay semantically identical to the
numpy fallback in _numpy.py (the parity tests enforce this).
"""

from libc.math cimport exp, log, log1p, lgamma, fabs

cdef double LOG2PI = 1.8378770664093453
cdef double LOGIT_EPS = 1e-12
cdef double MAX_EXP_ARG = 700.0
cdef double MAX_INVERSE_MU = 1e300

cdef int F_NORMAL = 0
cdef int F_POISSON = 1
cdef int F_BINOMIAL = 2
cdef int F_GAMMA = 3
cdef int F_NEGBIN = 4
cdef int F_INVGAUSS = 5

cdef int L_IDENTITY = 0
cdef int L_LOG = 1
cdef int L_LOGIT = 2
cdef int L_INVERSE = 3


cdef inline double _inv_link(int link, double e) noexcept nogil:
    cdef double t
    if link == L_IDENTITY:
        return e
    if link == L_LOG:
        if e > MAX_EXP_ARG:
            e = MAX_EXP_ARG
        return exp(e)
    if link == L_LOGIT:
        if e >= 0.0:
            t = exp(-e)
            t = 1.0 / (1.0 + t)
        else:
            t = exp(e)
            t = t / (1.0 + t)
        if t < LOGIT_EPS:
            t = LOGIT_EPS
        elif t > 1.0 - LOGIT_EPS:
            t = 1.0 - LOGIT_EPS
        return t
    # inverse
    if e == 0.0:
        return MAX_INVERSE_MU
    t = 1.0 / e
    if t > MAX_INVERSE_MU:
        t = MAX_INVERSE_MU
    elif t < -MAX_INVERSE_MU:
        t = -MAX_INVERSE_MU
    return t


cdef inline double _floor_mean(int family, double m, double floor) noexcept nogil:
    if family == F_BINOMIAL:
        if m < floor:
            return floor
        if m > 1.0 - floor:
            return 1.0 - floor
        return m
    if family == F_NORMAL:
        if fabs(m) < floor:
            return -floor if m < 0.0 else floor
        return m
    return m if m > floor else floor


cdef inline void _link_derivs(int link, double m, double* gp, double* gpp) noexcept nogil:
    cdef double v
    if link == L_IDENTITY:
        gp[0] = 1.0
        gpp[0] = 0.0
    elif link == L_LOG:
        gp[0] = 1.0 / m
        gpp[0] = -1.0 / (m * m)
    elif link == L_LOGIT:
        v = m * (1.0 - m)
        gp[0] = 1.0 / v
        gpp[0] = (2.0 * m - 1.0) / (v * v)
    else:
        gp[0] = -1.0 / (m * m)
        gpp[0] = 2.0 / (m * m * m)


cdef inline void _variance(int family, double nb_k, double m, double* V, double* Vp) noexcept nogil:
    if family == F_NORMAL:
        V[0] = 1.0
        Vp[0] = 0.0
    elif family == F_POISSON:
        V[0] = m
        Vp[0] = 1.0
    elif family == F_BINOMIAL:
        V[0] = m * (1.0 - m)
        Vp[0] = 1.0 - 2.0 * m
    elif family == F_GAMMA:
        V[0] = m * m
        Vp[0] = 2.0 * m
    elif family == F_NEGBIN:
        V[0] = m + nb_k * m * m
        Vp[0] = 1.0 + 2.0 * nb_k * m
    else:
        V[0] = m * m * m
        Vp[0] = 3.0 * m * m


cdef inline double _logf(int family, double nb_k, double phi, double y, double m) noexcept nogil:
    cdef double a, ik, t
    if family == F_NORMAL:
        return -0.5 * ((y - m) * (y - m) / phi + log(2.0 * 3.141592653589793 * phi))
    if family == F_POISSON:
        t = y * log(m) if y > 0.0 else 0.0
        return t - m - lgamma(y + 1.0)
    if family == F_BINOMIAL:
        t = y * log(m) if y > 0.0 else 0.0
        if 1.0 - y > 0.0:
            t += (1.0 - y) * log(1.0 - m)
        return t
    if family == F_GAMMA:
        a = 1.0 / phi
        return a * log(y / (m * phi)) - y / (m * phi) - log(y) - lgamma(a)
    if family == F_NEGBIN:
        if nb_k == 0.0:
            t = y * log(m) if y > 0.0 else 0.0
            return t - m - lgamma(y + 1.0)
        ik = 1.0 / nb_k
        t = y * log(nb_k * m) if y > 0.0 else 0.0
        return (lgamma(y + ik) - lgamma(ik) - lgamma(y + 1.0)
                + t - (y + ik) * log1p(nb_k * m))
    # inverse gaussian
    return -0.5 * (log(2.0 * 3.141592653589793 * phi * y * y * y)
                   + (y - m) * (y - m) / (phi * m * m * y))


def glm_pass(int family, int link, double nb_k, double phi, double mu_floor,
             const double[::1] y, const double[::1] eta, const double[::1] w,
             double[::1] mu, double[::1] u, double[::1] w0, double[::1] we):
    """Fused kernel; see the numpy fallback for the formula-level docs."""
    cdef Py_ssize_t i, n = y.shape[0]
    cdef double ll = 0.0
    cdef double m, gp, gpp, V, Vp, r, wei
    with nogil:
        for i in range(n):
            m = _floor_mean(family, _inv_link(link, eta[i]), mu_floor)
            mu[i] = m
            _link_derivs(link, m, &gp, &gpp)
            _variance(family, nb_k, m, &V, &Vp)
            r = y[i] - m
            wei = w[i] / (V * gp * gp * phi)
            u[i] = w[i] * r / (V * gp * phi)
            we[i] = wei
            w0[i] = wei + w[i] * r * (V * gpp + Vp * gp) / (V * V * gp * gp * gp * phi)
            ll += w[i] * _logf(family, nb_k, phi, y[i], m)
    return ll
