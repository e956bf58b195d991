# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; same interface as :mod:`fracholder._mlpy`."""

import numpy as np
cimport numpy as cnp
from libc.math cimport (ceil, cos, exp, fabs, floor, fmod, isfinite, lgamma, log,
                        pow, sin, sqrt, tgamma, INFINITY, M_PI)

cnp.import_array()

cdef extern from "<complex.h>" nogil:
    double complex cexp(double complex)
    double complex cpow(double complex, double complex)
    double cimag(double complex)
    double creal(double complex)

cdef double SERIES_R = 6.0
cdef double ASYMP_R = 36.0
cdef int MAX_TERMS = 300
cdef int MAX_NODES = 1024
cdef double LOG_EPS = log(2.220446049250313e-16)
cdef double LOG_TARGET = log(1e-15)


cdef inline double sinpi(double a) nogil:
    cdef double r = fmod(a, 2.0)
    return sin(M_PI * r)


cdef inline double rgamma_c(double a) nogil:
    if a <= 0.0 and a == floor(a):
        return 0.0
    if a < 170.0 and a > -170.0:
        return 1.0 / tgamma(a)
    if a >= 170.0:
        return exp(-lgamma(a))
    return sinpi(a) / M_PI * exp(lgamma(1.0 - a))


cdef int series_one(double beta, double zeta, double x, const double *coef,
                    double *out) nogil:
    cdef double s = 0.0, c = 0.0, y, t, term, xpow = 1.0, r
    cdef int k
    if x == 0.0:
        out[0] = coef[0]
        return 1
    r = pow(x, 1.0 / beta)
    for k in range(MAX_TERMS):
        term = coef[k] * xpow
        y = term - c
        t = s + y
        c = (t - s) - y
        s = t
        if k > 2 and fabs(term) <= 1e-17 * fmax1(fabs(s)) and beta * k + zeta > 1.0 + r:
            out[0] = s
            return 1
        xpow = -xpow * x
    return 0


cdef inline double fmax1(double v) nogil:
    return v if v > 1.0 else 1.0


cdef int asymp_one(double beta, double zeta, double x, const double *coef,
                   const double *lenv, double *out) nogil:
    """``coef[k] = 1/Gamma(zeta - beta k)``, ``lenv[k] = lgamma(beta k + 1 - zeta)``."""
    cdef double s = 0.0, c = 0.0, y, t, term, env, logx, r, ph, inv, xpow
    cdef int k
    cdef int ok = 0
    logx = log(x)
    inv = 1.0 / x
    r = pow(x, 1.0 / beta)
    xpow = 1.0
    for k in range(1, MAX_TERMS):
        xpow = -xpow * inv
        term = -coef[k] * xpow  # (-1)**(k+1) x**-k / Gamma(zeta - beta k)
        y = term - c
        t = s + y
        c = (t - s) - y
        s = t
        env = exp(lenv[k] - k * logx) / M_PI
        if env <= 1e-17 * (fabs(s) if fabs(s) > inv else inv):
            ok = 1
            break
        if beta * k >= r + 1.0:
            break
    if not ok:
        return 0
    if beta > 1.0:
        ph = M_PI / beta
        s += (2.0 / beta) * pow(r, 1.0 - zeta) * exp(r * cos(ph)) * cos(
            r * sin(ph) + (1.0 - zeta) * ph)
    out[0] = s
    return 1


cdef void param_rb(double phi_j, double phi_j1, double pj, double qj,
                   double log_epsilon, double *mu, double *h, double *n) nogil:
    cdef double fac = 1.01, f_max, sq_j, sq_j1, threshold, f_bar = 1.0
    cdef double sqb_j = 0.0, sqb_j1 = 0.0, f_min, fp, fq, w, den
    cdef int adm = 1
    f_max = exp(log_epsilon - LOG_EPS)
    sq_j = sqrt(phi_j)
    threshold = 2.0 * sqrt(log_epsilon - LOG_EPS)
    sq_j1 = sqrt(phi_j1)
    if threshold - sq_j < sq_j1:
        sq_j1 = threshold - sq_j
    if pj < 1e-14 and qj < 1e-14:
        sqb_j = sq_j
        sqb_j1 = sq_j1
    elif pj < 1e-14:
        sqb_j = sq_j
        f_min = fac * pow(sq_j / (sq_j1 - sq_j), qj) if sq_j > 0 else fac
        if f_min < f_max:
            f_bar = f_min + f_min / f_max * (f_max - f_min)
            fq = pow(f_bar, -1.0 / qj)
            sqb_j1 = (2 * sq_j1 - fq * sq_j) / (2 + fq)
        else:
            adm = 0
    elif qj < 1e-14:
        sqb_j1 = sq_j1
        f_min = fac * pow(sq_j1 / (sq_j1 - sq_j), pj)
        if f_min < f_max:
            f_bar = f_min + f_min / f_max * (f_max - f_min)
            fp = pow(f_bar, -1.0 / pj)
            sqb_j = (2 * sq_j + fp * sq_j1) / (2 - fp)
        else:
            adm = 0
    else:
        f_min = fac * (sq_j + sq_j1) / pow(sq_j1 - sq_j, pj if pj > qj else qj)
        if f_min < f_max:
            if f_min < 1.5:
                f_min = 1.5
            f_bar = f_min + f_min / f_max * (f_max - f_min)
            fp = pow(f_bar, -1.0 / pj)
            fq = pow(f_bar, -1.0 / qj)
            w = -phi_j1 / log_epsilon
            den = 2 + w - (1 + w) * fp + fq
            sqb_j = ((2 + w + fq) * sq_j + fp * sq_j1) / den
            sqb_j1 = (-(1 + w) * fq * sq_j + (2 + w - (1 + w) * fp) * sq_j1) / den
        else:
            adm = 0
    if not adm:
        mu[0] = 0.0
        h[0] = 0.0
        n[0] = INFINITY
        return
    log_epsilon = log_epsilon - log(f_bar)
    w = -sqb_j1 * sqb_j1 / log_epsilon
    mu[0] = pow(((1 + w) * sqb_j + sqb_j1) / (2 + w), 2)
    h[0] = -2 * M_PI / log_epsilon * (sqb_j1 - sqb_j) / ((1 + w) * sqb_j + sqb_j1)
    n[0] = ceil(sqrt(1 - log_epsilon / mu[0]) / h[0])


cdef void param_ru(double phi_j, double pj, double log_epsilon,
                   double *mu, double *h, double *n) nogil:
    cdef double sq_phi_j = sqrt(phi_j), phib, sqb, f_tar = 5.0
    cdef double lept, a = 0.0, sq_mu = 0.0, fbar, threshold, q, w, u, nn = 0.0
    cdef int it
    phib = phi_j * 1.01 if phi_j > 0 else 0.01
    sqb = sqrt(phib)
    for it in range(100):
        lept = log_epsilon / phib
        nn = ceil(phib / M_PI * (1 - 3 * lept / 2 + sqrt(1 - 2 * lept)))
        a = M_PI * nn / phib
        sq_mu = sqb * fabs(4 - a) / fabs(7 - sqrt(1 + 12 * a))
        fbar = pow((sqb - sq_phi_j) / sq_mu, -pj)
        if pj < 1e-14 or (1.0 < fbar and fbar < 10.0):
            break
        sqb = pow(f_tar, -1.0 / pj) * sq_mu + sq_phi_j
        phib = sqb * sqb
    mu[0] = sq_mu * sq_mu
    h[0] = (-3 * a - 2 + 2 * sqrt(1 + 12 * a)) / (4 - a) / nn
    n[0] = nn
    threshold = log_epsilon - LOG_EPS
    if mu[0] > threshold:
        q = 0.0 if fabs(pj) < 1e-14 else pow(f_tar, -1.0 / pj) * sqrt(mu[0])
        phib = (q + sq_phi_j) * (q + sq_phi_j)
        if phib < threshold:
            w = sqrt(LOG_EPS / (LOG_EPS - log_epsilon))
            u = sqrt(-phib / LOG_EPS)
            mu[0] = threshold
            n[0] = ceil(w * log_epsilon / 2 / M_PI / (u * w - 1))
            h[0] = sqrt(LOG_EPS / (LOG_EPS - log_epsilon)) / n[0]
        else:
            n[0] = INFINITY
            h[0] = 0.0


cdef void plan(double beta, double zeta, double x, double *mu, double *h,
               double *n, int *with_poles) nogil:
    """Optimal contour; ``with_poles`` says whether pole residues are added."""
    cdef double r, phi = 0.0, p0, log_epsilon = LOG_TARGET
    cdef double m1, h1, n1, m2, h2, n2
    cdef int has_poles = 0
    p0 = -2.0 * (beta - zeta + 1.0)
    if p0 < 0.0:
        p0 = 0.0
    if beta > 1.0:
        r = pow(x, 1.0 / beta)
        phi = 0.5 * r * (1.0 + cos(M_PI / beta))
        has_poles = phi > 1e-15
    while True:
        with_poles[0] = 0
        if not has_poles:
            param_ru(0.0, p0, log_epsilon, mu, h, n)
        else:
            m1 = 0.0; h1 = 0.0; n1 = INFINITY
            m2 = 0.0; h2 = 0.0; n2 = INFINITY
            param_rb(0.0, phi, p0, 1.0, log_epsilon, &m1, &h1, &n1)
            if phi < log_epsilon - LOG_EPS:
                param_ru(phi, 1.0, log_epsilon, &m2, &h2, &n2)
            if n1 <= n2:
                mu[0] = m1; h[0] = h1; n[0] = n1
                with_poles[0] = 1
            else:
                mu[0] = m2; h[0] = h2; n[0] = n2
        if n[0] > 200 and log_epsilon < -2.0:
            log_epsilon += log(10.0)
            continue
        return


cdef double contour_one(double beta, double zeta, double x, double mu, double h,
                        int n, int with_poles) nogil:
    cdef double total = 0.0, u, r
    cdef double complex z, zd, val, sp
    cdef int k
    for k in range(n + 1):
        u = h * k
        z = mu * (1.0 + 1j * u) * (1.0 + 1j * u)
        zd = 2.0 * mu * (1j - u)
        val = cexp(z) * cpow(z, beta - zeta) / (cpow(z, beta) + x) * zd
        total += cimag(val) if k == 0 else 2.0 * cimag(val)
    total *= h / (2.0 * M_PI)
    if with_poles:
        r = pow(x, 1.0 / beta)
        sp = r * cexp(1j * M_PI / beta)
        total += 2.0 * creal(cpow(sp, 1.0 - zeta) * cexp(sp)) / beta
    return total


cdef double PHI_BIN = 1.05


cdef void plan_bin(double beta, double zeta, double phi_lo, double phi_hi, double *mu,
                   double *h, double *n, int *with_poles) nogil:
    """A contour valid for every pole distance in ``[phi_lo, phi_hi]``.

    Passing left of the poles is valid for all larger distances (residues are
    added); passing right of them is valid for all smaller ones.
    """
    cdef double p0, log_epsilon = LOG_TARGET
    cdef double m1, h1, n1, m2, h2, n2
    p0 = -2.0 * (beta - zeta + 1.0)
    if p0 < 0.0:
        p0 = 0.0
    while True:
        m1 = 0.0; h1 = 0.0; n1 = INFINITY
        m2 = 0.0; h2 = 0.0; n2 = INFINITY
        param_rb(0.0, phi_lo, p0, 1.0, log_epsilon, &m1, &h1, &n1)
        if phi_hi < log_epsilon - LOG_EPS:
            param_ru(phi_hi, 1.0, log_epsilon, &m2, &h2, &n2)
        if n1 <= n2:
            mu[0] = m1; h[0] = h1; n[0] = n1
            with_poles[0] = 1
        else:
            mu[0] = m2; h[0] = h2; n[0] = n2
            with_poles[0] = 0
        if n[0] > 200 and log_epsilon < -2.0:
            log_epsilon += log(10.0)
            continue
        return


cdef int fill_nodes(double beta, double zeta, double mu, double h, int nn,
                    double complex *g, double complex *zb) nogil:
    cdef int k
    cdef double complex z, zd
    for k in range(nn + 1):
        z = mu * (1.0 + 1j * h * k) * (1.0 + 1j * h * k)
        zd = 2.0 * mu * (1j - h * k)
        g[k] = cexp(z) * cpow(z, beta - zeta) * zd * (1.0 if k == 0 else 2.0)
        zb[k] = cpow(z, beta)
    return nn


def ml_neg(double beta, double zeta, x):
    """E_{beta,zeta}(-x) elementwise for ``x >= 0`` (no argument checking)."""
    cdef cnp.ndarray[double, ndim=1] xa = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef cnp.ndarray[double, ndim=1] out = np.empty_like(xa)
    cdef double[::1] xv = xa
    cdef double[::1] ov = out
    cdef Py_ssize_t i, m = xv.shape[0]
    cdef double r, v, mu = 0.0, h = 0.0, n = 0.0, acc
    cdef int wp = 0, k, nn = 0
    cdef double[::1] scoef = np.empty(MAX_TERMS)
    cdef double[::1] acoef = np.empty(MAX_TERMS)
    cdef double[::1] lenv = np.empty(MAX_TERMS)
    cdef double complex[::1] gnode = np.empty(MAX_NODES + 1, dtype=np.complex128)
    cdef double complex[::1] znode = np.empty(MAX_NODES + 1, dtype=np.complex128)
    cdef double complex sp
    cdef double phi, cosb = cos(M_PI / beta), lphi
    cdef long bin_id, cur_bin = -1000000000
    for k in range(MAX_TERMS):
        scoef[k] = rgamma_c(beta * k + zeta)
        acoef[k] = rgamma_c(zeta - beta * k)
        lenv[k] = lgamma(beta * k + 1.0 - zeta)
    with nogil:
        if beta <= 1.0:
            # no poles: one contour serves every x
            plan(beta, zeta, 1.0, &mu, &h, &n, &wp)
            nn = fill_nodes(beta, zeta, mu, h, <int>n, &gnode[0], &znode[0])
        for i in range(m):
            r = pow(xv[i], 1.0 / beta)
            if r <= SERIES_R and series_one(beta, zeta, xv[i], &scoef[0], &v):
                ov[i] = v
                continue
            if r >= ASYMP_R and asymp_one(beta, zeta, xv[i], &acoef[0], &lenv[0], &v):
                ov[i] = v
                continue
            if beta > 1.0:
                phi = 0.5 * r * (1.0 + cosb)
                lphi = log(phi) / log(PHI_BIN)
                bin_id = <long>floor(lphi)
                if bin_id != cur_bin:
                    plan_bin(beta, zeta, pow(PHI_BIN, <double>bin_id),
                             pow(PHI_BIN, <double>(bin_id + 1)), &mu, &h, &n, &wp)
                    if n > MAX_NODES:
                        plan(beta, zeta, xv[i], &mu, &h, &n, &wp)
                        ov[i] = contour_one(beta, zeta, xv[i], mu, h, <int>n, wp)
                        continue
                    nn = fill_nodes(beta, zeta, mu, h, <int>n, &gnode[0], &znode[0])
                    cur_bin = bin_id
            acc = 0.0
            for k in range(nn + 1):
                acc = acc + cimag(gnode[k] / (znode[k] + xv[i]))
            acc = acc * h / (2.0 * M_PI)
            if beta > 1.0 and wp:
                sp = r * cexp(1j * M_PI / beta)
                acc = acc + 2.0 * creal(cpow(sp, 1.0 - zeta) * cexp(sp)) / beta
            ov[i] = acc
    return out.reshape(np.shape(x))


def history_sum(const double complex[:, ::1] kernel, const double complex[:, ::1] forcing,
                Py_ssize_t n, double complex[::1] out):
    """``out[k] = sum_{m<=n} kernel[n - m, k] * forcing[m, k]``."""
    cdef Py_ssize_t m, k, nk = out.shape[0]
    cdef double ar, ai, br, bi
    # real arithmetic: C complex multiplication goes through the slow
    # inf/nan-aware library routine
    cdef double[::1] re = np.zeros(nk), im = np.zeros(nk)
    with nogil:
        for m in range(n + 1):
            for k in range(nk):
                ar = kernel[n - m, k].real
                ai = kernel[n - m, k].imag
                br = forcing[m, k].real
                bi = forcing[m, k].imag
                re[k] += ar * br - ai * bi
                im[k] += ar * bi + ai * br
        for k in range(nk):
            out[k] = re[k] + 1j * im[k]
    return np.asarray(out)
