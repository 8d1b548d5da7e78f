# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner-loop kernels; see ``_pykernels`` for the reference versions."""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt, fabs, isfinite

cnp.import_array()

cdef int CONVERGED = 0
cdef int DIVERGED = 1
cdef int MAX_ITERS = 2
cdef enum:
    RATIO_WINDOW = 8


cdef int _cholesky(double complex[:, ::1] a, Py_ssize_t n) noexcept nogil:
    # in-place lower Cholesky of a Hermitian positive definite matrix
    cdef Py_ssize_t i, j, l
    cdef double complex s
    cdef double d
    for j in range(n):
        d = a[j, j].real
        for l in range(j):
            d -= a[j, l].real * a[j, l].real + a[j, l].imag * a[j, l].imag
        if d <= 0.0:
            return -1
        d = sqrt(d)
        a[j, j] = d
        for i in range(j + 1, n):
            s = a[i, j]
            for l in range(j):
                s -= a[i, l] * a[j, l].conjugate()
            a[i, j] = s / d
    return 0


cdef int _mmse_gains(const double complex[:, ::1] H, const double[::1] p,
                     const double[::1] eta, double sigma2,
                     double complex[:, ::1] cov, double complex[::1] z,
                     double[::1] qd, double[::1] out) noexcept nogil:
    cdef Py_ssize_t M = H.shape[0], K = H.shape[1]
    cdef Py_ssize_t i, j, k, m, l
    cdef double acc
    cdef double complex s
    for m in range(M):
        acc = sigma2
        for i in range(K):
            acc += p[i] * (H[m, i].real * H[m, i].real + H[m, i].imag * H[m, i].imag)
        qd[m] = acc / eta[m] + sigma2
    for k in range(K):
        for i in range(M):
            for j in range(i + 1):
                s = 0.0
                for l in range(K):
                    if l != k:
                        s += p[l] * H[i, l] * H[j, l].conjugate()
                cov[i, j] = s
            cov[i, i] = cov[i, i] + qd[i]
        if _cholesky(cov, M) != 0:
            return -1
        acc = 0.0
        for i in range(M):
            s = H[i, k]
            for l in range(i):
                s -= cov[i, l] * z[l]
            z[i] = s / cov[i, i]
            acc += z[i].real * z[i].real + z[i].imag * z[i].imag
        out[k] = acc
    return 0


cdef int _gamma_map(const double complex[:, ::1] H, const double[::1] p,
                    const double[::1] gamma, const double[::1] eta, double sigma2,
                    double complex[:, ::1] cov, double complex[::1] z,
                    double[::1] qd, double[::1] t, double[::1] out) noexcept nogil:
    cdef Py_ssize_t k
    if _mmse_gains(H, p, eta, sigma2, cov, z, qd, t) != 0:
        return -1
    for k in range(H.shape[1]):
        if gamma[k] > 0.0:
            out[k] = gamma[k] / t[k]
        else:
            out[k] = 0.0
    return 0


def gamma_map(H, p, gamma, eta, double sigma2):
    cdef const double complex[:, ::1] Hv = np.ascontiguousarray(H, dtype=complex)
    cdef const double[::1] pv = np.ascontiguousarray(p, dtype=float)
    cdef const double[::1] gv = np.ascontiguousarray(gamma, dtype=float)
    cdef const double[::1] ev = np.ascontiguousarray(eta, dtype=float)
    cdef Py_ssize_t M = Hv.shape[0], K = Hv.shape[1]
    out = np.zeros(K)
    cdef double[::1] ov = out
    cdef double complex[:, ::1] cov = np.zeros((M, M), dtype=complex)
    cdef double complex[::1] z = np.zeros(M, dtype=complex)
    cdef double[::1] qd = np.zeros(M)
    cdef double[::1] t = np.zeros(K)
    cdef int rc
    with nogil:
        rc = _gamma_map(Hv, pv, gv, ev, sigma2, cov, z, qd, t, ov)
    if rc != 0:
        raise np.linalg.LinAlgError("interference covariance is not positive definite")
    return out


def fixed_point(H, gamma, eta, double sigma2, double tol, long max_iters, double div_power):
    cdef const double complex[:, ::1] Hv = np.ascontiguousarray(H, dtype=complex)
    cdef const double[::1] gv = np.ascontiguousarray(gamma, dtype=float)
    cdef const double[::1] ev = np.ascontiguousarray(eta, dtype=float)
    cdef Py_ssize_t M = Hv.shape[0], K = Hv.shape[1]
    cdef Py_ssize_t k
    p_arr = np.zeros(K)
    nxt_arr = np.zeros(K)
    cdef double[::1] p = p_arr
    cdef double[::1] nxt = nxt_arr
    cdef double complex[:, ::1] cov = np.zeros((M, M), dtype=complex)
    cdef double complex[::1] z = np.zeros(M, dtype=complex)
    cdef double[::1] qd = np.zeros(M)
    cdef double[::1] t = np.zeros(K)
    cdef double floor = sigma2 * 1e-15
    cdef double change, c, den
    cdef long it
    cdef int status = MAX_ITERS, rc = 0
    with nogil:
        it = 0
        while it < max_iters:
            it += 1
            rc = _gamma_map(Hv, p, gv, ev, sigma2, cov, z, qd, t, nxt)
            if rc != 0:
                break
            change = 0.0
            for k in range(K):
                if not isfinite(nxt[k]) or nxt[k] > div_power:
                    status = DIVERGED
                den = nxt[k] if nxt[k] > floor else floor
                c = fabs(nxt[k] - p[k]) / den
                if c > change:
                    change = c
                p[k] = nxt[k]
            if status == DIVERGED:
                break
            if change <= tol:
                status = CONVERGED
                break
    if rc != 0:
        raise np.linalg.LinAlgError("interference covariance is not positive definite")
    return p_arr.copy(), int(it), int(status)


def perron_root(A, double tol, long max_iters):
    cdef const double[:, ::1] Av = np.ascontiguousarray(A, dtype=float)
    cdef Py_ssize_t n = Av.shape[0]
    cdef Py_ssize_t i, j
    cdef double row_max = 0.0, col_max = 0.0, acc
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += Av[i, j]
        if acc > row_max:
            row_max = acc
    for j in range(n):
        acc = 0.0
        for i in range(n):
            acc += Av[i, j]
        if acc > col_max:
            col_max = acc
    cdef double bound = row_max if row_max < col_max else col_max
    if bound == 0.0:
        return 0.0, 0, True
    cdef double c = 0.1 * bound
    x_arr = np.full(n, 1.0 / n)
    y_arr = np.zeros(n)
    cdef double[::1] x = x_arr
    cdef double[::1] y = y_arr
    cdef double lam = 0.0, lam_prev = 0.0, delta = 0.0, delta_prev = 0.0
    cdef double lo, hi, ratio, r, scale
    cdef long it, calm = 0
    cdef bint have_prev = False, have_delta = False, done = False
    cdef double recent[RATIO_WINDOW]
    for i in range(RATIO_WINDOW):
        recent[i] = 0.0
    with nogil:
        for it in range(1, max_iters + 1):
            lam = 0.0
            lo = 1e308
            hi = 0.0
            for i in range(n):
                acc = c * x[i]
                for j in range(n):
                    acc += Av[i, j] * x[j]
                y[i] = acc
                lam += acc
                ratio = acc / x[i]
                if ratio < lo:
                    lo = ratio
                if ratio > hi:
                    hi = ratio
            # tolerances refer to the unshifted root; the floor lets rho = 0 terminate
            scale = lo - c
            if scale < 1e-3 * c:
                scale = 1e-3 * c
            if hi - lo <= tol * scale:
                lam = 0.5 * (lo + hi)
                done = True
                break
            if have_prev:
                delta = fabs(lam - lam_prev)
                if delta == 0.0:
                    done = True
                    break
                if have_delta and delta_prev > 0.0:
                    r = delta / delta_prev
                    if r > 0.999999:
                        r = 0.999999
                    recent[it % RATIO_WINDOW] = r
                    r = recent[0]
                    for i in range(1, RATIO_WINDOW):
                        if recent[i] > r:
                            r = recent[i]
                    scale = lam - c
                    if scale < 1e-3 * c:
                        scale = 1e-3 * c
                    # oscillating error (complex subdominant pair) can fake one small step
                    if delta / (1.0 - r) <= tol * scale:
                        calm += 1
                    else:
                        calm = 0
                    if it > RATIO_WINDOW + 1 and calm >= RATIO_WINDOW:
                        done = True
                        break
                delta_prev = delta
                have_delta = True
            lam_prev = lam
            have_prev = True
            for i in range(n):
                x[i] = y[i] / lam
    if not done:
        return lam - c, max_iters, False
    return lam - c, it, True
