# cython: language_level=3
"""Compiled kernels: support evaluation, reflection, orbits and classification.

Mirrors ``_fallback`` function for function.  Coefficient arrays hold the
even harmonics 0, 2, 4, ... only.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, fabs, M_PI

cnp.import_array()

# status codes shared with _fallback
cdef enum:
    OK = 0
    DEGENERATE = 1
    NOT_BRACKETED = 2
    NO_CONVERGENCE = 3

cdef double GLANCING = 1e-12
cdef double DELTA_MIN = 5e-10
cdef double BRACKET_WIDTH = 5e-4
cdef double NEWTON_TOL = 1e-14
cdef int MAX_ITER = 200


cdef inline void _support(const double* c, const double* s, Py_ssize_t K, double psi,
                          double* h, double* h1, double* h2) noexcept nogil:
    cdef double c2 = cos(2.0 * psi)
    cdef double s2 = sin(2.0 * psi)
    cdef double ck = 1.0, sk = 0.0, tmp, k, a, b
    cdef double v0 = 0.0, v1 = 0.0, v2 = 0.0
    cdef Py_ssize_t j
    for j in range(K):
        k = 2.0 * j
        a = c[j] * ck + s[j] * sk
        b = s[j] * ck - c[j] * sk
        v0 += a
        v1 += k * b
        v2 -= k * k * a
        tmp = ck * c2 - sk * s2
        sk = sk * c2 + ck * s2
        ck = tmp
    h[0] = v0
    h1[0] = v1
    h2[0] = v2


cdef inline double _residual(const double* c, const double* s, Py_ssize_t K,
                             double p, double phi, double d) noexcept nogil:
    cdef double h, h1, h2
    _support(c, s, K, phi + d, &h, &h1, &h2)
    return h * cos(d) - h1 * sin(d) - p


cdef int _reflect(const double* c, const double* s, Py_ssize_t K, double p, double phi,
                  double* out) noexcept nogil:
    # out: p1, phi1, psi, delta, h, h', h'' at psi
    cdef double h, h1, h2, lo, hi, d, dn, F, step, mid
    cdef int it
    _support(c, s, K, phi, &h, &h1, &h2)
    if not (h - fabs(p) > GLANCING * h):
        return DEGENERATE
    lo = DELTA_MIN
    hi = M_PI - DELTA_MIN
    if not (_residual(c, s, K, p, phi, lo) > 0.0):
        return NOT_BRACKETED
    if not (_residual(c, s, K, p, phi, hi) < 0.0):
        return NOT_BRACKETED
    while hi - lo > BRACKET_WIDTH:
        mid = 0.5 * (lo + hi)
        F = _residual(c, s, K, p, phi, mid)
        if F > 0.0:
            lo = mid
        elif F < 0.0:
            hi = mid
        else:
            lo = mid
            hi = mid
    d = 0.5 * (lo + hi)
    for it in range(MAX_ITER):
        _support(c, s, K, phi + d, &h, &h1, &h2)
        F = h * cos(d) - h1 * sin(d) - p
        if F > 0.0:
            lo = d
        elif F < 0.0:
            hi = d
        else:
            break
        # dF/d(delta) = -(h + h'') sin(delta)
        step = F / ((h + h2) * sin(d))
        dn = d + step
        if dn <= lo or dn >= hi:
            dn = 0.5 * (lo + hi)
            step = dn - d
        d = dn
        if fabs(step) < NEWTON_TOL or hi - lo < NEWTON_TOL:
            break
    else:
        return NO_CONVERGENCE
    if sin(d) < 1e-12:
        return DEGENERATE
    _support(c, s, K, phi + d, &h, &h1, &h2)
    out[0] = h * cos(d) + h1 * sin(d)
    out[1] = phi + 2.0 * d
    out[2] = phi + d
    out[3] = d
    out[4] = h
    out[5] = h1
    out[6] = h2
    return OK


def support(const double[::1] cos_e, const double[::1] sin_e, const double[::1] psi):
    cdef Py_ssize_t m = psi.shape[0], i, K = cos_e.shape[0]
    h = np.empty(m)
    h1 = np.empty(m)
    h2 = np.empty(m)
    cdef double[::1] vh = h, vh1 = h1, vh2 = h2
    with nogil:
        for i in range(m):
            _support(&cos_e[0], &sin_e[0], K, psi[i], &vh[i], &vh1[i], &vh2[i])
    return h, h1, h2


def reflect(const double[::1] cos_e, const double[::1] sin_e,
            const double[::1] p, const double[::1] phi):
    """Vectorised reflection; returns (p1, phi1, psi, delta, status)."""
    cdef Py_ssize_t m = p.shape[0], i, K = cos_e.shape[0]
    cdef double out[7]
    res = np.full((4, m), np.nan)
    status = np.zeros(m, dtype=np.int8)
    cdef double[:, ::1] r = res
    cdef cnp.int8_t[::1] st = status
    cdef int code
    with nogil:
        for i in range(m):
            code = _reflect(&cos_e[0], &sin_e[0], K, p[i], phi[i], out)
            st[i] = code
            if code == OK:
                r[0, i] = out[0]
                r[1, i] = out[1]
                r[2, i] = out[2]
                r[3, i] = out[3]
    return res[0], res[1], res[2], res[3], status


def orbit(const double[::1] cos_e, const double[::1] sin_e,
          const double[::1] p0, const double[::1] phi0, Py_ssize_t n):
    """Iterate ``n`` reflections for each start point.

    Returns (p, phi, psi, delta, fail_step, fail_code) with ``p``/``phi`` of
    shape (n+1, m), ``psi``/``delta`` of shape (n, m); ``phi`` is unwrapped.
    """
    cdef Py_ssize_t m = p0.shape[0], i, k, K = cos_e.shape[0]
    cdef double out[7]
    cdef double pc, phic
    cdef int code
    P = np.full((n + 1, m), np.nan)
    PHI = np.full((n + 1, m), np.nan)
    PSI = np.full((n, m), np.nan)
    DEL = np.full((n, m), np.nan)
    fail_step = np.full(m, -1, dtype=np.int64)
    fail_code = np.zeros(m, dtype=np.int8)
    cdef double[:, ::1] vp = P, vphi = PHI, vpsi = PSI, vdel = DEL
    cdef cnp.int64_t[::1] fs = fail_step
    cdef cnp.int8_t[::1] fc = fail_code
    with nogil:
        for i in range(m):
            pc = p0[i]
            phic = phi0[i]
            vp[0, i] = pc
            vphi[0, i] = phic
            for k in range(n):
                code = _reflect(&cos_e[0], &sin_e[0], K, pc, phic, out)
                if code != OK:
                    fs[i] = k
                    fc[i] = code
                    break
                pc = out[0]
                phic = out[1]
                vp[k + 1, i] = pc
                vphi[k + 1, i] = phic
                vpsi[k, i] = out[2]
                vdel[k, i] = out[3]
    return P, PHI, PSI, DEL, fail_step, fail_code


cdef int _centered(const double* c, const double* s, Py_ssize_t K, double p0, double phi0,
                   Py_ssize_t N, double* s11, double* s22, double* s12,
                   double* psi_c, double* del_c) noexcept nogil:
    # chords c_{-N} .. c_{N-1} stored at offsets 0 .. 2N-1
    cdef double out[7]
    cdef double pc, phic, sd, cd
    cdef Py_ssize_t k, idx
    cdef int code
    pc = p0
    phic = phi0
    for k in range(N):
        code = _reflect(c, s, K, pc, phic, out)
        if code != OK:
            return code
        idx = N + k
        psi_c[idx] = out[2]
        del_c[idx] = out[3]
        sd = sin(out[3])
        cd = cos(out[3])
        s11[idx] = 0.5 * (out[6] - out[4]) * sd - out[5] * cd
        s22[idx] = 0.5 * (out[6] - out[4]) * sd + out[5] * cd
        s12[idx] = 0.5 * (out[6] + out[4]) * sd
        pc = out[0]
        phic = out[1]
    # backward: reverse orientation, iterate, and read chords with delta -> pi - delta
    pc = -p0
    phic = phi0 + M_PI
    for k in range(N):
        code = _reflect(c, s, K, pc, phic, out)
        if code != OK:
            return code
        idx = N - 1 - k
        psi_c[idx] = out[2]
        del_c[idx] = M_PI - out[3]
        sd = sin(out[3])
        cd = -cos(out[3])
        s11[idx] = 0.5 * (out[6] - out[4]) * sd - out[5] * cd
        s22[idx] = 0.5 * (out[6] - out[4]) * sd + out[5] * cd
        s12[idx] = 0.5 * (out[6] + out[4]) * sd
        pc = out[0]
        phic = out[1]
    return OK


def centered_chords(const double[::1] cos_e, const double[::1] sin_e,
                    const double[::1] p0, const double[::1] phi0, Py_ssize_t N):
    """Incidence angles of the 2N chords of the window centred at each start.

    Returns (psi, delta, fail_code) with ``psi``/``delta`` of shape (2N, m).
    """
    cdef Py_ssize_t m = p0.shape[0], i, k, K = cos_e.shape[0]
    PSI = np.full((2 * N, m), np.nan)
    DEL = np.full((2 * N, m), np.nan)
    fail_code = np.zeros(m, dtype=np.int8)
    buf = np.empty((5, 2 * N))
    cdef double[:, ::1] vb = buf, vpsi = PSI, vdel = DEL
    cdef cnp.int8_t[::1] fc = fail_code
    cdef int code
    with nogil:
        for i in range(m):
            code = _centered(&cos_e[0], &sin_e[0], K, p0[i], phi0[i], N,
                             &vb[0, 0], &vb[1, 0], &vb[2, 0], &vb[3, 0], &vb[4, 0])
            fc[i] = code
            if code == OK:
                for k in range(2 * N):
                    vpsi[k, i] = vb[3, k]
                    vdel[k, i] = vb[4, k]
    return PSI, DEL, fail_code


def classify(const double[::1] cos_e, const double[::1] sin_e,
             const double[::1] p0, const double[::1] phi0, Py_ssize_t N,
             const cnp.int64_t[::1] horizons, double pivot_tol):
    """Second-variation verdicts for centred windows of half-width ``horizons[j]``.

    Verdict codes: 1 maximizing, 0 not maximizing, -1 pivot underflow,
    -2 orbit failure.  ``first_bad`` is the 1-based pivot index (0 if none).
    """
    cdef Py_ssize_t m = p0.shape[0], H = horizons.shape[0], K = cos_e.shape[0]
    cdef Py_ssize_t i, j, t, M, lo, n_int
    cdef double u, a, bprev
    cdef int code
    cdef signed char v
    cdef int bad
    verdict = np.empty((m, H), dtype=np.int8)
    first_bad = np.zeros((m, H), dtype=np.int32)
    buf = np.empty((5, 2 * N))
    cdef double[:, ::1] vb = buf
    cdef double* s11 = &vb[0, 0]
    cdef double* s22 = &vb[1, 0]
    cdef double* s12 = &vb[2, 0]
    cdef cnp.int8_t[:, ::1] vv = verdict
    cdef cnp.int32_t[:, ::1] vf = first_bad
    with nogil:
        for i in range(m):
            code = _centered(&cos_e[0], &sin_e[0], K, p0[i], phi0[i], N,
                             s11, s22, s12, &vb[3, 0], &vb[4, 0])
            for j in range(H):
                if code != OK:
                    vv[i, j] = -2
                    vf[i, j] = 0
                    continue
                M = horizons[j]
                # configuration points phi_{-M+1} .. phi_{M-1}; chord c_k at offset N + k
                lo = N - M
                n_int = 2 * M - 1
                v = 1
                bad = 0
                u = 1.0
                bprev = 0.0
                for t in range(n_int):
                    a = s22[lo + t] + s11[lo + t + 1]
                    if t == 0:
                        u = -a
                    else:
                        u = -a - bprev * bprev / u
                    if fabs(u) < pivot_tol:
                        v = -1
                        bad = t + 1
                        break
                    if u < 0.0:
                        v = 0
                        bad = t + 1
                        break
                    bprev = s12[lo + t + 1]
                vv[i, j] = v
                vf[i, j] = bad
    return verdict, first_bad
