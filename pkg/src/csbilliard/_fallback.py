"""Pure numpy implementation of the kernels in ``_kernels.pyx``.

Same signatures, same status codes.  Loops run over orbit steps; all samples
are advanced together as arrays.
"""
import math

import numpy as np

OK, DEGENERATE, NOT_BRACKETED, NO_CONVERGENCE = 0, 1, 2, 3

GLANCING = 1e-12
DELTA_MIN = 5e-10
BRACKET_WIDTH = 5e-4
NEWTON_TOL = 1e-14
MAX_ITER = 200


def support(cos_e, sin_e, psi):
    k = 2.0 * np.arange(len(cos_e))
    arg = np.multiply.outer(np.asarray(psi, dtype=float), k)
    cs, sn = np.cos(arg), np.sin(arg)
    h = cs @ cos_e + sn @ sin_e
    h1 = cs @ (k * sin_e) - sn @ (k * cos_e)
    h2 = -(cs @ (k * k * cos_e) + sn @ (k * k * sin_e))
    return h, h1, h2


def _residual(cos_e, sin_e, p, phi, d):
    h, h1, _ = support(cos_e, sin_e, phi + d)
    return h * np.cos(d) - h1 * np.sin(d) - p


def _reflect(cos_e, sin_e, p, phi):
    m = p.shape[0]
    status = np.zeros(m, dtype=np.int8)
    h0, _, _ = support(cos_e, sin_e, phi)
    bad = ~(h0 - np.abs(p) > GLANCING * h0)
    status[bad] = DEGENERATE
    lo = np.full(m, DELTA_MIN)
    hi = np.full(m, math.pi - DELTA_MIN)
    live = ~bad
    f_lo = _residual(cos_e, sin_e, p, phi, lo)
    f_hi = _residual(cos_e, sin_e, p, phi, hi)
    nb = live & ~((f_lo > 0) & (f_hi < 0))
    status[nb] = NOT_BRACKETED
    live &= ~nb
    while True:
        act = live & (hi - lo > BRACKET_WIDTH)
        if not act.any():
            break
        mid = 0.5 * (lo + hi)
        F = _residual(cos_e, sin_e, p, phi, mid)
        up = act & (F >= 0)
        dn = act & (F <= 0)
        lo = np.where(up, mid, lo)
        hi = np.where(dn, mid, hi)
    d = 0.5 * (lo + hi)
    todo = live.copy()
    for _ in range(MAX_ITER):
        if not todo.any():
            break
        h, h1, h2 = support(cos_e, sin_e, phi + d)
        F = h * np.cos(d) - h1 * np.sin(d) - p
        exact = todo & (F == 0)
        lo = np.where(todo & (F > 0), d, lo)
        hi = np.where(todo & (F < 0), d, hi)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = F / ((h + h2) * np.sin(d))
        dn = d + step
        out = (dn <= lo) | (dn >= hi) | ~np.isfinite(dn)
        dn = np.where(out, 0.5 * (lo + hi), dn)
        step = dn - d
        upd = todo & ~exact
        d = np.where(upd, dn, d)
        done = exact | (upd & ((np.abs(step) < NEWTON_TOL) | (hi - lo < NEWTON_TOL)))
        todo &= ~done
    status[todo] = NO_CONVERGENCE
    live &= ~todo
    tiny = live & (np.sin(d) < 1e-12)
    status[tiny] = DEGENERATE
    live &= ~tiny
    h, h1, h2 = support(cos_e, sin_e, phi + d)
    nan = np.where(live, 0.0, np.nan)
    p1 = h * np.cos(d) + h1 * np.sin(d) + nan
    return (p1, phi + 2.0 * d + nan, phi + d + nan, d + nan,
            h + nan, h1 + nan, h2 + nan, status)


def reflect(cos_e, sin_e, p, phi):
    p1, phi1, psi, d, _, _, _, status = _reflect(
        np.asarray(cos_e), np.asarray(sin_e), np.asarray(p, float), np.asarray(phi, float))
    return p1, phi1, psi, d, status


def orbit(cos_e, sin_e, p0, phi0, n):
    p0 = np.asarray(p0, float)
    phi0 = np.asarray(phi0, float)
    m = p0.shape[0]
    P = np.full((n + 1, m), np.nan)
    PHI = np.full((n + 1, m), np.nan)
    PSI = np.full((n, m), np.nan)
    DEL = np.full((n, m), np.nan)
    fail_step = np.full(m, -1, dtype=np.int64)
    fail_code = np.zeros(m, dtype=np.int8)
    P[0], PHI[0] = p0, phi0
    alive = np.ones(m, dtype=bool)
    for k in range(n):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        p1, phi1, psi, d, st = reflect(cos_e, sin_e, P[k, idx], PHI[k, idx])
        failed = st != OK
        fail_step[idx[failed]] = k
        fail_code[idx[failed]] = st[failed]
        alive[idx[failed]] = False
        ok = idx[~failed]
        P[k + 1, ok] = p1[~failed]
        PHI[k + 1, ok] = phi1[~failed]
        PSI[k, ok] = psi[~failed]
        DEL[k, ok] = d[~failed]
    return P, PHI, PSI, DEL, fail_step, fail_code


def _centered(cos_e, sin_e, p0, phi0, N):
    m = p0.shape[0]
    S11 = np.full((2 * N, m), np.nan)
    S22 = np.full((2 * N, m), np.nan)
    S12 = np.full((2 * N, m), np.nan)
    PSI = np.full((2 * N, m), np.nan)
    DEL = np.full((2 * N, m), np.nan)
    fail = np.zeros(m, dtype=np.int8)
    for direction in (1, -1):
        if direction == 1:
            pc, phic = p0.copy(), phi0.copy()
        else:
            pc, phic = -p0, phi0 + math.pi
        for k in range(N):
            alive = fail == 0
            idx = np.flatnonzero(alive)
            if idx.size == 0:
                break
            out = _reflect(cos_e, sin_e, pc[idx], phic[idx])
            p1, phi1, psi, d, h, h1, h2, st = out
            fail[idx[st != OK]] = st[st != OK]
            sd = np.sin(d)
            cd = np.cos(d)
            if direction == 1:
                row = N + k
                delta = d
            else:
                row = N - 1 - k
                delta = math.pi - d
                cd = -cd
            PSI[row, idx] = psi
            DEL[row, idx] = delta
            S11[row, idx] = 0.5 * (h2 - h) * sd - h1 * cd
            S22[row, idx] = 0.5 * (h2 - h) * sd + h1 * cd
            S12[row, idx] = 0.5 * (h2 + h) * sd
            pc = pc.copy()
            phic = phic.copy()
            pc[idx] = p1
            phic[idx] = phi1
    return S11, S22, S12, PSI, DEL, fail


def centered_chords(cos_e, sin_e, p0, phi0, N):
    _, _, _, PSI, DEL, fail = _centered(np.asarray(cos_e), np.asarray(sin_e),
                                        np.asarray(p0, float), np.asarray(phi0, float), N)
    bad = fail != OK
    PSI[:, bad] = np.nan
    DEL[:, bad] = np.nan
    return PSI, DEL, fail


def classify(cos_e, sin_e, p0, phi0, N, horizons, pivot_tol):
    p0 = np.asarray(p0, float)
    phi0 = np.asarray(phi0, float)
    S11, S22, S12, _, _, fail = _centered(np.asarray(cos_e), np.asarray(sin_e), p0, phi0, N)
    m = p0.shape[0]
    H = len(horizons)
    verdict = np.empty((m, H), dtype=np.int8)
    first_bad = np.zeros((m, H), dtype=np.int32)
    for j, M in enumerate(horizons):
        lo = N - M
        v = np.ones(m, dtype=np.int8)
        bad = np.zeros(m, dtype=np.int32)
        open_ = fail == OK
        u = np.ones(m)
        bprev = np.zeros(m)
        for t in range(2 * M - 1):
            a = S22[lo + t] + S11[lo + t + 1]
            with np.errstate(divide="ignore", invalid="ignore"):
                u = -a if t == 0 else -a - bprev * bprev / u
            under = open_ & (np.abs(u) < pivot_tol)
            v[under] = -1
            bad[under] = t + 1
            open_ &= ~under
            neg = open_ & (u < 0)
            v[neg] = 0
            bad[neg] = t + 1
            open_ &= ~neg
            if not open_.any():
                break
            bprev = S12[lo + t + 1]
        v[fail != OK] = -2
        bad[fail != OK] = 0
        verdict[:, j] = v
        first_bad[:, j] = bad
    return verdict, first_bad
