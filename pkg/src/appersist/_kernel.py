"""Compiled inner loops: fixed-step RK4 with cubic Hermite history.

Knot ``k`` (time ``k*h``, ``k >= -M``) lives in buffer row ``(k + M) % L``.
``dbuf`` holds the right derivative at each knot; ``dleft`` the history's
left derivative at ``t = 0``, needed because the solution is only C^0 there.
"""

import math

import numpy as np
from numba import njit

NICHOLSON_CODE = 0
MACKEY_GLASS_CODE = 1
LINEAR_CODE = 2

OK = 0
OVERFLOW = 1
ZERO_NORM = 2
NOT_FINITE = 3

NORM_SUP = 0
NORM_L2 = 1

OVERFLOW_LIMIT = 1e150

# 4-point Gauss-Legendre on [0, 1]: exact for the degree-6 square of a cubic
_GL_X = np.array([0.0694318442029737, 0.3300094782075719, 0.6699905217924281, 0.9305681557970263])
_GL_W = np.array([0.1739274225687269, 0.3260725774312731, 0.3260725774312731, 0.1739274225687269])


@njit(cache=True, nogil=True)
def _coeffs(t, consts, offs, amps, freqs, phases, out):
    for s in range(consts.shape[0]):
        v = consts[s]
        for q in range(offs[s], offs[s + 1]):
            v += amps[q] * math.sin(freqs[q] * t + phases[q])
        out[s] = v


@njit(cache=True, nogil=True)
def _birth(kind, c, y, alpha):
    if kind == LINEAR_CODE or y < 0.0:
        # slope 1 at 0; negative arguments only arise from round-off in RK stages
        return y
    if kind == NICHOLSON_CODE:
        return y * math.exp(-c * y)
    return y / (1.0 + c * y**alpha)


@njit(cache=True, nogil=True)
def _field(n, cv, ai, aj, y, yd, kind, alpha, out):
    for i in range(n):
        out[i] = -cv[i] * y[i] + cv[n + i] * _birth(kind, cv[2 * n + i], yd[i], alpha)
    for e in range(ai.shape[0]):
        out[ai[e]] += cv[3 * n + e] * y[aj[e]]


@njit(cache=True, nogil=True)
def _row(k, M, L):
    return (k + M) % L


@njit(cache=True, nogil=True)
def _right_deriv(k, i, dbuf, dleft, M, L):
    # derivative to use at the right end of a segment ending at knot k
    if k == 0:
        return dleft[i]
    return dbuf[_row(k, M, L), i]


@njit(cache=True, nogil=True)
def hermite_absmax(y0, y1, D0, D1):
    """max |p(s)| over s in [0, 1] for the cubic with scaled end slopes D0, D1."""
    c1 = D0
    c2 = -2.0 * D0 - D1 - 3.0 * y0 + 3.0 * y1
    c3 = D0 + D1 + 2.0 * y0 - 2.0 * y1
    best = max(abs(y0), abs(y1))
    # p'(s) = c1 + 2 c2 s + 3 c3 s^2
    qa = 3.0 * c3
    qb = 2.0 * c2
    qc = c1
    if abs(qa) < 1e-300:
        if abs(qb) > 1e-300:
            s = -qc / qb
            if 0.0 < s < 1.0:
                best = max(best, abs(y0 + s * (c1 + s * (c2 + s * c3))))
        return best
    disc = qb * qb - 4.0 * qa * qc
    if disc < 0.0:
        return best
    sq = math.sqrt(disc)
    for s in ((-qb + sq) / (2.0 * qa), (-qb - sq) / (2.0 * qa)):
        if 0.0 < s < 1.0:
            best = max(best, abs(y0 + s * (c1 + s * (c2 + s * c3))))
    return best


@njit(cache=True, nogil=True)
def _segment_norm(k, n, lags, ybuf, dbuf, dleft, M, L, h, mode, gl_x, gl_w):
    total = 0.0
    for i in range(n):
        m = lags[i]
        if mode == NORM_SUP:
            best = 0.0
            for j in range(k - m, k):
                r0 = _row(j, M, L)
                r1 = _row(j + 1, M, L)
                v = hermite_absmax(ybuf[r0, i], ybuf[r1, i], h * dbuf[r0, i],
                                   h * _right_deriv(j + 1, i, dbuf, dleft, M, L))
                if v > best:
                    best = v
            total += best
        else:
            yk = ybuf[_row(k, M, L), i]
            acc = yk * yk
            for j in range(k - m, k):
                r0 = _row(j, M, L)
                r1 = _row(j + 1, M, L)
                y0 = ybuf[r0, i]
                y1 = ybuf[r1, i]
                D0 = h * dbuf[r0, i]
                D1 = h * _right_deriv(j + 1, i, dbuf, dleft, M, L)
                c2 = -2.0 * D0 - D1 - 3.0 * y0 + 3.0 * y1
                c3 = D0 + D1 + 2.0 * y0 - 2.0 * y1
                for q in range(gl_x.shape[0]):
                    s = gl_x[q]
                    p = y0 + s * (D0 + s * (c2 + s * c3))
                    acc += h * gl_w[q] * p * p
            total += acc
    if mode == NORM_L2:
        return math.sqrt(total)
    return total


def segment_norm_at(k, lags, ybuf, dbuf, dleft, M, h, mode):
    """Segment norm at knot ``k`` of a ring buffer whose derivative row ``k`` is set."""
    return _segment_norm(k, ybuf.shape[1], lags, ybuf, dbuf, dleft, M, ybuf.shape[0], h, mode, _GL_X, _GL_W)


@njit(cache=True, nogil=True)
def advance(ybuf, dbuf, dleft, M, k_start, k_end, h, lags,
            consts, offs, amps, freqs, phases, ai, aj, kind, alpha,
            clamp, renorm_every, norm_mode, logs, stats):
    """Advance knots ``k_start -> k_end``.

    ``stats`` = [clamp_events, most_negative_pre_clamp, n_logs, failing_step].
    Returns a status code.
    """
    n = ybuf.shape[1]
    L = ybuf.shape[0]
    ns = consts.shape[0]
    c0 = np.empty(ns)
    cm = np.empty(ns)
    c1 = np.empty(ns)
    y = np.empty(n)
    yd = np.empty(n)
    ys = np.empty(n)
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    _coeffs(k_start * h, consts, offs, amps, freqs, phases, c1)
    nlog = int(stats[2])
    for k in range(k_start, k_end):
        t = k * h
        for s in range(ns):
            c0[s] = c1[s]
        _coeffs(t + 0.5 * h, consts, offs, amps, freqs, phases, cm)
        _coeffs((k + 1) * h, consts, offs, amps, freqs, phases, c1)
        rk = _row(k, M, L)
        for i in range(n):
            y[i] = ybuf[rk, i]
            yd[i] = ybuf[_row(k - lags[i], M, L), i]
        _field(n, c0, ai, aj, y, yd, kind, alpha, k1)
        for i in range(n):
            dbuf[rk, i] = k1[i]
        # delayed values at the half step: Hermite midpoint of segment [k-m, k-m+1]
        for i in range(n):
            j = k - lags[i]
            r0 = _row(j, M, L)
            r1 = _row(j + 1, M, L)
            yd[i] = 0.5 * (ybuf[r0, i] + ybuf[r1, i]) + 0.125 * h * (
                dbuf[r0, i] - _right_deriv(j + 1, i, dbuf, dleft, M, L))
            ys[i] = y[i] + 0.5 * h * k1[i]
        _field(n, cm, ai, aj, ys, yd, kind, alpha, k2)
        for i in range(n):
            ys[i] = y[i] + 0.5 * h * k2[i]
        _field(n, cm, ai, aj, ys, yd, kind, alpha, k3)
        for i in range(n):
            yd[i] = ybuf[_row(k + 1 - lags[i], M, L), i]
            ys[i] = y[i] + h * k3[i]
        _field(n, c1, ai, aj, ys, yd, kind, alpha, k4)
        rn = _row(k + 1, M, L)
        for i in range(n):
            v = y[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if not math.isfinite(v):
                stats[3] = k
                return NOT_FINITE
            if abs(v) > OVERFLOW_LIMIT:
                stats[3] = k
                return OVERFLOW
            if clamp and v < 0.0:
                stats[0] += 1.0
                if v < stats[1]:
                    stats[1] = v
                v = 0.0
            ybuf[rn, i] = v
        if renorm_every > 0 and (k + 1) % renorm_every == 0:
            # derivative at the new knot, needed by the segment's dense output
            for i in range(n):
                y[i] = ybuf[rn, i]
                yd[i] = ybuf[_row(k + 1 - lags[i], M, L), i]
            _field(n, c1, ai, aj, y, yd, kind, alpha, k1)
            for i in range(n):
                dbuf[rn, i] = k1[i]
            nrm = _segment_norm(k + 1, n, lags, ybuf, dbuf, dleft, M, L, h, norm_mode, _GL_X, _GL_W)
            if not (nrm > 0.0) or not math.isfinite(nrm):
                stats[3] = k
                return ZERO_NORM
            logs[nlog] = math.log(nrm)
            nlog += 1
            stats[2] = nlog
            inv = 1.0 / nrm
            for r in range(L):
                for i in range(n):
                    ybuf[r, i] *= inv
                    dbuf[r, i] *= inv
            for i in range(n):
                dleft[i] *= inv
    # derivative at the final knot so the dense output covers [0, k_end * h]
    rk = _row(k_end, M, L)
    for i in range(n):
        y[i] = ybuf[rk, i]
        yd[i] = ybuf[_row(k_end - lags[i], M, L), i]
    _field(n, c1, ai, aj, y, yd, kind, alpha, k1)
    for i in range(n):
        dbuf[rk, i] = k1[i]
    return OK
