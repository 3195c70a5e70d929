# cython: language_level=3
"""Compiled iteration kernels.

Operation-for-operation mirror of ``_pure``; see that module for the packed
model layout and return conventions.  The simulation loop releases the GIL
so sweeps can run cells on several threads.
"""
import numpy as np

from libc.math cimport exp, pow, isfinite

cdef enum:
    RICKER = 0
    HASSELL = 1
    GBH = 2
    LOGISTIC = 3

cdef enum:
    CONSTANT = 0

cdef double EXP_SWITCH = 700.0


cdef inline double _growth(int kind, double p0, double p1, double p2, double x) noexcept nogil:
    cdef double u
    if kind == RICKER:
        return p0 * x * exp(-p1 * x)
    if kind == HASSELL:
        return p0 * x / pow(1.0 + p1 * x, p2)
    if kind == GBH:
        return p0 * x / (1.0 + pow(x / p1, p2))
    if kind == LOGISTIC:
        return p0 * x * (1.0 - x)
    u = x - 1.0
    return p0 * x * exp(-(u * u))


cdef inline double _dispersal(int kind, double p0, double p1, double p2, double x) noexcept nogil:
    cdef double z, e
    if kind == CONSTANT:
        return p0
    z = -p1 * (x - p2)
    if z > EXP_SWITCH:
        e = exp(-z)
        return p0 * e / (1.0 + e)
    return p0 / (1.0 + exp(z))


cdef inline void _update_stats(double[::1] x, double[::1] stats) noexcept nogil:
    cdef Py_ssize_t i, n = x.shape[0]
    cdef double e1 = x[0], l1 = 0.0, sup = 0.0, v
    for i in range(n):
        v = x[i]
        if v < e1:
            e1 = v
        l1 += v
        if v > sup:
            sup = v
    if e1 < stats[0]:
        stats[0] = e1
    if e1 > stats[1]:
        stats[1] = e1
    if l1 < stats[2]:
        stats[2] = l1
    if l1 > stats[3]:
        stats[3] = l1
    if sup < stats[4]:
        stats[4] = sup
    if sup > stats[5]:
        stats[5] = sup


cdef inline void _step(const int[::1] mk, const double[:, ::1] mp,
                       const int[:, ::1] dk, const double[:, :, ::1] dp,
                       double[::1] x, double[::1] f, double[::1] out, bint coupled) noexcept nogil:
    cdef Py_ssize_t i, j, n = x.shape[0]
    cdef double s
    for j in range(n):
        f[j] = _growth(mk[j], mp[j, 0], mp[j, 1], mp[j, 2], x[j])
    if not coupled:
        for i in range(n):
            out[i] = f[i]
        return
    for i in range(n):
        s = 0.0
        for j in range(n):
            s += _dispersal(dk[i, j], dp[i, j, 0], dp[i, j, 1], dp[i, j, 2], x[j]) * f[j]
        out[i] = s


def step(map_kind, map_par, disp_kind, disp_par, x):
    cdef const int[::1] mk = np.ascontiguousarray(map_kind, dtype=np.intc)
    cdef const double[:, ::1] mp = np.ascontiguousarray(map_par, dtype=np.float64)
    cdef const int[:, ::1] dk = np.ascontiguousarray(disp_kind, dtype=np.intc)
    cdef const double[:, :, ::1] dp = np.ascontiguousarray(disp_par, dtype=np.float64)
    xa = np.array(x, dtype=np.float64)
    f = np.empty_like(xa)
    out = np.empty_like(xa)
    _step(mk, mp, dk, dp, xa, f, out, True)
    return out


def simulate(map_kind, map_par, disp_kind, disp_par, x0, long T, long burn_in, long window, bint coupled):
    cdef const int[::1] mk = np.ascontiguousarray(map_kind, dtype=np.intc)
    cdef const double[:, ::1] mp = np.ascontiguousarray(map_par, dtype=np.float64)
    cdef const int[:, ::1] dk = np.ascontiguousarray(disp_kind, dtype=np.intc)
    cdef const double[:, :, ::1] dp = np.ascontiguousarray(disp_par, dtype=np.float64)
    xa = np.array(x0, dtype=np.float64)
    cdef Py_ssize_t n = xa.shape[0]
    cdef long wl = min(window, T - burn_in)
    tail_arr = np.zeros((wl, n), dtype=np.float64)
    stats_arr = np.array([np.inf, -np.inf, np.inf, -np.inf, np.inf, -np.inf])
    f_arr = np.empty(n)
    new_arr = np.empty(n)
    cdef double[:, ::1] tail = tail_arr
    cdef double[::1] stats = stats_arr
    cdef double[::1] x = xa
    cdef double[::1] f = f_arr
    cdef double[::1] new = new_arr
    cdef long t = 0, tt, first = T - wl
    cdef Py_ssize_t i
    cdef int status = 0
    cdef bint fixed
    with nogil:
        while t < T:
            _step(mk, mp, dk, dp, x, f, new, coupled)
            t += 1
            fixed = True
            for i in range(n):
                if not isfinite(new[i]):
                    status = 1
                    break
                if new[i] < 0.0:
                    status = 2
                    break
                if new[i] != x[i]:
                    fixed = False
            if status != 0:
                break
            for i in range(n):
                x[i] = new[i]
            if t > first:
                for i in range(n):
                    tail[t - first - 1, i] = x[i]
            if t > burn_in:
                _update_stats(x, stats)
            if fixed:
                # x(t) == x(t-1) exactly, so every later state equals x as well
                tt = t + 1
                if tt < first + 1:
                    tt = first + 1
                while tt <= T:
                    for i in range(n):
                        tail[tt - first - 1, i] = x[i]
                    tt += 1
                if T > t:
                    _update_stats(x, stats)
                break
    if status != 0:
        return None, 0, new_arr.copy(), stats_arr.tolist(), status, t
    return tail_arr, first + 1, xa, stats_arr.tolist(), 0, 0
