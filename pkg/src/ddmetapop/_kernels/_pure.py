"""Reference implementation of the iteration kernels in plain Python.

The compiled module ``_fast`` mirrors these functions operation for
operation, so both backends produce bit-identical trajectories.  Any change
to the arithmetic here must be repeated there.

Packed model layout (shared by both backends):

* ``map_kind[i]``: growth-map code for region ``i``
* ``map_par[i]``: ``(p0, p1, p2)`` growth-map parameters
* ``disp_kind[i][j]``: dispersal code for the flow from region ``j`` to ``i``
* ``disp_par[i][j]``: ``(p0, p1, p2)`` dispersal parameters
"""
import math

RICKER = 0
HASSELL = 1
GBH = 2
LOGISTIC = 3
GAMMA_GAUSS = 4

CONSTANT = 0
RICHARDS = 1

# status codes returned by simulate()
OK = 0
NON_FINITE = 1
NEGATIVE = 2

# exp() argument above which the Richards curve switches to its reciprocal form
EXP_SWITCH = 700.0


def growth(kind, p0, p1, p2, x):
    """f(x) for a packed growth map."""
    if kind == RICKER:
        return p0 * x * math.exp(-p1 * x)
    if kind == HASSELL:
        return p0 * x / (1.0 + p1 * x) ** p2
    if kind == GBH:
        return p0 * x / (1.0 + (x / p1) ** p2)
    if kind == LOGISTIC:
        return p0 * x * (1.0 - x)
    u = x - 1.0
    return p0 * x * math.exp(-(u * u))


def per_capita(kind, p0, p1, p2, x):
    """g(x) for a packed growth map, from its own closed form."""
    if kind == RICKER:
        return p0 * math.exp(-p1 * x)
    if kind == HASSELL:
        return p0 / (1.0 + p1 * x) ** p2
    if kind == GBH:
        return p0 / (1.0 + (x / p1) ** p2)
    if kind == LOGISTIC:
        return p0 * (1.0 - x)
    u = x - 1.0
    return p0 * math.exp(-(u * u))


def dispersal(kind, p0, p1, p2, x):
    """d(x) for a packed dispersal function."""
    if kind == CONSTANT:
        return p0
    z = -p1 * (x - p2)
    if z > EXP_SWITCH:
        e = math.exp(-z)
        return p0 * e / (1.0 + e)
    return p0 / (1.0 + math.exp(z))


def step(map_kind, map_par, disp_kind, disp_par, x):
    """One application of x -> sum_j d_ij(x_j) f_j(x_j); returns a list."""
    n = len(x)
    f = [growth(map_kind[j], map_par[j][0], map_par[j][1], map_par[j][2], x[j])
         for j in range(n)]
    out = [0.0] * n
    for i in range(n):
        s = 0.0
        kind_row = disp_kind[i]
        par_row = disp_par[i]
        for j in range(n):
            p = par_row[j]
            s += dispersal(kind_row[j], p[0], p[1], p[2], x[j]) * f[j]
        out[i] = s
    return out


def step_isolated(map_kind, map_par, x):
    return [growth(map_kind[j], map_par[j][0], map_par[j][1], map_par[j][2], x[j])
            for j in range(len(x))]


def _as_lists(map_kind, map_par, disp_kind, disp_par):
    def tolist(a):
        return a.tolist() if hasattr(a, "tolist") else a
    return tolist(map_kind), tolist(map_par), tolist(disp_kind), tolist(disp_par)


def simulate(map_kind, map_par, disp_kind, disp_par, x0, T, burn_in, window, coupled):
    """Iterate ``T`` times from ``x0``.

    Returns ``(tail, t_first, final, stats, status, bad_step)`` where ``tail``
    holds the last ``min(window, T - burn_in)`` states (the last one is
    ``x(T)``), ``t_first`` is the time index of ``tail[0]`` and ``stats`` is
    ``[min eta1, max eta1, min l1, max l1, min sup, max sup]`` over
    ``t in (burn_in, T]``.  ``status`` is non-zero when a state became
    non-finite or negative at step ``bad_step``.
    """
    map_kind, map_par, disp_kind, disp_par = _as_lists(map_kind, map_par, disp_kind, disp_par)
    x = [float(v) for v in (x0.tolist() if hasattr(x0, "tolist") else x0)]
    wl = min(window, T - burn_in)
    ring = [None] * wl
    inf = float("inf")
    stats = [inf, -inf, inf, -inf, inf, -inf]
    t = 0
    while t < T:
        if coupled:
            new = step(map_kind, map_par, disp_kind, disp_par, x)
        else:
            new = step_isolated(map_kind, map_par, x)
        t += 1
        for v in new:
            if not math.isfinite(v):
                return None, 0, new, stats, NON_FINITE, t
            if v < 0.0:
                return None, 0, new, stats, NEGATIVE, t
        fixed = new == x
        x = new
        if fixed:
            # x(t) == x(t-1) exactly, so every later state equals x as well
            _record(x, t, T, burn_in, wl, ring, stats)
            for tt in range(max(t + 1, T - wl + 1), T + 1):
                ring[tt - (T - wl) - 1] = x
            if T > t:
                _update_stats(x, stats)
            break
        _record(x, t, T, burn_in, wl, ring, stats)
    t_first = T - wl + 1
    return ring, t_first, x, stats, OK, 0


def _record(x, t, T, burn_in, wl, ring, stats):
    if t > T - wl:
        ring[t - (T - wl) - 1] = x
    if t > burn_in:
        _update_stats(x, stats)


def _update_stats(x, stats):
    e1 = min(x)
    l1 = 0.0
    sup = 0.0
    for v in x:
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
