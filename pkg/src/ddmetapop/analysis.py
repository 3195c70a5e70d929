"""Stability verdicts, fixed points, period detection and persistence diagnostics."""
from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from itertools import product
from typing import Sequence

import numpy as np

from ._parallel import parallel_map
from .dispersal import DispersalKind
from .errors import ConfigurationError
from .model import MetapopModel, Trajectory, simulate, simulate_isolated
from .scenario import Axis, Scenario
from .spectral import (
    DEAD_ZONE, Certificate, Direction, Refusal, strict_certificate, r_index, spectral_radius,
)

log = logging.getLogger(__name__)

MAX_PERIOD = 8
PERIOD_TOL = 1e-6
PERIOD_WINDOW = 64
NEWTON_TOL = 1e-10
NEWTON_MAX_ITER = 100
NEWTON_HALVINGS = 30
DEDUPE_TOL = 1e-6
MARGINAL_ZONE = 1e-6


def _floats(v) -> list:
    return [float(x) for x in np.asarray(v, dtype=float).ravel()]


# ---------------------------------------------------------------------------
# stability of extinction


@dataclass
class StabilityVerdict:
    """Which sufficient conditions hold for the extinction state of a model.

    Flags:

    * ``extinction_las_growth_bound``: every region has g_i(0) < 1.
    * ``extinction_las_linearization`` / ``extinction_unstable_linearization``:
      rho(A(0)) below / above 1 outside a 1e-9 dead zone.
    * ``extinction_gas_monotone``: constant self-retention, nonincreasing
      per-capita growth and off-diagonal dispersal, and rho(A(0)) < 1.
    * ``extinction_unstable_index``: the instability index exceeds 1.
    * ``positive_fixed_point_exists`` / ``persistence_certified``: both follow
      from rho(A(0)) > 1.
    * ``indeterminate``: rho(A(0)) is inside the dead zone.
    """

    rho0: float
    extinction_las_growth_bound: bool
    extinction_las_linearization: bool
    extinction_gas_monotone: bool
    extinction_unstable_index: bool
    extinction_unstable_linearization: bool
    positive_fixed_point_exists: bool
    persistence_certified: bool
    indeterminate: bool
    evidence: dict = field(default_factory=dict)

    FLAGS = (
        "extinction_las_growth_bound", "extinction_las_linearization", "extinction_gas_monotone",
        "extinction_unstable_index", "extinction_unstable_linearization",
        "positive_fixed_point_exists", "persistence_certified", "indeterminate",
    )

    @property
    def flags(self) -> dict:
        return {k: getattr(self, k) for k in self.FLAGS}

    def to_dict(self) -> dict:
        return {"rho0": self.rho0, "flags": self.flags, "evidence": self.evidence}


def monotone_hypotheses(model: MetapopModel) -> tuple[bool, str]:
    """Structural hypotheses of the Lyapunov argument, decided per catalog kind."""
    n = model.n
    for i in range(n):
        if model.dispersal[i, i].kind is not DispersalKind.CONSTANT:
            return False, f"self-retention d_{i + 1}{i + 1} is not constant"
    for i, m in enumerate(model.maps):
        if not m.g_nonincreasing():
            return False, f"per-capita growth of region {i + 1} ({m.kind.value}) is not nonincreasing"
    for i in range(n):
        for j in range(n):
            if i != j and not model.dispersal[i, j].nonincreasing():
                return False, f"dispersal ({i + 1},{j + 1}) is increasing"
    return True, "ok"


def classify_extinction(model: MetapopModel) -> StabilityVerdict:
    A0 = model.jacobian_at_origin()
    rep = spectral_radius(A0)
    rho = rep.rho
    g0max = float(np.max(model.g0))
    R = r_index(model)
    las_lin = rho < 1.0 - DEAD_ZONE
    unstable_lin = rho > 1.0 + DEAD_ZONE
    structural, why = monotone_hypotheses(model)
    evidence = {
        "A0": A0.tolist(),
        "rho0_bounds": list(rep.bounds),
        "right_vector": _floats(rep.right_vector),
        "left_vector": _floats(rep.left_vector),
        "max_g0": g0max,
        "r_index": R,
        "monotone_hypotheses": structural,
        "monotone_note": why,
    }
    if las_lin:
        cert = strict_certificate(A0, Direction.CONTRACT)
    elif unstable_lin:
        cert = strict_certificate(A0, Direction.EXPAND)
    else:
        cert = Refusal("spectral radius within the dead zone")
    evidence["certificate"] = (
        {"direction": cert.direction.value, "vector": _floats(cert.vector), "margin": cert.margin}
        if isinstance(cert, Certificate) else {"refusal": cert.reason})
    pc = persistence_certificate(model)
    if isinstance(pc, PersistenceCertificate):
        evidence["persistence"] = {"vector": _floats(pc.vector), "r0": pc.r0}
    return StabilityVerdict(
        rho0=rho,
        extinction_las_growth_bound=g0max < 1.0,
        extinction_las_linearization=las_lin,
        extinction_gas_monotone=structural and las_lin,
        extinction_unstable_index=R > 1.0 + DEAD_ZONE,
        extinction_unstable_linearization=unstable_lin,
        positive_fixed_point_exists=unstable_lin,
        persistence_certified=unstable_lin,
        indeterminate=not (las_lin or unstable_lin),
        evidence=evidence,
    )


@dataclass(frozen=True)
class PersistenceCertificate:
    """Positive v and r0 > 1 with A(0)^T v >= r0 v."""

    vector: np.ndarray
    r0: float


def persistence_certificate(model: MetapopModel) -> PersistenceCertificate | Refusal:
    A0 = model.jacobian_at_origin()
    rep = spectral_radius(A0)
    if rep.rho <= 1.0 + DEAD_ZONE:
        return Refusal(f"spectral radius at the origin is {rep.rho:.17g} <= 1")
    v = rep.left_vector
    if not np.all(v > 0):
        return Refusal("left Perron vector is not strictly positive")
    r0 = float(np.min((A0.T @ v) / v))
    if not r0 > 1.0:
        return Refusal(f"left Perron vector gives r0 = {r0:.17g} <= 1")
    return PersistenceCertificate(v, r0)


# ---------------------------------------------------------------------------
# fixed points


class PointStability(str, enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    MARGINAL = "marginal"


@dataclass
class FixedPoint:
    point: np.ndarray
    residual: float
    classification: PointStability
    jacobian_radius: float

    def to_dict(self) -> dict:
        return {"point": _floats(self.point), "residual": self.residual,
                "classification": self.classification.value,
                "jacobian_radius": self.jacobian_radius}


def _classify_radius(rho: float) -> PointStability:
    if rho < 1.0 - MARGINAL_ZONE:
        return PointStability.STABLE
    if rho > 1.0 + MARGINAL_ZONE:
        return PointStability.UNSTABLE
    return PointStability.MARGINAL


def fd_jacobian(model: MetapopModel, x: np.ndarray) -> np.ndarray:
    """Finite-difference F'(x): central, one-sided where the domain ends."""
    n = model.n
    J = np.empty((n, n))
    for k in range(n):
        h = 1e-6 * max(1.0, abs(x[k]))
        up = x.copy()
        dn = x.copy()
        if x[k] - h < 0:
            up[k] += h
            J[:, k] = (model.step(up) - model.step(x)) / h
        elif x[k] + h > model.maps[k].domain_max:
            dn[k] -= h
            J[:, k] = (model.step(x) - model.step(dn)) / h
        else:
            up[k] += h
            dn[k] -= h
            J[:, k] = (model.step(up) - model.step(dn)) / (2 * h)
    return J


def _in_domain(model, x) -> bool:
    return bool(np.all(x >= 0) and all(xi <= m.domain_max for xi, m in zip(x, model.maps)))


def _newton(model: MetapopModel, seed: np.ndarray):
    x = np.array(seed, dtype=float)
    r = model.step(x) - x
    nr = float(np.max(np.abs(r)))
    eye = np.eye(model.n)
    for _ in range(NEWTON_MAX_ITER + 1):
        if nr < NEWTON_TOL:
            return x, nr
        J = fd_jacobian(model, x) - eye
        try:
            dx = np.linalg.solve(J, -r)
        except np.linalg.LinAlgError:
            log.debug("singular Jacobian at %s; seed skipped", x)
            return None
        if not np.all(np.isfinite(dx)):
            return None
        lam = 1.0
        for _ in range(NEWTON_HALVINGS + 1):
            xn = x + lam * dx
            if _in_domain(model, xn):
                rn = model.step(xn) - xn
                nrn = float(np.max(np.abs(rn)))
                if nrn < nr:
                    x, r, nr = xn, rn, nrn
                    break
            lam /= 2.0
        else:
            return None
    return None


def default_seeds(model: MetapopModel, seed_grid: int = 4, backend=None) -> list[np.ndarray]:
    """Grid seeds over the box [0, m_i] (zero excluded) plus pilot-run tail states."""
    k = max(1, int(seed_grid))
    axes = [[min(b, m.domain_max) * q / (k + 1) for q in range(1, k + 1)]
            for b, m in zip(model.bounds, model.maps)]
    seeds = [np.array(p) for p in product(*axes)]
    for start in (seeds[len(seeds) // 2], seeds[0]):
        tr = simulate(model, start, 2000, burn_in=1000, window=8, backend=backend)
        seeds.extend(tr.states)
    return seeds


def find_fixed_points(model: MetapopModel, seeds: Sequence | None = None, seed_grid: int = 4,
                      backend=None) -> list[FixedPoint]:
    """Zero plus every distinct positive fixed point reached by damped Newton.

    Newton runs on F(x) - x with a finite-difference Jacobian; each step is
    halved until the residual decreases and the iterate stays in the domain.
    """
    if seeds is None:
        seeds = default_seeds(model, seed_grid, backend)
    A0 = model.jacobian_at_origin()
    rho0 = spectral_radius(A0).rho
    found = [FixedPoint(np.zeros(model.n), 0.0, _classify_radius(rho0), rho0)]
    for seed in seeds:
        seed = model._vec(seed)
        if not np.any(seed > 0):
            continue
        res = _newton(model, seed)
        if res is None:
            continue
        x, nr = res
        if not np.all(x > 0) or np.max(x) < 1e-8:
            continue
        if any(np.max(np.abs(fp.point - x)) < DEDUPE_TOL for fp in found):
            continue
        rho = float(np.max(np.abs(np.linalg.eigvals(fd_jacobian(model, x)))))
        found.append(FixedPoint(x, nr, _classify_radius(rho), rho))
    found[1:] = sorted(found[1:], key=lambda fp: tuple(fp.point))
    return found


# ---------------------------------------------------------------------------
# periodic orbits


class PeriodClass(str, enum.Enum):
    P1 = "P1"
    P2 = "P2"
    P3 = "P3"
    P4 = "P4"
    P5 = "P5"
    P6 = "P6"
    P7 = "P7"
    P8 = "P8"
    ABOVE8 = "Above8"
    INVALID = "Invalid"

    @classmethod
    def of(cls, period: int | None) -> "PeriodClass":
        return cls.ABOVE8 if period is None else cls(f"P{period}")

    @property
    def period(self) -> int | None:
        return int(self.value[1:]) if self.value.startswith("P") else None


def tail_period(tail: np.ndarray, tol: float = PERIOD_TOL, max_period: int = MAX_PERIOD) -> int | None:
    """Smallest p <= max_period with |x(t+p) - x(t)|_inf < tol * max(1, |x(t)|_inf) on the tail."""
    tail = np.asarray(tail, dtype=float)
    scale = np.maximum(1.0, np.max(np.abs(tail), axis=1))
    for p in range(1, min(max_period, len(tail) - 1) + 1):
        d = np.max(np.abs(tail[p:] - tail[:-p]), axis=1)
        if np.all(d < tol * scale[:-p]):
            return p
    return None


@dataclass
class OrbitSummary:
    period_class: PeriodClass
    cycle_points: list
    tail_min_eta1: float
    tail_min_l1: float
    tail_min_sup: float
    converged_to_zero: bool
    recurrence_error: float | None
    tail: np.ndarray = field(repr=False)

    @property
    def period(self) -> int | None:
        return self.period_class.period

    def to_dict(self) -> dict:
        return {
            "period_class": self.period_class.value,
            "cycle_points": [_floats(p) for p in self.cycle_points],
            "tail_min_eta1": self.tail_min_eta1,
            "tail_min_l1": self.tail_min_l1,
            "tail_min_sup": self.tail_min_sup,
            "converged_to_zero": self.converged_to_zero,
            "recurrence_error": self.recurrence_error,
        }


def summarize_orbit(model: MetapopModel, tr: Trajectory, tol: float = PERIOD_TOL,
                    max_period: int = MAX_PERIOD, verify: bool = True) -> OrbitSummary:
    tail = tr.states
    p = tail_period(tail, tol, max_period)
    cycle = [tail[len(tail) - p + k].copy() for k in range(p)] if p else []
    rec = None
    if p and verify:
        y = cycle[0]
        for _ in range(p):
            y = model.step(y)
        rec = float(np.max(np.abs(y - cycle[0])))
    return OrbitSummary(
        period_class=PeriodClass.of(p),
        cycle_points=cycle,
        tail_min_eta1=tr.eta1_min,
        tail_min_l1=tr.l1_min,
        tail_min_sup=tr.sup_min,
        converged_to_zero=bool(np.max(np.abs(tail)) < tol),
        recurrence_error=rec,
        tail=tail,
    )


def detect_period(model: MetapopModel, x0, T: int, burn_in: int | None = None,
                  window: int = PERIOD_WINDOW, tol: float = PERIOD_TOL,
                  max_period: int = MAX_PERIOD, backend=None) -> OrbitSummary:
    """Simulate and classify the tail as P1..P8 (minimal period) or Above8.

    A tail of period p also passes the test for every multiple of p, so the
    smallest passing p is minimal.  For p <= ``max_period`` the last cycle
    point is pushed through F p times and the return error is reported.
    """
    if window < 2 * max_period + 1:
        raise ConfigurationError(f"window must be >= {2 * max_period + 1}, got {window}")
    if not tol > 0:
        raise ConfigurationError(f"tol must be > 0, got {tol}")
    tr = simulate(model, x0, T, burn_in, window, backend=backend)
    if len(tr.states) < window:
        raise ConfigurationError(
            f"only {len(tr.states)} post-burn-in states for a window of {window}; increase T")
    return summarize_orbit(model, tr, tol, max_period)


# ---------------------------------------------------------------------------
# persistence and basins


@dataclass
class PersistenceStats:
    """Minima over all starts of the post-burn-in min_i x_i, |x|_1 and |x|_inf."""

    eta1: float
    l1: float
    sup: float
    per_start: list

    def to_dict(self) -> dict:
        return {"eta1": self.eta1, "l1": self.l1, "sup": self.sup, "per_start": self.per_start}


def persistence_tail_stats(model: MetapopModel, starts: Sequence, T: int,
                           burn_in: int | None = None, threads: int | None = 1,
                           backend=None) -> PersistenceStats:
    def run(x0):
        tr = simulate(model, x0, T, burn_in, window=1, backend=backend)
        return {"x0": _floats(x0), "eta1": tr.eta1_min, "l1": tr.l1_min, "sup": tr.sup_min}

    rows = parallel_map(run, starts, threads)
    return PersistenceStats(
        eta1=min(r["eta1"] for r in rows),
        l1=min(r["l1"] for r in rows),
        sup=min(r["sup"] for r in rows),
        per_start=rows,
    )


@dataclass
class BasinPoint:
    x0: np.ndarray
    label: str
    final: np.ndarray
    distance: float | None


def basin_sample(model: MetapopModel, starts: Sequence, T: int, burn_in: int | None = None,
                 window: int = PERIOD_WINDOW, tol: float = PERIOD_TOL, target=None,
                 threads: int | None = 1, backend=None) -> list[BasinPoint]:
    """Label the limiting behaviour from each start.

    Labels are ``extinction``, ``fixed_point``, ``P2``..``P8`` or ``Above8``.
    With ``target`` the sup-distance of the final state to it is recorded.
    """
    target = None if target is None else np.asarray(target, dtype=float)

    def run(x0):
        s = detect_period(model, x0, T, burn_in, window, tol, backend=backend)
        final = s.tail[-1]
        if s.converged_to_zero:
            label = "extinction"
        elif s.period_class is PeriodClass.P1:
            label = "fixed_point"
        else:
            label = s.period_class.value
        dist = None if target is None else float(np.max(np.abs(final - target)))
        return BasinPoint(np.asarray(x0, dtype=float), label, final, dist)

    return parallel_map(run, starts, threads)


# ---------------------------------------------------------------------------
# Lyapunov decrease


@dataclass
class LyapunovReport:
    vector: np.ndarray
    steps_checked: int
    violations: list

    @property
    def ok(self) -> bool:
        return not self.violations


def lyapunov_decrease_check(model: MetapopModel, orbits: Sequence[Trajectory],
                            zero_floor: float = 1e-300) -> LyapunovReport | Refusal:
    """Check that V(x) = v^T x strictly decreases along every orbit step.

    v comes from a contracting certificate of A(0)^T, i.e. v^T A(0) << v^T.
    Steps from numerically zero states (max component below ``zero_floor``)
    are skipped.
    """
    ok, why = monotone_hypotheses(model)
    if not ok:
        return Refusal(why)
    cert = strict_certificate(model.jacobian_at_origin().T, Direction.CONTRACT)
    if isinstance(cert, Refusal):
        return cert
    v = cert.vector
    checked = 0
    violations = []
    for k, tr in enumerate(orbits):
        states = np.asarray(tr.states, dtype=float)
        V = states @ v
        for t in range(len(states) - 1):
            if np.max(states[t]) < zero_floor:
                continue
            checked += 1
            if not V[t + 1] < V[t]:
                violations.append({"orbit": k, "t": int(tr.t_first + t),
                                   "state": _floats(states[t]), "increase": float(V[t + 1] - V[t])})
    return LyapunovReport(v, checked, violations)


# ---------------------------------------------------------------------------
# total population, coupled versus isolated


@dataclass
class CompareTable:
    """Final totals, coupled and isolated, along a parameter scan.

    ``critical_value`` locates the last sign change of coupled - isolated
    (beyond it the sign is constant over the scanned range), refined by
    bisection; ``crossings`` lists every bracketing grid pair.
    """

    parameter: str
    values: list
    coupled: list
    isolated: list
    critical_value: float | None
    crossings: list
    T: int

    @property
    def difference(self) -> list:
        return [c - i for c, i in zip(self.coupled, self.isolated)]

    @property
    def coupled_always_below(self) -> bool:
        return all(d < 0 for d in self.difference)

    def to_csv(self) -> str:
        lines = [f"{self.parameter},coupled_total,isolated_total,difference"]
        for v, c, i in zip(self.values, self.coupled, self.isolated):
            lines.append(",".join(format(z, ".17g") for z in (v, c, i, c - i)))
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "parameter": self.parameter,
            "T": self.T,
            "critical_value": self.critical_value,
            "crossings": self.crossings,
            "coupled_always_below": self.coupled_always_below,
            "rows": [{"value": v, "coupled_total": c, "isolated_total": i, "difference": c - i}
                     for v, c, i in zip(self.values, self.coupled, self.isolated)],
        }


def final_totals(scenario: Scenario, paths, value: float, x0, T: int, backend=None):
    """(coupled, isolated) totals after T - 1 steps from x0.

    A run of length T records x(0), ..., x(T-1); the totals are read from its
    last entry.
    """
    if T < 2:
        raise ConfigurationError(f"T must be >= 2, got {T}")
    model = scenario.with_values({tuple(paths): value}).model()
    c = simulate(model, x0, T - 1, burn_in=0, window=1, backend=backend).final
    iso = simulate_isolated(model.maps, x0, T - 1, burn_in=0, window=1, backend=backend)
    return float(np.sum(c)), float(sum(tr.final[0] for tr in iso))


def total_population_compare(scenario: Scenario, axis: Axis, x0, T: int, refine: float = 0.005,
                             threads: int | None = 1, backend=None) -> CompareTable:
    x0 = tuple(float(v) for v in x0)
    values = [axis.lower] if axis.lower == axis.upper else _floats(axis.grid())
    rows = parallel_map(lambda v: final_totals(scenario, axis.paths, v, x0, T, backend), values, threads)
    coupled = [r[0] for r in rows]
    isolated = [r[1] for r in rows]
    diff = [c - i for c, i in rows]
    crossings = []
    for k in range(len(values) - 1):
        if diff[k] == 0 or diff[k] * diff[k + 1] < 0:
            crossings.append([values[k], values[k + 1]])
    if diff and diff[-1] == 0:
        crossings.append([values[-1], values[-1]])
    critical = None
    if crossings:
        lo, hi = crossings[-1]
        dlo = diff[values.index(lo)]
        while hi - lo > 2 * refine and dlo != 0:
            mid = 0.5 * (lo + hi)
            c, i = final_totals(scenario, axis.paths, mid, x0, T, backend)
            dm = c - i
            if dm == 0:
                lo = hi = mid
                break
            if (dm < 0) == (dlo < 0):
                lo, dlo = mid, dm
            else:
                hi = mid
        critical = lo if dlo == 0 else 0.5 * (lo + hi)
    return CompareTable(axis.label, values, coupled, isolated, critical, crossings, T)

