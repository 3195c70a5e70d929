"""Coupled model F(x) = A(x) x with A(x) = D(x) G(x), and its simulation."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernels as K
from .dispersal import DispersalMatrix, check_substochastic
from .errors import ConfigurationError, DomainError, SimulationDiverged
from .growth_maps import GrowthMap

DEFAULT_WINDOW = 1024


@dataclass(frozen=True)
class Packed:
    """Array form of a model consumed by the iteration kernels."""

    map_kind: np.ndarray
    map_par: np.ndarray
    disp_kind: np.ndarray
    disp_par: np.ndarray
    map_kind_list: list = field(repr=False)
    map_par_list: list = field(repr=False)
    disp_kind_list: list = field(repr=False)
    disp_par_list: list = field(repr=False)

    @classmethod
    def build(cls, maps: Sequence[GrowthMap], dispersal: DispersalMatrix | None):
        n = len(maps)
        mk = np.array([m.code for m in maps], dtype=np.intc)
        mp = np.array([m.packed_params for m in maps], dtype=np.float64)
        if dispersal is None:
            dk = np.zeros((n, n), dtype=np.intc)
            dp = np.zeros((n, n, 3), dtype=np.float64)
        else:
            dk = np.array([[fn.code for fn in row] for row in dispersal.rows()], dtype=np.intc)
            dp = np.array([[fn.packed_params for fn in row] for row in dispersal.rows()],
                          dtype=np.float64)
        return cls(mk, mp, dk, dp, mk.tolist(), mp.tolist(), dk.tolist(), dp.tolist())


@dataclass(frozen=True, eq=False)
class MetapopModel:
    """Validated n-region model.  Build it with :func:`build_model`."""

    maps: tuple[GrowthMap, ...]
    dispersal: DispersalMatrix
    bounds: np.ndarray = field(repr=False)
    g0: np.ndarray = field(repr=False)
    packed: Packed = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.maps)

    @property
    def total_bound(self) -> float:
        """M = sum of the regional bounds m_i; ||F(x)||_1 <= M everywhere."""
        return float(self.bounds.sum())

    def _vec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64).reshape(-1)
        if x.shape != (self.n,):
            raise DomainError(f"state must have {self.n} components, got shape {x.shape}")
        if not np.all(np.isfinite(x)) or np.any(x < 0):
            raise DomainError(f"state must be finite and componentwise >= 0, got {x.tolist()}")
        for i, m in enumerate(self.maps):
            if x[i] > m.domain_max:
                raise DomainError(f"region {i + 1} ({m.kind.value}) density {x[i]!r} exceeds its domain")
        return x

    def G(self, x) -> np.ndarray:
        x = self._vec(x)
        return np.diag([m.g(xi) for m, xi in zip(self.maps, x)])

    def D(self, x) -> np.ndarray:
        return self.dispersal.evaluate(self._vec(x))

    def assemble_A(self, x) -> np.ndarray:
        """A(x) with A_ij = d_ij(x_j) g_j(x_j)."""
        x = self._vec(x)
        g = np.array([m.g(xi) for m, xi in zip(self.maps, x)])
        return self.dispersal.evaluate(x) * g[None, :]

    def jacobian_at_origin(self) -> np.ndarray:
        """F'(0), which equals A(0) because f_i'(0) = g_i(0)."""
        return self.dispersal.at_zero() * self.g0[None, :]

    def step(self, x) -> np.ndarray:
        """F(x) = A(x) x, evaluated as sum_j d_ij(x_j) f_j(x_j)."""
        return K.step(self.packed, self._vec(x))

    def f_vector(self, x) -> np.ndarray:
        x = self._vec(x)
        return np.array([m.f(xi) for m, xi in zip(self.maps, x)])

    def simulate(self, x0, T: int, burn_in: int | None = None, window: int = DEFAULT_WINDOW,
                 backend: str | None = None) -> "Trajectory":
        return simulate(self, x0, T, burn_in, window, backend=backend)


def build_model(maps: Sequence[GrowthMap], dispersal) -> MetapopModel:
    """Validate and assemble a model from regional maps and a dispersal matrix."""
    maps = tuple(maps)
    if not maps:
        raise ConfigurationError("a model needs at least one region")
    for i, m in enumerate(maps):
        if not isinstance(m, GrowthMap):
            raise ConfigurationError(f"region {i + 1} is not a growth map")
    if not isinstance(dispersal, DispersalMatrix):
        dispersal = DispersalMatrix(dispersal)
    if dispersal.n != len(maps):
        raise ConfigurationError(
            f"{len(maps)} regions need a {len(maps)}x{len(maps)} dispersal matrix, got {dispersal.n}x{dispersal.n}")
    report = check_substochastic(dispersal)
    if not report.holds:
        raise ConfigurationError(report.describe())
    bounds = np.array([m.upper_bound() for m in maps])
    if not np.all(np.isfinite(bounds)) or np.any(bounds <= 0):
        raise ConfigurationError(f"growth maps must have a finite positive bound, got {bounds.tolist()}")
    g0 = np.array([m.g0() for m in maps])
    return MetapopModel(maps, dispersal, bounds, g0, Packed.build(maps, dispersal))


def default_burn_in(T: int, window: int = 1) -> int:
    """max(10^4, T/10), clamped so at least ``window`` states follow it."""
    return max(0, min(max(10_000, T // 10), T - max(1, window)))


@dataclass
class Trajectory:
    """Retained tail of a simulation plus summary statistics.

    ``states[k]`` is x(t_first + k); the last row is x(T).  The ``eta``
    statistics are taken over every step t with burn_in < t <= T, not only
    over the retained window.
    """

    states: np.ndarray
    t_first: int
    T: int
    burn_in: int
    x0: np.ndarray
    eta1_min: float
    eta1_max: float
    l1_min: float
    l1_max: float
    sup_min: float
    sup_max: float

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.t_first, self.t_first + len(self.states))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        n = self.states.shape[1]
        w.writerow(["t"] + [f"x_{i + 1}" for i in range(n)])
        for t, row in zip(self.times, self.states):
            w.writerow([int(t)] + [format(float(v), ".17g") for v in row])
        return buf.getvalue()


def _run(packed, x0, T, burn_in, window, coupled, backend):
    T = int(T)
    if T < 1:
        raise ConfigurationError(f"T must be >= 1, got {T}")
    if burn_in is None:
        burn_in = default_burn_in(T, window)
    burn_in = int(burn_in)
    if not 0 <= burn_in < T:
        raise ConfigurationError(f"need 0 <= burn_in < T, got burn_in={burn_in}, T={T}")
    window = int(window)
    if window < 1:
        raise ConfigurationError(f"window must be >= 1, got {window}")
    tail, t_first, final, stats, status, bad = K.simulate(packed, x0, T, burn_in, window, coupled, backend)
    if status == K.NON_FINITE:
        raise SimulationDiverged(f"state became non-finite at step {bad}: {final.tolist()}", bad)
    if status == K.NEGATIVE:
        raise SimulationDiverged(
            f"state left the nonnegative cone at step {bad}: {final.tolist()}", bad)
    return Trajectory(tail, t_first, T, burn_in, np.array(x0, dtype=float), *stats)


def simulate(model: MetapopModel, x0, T: int, burn_in: int | None = None,
             window: int = DEFAULT_WINDOW, backend: str | None = None) -> Trajectory:
    """Iterate x(t+1) = F(x(t)) ``T`` times and keep the last ``window`` states.

    ``burn_in`` defaults to ``max(10_000, T // 10)`` (clamped below T).
    Raises :class:`SimulationDiverged` if a state becomes non-finite or
    negative, which for valid models only happens when a logistic region is
    pushed outside [0, 1].
    """
    x0 = model._vec(x0)
    return _run(model.packed, x0, T, burn_in, window, True, backend)


def simulate_isolated(maps: Sequence[GrowthMap], x0, T: int, burn_in: int | None = None,
                      window: int = DEFAULT_WINDOW, backend: str | None = None) -> list[Trajectory]:
    """Iterate each x_i(t+1) = f_i(x_i(t)) independently; one trajectory per region."""
    maps = tuple(maps)
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.shape != (len(maps),):
        raise DomainError(f"x0 must have {len(maps)} components")
    for m, v in zip(maps, x0):
        m._check(v)
    return [
        _run(Packed.build((m,), None), x0[i:i + 1], T, burn_in, window, False, backend)
        for i, m in enumerate(maps)
    ]
