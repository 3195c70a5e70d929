"""Dispersal proportion functions and the dispersal-cost condition.

Entry ``(i, j)`` of a :class:`DispersalMatrix` is the proportion of the
post-growth population of region ``j`` that ends up in region ``i`` (the
diagonal is the proportion staying).  The cost condition requires every
origin column to sum to strictly less than one for all densities.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import _kernels as K
from .errors import ConfigurationError, DomainError


class DispersalKind(str, enum.Enum):
    CONSTANT = "constant"
    RICHARDS = "richards"

    @classmethod
    def parse(cls, name: str) -> "DispersalKind":
        key = str(name).strip().lower()
        try:
            return cls(key)
        except ValueError:
            raise ConfigurationError(
                f"unknown dispersal kind {name!r} (known: constant, richards)") from None


_PARAMS = {
    DispersalKind.CONSTANT: ("d",),
    DispersalKind.RICHARDS: ("r", "k", "s"),
}


@dataclass(frozen=True)
class DispersalFunction:
    """``constant``: d(x) = d.  ``richards``: d(x) = r / (1 + exp(-k (x - s)))."""

    kind: DispersalKind
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        kind = self.kind if isinstance(self.kind, DispersalKind) else DispersalKind.parse(self.kind)
        object.__setattr__(self, "kind", kind)
        names = _PARAMS[kind]
        unknown = set(self.params) - set(names)
        if unknown:
            raise ConfigurationError(
                f"{kind.value}: unknown parameter(s) {sorted(unknown)}; expected {list(names)}")
        params = {}
        for name in names:
            if name not in self.params:
                raise ConfigurationError(f"{kind.value}: missing parameter {name!r}")
            try:
                params[name] = float(self.params[name])
            except (TypeError, ValueError):
                raise ConfigurationError(
                    f"{kind.value}: parameter {name!r} is not a number: {self.params[name]!r}") from None
        object.__setattr__(self, "params", params)
        if kind is DispersalKind.CONSTANT:
            if not 0 < params["d"] < 1:
                raise ConfigurationError(f"constant dispersal needs 0 < d < 1, got {params['d']}")
        else:
            r, k, s = params["r"], params["k"], params["s"]
            if not 0 < r < 1:
                raise ConfigurationError(f"richards dispersal needs 0 < r < 1, got {r}")
            if not (k >= 0 and math.isfinite(k)):
                raise ConfigurationError(f"richards dispersal needs finite k >= 0, got {k}")
            if not (s >= 0 and math.isfinite(s)):
                raise ConfigurationError(f"richards dispersal needs finite s >= 0, got {s}")

    @classmethod
    def constant(cls, d):
        return cls(DispersalKind.CONSTANT, {"d": d})

    @classmethod
    def richards(cls, r, k, s):
        return cls(DispersalKind.RICHARDS, {"r": r, "k": k, "s": s})

    @property
    def code(self) -> int:
        return K.CONSTANT if self.kind is DispersalKind.CONSTANT else K.RICHARDS

    @property
    def packed_params(self) -> tuple[float, float, float]:
        p = self.params
        if self.kind is DispersalKind.CONSTANT:
            return (p["d"], 0.0, 0.0)
        return (p["r"], p["k"], p["s"])

    def __call__(self, x: float) -> float:
        x = float(x)
        if not x >= 0:
            raise DomainError(f"dispersal density must be >= 0, got {x!r}")
        return K.dispersal(self.code, *self.packed_params, x)

    def at_zero(self) -> float:
        # r / (1 + exp(k s)) for the Richards kind
        return self(0.0)

    def limit(self) -> float:
        """Limit as x -> infinity, which is also the supremum."""
        if self.kind is DispersalKind.CONSTANT:
            return self.params["d"]
        r, k, _ = self.packed_params
        return r if k > 0 else r / 2.0

    def nonincreasing(self) -> bool:
        return self.kind is DispersalKind.CONSTANT or self.params["k"] == 0

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, **self.params}


def eval_d(fn: DispersalFunction, x: float) -> float:
    return fn(x)


def d_at_zero(fn: DispersalFunction) -> float:
    return fn.at_zero()


def d_limit(fn: DispersalFunction) -> float:
    return fn.limit()


class DispersalMatrix:
    """Square grid of :class:`DispersalFunction`; ``D[i, j]`` moves j -> i."""

    def __init__(self, entries: Sequence[Sequence[DispersalFunction]]):
        rows = [tuple(r) for r in entries]
        n = len(rows)
        if n == 0:
            raise ConfigurationError("dispersal matrix is empty")
        for i, r in enumerate(rows):
            if len(r) != n:
                raise ConfigurationError(
                    f"dispersal matrix row {i + 1} has {len(r)} entries, expected {n}")
            for j, fn in enumerate(r):
                if not isinstance(fn, DispersalFunction):
                    raise ConfigurationError(f"dispersal entry ({i + 1},{j + 1}) is not a dispersal function")
        self._rows = tuple(rows)

    @property
    def n(self) -> int:
        return len(self._rows)

    def __getitem__(self, ij):
        i, j = ij
        return self._rows[i][j]

    def rows(self):
        return self._rows

    def __eq__(self, other):
        return isinstance(other, DispersalMatrix) and self._rows == other._rows

    def __repr__(self):
        return f"DispersalMatrix({[list(r) for r in self._rows]!r})"

    def evaluate(self, x) -> np.ndarray:
        """D(x) with entry (i, j) = d_ij(x_j)."""
        x = np.asarray(x, dtype=float)
        n = self.n
        out = np.empty((n, n))
        for i in range(n):
            for j in range(n):
                out[i, j] = self._rows[i][j](x[j])
        return out

    def at_zero(self) -> np.ndarray:
        return np.array([[fn.at_zero() for fn in row] for row in self._rows])

    def limits(self) -> np.ndarray:
        return np.array([[fn.limit() for fn in row] for row in self._rows])

    def to_list(self) -> list:
        return [[fn.to_dict() for fn in row] for row in self._rows]


@dataclass
class SubstochasticReport:
    """Outcome of the dispersal-cost check.

    ``worst_column`` is 0-based; ``witness_x`` is the density at which the
    worst sum was reached (``inf`` when it is a saturation limit).
    """

    holds: bool
    worst_column_sum: float
    worst_column: int
    witness_x: float
    column_sums: list[float]
    method: str

    def describe(self) -> str:
        col = self.worst_column + 1
        where = "at saturation" if math.isinf(self.witness_x) else f"at x={self.witness_x:g}"
        state = "holds" if self.holds else "violated"
        return (f"dispersal cost condition {state}: column {col} sums to "
                f"{self.worst_column_sum:.17g} {where} (must be < 1)")


def check_substochastic(D: DispersalMatrix, grid=None, exact: bool = True) -> SubstochasticReport:
    """Check that every origin column of D sums to < 1 for all densities.

    With ``exact`` (the default) each column sum is bounded by the sum of the
    entries' suprema, which is tight for the catalog kinds because every
    entry in a column depends on the same origin density and all are
    nondecreasing.  Otherwise the sums are sampled on ``grid``.
    """
    n = D.n
    if exact:
        lim = D.limits()
        sums = lim.sum(axis=0)
        worst = int(np.argmax(sums))
        return SubstochasticReport(
            holds=bool(np.all(sums < 1.0)),
            worst_column_sum=float(sums[worst]),
            worst_column=worst,
            witness_x=math.inf,
            column_sums=[float(s) for s in sums],
            method="saturation",
        )
    if grid is None:
        smax = max((fn.params.get("s", 0.0) for row in D.rows() for fn in row), default=0.0)
        grid = np.linspace(0.0, max(100.0, 10.0 * smax), 2001)
    xs = np.asarray(grid, dtype=float)
    best = np.full(n, -np.inf)
    where = np.zeros(n)
    for x in xs:
        for j in range(n):
            s = sum(D[i, j](x) for i in range(n))
            if s > best[j]:
                best[j] = s
                where[j] = x
    worst = int(np.argmax(best))
    return SubstochasticReport(
        holds=bool(np.all(best < 1.0)),
        worst_column_sum=float(best[worst]),
        worst_column=worst,
        witness_x=float(where[worst]),
        column_sums=[float(s) for s in best],
        method="sampled",
    )
