"""Single-region Kolmogorov growth maps f(x) = g(x) x.

Catalog: Ricker, Hassell, generalised Beverton-Holt, logistic and the
Gaussian-hump map ``gamma * x * exp(-(x - 1)^2)``.  Every map carries
closed forms for g, f', the global bound m and its positive fixed points.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import _kernels as K
from .errors import ConfigurationError, DomainError


class MapKind(str, enum.Enum):
    RICKER = "ricker"
    HASSELL = "hassell"
    GBH = "generalised_beverton_holt"
    LOGISTIC = "logistic"
    GAMMA_GAUSS = "gamma_gauss"

    @classmethod
    def parse(cls, name: str) -> "MapKind":
        key = str(name).strip().lower().replace("-", "_").replace(" ", "_")
        key = _KIND_ALIASES.get(key, key)
        try:
            return cls(key)
        except ValueError:
            known = ", ".join(k.value for k in cls)
            raise ConfigurationError(f"unknown growth map kind {name!r} (known: {known})") from None


_KIND_ALIASES = {
    "gbh": "generalised_beverton_holt",
    "generalized_beverton_holt": "generalised_beverton_holt",
    "beverton_holt": "generalised_beverton_holt",
    "hassell1": "hassell",
    "gaussian": "gamma_gauss",
}

# name -> (default or None if required)
_PARAMS: dict[MapKind, dict[str, float | None]] = {
    MapKind.RICKER: {"a": None, "b": None},
    MapKind.HASSELL: {"a": None, "b": None, "c": 1.0},
    MapKind.GBH: {"a": None, "b": None, "c": 1.0},
    MapKind.LOGISTIC: {"a": None},
    MapKind.GAMMA_GAUSS: {"gamma": None},
}

_CODES = {
    MapKind.RICKER: K.RICKER,
    MapKind.HASSELL: K.HASSELL,
    MapKind.GBH: K.GBH,
    MapKind.LOGISTIC: K.LOGISTIC,
    MapKind.GAMMA_GAUSS: K.GAMMA_GAUSS,
}

GAMMA_GAUSS_ARGMAX = (1.0 + math.sqrt(3.0)) / 2.0


class Stability(str, enum.Enum):
    GAS = "GAS"
    LAS = "LAS"
    UNSTABLE = "unstable"
    MARGINAL = "marginal"


class RegionClass(str, enum.Enum):
    SOURCE = "source"
    SINK = "sink"
    INDETERMINATE = "indeterminate"


@dataclass(frozen=True)
class Equilibrium:
    """Fixed point of an isolated map with its linear multiplier f'(x*)."""

    x: float
    stability: Stability
    multiplier: float


@dataclass(frozen=True)
class GrowthMap:
    """A growth map from the catalog.

    Use the named constructors (:meth:`ricker`, :meth:`hassell`, ...) or
    ``GrowthMap(kind, params)`` with a mapping of named parameters.
    """

    kind: MapKind
    params: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        kind = MapKind.parse(self.kind) if not isinstance(self.kind, MapKind) else self.kind
        object.__setattr__(self, "kind", kind)
        spec = _PARAMS[kind]
        unknown = set(self.params) - set(spec)
        if unknown:
            raise ConfigurationError(
                f"{kind.value}: unknown parameter(s) {sorted(unknown)}; expected {sorted(spec)}")
        params = {}
        for name, default in spec.items():
            if name in self.params:
                try:
                    params[name] = float(self.params[name])
                except (TypeError, ValueError):
                    raise ConfigurationError(
                        f"{kind.value}: parameter {name!r} is not a number: {self.params[name]!r}") from None
            elif default is None:
                raise ConfigurationError(f"{kind.value}: missing parameter {name!r}")
            else:
                params[name] = default
        object.__setattr__(self, "params", params)
        self._validate()

    # -- constructors -----------------------------------------------------

    @classmethod
    def ricker(cls, a, b):
        return cls(MapKind.RICKER, {"a": a, "b": b})

    @classmethod
    def hassell(cls, a, b, c=1.0):
        return cls(MapKind.HASSELL, {"a": a, "b": b, "c": c})

    @classmethod
    def gbh(cls, a, b, c=1.0):
        return cls(MapKind.GBH, {"a": a, "b": b, "c": c})

    @classmethod
    def logistic(cls, a):
        return cls(MapKind.LOGISTIC, {"a": a})

    @classmethod
    def gamma_gauss(cls, gamma):
        return cls(MapKind.GAMMA_GAUSS, {"gamma": gamma})

    def _validate(self):
        p = self.params
        bad = []
        for name, v in p.items():
            if not math.isfinite(v):
                bad.append(f"{name} must be finite")
        if self.kind in (MapKind.RICKER, MapKind.HASSELL, MapKind.GBH):
            if not p["a"] > 0:
                bad.append("a must be > 0")
            if not p["b"] > 0:
                bad.append("b must be > 0")
            if "c" in p and not p["c"] >= 1:
                bad.append("c must be >= 1")
        elif self.kind is MapKind.LOGISTIC:
            # a = 0 would make g vanish identically
            if not 0 < p["a"] <= 4:
                bad.append("a must lie in (0, 4]")
        elif not p["gamma"] > 0:
            bad.append("gamma must be > 0")
        if bad:
            raise ConfigurationError(f"{self.kind.value}{dict(p)}: " + "; ".join(bad))

    # -- packed representation for the kernels -----------------------------

    @property
    def code(self) -> int:
        return _CODES[self.kind]

    @property
    def packed_params(self) -> tuple[float, float, float]:
        p = self.params
        if self.kind is MapKind.RICKER:
            return (p["a"], p["b"], 0.0)
        if self.kind in (MapKind.HASSELL, MapKind.GBH):
            return (p["a"], p["b"], p["c"])
        if self.kind is MapKind.LOGISTIC:
            return (p["a"], 0.0, 0.0)
        return (p["gamma"], 0.0, 0.0)

    @property
    def domain_max(self) -> float:
        return 1.0 if self.kind is MapKind.LOGISTIC else math.inf

    def _check(self, x):
        x = float(x)
        if not x >= 0:
            raise DomainError(f"{self.kind.value}: density must be >= 0, got {x!r}")
        if x > self.domain_max:
            raise DomainError(f"{self.kind.value}: density must be <= 1, got {x!r}")
        return x

    # -- evaluation -------------------------------------------------------

    def f(self, x: float) -> float:
        """Growth map value f(x)."""
        x = self._check(x)
        return K.growth(self.code, *self.packed_params, x)

    def g(self, x: float) -> float:
        """Per-capita rate g(x), regular at x = 0."""
        x = self._check(x)
        return K.per_capita(self.code, *self.packed_params, x)

    def g0(self) -> float:
        return self.g(0.0)

    def df(self, x: float) -> float:
        """Closed-form derivative f'(x)."""
        x = self._check(x)
        p = self.params
        if self.kind is MapKind.RICKER:
            a, b = p["a"], p["b"]
            return a * math.exp(-b * x) * (1.0 - b * x)
        if self.kind is MapKind.HASSELL:
            a, b, c = p["a"], p["b"], p["c"]
            return a * (1.0 + (1.0 - c) * b * x) / (1.0 + b * x) ** (c + 1.0)
        if self.kind is MapKind.GBH:
            a, b, c = p["a"], p["b"], p["c"]
            u = (x / b) ** c
            return a * (1.0 + (1.0 - c) * u) / (1.0 + u) ** 2
        if self.kind is MapKind.LOGISTIC:
            return p["a"] * (1.0 - 2.0 * x)
        gam = p["gamma"]
        return gam * math.exp(-(x - 1.0) ** 2) * (1.0 + 2.0 * x - 2.0 * x * x)

    def upper_bound(self) -> float:
        """Least upper bound m of f on its domain."""
        p = self.params
        if self.kind is MapKind.RICKER:
            return p["a"] / (p["b"] * math.e)
        if self.kind is MapKind.HASSELL:
            a, b, c = p["a"], p["b"], p["c"]
            if c == 1.0:
                return a / b  # supremum, approached as x -> inf
            return a * (c - 1.0) ** (c - 1.0) / (b * c ** c)
        if self.kind is MapKind.GBH:
            a, b, c = p["a"], p["b"], p["c"]
            if c == 1.0:
                return a * b
            return a * b * (c - 1.0) ** (1.0 - 1.0 / c) / c
        if self.kind is MapKind.LOGISTIC:
            return p["a"] / 4.0
        return self.f(GAMMA_GAUSS_ARGMAX)

    def argmax(self) -> float:
        """Location of the maximum of f (``inf`` when f only approaches its supremum)."""
        p = self.params
        if self.kind is MapKind.RICKER:
            return 1.0 / p["b"]
        if self.kind is MapKind.HASSELL:
            return math.inf if p["c"] == 1.0 else 1.0 / (p["b"] * (p["c"] - 1.0))
        if self.kind is MapKind.GBH:
            return math.inf if p["c"] == 1.0 else p["b"] * (p["c"] - 1.0) ** (-1.0 / p["c"])
        if self.kind is MapKind.LOGISTIC:
            return 0.5
        return GAMMA_GAUSS_ARGMAX

    def sup_g(self) -> float:
        """Supremum of g over the domain."""
        if self.kind is MapKind.GAMMA_GAUSS:
            return self.params["gamma"]
        # g is nonincreasing for the other catalog kinds
        return self.g0()

    def g_nonincreasing(self) -> bool:
        return self.kind is not MapKind.GAMMA_GAUSS

    # -- fixed points and classification ----------------------------------

    def positive_fixed_points(self) -> list[float]:
        p = self.params
        if self.kind is MapKind.RICKER:
            a, b = p["a"], p["b"]
            return [math.log(a) / b] if a > 1 else []
        if self.kind is MapKind.HASSELL:
            a, b, c = p["a"], p["b"], p["c"]
            return [(a ** (1.0 / c) - 1.0) / b] if a > 1 else []
        if self.kind is MapKind.GBH:
            a, b, c = p["a"], p["b"], p["c"]
            return [b * (a - 1.0) ** (1.0 / c)] if a > 1 else []
        if self.kind is MapKind.LOGISTIC:
            a = p["a"]
            return [1.0 - 1.0 / a] if a > 1 else []
        gam = p["gamma"]
        if gam <= 1:
            return []
        w = math.sqrt(math.log(gam))
        roots = [1.0 - w, 1.0 + w] if w < 1 else [1.0 + w]
        return [r for r in roots if r > 0]

    def classify(self) -> RegionClass:
        """Source if g(0) > 1, sink if g < 1 everywhere is certified in closed form."""
        g0 = self.g0()
        if g0 > 1:
            return RegionClass.SOURCE
        if self.sup_g() < 1:
            return RegionClass.SINK
        return RegionClass.INDETERMINATE

    def isolated_fixed_points(self) -> list[Equilibrium]:
        out = []
        g0 = self.g0()
        region = self.classify()
        if region is RegionClass.SINK:
            origin = Stability.GAS
        else:
            origin = _stability_from_multiplier(g0)
        out.append(Equilibrium(0.0, origin, g0))
        for xs in self.positive_fixed_points():
            mult = self.df(xs)
            if self.kind is MapKind.HASSELL and self.params["c"] == 1.0:
                stab = Stability.GAS
            else:
                stab = _stability_from_multiplier(mult)
            out.append(Equilibrium(xs, stab, mult))
        return out

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, **self.params}


def _stability_from_multiplier(m: float, eps: float = 1e-12) -> Stability:
    if abs(m) < 1 - eps:
        return Stability.LAS
    if abs(m) > 1 + eps:
        return Stability.UNSTABLE
    return Stability.MARGINAL


# -- free functions mirroring the method API --------------------------------

def eval_f(m: GrowthMap, x: float) -> float:
    return m.f(x)


def eval_g(m: GrowthMap, x: float) -> float:
    return m.g(x)


def derivative_f(m: GrowthMap, x: float) -> float:
    return m.df(x)


def upper_bound(m: GrowthMap) -> float:
    return m.upper_bound()


def isolated_fixed_points(m: GrowthMap) -> list[Equilibrium]:
    return m.isolated_fixed_points()


def classify_region(m: GrowthMap) -> RegionClass:
    return m.classify()


@dataclass
class MembershipReport:
    """Sampled check of the class conditions for one map.

    ``convex_intervals`` / ``concave_intervals`` are maximal runs of grid
    points where a central second difference of f is positive / negative.
    """

    positive_definite: bool
    per_capita_positive: bool
    bounded: bool
    monotone_increasing: bool
    bound: float
    max_sampled: float
    convex_intervals: list[tuple[float, float]]
    concave_intervals: list[tuple[float, float]]

    @property
    def member(self) -> bool:
        return self.positive_definite and self.per_capita_positive and self.bounded


def check_class_membership(m: GrowthMap, grid=None, h: float = 1e-4) -> MembershipReport:
    """Verify positivity, Kolmogorov form and boundedness of ``m`` on ``grid``."""
    if grid is None:
        top = 1.0 if m.kind is MapKind.LOGISTIC else 10.0 * max(1.0, min(m.argmax(), 1e3))
        grid = np.linspace(0.0, top, 2001)
    xs = np.asarray(grid, dtype=float)
    if xs.ndim != 1 or np.any(np.diff(xs) <= 0) or xs[0] < 0:
        raise ConfigurationError("grid must be a finite increasing sequence of densities >= 0")
    dmax = m.domain_max
    # f(1) = 0 for the logistic map: positivity is checked on the open interval
    xs = xs[xs < dmax] if math.isfinite(dmax) else xs
    fv = np.array([m.f(x) for x in xs])
    gv = np.array([m.g(x) for x in xs])
    bound = m.upper_bound()
    pos = xs > 0
    positive_definite = bool(fv[~pos].size == 0 or np.all(fv[~pos] == 0)) and bool(np.all(fv[pos] > 0))
    per_capita_positive = bool(np.all(gv > 0))
    bounded = bool(np.all(fv <= bound + 1e-12))
    dfv = np.array([m.df(x) for x in xs])
    monotone = bool(np.all(dfv > 0))

    convex, concave = [], []
    signs = []
    for x in xs:
        if x - h < 0 or x + h > dmax:
            signs.append((x, 0))
            continue
        d2 = (m.f(x + h) - 2.0 * m.f(x) + m.f(x - h)) / (h * h)
        signs.append((x, int(np.sign(d2))))
    for target, bucket in ((1, convex), (-1, concave)):
        start = prev = None
        for x, s in signs:
            if s == target:
                if start is None:
                    start = x
                prev = x
            elif start is not None:
                bucket.append((start, prev))
                start = None
        if start is not None:
            bucket.append((start, prev))
    return MembershipReport(
        positive_definite=positive_definite,
        per_capita_positive=per_capita_positive,
        bounded=bounded,
        monotone_increasing=monotone,
        bound=bound,
        max_sampled=float(fv.max()) if fv.size else 0.0,
        convex_intervals=convex,
        concave_intervals=concave,
    )
