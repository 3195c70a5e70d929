"""Scenario files: human-editable YAML descriptions of a model plus run settings.

Layout::

    name: fig2_A1
    description: free text
    regions:                      # one mapping per region
      - {kind: ricker, a: 50, b: 0.04}
      - {kind: hassell, a: 0.4, b: 0.01}
    dispersal:                    # n rows of n entries; entry (i, j) moves j -> i
      - - {kind: richards, r: 0.2, k: 0.5, s: 10}
        - {kind: richards, r: 0.6, k: 0.5, s: 3}
      - - {kind: richards, r: 0.7, k: 0.5, s: 12}
        - {kind: richards, r: 0.3, k: 0.5, s: 6}
    defaults: {x0: [92, 103], T: 100000, burn_in: 99000, window: 64, tol: 1.0e-6}
    sweep:                        # optional
      axes:
        - {path: regions.1.a, lower: 1, upper: 300, resolution: 60,
           include_lower: false, include_upper: true}
      x0: [131, 19]
      T: 20000
      burn_in: 19000
      window: 100
      tol: 1.0e-6
    compare:                      # optional
      path: [dispersal.1.2.r, dispersal.2.1.r]
      lower: 0
      upper: 0.5
      resolution: 50
      include_lower: false
      include_upper: false
      x0: [55, 54]
      T: 10000

Parameter paths are dotted and 1-based: ``regions.<i>.<param>`` or
``dispersal.<i>.<j>.<param>``.  A list of paths ties several scalars to one
value.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import yaml

from .dispersal import DispersalFunction, DispersalMatrix
from .errors import ConfigurationError
from .growth_maps import GrowthMap
from .model import MetapopModel, build_model, default_burn_in

DEFAULT_T = 100_000
DEFAULT_WINDOW = 64
DEFAULT_TOL = 1e-6


class _LineDict(dict):
    line: int = 0
    key_lines: dict = {}


class _Loader(yaml.SafeLoader):
    """SafeLoader that remembers the source line of every mapping."""

    def construct_mapping(self, node, deep=False):
        data = _LineDict(super().construct_mapping(node, deep=True))
        data.line = node.start_mark.line + 1
        data.key_lines = {k.value: k.start_mark.line + 1 for k, _ in node.value
                          if isinstance(k, yaml.ScalarNode)}
        return data


_Loader.add_constructor(
    yaml.resolver.BaseResolver.DEFAULT_MAPPING_TAG,
    lambda loader, node: loader.construct_mapping(node))


def _where(obj, field_name: str) -> str:
    key = field_name.rsplit(".", 1)[-1].split("[")[0]
    line = getattr(obj, "key_lines", {}).get(key) or getattr(obj, "line", 0)
    return f"line {line}: {field_name}" if line else field_name


def _err(obj, field_name: str, msg: str) -> ConfigurationError:
    return ConfigurationError(f"{_where(obj, field_name)}: {msg}")


def _number(obj, field_name, value) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise _err(obj, field_name, f"expected a number, got {value!r}")
    return float(value)


def _integer(obj, field_name, value) -> int:
    if isinstance(value, bool):
        raise _err(obj, field_name, f"expected an integer, got {value!r}")
    if isinstance(value, float) and value.is_integer():
        value = int(value)
    if not isinstance(value, int):
        raise _err(obj, field_name, f"expected an integer, got {value!r}")
    return value


def _vector(obj, field_name, value, n) -> tuple[float, ...]:
    if not isinstance(value, (list, tuple)):
        raise _err(obj, field_name, f"expected a list of {n} numbers, got {value!r}")
    if len(value) != n:
        raise _err(obj, field_name, f"expected {n} components, got {len(value)}")
    out = tuple(_number(obj, f"{field_name}[{i + 1}]", v) for i, v in enumerate(value))
    if any(v < 0 or not math.isfinite(v) for v in out):
        raise _err(obj, field_name, f"components must be finite and >= 0, got {list(out)}")
    return out


def _mapping(obj, field_name, value) -> dict:
    if not isinstance(value, dict):
        raise _err(obj, field_name, f"expected a mapping, got {type(value).__name__}")
    return value


def _check_keys(obj: dict, field_name: str, allowed: set, required: set = frozenset()):
    unknown = set(obj) - allowed
    if unknown:
        raise _err(obj, field_name, f"unknown key(s) {sorted(unknown)}")
    missing = set(required) - set(obj)
    if missing:
        raise _err(obj, field_name, f"missing key(s) {sorted(missing)}")


# ---------------------------------------------------------------------------
# parameter paths


@dataclass(frozen=True)
class ParamPath:
    """A single scalar inside a scenario: a region or a dispersal parameter."""

    target: str           # "regions" or "dispersal"
    index: tuple          # 0-based (i,) or (i, j)
    param: str

    @classmethod
    def parse(cls, text: str) -> "ParamPath":
        parts = str(text).strip().split(".")
        try:
            shape = {"regions": 3, "dispersal": 4}.get(parts[0])
            if shape == len(parts) and parts[-1]:
                index = tuple(int(k) - 1 for k in parts[1:-1])
                if min(index) >= 0:
                    return cls(parts[0], index, parts[-1])
        except ValueError:
            pass
        raise ConfigurationError(
            f"invalid parameter path {text!r}; expected regions.<i>.<param> or "
            f"dispersal.<i>.<j>.<param> (1-based)")

    def __str__(self) -> str:
        return ".".join([self.target, *(str(k + 1) for k in self.index), self.param])

    def get(self, sc: "Scenario") -> float:
        self.validate(sc)
        if self.target == "regions":
            return sc.regions[self.index[0]].params[self.param]
        i, j = self.index
        return sc.dispersal[i, j].params[self.param]

    def validate(self, sc: "Scenario") -> None:
        n = sc.n
        if any(not 0 <= k < n for k in self.index):
            raise ConfigurationError(f"parameter path {self} is out of range for {n} regions")
        if self.target == "regions":
            params = sc.regions[self.index[0]].params
        else:
            params = sc.dispersal[self.index].params
        if self.param not in params:
            raise ConfigurationError(
                f"parameter path {self}: no parameter {self.param!r} (has {sorted(params)})")


def parse_paths(value) -> tuple[ParamPath, ...]:
    items = value if isinstance(value, (list, tuple)) else [value]
    if not items:
        raise ConfigurationError("empty parameter path list")
    paths = tuple(ParamPath.parse(p) for p in items)
    if len(set(paths)) != len(paths):
        raise ConfigurationError(f"duplicate parameter paths in {[str(p) for p in paths]}")
    return paths


def _paths_out(paths: Sequence[ParamPath]):
    return str(paths[0]) if len(paths) == 1 else [str(p) for p in paths]


# ---------------------------------------------------------------------------
# grids


@dataclass(frozen=True)
class Axis:
    """A scanned parameter (or several tied parameters) with its grid rule.

    Grid points for ``resolution`` = k:

    * closed ``[lo, hi]``: ``k`` evenly spaced points including both ends;
    * ``(lo, hi]``: ``lo + (hi - lo) * m / k`` for m = 1..k;
    * ``[lo, hi)``: ``lo + (hi - lo) * m / k`` for m = 0..k-1;
    * open ``(lo, hi)``: cell centres ``lo + (hi - lo) * (m + 0.5) / k``.
    """

    paths: tuple[ParamPath, ...]
    lower: float
    upper: float
    resolution: int
    include_lower: bool = True
    include_upper: bool = True
    scale: str = "linear"

    def __post_init__(self):
        if self.resolution < 1:
            raise ConfigurationError(f"resolution must be >= 1, got {self.resolution}")
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise ConfigurationError("axis bounds must be finite")
        if self.lower > self.upper:
            raise ConfigurationError(f"axis lower {self.lower} exceeds upper {self.upper}")
        if self.scale != "linear":
            raise ConfigurationError(f"unsupported axis scale {self.scale!r} (only 'linear')")

    @property
    def label(self) -> str:
        return str(self.paths[0])

    def grid(self) -> np.ndarray:
        lo, hi, k = self.lower, self.upper, self.resolution
        m = np.arange(k, dtype=float)
        if self.include_lower and self.include_upper:
            return np.linspace(lo, hi, k)
        if self.include_upper:
            return lo + (hi - lo) * (m + 1) / k
        if self.include_lower:
            return lo + (hi - lo) * m / k
        return lo + (hi - lo) * (m + 0.5) / k

    @classmethod
    def from_dict(cls, d, field_name="axis") -> "Axis":
        d = _mapping(None, field_name, d)
        _check_keys(d, field_name,
                    {"path", "lower", "upper", "resolution", "include_lower", "include_upper", "scale"},
                    {"path", "lower", "upper", "resolution"})
        try:
            paths = parse_paths(d["path"])
        except ConfigurationError as exc:
            raise _err(d, f"{field_name}.path", str(exc)) from None
        try:
            return cls(
                paths,
                _number(d, f"{field_name}.lower", d["lower"]),
                _number(d, f"{field_name}.upper", d["upper"]),
                _integer(d, f"{field_name}.resolution", d["resolution"]),
                bool(d.get("include_lower", True)),
                bool(d.get("include_upper", True)),
                str(d.get("scale", "linear")),
            )
        except ConfigurationError as exc:
            if "line " in str(exc):
                raise
            raise _err(d, field_name, str(exc)) from None

    def to_dict(self) -> dict:
        return {
            "path": _paths_out(self.paths),
            "lower": self.lower,
            "upper": self.upper,
            "resolution": self.resolution,
            "include_lower": self.include_lower,
            "include_upper": self.include_upper,
            "scale": self.scale,
        }


# ---------------------------------------------------------------------------
# run settings


@dataclass(frozen=True)
class SimSettings:
    """Initial state and simulation lengths shared by several commands."""

    x0: tuple[float, ...]
    T: int = DEFAULT_T
    burn_in: int | None = None
    window: int = DEFAULT_WINDOW
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        if self.T < 1:
            raise ConfigurationError(f"T must be >= 1, got {self.T}")
        if self.burn_in is not None and not 0 <= self.burn_in < self.T:
            raise ConfigurationError(f"need 0 <= burn_in < T, got burn_in={self.burn_in}, T={self.T}")
        if self.window < 1:
            raise ConfigurationError(f"window must be >= 1, got {self.window}")
        if not self.tol > 0:
            raise ConfigurationError(f"tol must be > 0, got {self.tol}")

    @property
    def effective_burn_in(self) -> int:
        if self.burn_in is not None:
            return self.burn_in
        return default_burn_in(self.T, self.window)

    @classmethod
    def from_dict(cls, d, n, field_name, base: "SimSettings | None" = None) -> "SimSettings":
        d = _mapping(None, field_name, d)
        keys = {"x0", "T", "burn_in", "window", "tol"}
        _check_keys(d, field_name, keys, set() if base else {"x0"})
        kw = {}
        if "x0" in d:
            kw["x0"] = _vector(d, f"{field_name}.x0", d["x0"], n)
        for k in ("T", "window"):
            if k in d:
                kw[k] = _integer(d, f"{field_name}.{k}", d[k])
        if "burn_in" in d:
            kw["burn_in"] = None if d["burn_in"] is None else _integer(d, f"{field_name}.burn_in", d["burn_in"])
        if "tol" in d:
            kw["tol"] = _number(d, f"{field_name}.tol", d["tol"])
        try:
            if base is not None:
                if "T" in kw and "burn_in" not in kw:
                    kw["burn_in"] = None
                return replace(base, **kw)
            return cls(**kw)
        except ConfigurationError as exc:
            raise _err(d, field_name, str(exc)) from None

    def to_dict(self) -> dict:
        return {"x0": list(self.x0), "T": self.T, "burn_in": self.burn_in,
                "window": self.window, "tol": self.tol}


@dataclass(frozen=True)
class SweepPlan:
    axes: tuple[Axis, ...]
    sim: SimSettings

    def to_dict(self) -> dict:
        return {"axes": [a.to_dict() for a in self.axes], **self.sim.to_dict()}


@dataclass(frozen=True)
class ComparePlan:
    axis: Axis
    sim: SimSettings

    def to_dict(self) -> dict:
        d = self.axis.to_dict()
        del d["scale"]
        return {**d, "x0": list(self.sim.x0), "T": self.sim.T}


# ---------------------------------------------------------------------------
# the scenario


@dataclass(frozen=True)
class Scenario:
    name: str
    regions: tuple[GrowthMap, ...]
    dispersal: DispersalMatrix
    defaults: SimSettings
    description: str = ""
    sweep: SweepPlan | None = None
    compare: ComparePlan | None = None
    _model: MetapopModel | None = field(default=None, repr=False, compare=False)

    @property
    def n(self) -> int:
        return len(self.regions)

    def model(self) -> MetapopModel:
        if self._model is None:
            object.__setattr__(self, "_model", build_model(self.regions, self.dispersal))
        return self._model

    def get(self, path) -> float:
        p = path if isinstance(path, ParamPath) else ParamPath.parse(path)
        return p.get(self)

    def with_values(self, assignments) -> "Scenario":
        """Copy with parameters replaced; ``assignments`` maps path(s) to values.

        The copy is not validated against the dispersal cost condition until
        :meth:`model` is called.
        """
        regions = [dict(m.params) for m in self.regions]
        disp = [[dict(fn.params) for fn in row] for row in self.dispersal.rows()]
        items = assignments.items() if hasattr(assignments, "items") else assignments
        for path, value in items:
            paths = path if isinstance(path, (tuple, list)) else (path,)
            for p in paths:
                p = p if isinstance(p, ParamPath) else ParamPath.parse(p)
                p.validate(self)
                if p.target == "regions":
                    regions[p.index[0]][p.param] = float(value)
                else:
                    i, j = p.index
                    disp[i][j][p.param] = float(value)
        maps = tuple(GrowthMap(m.kind, params) for m, params in zip(self.regions, regions))
        D = DispersalMatrix([
            [DispersalFunction(fn.kind, params) for fn, params in zip(row, prow)]
            for row, prow in zip(self.dispersal.rows(), disp)
        ])
        return replace(self, regions=maps, dispersal=D, _model=None)

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"name": self.name}
        if self.description:
            d["description"] = self.description
        d["regions"] = [m.to_dict() for m in self.regions]
        d["dispersal"] = self.dispersal.to_list()
        d["defaults"] = self.defaults.to_dict()
        if self.sweep is not None:
            d["sweep"] = self.sweep.to_dict()
        if self.compare is not None:
            d["compare"] = self.compare.to_dict()
        return d

    def dumps(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False, default_flow_style=None)


def _parse_region(d, i) -> GrowthMap:
    name = f"regions[{i + 1}]"
    d = _mapping(None, name, d)
    if "kind" not in d:
        raise _err(d, name, "missing key 'kind'")
    params = {k: v for k, v in d.items() if k != "kind"}
    for k, v in params.items():
        _number(d, f"{name}.{k}", v)
    try:
        return GrowthMap(d["kind"], params)
    except ConfigurationError as exc:
        raise _err(d, name, str(exc)) from None


def _parse_dispersal(rows, n) -> DispersalMatrix:
    if not isinstance(rows, list) or len(rows) != n:
        raise ConfigurationError(f"dispersal: expected {n} rows for {n} regions, got "
                                 f"{len(rows) if isinstance(rows, list) else type(rows).__name__}")
    out = []
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != n:
            raise ConfigurationError(f"dispersal row {i + 1}: expected {n} entries")
        cells = []
        for j, d in enumerate(row):
            name = f"dispersal[{i + 1}][{j + 1}]"
            d = _mapping(None, name, d)
            if "kind" not in d:
                raise _err(d, name, "missing key 'kind'")
            params = {k: v for k, v in d.items() if k != "kind"}
            for k, v in params.items():
                _number(d, f"{name}.{k}", v)
            try:
                cells.append(DispersalFunction(d["kind"], params))
            except ConfigurationError as exc:
                raise _err(d, name, str(exc)) from None
        out.append(cells)
    return DispersalMatrix(out)


def scenario_from_dict(doc) -> Scenario:
    doc = _mapping(None, "scenario", doc)
    _check_keys(doc, "scenario",
                {"name", "description", "regions", "dispersal", "defaults", "sweep", "compare"},
                {"name", "regions", "dispersal", "defaults"})
    regions_doc = doc["regions"]
    if not isinstance(regions_doc, list) or not regions_doc:
        raise _err(doc, "regions", "need a non-empty list of regions")
    regions = tuple(_parse_region(d, i) for i, d in enumerate(regions_doc))
    n = len(regions)
    dispersal = _parse_dispersal(doc["dispersal"], n)
    defaults = SimSettings.from_dict(doc["defaults"], n, "defaults")
    sweep = None
    if doc.get("sweep") is not None:
        s = _mapping(doc, "sweep", doc["sweep"])
        _check_keys(s, "sweep", {"axes", "x0", "T", "burn_in", "window", "tol"}, {"axes"})
        axes_doc = s["axes"]
        if not isinstance(axes_doc, list) or not 1 <= len(axes_doc) <= 2:
            raise _err(s, "sweep.axes", "need one or two axes")
        axes = tuple(Axis.from_dict(a, f"sweep.axes[{k + 1}]") for k, a in enumerate(axes_doc))
        sim = SimSettings.from_dict({k: v for k, v in s.items() if k != "axes"}, n, "sweep", defaults)
        sweep = SweepPlan(axes, sim)
    compare = None
    if doc.get("compare") is not None:
        c = _mapping(doc, "compare", doc["compare"])
        axis_keys = {"path", "lower", "upper", "resolution", "include_lower", "include_upper"}
        _check_keys(c, "compare", axis_keys | {"x0", "T"}, {"path", "lower", "upper", "resolution"})
        axis = Axis.from_dict(_LineDict({k: v for k, v in c.items() if k in axis_keys}), "compare")
        sim = SimSettings.from_dict({k: v for k, v in c.items() if k in ("x0", "T")}, n,
                                    "compare", defaults)
        compare = ComparePlan(axis, sim)
    sc = Scenario(str(doc["name"]), regions, dispersal, defaults,
                  str(doc.get("description") or ""), sweep, compare)
    for plan_axes in ([*sweep.axes] if sweep else []) + ([compare.axis] if compare else []):
        for p in plan_axes.paths:
            p.validate(sc)
    if sweep is not None:
        all_paths = [p for a in sweep.axes for p in a.paths]
        if len(set(all_paths)) != len(all_paths):
            raise ConfigurationError("sweep axes must address distinct parameters")
    try:
        sc.model()
    except ConfigurationError as exc:
        raise ConfigurationError(f"{_where(doc, 'dispersal')}: {exc}") from None
    return sc


def parse_scenario(text: str) -> Scenario:
    """Parse YAML text into a validated :class:`Scenario`."""
    try:
        doc = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"scenario is not valid YAML: {exc}") from None
    return scenario_from_dict(doc)


# ---------------------------------------------------------------------------
# bundled files


def _bundled_dir():
    return resources.files("ddmetapop") / "scenarios"


def list_bundled() -> list[str]:
    return sorted(p.name[:-5] for p in _bundled_dir().iterdir() if p.name.endswith(".yaml"))


def resolve_bundled(name: str) -> str:
    """Exact bundled name, or the unique one containing ``name`` as a ``_`` token."""
    names = list_bundled()
    if name in names:
        return name
    hits = [n for n in names if name in n.split("_") or n.startswith(name + "_")]
    if len(hits) == 1:
        return hits[0]
    if hits:
        raise ConfigurationError(f"scenario name {name!r} is ambiguous: {hits}")
    raise ConfigurationError(f"no bundled scenario {name!r}; available: {', '.join(names)}")


def load_bundled(name: str) -> Scenario:
    name = resolve_bundled(name)
    return parse_scenario((_bundled_dir() / f"{name}.yaml").read_text(encoding="utf-8"))


def load_scenario(ref: str) -> Scenario:
    """Load a scenario from a file path, falling back to the bundled set."""
    p = Path(ref)
    if p.suffix in (".yaml", ".yml") or p.exists():
        if not p.exists():
            raise ConfigurationError(f"scenario file {ref!r} does not exist")
        return parse_scenario(p.read_text(encoding="utf-8"))
    return load_bundled(ref)
