"""One- and two-parameter period scans over a scenario template."""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from ._parallel import parallel_map
from .analysis import PeriodClass, summarize_orbit
from .errors import ConfigurationError, SimulationDiverged
from .model import simulate
from .scenario import Axis, Scenario, SimSettings

# desk-scale defaults for two-parameter scans
DESK_RESOLUTION = 60
DESK_T = 20_000
DESK_BURN_IN = 19_000
DESK_WINDOW = 100


@dataclass(frozen=True)
class SweepSpec:
    template: Scenario
    axes: tuple[Axis, ...]
    sim: SimSettings

    def __post_init__(self):
        if not 1 <= len(self.axes) <= 2:
            raise ConfigurationError(f"a sweep needs one or two axes, got {len(self.axes)}")
        seen = []
        for a in self.axes:
            if a.resolution < 2:
                raise ConfigurationError(f"axis {a.label}: resolution must be >= 2, got {a.resolution}")
            for p in a.paths:
                p.validate(self.template)
                if p in seen:
                    raise ConfigurationError(f"parameter {p} appears on more than one axis")
                seen.append(p)
        if len(self.sim.x0) != self.template.n:
            raise ConfigurationError(f"x0 needs {self.template.n} components")
        if self.sim.window > self.sim.T - self.sim.effective_burn_in:
            raise ConfigurationError("window is longer than the post-burn-in part of the run")

    @classmethod
    def from_scenario(cls, sc: Scenario, **overrides) -> "SweepSpec":
        """Spec from a scenario's sweep plan; keyword overrides replace sim settings."""
        if sc.sweep is None:
            raise ConfigurationError(f"scenario {sc.name!r} has no sweep section")
        sim = sc.sweep.sim
        kw = {k: v for k, v in overrides.items() if v is not None}
        if kw:
            if "T" in kw and "burn_in" not in kw:
                # keep the desk convention: discard all but the last 5% (at least one window)
                window = kw.get("window", sim.window)
                kw["burn_in"] = max(0, kw["T"] - max(window, kw["T"] // 20))
            sim = SimSettings(**{**sim.to_dict(), "x0": tuple(sim.x0), **kw})
        return cls(sc, sc.sweep.axes, sim)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(a.resolution for a in self.axes)

    def to_dict(self) -> dict:
        return {"template": self.template.to_dict(),
                "axes": [a.to_dict() for a in self.axes],
                "sim": self.sim.to_dict()}


@dataclass
class SweepCell:
    index: tuple[int, ...]
    values: tuple[float, ...]
    period_class: PeriodClass
    tail_mean: tuple[float, ...] | None
    converged_to_zero: bool | None
    note: str = ""
    tail: np.ndarray | None = field(default=None, repr=False)

    def to_dict(self) -> dict:
        d = {
            "index": list(self.index),
            "values": list(self.values),
            "period_class": self.period_class.value,
            "tail_mean": None if self.tail_mean is None else list(self.tail_mean),
            "converged_to_zero": self.converged_to_zero,
        }
        if self.note:
            d["note"] = self.note
        return d


@dataclass
class SweepResult:
    """Cells in row-major order (the last axis varies fastest)."""

    spec: SweepSpec
    cells: list[SweepCell]
    elapsed: float = 0.0

    @property
    def shape(self) -> tuple[int, ...]:
        return self.spec.shape

    def classes(self) -> np.ndarray:
        """Period classes as a string array of the grid shape."""
        return np.array([c.period_class.value for c in self.cells], dtype=object).reshape(self.shape)

    def counts(self) -> dict:
        out: dict[str, int] = {}
        for c in self.cells:
            out[c.period_class.value] = out.get(c.period_class.value, 0) + 1
        return out

    def to_csv(self) -> str:
        n = self.spec.template.n
        head = ["axis1_value"] + (["axis2_value"] if len(self.shape) == 2 else [])
        head += ["period_class"] + [f"tail_mean_{i + 1}" for i in range(n)] + ["converged_to_zero"]
        lines = [",".join(head)]
        for c in self.cells:
            row = [format(v, ".17g") for v in c.values] + [c.period_class.value]
            if c.tail_mean is None:
                row += [""] * n + [""]
            else:
                row += [format(v, ".17g") for v in c.tail_mean] + [str(c.converged_to_zero).lower()]
            lines.append(",".join(row))
        return "\n".join(lines) + "\n"

    def tails_csv(self) -> str:
        """Long table of retained tail states: one row per cell and tail step."""
        n = self.spec.template.n
        head = ["axis1_value"] + (["axis2_value"] if len(self.shape) == 2 else [])
        lines = [",".join(head + ["k"] + [f"x_{i + 1}" for i in range(n)])]
        for c in self.cells:
            if c.tail is None:
                continue
            vals = [format(v, ".17g") for v in c.values]
            for k, row in enumerate(c.tail):
                lines.append(",".join(vals + [str(k)] + [format(float(v), ".17g") for v in row]))
        return "\n".join(lines) + "\n"

    def to_json(self, include_timing: bool = False) -> str:
        doc = {"spec": self.spec.to_dict(), "shape": list(self.shape),
               "cells": [c.to_dict() for c in self.cells]}
        if include_timing:
            doc["timing"] = {"elapsed_seconds": self.elapsed}
        return json.dumps(doc, indent=1)


def _run_cell(spec: SweepSpec, index, values, keep_tail: bool, backend) -> SweepCell:
    assign = {a.paths: v for a, v in zip(spec.axes, values)}
    try:
        model = spec.template.with_values(assign).model()
    except ConfigurationError as exc:
        return SweepCell(index, values, PeriodClass.INVALID, None, None, str(exc))
    sim = spec.sim
    try:
        tr = simulate(model, sim.x0, sim.T, sim.effective_burn_in, sim.window, backend=backend)
    except SimulationDiverged as exc:
        return SweepCell(index, values, PeriodClass.INVALID, None, None, str(exc))
    s = summarize_orbit(model, tr, sim.tol)
    mean = tuple(float(v) for v in tr.states.mean(axis=0))
    return SweepCell(index, values, s.period_class, mean, s.converged_to_zero, "",
                     tr.states if keep_tail else None)


def run_sweep(spec: SweepSpec, threads: int | None = None, keep_tails: bool = False,
              backend=None) -> SweepResult:
    """Evaluate every grid cell; cells run in parallel and merge by index."""
    grids = [a.grid() for a in spec.axes]
    tasks = [
        (idx, tuple(float(grids[k][i]) for k, i in enumerate(idx)))
        for idx in product(*(range(len(g)) for g in grids))
    ]
    t0 = time.perf_counter()
    cells = parallel_map(lambda t: _run_cell(spec, t[0], t[1], keep_tails, backend), tasks, threads)
    return SweepResult(spec, cells, time.perf_counter() - t0)


def sweep_1d(spec: SweepSpec, threads: int | None = None, keep_tails: bool = True,
             backend=None) -> SweepResult:
    if len(spec.axes) != 1:
        raise ConfigurationError(f"sweep_1d needs one axis, got {len(spec.axes)}")
    return run_sweep(spec, threads, keep_tails, backend)


def sweep_2d(spec: SweepSpec, threads: int | None = None, keep_tails: bool = False,
             backend=None) -> SweepResult:
    if len(spec.axes) != 2:
        raise ConfigurationError(f"sweep_2d needs two axes, got {len(spec.axes)}")
    return run_sweep(spec, threads, keep_tails, backend)
