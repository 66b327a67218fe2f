"""Experiment configuration: YAML files validated against a strict schema.

A config has three sections. ``model`` defines either a symbolic suspension
(transition matrix plus word-keyed tables) or an interval map (affine
branches plus per-interval polynomials). ``run`` holds one optional block
per subcommand, plus ``seed`` and ``workers``. ``output`` names the output
directory.
"""

from __future__ import annotations

import hashlib
import json
from importlib import resources
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import ConfigError


class Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


# ---------------------------------------------------------------------------
# model section


class Table(Strict):
    """Word-keyed values of a locally constant function."""
    depth: int = Field(1, ge=1, le=8)
    values: dict[str, float]


class ObservableTerm(Strict):
    """One fibre-degree coefficient ``c_j`` of a flow observable."""
    degree: int = Field(0, ge=0, le=6)
    depth: int = Field(1, ge=1, le=8)
    values: dict[str, float]


class SymbolicModel(Strict):
    kind: Literal["symbolic"] = "symbolic"
    name: str = ""
    transition: list[list[int]]
    r: Table
    psi: Optional[Table] = None
    observable: list[ObservableTerm] = Field(default_factory=list)


class MapSpec(Strict):
    endpoints: list[float]
    slopes: list[float]
    offsets: list[float]
    incidence: Optional[list[list[int]]] = None


class IntervalModel(Strict):
    kind: Literal["interval"]
    name: str = ""
    map: MapSpec
    roof: list[list[float]]
    psi: Optional[list[list[float]]] = None
    observable: Optional[list[list[float]]] = None
    order: int = Field(32, ge=8, le=256)


Model = Annotated[Union[SymbolicModel, IntervalModel], Field(discriminator="kind")]


# ---------------------------------------------------------------------------
# run section


class GibbsRun(Strict):
    word_length: int = Field(2, ge=1, le=8)


class OrbitsRun(Strict):
    p_max: Optional[int] = Field(None, ge=1)
    length_budget: Optional[float] = Field(None, gt=0)
    max_orbits: int = Field(2_000_000, ge=1)

    @model_validator(mode="after")
    def _one_budget(self):
        if (self.p_max is None) == (self.length_budget is None):
            raise ValueError("give exactly one of p_max and length_budget")
        return self


class GrowthRun(Strict):
    sigma: float = 1.5
    t: list[float]


class ZetaScanRun(Strict):
    sigma: tuple[float, float] = (0.9, 1.2)
    t: tuple[float, float] = (0.0, 40.0)
    grid_steps: int = Field(16, ge=8)
    growth: Optional[GrowthRun] = None
    count_zeros: bool = True


class Grid(Strict):
    """Either an explicit list or ``start``/``stop``/``num`` (inclusive)."""
    values: Optional[list[float]] = None
    start: Optional[float] = None
    stop: Optional[float] = None
    num: Optional[int] = Field(None, ge=2)

    @model_validator(mode="after")
    def _shape(self):
        if self.values is None and None in (self.start, self.stop, self.num):
            raise ValueError("grid needs values or start/stop/num")
        return self

    def array(self) -> np.ndarray:
        if self.values is not None:
            return np.asarray(self.values, dtype=float)
        return np.linspace(self.start, self.stop, self.num)


class EquidistRun(Strict):
    T: Grid
    mode: Literal["prime_only", "with_repetitions"] = "prime_only"
    model: Literal["exponential", "polynomial"] = "exponential"
    max_instances: int = Field(5_000_000, ge=1)


class WindowRun(Strict):
    T: Grid
    eps: float = Field(..., gt=0)
    mode: Literal["prime_only", "with_repetitions"] = "prime_only"
    max_instances: int = Field(5_000_000, ge=1)


class PerronRun(Strict):
    T: list[float]
    d: Optional[float] = None
    R: float = Field(2000.0, gt=0)
    shifted: bool = False
    sigma_left: Optional[float] = None
    scan_steps: int = Field(16, ge=8)


class PsiEllRun(Strict):
    T: list[float]
    ell: int = Field(2, ge=1)
    d: Optional[float] = None
    R: float = Field(500.0, gt=0)
    shifted: bool = False
    sigma_left: Optional[float] = None
    eps_exp: Optional[float] = None
    rho_reg: Optional[float] = None


class DolgopyatRun(Strict):
    sigma: float = 1.0
    t: float = 50.0
    n_max: int = Field(20, ge=3)
    trials: int = Field(32, ge=32)


class TelescopeRun(Strict):
    n: list[int] = Field(default_factory=lambda: list(range(1, 11)))
    s: tuple[float, float] = (1.0, 10.0)
    rule: Literal["fixed_point", "midpoint"] = "midpoint"


class RunSection(Strict):
    seed: Optional[int] = None
    workers: int = Field(1, ge=1)
    pressure: dict = Field(default_factory=dict)
    gibbs: GibbsRun = Field(default_factory=GibbsRun)
    normalize: dict = Field(default_factory=dict)
    orbits: Optional[OrbitsRun] = None
    zeta_scan: ZetaScanRun = Field(default_factory=ZetaScanRun)
    residue: dict = Field(default_factory=dict)
    equidist: Optional[EquidistRun] = None
    window: Optional[WindowRun] = None
    perron: Optional[PerronRun] = None
    psi_ell: Optional[PsiEllRun] = None
    dolgopyat_probe: DolgopyatRun = Field(default_factory=DolgopyatRun)
    telescope: TelescopeRun = Field(default_factory=TelescopeRun)

    @model_validator(mode="after")
    def _empty_blocks(self):
        for name in ("pressure", "normalize", "residue"):
            if getattr(self, name):
                raise ValueError(f"run.{name} takes no parameters")
        return self


class OutputSection(Strict):
    dir: str = "out"


class ExperimentConfig(Strict):
    model: Model
    run: RunSection = Field(default_factory=RunSection)
    output: OutputSection = Field(default_factory=OutputSection)

    def canonical_json(self, exclude_workers: bool = True) -> str:
        data = self.model_dump(mode="json")
        if exclude_workers:
            data["run"].pop("workers", None)
        data.pop("output", None)
        return json.dumps(data, sort_keys=True, separators=(",", ":"))

    def config_hash(self) -> str:
        """sha256 of the canonical config (worker count and output path excluded)."""
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()


# ---------------------------------------------------------------------------
# loading


BUNDLED = ("full2shift", "golden_mean", "nonlattice", "doubling", "doubling_nonlattice")


def _format_errors(exc: ValidationError) -> str:
    lines = []
    for err in exc.errors():
        path = ".".join(str(p) for p in err["loc"])
        lines.append(f"{path}: {err['msg']}")
    return "; ".join(lines)


def parse_config(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from None


def load_config(source: str | Path) -> ExperimentConfig:
    """Load a YAML config from a path or a bundled name such as ``full2shift``."""
    path = Path(source)
    if path.exists():
        text = path.read_text()
    elif str(source) in BUNDLED:
        text = resources.files("zetaflow").joinpath("configs", f"{source}.yaml").read_text()
    else:
        raise ConfigError(f"no config file or bundled config named {source!r}")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"YAML parse error: {exc}") from None
    return parse_config(data)


# ---------------------------------------------------------------------------
# building model objects


def build_symbolic(model: SymbolicModel, lattice_p_max: int = 8):
    """(system, K) for a symbolic model; K is None without an observable."""
    from .suspension import FlowObservable, SuspensionSystem
    from .symbolic import CylinderFunction, Subshift

    shift = Subshift(model.transition)
    r = CylinderFunction.from_values(shift, model.r.depth, model.r.values, positive=True)
    psi = (None if model.psi is None
           else CylinderFunction.from_values(shift, model.psi.depth, model.psi.values))
    system = SuspensionSystem.build(shift, r, psi, lattice_p_max=lattice_p_max)
    K = None
    if model.observable:
        deg = max(t.degree for t in model.observable)
        zero = CylinderFunction.constant(shift, 0.0)
        coeffs = [zero] * (deg + 1)
        for t in model.observable:
            coeffs[t.degree] = coeffs[t.degree] + CylinderFunction.from_values(
                shift, t.depth, t.values)
        K = FlowObservable(tuple(coeffs))
    return system, K


def build_interval(model: IntervalModel):
    """(system, k) for an interval model; k defaults to the constant 1."""
    from .interval import GridFunction, IntervalSystem, PiecewisePolynomial, build_map

    fmap = build_map(model.map.model_dump())
    if model.map.incidence is not None:
        if np.asarray(model.map.incidence).tolist() != fmap.incidence.tolist():
            raise ConfigError(f"model.map.incidence does not match the branch images "
                              f"{fmap.incidence.tolist()}")
    system = IntervalSystem.build(fmap, model.roof, model.psi, model.order)
    if model.observable is None:
        k = GridFunction.constant(fmap, 1.0, model.order)
    else:
        poly = PiecewisePolynomial(fmap, model.observable)
        k = GridFunction.from_function(fmap, lambda x, i: poly.on(i, x), model.order,
                                       per_interval=True)
    return system, k
