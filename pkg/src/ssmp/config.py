"""Run configuration: schema, loading and conversion to domain objects.

The document is a JSON-compatible tree (YAML or JSON on disk).  Errors are
reported with the dotted path of the offending entry.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Annotated, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .jump_sde import SdeConfig
from .measures import (
    ConfigurationError,
    ExponentialDensity,
    JumpMeasureSpec,
    LevyTriplet,
    Quintuple,
    TruncatedStableDensity,
    UniformDensity,
)

MODES = ("simulate-levy", "simulate-lamperti", "simulate-kiu", "simulate-sde", "simulate-approx",
         "simulate-abs", "validate")
TESTS = ("cramer_two_routes", "symmetry", "scaling", "moment_linearity", "cross_construction",
         "generator_residual", "occupation")


class ConfigError(ValueError):
    """Configuration problem; the message starts with the offending path."""


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class ExponentialSpec(_Strict):
    family: Literal["exponential"]
    c: float
    beta: float


class StableSpec(_Strict):
    family: Literal["truncated_stable"]
    c: float
    alpha: float


class UniformSpec(_Strict):
    family: Literal["uniform"]
    c: float
    lo: float
    hi: float


DensitySpec = Annotated[Union[ExponentialSpec, StableSpec, UniformSpec], Field(discriminator="family")]


class MeasureSpec(_Strict):
    atoms: list[tuple[float, float]] = []
    densities: list[DensitySpec] = []
    small_jump_cutoff: float = 0.0


class QuintupleSpec(_Strict):
    a: Optional[float] = None
    psi_at_1: Optional[float] = None
    sigma2: float = 0.0
    q: float = 0.0
    pi: MeasureSpec = MeasureSpec()
    v: MeasureSpec = MeasureSpec()

    @model_validator(mode="after")
    def _one_drift(self):
        if (self.a is None) == (self.psi_at_1 is None):
            raise ValueError("give exactly one of 'a' and 'psi_at_1'")
        return self


class SdeSpec(_Strict):
    dt: float = 1e-3
    horizon: float = 1.0
    n_paths: int = 100
    seed: int = 0
    cutoff: float = 1e-4
    m: int = 256
    rate_cap: float = 1e4
    skew: float = 0.5
    block_size: int = 10_000
    abs_scheme: Literal["exact", "euler"] = "exact"


class BumpSpec(_Strict):
    center: float
    width: float


class ValidateSpec(_Strict):
    tests: list[Literal[TESTS]] = list(TESTS)
    t_points: Optional[list[float]] = None
    scaling_c: list[float] = [2.0]
    bumps: list[BumpSpec] = [BumpSpec(center=0.75, width=0.5), BumpSpec(center=1.25, width=0.5),
                             BumpSpec(center=2.0, width=0.5)]
    occupation_ms: list[int] = [4, 16, 64, 256]
    occupation_band: float = 1e-6
    occupation_threshold: float = 0.01


class OutputSpec(_Strict):
    formats: list[Literal["csv", "json"]] = ["csv", "json"]
    record_times: Optional[list[float]] = None


class RunSpec(_Strict):
    mode: Optional[Literal[MODES]] = None
    quintuple: QuintupleSpec
    quintuple_minus: Optional[QuintupleSpec] = None
    z: float = 1.0
    sde: SdeSpec = SdeSpec()
    resolution: float = 1.0
    output: OutputSpec = OutputSpec()
    validate_: ValidateSpec = Field(default=ValidateSpec(), alias="validate")

    model_config = ConfigDict(extra="forbid", populate_by_name=True)


def _loc(loc) -> str:
    parts = []
    for p in loc:
        if isinstance(p, int):
            parts.append(str(p))
        elif p in ("exponential", "truncated_stable", "uniform", "function-after[_one_drift(), QuintupleSpec]"):
            continue
        else:
            parts.append(str(p))
    return ".".join(parts) or "<root>"


def parse(doc: dict) -> RunSpec:
    try:
        return RunSpec.model_validate(doc)
    except ValidationError as e:
        msgs = [f"{_loc(err['loc'])}: {err['msg']}" for err in e.errors()]
        raise ConfigError("; ".join(msgs)) from None


def load(path: str | Path) -> tuple[dict, RunSpec]:
    text = Path(path).read_text()
    try:
        doc = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"<root>: cannot parse {path}: {e}") from None
    if not isinstance(doc, dict):
        raise ConfigError("<root>: the configuration must be a mapping")
    return doc, parse(doc)


def _measure(spec: MeasureSpec, where: str) -> JumpMeasureSpec:
    dens = []
    for i, d in enumerate(spec.densities):
        try:
            if d.family == "exponential":
                dens.append(ExponentialDensity(d.c, d.beta))
            elif d.family == "truncated_stable":
                dens.append(TruncatedStableDensity(d.c, d.alpha))
            else:
                dens.append(UniformDensity(d.c, d.lo, d.hi))
        except ConfigurationError as e:
            raise ConfigError(f"{where}.densities.{i}: {e}") from None
    try:
        return JumpMeasureSpec(tuple(spec.atoms), tuple(dens), spec.small_jump_cutoff)
    except ConfigurationError as e:
        raise ConfigError(f"{where}: {e}") from None


def build_quintuple(spec: QuintupleSpec, where: str = "quintuple") -> Quintuple:
    pi = _measure(spec.pi, f"{where}.pi")
    v = _measure(spec.v, f"{where}.v")
    try:
        if spec.psi_at_1 is not None:
            trip = LevyTriplet.from_psi1(spec.psi_at_1, spec.sigma2, pi, spec.q)
        else:
            trip = LevyTriplet(spec.a, spec.sigma2, pi, spec.q)
    except ConfigurationError as e:
        raise ConfigError(f"{where}: {e}") from None
    try:
        return Quintuple(trip, v)
    except ConfigurationError as e:
        raise ConfigError(f"{where}.v: {e}") from None


def build_sde_config(spec: SdeSpec) -> SdeConfig:
    try:
        return SdeConfig(**spec.model_dump())
    except ValueError as e:
        raise ConfigError(f"sde: {e}") from None
