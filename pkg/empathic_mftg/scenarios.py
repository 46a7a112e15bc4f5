# ------------------------------------------------------------------------------
# FILE: scenarios.py
# ------------------------------------------------------------------------------
# PURPOSE:
# Scenario files: one JSON document per run, validated by pydantic models.
# The `kind` field selects the parameter block; unknown fields are rejected
# and every failure is reported per dotted field path.
# ------------------------------------------------------------------------------

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Annotated, Any, Literal, Union

from pydantic import BaseModel, ConfigDict, Field, TypeAdapter, ValidationError, field_validator, model_validator

from .errors import ScenarioConfigError

logger = logging.getLogger(__name__)

KINDS = ("collision", "forwarding", "auction", "energy", "lq", "measure_dp", "iri")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


# === Shared blocks ===


class Tolerances(_Strict):
    """Numerical tolerances; defaults are the toolkit constants."""

    audit_eps: float = Field(1e-9, gt=0)
    tie_atol: float = Field(1e-12, ge=0)
    quad_epsabs: float = Field(1e-10, gt=0)
    fixed_point_tol: float = Field(1e-12, gt=0)
    foc_residual: float = Field(1e-10, gt=0)
    energy_max_iter: int = Field(10_000, ge=1)
    riccati_cond_limit: float = Field(1e12, gt=1)
    dp_policy_tol: float = Field(1e-9, gt=0)
    dp_max_iter: int = Field(50, ge=1)
    gain_tol: float = Field(1e-12, ge=0)


EmpathySpec = Union[float, list[list[float]]]


def _unit_grid(points: int = 21) -> list[float]:
    return [round(k / (points - 1), 10) for k in range(points)]


# === Parameter blocks ===


class CollisionParams(_Strict):
    p1: float = Field(ge=0, le=1)
    p2: float = Field(ge=0, le=1)
    lambdas: list[float] = Field(default_factory=_unit_grid)


class DilemmaParams(_Strict):
    """Two-relay forwarding dilemma classified over empathy grids."""

    m11: float
    m21: float
    n11: float
    n12: float
    c1: float
    c2: float
    lambdas1: list[float]
    lambdas2: list[float]


class TypeMixParams(_Strict):
    m11_1: float
    m21_1: float
    m11_2: float
    m12_2: float
    c1: float
    c2: float
    mus: list[float] = Field(default_factory=lambda: _unit_grid(11))


class ForwardingParamsBlock(_Strict):
    n: int
    m_star: int
    alpha: float
    gamma: float
    p: list[float] | None = None
    hops: list[list[float]] | None = None
    lam: EmpathySpec = 0.0
    sensitivity: EmpathySpec = 0.0
    neighbors: list[list[int]] | None = None
    profiles: list[str] = Field(default_factory=list)
    payoff_kinds: list[Literal["material", "empathic", "reciprocity"]] = Field(
        default_factory=lambda: ["material", "empathic", "reciprocity"]
    )
    samples: int = Field(0, ge=0)
    dilemma: DilemmaParams | None = None
    types: TypeMixParams | None = None

    @model_validator(mode="after")
    def _paths(self) -> ForwardingParamsBlock:
        if (self.p is None) == (self.hops is None):
            raise ValueError("give exactly one of p (path success probabilities) or hops")
        return self


class DistributionSpec(_Strict):
    name: Literal["uniform", "truncated_exponential", "piecewise_linear", "csv"] = "uniform"
    upper: float = 1.0
    rate: float | None = None
    xs: list[float] | None = None
    fs: list[float] | None = None
    path: str | None = None


class AuctionParams(_Strict):
    distribution: DistributionSpec = Field(default_factory=DistributionSpec)
    lambdas: list[float] = Field(default_factory=lambda: [0.0, 0.5, 1.0, 2.0])
    altruistic_lambdas: list[float] = Field(default_factory=list)
    costs: list[float] = Field(default_factory=lambda: _unit_grid(11))


class EnergyParams(_Strict):
    n: int = Field(ge=1)
    p0: float
    slope: float
    supply: float = 0.0
    theta: list[float] | float = 1.0
    lambdas: list[float] = Field(default_factory=lambda: [0.0, 0.5])
    hours: int = Field(24, ge=1)


class LqParams(_Strict):
    n: int = Field(ge=1)
    T: int = Field(ge=1)
    alpha: float
    alpha_bar: float
    b: float | list[float]
    sigma: float = Field(ge=0)
    q: float | list[float] | list[list[float]]
    q_bar: float | list[float] | list[list[float]]
    c: float | list[float] | list[list[float]]
    qT: float | list[float]
    qT_bar: float | list[float]
    lam: EmpathySpec = 0.0
    neighbors: list[list[int]] | None = None
    m0: float = 0.0
    var0: float = Field(0.0, ge=0)
    noise: Literal["gaussian", "rademacher", "uniform"] = "gaussian"
    paths: int = Field(0, ge=0)
    chunk_size: int = Field(10_000, ge=1)


class MeasureDpParams(_Strict):
    states: list[str]
    actions: list[list[str]]
    horizon: int = Field(ge=1)
    rewards: list[Any]
    kernels: list[Any]
    terminal: list[list[float]]
    lam: EmpathySpec = 0.0
    neighbors: list[list[int]] | None = None
    initial: list[float]
    mean_field_weight: float = 0.0
    resolution: int = Field(11, ge=2)
    action_step: float = Field(0.1, gt=0, le=1)
    check_resolution: bool = False


class IriParams(_Strict):
    records: str | None = None
    cutoff: int = Field(18, ge=0, le=28)
    min_group: int = Field(5, ge=1)
    condition: Literal["PT", "EC", "FS", "PD"] = "PT"
    include_reference: bool = True


# === Scenario documents ===


class _ScenarioBase(_Strict):
    name: str = ""
    seed: int | None = Field(None, ge=0)
    output_dir: str | None = None
    tolerances: Tolerances = Field(default_factory=Tolerances)


class CollisionScenario(_ScenarioBase):
    kind: Literal["collision"]
    params: CollisionParams


class ForwardingScenario(_ScenarioBase):
    kind: Literal["forwarding"]
    params: ForwardingParamsBlock


class AuctionScenario(_ScenarioBase):
    kind: Literal["auction"]
    params: AuctionParams


class EnergyScenario(_ScenarioBase):
    kind: Literal["energy"]
    params: EnergyParams


class LqScenario(_ScenarioBase):
    kind: Literal["lq"]
    params: LqParams


class MeasureDpScenario(_ScenarioBase):
    kind: Literal["measure_dp"]
    params: MeasureDpParams


class IriScenario(_ScenarioBase):
    kind: Literal["iri"]
    params: IriParams = Field(default_factory=IriParams)

    @field_validator("params")
    @classmethod
    def _records_suffix(cls, value: IriParams) -> IriParams:
        if value.records is not None and not value.records.lower().endswith(".csv"):
            raise ValueError("records must point to a .csv file")
        return value


ScenarioConfig = Annotated[
    Union[
        CollisionScenario,
        ForwardingScenario,
        AuctionScenario,
        EnergyScenario,
        LqScenario,
        MeasureDpScenario,
        IriScenario,
    ],
    Field(discriminator="kind"),
]

_ADAPTER: TypeAdapter[ScenarioConfig] = TypeAdapter(ScenarioConfig)


def field_errors(exc: ValidationError) -> dict[str, str]:
    """Dotted field path -> message, from pydantic's error list."""
    out: dict[str, str] = {}
    for err in exc.errors():
        path = ".".join(str(p) for p in err["loc"]) or "<root>"
        out[path] = err["msg"]
    return out


def validate_scenario(data: Any) -> ScenarioConfig:
    """Validate an already-parsed scenario document.

    Raises:
        ScenarioConfigError: with one diagnostic per offending field.
    """
    try:
        return _ADAPTER.validate_python(data)
    except ValidationError as exc:
        raise ScenarioConfigError("invalid scenario", field_errors(exc)) from exc


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Read and validate a scenario JSON file."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ScenarioConfigError(f"scenario file {path} does not exist") from None
    except json.JSONDecodeError as exc:
        raise ScenarioConfigError(f"{path} is not valid JSON", {f"line {exc.lineno}": exc.msg}) from None
    config = validate_scenario(data)
    logger.debug(f"validated {config.kind} scenario from {path}")
    return config


def scenario_schema() -> dict[str, Any]:
    return _ADAPTER.json_schema()


def resolve_path(config_path: str | Path | None, target: str) -> Path:
    """Paths inside a scenario are relative to the scenario file."""
    p = Path(target)
    if p.is_absolute() or config_path is None:
        return p
    return Path(config_path).parent / p
