"""Pydantic models for configuration files and run outputs."""

from typing import List, Literal, Optional

from pydantic import BaseModel, Field, field_validator, model_validator

from proxaddr.core.address import DEFAULT_PREFIX, OCTET_MAX, MalformedAddress, parse_prefix
from proxaddr.simnet.scenario import Scheme
from proxaddr.simnet.topology import ScheduleKind, TopologySpec

SCHEMA_VERSION = 1


class CliError(Exception):
    """Base class for command-line failures."""


class ConfigError(CliError):
    """The configuration file is unreadable or invalid."""


class SweepSpec(BaseModel):
    """Values to sweep; expanded in the order scheme x n x loss_rate x seed."""
    scheme: Optional[List[Scheme]] = Field(None, min_length=1)
    n: Optional[List[int]] = Field(None, min_length=1)
    loss_rate: Optional[List[float]] = Field(None, min_length=1)
    seed: Optional[List[int]] = Field(None, min_length=1)

    class Config:
        """Pydantic config."""
        extra = "forbid"
        json_schema_extra = {
            "example": {"scheme": ["proposed", "dad", "dhcp"], "n": [100, 400, 1600]}
        }

    @field_validator("n")
    @classmethod
    def _positive_n(cls, values: Optional[List[int]]) -> Optional[List[int]]:
        if values is not None and any(v <= 0 for v in values):
            raise ValueError(f"n must be positive, got {values}")
        return values

    @field_validator("loss_rate")
    @classmethod
    def _loss_in_range(cls, values: Optional[List[float]]) -> Optional[List[float]]:
        if values is not None and any(not 0.0 <= v <= 1.0 for v in values):
            raise ValueError(f"loss_rate must be within [0, 1], got {values}")
        return values


class Scenario(BaseModel):
    """
    One simulation setup, or a family of them when `sweep` is given.

    A scenario is reproducible from its serialized form alone.
    """
    name: str = "scenario"
    scheme: Scheme = Scheme.PROPOSED
    topology: TopologySpec
    joins: Optional[int] = Field(None, ge=0)  # None: every node but the controller
    loss_rate: float = Field(0.0, ge=0.0, le=1.0)
    seed: int = 1
    schedule: ScheduleKind = ScheduleKind.BFS
    concurrency: int = Field(1, ge=1)
    jitter: int = Field(0, ge=0)
    retry_timeout: int = Field(4, ge=1)
    max_attempts: int = Field(5, ge=1)
    dad_identifier_bits: int = Field(64, ge=1, le=64)
    dad_max_retries: int = Field(5, ge=0)
    dhcp_pool_size: Optional[int] = Field(None, gt=0)
    prefix: str = str(DEFAULT_PREFIX)
    controller_node: int = Field(0, ge=0)
    radix: int = Field(OCTET_MAX, ge=2, le=OCTET_MAX)
    max_events: Optional[int] = Field(None, gt=0)
    sweep: Optional[SweepSpec] = None

    class Config:
        """Pydantic config."""
        extra = "forbid"
        json_schema_extra = {
            "example": {
                "name": "grid-comparison",
                "topology": {"kind": "grid", "rows": 10, "cols": 10},
                "loss_rate": 0.0,
                "seed": 1,
                "sweep": {"scheme": ["proposed", "dad", "dhcp"]},
            }
        }

    @field_validator("prefix")
    @classmethod
    def _valid_prefix(cls, value: str) -> str:
        try:
            parse_prefix(value)
        except MalformedAddress as e:
            raise ValueError(str(e)) from e
        return value

    @model_validator(mode="after")
    def _controller_in_topology(self) -> "Scenario":
        if self.sweep is None or self.sweep.n is None:
            if self.controller_node >= self.topology.size:
                raise ValueError(
                    f"controller_node {self.controller_node} outside a topology of {self.topology.size} nodes"
                )
        return self


class ConfigFile(BaseModel):
    """A versioned configuration file: scenarios plus the output directory."""
    schema_version: Literal[1]
    scenarios: List[Scenario] = Field(..., min_length=1)
    output: Optional[str] = None

    class Config:
        """Pydantic config."""
        extra = "forbid"
        json_schema_extra = {
            "example": {
                "schema_version": 1,
                "output": "results/table1",
                "scenarios": [
                    {
                        "name": "grid-comparison",
                        "topology": {"kind": "grid", "rows": 10, "cols": 10},
                        "sweep": {"scheme": ["proposed", "dad", "dhcp"]},
                    }
                ],
            }
        }


# Column order of metrics.csv
METRICS_COLUMNS = [
    "scenario",
    "scheme",
    "n",
    "l",
    "d",
    "diameter_exact",
    "loss_rate",
    "seed",
    "joins",
    "configured",
    "duplicates",
    "failures",
    "invariant_violations",
    "messages_per_join_mean",
    "messages_per_join_median",
    "messages_per_join_p95",
    "latency_mean",
    "latency_median",
    "latency_p95",
    "escalations",
    "retries",
    "floods",
    "messages_total",
    "lost",
]


class MetricsRow(BaseModel):
    """One line of metrics.csv: the results of one sweep point."""
    scenario: str
    scheme: Scheme
    n: int = Field(..., ge=0)
    l: int = Field(..., ge=0)
    d: int = Field(..., ge=0)
    diameter_exact: bool
    loss_rate: float = Field(..., ge=0.0, le=1.0)
    seed: int
    joins: int = Field(..., ge=0)
    configured: int = Field(..., ge=0)
    duplicates: int = Field(..., ge=0)
    failures: int = Field(..., ge=0)
    invariant_violations: int = Field(..., ge=0)
    messages_per_join_mean: float = Field(..., ge=0.0)
    messages_per_join_median: float = Field(..., ge=0.0)
    messages_per_join_p95: float = Field(..., ge=0.0)
    latency_mean: float = Field(..., ge=0.0)
    latency_median: float = Field(..., ge=0.0)
    latency_p95: float = Field(..., ge=0.0)
    escalations: int = Field(..., ge=0)
    retries: int = Field(..., ge=0)
    floods: int = Field(..., ge=0)
    messages_total: int = Field(..., ge=0)
    lost: int = Field(..., ge=0)


class SchemeComparison(BaseModel):
    """Per-scheme summary in the shape of the comparison table."""
    scheme: str
    rows: int
    uniqueness: Literal["Yes", "No"]
    duplicates: int
    latency_mean: float
    latency_per_diameter: Optional[float] = None
    overhead_mean: float  # messages per join
    floods_per_join: float
    scalability_ratio: Optional[float] = None
    scalability: Literal["High", "Low", "n/a"] = "n/a"
    n_values: List[int] = Field(default_factory=list)

    class Config:
        """Pydantic config."""
        json_schema_extra = {
            "example": {
                "scheme": "proposed",
                "rows": 3,
                "uniqueness": "Yes",
                "duplicates": 0,
                "latency_mean": 2.0,
                "latency_per_diameter": 0.06,
                "overhead_mean": 2.0,
                "floods_per_join": 0.0,
                "scalability_ratio": 1.0,
                "scalability": "High",
                "n_values": [100, 400, 1600],
            }
        }


class RunSummary(BaseModel):
    """Contents of summary.json."""
    schema_version: Literal[1] = 1
    points: int
    columns: List[str] = Field(default_factory=lambda: list(METRICS_COLUMNS))
    comparison: List[SchemeComparison]
