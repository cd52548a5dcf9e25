"""
Config loading, sweep expansion and scenario execution.

Sweep points are independent and may run in worker processes; rows always
come back in sweep order.
"""

import itertools
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional, Union

import pandas as pd
from pydantic import ValidationError

from proxaddr.baselines.dhcp import DEFAULT_POOL_SIZE
from proxaddr.cli.models import (
    METRICS_COLUMNS,
    ConfigError,
    ConfigFile,
    MetricsRow,
    RunSummary,
    Scenario,
)
from proxaddr.cli.report import compare
from proxaddr.core.address import parse_prefix
from proxaddr.simnet.metrics import MetricsRecord
from proxaddr.simnet.scenario import SimOptions, run_scenario
from proxaddr.simnet.topology import build_topology, join_schedule

logger = logging.getLogger(__name__)

METRICS_FILE = "metrics.csv"
SUMMARY_FILE = "summary.json"


def load_config(path: Union[str, Path]) -> ConfigFile:
    """
    Read and validate a configuration file.

    Raises:
        ConfigError: the file is missing, not JSON, or fails validation
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError as e:
        raise ConfigError(f"config file not found: {path}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: not valid JSON ({e})") from e
    return parse_config(raw, source=str(path))


def parse_config(raw: object, source: str = "<config>") -> ConfigFile:
    try:
        return ConfigFile.model_validate(raw)
    except ValidationError as e:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or '<root>'}: {err['msg']}" for err in e.errors()
        )
        raise ConfigError(f"{source}: {problems}") from e


def dump_config(config: ConfigFile) -> str:
    """Serialize a config so that parse_config(json.loads(text)) == config."""
    return json.dumps(config.model_dump(mode="json", exclude_none=True), indent=2) + "\n"


def expand_sweep(scenario: Scenario) -> List[Scenario]:
    """
    Concrete scenarios for every sweep point, in scheme x n x loss_rate x seed
    order. A scenario without a sweep expands to itself.

    Raises:
        ConfigError: a swept n leaves the controller outside the topology
    """
    sweep = scenario.sweep
    if sweep is None:
        return [scenario]

    schemes = sweep.scheme or [scenario.scheme]
    sizes: List[Optional[int]] = list(sweep.n) if sweep.n else [None]
    losses = sweep.loss_rate or [scenario.loss_rate]
    seeds = sweep.seed or [scenario.seed]

    points = []
    for scheme, n, loss_rate, seed in itertools.product(schemes, sizes, losses, seeds):
        try:
            topology = scenario.topology if n is None else scenario.topology.with_n(n)
            point = scenario.model_copy(
                update={
                    "scheme": scheme,
                    "topology": topology,
                    "loss_rate": loss_rate,
                    "seed": seed,
                    "sweep": None,
                }
            )
            # model_copy skips validation
            points.append(Scenario.model_validate(point.model_dump()))
        except ValidationError as e:
            raise ConfigError(f"scenario {scenario.name!r} at n={n}: {e}") from e
    return points


def override_seed(config: ConfigFile, seed: int) -> ConfigFile:
    """Replace the seed of every scenario that does not sweep seeds."""
    scenarios = [
        s if s.sweep is not None and s.sweep.seed else s.model_copy(update={"seed": seed})
        for s in config.scenarios
    ]
    return config.model_copy(update={"scenarios": scenarios})


def simulate(scenario: Scenario) -> MetricsRecord:
    """Build the topology and schedule for a concrete scenario and run it."""
    if scenario.sweep is not None:
        raise ValueError("expand the sweep before simulating")
    topology = build_topology(scenario.topology, scenario.seed)
    if scenario.controller_node >= topology.n:
        raise ConfigError(f"controller_node {scenario.controller_node} outside a topology of {topology.n} nodes")
    schedule = join_schedule(topology, scenario.controller_node, scenario.schedule, scenario.seed)
    if scenario.joins is not None:
        schedule = schedule[: scenario.joins]
    options = SimOptions(
        concurrency=scenario.concurrency,
        jitter=scenario.jitter,
        retry_timeout=scenario.retry_timeout,
        max_attempts=scenario.max_attempts,
        dad_identifier_bits=scenario.dad_identifier_bits,
        dad_max_retries=scenario.dad_max_retries,
        dhcp_pool_size=scenario.dhcp_pool_size or DEFAULT_POOL_SIZE,
        prefix=parse_prefix(scenario.prefix),
        controller=scenario.controller_node,
        radix=scenario.radix,
        max_events=scenario.max_events,
    )
    return run_scenario(scenario.scheme, topology, schedule, scenario.loss_rate, scenario.seed, options)


def to_row(scenario: Scenario, record: MetricsRecord) -> MetricsRow:
    messages = record.messages_per_join
    latency = record.latency
    return MetricsRow(
        scenario=scenario.name,
        scheme=scenario.scheme,
        n=record.n,
        l=record.l,
        d=record.d,
        diameter_exact=record.diameter_exact,
        loss_rate=record.loss_rate,
        seed=record.seed,
        joins=record.joins,
        configured=record.configured,
        duplicates=record.duplicates,
        failures=record.failures,
        invariant_violations=record.invariant_violations,
        messages_per_join_mean=messages.mean,
        messages_per_join_median=messages.median,
        messages_per_join_p95=messages.p95,
        latency_mean=latency.mean,
        latency_median=latency.median,
        latency_p95=latency.p95,
        escalations=record.escalations,
        retries=record.retries,
        floods=record.floods,
        messages_total=record.messages_total,
        lost=record.lost,
    )


def run_point(scenario: Scenario) -> MetricsRow:
    """Simulate one sweep point and reduce it to a metrics row."""
    return to_row(scenario, simulate(scenario))


def run_config(config: ConfigFile, jobs: int = 1) -> List[MetricsRow]:
    """
    Run every sweep point of every scenario.

    Raises:
        ConfigError: a sweep point is invalid
        NonQuiescent: a scenario ran out of events
    """
    points = [p for s in config.scenarios for p in expand_sweep(s)]
    logger.info(f"running {len(points)} sweep points with {jobs} worker(s)")
    if jobs > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run_point, points))
    return [run_point(p) for p in points]


def rows_frame(rows: List[MetricsRow]) -> pd.DataFrame:
    return pd.DataFrame([r.model_dump(mode="json") for r in rows], columns=METRICS_COLUMNS)


def write_outputs(rows: List[MetricsRow], out_dir: Union[str, Path]) -> RunSummary:
    """Write metrics.csv and summary.json into `out_dir`."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    frame = rows_frame(rows)
    frame.to_csv(out / METRICS_FILE, index=False, float_format="%.6f", lineterminator="\n")
    summary = RunSummary(points=len(rows), comparison=compare(frame))
    (out / SUMMARY_FILE).write_text(summary.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info(f"wrote {len(rows)} rows to {out / METRICS_FILE}")
    return summary
