"""
Metrics capture for a simulated scenario.

Every transmission is charged to the join it belongs to (the message's
join_id), so per-join message counts always sum to the global counter.
"""

import logging
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field

from proxaddr.core.address import Ipv6Address
from proxaddr.protocol.messages import ProtocolMessage

logger = logging.getLogger(__name__)


class JoinOutcome(str, Enum):
    PENDING = "pending"
    CONFIGURED = "configured"
    FAILED = "failed"


@dataclass(slots=True)
class JoinRecord:
    """Live bookkeeping for one join."""
    join_id: int
    node: int
    start: int
    end: Optional[int] = None
    outcome: JoinOutcome = JoinOutcome.PENDING
    messages: int = 0
    escalations: int = 0
    retries: int = 0
    address: Optional[str] = None


class JoinMetrics(BaseModel):
    """Per-join results."""
    join_id: int
    node: int
    outcome: JoinOutcome
    messages: int = Field(..., ge=0)
    latency: Optional[int] = Field(None, ge=0)
    escalations: int = Field(0, ge=0)
    retries: int = Field(0, ge=0)
    address: Optional[str] = None


class Distribution(BaseModel):
    """Mean, median and 95th percentile of a sample (zeros when empty)."""
    mean: float = 0.0
    median: float = 0.0
    p95: float = 0.0

    @classmethod
    def of(cls, values: List[int]) -> "Distribution":
        if not values:
            return cls()
        sample = np.asarray(values, dtype=float)
        return cls(
            mean=float(np.mean(sample)),
            median=float(np.median(sample)),
            p95=float(np.percentile(sample, 95)),
        )


class MetricsRecord(BaseModel):
    """
    Complete results of one scenario run.

    `duplicates` counts configurations that took an address some other node
    already held. `invariant_violations` counts configured nodes whose
    address or parent link breaks the allocation tree (proposed scheme only).
    """
    scheme: str
    seed: int
    n: int
    l: int
    d: int
    diameter_exact: bool = True
    loss_rate: float = 0.0
    joins: int
    configured: int
    duplicates: int
    failures: int
    invariant_violations: int = 0
    messages_total: int
    delivered: int
    lost: int
    floods: int
    escalations: int
    retries: int
    messages_by_kind: Dict[str, int] = Field(default_factory=dict)
    join_records: List[JoinMetrics] = Field(default_factory=list)

    class Config:
        """Pydantic config."""
        json_schema_extra = {
            "example": {
                "scheme": "proposed",
                "seed": 1,
                "n": 100,
                "l": 180,
                "d": 18,
                "joins": 99,
                "configured": 99,
                "duplicates": 0,
                "failures": 0,
                "messages_total": 198,
                "delivered": 198,
                "lost": 0,
                "floods": 0,
                "escalations": 0,
                "retries": 0,
                "messages_by_kind": {"addr_request": 99, "addr_reply": 99},
            }
        }

    @property
    def messages_per_join(self) -> Distribution:
        return Distribution.of([j.messages for j in self.join_records])

    @property
    def latency(self) -> Distribution:
        """Latency over the joins that configured."""
        return Distribution.of([j.latency for j in self.join_records if j.latency is not None])

    @property
    def conserved(self) -> bool:
        return self.messages_total == self.delivered + self.lost


class MetricsCollector:
    """Counters updated by the transport and the scheme drivers."""

    def __init__(self) -> None:
        self.joins: Dict[int, JoinRecord] = {}
        self.messages_total = 0
        self.delivered = 0
        self.lost = 0
        self.floods = 0
        self.duplicates = 0
        self.by_kind: Counter = Counter()
        self.held: Dict[Ipv6Address, int] = {}

    def start_join(self, join_id: int, node: int, now: int) -> JoinRecord:
        if join_id in self.joins:
            raise ValueError(f"join {join_id} already started")
        record = JoinRecord(join_id=join_id, node=node, start=now)
        self.joins[join_id] = record
        return record

    def on_transmit(self, message: ProtocolMessage) -> None:
        self.messages_total += 1
        self.by_kind[message.kind.value] += 1
        self.joins[message.join_id].messages += 1

    def on_delivered(self, message: ProtocolMessage) -> None:
        self.delivered += 1

    def on_lost(self, message: ProtocolMessage) -> None:
        self.lost += 1

    def on_flood(self, message: ProtocolMessage) -> None:
        self.floods += 1

    def on_escalation(self, join_id: int) -> None:
        self.joins[join_id].escalations += 1

    def hold(self, node: int, address: Ipv6Address) -> bool:
        """
        Register `address` as held by `node`.

        Returns False, and counts a duplicate, if another node holds it.
        """
        holder = self.held.get(address)
        if holder is not None and holder != node:
            self.duplicates += 1
            logger.warning(f"duplicate address {address}: node {node} and node {holder}")
            return False
        self.held[address] = node
        return True

    def on_configured(self, join_id: int, address: Ipv6Address, now: int, retries: int = 0) -> None:
        record = self.joins[join_id]
        self.hold(record.node, address)
        record.end = now
        record.outcome = JoinOutcome.CONFIGURED
        record.retries = retries
        record.address = str(address)

    def on_failed(self, join_id: int, now: int, retries: int = 0) -> None:
        record = self.joins[join_id]
        record.end = now
        record.outcome = JoinOutcome.FAILED
        record.retries = retries
        logger.warning(f"join {join_id} (node {record.node}) failed at t={now}")

    def record(
        self,
        *,
        scheme: str,
        seed: int,
        n: int,
        l: int,
        d: int,
        diameter_exact: bool = True,
        loss_rate: float = 0.0,
        invariant_violations: int = 0,
    ) -> MetricsRecord:
        """Freeze the counters into a MetricsRecord."""
        joins = [self.joins[k] for k in sorted(self.joins)]
        records = [
            JoinMetrics(
                join_id=j.join_id,
                node=j.node,
                outcome=j.outcome,
                messages=j.messages,
                latency=(j.end - j.start) if j.outcome is JoinOutcome.CONFIGURED and j.end is not None else None,
                escalations=j.escalations,
                retries=j.retries,
                address=j.address,
            )
            for j in joins
        ]
        return MetricsRecord(
            scheme=scheme,
            seed=seed,
            n=n,
            l=l,
            d=d,
            diameter_exact=diameter_exact,
            loss_rate=loss_rate,
            joins=len(records),
            configured=sum(1 for j in joins if j.outcome is JoinOutcome.CONFIGURED),
            duplicates=self.duplicates,
            failures=sum(1 for j in joins if j.outcome is not JoinOutcome.CONFIGURED),
            invariant_violations=invariant_violations,
            messages_total=self.messages_total,
            delivered=self.delivered,
            lost=self.lost,
            floods=self.floods,
            escalations=sum(j.escalations for j in joins),
            retries=sum(j.retries for j in joins),
            messages_by_kind=dict(sorted(self.by_kind.items())),
            join_records=records,
        )
