"""
Unit tests for metrics capture.
"""

import pytest

from proxaddr.core.address import DEFAULT_PREFIX, Ipv6Address, parse_identifier
from proxaddr.protocol.messages import MessageKind, ProtocolMessage
from proxaddr.simnet.metrics import Distribution, JoinOutcome, MetricsCollector


def addr(text):
    return Ipv6Address(DEFAULT_PREFIX, parse_identifier(text))


def message(join_id, kind=MessageKind.ADDR_REQUEST):
    if kind is MessageKind.ADDR_REPLY:
        return ProtocolMessage(
            kind=kind,
            source=0,
            destination=1,
            join_id=join_id,
            requester=1,
            assigned=addr("1.0.0.0.0.0.0.1"),
            issuer=0,
            route=(1,),
        )
    return ProtocolMessage(kind=kind, source=1, destination=0, join_id=join_id, requester=1, route=(0,))


@pytest.fixture
def collector():
    metrics = MetricsCollector()
    metrics.start_join(1, node=5, now=0)
    metrics.start_join(2, node=6, now=3)
    return metrics


class TestDistribution:
    def test_empty(self):
        assert Distribution.of([]) == Distribution(mean=0.0, median=0.0, p95=0.0)

    def test_values(self):
        dist = Distribution.of([2, 2, 2, 4])
        assert dist.mean == pytest.approx(2.5)
        assert dist.median == pytest.approx(2.0)
        assert 2.0 <= dist.p95 <= 4.0


class TestCollector:
    """Per-join charging and the held-address registry."""

    def test_transmissions_charged_to_join(self, collector):
        collector.on_transmit(message(1))
        collector.on_transmit(message(1, MessageKind.ADDR_REPLY))
        collector.on_transmit(message(2))
        assert collector.messages_total == 3
        assert collector.joins[1].messages == 2
        assert collector.joins[2].messages == 1
        assert collector.by_kind == {"addr_request": 2, "addr_reply": 1}

    def test_unknown_join(self, collector):
        with pytest.raises(KeyError):
            collector.on_transmit(message(99))

    def test_join_started_twice(self, collector):
        with pytest.raises(ValueError):
            collector.start_join(1, node=5, now=0)

    def test_duplicate_detection(self, collector):
        assert collector.hold(0, addr("0.0.0.0.0.0.0.1"))
        assert collector.hold(0, addr("0.0.0.0.0.0.0.1"))
        assert not collector.hold(3, addr("0.0.0.0.0.0.0.1"))
        assert collector.duplicates == 1

    def test_configured_and_failed(self, collector):
        collector.on_configured(1, addr("1.0.0.0.0.0.0.1"), now=2, retries=0)
        collector.on_failed(2, now=20, retries=4)
        assert collector.joins[1].outcome is JoinOutcome.CONFIGURED
        assert collector.joins[1].address == "cedf:cb8:8ba3:8a2e:100::1"
        assert collector.joins[2].outcome is JoinOutcome.FAILED

    def test_record(self, collector):
        collector.on_transmit(message(1))
        collector.on_delivered(message(1))
        collector.on_transmit(message(1, MessageKind.ADDR_REPLY))
        collector.on_lost(message(1))
        collector.on_escalation(1)
        collector.on_configured(1, addr("1.0.0.0.0.0.0.1"), now=6, retries=1)

        record = collector.record(scheme="proposed", seed=1, n=10, l=9, d=9)
        assert record.joins == 2
        assert record.configured == 1
        assert record.failures == 1  # join 2 never finished
        assert record.escalations == 1
        assert record.retries == 1
        assert record.conserved
        assert record.latency.mean == 6.0
        assert record.messages_per_join.mean == 1.0
        assert [j.join_id for j in record.join_records] == [1, 2]
        assert record.join_records[1].outcome is JoinOutcome.PENDING
        assert record.join_records[1].latency is None

    def test_record_is_json_serialisable(self, collector):
        record = collector.record(scheme="dad", seed=3, n=4, l=3, d=3, loss_rate=0.2)
        text = record.model_dump_json()
        assert '"scheme":"dad"' in text
        assert record.model_validate_json(text) == record
