"""
Unit tests for the proxy allocation state machines.

Tests for:
- NodeState invariants and domain delegation
- on_join / on_retry_timer neighbour selection and retries
- on_addr_request / on_escalate proxy service, escalation and denial
- on_addr_reply / on_addr_deny idempotence and matching against pending requests
- ProtocolMessage validation
"""

import pytest

from proxaddr.core.address import DEFAULT_PREFIX, DeviceIdentifier, Ipv6Address, parse_identifier
from proxaddr.core.allocation import AllocationState
from proxaddr.protocol.messages import MessageKind, ProtocolMessage
from proxaddr.protocol.proxy import (
    on_addr_deny,
    on_addr_reply,
    on_addr_request,
    on_escalate,
    on_join,
    on_retry_timer,
    select_neighbor,
)
from proxaddr.protocol.state import (
    InvalidTransition,
    NoConfiguredNeighbor,
    NodeRole,
    NodeState,
    delegate_domain,
)


# ============================================================================
# FIXTURES
# ============================================================================


def addr(text):
    return Ipv6Address(DEFAULT_PREFIX, parse_identifier(text))


def device(node_id, identifier, parent, count=0):
    return NodeState(
        node_id=node_id,
        role=NodeRole.CONFIGURED_DEVICE,
        address=addr(identifier),
        alloc=AllocationState(count=count),
        parent=parent,
    )


@pytest.fixture
def global_controller():
    return NodeState.global_controller(-1, Ipv6Address(DEFAULT_PREFIX, DeviceIdentifier.from_int(0)))


@pytest.fixture
def controller(global_controller):
    return delegate_domain(global_controller, 0, DEFAULT_PREFIX)


@pytest.fixture
def joiner():
    return NodeState(node_id=9)


def request_from(node, proxy_id, join_id=1):
    return ProtocolMessage(
        kind=MessageKind.ADDR_REQUEST,
        source=node.node_id,
        destination=proxy_id,
        join_id=join_id,
        requester=node.node_id,
        trail=(node.node_id,),
        route=(proxy_id,),
    )


# ============================================================================
# NODE STATE
# ============================================================================


class TestNodeState:
    """Role invariants and delegation."""

    def test_unconfigured_default(self, joiner):
        assert joiner.role is NodeRole.UNCONFIGURED
        assert not joiner.configured
        assert joiner.address is None and joiner.alloc is None

    def test_unconfigured_cannot_hold_address(self):
        with pytest.raises(ValueError):
            NodeState(node_id=1, address=addr("1.0.0.0.0.0.0.1"))

    def test_configured_needs_address(self):
        with pytest.raises(ValueError):
            NodeState(node_id=1, role=NodeRole.CONFIGURED_DEVICE)

    def test_configure(self, joiner):
        joiner.retry.arm()
        joiner.configure(addr("5.0.0.0.0.0.0.1"), parent=0)
        assert joiner.role is NodeRole.CONFIGURED_DEVICE
        assert joiner.alloc == AllocationState()
        assert joiner.parent == 0
        assert not joiner.retry.armed

    def test_delegate_domain(self, controller):
        assert controller.role is NodeRole.LOCAL_CONTROLLER
        assert str(controller.address.identifier) == "0.0.0.0.0.0.0.1"
        assert controller.address.prefix == DEFAULT_PREFIX
        assert controller.parent is None

    def test_only_global_controller_delegates(self, controller):
        with pytest.raises(InvalidTransition):
            delegate_domain(controller, 1, DEFAULT_PREFIX)

    def test_retry_tokens_change(self, joiner):
        first = joiner.retry.arm()
        second = joiner.retry.arm()
        assert second == first + 1
        assert joiner.retry.attempts == 2


# ============================================================================
# JOIN AND RETRY
# ============================================================================


class TestJoin:
    """on_join / on_retry_timer."""

    def test_single_candidate(self, controller, joiner):
        msg = on_join(joiner, [controller], join_id=1)
        assert msg.kind is MessageKind.ADDR_REQUEST
        assert msg.destination == controller.node_id
        assert msg.route == (controller.node_id,)
        assert msg.trail == (joiner.node_id,)
        assert msg.attempt == 1
        assert joiner.retry.armed
        assert list(joiner.pending) == [msg]

    def test_lowest_id_configured_neighbour(self, joiner):
        neighbours = [
            device(7, "1.0.0.0.0.0.0.1", 0),
            device(3, "2.0.0.0.0.0.0.1", 0),
            NodeState(node_id=1),
        ]
        assert select_neighbor(neighbours).node_id == 3
        assert on_join(joiner, neighbours, join_id=1).destination == 3

    def test_no_configured_neighbour(self, joiner):
        with pytest.raises(NoConfiguredNeighbor):
            on_join(joiner, [NodeState(node_id=2)], join_id=1)
        assert joiner.retry.armed
        assert joiner.retry.attempts == 1

    def test_already_configured(self, controller):
        with pytest.raises(InvalidTransition):
            on_join(controller, [], join_id=1)

    def test_retry_resends_with_next_attempt(self, controller, joiner):
        on_join(joiner, [controller], join_id=4)
        msg = on_retry_timer(joiner, [controller])
        assert msg.attempt == 2
        assert msg.join_id == 4

    def test_gives_up_after_max_attempts(self, controller, joiner):
        on_join(joiner, [controller], join_id=1)
        for _ in range(4):
            assert on_retry_timer(joiner, [controller], max_attempts=5) is not None
        assert on_retry_timer(joiner, [controller], max_attempts=5) is None
        assert joiner.failed
        assert not joiner.retry.armed

    def test_timer_after_configuration_is_noop(self, controller, joiner):
        on_join(joiner, [controller], join_id=1)
        joiner.configure(addr("1.0.0.0.0.0.0.1"), parent=0)
        assert on_retry_timer(joiner, [controller]) is None


# ============================================================================
# PROXY SERVICE
# ============================================================================


class TestProxy:
    """on_addr_request / on_escalate."""

    def test_controller_serves_first_address(self, controller, joiner):
        reply = on_addr_request(controller, request_from(joiner, controller.node_id))
        assert reply.kind is MessageKind.ADDR_REPLY
        assert str(reply.assigned.identifier) == "1.0.0.0.0.0.0.1"
        assert reply.issuer == controller.node_id
        assert reply.route == (joiner.node_id,)
        assert controller.alloc.count == 1

    def test_back_to_back_requests(self, controller):
        first = on_addr_request(controller, request_from(NodeState(node_id=5), 0))
        second = on_addr_request(controller, request_from(NodeState(node_id=6), 0))
        assert first.assigned != second.assigned
        assert first.assigned.identifier.octet(7) + 1 == second.assigned.identifier.octet(7)

    def test_leaf_escalates_to_parent(self, joiner):
        leaf = device(8, "1.1.1.1.1.1.1.1", parent=7)
        out = on_addr_request(leaf, request_from(joiner, 8))
        assert out.kind is MessageKind.ESCALATE_REQUEST
        assert out.destination == 7
        assert out.route == (7,)
        assert out.trail == (9, 8)
        assert out.requester == joiner.node_id
        assert leaf.alloc == AllocationState()

    def test_escalation_chain(self, joiner):
        """Two escalation hops, then the reply retraces the trail."""
        leaf = device(8, "1.1.1.1.1.1.1.1", parent=7)
        exhausted = device(7, "1.1.1.1.1.1.0.1", parent=6, count=255)
        ancestor = device(6, "1.1.1.1.1.0.0.1", parent=5, count=1)

        up = on_addr_request(leaf, request_from(joiner, 8))
        up = on_escalate(exhausted, up)
        assert up.kind is MessageKind.ESCALATE_REQUEST
        assert up.destination == 6
        reply = on_escalate(ancestor, up)

        assert reply.kind is MessageKind.ADDR_REPLY
        assert str(reply.assigned.identifier) == "1.1.1.1.1.2.0.1"
        assert reply.issuer == 6
        assert reply.trail == (9, 8, 7, 6)
        assert reply.route == (7, 8, 9)
        assert reply.destination == joiner.node_id

    def test_exhausted_controller_denies(self, controller, joiner):
        controller.alloc = AllocationState(count=255, count1=255)
        deny = on_addr_request(controller, request_from(joiner, controller.node_id))
        assert deny.kind is MessageKind.ADDR_DENY
        assert deny.destination == joiner.node_id
        assert deny.route == (joiner.node_id,)

    def test_unconfigured_cannot_serve(self, joiner):
        with pytest.raises(InvalidTransition):
            on_addr_request(NodeState(node_id=3), request_from(joiner, 3))

    def test_wrong_kind(self, controller, joiner):
        with pytest.raises(InvalidTransition):
            on_escalate(controller, request_from(joiner, controller.node_id))

    def test_small_radix_exhausts_sooner(self, joiner):
        node = device(4, "1.0.0.0.0.0.0.1", parent=0, count=2)
        out = on_addr_request(node, request_from(joiner, 4), radix=2)
        assert out.kind is MessageKind.ESCALATE_REQUEST


# ============================================================================
# REPLY AND DENY
# ============================================================================


class TestReply:
    """on_addr_reply / on_addr_deny."""

    def test_reply_configures(self, controller, joiner):
        on_join(joiner, [controller], join_id=1)
        reply = ProtocolMessage(
            kind=MessageKind.ADDR_REPLY,
            source=0,
            destination=9,
            join_id=1,
            requester=9,
            assigned=addr("5.0.0.0.0.0.0.1"),
            issuer=0,
            route=(9,),
        )
        assert on_addr_reply(joiner, reply)
        assert joiner.configured
        assert joiner.parent == 0
        assert not joiner.pending

        # A second reply changes nothing
        other = ProtocolMessage(
            kind=MessageKind.ADDR_REPLY,
            source=0,
            destination=9,
            join_id=1,
            requester=9,
            assigned=addr("6.0.0.0.0.0.0.1"),
            issuer=0,
        )
        assert not on_addr_reply(joiner, other)
        assert str(joiner.address.identifier) == "5.0.0.0.0.0.0.1"

    def test_configured_node_can_serve(self, joiner):
        joiner.configure(addr("5.0.0.0.0.0.0.1"), parent=0)
        reply = on_addr_request(joiner, request_from(NodeState(node_id=11), 9))
        assert str(reply.assigned.identifier) == "5.1.0.0.0.0.0.1"

    def test_deny_fails_join(self, controller, joiner):
        on_join(joiner, [controller], join_id=1)
        deny = ProtocolMessage(kind=MessageKind.ADDR_DENY, source=0, destination=9, join_id=1, requester=9)
        assert on_addr_deny(joiner, deny)
        assert joiner.failed
        assert not on_addr_deny(joiner, deny)

    def test_reply_after_failure_ignored(self, joiner):
        joiner.failed = True
        reply = ProtocolMessage(
            kind=MessageKind.ADDR_REPLY,
            source=0,
            destination=9,
            join_id=1,
            requester=9,
            assigned=addr("5.0.0.0.0.0.0.1"),
            issuer=0,
        )
        assert not on_addr_reply(joiner, reply)
        assert not joiner.configured

    @pytest.mark.parametrize("join_id, attempt", [(1, 2), (7, 1)])
    def test_unrequested_reply_ignored(self, controller, joiner, join_id, attempt):
        """A reply must answer a request the node actually sent."""
        on_join(joiner, [controller], join_id=1)
        reply = ProtocolMessage(
            kind=MessageKind.ADDR_REPLY,
            source=0,
            destination=9,
            join_id=join_id,
            requester=9,
            attempt=attempt,
            assigned=addr("5.0.0.0.0.0.0.1"),
            issuer=0,
        )
        assert not on_addr_reply(joiner, reply)
        assert not joiner.configured
        assert len(joiner.pending) == 1

    def test_reply_to_earlier_attempt_accepted(self, controller, joiner):
        on_join(joiner, [controller], join_id=1)
        on_retry_timer(joiner, [controller])
        assert [m.attempt for m in joiner.pending] == [1, 2]
        reply = ProtocolMessage(
            kind=MessageKind.ADDR_REPLY,
            source=0,
            destination=9,
            join_id=1,
            requester=9,
            attempt=1,
            assigned=addr("5.0.0.0.0.0.0.1"),
            issuer=0,
        )
        assert on_addr_reply(joiner, reply)
        assert not joiner.pending

    def test_unrequested_deny_ignored(self, controller, joiner):
        on_join(joiner, [controller], join_id=1)
        deny = ProtocolMessage(kind=MessageKind.ADDR_DENY, source=0, destination=9, join_id=1, requester=9, attempt=3)
        assert not on_addr_deny(joiner, deny)
        assert not joiner.failed
        assert joiner.retry.armed

    def test_deny_clears_pending(self, controller, joiner):
        on_join(joiner, [controller], join_id=1)
        deny = ProtocolMessage(kind=MessageKind.ADDR_DENY, source=0, destination=9, join_id=1, requester=9)
        assert on_addr_deny(joiner, deny)
        assert not joiner.pending


# ============================================================================
# MESSAGES
# ============================================================================


class TestMessages:
    def test_reply_needs_assigned(self):
        with pytest.raises(ValueError):
            ProtocolMessage(kind=MessageKind.ADDR_REPLY, source=0, destination=1, join_id=1, requester=1)

    def test_reply_rejects_invalid_identifier(self):
        with pytest.raises(ValueError):
            ProtocolMessage(
                kind=MessageKind.ADDR_REPLY,
                source=0,
                destination=1,
                join_id=1,
                requester=1,
                assigned=addr("0.5.0.0.0.0.0.1"),
                issuer=0,
            )

    def test_flood_has_no_destination(self):
        with pytest.raises(ValueError):
            ProtocolMessage(
                kind=MessageKind.DAP,
                source=0,
                destination=1,
                join_id=1,
                requester=0,
                tentative=DeviceIdentifier.controller(),
            )

    def test_route_ends_at_destination(self):
        with pytest.raises(ValueError):
            ProtocolMessage(
                kind=MessageKind.ADDR_REQUEST, source=0, destination=2, join_id=1, requester=0, route=(1, 3)
            )

    def test_flood_kinds(self):
        dap = ProtocolMessage(
            kind=MessageKind.DAP,
            source=0,
            destination=None,
            join_id=1,
            requester=0,
            tentative=DeviceIdentifier.controller(),
        )
        assert dap.is_flood
        assert not request_from(NodeState(node_id=1), 0).is_flood
