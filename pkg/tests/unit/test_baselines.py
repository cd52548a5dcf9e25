"""
Unit tests for the DAD and DHCP baselines.

Tests for:
- draw_tentative / dad_timeout
- dad_join, dad_on_probe, dad_on_acn, dad_on_timer
- DhcpServerState leasing and the dhcp_* handlers
"""

import random

import pytest

from proxaddr.baselines.dad import (
    DadState,
    dad_join,
    dad_on_acn,
    dad_on_probe,
    dad_on_timer,
    dad_timeout,
    draw_tentative,
)
from proxaddr.baselines.dhcp import (
    DhcpServerState,
    dhcp_join,
    dhcp_on_deny,
    dhcp_on_discover,
    dhcp_on_reply,
    server_identifier,
)
from proxaddr.core.address import DEFAULT_PREFIX, DeviceIdentifier, Ipv6Address
from proxaddr.protocol.messages import MessageKind
from proxaddr.protocol.state import InvalidTransition, NodeRole, NodeState, delegate_domain


@pytest.fixture
def controller():
    root = NodeState.global_controller(-1, Ipv6Address(DEFAULT_PREFIX, DeviceIdentifier.from_int(0)))
    return delegate_domain(root, 0, DEFAULT_PREFIX)


@pytest.fixture
def rng():
    return random.Random(42)


# ============================================================================
# DAD
# ============================================================================


class TestDraw:
    def test_timeout_is_round_trip(self):
        assert dad_timeout(18) == 36
        assert dad_timeout(4, hop_latency=3) == 24

    def test_draw_within_bits(self, rng):
        for _ in range(200):
            value = draw_tentative(rng, bits=10).to_int()
            assert 1 <= value < 1 << 10

    def test_draw_is_seeded(self):
        first = [draw_tentative(random.Random(3)) for _ in range(5)]
        second = [draw_tentative(random.Random(3)) for _ in range(5)]
        assert first == second

    def test_zero_redrawn(self):
        """With a single bit the only nonzero value is 1."""
        rng = random.Random(0)
        assert all(draw_tentative(rng, bits=1).to_int() == 1 for _ in range(20))

    @pytest.mark.parametrize("bits", [0, 65])
    def test_bad_bits(self, rng, bits):
        with pytest.raises(ValueError):
            draw_tentative(rng, bits=bits)


class TestDad:
    """The probe / notice / timer cycle."""

    def test_join_floods_probe(self, rng):
        node = NodeState(node_id=4)
        state, dap = dad_join(node, 7, rng, now=10, diameter=5)
        assert dap.kind is MessageKind.DAP
        assert dap.is_flood
        assert dap.tentative == state.tentative
        assert dap.join_id == 7
        assert state.deadline == 20
        assert state.token == 1

    def test_join_configured_node(self, controller, rng):
        with pytest.raises(InvalidTransition):
            dad_join(controller, 1, rng, now=0, diameter=3)

    def test_probe_conflict(self, controller, rng):
        """A probe for the controller's own identifier draws an ACN."""
        node = NodeState(node_id=4)
        state, dap = dad_join(node, 1, rng, now=0, diameter=3, bits=1)
        assert state.tentative == DeviceIdentifier.controller()
        acn = dad_on_probe(controller, dap)
        assert acn.kind is MessageKind.ACN
        assert acn.destination == 4
        assert acn.tentative == state.tentative

    def test_probe_no_conflict(self, controller, rng):
        node = NodeState(node_id=4)
        _, dap = dad_join(node, 1, rng, now=0, diameter=3)
        assert dad_on_probe(controller, dap) is None
        assert dad_on_probe(NodeState(node_id=5), dap) is None

    def test_acn_restarts_with_fresh_draw(self, controller):
        rng = random.Random(1)
        node = NodeState(node_id=4)
        state, dap = dad_join(node, 1, rng, now=0, diameter=3, bits=1)
        acn = dad_on_probe(controller, dap)

        again = dad_on_acn(node, state, acn, rng, now=5, diameter=3, bits=2)
        assert again.kind is MessageKind.DAP
        assert again.attempt == 2
        assert state.retries == 1
        assert state.token == 2
        assert state.deadline == 11

    def test_stale_acn_ignored(self, controller):
        rng = random.Random(1)
        node = NodeState(node_id=4)
        state, dap = dad_join(node, 1, rng, now=0, diameter=3, bits=1)
        acn = dad_on_probe(controller, dap)
        dad_on_acn(node, state, acn, rng, now=5, diameter=3, bits=1)
        # The first notice again: attempt no longer matches
        assert dad_on_acn(node, state, acn, rng, now=6, diameter=3, bits=1) is None
        assert state.retries == 1

    def test_retry_cap_fails_node(self, controller):
        rng = random.Random(1)
        node = NodeState(node_id=4)
        state, dap = dad_join(node, 1, rng, now=0, diameter=3, bits=1)
        for _ in range(2):
            acn = dad_on_probe(controller, dap)
            dap = dad_on_acn(node, state, acn, rng, now=0, diameter=3, bits=1, max_retries=2)
            assert dap is not None
        acn = dad_on_probe(controller, dap)
        assert dad_on_acn(node, state, acn, rng, now=0, diameter=3, bits=1, max_retries=2) is None
        assert node.failed

    def test_timer_configures(self, rng):
        node = NodeState(node_id=4)
        state, _ = dad_join(node, 1, rng, now=0, diameter=3)
        assert dad_on_timer(node, state, DEFAULT_PREFIX, token=1)
        assert node.configured
        assert node.address.identifier == state.tentative
        assert node.parent is None

    def test_superseded_timer_ignored(self, rng):
        node = NodeState(node_id=4)
        state = DadState(tentative=DeviceIdentifier.from_int(9), deadline=6, token=2)
        node.join_id = 1
        assert not dad_on_timer(node, state, DEFAULT_PREFIX, token=1)
        assert not node.configured


# ============================================================================
# DHCP
# ============================================================================


class TestDhcpServer:
    """Sequential leasing."""

    def test_first_lease(self):
        state = DhcpServerState(prefix=DEFAULT_PREFIX)
        identifier = state.lease(5)
        assert state.cursor == 1
        assert len(state.table) == 1
        assert identifier.to_int() == 2
        assert server_identifier(state) == DeviceIdentifier.controller()

    def test_k_leases_distinct(self):
        state = DhcpServerState(prefix=DEFAULT_PREFIX)
        leased = [state.lease(client) for client in range(1, 51)]
        assert len(set(leased)) == 50
        assert state.cursor == 50
        assert server_identifier(state) not in leased

    def test_binding_is_idempotent(self):
        state = DhcpServerState(prefix=DEFAULT_PREFIX)
        first = state.lease(5)
        assert state.lease(5) == first
        assert state.cursor == 1

    def test_pool_exhaustion_denies(self, controller):
        state = DhcpServerState(prefix=DEFAULT_PREFIX, pool_size=1)
        first = dhcp_join(NodeState(node_id=1), 1)
        second = dhcp_join(NodeState(node_id=2), 2)
        assert dhcp_on_discover(controller, state, first).kind is MessageKind.DHCP_REPLY
        deny = dhcp_on_discover(controller, state, second)
        assert deny.kind is MessageKind.DHCP_DENY
        assert deny.destination == 2


class TestDhcpClient:
    def test_discover_is_flood(self):
        node = NodeState(node_id=3)
        msg = dhcp_join(node, 8, attempt=2)
        assert msg.kind is MessageKind.DHCP_DISCOVER
        assert msg.is_flood
        assert msg.attempt == 2
        assert node.join_id == 8

    def test_reply_configures_once(self, controller):
        state = DhcpServerState(prefix=DEFAULT_PREFIX)
        node = NodeState(node_id=3)
        reply = dhcp_on_discover(controller, state, dhcp_join(node, 1))
        assert reply.issuer == controller.node_id
        assert dhcp_on_reply(node, reply)
        assert node.role is NodeRole.CONFIGURED_DEVICE
        assert node.address == Ipv6Address(DEFAULT_PREFIX, DeviceIdentifier.from_int(2))
        assert not dhcp_on_reply(node, reply)

    def test_deny(self, controller):
        state = DhcpServerState(prefix=DEFAULT_PREFIX, pool_size=0)
        node = NodeState(node_id=3)
        deny = dhcp_on_discover(controller, state, dhcp_join(node, 1))
        assert dhcp_on_deny(node, deny)
        assert node.failed

    def test_join_configured_node(self, controller):
        with pytest.raises(InvalidTransition):
            dhcp_join(controller, 1)
