"""
Scheme drivers: glue between the event loop and the state machines.

A driver turns join, timer and delivery events into calls on the protocol
handlers (proxaddr.protocol.proxy, proxaddr.baselines) and hands the
messages they return to the transport. The drivers own no protocol logic.
"""

import logging
from abc import ABC, abstractmethod
from dataclasses import replace
from typing import TYPE_CHECKING, Dict, List

from proxaddr.baselines.dad import DadState, dad_join, dad_on_acn, dad_on_probe, dad_on_timer
from proxaddr.baselines.dhcp import (
    DhcpServerState,
    dhcp_join,
    dhcp_on_deny,
    dhcp_on_discover,
    dhcp_on_reply,
)
from proxaddr.core.address import InvalidIdentifier
from proxaddr.core.allocation import check_assigned, is_controller, parent_of
from proxaddr.protocol.messages import MessageKind, ProtocolMessage
from proxaddr.protocol.proxy import (
    on_addr_deny,
    on_addr_reply,
    on_addr_request,
    on_escalate,
    on_join,
    on_retry_timer,
)
from proxaddr.protocol.state import NoConfiguredNeighbor, NodeState

if TYPE_CHECKING:
    from proxaddr.simnet.scenario import Simulation

logger = logging.getLogger(__name__)


class SchemeDriver(ABC):
    """Event hooks every allocation scheme implements."""

    def __init__(self, sim: "Simulation"):
        self.sim = sim

    def setup(self) -> None:
        """Called once, after the controller is placed."""

    @abstractmethod
    def start_join(self, node_id: int, join_id: int) -> None:
        ...

    @abstractmethod
    def on_message(self, node_id: int, message: ProtocolMessage) -> None:
        ...

    @abstractmethod
    def on_timer(self, node_id: int, token: int) -> None:
        ...

    def invariant_violations(self) -> int:
        return 0


class ProposedDriver(SchemeDriver):
    """Proxy allocation: unicast request/reply, escalation up the tree."""

    def _neighbors(self, node_id: int) -> List[NodeState]:
        return [self.sim.nodes[w] for w in self.sim.topology.neighbors(node_id)]

    def start_join(self, node_id: int, join_id: int) -> None:
        node = self.sim.nodes[node_id]
        try:
            request = on_join(node, self._neighbors(node_id), join_id)
        except NoConfiguredNeighbor as e:
            logger.debug(str(e))
            request = None
        self.sim.arm_timer(node_id, self.sim.options.retry_timeout, node.retry.token)
        if request is not None:
            self.sim.network.unicast(request)

    def on_timer(self, node_id: int, token: int) -> None:
        node = self.sim.nodes[node_id]
        if node.configured or node.failed or not node.retry.armed or token != node.retry.token:
            return
        try:
            request = on_retry_timer(node, self._neighbors(node_id), self.sim.options.max_attempts)
        except NoConfiguredNeighbor as e:
            logger.debug(str(e))
            request = None
        if node.failed:
            self.sim.fail(node, retries=node.retry.attempts - 1)
            return
        self.sim.arm_timer(node_id, self.sim.options.retry_timeout, node.retry.token)
        if request is not None:
            self.sim.network.unicast(request)

    def on_message(self, node_id: int, message: ProtocolMessage) -> None:
        node = self.sim.nodes[node_id]
        kind = message.kind
        if kind in (MessageKind.ADDR_REQUEST, MessageKind.ESCALATE_REQUEST):
            radix = self.sim.options.radix
            if kind is MessageKind.ADDR_REQUEST:
                out = on_addr_request(node, message, radix)
            else:
                out = on_escalate(node, message, radix)
            if out.kind is MessageKind.ESCALATE_REQUEST:
                self.sim.metrics.on_escalation(out.join_id)
            self.sim.network.unicast(out)
        elif kind is MessageKind.ADDR_REPLY:
            if on_addr_reply(node, message):
                self.sim.configured(node, retries=node.retry.attempts - 1)
        elif kind is MessageKind.ADDR_DENY:
            if on_addr_deny(node, message):
                self.sim.fail(node, retries=node.retry.attempts - 1)
        else:
            logger.debug(f"node {node_id}: ignoring {kind.value}")

    def invariant_violations(self) -> int:
        """Configured nodes whose address or parent link breaks the tree."""
        radix = self.sim.options.radix
        prefix = self.sim.options.prefix
        violations = 0
        for node in self.sim.nodes:
            if not node.configured or node.address is None:
                continue
            identifier = node.address.identifier
            if node.address.prefix != prefix:
                violations += 1
                continue
            if is_controller(identifier):
                continue
            try:
                check_assigned(identifier, radix)
                expected = parent_of(identifier, radix)
            except InvalidIdentifier as e:
                logger.warning(f"node {node.node_id}: {e}")
                violations += 1
                continue
            parent = self.sim.nodes[node.parent] if node.parent is not None else None
            if parent is None or parent.address is None or parent.address.identifier != expected:
                logger.warning(f"node {node.node_id}: {identifier} not issued by its parent {node.parent}")
                violations += 1
        return violations


class DadDriver(SchemeDriver):
    """Random tentative identifier, flooded probe, conflict notices."""

    def setup(self) -> None:
        self.states: Dict[int, DadState] = {}
        self.rng = self.sim.rng("dad")

    def start_join(self, node_id: int, join_id: int) -> None:
        options = self.sim.options
        state, probe = dad_join(
            self.sim.nodes[node_id],
            join_id,
            self.rng,
            now=self.sim.now,
            diameter=self.sim.topology.diameter,
            bits=options.dad_identifier_bits,
        )
        self.states[node_id] = state
        self.sim.network.flood(probe)
        self.sim.arm_timer_at(node_id, state.deadline, state.token)

    def on_message(self, node_id: int, message: ProtocolMessage) -> None:
        node = self.sim.nodes[node_id]
        if message.kind is MessageKind.DAP:
            notice = dad_on_probe(node, message)
            if notice is not None:
                route = self.sim.topology.route(node_id, message.requester)
                self.sim.network.unicast(replace(notice, route=route))
        elif message.kind is MessageKind.ACN:
            state = self.states.get(node_id)
            if state is None:
                return
            was_failed = node.failed
            options = self.sim.options
            probe = dad_on_acn(
                node,
                state,
                message,
                self.rng,
                now=self.sim.now,
                diameter=self.sim.topology.diameter,
                bits=options.dad_identifier_bits,
                max_retries=options.dad_max_retries,
            )
            if probe is not None:
                self.sim.network.flood(probe)
                self.sim.arm_timer_at(node_id, state.deadline, state.token)
            elif node.failed and not was_failed:
                self.sim.fail(node, retries=state.retries)

    def on_timer(self, node_id: int, token: int) -> None:
        state = self.states.get(node_id)
        if state is None:
            return
        node = self.sim.nodes[node_id]
        if dad_on_timer(node, state, self.sim.options.prefix, token):
            self.sim.configured(node, retries=state.retries)


class DhcpDriver(SchemeDriver):
    """Single server at the controller node; flooded discover, unicast reply."""

    def setup(self) -> None:
        controller = self.sim.nodes[self.sim.options.controller]
        assert controller.address is not None
        self.server = controller
        self.state = DhcpServerState(
            prefix=self.sim.options.prefix,
            base=controller.address.identifier.to_int(),
            pool_size=self.sim.options.dhcp_pool_size,
        )
        # Round trip across the diameter
        self.timeout = max(2 * self.sim.topology.diameter, 2)

    def _discover(self, node: NodeState, join_id: int) -> None:
        node.retry.arm()
        self.sim.network.flood(dhcp_join(node, join_id, attempt=node.retry.token))
        self.sim.arm_timer(node.node_id, self.timeout, node.retry.token)

    def start_join(self, node_id: int, join_id: int) -> None:
        self._discover(self.sim.nodes[node_id], join_id)

    def on_message(self, node_id: int, message: ProtocolMessage) -> None:
        node = self.sim.nodes[node_id]
        if message.kind is MessageKind.DHCP_DISCOVER:
            if node is not self.server:
                return
            answer = dhcp_on_discover(node, self.state, message)
            route = self.sim.topology.route(node_id, message.requester)
            self.sim.network.unicast(replace(answer, route=route))
        elif message.kind is MessageKind.DHCP_REPLY:
            if dhcp_on_reply(node, message):
                self.sim.configured(node, retries=node.retry.attempts - 1)
        elif message.kind is MessageKind.DHCP_DENY:
            if dhcp_on_deny(node, message):
                node.retry.cancel()
                self.sim.fail(node, retries=node.retry.attempts - 1)

    def on_timer(self, node_id: int, token: int) -> None:
        node = self.sim.nodes[node_id]
        if node.configured or node.failed or not node.retry.armed or token != node.retry.token:
            return
        assert node.join_id is not None
        if node.retry.attempts >= self.sim.options.max_attempts:
            node.retry.cancel()
            node.failed = True
            self.sim.fail(node, retries=node.retry.attempts - 1)
            return
        self._discover(node, node.join_id)
