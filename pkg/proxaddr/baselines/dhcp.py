"""
DHCP baseline.

A joining node floods a discover message to find the single server. The
server leases the next sequential identifier, records it, and replies along
the shortest path. A client that already holds a lease gets the same
identifier again, so retries after a lost reply never consume pool entries.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict

from proxaddr.core.address import DeviceIdentifier, Ipv6Address, NetworkPrefix
from proxaddr.core.allocation import PoolExhausted
from proxaddr.protocol.messages import MessageKind, ProtocolMessage
from proxaddr.protocol.state import InvalidTransition, NodeState

logger = logging.getLogger(__name__)

# Identifiers above the server's own, excluding the reserved all-255 value
DEFAULT_POOL_SIZE = (1 << 64) - 3


@dataclass(slots=True)
class DhcpServerState:
    """
    Server-side lease table.

    Attributes:
        prefix: domain prefix for leased addresses
        base: integer value of the server's own identifier; leases start
            right after it
        pool_size: number of identifiers the server may lease
        cursor: number of identifiers leased so far
        table: identifier -> lessee node id
        bindings: lessee node id -> identifier
    """
    prefix: NetworkPrefix
    base: int = 1
    pool_size: int = DEFAULT_POOL_SIZE
    cursor: int = 0
    table: Dict[DeviceIdentifier, int] = field(default_factory=dict)
    bindings: Dict[int, DeviceIdentifier] = field(default_factory=dict)

    def lease(self, client: int) -> DeviceIdentifier:
        """
        Identifier for `client`, allocating the next one if needed.

        Raises:
            PoolExhausted: every identifier in the pool is leased
        """
        if client in self.bindings:
            return self.bindings[client]
        if self.cursor >= self.pool_size:
            raise PoolExhausted(f"DHCP pool of {self.pool_size} exhausted")
        self.cursor += 1
        identifier = DeviceIdentifier.from_int(self.base + self.cursor)
        if identifier in self.table:
            raise AssertionError(f"lease table already holds {identifier}")
        self.table[identifier] = client
        self.bindings[client] = identifier
        return identifier


def dhcp_join(node: NodeState, join_id: int, attempt: int = 1) -> ProtocolMessage:
    """Discover message to flood for an unconfigured node."""
    if node.configured:
        raise InvalidTransition(f"node {node.node_id} is already configured")
    node.join_id = join_id
    return ProtocolMessage(
        kind=MessageKind.DHCP_DISCOVER,
        source=node.node_id,
        destination=None,
        join_id=join_id,
        requester=node.node_id,
        attempt=attempt,
    )


def dhcp_on_discover(
    server: NodeState,
    state: DhcpServerState,
    discover: ProtocolMessage,
) -> ProtocolMessage:
    """
    Lease an identifier to the discovering client.

    Returns a DHCP_REPLY, or a DHCP_DENY when the pool is exhausted. The
    caller fills in the route to the client.
    """
    if discover.kind is not MessageKind.DHCP_DISCOVER:
        raise InvalidTransition(f"expected dhcp_discover, got {discover.kind.value}")
    try:
        identifier = state.lease(discover.requester)
    except PoolExhausted as e:
        logger.warning(f"DHCP server {server.node_id}: {e}, denying {discover.requester}")
        return ProtocolMessage(
            kind=MessageKind.DHCP_DENY,
            source=server.node_id,
            destination=discover.requester,
            join_id=discover.join_id,
            requester=discover.requester,
            attempt=discover.attempt,
        )
    return ProtocolMessage(
        kind=MessageKind.DHCP_REPLY,
        source=server.node_id,
        destination=discover.requester,
        join_id=discover.join_id,
        requester=discover.requester,
        attempt=discover.attempt,
        assigned=Ipv6Address(state.prefix, identifier),
        issuer=server.node_id,
    )


def dhcp_on_reply(node: NodeState, reply: ProtocolMessage) -> bool:
    """Configure from a reply. Returns False for duplicates and late replies."""
    if reply.kind is not MessageKind.DHCP_REPLY:
        raise InvalidTransition(f"expected dhcp_reply, got {reply.kind.value}")
    if node.configured or node.failed:
        return False
    assert reply.assigned is not None
    node.configure(reply.assigned, parent=reply.issuer)
    return True


def dhcp_on_deny(node: NodeState, deny: ProtocolMessage) -> bool:
    """Record a denial. Returns True if it ended the node's join."""
    if deny.kind is not MessageKind.DHCP_DENY:
        raise InvalidTransition(f"expected dhcp_deny, got {deny.kind.value}")
    if node.configured or node.failed:
        return False
    node.failed = True
    return True


def server_identifier(state: DhcpServerState) -> DeviceIdentifier:
    """Identifier the server holds itself."""
    return DeviceIdentifier.from_int(state.base)
