"""
State machines for the proposed proxy allocation scheme.

A joining node asks one configured neighbour for an address. The neighbour
acts as a proxy: it generates a child of its own identifier, or, when its
pool is exhausted, escalates the request to its parent in the allocation
tree. Escalation repeats up the tree; an exhausted controller denies.

No handler here ever floods. Every handler consumes one event and returns
at most one outgoing message, which the simulator transmits along
`message.route`.
"""

import logging
from typing import Optional, Sequence

from proxaddr.core.address import OCTET_MAX
from proxaddr.core.allocation import PoolExhausted, generate_address, is_controller
from proxaddr.protocol.messages import MessageKind, ProtocolMessage
from proxaddr.protocol.state import (
    DEFAULT_MAX_ATTEMPTS,
    InvalidTransition,
    NoConfiguredNeighbor,
    NodeState,
)

logger = logging.getLogger(__name__)


def select_neighbor(neighbors: Sequence[NodeState]) -> Optional[NodeState]:
    """Lowest node id among configured neighbours, or None."""
    configured = [n for n in neighbors if n.configured]
    if not configured:
        return None
    return min(configured, key=lambda n: n.node_id)


def _send_request(node: NodeState, neighbors: Sequence[NodeState]) -> ProtocolMessage:
    attempt = node.retry.arm()
    proxy = select_neighbor(neighbors)
    if proxy is None:
        raise NoConfiguredNeighbor(f"node {node.node_id}: no configured neighbour (attempt {attempt})")

    assert node.join_id is not None
    request = ProtocolMessage(
        kind=MessageKind.ADDR_REQUEST,
        source=node.node_id,
        destination=proxy.node_id,
        join_id=node.join_id,
        requester=node.node_id,
        attempt=attempt,
        trail=(node.node_id,),
        route=(proxy.node_id,),
    )
    node.pending.append(request)
    return request


def on_join(node: NodeState, neighbors: Sequence[NodeState], join_id: int) -> ProtocolMessage:
    """
    Start acquiring an address.

    Sends one AddrRequest to the configured neighbour with the lowest node id
    and arms the retry timer.

    Raises:
        InvalidTransition: the node is already configured
        NoConfiguredNeighbor: no neighbour can serve yet; the retry timer is
            armed anyway
    """
    if node.configured:
        raise InvalidTransition(f"node {node.node_id} is already configured")
    node.join_id = join_id
    node.failed = False
    return _send_request(node, neighbors)


def on_retry_timer(
    node: NodeState,
    neighbors: Sequence[NodeState],
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
) -> Optional[ProtocolMessage]:
    """
    Handle an expired retry timer.

    Re-sends the request while attempts remain; after the last attempt the
    node is marked failed. Returns None when nothing is sent.

    Raises:
        NoConfiguredNeighbor: as for on_join
    """
    if node.configured or node.failed or not node.retry.armed:
        return None
    if node.retry.attempts >= max_attempts:
        node.retry.cancel()
        node.failed = True
        logger.warning(f"node {node.node_id}: giving up after {node.retry.attempts} attempts")
        return None
    return _send_request(node, neighbors)


def _serve(node: NodeState, msg: ProtocolMessage, radix: int) -> ProtocolMessage:
    if not node.configured or node.address is None or node.alloc is None:
        raise InvalidTransition(f"node {node.node_id} cannot serve while unconfigured")

    trail = msg.trail + (node.node_id,)
    back = tuple(reversed(trail[:-1]))
    try:
        assigned, node.alloc = generate_address(node.address, node.alloc, radix)
    except PoolExhausted:
        if is_controller(node.address.identifier):
            logger.warning(f"controller {node.node_id}: domain exhausted, denying {msg.requester}")
            return ProtocolMessage(
                kind=MessageKind.ADDR_DENY,
                source=node.node_id,
                destination=msg.requester,
                join_id=msg.join_id,
                requester=msg.requester,
                attempt=msg.attempt,
                trail=trail,
                route=back,
            )
        assert node.parent is not None
        return ProtocolMessage(
            kind=MessageKind.ESCALATE_REQUEST,
            source=node.node_id,
            destination=node.parent,
            join_id=msg.join_id,
            requester=msg.requester,
            attempt=msg.attempt,
            trail=trail,
            route=(node.parent,),
        )

    return ProtocolMessage(
        kind=MessageKind.ADDR_REPLY,
        source=node.node_id,
        destination=msg.requester,
        join_id=msg.join_id,
        requester=msg.requester,
        attempt=msg.attempt,
        assigned=assigned,
        issuer=node.node_id,
        trail=trail,
        route=back,
    )


def on_addr_request(node: NodeState, msg: ProtocolMessage, radix: int = OCTET_MAX) -> ProtocolMessage:
    """
    Serve an AddrRequest as a proxy.

    Returns an AddrReply carrying a fresh child address, an EscalateRequest to
    the tree parent when this node is exhausted, or an AddrDeny when this node
    is an exhausted controller.
    """
    if msg.kind is not MessageKind.ADDR_REQUEST:
        raise InvalidTransition(f"expected addr_request, got {msg.kind.value}")
    return _serve(node, msg, radix)


def on_escalate(node: NodeState, msg: ProtocolMessage, radix: int = OCTET_MAX) -> ProtocolMessage:
    """
    Serve a request escalated by an exhausted descendant.

    The reply retraces the escalation trail back to the original requester.
    """
    if msg.kind is not MessageKind.ESCALATE_REQUEST:
        raise InvalidTransition(f"expected escalate_request, got {msg.kind.value}")
    return _serve(node, msg, radix)


def _answers_pending(node: NodeState, msg: ProtocolMessage) -> bool:
    return any(p.join_id == msg.join_id and p.attempt == msg.attempt for p in node.pending)


def on_addr_reply(node: NodeState, msg: ProtocolMessage) -> bool:
    """
    Accept an assigned address.

    Returns True if the node configured itself. Replies arriving after the
    node is configured or gave up, or answering none of its pending
    requests, are discarded; the address they carry is never used.
    """
    if msg.kind is not MessageKind.ADDR_REPLY:
        raise InvalidTransition(f"expected addr_reply, got {msg.kind.value}")
    if node.configured or node.failed:
        logger.debug(f"node {node.node_id}: ignoring late reply {msg.assigned}")
        return False
    if not _answers_pending(node, msg):
        logger.debug(f"node {node.node_id}: reply to join {msg.join_id} attempt {msg.attempt} was never requested")
        return False
    assert msg.assigned is not None
    node.configure(msg.assigned, parent=msg.issuer)
    return True


def on_addr_deny(node: NodeState, msg: ProtocolMessage) -> bool:
    """Record a denial; returns True if it ended the node's join."""
    if msg.kind is not MessageKind.ADDR_DENY:
        raise InvalidTransition(f"expected addr_deny, got {msg.kind.value}")
    if node.configured or node.failed:
        return False
    if not _answers_pending(node, msg):
        logger.debug(f"node {node.node_id}: deny for join {msg.join_id} attempt {msg.attempt} was never requested")
        return False
    node.retry.cancel()
    node.failed = True
    node.pending.clear()
    return True
