"""
Duplicate Address Detection (DAD) baseline.

A joining node picks a random tentative identifier, floods a Duplicate
Address Probe (DAP) and waits 2*t*d. A configured node holding the probed
identifier answers with a unicast Address Conflict Notice (ACN); the joiner
then starts over with a fresh identifier. If the timer expires without an
ACN, the joiner takes the tentative identifier. A lost probe or notice
therefore lets a duplicate through.
"""

import logging
import random
from dataclasses import dataclass
from typing import Optional, Tuple

from proxaddr.core.address import DeviceIdentifier, NetworkPrefix, Ipv6Address
from proxaddr.protocol.messages import MessageKind, ProtocolMessage
from proxaddr.protocol.state import InvalidTransition, NodeState

logger = logging.getLogger(__name__)

DEFAULT_MAX_RETRIES = 5
IDENTIFIER_BITS = 64


@dataclass(slots=True)
class DadState:
    """
    Per-joiner DAD bookkeeping.

    Attributes:
        tentative: identifier being probed
        deadline: simulated time at which the node configures absent an ACN
        retries: fresh draws taken after conflicts
        token: identifies the armed timer; bumped on every restart
    """
    tentative: DeviceIdentifier
    deadline: int
    retries: int = 0
    token: int = 1


def dad_timeout(diameter: int, hop_latency: int = 1) -> int:
    """Probe timer: a round trip across the network diameter, 2*t*d."""
    return 2 * hop_latency * diameter


def draw_tentative(rng: random.Random, bits: int = IDENTIFIER_BITS) -> DeviceIdentifier:
    """
    Uniform random identifier from the lowest `bits` bits of the space.

    Zero and the reserved all-255 identifier are redrawn.
    """
    if not 1 <= bits <= IDENTIFIER_BITS:
        raise ValueError(f"bits must be in 1..{IDENTIFIER_BITS}, got {bits}")
    reserved = DeviceIdentifier.reserved().to_int()
    while True:
        value = rng.getrandbits(bits)
        if value != 0 and value != reserved:
            return DeviceIdentifier.from_int(value)


def _probe(node: NodeState, state: DadState) -> ProtocolMessage:
    assert node.join_id is not None
    return ProtocolMessage(
        kind=MessageKind.DAP,
        source=node.node_id,
        destination=None,
        join_id=node.join_id,
        requester=node.node_id,
        attempt=state.retries + 1,
        tentative=state.tentative,
    )


def dad_join(
    node: NodeState,
    join_id: int,
    rng: random.Random,
    *,
    now: int,
    diameter: int,
    bits: int = IDENTIFIER_BITS,
    hop_latency: int = 1,
) -> Tuple[DadState, ProtocolMessage]:
    """
    Start DAD for an unconfigured node.

    Returns the node's DAD state and the DAP to flood. The caller arms a
    timer for `state.deadline`.
    """
    if node.configured:
        raise InvalidTransition(f"node {node.node_id} is already configured")
    node.join_id = join_id
    node.failed = False
    state = DadState(
        tentative=draw_tentative(rng, bits),
        deadline=now + dad_timeout(diameter, hop_latency),
    )
    return state, _probe(node, state)


def dad_on_probe(node: NodeState, dap: ProtocolMessage) -> Optional[ProtocolMessage]:
    """
    React to the first copy of a DAP reaching `node`.

    Returns an ACN addressed to the prober iff `node` already holds the probed
    identifier. Forwarding is the flood's business and happens regardless.
    """
    if dap.kind is not MessageKind.DAP:
        raise InvalidTransition(f"expected dap, got {dap.kind.value}")
    if not node.configured or node.address is None or node.node_id == dap.requester:
        return None
    if node.address.identifier != dap.tentative:
        return None
    logger.debug(f"node {node.node_id}: conflict on {dap.tentative}, notifying {dap.requester}")
    return ProtocolMessage(
        kind=MessageKind.ACN,
        source=node.node_id,
        destination=dap.requester,
        join_id=dap.join_id,
        requester=dap.requester,
        attempt=dap.attempt,
        tentative=dap.tentative,
    )


def dad_on_acn(
    node: NodeState,
    state: DadState,
    acn: ProtocolMessage,
    rng: random.Random,
    *,
    now: int,
    diameter: int,
    bits: int = IDENTIFIER_BITS,
    max_retries: int = DEFAULT_MAX_RETRIES,
    hop_latency: int = 1,
) -> Optional[ProtocolMessage]:
    """
    Abandon a conflicting tentative identifier.

    Draws a fresh identifier and returns the new DAP to flood, updating
    `state` in place (new deadline and token). Returns None if the ACN is
    stale or if the retry cap is reached, in which case the node is marked
    failed.
    """
    if acn.kind is not MessageKind.ACN:
        raise InvalidTransition(f"expected acn, got {acn.kind.value}")
    if node.configured or node.failed:
        return None
    if acn.tentative != state.tentative or acn.attempt != state.retries + 1:
        return None
    if state.retries >= max_retries:
        node.failed = True
        logger.warning(f"node {node.node_id}: DAD failed after {state.retries} retries")
        return None

    state.retries += 1
    state.token += 1
    state.tentative = draw_tentative(rng, bits)
    state.deadline = now + dad_timeout(diameter, hop_latency)
    return _probe(node, state)


def dad_on_timer(node: NodeState, state: DadState, prefix: NetworkPrefix, token: int) -> bool:
    """
    Handle the probe timer. Returns True if the node configured itself.

    No ACN arrived in time, so the tentative identifier is taken as free.
    """
    if node.configured or node.failed or token != state.token:
        return False
    node.configure(Ipv6Address(prefix, state.tentative), parent=None)
    return True
