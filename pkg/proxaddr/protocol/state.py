"""
Node state for the allocation protocols.

Each simulated device owns one NodeState. The proposed scheme's state
machines (proxaddr.protocol.proxy) and the baselines mutate it in response
to events; the simulator only reads it.
"""

from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Deque, Optional

from proxaddr.core.address import DeviceIdentifier, Ipv6Address, NetworkPrefix
from proxaddr.core.allocation import AllocationState
from proxaddr.protocol.messages import ProtocolMessage


class NodeRole(str, Enum):
    """Roles a device can hold."""
    GLOBAL_CONTROLLER = "global_controller"
    LOCAL_CONTROLLER = "local_controller"
    CONFIGURED_DEVICE = "configured_device"
    UNCONFIGURED = "unconfigured"


class ProtocolError(Exception):
    """Base class for protocol state machine errors."""


class NoConfiguredNeighbor(ProtocolError):
    """A joining node has no configured neighbour to ask; it retries later."""


class InvalidTransition(ProtocolError):
    """An event arrived that the node's role cannot handle."""


# Retry defaults (units of the 1-hop latency t)
DEFAULT_RETRY_TIMEOUT = 4
DEFAULT_MAX_ATTEMPTS = 5


@dataclass(slots=True)
class RetryState:
    """
    Retry timer bookkeeping for a joining node.

    `token` changes every time the timer is re-armed so the simulator can
    discard timers that were superseded.
    """
    attempts: int = 0
    armed: bool = False
    token: int = 0

    def arm(self) -> int:
        self.attempts += 1
        self.token += 1
        self.armed = True
        return self.token

    def cancel(self) -> None:
        self.armed = False


@dataclass(slots=True)
class NodeState:
    """
    State of one device.

    Attributes:
        node_id: network location (topology vertex)
        role: current role
        address: assigned address (None while unconfigured)
        alloc: allocation status, present iff the node is configured
        parent: node that issued `address` (None for controllers)
        pending: requests sent in the current join; a reply or denial is
            accepted only if it answers one of them
        retry: retry timer bookkeeping
        join_id: join the node is currently performing
        failed: the node gave up (attempts exhausted or denied)
    """
    node_id: int
    role: NodeRole = NodeRole.UNCONFIGURED
    address: Optional[Ipv6Address] = None
    alloc: Optional[AllocationState] = None
    parent: Optional[int] = None
    pending: Deque[ProtocolMessage] = field(default_factory=deque)
    retry: RetryState = field(default_factory=RetryState)
    join_id: Optional[int] = None
    failed: bool = False

    def __post_init__(self) -> None:
        if self.role is NodeRole.UNCONFIGURED:
            if self.address is not None or self.alloc is not None:
                raise ValueError(f"node {self.node_id}: unconfigured node holds an address")
        elif self.address is None or self.alloc is None:
            raise ValueError(f"node {self.node_id}: {self.role.value} needs an address and alloc")

    @property
    def configured(self) -> bool:
        return self.role is not NodeRole.UNCONFIGURED

    def configure(self, address: Ipv6Address, parent: Optional[int]) -> None:
        """Take `address` and become a proxy for it."""
        self.role = NodeRole.CONFIGURED_DEVICE
        self.address = address
        self.alloc = AllocationState()
        self.parent = parent
        self.pending.clear()
        self.retry.cancel()

    @classmethod
    def global_controller(cls, node_id: int, address: Ipv6Address) -> "NodeState":
        return cls(
            node_id=node_id,
            role=NodeRole.GLOBAL_CONTROLLER,
            address=address,
            alloc=AllocationState(),
        )


def delegate_domain(global_node: NodeState, node_id: int, prefix: NetworkPrefix) -> NodeState:
    """
    Configure the local controller of a domain.

    The global controller hands the domain its prefix and the controller
    identifier 0.0.0.0.0.0.0.1; the result is the root of the domain's
    allocation tree.

    Raises:
        InvalidTransition: `global_node` is not a global controller
    """
    if global_node.role is not NodeRole.GLOBAL_CONTROLLER:
        raise InvalidTransition(f"node {global_node.node_id} cannot delegate a domain")
    return NodeState(
        node_id=node_id,
        role=NodeRole.LOCAL_CONTROLLER,
        address=Ipv6Address(prefix, DeviceIdentifier.controller()),
        alloc=AllocationState(),
        parent=None,
    )
