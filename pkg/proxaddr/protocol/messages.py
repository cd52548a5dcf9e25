"""
Protocol messages exchanged by the allocation schemes.

One message type covers the proposed scheme (request, reply, deny,
escalation) and the baselines (DAP/ACN for DAD, discover/reply/deny for
DHCP). Messages are immutable; the transport copies them hop by hop.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

from proxaddr.core.address import DeviceIdentifier, Ipv6Address
from proxaddr.core.allocation import check_assigned


class MessageKind(str, Enum):
    """Wire-level message types."""
    ADDR_REQUEST = "addr_request"
    ADDR_REPLY = "addr_reply"
    ADDR_DENY = "addr_deny"
    ESCALATE_REQUEST = "escalate_request"
    DAP = "dap"  # Duplicate Address Probe, flooded
    ACN = "acn"  # Address Conflict Notice, unicast
    DHCP_DISCOVER = "dhcp_discover"  # flooded
    DHCP_REPLY = "dhcp_reply"
    DHCP_DENY = "dhcp_deny"


# Kinds that are sent with a network-wide flood primitive
FLOOD_KINDS = frozenset({MessageKind.DAP, MessageKind.DHCP_DISCOVER})


@dataclass(frozen=True, slots=True)
class ProtocolMessage:
    """
    A single protocol message.

    Attributes:
        kind: message type
        source: node that created the message
        destination: final recipient (None for floods)
        join_id: join this message belongs to; every transmission is
            charged to it
        requester: the joining node the exchange is on behalf of
        attempt: requester's attempt number when the exchange started
        assigned: address carried by ADDR_REPLY / DHCP_REPLY
        tentative: identifier probed by DAP / reported by ACN
        issuer: node that generated `assigned` (becomes the grantee's parent)
        trail: nodes an allocation request has traversed, requester first
        route: hops still to travel after `source`, ending at `destination`
    """
    kind: MessageKind
    source: int
    destination: Optional[int]
    join_id: int
    requester: int
    attempt: int = 1
    assigned: Optional[Ipv6Address] = None
    tentative: Optional[DeviceIdentifier] = None
    issuer: Optional[int] = None
    trail: Tuple[int, ...] = ()
    route: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.kind is MessageKind.ADDR_REPLY:
            if self.assigned is None or self.issuer is None:
                raise ValueError("ADDR_REPLY needs an assigned address and its issuer")
            check_assigned(self.assigned.identifier)
        if self.kind is MessageKind.DHCP_REPLY and self.assigned is None:
            raise ValueError("DHCP_REPLY needs an assigned address")
        if self.kind in (MessageKind.DAP, MessageKind.ACN) and self.tentative is None:
            raise ValueError(f"{self.kind.value} needs a tentative identifier")
        if self.is_flood and self.destination is not None:
            raise ValueError(f"{self.kind.value} is flooded and has no destination")
        if self.route and self.route[-1] != self.destination:
            raise ValueError("route must end at the destination")

    @property
    def is_flood(self) -> bool:
        return self.kind in FLOOD_KINDS
