"""
Address generation for the proxy allocation tree.

Every configured device derives child identifiers from its own identifier:

- the local controller (0.0.0.0.0.0.0.1) first issues j.0.0.0.0.0.0.1 for
  j = 1..255, then 0.0.0.0.0.0.0.i for i = 2..255
- every other device sets its fill octet, the highest-index zero octet among
  b7..b1 whose higher octets are all nonzero, to count + 1

A device whose b7..b1 are all nonzero is a leaf and can only escalate. The
all-255 identifier is reserved: the index that would produce it is skipped.

Functions here are pure: they take an immutable AllocationState and return
the next one. Callers serialise updates per node.
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional, Tuple

from proxaddr.core.address import (
    IDENTIFIER_OCTETS,
    OCTET_MAX,
    DeviceIdentifier,
    InvalidIdentifier,
    Ipv6Address,
)

logger = logging.getLogger(__name__)

CONTROLLER_ID = DeviceIdentifier.controller()


class AllocationError(Exception):
    """Base class for allocation failures."""


class PoolExhausted(AllocationError):
    """The node has no identifier left to issue; the caller should escalate."""


@dataclass(frozen=True, slots=True)
class AllocationState:
    """
    Per-node allocation status.

    Attributes:
        count: last child index issued on the node's fill octet (0 = none yet)
        count1: controller only, last b0-subtree index issued (starts at 1,
            the controller's own b0)
    """

    count: int = 0
    count1: int = 1

    def __post_init__(self) -> None:
        if not 0 <= self.count <= OCTET_MAX:
            raise ValueError(f"count out of range: {self.count}")
        if not 1 <= self.count1 <= OCTET_MAX:
            raise ValueError(f"count1 out of range: {self.count1}")


def is_controller(identifier: DeviceIdentifier) -> bool:
    return identifier == CONTROLLER_ID


def fill_position(identifier: DeviceIdentifier) -> Optional[int]:
    """
    Index k of the octet this node sets when generating a child.

    Returns None for a leaf (b7..b1 all nonzero). Never returns 0.
    """
    for k in range(IDENTIFIER_OCTETS - 1, 0, -1):
        if identifier.octet(k) == 0:
            return k
    return None


def _run_length(identifier: DeviceIdentifier) -> int:
    """Number of leading nonzero octets in b7..b1."""
    length = 0
    for k in range(IDENTIFIER_OCTETS - 1, 0, -1):
        if identifier.octet(k) == 0:
            break
        length += 1
    return length


def check_assigned(identifier: DeviceIdentifier, radix: int = OCTET_MAX) -> DeviceIdentifier:
    """
    Validate that `identifier` can be held by a device in the tree.

    Checks b0 >= 1, octets <= radix, contiguous fill of b7..b1 and that the
    identifier is not the reserved all-radix value.

    Raises:
        InvalidIdentifier: on any violation
    """
    if any(o > radix for o in identifier.octets):
        raise InvalidIdentifier(f"{identifier}: octet above radix {radix}")
    if identifier.b0 < 1:
        raise InvalidIdentifier(f"{identifier}: b0 must be at least 1")
    run = _run_length(identifier)
    if any(identifier.octet(k) != 0 for k in range(IDENTIFIER_OCTETS - 1 - run, 0, -1)):
        raise InvalidIdentifier(f"{identifier}: nonzero octets of b7..b1 are not contiguous")
    if identifier == DeviceIdentifier.reserved(radix):
        raise InvalidIdentifier(f"{identifier}: reserved identifier")
    return identifier


def _check_issuer(identifier: DeviceIdentifier, radix: int) -> None:
    # Contiguous fill is not required of an issuer: the branch rule is
    # defined for any identifier with b0 >= 1.
    if any(o > radix for o in identifier.octets):
        raise InvalidIdentifier(f"{identifier}: octet above radix {radix}")
    if identifier.b0 < 1:
        raise InvalidIdentifier(f"{identifier}: b0 must be at least 1")
    if identifier == DeviceIdentifier.reserved(radix):
        raise InvalidIdentifier(f"{identifier}: reserved identifier cannot issue")


def generate_address(
    address: Ipv6Address,
    state: AllocationState,
    radix: int = OCTET_MAX,
) -> Tuple[Ipv6Address, AllocationState]:
    """
    Issue the next child address of `address`.

    Args:
        address: the issuing node's own address
        state: the issuing node's allocation status
        radix: largest octet value (255 outside of exhaustive tests)

    Returns:
        (child address, updated state)

    Raises:
        PoolExhausted: the node is a leaf or has issued every index
        InvalidIdentifier: `address` cannot be an issuer

    Example:
        >>> ctrl = Ipv6Address(DEFAULT_PREFIX, DeviceIdentifier.controller())
        >>> child, state = generate_address(ctrl, AllocationState())
        >>> str(child.identifier)
        '1.0.0.0.0.0.0.1'
    """
    identifier = address.identifier
    _check_issuer(identifier, radix)

    if is_controller(identifier):
        if state.count < radix:
            j = state.count + 1
            return address.with_identifier(identifier.with_octet(7, j)), replace(state, count=j)
        if state.count1 < radix:
            i = state.count1 + 1
            return address.with_identifier(identifier.with_octet(0, i)), replace(state, count1=i)
        raise PoolExhausted(f"controller pool exhausted ({identifier})")

    k = fill_position(identifier)
    if k is None:
        raise PoolExhausted(f"{identifier} is a leaf")

    reserved = DeviceIdentifier.reserved(radix)
    for j in range(state.count + 1, radix + 1):
        child = identifier.with_octet(k, j)
        if child == reserved:
            continue
        return address.with_identifier(child), replace(state, count=j)
    raise PoolExhausted(f"{identifier} issued all {radix} indices on b{k}")


def remaining_capacity(
    address: Ipv6Address,
    state: AllocationState,
    radix: int = OCTET_MAX,
) -> int:
    """Number of further successful generate_address calls for this node."""
    identifier = address.identifier
    if is_controller(identifier):
        return (radix - state.count) + (radix - state.count1)

    k = fill_position(identifier)
    if k is None:
        return 0
    remaining = radix - state.count
    # The reserved identifier can only come from the last index.
    if remaining > 0 and identifier.with_octet(k, radix) == DeviceIdentifier.reserved(radix):
        remaining -= 1
    return max(remaining, 0)


def parent_of(identifier: DeviceIdentifier, radix: int = OCTET_MAX) -> Optional[DeviceIdentifier]:
    """
    Identifier of the node that issued `identifier`.

    Returns None for the controller, which is the root of the tree.

    Raises:
        InvalidIdentifier: `identifier` violates the tree invariants

    Example:
        3.7.0.0.0.0.0.2 -> 3.0.0.0.0.0.0.2
        0.0.0.0.0.0.0.9 -> 0.0.0.0.0.0.0.1
    """
    check_assigned(identifier, radix)
    if is_controller(identifier):
        return None
    run = _run_length(identifier)
    if run == 0:
        return CONTROLLER_ID
    return identifier.with_octet(IDENTIFIER_OCTETS - run, 0)


def depth(identifier: DeviceIdentifier, radix: int = OCTET_MAX) -> int:
    """Number of parent_of steps from `identifier` up to the controller."""
    check_assigned(identifier, radix)
    if is_controller(identifier):
        return 0
    run = _run_length(identifier)
    return run if identifier.b0 == 1 else run + 1
