"""Address model and the proxy allocation algorithm (pure, no I/O)."""

from .address import (
    DEFAULT_PREFIX,
    OCTET_MAX,
    AddressError,
    DeviceIdentifier,
    InvalidIdentifier,
    Ipv6Address,
    MalformedAddress,
    NetworkPrefix,
    format_hex,
    from_dotted_decimal,
    parse_hex,
    parse_identifier,
    parse_prefix,
    to_dotted_decimal,
)
from .allocation import (
    CONTROLLER_ID,
    AllocationError,
    AllocationState,
    PoolExhausted,
    check_assigned,
    depth,
    fill_position,
    generate_address,
    is_controller,
    parent_of,
    remaining_capacity,
)

__all__ = [
    "DEFAULT_PREFIX",
    "OCTET_MAX",
    "AddressError",
    "DeviceIdentifier",
    "InvalidIdentifier",
    "Ipv6Address",
    "MalformedAddress",
    "NetworkPrefix",
    "format_hex",
    "from_dotted_decimal",
    "parse_hex",
    "parse_identifier",
    "parse_prefix",
    "to_dotted_decimal",
    "CONTROLLER_ID",
    "AllocationError",
    "AllocationState",
    "PoolExhausted",
    "check_assigned",
    "depth",
    "fill_position",
    "generate_address",
    "is_controller",
    "parent_of",
    "remaining_capacity",
]
