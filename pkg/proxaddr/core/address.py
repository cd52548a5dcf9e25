"""
IPv6 address data model for proxy-based allocation.

An address is a fixed 8-octet network prefix (b15..b8) followed by an 8-octet
device identifier (b7..b0). The identifier encodes the device's position in
the allocation tree, so this module only deals with values and text formats;
the allocation rules live in `proxaddr.core.allocation`.

Text formats:
- canonical hex: eight colon-separated groups, lowercase, leading zeros
  dropped, the longest run of zero groups (leftmost on ties) written as "::"
- dotted decimal: 16 period-separated octets (8 for a bare identifier)
"""

import logging
import re
from dataclasses import dataclass
from typing import Optional, Tuple, Union

logger = logging.getLogger(__name__)

# Largest value an identifier octet may take. Tests pass a smaller radix to
# the allocation functions to enumerate the whole tree.
OCTET_MAX = 255

IDENTIFIER_OCTETS = 8
PREFIX_OCTETS = 8

_HEX_GROUP = re.compile(r"[0-9a-fA-F]{1,4}")
_DEC_OCTET = re.compile(r"[0-9]{1,3}")


class AddressError(ValueError):
    """Base class for address model errors."""


class MalformedAddress(AddressError):
    """Raised when address text or octets cannot be parsed."""


class InvalidIdentifier(AddressError):
    """Raised when an identifier violates the allocation-tree invariants."""


def _check_octets(octets: Tuple[int, ...], expected: int, what: str) -> Tuple[int, ...]:
    values = tuple(octets)
    if len(values) != expected:
        raise MalformedAddress(f"{what} needs {expected} octets, got {len(values)}")
    for value in values:
        if not isinstance(value, int) or isinstance(value, bool) or not 0 <= value <= 255:
            raise MalformedAddress(f"{what} octet out of range: {value!r}")
    return values


@dataclass(frozen=True, slots=True)
class NetworkPrefix:
    """Upper 8 octets of an address, fixed for a network domain."""

    octets: Tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "octets", _check_octets(self.octets, PREFIX_OCTETS, "prefix"))

    def __str__(self) -> str:
        return ":".join(
            f"{(self.octets[i] << 8) | self.octets[i + 1]:04X}" for i in range(0, PREFIX_OCTETS, 2)
        )


@dataclass(frozen=True, slots=True, order=True)
class DeviceIdentifier:
    """
    Lower 8 octets of an address.

    `octets` is stored most significant first, i.e. (b7, b6, ..., b0).
    Use `octet(k)` to read b_k by its index.
    """

    octets: Tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "octets", _check_octets(self.octets, IDENTIFIER_OCTETS, "identifier")
        )

    def octet(self, index: int) -> int:
        """Return b_index (0 = least significant)."""
        return self.octets[IDENTIFIER_OCTETS - 1 - index]

    def with_octet(self, index: int, value: int) -> "DeviceIdentifier":
        """Copy of this identifier with b_index replaced."""
        octets = list(self.octets)
        octets[IDENTIFIER_OCTETS - 1 - index] = value
        return DeviceIdentifier(tuple(octets))

    @property
    def b0(self) -> int:
        return self.octets[-1]

    def to_int(self) -> int:
        return int.from_bytes(bytes(self.octets), "big")

    @classmethod
    def from_int(cls, value: int) -> "DeviceIdentifier":
        if not 0 <= value < 1 << 64:
            raise MalformedAddress(f"identifier integer out of range: {value}")
        return cls(tuple(value.to_bytes(IDENTIFIER_OCTETS, "big")))

    @classmethod
    def controller(cls) -> "DeviceIdentifier":
        """Identifier held by the local controller: 0.0.0.0.0.0.0.1."""
        return cls((0, 0, 0, 0, 0, 0, 0, 1))

    @classmethod
    def reserved(cls, radix: int = OCTET_MAX) -> "DeviceIdentifier":
        """The all-radix identifier, never handed out."""
        return cls((radix,) * IDENTIFIER_OCTETS)

    def __str__(self) -> str:
        return ".".join(str(o) for o in self.octets)


@dataclass(frozen=True, slots=True)
class Ipv6Address:
    """Network prefix plus device identifier; the unit of allocation."""

    prefix: NetworkPrefix
    identifier: DeviceIdentifier

    @property
    def octets(self) -> Tuple[int, ...]:
        return self.prefix.octets + self.identifier.octets

    def with_identifier(self, identifier: DeviceIdentifier) -> "Ipv6Address":
        return Ipv6Address(self.prefix, identifier)

    def to_bytes(self) -> bytes:
        return bytes(self.octets)

    @classmethod
    def from_bytes(cls, raw: bytes) -> "Ipv6Address":
        if len(raw) != 16:
            raise MalformedAddress(f"address needs 16 bytes, got {len(raw)}")
        return cls(NetworkPrefix(tuple(raw[:8])), DeviceIdentifier(tuple(raw[8:])))

    def __str__(self) -> str:
        return format_hex(self)


# Example domain prefix used throughout the docs and as the scenario default.
DEFAULT_PREFIX = NetworkPrefix((0xCE, 0xDF, 0x0C, 0xB8, 0x8B, 0xA3, 0x8A, 0x2E))


# ============================================================================
# CANONICAL HEX
# ============================================================================


def _groups(addr: Ipv6Address) -> Tuple[int, ...]:
    octets = addr.octets
    return tuple((octets[i] << 8) | octets[i + 1] for i in range(0, 16, 2))


def format_hex(addr: Ipv6Address) -> str:
    """
    Render an address in canonical hex form.

    The single longest run of all-zero groups (even a run of one) collapses to
    "::"; on ties the leftmost run wins.

    Example:
        2031:0000:130f:0000:0000:09c0:876a:130b -> "2031:0:130f::9c0:876a:130b"
    """
    groups = _groups(addr)

    best_start, best_len = -1, 0
    run_start, run_len = -1, 0
    for index, group in enumerate(groups):
        if group == 0:
            if run_len == 0:
                run_start = index
            run_len += 1
            if run_len > best_len:
                best_start, best_len = run_start, run_len
        else:
            run_len = 0

    text = [format(g, "x") for g in groups]
    if best_len == 0:
        return ":".join(text)
    head = ":".join(text[:best_start])
    tail = ":".join(text[best_start + best_len:])
    return f"{head}::{tail}"


def _parse_groups(parts: list, text: str) -> list:
    values = []
    for part in parts:
        if not _HEX_GROUP.fullmatch(part):
            raise MalformedAddress(f"bad hex group {part!r} in {text!r}")
        values.append(int(part, 16))
    return values


def parse_hex(text: str) -> Ipv6Address:
    """
    Parse full or "::"-compressed hex text (case-insensitive).

    Raises:
        MalformedAddress: more than one "::", wrong group count, non-hex digit
            or a group longer than four digits
    """
    if not isinstance(text, str) or not text:
        raise MalformedAddress("empty address text")

    if text.count("::") > 1:
        raise MalformedAddress(f"'::' may appear only once: {text!r}")

    if "::" in text:
        head_text, tail_text = text.split("::", 1)
        if head_text.endswith(":") or tail_text.startswith(":"):
            raise MalformedAddress(f"stray colon in {text!r}")
        head = _parse_groups(head_text.split(":"), text) if head_text else []
        tail = _parse_groups(tail_text.split(":"), text) if tail_text else []
        if len(head) + len(tail) > 7:
            raise MalformedAddress(f"too many groups for '::' in {text!r}")
        groups = head + [0] * (8 - len(head) - len(tail)) + tail
    else:
        groups = _parse_groups(text.split(":"), text)
        if len(groups) != 8:
            raise MalformedAddress(f"expected 8 groups, got {len(groups)} in {text!r}")

    raw = b"".join(g.to_bytes(2, "big") for g in groups)
    return Ipv6Address.from_bytes(raw)


def parse_prefix(text: str) -> NetworkPrefix:
    """
    Parse a domain prefix: four hex groups ("CEDF:0CB8:8BA3:8A2E") or eight
    dotted-decimal octets.
    """
    if not isinstance(text, str) or not text:
        raise MalformedAddress("empty prefix text")
    if "." in text:
        return NetworkPrefix(_parse_dotted(text, PREFIX_OCTETS))
    parts = text.split(":")
    if len(parts) != 4:
        raise MalformedAddress(f"prefix needs 4 hex groups, got {len(parts)} in {text!r}")
    groups = _parse_groups(parts, text)
    return NetworkPrefix(tuple(b for g in groups for b in g.to_bytes(2, "big")))


# ============================================================================
# DOTTED DECIMAL
# ============================================================================


def to_dotted_decimal(value: Union[Ipv6Address, DeviceIdentifier]) -> str:
    """16 dotted octets for an address, 8 for a bare identifier."""
    return ".".join(str(o) for o in value.octets)


def _parse_dotted(text: str, expected: int) -> Tuple[int, ...]:
    parts = text.split(".")
    if len(parts) != expected:
        raise MalformedAddress(f"expected {expected} octets, got {len(parts)} in {text!r}")
    octets = []
    for part in parts:
        if not _DEC_OCTET.fullmatch(part) or int(part) > 255:
            raise MalformedAddress(f"bad decimal octet {part!r} in {text!r}")
        octets.append(int(part))
    return tuple(octets)


def parse_identifier(text: str) -> DeviceIdentifier:
    """Parse an 8-octet dotted-decimal identifier such as "0.0.0.0.0.0.0.1"."""
    return DeviceIdentifier(_parse_dotted(text, IDENTIFIER_OCTETS))


def from_dotted_decimal(prefix: Optional[NetworkPrefix], text: str) -> Ipv6Address:
    """
    Parse dotted-decimal text into an address.

    With 8 octets the text is a bare identifier placed under `prefix`. With 16
    octets the text carries its own prefix, which must match `prefix` when one
    is given.
    """
    if not isinstance(text, str) or not text:
        raise MalformedAddress("empty address text")
    count = text.count(".") + 1
    if count == IDENTIFIER_OCTETS:
        if prefix is None:
            raise MalformedAddress("a bare identifier needs a prefix")
        return Ipv6Address(prefix, parse_identifier(text))
    octets = _parse_dotted(text, 16)
    address = Ipv6Address(NetworkPrefix(octets[:8]), DeviceIdentifier(octets[8:]))
    if prefix is not None and address.prefix != prefix:
        raise MalformedAddress(f"prefix mismatch: {address.prefix} != {prefix}")
    return address
