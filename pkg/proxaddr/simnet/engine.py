"""
Discrete-event core: the event queue and the message transport.

Time is an integer count of the 1-hop latency t. Events at the same time are
ordered by phase (deliveries, then timers, then new joins) and then by
insertion sequence, so a run is fully determined by its seed.
"""

import heapq
import logging
import random
from dataclasses import dataclass
from enum import Enum, IntEnum
from collections import Counter
from typing import Dict, List, Optional, Set, Tuple

from proxaddr.protocol.messages import MessageKind, ProtocolMessage
from proxaddr.simnet.metrics import MetricsCollector
from proxaddr.simnet.topology import SimulationError, Topology

logger = logging.getLogger(__name__)


class NonQuiescent(SimulationError):
    """The event budget ran out before the network went quiet."""


class EventPhase(IntEnum):
    """Tie-break order for events scheduled at the same instant."""
    DELIVER = 0
    TIMER = 1
    JOIN = 2


class EventKind(str, Enum):
    DELIVER = "deliver"
    TIMER = "timer"
    JOIN = "join"


@dataclass(frozen=True, slots=True)
class SimEvent:
    """
    A scheduled event.

    Attributes:
        time: simulated time, in units of t
        kind: deliver | timer | join
        node: node the event happens at
        sequence: insertion order, the final tie-breaker
        message: message being delivered (deliver only)
        sender: previous hop of a delivered message
        hop: index into `message.route` of `node` (unicast deliveries)
        token: timer identity (timer only)
    """
    time: int
    kind: EventKind
    node: int
    sequence: int
    message: Optional[ProtocolMessage] = None
    sender: Optional[int] = None
    hop: int = 0
    token: int = 0


_PHASES = {
    EventKind.DELIVER: EventPhase.DELIVER,
    EventKind.TIMER: EventPhase.TIMER,
    EventKind.JOIN: EventPhase.JOIN,
}


class EventScheduler:
    """Priority queue of SimEvents with an event budget."""

    def __init__(self, max_events: int):
        self.max_events = max_events
        self.now = 0
        self.processed = 0
        self._sequence = 0
        self._heap: List[Tuple[int, int, int, SimEvent]] = []

    def __len__(self) -> int:
        return len(self._heap)

    def schedule(
        self,
        time: int,
        kind: EventKind,
        node: int,
        *,
        message: Optional[ProtocolMessage] = None,
        sender: Optional[int] = None,
        hop: int = 0,
        token: int = 0,
    ) -> SimEvent:
        if time < self.now:
            raise ValueError(f"cannot schedule at {time}, clock is at {self.now}")
        self._sequence += 1
        event = SimEvent(time, kind, node, self._sequence, message, sender, hop, token)
        heapq.heappush(self._heap, (time, _PHASES[kind], self._sequence, event))
        return event

    def pop(self) -> SimEvent:
        """
        Next event; advances the clock.

        Raises:
            NonQuiescent: more than `max_events` events were processed
        """
        if self.processed >= self.max_events:
            raise NonQuiescent(
                f"event budget of {self.max_events} exhausted at t={self.now} "
                f"with {len(self._heap)} events pending"
            )
        time, _, _, event = heapq.heappop(self._heap)
        self.now = time
        self.processed += 1
        return event


class Network:
    """
    Message transport over a topology.

    Every transmission over one link costs one message and one hop latency
    (1 plus an optional uniform integer jitter), and is lost independently
    with probability `loss_rate`. Unicasts follow `message.route` hop by hop;
    a hop between nodes that share no link (an allocation-tree edge used by
    escalation) is carried as one logical link. Floods are forwarded by every
    node on first receipt to all neighbours except the one it came from;
    later copies are counted and dropped.
    """

    def __init__(
        self,
        topology: Topology,
        scheduler: EventScheduler,
        metrics: MetricsCollector,
        *,
        loss_rate: float = 0.0,
        jitter: int = 0,
        loss_rng: Optional[random.Random] = None,
        jitter_rng: Optional[random.Random] = None,
    ):
        if not 0.0 <= loss_rate <= 1.0:
            raise ValueError(f"loss_rate must be in [0, 1], got {loss_rate}")
        if jitter < 0:
            raise ValueError(f"jitter must be non-negative, got {jitter}")
        self.topology = topology
        self.scheduler = scheduler
        self.metrics = metrics
        self.loss_rate = loss_rate
        self.jitter = jitter
        self._loss_rng = loss_rng or random.Random(0)
        self._jitter_rng = jitter_rng or random.Random(1)
        # flood suppression keys per join, dropped once the join is released
        # and none of its copies are in flight
        self._seen: Dict[int, Set[Tuple[MessageKind, int, int, int, int]]] = {}
        self._in_flight: Counter[int] = Counter()
        self._released: Set[int] = set()

    def _latency(self) -> int:
        if self.jitter:
            return 1 + self._jitter_rng.randint(0, self.jitter)
        return 1

    def _transmit(self, sender: int, receiver: int, message: ProtocolMessage, hop: int = 0) -> None:
        self.metrics.on_transmit(message)
        if self.loss_rate and self._loss_rng.random() < self.loss_rate:
            self.metrics.on_lost(message)
            logger.debug(f"t={self.scheduler.now} lost {message.kind.value} {sender}->{receiver}")
            return
        self.scheduler.schedule(
            self.scheduler.now + self._latency(),
            EventKind.DELIVER,
            receiver,
            message=message,
            sender=sender,
            hop=hop,
        )
        if message.is_flood:
            self._in_flight[message.join_id] += 1

    @staticmethod
    def _flood_key(message: ProtocolMessage, node: int) -> Tuple[MessageKind, int, int, int, int]:
        return (message.kind, message.requester, message.join_id, message.attempt, node)

    def unicast(self, message: ProtocolMessage) -> None:
        """Send `message` from its source along its route."""
        if message.is_flood or not message.route:
            raise ValueError(f"{message.kind.value} needs a route for unicast")
        self._transmit(message.source, message.route[0], message, hop=0)

    def flood(self, message: ProtocolMessage) -> None:
        """Start a duplicate-suppressed flood from `message.source`."""
        if not message.is_flood:
            raise ValueError(f"{message.kind.value} is not a flooded message")
        origin = message.source
        self.metrics.on_flood(message)
        self._seen.setdefault(message.join_id, set()).add(self._flood_key(message, origin))
        for neighbor in self.topology.neighbors(origin):
            self._transmit(origin, neighbor, message)

    def arrive(self, event: SimEvent) -> Optional[ProtocolMessage]:
        """
        Process a delivery.

        Relays the message onward and returns it if `event.node` should
        handle it: the final hop of a unicast, or the first copy of a flood.
        """
        message = event.message
        assert message is not None
        self.metrics.on_delivered(message)
        node = event.node

        if message.is_flood:
            join_id = message.join_id
            self._in_flight[join_id] -= 1
            key = self._flood_key(message, node)
            seen = self._seen.setdefault(join_id, set())
            if key in seen:
                self._evict(join_id)
                return None
            seen.add(key)
            for neighbor in self.topology.neighbors(node):
                if neighbor != event.sender:
                    self._transmit(node, neighbor, message)
            self._evict(join_id)
            return message

        if event.hop + 1 < len(message.route):
            next_hop = event.hop + 1
            self._transmit(node, message.route[next_hop], message, hop=next_hop)
            return None
        return message

    def release(self, join_id: int) -> None:
        """Forget the flood state of a finished join once its copies drain."""
        self._released.add(join_id)
        self._evict(join_id)

    def _evict(self, join_id: int) -> None:
        if join_id not in self._released or self._in_flight[join_id] > 0:
            return
        self._seen.pop(join_id, None)
        del self._in_flight[join_id]
        self._released.discard(join_id)

    @property
    def tracked_joins(self) -> int:
        """Joins whose flood suppression state is still held."""
        return len(self._seen)
