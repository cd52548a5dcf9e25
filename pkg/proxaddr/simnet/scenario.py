"""
Scenario execution: one scheme, one topology, one join schedule, one seed.
"""

import logging
import random
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Deque, Dict, List, Optional, Sequence, Type

import numpy as np

from proxaddr import settings
from proxaddr.baselines.dad import DEFAULT_MAX_RETRIES, IDENTIFIER_BITS
from proxaddr.baselines.dhcp import DEFAULT_POOL_SIZE
from proxaddr.core.address import DEFAULT_PREFIX, OCTET_MAX, DeviceIdentifier, Ipv6Address, NetworkPrefix
from proxaddr.protocol.state import (
    DEFAULT_MAX_ATTEMPTS,
    DEFAULT_RETRY_TIMEOUT,
    NodeState,
    delegate_domain,
)
from proxaddr.simnet.drivers import DadDriver, DhcpDriver, ProposedDriver, SchemeDriver
from proxaddr.simnet.engine import EventKind, EventScheduler, Network, SimEvent
from proxaddr.simnet.metrics import MetricsCollector, MetricsRecord
from proxaddr.simnet.topology import Topology

logger = logging.getLogger(__name__)

# The global controller sits outside the simulated domain
GLOBAL_CONTROLLER_NODE = -1


class Scheme(str, Enum):
    """Address allocation schemes the simulator can run."""
    PROPOSED = "proposed"
    DAD = "dad"
    DHCP = "dhcp"


_DRIVERS: Dict[Scheme, Type[SchemeDriver]] = {
    Scheme.PROPOSED: ProposedDriver,
    Scheme.DAD: DadDriver,
    Scheme.DHCP: DhcpDriver,
}

_STREAMS = ("loss", "jitter", "dad")


@dataclass(frozen=True)
class SimOptions:
    """
    Knobs of a simulation run beyond scheme, topology, schedule, loss and seed.

    Times are in units of the 1-hop latency t.
    """
    concurrency: int = 1
    jitter: int = 0
    retry_timeout: int = DEFAULT_RETRY_TIMEOUT
    max_attempts: int = DEFAULT_MAX_ATTEMPTS
    dad_identifier_bits: int = IDENTIFIER_BITS
    dad_max_retries: int = DEFAULT_MAX_RETRIES
    dhcp_pool_size: int = DEFAULT_POOL_SIZE
    prefix: NetworkPrefix = field(default=DEFAULT_PREFIX)
    controller: int = 0
    radix: int = OCTET_MAX
    max_events: Optional[int] = None

    def __post_init__(self) -> None:
        if self.concurrency < 1:
            raise ValueError(f"concurrency must be at least 1, got {self.concurrency}")
        if self.retry_timeout < 1 or self.max_attempts < 1:
            raise ValueError("retry_timeout and max_attempts must be positive")
        if not 2 <= self.radix <= OCTET_MAX:
            raise ValueError(f"radix must be in 2..{OCTET_MAX}, got {self.radix}")


class Simulation:
    """
    Event loop for one scenario.

    Joins are admitted in schedule order, at most `options.concurrency` at a
    time; the next join starts as soon as an active one configures or fails.
    """

    def __init__(
        self,
        scheme: Scheme,
        topology: Topology,
        schedule: Sequence[int],
        loss_rate: float = 0.0,
        seed: int = 0,
        options: Optional[SimOptions] = None,
    ):
        self.scheme = Scheme(scheme)
        self.topology = topology
        self.loss_rate = loss_rate
        self.seed = seed
        self.options = options or SimOptions()
        controller = self.options.controller
        if not 0 <= controller < topology.n:
            raise ValueError(f"controller {controller} is not a node of the topology")
        if len(set(schedule)) != len(schedule):
            raise ValueError("join schedule lists a node twice")
        for v in schedule:
            if v == controller or not 0 <= v < topology.n:
                raise ValueError(f"node {v} cannot join")

        streams = np.random.SeedSequence(seed).spawn(len(_STREAMS))
        self._rngs = {
            name: random.Random(int(stream.generate_state(1)[0]))
            for name, stream in zip(_STREAMS, streams)
        }
        max_events = self.options.max_events or settings.MAX_EVENTS
        self.scheduler = EventScheduler(max_events)
        self.metrics = MetricsCollector()
        self.network = Network(
            topology,
            self.scheduler,
            self.metrics,
            loss_rate=loss_rate,
            jitter=self.options.jitter,
            loss_rng=self._rngs["loss"],
            jitter_rng=self._rngs["jitter"],
        )

        prefix = self.options.prefix
        self.global_controller = NodeState.global_controller(
            GLOBAL_CONTROLLER_NODE, Ipv6Address(prefix, DeviceIdentifier.from_int(0))
        )
        self.nodes: List[NodeState] = [NodeState(node_id=v) for v in range(topology.n)]
        self.nodes[controller] = delegate_domain(self.global_controller, controller, prefix)
        local = self.nodes[controller].address
        assert local is not None
        self.metrics.hold(controller, local)

        self.driver = _DRIVERS[self.scheme](self)
        self.driver.setup()
        self._waiting: Deque[int] = deque(schedule)
        self._active = 0
        self._next_join_id = 1

    @property
    def now(self) -> int:
        return self.scheduler.now

    def rng(self, name: str) -> random.Random:
        return self._rngs[name]

    def arm_timer(self, node_id: int, delay: int, token: int) -> None:
        self.scheduler.schedule(self.now + delay, EventKind.TIMER, node_id, token=token)

    def arm_timer_at(self, node_id: int, time: int, token: int) -> None:
        self.scheduler.schedule(time, EventKind.TIMER, node_id, token=token)

    def configured(self, node: NodeState, retries: int = 0) -> None:
        assert node.join_id is not None and node.address is not None
        self.metrics.on_configured(node.join_id, node.address, self.now, retries)
        logger.debug(f"t={self.now} node {node.node_id} configured {node.address}")
        self._finish(node.join_id)

    def fail(self, node: NodeState, retries: int = 0) -> None:
        assert node.join_id is not None
        self.metrics.on_failed(node.join_id, self.now, retries)
        self._finish(node.join_id)

    def _finish(self, join_id: int) -> None:
        self.network.release(join_id)
        self._active -= 1
        self._admit()

    def _admit(self) -> None:
        while self._active < self.options.concurrency and self._waiting:
            node_id = self._waiting.popleft()
            self._active += 1
            self.scheduler.schedule(self.now, EventKind.JOIN, node_id, token=self._next_join_id)
            self._next_join_id += 1

    def _dispatch(self, event: SimEvent) -> None:
        if event.kind is EventKind.JOIN:
            self.metrics.start_join(event.token, event.node, self.now)
            self.driver.start_join(event.node, event.token)
        elif event.kind is EventKind.TIMER:
            self.driver.on_timer(event.node, event.token)
        else:
            message = self.network.arrive(event)
            if message is not None:
                self.driver.on_message(event.node, message)

    def run(self) -> MetricsRecord:
        """
        Process events until the network is quiet.

        Raises:
            NonQuiescent: the event budget ran out
        """
        self._admit()
        while len(self.scheduler):
            self._dispatch(self.scheduler.pop())

        stuck = len(self._waiting) + self._active
        if stuck:
            logger.warning(f"{stuck} joins never completed")

        record = self.metrics.record(
            scheme=self.scheme.value,
            seed=self.seed,
            n=self.topology.n,
            l=self.topology.l,
            d=self.topology.diameter,
            diameter_exact=self.topology.diameter_exact,
            loss_rate=self.loss_rate,
            invariant_violations=self.driver.invariant_violations(),
        )
        logger.info(
            f"{self.scheme.value} n={record.n} seed={self.seed} loss={self.loss_rate}: "
            f"{record.configured}/{record.joins} configured, {record.duplicates} duplicates, "
            f"{record.messages_per_join.mean:.2f} msgs/join, {self.scheduler.processed} events"
        )
        return record


def run_scenario(
    scheme: Scheme,
    topology: Topology,
    schedule: Sequence[int],
    loss_rate: float = 0.0,
    seed: int = 0,
    options: Optional[SimOptions] = None,
) -> MetricsRecord:
    """
    Run one scheme over `topology`, joining `schedule` in order.

    Returns the complete metrics. Deterministic for identical arguments.

    Raises:
        NonQuiescent: the event budget ran out (protocol livelock)
    """
    return Simulation(scheme, topology, schedule, loss_rate, seed, options).run()
