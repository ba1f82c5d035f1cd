"""Static network description and dynamic per-flow queue state.

A network is a directed graph with a fixed route per flow. Interference is
node-exclusive: any two links that touch a common node may never be active in
the same slot. Every (link, flow) pair that can ever carry traffic -- i.e.
every consecutive hop of every route -- is a *link-flow element*, and the
set of all elements is indexed by a bijection onto 1..K that the solver and
scheduler share.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

Link = tuple[int, int]
Triple = tuple[int, int, int]  # (i, j, f): link (i, j) carrying flow f


@dataclass(frozen=True)
class FlowSpec:
    """A flow: all traffic bound for one destination, on a fixed route.

    The flow id doubles as the destination node id. ``delay_target`` is an
    end-to-end mean delay requirement in slots; flows without one are never
    weighted. ``queue_threshold`` converts the target into a backlog
    threshold (rate x target) for the weighting function.
    """

    flow_id: int
    source: int
    route: tuple[int, ...]
    arrival_rate: float
    delay_target: Optional[float] = None
    weight_enabled: bool = True

    def __post_init__(self):
        object.__setattr__(self, "route", tuple(self.route))
        if len(self.route) < 2:
            raise ValueError(f"flow {self.flow_id}: route needs at least one hop")
        if self.route[0] != self.source:
            raise ValueError(f"flow {self.flow_id}: route must start at source {self.source}")
        if self.route[-1] != self.flow_id:
            raise ValueError(f"flow {self.flow_id}: route must end at the destination node")
        if len(set(self.route)) != len(self.route):
            raise ValueError(f"flow {self.flow_id}: route must be a simple path")
        if self.arrival_rate < 0:
            raise ValueError(f"flow {self.flow_id}: arrival rate must be >= 0")
        if self.delay_target is not None and self.delay_target <= 0:
            raise ValueError(f"flow {self.flow_id}: delay target must be > 0")

    @property
    def hops(self) -> list[Link]:
        return [(self.route[n], self.route[n + 1]) for n in range(len(self.route) - 1)]

    @property
    def queue_threshold(self) -> Optional[float]:
        if self.delay_target is None or not self.weight_enabled:
            return None
        return self.arrival_rate * self.delay_target


def build_interference_sets(links: Iterable[Link]) -> dict[int, frozenset[Link]]:
    """Group links into per-node interference sets.

    Node-exclusive model: the set of node ``n`` holds every link incident on
    ``n`` (either direction). Nodes without links are omitted.
    """
    sets: dict[int, set[Link]] = {}
    for link in links:
        i, j = link
        sets.setdefault(i, set()).add(link)
        sets.setdefault(j, set()).add(link)
    return {n: frozenset(s) for n, s in sorted(sets.items())}


class LinkFlowIndex:
    """Bijection between admissible (i, j, f) triples and 1..K.

    Triples are the consecutive route hops of every flow, ordered
    lexicographically by (i, j, f). Positions (0-based array offsets) are
    ``index - 1``.
    """

    def __init__(self, flows: Iterable[FlowSpec]):
        triples: list[Triple] = []
        seen: set[Triple] = set()
        for flow in flows:
            for (i, j) in flow.hops:
                t = (i, j, flow.flow_id)
                if t in seen:
                    raise ValueError(f"duplicate link-flow element {t}")
                seen.add(t)
                triples.append(t)
        triples.sort()
        self.triples: tuple[Triple, ...] = tuple(triples)
        self._index: dict[Triple, int] = {t: k for k, t in enumerate(triples, start=1)}

    def __len__(self) -> int:
        return len(self.triples)

    def __contains__(self, triple: Triple) -> bool:
        return triple in self._index

    def index(self, i: int, j: int, f: int) -> int:
        """1-based index of (i, j, f); raises KeyError for unknown triples."""
        return self._index[(i, j, f)]

    def triple(self, k: int) -> Triple:
        """Inverse map: the triple with index k (1-based)."""
        if not 1 <= k <= len(self.triples):
            raise KeyError(f"link-flow index {k} out of range 1..{len(self.triples)}")
        return self.triples[k - 1]


def build_link_flow_index(flows: Iterable[FlowSpec]) -> LinkFlowIndex:
    return LinkFlowIndex(flows)


class _SolverWorkspace:
    """Per-model precomputation shared by the solver and the scheduler.

    One sum-constraint per node over all incident link-flow elements; each
    element belongs to exactly the two constraints of its endpoint nodes.
    """

    def __init__(self, model: "NetworkModel"):
        index = model.link_flow_index
        self.size = len(index)
        members: dict[int, list[int]] = {}
        for pos, (i, j, f) in enumerate(index.triples):
            members.setdefault(i, []).append(pos)
            members.setdefault(j, []).append(pos)
        self.nodes = sorted(members)  # nodes with at least one incident element
        self.node_constraint = {n: cid for cid, n in enumerate(self.nodes)}
        self.members: list[list[int]] = [members[n] for n in self.nodes]
        self.members_np = [np.asarray(m, dtype=np.intp) for m in self.members]
        self.sizes = [len(m) for m in self.members]
        # element -> its two endpoint constraints, their support overlap, and
        # whether the two supports coincide (degenerate pair)
        self.elem_ca: list[int] = []
        self.elem_cb: list[int] = []
        self.elem_overlap: list[int] = []
        self.elem_same: list[bool] = []
        for (i, j, f) in index.triples:
            ca = self.node_constraint[i]
            cb = self.node_constraint[j]
            sa, sb = set(self.members[ca]), set(self.members[cb])
            self.elem_ca.append(ca)
            self.elem_cb.append(cb)
            self.elem_overlap.append(len(sa & sb))
            self.elem_same.append(sa == sb)


class NetworkModel:
    """Validated static description: graph, flows, interference, element index."""

    def __init__(self, nodes: Iterable[int], links: Iterable[Link], flows: Iterable[FlowSpec]):
        self.nodes: tuple[int, ...] = tuple(sorted(set(nodes)))
        self.links: tuple[Link, ...] = tuple(sorted(set((int(i), int(j)) for i, j in links)))
        self.flows: tuple[FlowSpec, ...] = tuple(flows)
        node_set = set(self.nodes)
        link_set = set(self.links)
        for (i, j) in self.links:
            if i == j:
                raise ValueError(f"self-loop link ({i},{i}) is not allowed")
            if i not in node_set or j not in node_set:
                raise ValueError(f"link ({i},{j}) references an unknown node")
        ids = [fl.flow_id for fl in self.flows]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate flow ids")
        for flow in self.flows:
            for hop in flow.hops:
                if hop not in link_set:
                    raise ValueError(f"flow {flow.flow_id}: route hop {hop} is not a link")
        self.interference_sets = build_interference_sets(self.links)
        self.link_flow_index = build_link_flow_index(self.flows)
        self._workspace: Optional[_SolverWorkspace] = None

    @property
    def flow_by_id(self) -> dict[int, FlowSpec]:
        return {fl.flow_id: fl for fl in self.flows}

    def solver_workspace(self) -> _SolverWorkspace:
        if self._workspace is None:
            self._workspace = _SolverWorkspace(self)
        return self._workspace


@dataclass
class QueueSnapshot:
    """Queue state frozen at a review instant.

    ``differentials[p]`` is max(Q_i - Q_j, 0) for the element at position p
    (index order); ``flow_backlogs[f]`` is the network-wide backlog of flow f.
    """

    differentials: np.ndarray
    flow_backlogs: dict[int, int]
    total: int


class SimulationInvariantError(AssertionError):
    """A hard runtime invariant (interference or queue balance) was violated."""


class QueueMatrix:
    """Per (node, flow) FIFO queues of source-timestamped packets.

    Packets are integers: the slot in which they entered the network at the
    flow source. Destination queues do not exist -- a packet reaching its
    destination departs immediately and its end-to-end delay is recorded.
    Cumulative arrival/service counters back the exact queue-balance check.
    """

    def __init__(self, model: NetworkModel):
        self.model = model
        self._index = model.link_flow_index
        self._q: dict[tuple[int, int], deque] = {}
        self._arrived: dict[tuple[int, int], int] = {}
        self._served: dict[Triple, int] = {t: 0 for t in self._index.triples}
        self._flow_total: dict[int, int] = {fl.flow_id: 0 for fl in model.flows}
        for flow in model.flows:
            for node in flow.route[:-1]:
                key = (node, flow.flow_id)
                self._q[key] = deque()
                self._arrived[key] = 0
        # ledger wiring: for each (node, flow) queue its unique upstream and
        # downstream elements on the fixed route (None at source / before dest)
        self._balance: list[tuple[tuple[int, int], Optional[Triple], Optional[Triple]]] = []
        for flow in model.flows:
            route = flow.route
            for n, node in enumerate(route[:-1]):
                up = (route[n - 1], node, flow.flow_id) if n > 0 else None
                down = (node, route[n + 1], flow.flow_id)
                self._balance.append(((node, flow.flow_id), up, down))
        self.delivered: dict[int, int] = {fl.flow_id: 0 for fl in model.flows}
        self.delay_sum: dict[int, int] = {fl.flow_id: 0 for fl in model.flows}
        self.delay_hist: dict[int, dict[int, int]] = {fl.flow_id: {} for fl in model.flows}
        self._total = 0
        self._injected = 0
        self._delivered_total = 0

    def length(self, i: int, f: int) -> int:
        if i == f:
            return 0  # destination queue is always empty
        q = self._q.get((i, f))
        if q is None:
            raise KeyError(f"no queue for node {i}, flow {f}")
        return len(q)

    def flow_backlog(self, f: int) -> int:
        return self._flow_total[f]

    def total(self) -> int:
        return self._total

    @property
    def injected(self) -> int:
        return self._injected

    @property
    def delivered_total(self) -> int:
        return self._delivered_total

    def arrived(self, i: int, f: int) -> int:
        return self._arrived[(i, f)]

    def served(self, i: int, j: int, f: int) -> int:
        return self._served[(i, j, f)]

    def add_arrivals(self, i: int, f: int, count: int, slot: int) -> None:
        if count <= 0:
            return
        key = (i, f)
        self._q[key].extend([slot] * count)
        self._arrived[key] += count
        self._flow_total[f] += count
        self._total += count
        self._injected += count

    def transfer(self, i: int, j: int, f: int, max_packets: int, slot: int) -> int:
        """Move up to max_packets head-of-line packets across element (i,j,f).

        Packets reaching the destination are recorded as delivered with delay
        = slot - source arrival slot. Returns the number moved.
        """
        triple = (i, j, f)
        if triple not in self._index:
            raise KeyError(f"unknown link-flow element {triple}")
        src = self._q[(i, f)]
        n = min(len(src), max_packets)
        if n <= 0:
            return 0
        if j == f:
            hist = self.delay_hist[f]
            dsum = 0
            for _ in range(n):
                ts = src.popleft()
                d = slot - ts
                dsum += d
                hist[d] = hist.get(d, 0) + 1
            self.delivered[f] += n
            self.delay_sum[f] += dsum
            self._flow_total[f] -= n
            self._total -= n
            self._delivered_total += n
        else:
            dst = self._q[(j, f)]
            for _ in range(n):
                dst.append(src.popleft())
        self._served[triple] += n
        return n

    def snapshot(self) -> QueueSnapshot:
        dif = np.empty(len(self._index), dtype=np.int64)
        for pos, (i, j, f) in enumerate(self._index.triples):
            qj = 0 if j == f else len(self._q[(j, f)])
            d = len(self._q[(i, f)]) - qj
            dif[pos] = d if d > 0 else 0
        return QueueSnapshot(dif, dict(self._flow_total), self._total)

    def verify_balance(self, slot: int) -> None:
        """Exact queue-balance identity, plus global packet conservation."""
        for key, up, down in self._balance:
            expect = self._arrived[key]
            if up is not None:
                expect += self._served[up]
            if down is not None:
                expect -= self._served[down]
            if len(self._q[key]) != expect:
                raise SimulationInvariantError(
                    f"slot {slot}: queue balance broken at node {key[0]} flow {key[1]}: "
                    f"have {len(self._q[key])}, ledger says {expect}"
                )
        if self._injected != self._total + self._delivered_total:
            raise SimulationInvariantError(
                f"slot {slot}: packet conservation broken: injected {self._injected}, "
                f"queued {self._total} + delivered {self._delivered_total}"
            )


def differential_backlog(queues: QueueMatrix, i: int, j: int, f: int) -> int:
    """max(Q_i - Q_j, 0) for element (i, j, f); destination backlog counts as 0."""
    if (i, j, f) not in queues.model.link_flow_index:
        raise KeyError(f"unknown link-flow element {(i, j, f)}")
    qj = 0 if j == f else queues.length(j, f)
    return max(queues.length(i, f) - qj, 0)
