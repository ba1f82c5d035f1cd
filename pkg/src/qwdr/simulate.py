"""Discrete-review outer loop and slot-by-slot queue dynamics.

The controller observes the network at review instants only. The gap to the
next review grows logarithmically with the total backlog, the allocation
solved at the review is frozen into a binary, interference-free slot
schedule for the whole period, and the slot engine then moves integer
packets: each active element serves min(queue, floor(rate)) head-of-line
packets per slot, after which that slot's exogenous arrivals are enqueued.
A packet therefore spends at least one slot per hop, and the cumulative
arrival/service ledger reproduces every queue length exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .network import (
    NetworkModel,
    QueueMatrix,
    SimulationInvariantError,
    Triple,
)
from .solver import SolverConfig, WeightConfig, gradient_vector, solve_allocation
from .stochastic import ArrivalProcess, ChannelModel, ChannelState


def next_review_period(total_queue: float, k0: float) -> int:
    """Slots until the next review: ceil(max(1, log(1 + k0 * backlog)))."""
    if total_queue < 0:
        raise ValueError("total queue must be >= 0")
    if k0 < 0:
        raise ValueError("k0 must be >= 0")
    return int(math.ceil(max(1.0, math.log1p(k0 * total_queue))))


@dataclass
class SlotSchedule:
    """Binary activation plan for one review period.

    ``active[t]`` lists the element positions transmitting in slot offset t;
    no two of them ever share a node. ``counts[p]`` is the number of slots
    granted to element p, which chases the quota allocation * period.
    """

    period: int
    active: list[list[int]]
    counts: np.ndarray
    quota: np.ndarray


def create_schedule(
    allocation: np.ndarray,
    model: NetworkModel,
    period: int,
    feasibility_tol: float = 1e-9,
) -> SlotSchedule:
    """Greedy slot assignment honoring interference and per-element quotas.

    Elements are visited in index order (transmitter node, then link, then
    flow). A candidate gets slot t iff nothing already assigned occupies
    either of its endpoint nodes in t and its accumulated slot count is still
    below allocation * period. Infeasible allocations are rejected up front.
    """
    ws = model.solver_workspace()
    alloc = np.asarray(allocation, dtype=float)
    if alloc.shape != (ws.size,):
        raise ValueError(f"allocation must have {ws.size} entries")
    avals = alloc.tolist()
    for v in avals:
        if v < -feasibility_tol:
            raise ValueError("allocation has negative entries")
    for cid, mlist in enumerate(ws.members):
        total = 0.0
        for m in mlist:
            total += avals[m]
        if total > 1.0 + feasibility_tol:
            raise ValueError(
                f"allocation infeasible: node {ws.nodes[cid]} incident sum {total:.12f} > 1"
            )
    if period < 1:
        raise ValueError("period must be >= 1")
    node_pos = {n: p for p, n in enumerate(model.nodes)}
    busy = [bytearray(period) for _ in model.nodes]
    active: list[list[int]] = [[] for _ in range(period)]
    counts = np.zeros(ws.size, dtype=np.int64)
    quota = alloc * period
    for p, (i, j, f) in enumerate(model.link_flow_index.triples):
        q = quota[p]
        if q <= 0.0:
            continue
        busy_i = busy[node_pos[i]]
        busy_j = busy[node_pos[j]]
        got = 0
        for t in range(period):
            if got >= q:
                break
            if busy_i[t] or busy_j[t]:
                continue
            busy_i[t] = 1
            busy_j[t] = 1
            active[t].append(p)
            got += 1
        counts[p] = got
    return SlotSchedule(period, active, counts, quota)


def step_slot(
    queues: QueueMatrix,
    active: list[Triple],
    service: dict[Triple, int],
    arrivals: list[tuple[tuple[int, int], int]],
    slot: int,
    check: bool = True,
) -> dict[Triple, int]:
    """Advance one slot: serve the scheduled elements, then enqueue arrivals.

    ``service`` maps each element to its per-slot packet budget (floor of the
    link rate). Active elements are verified node-disjoint, so transfers read
    consistent start-of-slot queues in any order. Returns packets moved per
    element.
    """
    seen: set[int] = set()
    moved: dict[Triple, int] = {}
    for (i, j, f) in active:
        if i in seen or j in seen:
            raise SimulationInvariantError(
                f"slot {slot}: interference violation at element {(i, j, f)}"
            )
        seen.add(i)
        seen.add(j)
        moved[(i, j, f)] = queues.transfer(i, j, f, service[(i, j, f)], slot)
    for (node, flow), count in arrivals:
        queues.add_arrivals(node, flow, int(count), slot)
    if check:
        queues.verify_balance(slot)
    return moved


@dataclass
class ReviewRecord:
    index: int
    start: int
    end: int
    total_queue: int


@dataclass
class RunResult:
    """Everything a run produces, ready for metric extraction."""

    model: NetworkModel
    horizon: int
    queues: QueueMatrix
    reviews: list[ReviewRecord]
    queue_samples: list[tuple]  # (slot, total, per-flow backlogs in flow order)
    max_total_queue: int
    total_queue_slot_sum: int
    flow_max_backlog: dict[int, int]
    flow_backlog_slot_sum: dict[int, int]
    zero_backlog_scheduled: int
    schedule_trace: Optional[list[tuple[int, int, int, int]]] = None
    solver_trace: Optional[list[tuple[int, int, float]]] = None
    total_queue_series: Optional[np.ndarray] = None

    @property
    def mean_review_period(self) -> float:
        if not self.reviews:
            return 0.0
        return float(np.mean([r.end - r.start for r in self.reviews]))


def run(
    model: NetworkModel,
    channel: ChannelModel,
    arrivals: ArrivalProcess,
    horizon: int,
    solver_cfg: Optional[SolverConfig] = None,
    weight_cfg: Optional[WeightConfig] = None,
    k0: float = 0.01,
    queue_sample_interval: int = 100,
    record_schedule: bool = False,
    record_solver_trace: bool = False,
    record_total_series: bool = False,
) -> RunResult:
    """Execute the full review/slot loop for ``horizon`` slots.

    Deterministic given the model, seeds, and configuration. Interference
    and queue-balance invariants are enforced every slot; a violation raises
    rather than corrupting statistics.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    solver_cfg = solver_cfg or SolverConfig()
    weight_cfg = weight_cfg or WeightConfig()
    queues = QueueMatrix(model)
    index = model.link_flow_index
    K = len(index)
    flow_ids = [fl.flow_id for fl in model.flows]
    link_pos = [channel.links.index((i, j)) for (i, j, f) in index.triples]
    source_list = list(arrivals.sources)

    reviews: list[ReviewRecord] = []
    samples: list[tuple] = []
    sched_trace: Optional[list] = [] if record_schedule else None
    solver_trace: Optional[list] = [] if record_solver_trace else None
    series = np.empty(horizon, dtype=np.int64) if record_total_series else None
    zero_scheduled = 0
    max_total = 0
    total_sum = 0
    flow_max = {f: 0 for f in flow_ids}
    flow_sum = {f: 0 for f in flow_ids}

    t = 0
    review_index = 0
    while t < horizon:
        total = queues.total()
        period = next_review_period(total, k0)
        state = channel.draw(review_index)
        snap = queues.snapshot()
        trace_buf: Optional[list] = [] if record_solver_trace else None
        alloc = solve_allocation(snap, state, model, solver_cfg, weight_cfg, trace=trace_buf)
        if trace_buf:
            solver_trace.extend((review_index, step, obj) for step, obj in trace_buf)
        schedule = create_schedule(alloc, model, period)
        if bool(np.any(schedule.counts[snap.differentials == 0] > 0)):
            zero_scheduled += int(schedule.counts[snap.differentials == 0].sum())
        reviews.append(ReviewRecord(review_index, t, t + period, total))
        rates = state.rates
        service = {
            index.triples[p]: int(rates[link_pos[p]]) for p in range(K)
        }
        active_triples = [
            [index.triples[p] for p in slot_elems] for slot_elems in schedule.active
        ]
        for off in range(period):
            if t >= horizon:
                break
            counts = arrivals.draw(t)
            arr = [(source_list[s], int(counts[s])) for s in range(len(source_list))]
            step_slot(queues, active_triples[off], service, arr, t)
            if record_schedule:
                sched_trace.extend((t, i, j, f) for (i, j, f) in active_triples[off])
            total_now = queues.total()
            total_sum += total_now
            if total_now > max_total:
                max_total = total_now
            for f in flow_ids:
                b = queues.flow_backlog(f)
                flow_sum[f] += b
                if b > flow_max[f]:
                    flow_max[f] = b
            if series is not None:
                series[t] = total_now
            if queue_sample_interval and t % queue_sample_interval == 0:
                samples.append((t, total_now, tuple(queues.flow_backlog(f) for f in flow_ids)))
            t += 1
        review_index += 1

    return RunResult(
        model=model,
        horizon=horizon,
        queues=queues,
        reviews=reviews,
        queue_samples=samples,
        max_total_queue=max_total,
        total_queue_slot_sum=total_sum,
        flow_max_backlog=flow_max,
        flow_backlog_slot_sum=flow_sum,
        zero_backlog_scheduled=zero_scheduled,
        schedule_trace=sched_trace,
        solver_trace=solver_trace,
        total_queue_series=series,
    )
