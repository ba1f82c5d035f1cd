"""Exact desk-scale references used to validate the solver and stability runs.

Everything here trades scalability for certainty: the LP reference
enumerates basic solutions, the projection reference enumerates active sets,
and the capacity check enumerates interference-free activation sets. All
raise ``SizeError`` beyond their stated enumeration scale instead of
silently approximating.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np
from scipy.optimize import linprog

from .network import NetworkModel
from .solver import HalfspaceConstraint


class SizeError(ValueError):
    """Instance exceeds the enumeration scale these references are built for."""


@dataclass(frozen=True)
class LinearProgramInstance:
    """maximize c . x subject to x in [0,1]^n and the given sum constraints."""

    c: tuple[float, ...]
    constraints: tuple[HalfspaceConstraint, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "c", tuple(float(v) for v in self.c))
        for con in self.constraints:
            if max(con.members) >= len(self.c):
                raise ValueError("constraint references a variable outside the instance")


def lp_solve_exact(instance: LinearProgramInstance, max_vars: int = 8):
    """Exact optimum by enumerating all basic solutions.

    Tries every subset of n active constraints (box faces and constraint
    boundaries), solves the square system, keeps feasible points, and returns
    (optimal value, optimizer). Exact up to machine arithmetic; refuses
    instances with more than ``max_vars`` variables.
    """
    n = len(instance.c)
    if n == 0:
        return 0.0, np.zeros(0)
    if n > max_vars:
        raise SizeError(f"lp_solve_exact handles at most {max_vars} variables, got {n}")
    c = np.asarray(instance.c)
    rows = []
    bounds = []
    for v in range(n):
        low = np.zeros(n)
        low[v] = -1.0  # -x_v <= 0
        rows.append(low)
        bounds.append(0.0)
        high = np.zeros(n)
        high[v] = 1.0  # x_v <= 1
        rows.append(high)
        bounds.append(1.0)
    for con in instance.constraints:
        row = np.zeros(n)
        row[list(con.members)] = 1.0
        rows.append(row)
        bounds.append(con.bound)
    A = np.vstack(rows)
    b = np.asarray(bounds)
    best_val = None
    best_x = None
    for combo in itertools.combinations(range(len(rows)), n):
        sub = A[list(combo)]
        try:
            x = np.linalg.solve(sub, b[list(combo)])
        except np.linalg.LinAlgError:
            continue
        if np.max(A @ x - b) > 1e-9:
            continue
        val = float(c @ x)
        if best_val is None or val > best_val:
            best_val = val
            best_x = x
    if best_val is None:  # unreachable for this geometry: x = 0 is always a vertex
        raise RuntimeError("no feasible basic solution found")
    return best_val, best_x


def qp_project_exact(
    point: np.ndarray,
    constraints: Iterable[HalfspaceConstraint],
    max_vars: int = 6,
) -> np.ndarray:
    """Exact Euclidean projection onto an intersection of halfspaces.

    Brute-force active-set search: for every subset of constraints, project
    onto their boundary hyperplanes jointly, keep candidates feasible for all
    constraints, and return the closest. The true projection always appears
    under its own active set.
    """
    p = np.asarray(point, dtype=float)
    cons = list(constraints)
    n = p.shape[0]
    if n > max_vars:
        raise SizeError(f"qp_project_exact handles at most {max_vars} variables, got {n}")
    if len(cons) > 8:
        raise SizeError("qp_project_exact handles at most 8 constraints")
    normals = np.zeros((len(cons), n))
    offsets = np.zeros(len(cons))
    for row, con in enumerate(cons):
        normals[row, list(con.members)] = 1.0
        offsets[row] = con.bound
    best = None
    best_dist = None
    for r in range(len(cons) + 1):
        for active in itertools.combinations(range(len(cons)), r):
            if r == 0:
                cand = p.copy()
            else:
                nmat = normals[list(active)]
                gram = nmat @ nmat.T
                rhs = nmat @ p - offsets[list(active)]
                try:
                    lam = np.linalg.solve(gram, rhs)
                except np.linalg.LinAlgError:
                    continue
                cand = p - nmat.T @ lam
                if np.max(np.abs(nmat @ cand - offsets[list(active)])) > 1e-8:
                    continue
            if np.max(normals @ cand - offsets, initial=-np.inf) > 1e-9:
                continue
            dist = float(np.linalg.norm(cand - p))
            if best_dist is None or dist < best_dist - 1e-15:
                best = cand
                best_dist = dist
    if best is None:
        raise RuntimeError("no feasible candidate found; constraints may be inconsistent")
    return best


def enumerate_activation_sets(model: NetworkModel, max_sets: int = 200_000):
    """All interference-free sets of link-flow elements (including empty).

    Two elements conflict when their links share a node; a schedule may
    activate at most one flow per link, which the node rule already implies.
    """
    index = model.link_flow_index
    K = len(index)
    conflict = [0] * K
    for a in range(K):
        ia, ja, _ = index.triples[a]
        for b in range(a + 1, K):
            ib, jb, _ = index.triples[b]
            if len({ia, ja} & {ib, jb}) > 0:
                conflict[a] |= 1 << b
                conflict[b] |= 1 << a
    sets: list[tuple[int, ...]] = []

    def extend(prefix: list[int], start: int, blocked: int):
        sets.append(tuple(prefix))
        if len(sets) > max_sets:
            raise SizeError(f"more than {max_sets} activation sets; network too large")
        for nxt in range(start, K):
            if blocked >> nxt & 1:
                continue
            prefix.append(nxt)
            extend(prefix, nxt + 1, blocked | conflict[nxt])
            prefix.pop()

    extend([], 0, 0)
    return sets


@dataclass
class CapacityQuery:
    """Inputs of the capacity-membership check.

    ``mean_rates`` holds the channel-averaged rate per link (the stationary
    channel distribution enters only through these averages). ``arrivals``
    maps (source node, flow) -> packets/slot.
    """

    model: NetworkModel
    arrivals: dict[tuple[int, int], float]
    mean_rates: dict[tuple[int, int], float]
    tolerance: float = 1e-7
    max_sets: int = 200_000


@dataclass
class CapacityResult:
    epsilon: float
    label: str  # "inside" | "outside" | "boundary-band"
    node_flow_slack: dict[tuple[int, int], float]
    n_activation_sets: int
    allocation: dict[tuple[int, int, int], float] = field(default_factory=dict)


def mean_rates_from_channel(channel, n_samples: int = 200, start_index: int = 0) -> dict:
    """Channel-averaged rate per link, by Monte-Carlo over review draws.

    A degenerate (fixed) channel is reproduced exactly by a single draw.
    """
    if channel.gain_model == "fixed":
        state = channel.draw(start_index)
        return {link: state.rate(link) for link in channel.links}
    if n_samples < 1:
        raise ValueError("need at least one channel sample")
    acc = np.zeros(len(channel.links))
    for m in range(n_samples):
        acc += channel.draw(start_index + m).rates
    acc /= n_samples
    return {link: float(acc[p]) for p, link in enumerate(channel.links)}


def capacity_membership(query: CapacityQuery) -> CapacityResult:
    """Largest uniform slack with which the arrival matrix fits the capacity region.

    Solves the feasibility LP: does a convex combination of activation sets
    exist whose per-(node, flow) service margin (outgoing minus incoming
    channel-averaged rate) exceeds the arrival rate by eps everywhere?
    Positive optimal eps means inside, negative outside, and |eps| below the
    tolerance is reported as the boundary band.
    """
    model = query.model
    index = model.link_flow_index
    sets = enumerate_activation_sets(model, query.max_sets)
    n_sets = len(sets)
    # rows: one per (node, flow) with the node on the flow's route, node != dest
    rows: list[tuple[int, int]] = []
    for flow in model.flows:
        for node in flow.route[:-1]:
            rows.append((node, flow.flow_id))
    # element -> (net contribution per row) assembled per activation set
    elem_coeff = np.zeros((len(rows), len(index)))
    for r, (node, f) in enumerate(rows):
        for pos, (i, j, ef) in enumerate(index.triples):
            if ef != f:
                continue
            mu = query.mean_rates[(i, j)]
            if i == node:
                elem_coeff[r, pos] -= mu  # outgoing service helps
            elif j == node:
                elem_coeff[r, pos] += mu  # incoming traffic loads the node
    A_ub = np.zeros((len(rows), n_sets + 1))
    for col, act in enumerate(sets):
        if act:
            A_ub[:, col] = elem_coeff[:, list(act)].sum(axis=1)
    A_ub[:, -1] = 1.0  # + eps
    b_ub = np.array([-query.arrivals.get(rf, 0.0) for rf in rows])
    A_eq = np.zeros((1, n_sets + 1))
    A_eq[0, :n_sets] = 1.0
    b_eq = np.array([1.0])
    bounds = [(0.0, 1.0)] * n_sets + [(None, None)]
    cost = np.zeros(n_sets + 1)
    cost[-1] = -1.0  # maximize eps
    res = linprog(cost, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if not res.success:
        raise RuntimeError(f"capacity LP failed: {res.message}")
    eps = float(-res.fun)
    x = res.x[:n_sets]
    schedule = np.zeros(len(index))
    for col, act in enumerate(sets):
        for pos in act:
            schedule[pos] += x[col]
    slack = {}
    for r, rf in enumerate(rows):
        service_margin = float(elem_coeff[r] @ schedule)
        slack[rf] = -service_margin - query.arrivals.get(rf, 0.0)
    if eps > query.tolerance:
        label = "inside"
    elif eps < -query.tolerance:
        label = "outside"
    else:
        label = "boundary-band"
    allocation = {index.triples[pos]: float(schedule[pos]) for pos in range(len(index))}
    return CapacityResult(eps, label, slack, n_sets, allocation)
