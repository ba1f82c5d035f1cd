"""Per-review allocation: cyclic incremental gradient ascent with projection.

At a review instant the controller maximizes

    sum over elements k=(i,j,f) of  w(Qf, Qbar_f) * Qij_f * zeta_k * mu_ij

over time fractions zeta in [0,1]^K subject to one interference constraint
per node: the fractions of all elements incident on a node sum to at most 1.
The objective is linear, so a single cycle-through-the-elements gradient step
plus projection per element solves it to within a quantified gap
(``suboptimality_bound``). An update of one element can violate only the two
constraints of its endpoint nodes; the projection step therefore only ever
touches that pair.

Geometry note: a node constraint is a halfspace whose normal is the 0/1
indicator of its member elements. Projecting onto its boundary subtracts the
same amount, excess / support size, from every member. For a violated *pair*
the exact Euclidean projection onto the intersection has a closed form (a
2x2 KKT system over the two indicators); ``project_pair`` computes that
limit directly, which is what the corrected alternating scheme
(``alternating_projection_pair``) converges to.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .network import NetworkModel, QueueSnapshot
from .stochastic import ChannelState


@dataclass(frozen=True)
class WeightConfig:
    """Logistic queue weighting: w(x, xbar) = 1 + a1 / (1 + exp(-a2 (x - xbar))).

    ``thresholds`` maps flow id -> backlog threshold (rate x delay target);
    flows absent from the map get w = 1 exactly.
    """

    a1: float = 0.2
    a2: float = 2.0
    thresholds: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.a1 < 0:
            raise ValueError("a1 must be >= 0")
        if self.a2 <= 0:
            raise ValueError("a2 must be > 0")
        for f, q in self.thresholds.items():
            if q is not None and q <= 0:
                raise ValueError(f"flow {f}: queue threshold must be > 0")

    @classmethod
    def from_flows(cls, flows, a1: float = 0.2, a2: float = 2.0) -> "WeightConfig":
        thresholds = {}
        for flow in flows:
            q = flow.queue_threshold
            if q is not None:
                thresholds[flow.flow_id] = q
        return cls(a1=a1, a2=a2, thresholds=thresholds)


def weight(x: float, xbar: Optional[float], cfg: WeightConfig) -> float:
    """Flow weight in [1, 1 + a1]; exactly 1 when there is no threshold."""
    if xbar is None or cfg.a1 == 0.0:
        return 1.0
    z = cfg.a2 * (x - xbar)
    if z >= 0:
        sig = 1.0 / (1.0 + math.exp(-z))
    else:  # avoid overflow of exp(-z) for very negative z
        e = math.exp(z)
        sig = e / (1.0 + e)
    return 1.0 + cfg.a1 * sig


@dataclass(frozen=True)
class HalfspaceConstraint:
    """sum of s over ``members`` <= ``bound``; the normal is the 0/1 indicator."""

    members: tuple[int, ...]
    bound: float = 1.0

    def __post_init__(self):
        if len(self.members) == 0:
            raise ValueError("constraint needs a non-empty support")
        if len(set(self.members)) != len(self.members):
            raise ValueError("constraint support has repeated members")

    @property
    def size(self) -> int:
        return len(self.members)

    def value(self, s: np.ndarray) -> float:
        return float(np.sum(s[list(self.members)]))


def node_constraints(model: NetworkModel) -> dict[int, HalfspaceConstraint]:
    """One interference constraint per node over its incident elements."""
    ws = model.solver_workspace()
    return {
        node: HalfspaceConstraint(tuple(ws.members[ws.node_constraint[node]]))
        for node in ws.nodes
    }


def project_onto_halfspace(s: np.ndarray, constraint: HalfspaceConstraint) -> np.ndarray:
    """Euclidean projection of s onto the halfspace; identity when feasible.

    The excess is spread evenly over the support (excess / support size),
    landing exactly on the boundary hyperplane.
    """
    s = np.asarray(s, dtype=float)
    excess = constraint.value(s) - constraint.bound
    if excess <= 0:
        return s.copy()
    out = s.copy()
    out[list(constraint.members)] -= excess / constraint.size
    return out


def project_pair(
    s: np.ndarray,
    constraint_a: HalfspaceConstraint,
    constraint_b: HalfspaceConstraint,
    n_rep: int = 10,
    tol: float = 1e-9,
) -> np.ndarray:
    """Euclidean projection of s onto the intersection of two halfspaces.

    Computes the limit of the corrected alternating projection scheme in
    closed form (case analysis on the active set; a 2x2 KKT solve when both
    constraints bind). ``n_rep`` and ``tol`` are accepted for signature
    compatibility with the iterative scheme and bound the fallback used for
    a degenerate (identical-support) pair.
    """
    s = np.asarray(s, dtype=float)
    ma = list(constraint_a.members)
    mb = list(constraint_b.members)
    ea = float(np.sum(s[ma])) - constraint_a.bound
    eb = float(np.sum(s[mb])) - constraint_b.bound
    if ea <= tol and eb <= tol:
        return s.copy()
    na, nb = constraint_a.size, constraint_b.size
    if set(ma) == set(mb):
        # identical supports: at most one distinct constraint can bind
        tighter = constraint_a if constraint_a.bound <= constraint_b.bound else constraint_b
        return project_onto_halfspace(s, tighter)
    if eb <= tol:
        return project_onto_halfspace(s, constraint_a)
    if ea <= tol:
        return project_onto_halfspace(s, constraint_b)
    ov = len(set(ma) & set(mb))
    det = na * nb - ov * ov
    la = (ea * nb - eb * ov) / det
    lb = (eb * na - ea * ov) / det
    out = s.copy()
    if la >= 0 and lb >= 0:
        out[ma] -= la
        out[mb] -= lb
    elif la < 0:
        out[mb] -= eb / nb
    else:
        out[ma] -= ea / na
    return out


def alternating_projection_pair(
    s: np.ndarray,
    constraint_a: HalfspaceConstraint,
    constraint_b: HalfspaceConstraint,
    n_rep: int = 10,
    tol: float = 1e-9,
) -> np.ndarray:
    """Iterative reference for ``project_pair``: corrected alternating rounds.

    Each round projects onto constraint a then b, carrying the standard
    correction vectors so the iteration converges to the projection onto the
    intersection rather than merely a feasible point. Stops after ``n_rep``
    rounds or when a round no longer moves the point.
    """
    x = np.asarray(s, dtype=float).copy()
    corrections = [np.zeros_like(x), np.zeros_like(x)]
    constraints = (constraint_a, constraint_b)
    for _ in range(max(1, n_rep)):
        moved = 0.0
        for idx, con in enumerate(constraints):
            y = x + corrections[idx]
            z = project_onto_halfspace(y, con)
            corrections[idx] = y - z
            moved = max(moved, float(np.max(np.abs(z - x))) if z.shape else 0.0)
            x = z
        if moved <= tol:
            break
    return x


@dataclass(frozen=True)
class SolverConfig:
    alpha: float = 1e-4
    cycles: int = 15
    n_rep: int = 10
    tolerance: float = 1e-9

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.cycles < 1:
            raise ValueError("cycles must be >= 1")
        if self.n_rep < 1:
            raise ValueError("n_rep must be >= 1")
        if self.tolerance < 0:
            raise ValueError("tolerance must be >= 0")


def _flow_weights(snapshot: QueueSnapshot, model: NetworkModel, cfg: WeightConfig) -> dict[int, float]:
    return {
        f: weight(snapshot.flow_backlogs.get(f, 0), cfg.thresholds.get(f), cfg)
        for f in (flow.flow_id for flow in model.flows)
    }


def gradient(
    k: int,
    snapshot: QueueSnapshot,
    channel: ChannelState,
    model: NetworkModel,
    weight_cfg: WeightConfig,
) -> float:
    """Ascent direction of element k (1-based): w(Qf) * Qij_f * mu_ij."""
    i, j, f = model.link_flow_index.triple(k)
    w = weight(snapshot.flow_backlogs.get(f, 0), weight_cfg.thresholds.get(f), weight_cfg)
    return w * float(snapshot.differentials[k - 1]) * channel.rate((i, j))


def gradient_vector(
    snapshot: QueueSnapshot,
    channel: ChannelState,
    model: NetworkModel,
    weight_cfg: WeightConfig,
) -> np.ndarray:
    """All element gradients at once, in index order."""
    index = model.link_flow_index
    w = _flow_weights(snapshot, model, weight_cfg)
    g = np.empty(len(index))
    for pos, (i, j, f) in enumerate(index.triples):
        g[pos] = w[f] * float(snapshot.differentials[pos]) * channel.rate((i, j))
    return g


def solve_allocation(
    snapshot: QueueSnapshot,
    channel: ChannelState,
    model: NetworkModel,
    solver_cfg: Optional[SolverConfig] = None,
    weight_cfg: Optional[WeightConfig] = None,
    trace: Optional[list] = None,
) -> np.ndarray:
    """Time fractions per element for one review period.

    Runs cycles * K incremental gradient steps: bump one element, then
    project onto the (at most two) violated endpoint-node constraints.
    Finalization clamps negatives, rescales any node whose incident sum
    exceeds 1, and zeroes every element whose differential backlog was zero
    at the review instant. All-zero backlog short-circuits to the zero
    vector. ``trace``, when a list, receives (step, objective) tuples.
    """
    cfg = solver_cfg or SolverConfig()
    wcfg = weight_cfg or WeightConfig()
    ws = model.solver_workspace()
    K = ws.size
    if K == 0:
        return np.zeros(0)
    g = gradient_vector(snapshot, channel, model, wcfg)
    dif = snapshot.differentials
    if not np.any(g > 0):
        return np.zeros(K)

    # flat state with incrementally maintained constraint sums; every element
    # belongs to exactly two constraints, so one coordinate change updates two
    s = [0.0] * K
    consum = [0.0] * len(ws.members)
    members = ws.members
    sizes = ws.sizes
    eca, ecb = ws.elem_ca, ws.elem_cb
    eover, esame = ws.elem_overlap, ws.elem_same
    glist = g.tolist()
    alpha = cfg.alpha
    tol = cfg.tolerance

    def sub(mlist, lam):
        for m in mlist:
            s[m] -= lam
            consum[eca[m]] -= lam
            consum[ecb[m]] -= lam

    total_steps = cfg.cycles * K
    for step in range(total_steps):
        k = step % K
        gk = glist[k]
        if gk > 0.0:
            a = eca[k]
            b = ecb[k]
            d = alpha * gk
            s[k] += d
            consum[a] += d
            consum[b] += d
            ea = consum[a] - 1.0
            eb = consum[b] - 1.0
            if ea > tol or eb > tol:
                if esame[k]:
                    if ea > tol:
                        sub(members[a], ea / sizes[a])
                elif eb <= tol:
                    sub(members[a], ea / sizes[a])
                elif ea <= tol:
                    sub(members[b], eb / sizes[b])
                else:
                    na, nb, ov = sizes[a], sizes[b], eover[k]
                    det = na * nb - ov * ov
                    la = (ea * nb - eb * ov) / det
                    lb = (eb * na - ea * ov) / det
                    if la >= 0.0 and lb >= 0.0:
                        sub(members[a], la)
                        sub(members[b], lb)
                    elif la < 0.0:
                        sub(members[b], eb / nb)
                    else:
                        sub(members[a], ea / na)
        if trace is not None:
            trace.append((step + 1, sum(glist[m] * s[m] for m in range(K))))

    for k in range(K):
        if s[k] < 0.0:
            s[k] = 0.0
    for cid in range(len(members)):  # sequential per-node rescale; shrinking only
        mlist = members[cid]
        total = 0.0
        for m in mlist:
            total += s[m]
        if total > 1.0:
            for m in mlist:
                s[m] /= total
    out = np.asarray(s, dtype=float)
    out[dif == 0] = 0.0
    return out


def allocation_objective(allocation: np.ndarray, g: np.ndarray) -> float:
    return float(np.dot(np.asarray(allocation, dtype=float), np.asarray(g, dtype=float)))


def suboptimality_bound(alpha: float, n_elements: int, grad_max: float) -> float:
    """Gap bound for the cyclic scheme: alpha (4 + 1/K) K^2 c1^2 / 2.

    The limiting objective of the iteration stays within this bound of the
    optimum; c1 is the largest element gradient of the instance.
    """
    if alpha <= 0 or n_elements <= 0:
        raise ValueError("alpha and element count must be positive")
    if grad_max < 0:
        raise ValueError("grad_max must be >= 0")
    k = float(n_elements)
    return alpha * (4.0 + 1.0 / k) * k * k * grad_max * grad_max / 2.0
