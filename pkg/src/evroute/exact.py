"""Exact solving.

An exhaustive oracle for tiny instances, a depth-first branch-and-bound
over visit orders, the same search restricted to completing a partial
order (used by the neighborhood-search repair), and an emitter that writes
the model as a portable Big-M linear program text file.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass

from .core import (
    Instance,
    NodeKind,
    Schedule,
    TIME_TOL,
    Weights,
    objective_value,
)
from .errors import InstanceTooLargeError, NoInitialSolutionError
from .schedule import (
    anchored_sequence,
    assemble_schedule,
    bfd_initial,
    charge_gains,
    propagate_ranges,
    propagate_times,
)

ORACLE_MAX_NODES = 10
LEAF_ENUM_MAX_CHARGEABLE = 12
_BOUND_TOL = 1e-12


class SolveStatus(enum.Enum):
    OPTIMAL = "optimal"
    TIME_LIMIT = "timeLimit"
    INFEASIBLE = "infeasible"
    HEURISTIC_LEAF = "heuristicLeaf"


@dataclass(frozen=True)
class BnBConfig:
    time_limit: float = 15.0
    incumbent_seed: Schedule | None = None

    def __post_init__(self):
        if self.time_limit <= 0:
            raise ValueError("time_limit must be positive")


@dataclass(frozen=True)
class ExactResult:
    schedule: Schedule | None
    status: SolveStatus
    nodes_explored: int = 0
    incumbents: tuple[tuple[int, float], ...] = ()

    @property
    def objective(self) -> float | None:
        return None if self.schedule is None else self.schedule.objective


def _chargeable(inst: Instance) -> list[int]:
    return [u for u in range(inst.n - 1) if inst.nodes[u].charging is not None]


def _interleavings(anchored, flexible, n):
    """All full orders keeping the anchored nodes in their canonical order."""
    flexible = tuple(sorted(flexible))

    def rec(prefix, ai, remaining):
        if ai == len(anchored) and not remaining:
            yield (0, *prefix, n - 1)
            return
        if ai < len(anchored):
            yield from rec(prefix + [anchored[ai]], ai + 1, remaining)
        for i, f in enumerate(remaining):
            yield from rec(prefix + [f], ai, remaining[:i] + remaining[i + 1 :])

    yield from rec([], 0, flexible)


def _best_charging(order, inst, weights, chargeable):
    """Best objective over all charge-flag subsets for a fixed order.

    Gains are always charged to the cap: extra charge costs no time in this
    model, so it can only help the end-of-route term.  Returns the best
    (objective, schedule) or None.
    """
    n = inst.n
    best = None
    best_key = None
    for mask in range(1 << len(chargeable)):
        charge = [0] * n
        m = mask
        i = 0
        while m:
            if m & 1:
                charge[chargeable[i]] = 1
            m >>= 1
            i += 1
        timed = propagate_times(order, charge, inst)
        if not timed.feasible_times:
            continue
        gains = charge_gains(order, charge, inst)
        ranges, deficit = propagate_ranges(order, charge, gains, inst)
        if deficit is not None:
            continue
        obj = objective_value(order, timed.arrival, charge, ranges, inst, weights)
        key = tuple(charge)
        if best is None or obj < best[0] or (obj == best[0] and key < best_key):
            best = (obj, Schedule(tuple(order), timed.arrival, tuple(charge), gains, ranges, obj))
            best_key = key
    return best


def oracle(inst: Instance, weights: Weights | None = None) -> Schedule | None:
    """Ground truth by exhaustive enumeration of orders and charge subsets.

    Guarded to at most 10 nodes; larger instances raise
    :class:`InstanceTooLargeError`.  Ties prefer the lexicographically
    smallest order, then the smallest charge vector.  Returns None when the
    instance is infeasible.
    """
    n = inst.n
    if n > ORACLE_MAX_NODES:
        raise InstanceTooLargeError(f"oracle is guarded to {ORACLE_MAX_NODES} nodes, got {n}")
    w = inst.weights if weights is None else weights
    anchored = list(anchored_sequence(inst))
    anchored_set = set(anchored)
    flexible = [u for u in range(1, n - 1) if u not in anchored_set]
    chargeable = _chargeable(inst)
    zeros = [0] * n
    best: Schedule | None = None
    best_key = None
    for order in _interleavings(anchored, flexible, n):
        if not propagate_times(order, zeros, inst).feasible_times:
            continue
        found = _best_charging(order, inst, w, chargeable)
        if found is None:
            continue
        obj, sched = found
        key = (order, sched.charge)
        if best is None or obj < best.objective or (obj == best.objective and key < best_key):
            best = sched
            best_key = key
    return best


class _Timeout(Exception):
    pass


class _Search:
    """Shared depth-first state for the full and completion searches."""

    def __init__(self, inst: Instance, weights: Weights, deadline: float | None):
        self.inst = inst
        self.w = weights
        self.deadline = deadline
        self.nodes = inst.nodes
        self.n = inst.n
        self.dist = inst.dist_rows
        self.travel = inst.travel_rows
        self.min_out = [
            min(self.dist[u][v] for v in range(self.n) if v != u) for u in range(self.n)
        ]
        self.anchored = list(anchored_sequence(inst))
        self.rank = {u: i for i, u in enumerate(self.anchored)}
        self.chargeable = _chargeable(inst)
        self.leaf_enum = len(self.chargeable) <= LEAF_ENUM_MAX_CHARGEABLE
        self.used_heuristic_leaf = False
        start = self.nodes[0]
        walk0 = start.charging.walk_time if start.charging is not None else 0.0
        # Smallest start time over both charging choices at the start node.
        self.a0_floor = max(0.0, start.a_min - walk0)
        self.a0_nocharge = max(0.0, start.a_min)
        self.best: Schedule | None = None
        self.best_obj = math.inf
        self.explored = 0
        self.incumbents: list[tuple[int, float]] = []

    def seed(self, schedule: Schedule | None):
        if schedule is not None and schedule.objective < self.best_obj:
            self.best = schedule
            self.best_obj = schedule.objective
            self.incumbents.append((self.explored, self.best_obj))

    def tick(self):
        self.explored += 1
        if self.deadline is not None and self.explored % 256 == 0:
            if time.monotonic() > self.deadline:
                raise _Timeout

    def step_time(self, prev: int, a_prev: float, v: int) -> float | None:
        """Earliest arrival at v assuming no charging anywhere, or None.

        Charging only tightens the timetable (walks extend departures and
        separator lower bounds, and shift fixed pins and window tops down),
        so infeasibility here rules out every charge assignment.
        """
        pn = self.nodes[prev]
        if pn.kind is NodeKind.SEPARATOR:
            lb = pn.a_max + self.travel[prev][v]
        else:
            lb = a_prev + pn.duration + self.travel[prev][v]
        node = self.nodes[v]
        if node.kind is NodeKind.FIXED:
            a_v = node.fixed_arrival
            if lb > a_v + TIME_TOL:
                return None
        elif node.kind is NodeKind.SEPARATOR:
            r = self.inst.separator_rank[v]
            ref = self.a0_nocharge if r == 0 else self.nodes[self.inst.separators[r - 1]].a_max
            a_v = max(lb, ref)
        else:
            a_v = max(lb, node.a_min)
        if a_v > node.a_max - node.duration + TIME_TOL:
            return None
        return a_v

    def sep_delta(self, v: int, a_v: float) -> float:
        if self.nodes[v].kind is not NodeKind.SEPARATOR:
            return 0.0
        r = self.inst.separator_rank[v]
        ref = self.a0_nocharge if r == 0 else self.nodes[self.inst.separators[r - 1]].a_max
        return a_v - ref

    def bound(self, dist_lb: float, sep_sum: float) -> float:
        """Optimistic objective: exact distance plus a shortest-exit floor,
        day delays seen so far, full battery at the end, zero extra stops."""
        return (
            self.w.wd * dist_lb
            + self.w.wt * sep_sum
            - self.w.wc * self.inst.k_max
            + self.inst.epsilon * self.a0_floor
        )

    def leaf(self, order: list[int]):
        self.tick()
        if self.leaf_enum:
            found = _best_charging(order, self.inst, self.w, self.chargeable)
            sched = None if found is None else found[1]
        else:
            self.used_heuristic_leaf = True
            sched = assemble_schedule(order, self.inst, self.w)
        if sched is not None and sched.objective < self.best_obj:
            self.best = sched
            self.best_obj = sched.objective
            self.incumbents.append((self.explored, self.best_obj))


def solve_exact(
    inst: Instance,
    cfg: BnBConfig | None = None,
    weights: Weights | None = None,
    prune: bool = True,
) -> ExactResult:
    """Depth-first branch-and-bound over visit orders.

    Branches append one node at a time; subtrees are cut on anchored-order
    violations, earliest-time infeasibility of the partial order, and an
    optimistic objective bound against the incumbent (seeded from the
    best-fit-decreasing construction).  Charging is resolved per complete
    order: exactly, by subset enumeration, while the chargeable node count
    stays within :data:`LEAF_ENUM_MAX_CHARGEABLE`, otherwise by the greedy
    planner, in which case an exhausted tree reports ``heuristicLeaf``
    instead of ``optimal``.  ``prune=False`` disables all three cuts
    (soundness testing only).
    """
    cfg = BnBConfig() if cfg is None else cfg
    w = inst.weights if weights is None else weights
    deadline = time.monotonic() + cfg.time_limit
    search = _Search(inst, w, deadline)
    if cfg.incumbent_seed is not None:
        search.seed(cfg.incumbent_seed)
    else:
        try:
            search.seed(bfd_initial(inst, w))
        except NoInitialSolutionError:
            pass

    n = inst.n
    interior = list(range(1, n - 1))
    visited = [False] * n
    path = [0]
    min_out = search.min_out

    def dfs(last, a_last, dist_so_far, sep_sum, next_anchor, remaining_min, left):
        # remaining_min = min_out[last] + sum of min_out over unvisited interior
        search.tick()
        if left == 0:
            if prune and search.step_time(last, a_last, n - 1) is None:
                return
            path.append(n - 1)
            search.leaf(path)
            path.pop()
            return
        remaining_after = remaining_min - min_out[last]
        for v in interior:
            if visited[v]:
                continue
            r = search.rank.get(v)
            if prune and r is not None and r != next_anchor:
                continue
            a_v = search.step_time(last, a_last, v)
            if a_v is None:
                if prune:
                    continue
                a_v = a_last  # bound-only placeholder; leaves re-propagate
            delta = search.sep_delta(v, a_v)
            d_edge = search.dist[last][v]
            if prune:
                b = search.bound(dist_so_far + d_edge + remaining_after, sep_sum + delta)
                if b >= search.best_obj - _BOUND_TOL:
                    continue
            visited[v] = True
            path.append(v)
            dfs(
                v,
                a_v,
                dist_so_far + d_edge,
                sep_sum + delta,
                next_anchor + (1 if r is not None else 0),
                remaining_after,
                left - 1,
            )
            path.pop()
            visited[v] = False

    exhausted = True
    try:
        dfs(0, search.a0_nocharge, 0.0, 0.0, 0, sum(min_out[u] for u in interior) + min_out[0], len(interior))
    except _Timeout:
        exhausted = False

    if not exhausted:
        status = SolveStatus.TIME_LIMIT
    elif search.best is None:
        status = SolveStatus.INFEASIBLE
    elif search.used_heuristic_leaf:
        status = SolveStatus.HEURISTIC_LEAF
    else:
        status = SolveStatus.OPTIMAL
    return ExactResult(search.best, status, search.explored, tuple(search.incumbents))


def solve_completion(
    inst: Instance,
    base_order,
    removed,
    weights: Weights | None = None,
    time_limit: float | None = None,
) -> Schedule | None:
    """Optimal re-insertion of ``removed`` nodes into ``base_order``.

    The surviving order is kept as a subsequence; removed nodes may go
    anywhere that respects the anchored total order.  Complete orders are
    priced by the greedy charging planner, exactly like the heuristic
    repairs, so the result dominates any repair over the same removal set.
    """
    w = inst.weights if weights is None else weights
    deadline = None if time_limit is None else time.monotonic() + time_limit
    search = _Search(inst, w, deadline)
    base = list(base_order)
    removed = sorted(removed)
    if not base or base[0] != 0 or base[-1] != inst.n - 1:
        raise ValueError("base order must run from the start node to the end node")
    n = inst.n
    path = [0]
    rank = search.rank
    min_out = search.min_out

    def pending_min_rank(bi, rem):
        ranks = [rank[u] for u in rem if u in rank]
        ranks.extend(rank[u] for u in base[bi:] if u in rank)
        return min(ranks) if ranks else None

    def leaf_eval():
        search.tick()
        sched = assemble_schedule(path, inst, w)
        if sched is not None and sched.objective < search.best_obj:
            search.best = sched
            search.best_obj = sched.objective
            search.incumbents.append((search.explored, search.best_obj))

    def dfs(bi, rem, last, a_last, dist_so_far, sep_sum, remaining_min):
        search.tick()
        if bi == len(base) and not rem:
            leaf_eval()
            return
        remaining_after = remaining_min - min_out[last]
        need = pending_min_rank(bi, rem)
        cands = []
        if bi < len(base) and (base[bi] != n - 1 or not rem):
            cands.append((base[bi], True))
        cands.extend((u, False) for u in rem)
        for v, from_base in cands:
            r = rank.get(v)
            if r is not None and need is not None and r != need:
                continue
            a_v = search.step_time(last, a_last, v)
            if a_v is None:
                continue
            delta = search.sep_delta(v, a_v)
            d_edge = search.dist[last][v]
            b = search.bound(dist_so_far + d_edge + remaining_after, sep_sum + delta)
            if b >= search.best_obj - _BOUND_TOL:
                continue
            path.append(v)
            if from_base:
                dfs(bi + 1, rem, v, a_v, dist_so_far + d_edge, sep_sum + delta, remaining_after)
            else:
                dfs(
                    bi,
                    tuple(x for x in rem if x != v),
                    v,
                    a_v,
                    dist_so_far + d_edge,
                    sep_sum + delta,
                    remaining_after,
                )
            path.pop()

    remaining0 = (
        sum(min_out[u] for u in base[1:-1])
        + sum(min_out[u] for u in removed)
        + min_out[0]
    )
    try:
        dfs(1, tuple(removed), 0, search.a0_nocharge, 0.0, 0.0, remaining0)
    except _Timeout:
        pass
    return search.best


# --- portable linear model -------------------------------------------------


@dataclass(frozen=True)
class LinearRow:
    name: str
    coeffs: dict[str, float]
    sense: str  # one of <=, >=, =
    rhs: float
    big_m: float | None = None


@dataclass(frozen=True)
class LinearModel:
    """Big-M linearization of one instance, printable as a text file."""

    variables: tuple[tuple[str, str, float | None, float | None], ...]
    rows: tuple[LinearRow, ...]
    objective: tuple[dict[str, float], float]
    m_time: float
    m_range: float

    def to_text(self) -> str:
        def term(c, v):
            return f"{c:+.6f} {v}"

        lines = [
            "# multi-day EV routing, Big-M linear model, format v1",
            "# variables: a_<u> arrival, k_<u> range, ct_<u> charge gain,",
            "#            x_<u>_<v> edge use (binary), r_<u> charging stop (binary)",
            f"# M_time {self.m_time:.6f} M_range {self.m_range:.6f}",
        ]
        obj_terms = " ".join(term(c, v) for v, c in self.objective[0].items())
        const = self.objective[1]
        lines.append(f"min: {obj_terms}" + (f" {const:+.6f}" if const else ""))
        for row in self.rows:
            body = " ".join(term(c, v) for v, c in row.coeffs.items())
            lines.append(f"{row.name}: {body} {row.sense} {row.rhs:.6f}")
        for name, kind, lb, ub in self.variables:
            if kind == "binary":
                lines.append(f"bin {name}")
            else:
                lo = "-inf" if lb is None else f"{lb:.6f}"
                hi = "+inf" if ub is None else f"{ub:.6f}"
                lines.append(f"bound {lo} <= {name} <= {hi}")
        return "\n".join(lines) + "\n"


def linearize(inst: Instance) -> LinearModel:
    """Emit the model with conditional constraints rewritten via Big-M.

    The result is a portable description for external MIP tools; nothing in
    this package consumes it for solving.  Products of binaries with
    constants stay linear, so only the edge-conditioned time and range
    chains need Big-M slack.
    """
    n = inst.n
    nodes = inst.nodes
    m_time = max(nd.a_max for nd in nodes) - min(nd.a_min for nd in nodes)
    m_range = inst.k_max + float(inst.dist.max())
    sep_set = set(inst.separators)

    def walk(u):
        c = nodes[u].charging
        return 0.0 if c is None else c.walk_time

    def gain_cap(u):
        c = nodes[u].charging
        return 0.0 if c is None else c.max_gain

    variables: list[tuple[str, str, float | None, float | None]] = []
    for u in range(n):
        variables.append((f"a_{u}", "continuous", 0.0, None))
        variables.append((f"k_{u}", "continuous", 0.0, None))
    for u in range(n - 1):
        variables.append((f"ct_{u}", "continuous", 0.0, None))
        variables.append((f"r_{u}", "binary", None, None))
    for u in range(n):
        for v in range(n):
            if u != v:
                variables.append((f"x_{u}_{v}", "binary", None, None))

    rows: list[LinearRow] = []

    def add(name, coeffs, sense, rhs, big_m=None):
        rows.append(LinearRow(name, coeffs, sense, rhs, big_m))

    for u in range(n):
        add(
            f"flow_out_{u}",
            {f"x_{u}_{v}": 1.0 for v in range(n) if v != u},
            "=",
            1.0 if u != n - 1 else 0.0,
        )
        add(
            f"flow_in_{u}",
            {f"x_{v}_{u}": 1.0 for v in range(n) if v != u},
            "=",
            1.0 if u != 0 else 0.0,
        )
    for u in range(n):
        for v in range(u + 1, n):
            add(f"no_two_cycle_{u}_{v}", {f"x_{u}_{v}": 1.0, f"x_{v}_{u}": 1.0}, "<=", 1.0)

    for u in range(n):
        node = nodes[u]
        has_r = u != n - 1
        if node.kind is NodeKind.FIXED:
            coeffs = {f"a_{u}": 1.0}
            if has_r and walk(u):
                coeffs[f"r_{u}"] = walk(u)
            add(f"pinned_arrival_{u}", coeffs, "=", node.fixed_arrival)
        if u in sep_set:
            # Day boundaries measure their lower bound against the previous
            # day reference and add the walk instead of subtracting it.
            rnk = inst.separator_rank[u]
            coeffs = {f"a_{u}": 1.0}
            if has_r and walk(u):
                coeffs[f"r_{u}"] = -walk(u)
            if rnk == 0:
                coeffs["a_0"] = coeffs.get("a_0", 0.0) - 1.0
                add(f"window_lo_{u}", coeffs, ">=", 0.0)
            else:
                add(f"window_lo_{u}", coeffs, ">=", nodes[inst.separators[rnk - 1]].a_max)
        else:
            coeffs = {f"a_{u}": 1.0}
            if has_r and walk(u):
                coeffs[f"r_{u}"] = walk(u)
            add(f"window_lo_{u}", coeffs, ">=", node.a_min)
        coeffs = {f"a_{u}": 1.0}
        if has_r and walk(u):
            coeffs[f"r_{u}"] = walk(u)
        add(f"window_hi_{u}", coeffs, "<=", node.a_max - node.duration)

    for u in range(n):
        for v in range(n):
            if u == v:
                continue
            coeffs = {f"a_{v}": 1.0, f"x_{u}_{v}": -m_time}
            if v != n - 1 and walk(v):
                coeffs[f"r_{v}"] = -walk(v)
            if u in sep_set:
                if walk(u):
                    coeffs[f"r_{u}"] = coeffs.get(f"r_{u}", 0.0) - walk(u)
                rhs = nodes[u].a_max + float(inst.travel[u, v]) - m_time
            else:
                coeffs[f"a_{u}"] = -1.0
                if u != n - 1 and walk(u):
                    coeffs[f"r_{u}"] = coeffs.get(f"r_{u}", 0.0) - 2.0 * walk(u)
                rhs = nodes[u].duration + float(inst.travel[u, v]) - m_time
            add(f"chain_time_{u}_{v}", coeffs, ">=", rhs, big_m=m_time)

    add("start_range", {"k_0": 1.0}, "=", inst.k_start)
    for u in range(n):
        add(f"reserve_{u}", {f"k_{u}": 1.0}, ">=", inst.k_min)
    for u in range(n - 1):
        add(f"gain_cap_{u}", {f"ct_{u}": 1.0, f"r_{u}": -gain_cap(u)}, "<=", 0.0)
        add(f"capacity_{u}", {f"k_{u}": 1.0, f"ct_{u}": 1.0}, "<=", inst.k_max)
    for u in range(n):
        for v in range(n):
            if u == v:
                continue
            d_uv = float(inst.dist[u, v])
            coeffs = {f"k_{v}": 1.0, f"k_{u}": -1.0, f"x_{u}_{v}": m_range}
            if u != n - 1:
                coeffs[f"ct_{u}"] = -1.0
            add(f"chain_range_hi_{u}_{v}", dict(coeffs), "<=", m_range - d_uv, big_m=m_range)
            coeffs[f"x_{u}_{v}"] = -m_range
            add(f"chain_range_lo_{u}_{v}", coeffs, ">=", -m_range - d_uv, big_m=m_range)

    w = inst.weights
    obj: dict[str, float] = {}
    const = 0.0
    for u in range(n):
        for v in range(n):
            if u != v:
                obj[f"x_{u}_{v}"] = w.wd * float(inst.dist[u, v])
    for i, u in enumerate(inst.separators):
        obj[f"a_{u}"] = obj.get(f"a_{u}", 0.0) + w.wt
        if i == 0:
            obj["a_0"] = obj.get("a_0", 0.0) - w.wt
        else:
            const -= w.wt * nodes[inst.separators[i - 1]].a_max
    obj[f"k_{n - 1}"] = obj.get(f"k_{n - 1}", 0.0) - w.wc
    for u in range(n - 1):
        obj[f"r_{u}"] = obj.get(f"r_{u}", 0.0) + inst.epsilon
    obj["a_0"] = obj.get("a_0", 0.0) + inst.epsilon

    return LinearModel(tuple(variables), tuple(rows), (obj, const), m_time, m_range)
