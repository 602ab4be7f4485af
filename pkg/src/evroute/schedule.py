"""From a visit order to a full schedule.

Forward earliest-arrival propagation, battery range propagation, the greedy
parallel-charging planner shared by every solver, and the best-fit
decreasing construction that seeds the searches.
"""

from __future__ import annotations

import math
from typing import Sequence

from .core import (
    Instance,
    NodeKind,
    RANGE_TOL,
    Schedule,
    TIME_TOL,
    TimedOrder,
    Weights,
    objective_value,
)
from .errors import NoInitialSolutionError

RANK_EPS = 0.1          # minutes; keeps the stop ranking finite for zero-walk stations
EXTRA_STOP_FRACTION = 0.10  # of battery capacity; justifies a stop beyond feasibility


def _walk(node, flag) -> float:
    if flag and node.charging is not None and node.kind is not NodeKind.END:
        return node.charging.walk_time
    return 0.0


def anchor_key(node) -> tuple[float, int]:
    """Canonical chronological key for order-anchored nodes."""
    t = node.fixed_arrival if node.kind is NodeKind.FIXED else node.a_max
    return (t, node.id)


def anchored_sequence(inst: Instance) -> tuple[int, ...]:
    """Fixed events and separators in their required visit order."""
    anchored = [
        nd for nd in inst.nodes[1:-1] if nd.kind in (NodeKind.FIXED, NodeKind.SEPARATOR)
    ]
    anchored.sort(key=anchor_key)
    return tuple(nd.id for nd in anchored)


def respects_anchor_order(order: Sequence[int], inst: Instance) -> bool:
    """True when fixed events and separators appear in canonical order."""
    ranks = {u: i for i, u in enumerate(anchored_sequence(inst))}
    last = -1
    for u in order:
        r = ranks.get(u)
        if r is not None:
            if r < last:
                return False
            last = r
    return True


def propagate_times(order: Sequence[int], charge: Sequence[int], inst: Instance) -> TimedOrder:
    """Earliest feasible arrival times along ``order`` for given charge flags.

    Fixed nodes are pinned to their constant arrival shifted by the walk to
    the charger; other nodes are clamped into their windows, separators
    against the previous day's reference.  The start time is the start
    node's own earliest arrival: later arrivals only delay the chain, so the
    window lower bound is the earliest start that can ever be feasible.
    Returns ``feasible_times=False`` when any clamp fails.  ``order`` may be
    a partial order (missing interior nodes) as long as it runs from the
    start node to the end node.
    """
    nodes = inst.nodes
    n = len(nodes)
    if not order or order[0] != 0 or order[-1] != n - 1:
        raise ValueError("order must run from the start node to the end node")
    travel = inst.travel_rows
    separators = inst.separators
    sep_rank = inst.separator_rank
    arrival = [math.nan] * n
    feasible = True
    a0 = 0.0
    prev = -1
    for pos, u in enumerate(order):
        node = nodes[u]
        w_u = _walk(node, charge[u])
        if pos == 0:
            a_u = max(0.0, node.a_min - w_u)
            a0 = a_u
        else:
            pnode = nodes[prev]
            w_p = _walk(pnode, charge[prev])
            if pnode.kind is NodeKind.SEPARATOR:
                lb_chain = pnode.a_max + w_p + travel[prev][u] + w_u
            else:
                lb_chain = arrival[prev] + pnode.duration + 2.0 * w_p + travel[prev][u] + w_u
            if node.kind is NodeKind.FIXED:
                a_u = node.fixed_arrival - w_u
                if lb_chain > a_u + TIME_TOL:
                    feasible = False
            elif node.kind is NodeKind.SEPARATOR:
                rank = sep_rank[u]
                ref = a0 if rank == 0 else nodes[separators[rank - 1]].a_max
                # Separator lower bounds add the walk; windowed nodes subtract it.
                a_u = max(lb_chain, ref + w_u)
            else:
                a_u = max(lb_chain, node.a_min - w_u)
        if a_u > node.a_max - node.duration - w_u + TIME_TOL:
            feasible = False
        arrival[u] = a_u
        prev = u
    return TimedOrder(tuple(order), tuple(arrival), feasible)


def charge_gains(order: Sequence[int], charge: Sequence[int], inst: Instance) -> tuple[float, ...]:
    """Full capped gains for the flagged nodes: charge to the smaller of the
    station's total gain and the battery headroom on arrival."""
    nodes = inst.nodes
    dist = inst.dist_rows
    n = len(nodes)
    gains = [0.0] * n
    cur = inst.k_start
    last = len(order) - 1
    for pos, u in enumerate(order):
        node = nodes[u]
        if charge[u] and node.charging is not None and u != n - 1:
            gains[u] = max(0.0, min(node.charging.max_gain, inst.k_max - cur))
        if pos < last:
            cur = min(cur + gains[u], inst.k_max) - dist[u][order[pos + 1]]
    return tuple(gains)


def propagate_ranges(
    order: Sequence[int],
    charge: Sequence[int],
    gains: Sequence[float],
    inst: Instance,
) -> tuple[tuple[float, ...], int | None]:
    """Battery range on arrival per node plus the first deficit node, if any.

    Charge is applied before departure and capped at the battery maximum;
    each edge then consumes its distance.
    """
    dist = inst.dist_rows
    k = [math.nan] * inst.n
    cur = inst.k_start
    k[order[0]] = cur
    deficit = order[0] if cur < inst.k_min - RANGE_TOL else None
    prev = order[0]
    for u in order[1:]:
        cur = min(cur + gains[prev], inst.k_max) - dist[prev][u]
        k[u] = cur
        if deficit is None and cur < inst.k_min - RANGE_TOL:
            deficit = u
        prev = u
    return tuple(k), deficit


def plan_charging(
    order: Sequence[int],
    inst: Instance,
    weights: Weights | None = None,
) -> tuple[tuple[int, ...], tuple[float, ...]] | None:
    """Greedy parallel-charging decisions for a visit order.

    Starting from no stops, while the battery dips below the reserve the
    candidate stops strictly before the deficit are ranked by achievable
    gain per minute of walking and the best rank that keeps the timetable
    feasible is added.  Redundant stops are dropped afterwards.  When the
    end-of-route charge carries weight, further stops are added while they
    improve the objective or contribute at least a tenth of the capacity.
    Returns None when deficits remain with every candidate exhausted.
    """
    w = inst.weights if weights is None else weights
    nodes = inst.nodes
    n = inst.n
    charge = [0] * n
    if not propagate_times(order, charge, inst).feasible_times:
        return None
    pos_of = {u: i for i, u in enumerate(order)}
    added: list[int] = []

    def ranked_candidates(ranges, limit_pos):
        cands = []
        for u in order[:limit_pos]:
            node = nodes[u]
            if charge[u] or node.charging is None or u == n - 1:
                continue
            head = min(node.charging.max_gain, inst.k_max - ranges[u])
            if head <= RANGE_TOL:
                continue
            cands.append((-head / (2.0 * node.charging.walk_time + RANK_EPS), u))
        cands.sort()
        return [u for _, u in cands]

    while True:
        gains = charge_gains(order, charge, inst)
        ranges, deficit = propagate_ranges(order, charge, gains, inst)
        if deficit is None:
            break
        chosen = None
        for u in ranked_candidates(ranges, pos_of[deficit]):
            charge[u] = 1
            if propagate_times(order, charge, inst).feasible_times:
                chosen = u
                break
            charge[u] = 0
        if chosen is None:
            return None
        added.append(chosen)

    # Drop stops the remaining set already covers; removal never tightens
    # the timetable, so only the battery needs rechecking.
    for u in reversed(added):
        charge[u] = 0
        gains = charge_gains(order, charge, inst)
        if propagate_ranges(order, charge, gains, inst)[1] is not None:
            charge[u] = 1

    if w.wc > 0:
        while True:
            gains = charge_gains(order, charge, inst)
            ranges, _ = propagate_ranges(order, charge, gains, inst)
            timed = propagate_times(order, charge, inst)
            base = objective_value(order, timed.arrival, charge, ranges, inst, w)
            base_total = sum(gains)
            progressed = False
            for u in ranked_candidates(ranges, len(order)):
                charge[u] = 1
                trial_times = propagate_times(order, charge, inst)
                if not trial_times.feasible_times:
                    charge[u] = 0
                    continue
                trial_gains = charge_gains(order, charge, inst)
                trial_ranges, _ = propagate_ranges(order, charge, trial_gains, inst)
                trial_obj = objective_value(order, trial_times.arrival, charge, trial_ranges, inst, w)
                # Incremental charge is net of capping at later stops; it
                # equals the end-of-route range increase by conservation.
                incremental = sum(trial_gains) - base_total
                if trial_obj < base or incremental >= EXTRA_STOP_FRACTION * inst.k_max:
                    progressed = True
                else:
                    charge[u] = 0
                break  # only the best addable rank is considered per round
            if not progressed:
                break

    gains = charge_gains(order, charge, inst)
    return tuple(charge), gains


def assemble_schedule(
    order: Sequence[int],
    inst: Instance,
    weights: Weights | None = None,
) -> Schedule | None:
    """Plan charging, propagate times and ranges and price the result.

    Returns None when the order admits no feasible schedule.  A returned
    schedule always passes :func:`evroute.core.validate`.
    """
    w = inst.weights if weights is None else weights
    planned = plan_charging(order, inst, w)
    if planned is None:
        return None
    charge, gains = planned
    timed = propagate_times(order, charge, inst)
    ranges, deficit = propagate_ranges(order, charge, gains, inst)
    if not timed.feasible_times or deficit is not None:
        return None
    obj = objective_value(order, timed.arrival, charge, ranges, inst, w)
    return Schedule(tuple(order), timed.arrival, tuple(charge), gains, ranges, obj)


def waiting_slack(s: Schedule, inst: Instance) -> float:
    """Total idle minutes along the route: arrival minus earliest possible
    arrival from the predecessor, summed over the used edges."""
    nodes = inst.nodes
    travel = inst.travel_rows
    total = 0.0
    for i in range(len(s.order) - 1):
        u, v = s.order[i], s.order[i + 1]
        nu = nodes[u]
        w_u = _walk(nu, s.charge[u])
        w_v = _walk(nodes[v], s.charge[v])
        if nu.kind is NodeKind.SEPARATOR:
            dep = nu.a_max + w_u
        else:
            dep = s.arrival[u] + nu.duration + 2.0 * w_u
        total += s.arrival[v] - (dep + travel[u][v] + w_v)
    return total


def bfd_initial(inst: Instance, weights: Weights | None = None) -> Schedule:
    """Best-fit-decreasing construction.

    Fixed events and separators are laid out chronologically; flexible
    events, longest stay first, are inserted into the feasible position
    that leaves the least idle time.  Raises
    :class:`~evroute.errors.NoInitialSolutionError` when some flexible
    event fits nowhere.
    """
    w = inst.weights if weights is None else weights
    order = [0, *anchored_sequence(inst), inst.n - 1]
    flexible = sorted(
        (nd for nd in inst.nodes[1:-1] if nd.kind is NodeKind.FLEXIBLE),
        key=lambda nd: (-nd.duration, nd.id),
    )
    best_sched: Schedule | None = None
    for nd in flexible:
        best = None
        for p in range(1, len(order)):
            cand = order[:p] + [nd.id] + order[p:]
            sched = assemble_schedule(cand, inst, w)
            if sched is None:
                continue
            slack = waiting_slack(sched, inst)
            if best is None or slack < best[0] - 1e-12:
                best = (slack, cand, sched)
        if best is None:
            raise NoInitialSolutionError(
                f"flexible event {nd.id} fits in no gap of the current order"
            )
        order = best[1]
        best_sched = best[2]
    if best_sched is None:  # no flexible events at all
        best_sched = assemble_schedule(order, inst, w)
        if best_sched is None:
            raise NoInitialSolutionError("anchored skeleton admits no feasible schedule")
    return best_sched
