"""Independent re-implementations used as test oracles.

Everything here recomputes expected values along a different path than the
library code: the linear program below re-states the timing constraints for
scipy's solver, and the grid searches enumerate alternatives directly.
"""

import math

from evroute import Instance, NodeKind, Schedule

_GRID_MARGIN = 8  # minutes explored above each chain/window lower bound


def _walk(inst, u, charge):
    nd = inst.nodes[u]
    if charge[u] and nd.charging is not None and nd.kind is not NodeKind.END:
        return nd.charging.walk_time
    return 0.0


def lp_min_arrival(inst: Instance, order, charge, target):
    """Minimal feasible arrival at ``target`` for fixed order and charge
    flags, via scipy linprog over the timing constraints."""
    from scipy.optimize import linprog

    n = len(order)
    pos = {u: i for i, u in enumerate(order)}
    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for i, u in enumerate(order):
        nd = inst.nodes[u]
        w_u = _walk(inst, u, charge)
        if nd.kind is NodeKind.FIXED:
            row = [0.0] * n
            row[i] = 1.0
            A_eq.append(row)
            b_eq.append(nd.fixed_arrival - w_u)
        elif nd.kind is NodeKind.SEPARATOR:
            rank = inst.separator_rank[u]
            row = [0.0] * n
            row[i] = -1.0
            if rank == 0:
                row[0] = 1.0
                A_ub.append(row)
                b_ub.append(-w_u)
            else:
                A_ub.append(row)
                b_ub.append(-(inst.nodes[inst.separators[rank - 1]].a_max + w_u))
        else:
            row = [0.0] * n
            row[i] = -1.0
            A_ub.append(row)
            b_ub.append(-(nd.a_min - w_u))
        row = [0.0] * n
        row[i] = 1.0
        A_ub.append(row)
        b_ub.append(nd.a_max - nd.duration - w_u)
        if i > 0:
            p = order[i - 1]
            pn = inst.nodes[p]
            w_p = _walk(inst, p, charge)
            w_here = _walk(inst, u, charge)
            row = [0.0] * n
            row[i] = -1.0
            if pn.kind is NodeKind.SEPARATOR:
                A_ub.append(row)
                b_ub.append(-(pn.a_max + w_p + inst.travel[p, u] + w_here))
            else:
                row[i - 1] = 1.0
                A_ub.append(row)
                b_ub.append(-(pn.duration + 2.0 * w_p + inst.travel[p, u] + w_here))
    c = [0.0] * n
    c[pos[target]] = 1.0
    res = linprog(
        c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq or None, b_eq=b_eq or None,
        bounds=[(0.0, None)] * n, method="highs",
    )
    return res.fun if res.success else None


def grid_min_arrivals(inst: Instance, order, charge, targets):
    """Minimal arrivals at each target over 1-minute-grid schedules.

    Free nodes take integer arrivals from their lower bound upward (delaying
    a prefix never lowers later chain bounds, so a small band above every
    lower bound covers all minimizers); fixed nodes take their exact pin.
    Returns a dict target -> best value found, or None when no grid
    schedule is feasible.
    """
    n = len(order)
    best = {t: math.inf for t in targets}
    found = [False]

    def options(i, prev_arrival):
        u = order[i]
        nd = inst.nodes[u]
        w_u = _walk(inst, u, charge)
        if i == 0:
            lo = max(0.0, nd.a_min - w_u)
        else:
            p = order[i - 1]
            pn = inst.nodes[p]
            w_p = _walk(inst, p, charge)
            if pn.kind is NodeKind.SEPARATOR:
                chain = pn.a_max + w_p + inst.travel[p, u] + w_u
            else:
                chain = prev_arrival + pn.duration + 2.0 * w_p + inst.travel[p, u] + w_u
            if nd.kind is NodeKind.SEPARATOR:
                rank = inst.separator_rank[u]
                ref = arrivals[0] if rank == 0 else inst.nodes[inst.separators[rank - 1]].a_max
                lo = max(chain, ref + w_u)
            elif nd.kind is NodeKind.FIXED:
                pin = nd.fixed_arrival - w_u
                return [pin] if chain <= pin + 1e-9 else []
            else:
                lo = max(chain, nd.a_min - w_u)
        hi = nd.a_max - nd.duration - w_u
        if lo > hi + 1e-9:
            return []
        # the exact lower bound plus the 1-minute grid above it; sub-minute
        # boundary values would otherwise make tight chains unreachable
        start = math.ceil(lo - 1e-9)
        stop = min(math.floor(hi + 1e-9), start + _GRID_MARGIN)
        out = [lo]
        out.extend(float(t) for t in range(start, stop + 1) if t > lo + 1e-9)
        return out

    arrivals = [0.0] * n

    def rec(i):
        if i == n:
            found[0] = True
            for t in targets:
                best[t] = min(best[t], arrivals[order.index(t)])
            return
        for a in options(i, arrivals[i - 1] if i > 0 else 0.0):
            arrivals[i] = a
            rec(i + 1)

    rec(0)
    if not found[0]:
        return None
    return best


def brute_min_stop_count(inst: Instance, order):
    """Minimum stop count over all charge subsets that stay feasible."""
    from evroute import charge_gains, propagate_ranges, propagate_times

    chargeable = [u for u in range(inst.n - 1) if inst.nodes[u].charging is not None]
    best = None
    for mask in range(1 << len(chargeable)):
        charge = [0] * inst.n
        m, i = mask, 0
        while m:
            if m & 1:
                charge[chargeable[i]] = 1
            m >>= 1
            i += 1
        if not propagate_times(order, charge, inst).feasible_times:
            continue
        gains = charge_gains(order, charge, inst)
        if propagate_ranges(order, charge, gains, inst)[1] is not None:
            continue
        count = sum(charge[:-1])
        if best is None or count < best:
            best = count
    return best


def route_distance(s: Schedule, inst: Instance) -> float:
    return sum(inst.dist[s.order[i], s.order[i + 1]] for i in range(len(s.order) - 1))


def day_delay_sum(s: Schedule, inst: Instance) -> float:
    total = 0.0
    for i, u in enumerate(inst.separators):
        ref = s.arrival[0] if i == 0 else inst.nodes[inst.separators[i - 1]].a_max
        total += s.arrival[u] - ref
    return total
