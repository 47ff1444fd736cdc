"""Compiled inner loops: decoding, local refinement, exhaustive enumeration.

All kernels take the flat arrays of :class:`eafjsp.instance.InstanceArrays`
plus market arrays already extended to cover twice the horizon, so that
fallback placements past the horizon can still be priced.
"""

import numba as nb
import numpy as np

_JIT = dict(nogil=True, cache=True)


@nb.njit(**_JIT)
def find_start(ready, tau, cost_cap, emis_cap, price, emis, horizon):
    """Earliest t >= ready with t + tau <= horizon whose window obeys both caps, else -1."""
    t = ready
    while t + tau <= horizon:
        ok = True
        for s in range(t + tau - 1, t - 1, -1):
            if price[s] > cost_cap or emis[s] > emis_cap:
                t = s + 1
                ok = False
                break
        if ok:
            return t
    return -1


@nb.njit(**_JIT)
def window_sum(series, start, end):
    acc = 0.0
    for s in range(start, end):
        acc += series[s]
    return acc


@nb.njit(**_JIT)
def objectives_of(start, end, workers, energy, price, emis, horizon):
    """(c_max, p_sum, e_sum, w_max) summed in global operation order."""
    n = start.shape[0]
    cmax = 0
    for k in range(n):
        if end[k] > cmax:
            cmax = end[k]
    length = max(horizon, cmax)
    load = np.zeros(length, dtype=np.int64)
    p_sum = 0.0
    e_sum = 0.0
    for k in range(n):
        p_sum += energy[k] * window_sum(price, start[k], end[k])
        e_sum += energy[k] * window_sum(emis, start[k], end[k])
        for s in range(start[k], end[k]):
            load[s] += workers[k]
    wmax = 0
    for s in range(length):
        if load[s] > wmax:
            wmax = load[s]
    out = np.empty(4)
    out[0] = cmax
    out[1] = p_sum
    out[2] = e_sum
    out[3] = wmax
    return out, load


@nb.njit(**_JIT)
def decode(seq, choice, cost_cap, emis_cap, job_offset, elig_machine, elig_time,
           workers, energy, n_machines, price, emis, horizon):
    n = seq.shape[0]
    start = np.empty(n, dtype=np.int64)
    end = np.empty(n, dtype=np.int64)
    machine = np.empty(n, dtype=np.int64)
    order = np.empty(n, dtype=np.int64)
    n_jobs = job_offset.shape[0]
    next_pos = np.zeros(n_jobs, dtype=np.int64)
    job_ready = np.zeros(n_jobs, dtype=np.int64)
    machine_free = np.zeros(n_machines, dtype=np.int64)
    for q in range(n):
        job = seq[q]
        op = job_offset[job] + next_pos[job]
        next_pos[job] += 1
        order[q] = op
        m = elig_machine[op, choice[op]]
        tau = elig_time[op, choice[op]]
        ready = max(job_ready[job], machine_free[m])
        t = find_start(ready, tau, cost_cap[op], emis_cap[op], price, emis, horizon)
        if t < 0:
            t = ready
        start[op] = t
        end[op] = t + tau
        machine[op] = m
        job_ready[job] = t + tau
        machine_free[m] = t + tau
    obj, load = objectives_of(start, end, workers, energy, price, emis, horizon)
    return start, end, machine, order, obj, load


@nb.njit(**_JIT)
def _slack(op, q, order, start, end, machine, job_offset, job_of, pos_of, job_len, cmax, horizon, tau):
    """Feasible start range [lo, hi] for the op at sequence position q, others fixed."""
    job = job_of[op]
    lo = 0
    if pos_of[op] > 0:
        lo = end[op - 1]
    m = machine[op]
    for r in range(q - 1, -1, -1):
        if machine[order[r]] == m:
            lo = max(lo, end[order[r]])
            break
    hi_end = min(cmax, horizon)
    if pos_of[op] + 1 < job_len[job]:
        hi_end = min(hi_end, start[op + 1])
    for r in range(q + 1, order.shape[0]):
        if machine[order[r]] == m:
            hi_end = min(hi_end, start[order[r]])
            break
    return lo, hi_end - tau


@nb.njit(**_JIT)
def _window_caps(price, emis, t, tau):
    c = 0.0
    e = 0.0
    for s in range(t, t + tau):
        if price[s] > c:
            c = price[s]
        if emis[s] > e:
            e = emis[s]
    return c, e


@nb.njit(**_JIT)
def refine_energy(seq, choice, cost_cap, emis_cap, job_offset, job_of, pos_of, job_len,
                  elig_machine, elig_time, workers, energy, n_machines, price, emis, horizon):
    """Greedy per-operation move to the cheapest window within its slack.

    Returns new threshold arrays and the number of accepted moves. A move is
    kept only if re-decoding lowers p_sum without raising c_max.
    """
    cost_cap = cost_cap.copy()
    emis_cap = emis_cap.copy()
    start, end, machine, order, obj, _ = decode(
        seq, choice, cost_cap, emis_cap, job_offset, elig_machine, elig_time,
        workers, energy, n_machines, price, emis, horizon)
    cmax0 = obj[0]
    accepted = 0
    n = seq.shape[0]
    for q in range(n):
        op = order[q]
        tau = end[op] - start[op]
        lo, hi = _slack(op, q, order, start, end, machine, job_offset, job_of, pos_of,
                        job_len, int(obj[0]), horizon, tau)
        current = energy[op] * window_sum(price, start[op], end[op])
        best = current
        best_c = 0.0
        best_e = 0.0
        found = False
        for t in range(lo, hi + 1):
            c, e = _window_caps(price, emis, t, tau)
            t_eff = find_start(lo, tau, c, e, price, emis, horizon)
            cost = energy[op] * window_sum(price, t_eff, t_eff + tau)
            if cost < best:
                best = cost
                best_c = c
                best_e = e
                found = True
        if not found:
            continue
        old_c = cost_cap[op]
        old_e = emis_cap[op]
        cost_cap[op] = best_c
        emis_cap[op] = best_e
        s2, e2, m2, o2, obj2, _ = decode(
            seq, choice, cost_cap, emis_cap, job_offset, elig_machine, elig_time,
            workers, energy, n_machines, price, emis, horizon)
        if obj2[0] <= cmax0 and obj2[1] < obj[1]:
            start, end, machine, order, obj = s2, e2, m2, o2, obj2
            accepted += 1
        else:
            cost_cap[op] = old_c
            emis_cap[op] = old_e
    return cost_cap, emis_cap, accepted


@nb.njit(**_JIT)
def _peak(load):
    w = 0
    count = 0
    first = -1
    for s in range(load.shape[0]):
        if load[s] > w:
            w = load[s]
            count = 1
            first = s
        elif load[s] == w and w > 0:
            count += 1
    return w, count, first


@nb.njit(**_JIT)
def refine_workers(seq, choice, cost_cap, emis_cap, job_offset, job_of, pos_of, job_len,
                   elig_machine, elig_time, workers, energy, n_machines, price, emis, horizon):
    """Shift operations off the peak worker step.

    Improvement is lexicographic on (w_max, number of peak steps); every
    accepted shift is verified by re-decoding, and c_max never increases.
    """
    cost_cap = cost_cap.copy()
    emis_cap = emis_cap.copy()
    start, end, machine, order, obj, load = decode(
        seq, choice, cost_cap, emis_cap, job_offset, elig_machine, elig_time,
        workers, energy, n_machines, price, emis, horizon)
    cmax0 = obj[0]
    n = seq.shape[0]
    accepted = 0
    for _ in range(4 * n + 4):
        wmax, count, tstar = _peak(load)
        if tstar < 0:
            break
        improved = False
        for q in range(n):
            op = order[q]
            if not (start[op] <= tstar < end[op]):
                continue
            tau = end[op] - start[op]
            w = workers[op]
            lo, hi = _slack(op, q, order, start, end, machine, job_offset, job_of, pos_of,
                            job_len, int(obj[0]), horizon, tau)
            for t in range(lo, hi + 1):
                if t <= tstar < t + tau:
                    continue
                c, e = _window_caps(price, emis, t, tau)
                t_eff = find_start(lo, tau, c, e, price, emis, horizon)
                if t_eff <= tstar < t_eff + tau:
                    continue
                removed = 0
                for s in range(start[op], end[op]):
                    if not (t_eff <= s < t_eff + tau) and load[s] == wmax:
                        removed += 1
                added = 0
                bad = False
                for s in range(t_eff, t_eff + tau):
                    if start[op] <= s < end[op]:
                        continue
                    if load[s] + w > wmax:
                        bad = True
                        break
                    if load[s] + w == wmax:
                        added += 1
                if bad or added >= removed:
                    continue
                old_c = cost_cap[op]
                old_e = emis_cap[op]
                cost_cap[op] = c
                emis_cap[op] = e
                s2, e2, m2, o2, obj2, load2 = decode(
                    seq, choice, cost_cap, emis_cap, job_offset, elig_machine, elig_time,
                    workers, energy, n_machines, price, emis, horizon)
                w2, count2, _t2 = _peak(load2)
                if obj2[0] <= cmax0 and (w2 < wmax or (w2 == wmax and count2 < count)):
                    start, end, machine, order, obj, load = s2, e2, m2, o2, obj2, load2
                    accepted += 1
                    improved = True
                    break
                cost_cap[op] = old_c
                emis_cap[op] = old_e
            if improved:
                break
        if not improved:
            break
    return cost_cap, emis_cap, accepted


@nb.njit(**_JIT)
def _archive_insert(archive, size, point):
    for a in range(size):
        dominated = True
        for k in range(4):
            if archive[a, k] > point[k]:
                dominated = False
                break
        if dominated:
            return size
    keep = 0
    for a in range(size):
        covered = True
        for k in range(4):
            if point[k] > archive[a, k]:
                covered = False
                break
        if not covered:
            if keep != a:
                archive[keep] = archive[a]
            keep += 1
    archive[keep] = point
    return keep + 1


@nb.njit(**_JIT)
def enumerate_front(job_of, pos_of, n_eligible, elig_machine, elig_time, workers, energy,
                    price, emis, horizon, capacity):
    """Pareto archive of (c_max, p_sum, e_sum, w_max) over every feasible schedule.

    Operations are placed depth-first in global (job-major) order; each level
    tries every eligible machine and every start in the horizon consistent
    with job precedence and machine non-overlap. Returns the archive and the
    number of complete schedules visited.
    """
    n = job_of.shape[0]
    archive = np.empty((capacity, 4))
    size = 0
    leaves = 0
    if n == 0:
        archive[0, :] = 0.0
        return archive[:1].copy(), 1
    alt = np.zeros(n, dtype=np.int64)
    st = np.zeros(n, dtype=np.int64)
    en = np.zeros(n, dtype=np.int64)
    mach = np.zeros(n, dtype=np.int64)
    load = np.zeros(horizon, dtype=np.int64)
    point = np.empty(4)
    d = 0
    alt[0] = 0
    st[0] = -1
    while d >= 0:
        # advance level d to its next candidate placement
        lb = en[d - 1] if (d > 0 and pos_of[d] > 0) else 0
        if st[d] < lb - 1:
            st[d] = lb - 1
        st[d] += 1
        if st[d] + elig_time[d, alt[d]] > horizon:
            alt[d] += 1
            st[d] = lb
            if alt[d] >= n_eligible[d]:
                d -= 1
                if d >= 0:
                    for s in range(st[d], en[d]):
                        load[s] -= workers[d]
                continue
            if st[d] + elig_time[d, alt[d]] > horizon:
                st[d] = horizon
                continue
        m = elig_machine[d, alt[d]]
        tau = elig_time[d, alt[d]]
        t = st[d]
        clash = False
        for k in range(d):
            if mach[k] == m and t < en[k] and st[k] < t + tau:
                clash = True
                break
        if clash:
            continue
        mach[d] = m
        en[d] = t + tau
        for s in range(t, t + tau):
            load[s] += workers[d]
        if d == n - 1:
            leaves += 1
            cmax = 0
            p_sum = 0.0
            e_sum = 0.0
            for k in range(n):
                if en[k] > cmax:
                    cmax = en[k]
                p_sum += energy[k] * window_sum(price, st[k], en[k])
                e_sum += energy[k] * window_sum(emis, st[k], en[k])
            wmax = 0
            for s in range(horizon):
                if load[s] > wmax:
                    wmax = load[s]
            point[0] = cmax
            point[1] = p_sum
            point[2] = e_sum
            point[3] = wmax
            size = _archive_insert(archive, size, point)
            if size >= capacity:
                return archive[:0].copy(), -1
            for s in range(t, t + tau):
                load[s] -= workers[d]
        else:
            d += 1
            alt[d] = 0
            st[d] = -1
    return archive[:size].copy(), leaves
