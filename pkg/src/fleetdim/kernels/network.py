"""Event loop for the full zone network: vehicles, charging stations, matching.

All randomness arrives as pre-drawn unit-rate exponentials and uniforms, so the
loop itself is deterministic. Pending events live in a small timer array and
ties on time are broken by the sequence number assigned when each was
scheduled.
"""
import numpy as np

from .._accel import jit

OK = 0
EXHAUSTED = 1

# timer slots: 0 vehicle arrival, 1 full-charge completion,
# 2..2+n-1 customer arrivals, then one per partial-charge pole
_VEH = 0
_FULL = 1

# integer counters returned in ``counts``
VEHICLES_IN = 0
DISPATCHED = 1
PARTIAL_WAITING = 2
PARTIAL_BUSY = 3
FULL_WAITING = 4
FULL_BUSY = 5
CUSTOMERS = 6
MAX_PARTIAL_QUEUE = 7
MAX_FULL_QUEUE = 8
N_COUNTS = 9


def run_network_loop(p_cum, q, lam_c, lam_v, pole_rate, mu_c,
                     veh_gap, cls_u, route_u, cust_gap, pole_srv, full_srv,
                     horizon, warmup, drain_factor):
    n = p_cum.shape[0]
    n_poles = pole_srv.shape[0]
    n_timers = 2 + n + n_poles
    t_ev = np.full(n_timers, np.inf)
    seq_ev = np.zeros(n_timers, dtype=np.int64)
    seq = 0

    # customer records
    c_class = np.full(horizon, -1, dtype=np.int64)
    c_arr = np.zeros(horizon)
    c_resp = np.full(horizon, np.nan)
    c_next = np.full(horizon, -1, dtype=np.int64)
    q_head = np.full(n, -1, dtype=np.int64)
    q_tail = np.full(n, -1, dtype=np.int64)
    q_len = np.zeros(n, dtype=np.int64)
    q_area = np.zeros(n)
    q_max = np.zeros(n, dtype=np.int64)

    buf = np.zeros(n, dtype=np.int64)
    buf_max = np.zeros(n, dtype=np.int64)

    # partial-charge FIFO of destination buffers, as a ring
    ring_size = veh_gap.shape[0] + 1
    ring = np.zeros(ring_size, dtype=np.int64)
    ring_head = 0
    ring_len = 0
    pole_target = np.zeros(n_poles, dtype=np.int64)
    pole_used = np.zeros(n_poles, dtype=np.int64)
    pole_busy = 0
    full_waiting = 0
    full_busy = 0

    counts = np.zeros(N_COUNTS, dtype=np.int64)
    i_veh = 0
    i_cust = np.zeros(n, dtype=np.int64)
    i_full = 0

    busy_partial_area = 0.0
    busy_full_area = 0.0
    accumulating = warmup == 0
    t_warm = 0.0
    t_stop = np.inf
    now = 0.0
    waiting_total = 0
    status = OK

    # initial schedule
    if veh_gap.shape[0] == 0:
        return c_class, c_arr, c_resp, q_area, q_max, buf, buf_max, counts, \
            0.0, 0.0, 0.0, 0.0, 0.0, EXHAUSTED
    t_ev[_VEH] = veh_gap[0] / lam_v
    seq_ev[_VEH] = seq
    seq += 1
    i_veh = 1
    for i in range(n):
        if lam_c[i] > 0.0 and horizon > 0:
            t_ev[2 + i] = cust_gap[i, 0] / lam_c[i]
            seq_ev[2 + i] = seq
            seq += 1
            i_cust[i] = 1

    drain_limit = np.inf
    while True:
        # next event: earliest time, then earliest sequence number
        e = -1
        for k in range(n_timers):
            if t_ev[k] < np.inf:
                if e < 0 or t_ev[k] < t_ev[e] or (t_ev[k] == t_ev[e] and seq_ev[k] < seq_ev[e]):
                    e = k
        if e < 0:
            break
        t_new = t_ev[e]
        if t_new > drain_limit:
            break
        if accumulating:
            dt = t_new - now
            busy_partial_area += pole_busy * dt
            busy_full_area += full_busy * dt
            for i in range(n):
                q_area[i] += q_len[i] * dt
        now = t_new

        target = -1  # buffer receiving a vehicle during this event
        if e == _VEH:
            counts[VEHICLES_IN] += 1
            if i_veh >= veh_gap.shape[0] or i_veh > cls_u.shape[0] or i_veh > route_u.shape[0]:
                status = EXHAUSTED
                break
            u = cls_u[i_veh - 1]
            c = 0
            while c < n - 1 and p_cum[c] <= u:
                c += 1
            go = route_u[i_veh - 1] < q[c]
            t_ev[_VEH] = now + veh_gap[i_veh] / lam_v
            seq_ev[_VEH] = seq
            seq += 1
            i_veh += 1
            if c == 0 and go:
                if full_busy == 0:
                    if i_full >= full_srv.shape[0]:
                        status = EXHAUSTED
                        break
                    full_busy = 1
                    t_ev[_FULL] = now + full_srv[i_full] / mu_c
                    seq_ev[_FULL] = seq
                    seq += 1
                    i_full += 1
                else:
                    full_waiting += 1
                    if full_waiting > counts[MAX_FULL_QUEUE]:
                        counts[MAX_FULL_QUEUE] = full_waiting
            elif go:
                # SoC class c serves customer class c, buffer index c - 1
                target = c - 1
            else:
                # one partial charge lifts SoC class c to buffer index c
                dest = c
                s = -1
                for k in range(n_poles):
                    if t_ev[2 + n + k] == np.inf:
                        s = k
                        break
                if s >= 0:
                    if pole_used[s] >= pole_srv.shape[1]:
                        status = EXHAUSTED
                        break
                    pole_busy += 1
                    pole_target[s] = dest
                    t_ev[2 + n + s] = now + pole_srv[s, pole_used[s]] / pole_rate
                    seq_ev[2 + n + s] = seq
                    seq += 1
                    pole_used[s] += 1
                else:
                    ring[(ring_head + ring_len) % ring_size] = dest
                    ring_len += 1
                    if ring_len > counts[MAX_PARTIAL_QUEUE]:
                        counts[MAX_PARTIAL_QUEUE] = ring_len
        elif e == _FULL:
            target = n - 1
            if full_waiting > 0:
                if i_full >= full_srv.shape[0]:
                    status = EXHAUSTED
                    break
                full_waiting -= 1
                t_ev[_FULL] = now + full_srv[i_full] / mu_c
                seq_ev[_FULL] = seq
                seq += 1
                i_full += 1
            else:
                full_busy = 0
                t_ev[_FULL] = np.inf
        elif e < 2 + n:
            i = e - 2
            k = counts[CUSTOMERS]
            counts[CUSTOMERS] += 1
            c_class[k] = i
            c_arr[k] = now
            if k == warmup and not accumulating:
                accumulating = True
                t_warm = now
            if buf[i] > 0:
                buf[i] -= 1
                c_resp[k] = 0.0
                counts[DISPATCHED] += 1
            else:
                if q_tail[i] >= 0:
                    c_next[q_tail[i]] = k
                else:
                    q_head[i] = k
                q_tail[i] = k
                q_len[i] += 1
                waiting_total += 1
                if q_len[i] > q_max[i]:
                    q_max[i] = q_len[i]
            if counts[CUSTOMERS] == horizon:
                # arrivals end here; keep running only to serve those waiting
                t_stop = now
                accumulating = False
                for j in range(n):
                    t_ev[2 + j] = np.inf
                drain_limit = now + drain_factor * now
            else:
                if i_cust[i] >= cust_gap.shape[1]:
                    status = EXHAUSTED
                    break
                t_ev[e] = now + cust_gap[i, i_cust[i]] / lam_c[i]
                seq_ev[e] = seq
                seq += 1
                i_cust[i] += 1
        else:
            s = e - 2 - n
            target = pole_target[s]
            if ring_len > 0:
                if pole_used[s] >= pole_srv.shape[1]:
                    status = EXHAUSTED
                    break
                pole_target[s] = ring[ring_head]
                ring_head = (ring_head + 1) % ring_size
                ring_len -= 1
                t_ev[e] = now + pole_srv[s, pole_used[s]] / pole_rate
                seq_ev[e] = seq
                seq += 1
                pole_used[s] += 1
            else:
                pole_busy -= 1
                t_ev[e] = np.inf

        if target >= 0:
            # a vehicle joins buffer ``target``: serve the head customer if any
            if q_len[target] > 0:
                k = q_head[target]
                q_head[target] = c_next[k]
                if q_head[target] < 0:
                    q_tail[target] = -1
                q_len[target] -= 1
                waiting_total -= 1
                c_resp[k] = now - c_arr[k]
                counts[DISPATCHED] += 1
            else:
                buf[target] += 1
                if buf[target] > buf_max[target]:
                    buf_max[target] = buf[target]

        if counts[CUSTOMERS] == horizon and waiting_total == 0:
            break

    counts[PARTIAL_WAITING] = ring_len
    counts[PARTIAL_BUSY] = pole_busy
    counts[FULL_WAITING] = full_waiting
    counts[FULL_BUSY] = full_busy
    if t_stop == np.inf:
        t_stop = now
    return c_class, c_arr, c_resp, q_area, q_max, buf, buf_max, counts, \
        busy_partial_area, busy_full_area, t_warm, t_stop, now, status


run_network = jit(run_network_loop)
