"""Single-station FIFO queue kernels driven by pre-drawn random streams."""
import numpy as np

from .._accel import jit


def mm1_departures_loop(arrivals, services):
    n = arrivals.shape[0]
    dep = np.empty(n)
    last = 0.0
    for k in range(n):
        start = arrivals[k] if arrivals[k] > last else last
        last = start + services[k]
        dep[k] = last
    return dep


def mm1_departures_numpy(arrivals, services):
    # Lindley recursion in closed form: D_k = S_k + max_{j<=k}(A_j - S_{j-1})
    csum = np.cumsum(services)
    prev = np.concatenate(([0.0], csum[:-1]))
    return csum + np.maximum.accumulate(arrivals - prev)


mm1_departures = jit(mm1_departures_loop, mm1_departures_numpy)


def occupancy_area_loop(arrivals, departures, t0, t1):
    """Integral of the number in system over ``[t0, t1]``."""
    area = 0.0
    for k in range(arrivals.shape[0]):
        a = arrivals[k] if arrivals[k] > t0 else t0
        d = departures[k] if departures[k] < t1 else t1
        if d > a:
            area += d - a
    return area


def occupancy_area_numpy(arrivals, departures, t0, t1):
    lo = np.maximum(arrivals, t0)
    hi = np.minimum(departures, t1)
    return float(np.sum(np.clip(hi - lo, 0.0, None)))


occupancy_area = jit(occupancy_area_loop, occupancy_area_numpy)


def max_in_system_loop(arrivals, departures):
    """Largest number in system seen by an arrival; departures non-decreasing."""
    best = 0
    j = 0
    n = arrivals.shape[0]
    for k in range(n):
        while j < n and departures[j] <= arrivals[k]:
            j += 1
        here = k + 1 - j
        if here > best:
            best = here
    return best


def max_in_system_numpy(arrivals, departures):
    if arrivals.size == 0:
        return 0
    gone = np.searchsorted(departures, arrivals, side="right")
    return int(np.max(np.arange(1, arrivals.size + 1) - gone))


max_in_system = jit(max_in_system_loop, max_in_system_numpy)


def mmc_fifo_loop(arrivals, services, t0, t1):
    """FIFO multi-server queue; ``services[s]`` is server ``s``'s own stream.

    Returns busy server-time inside ``[t0, t1]``, the largest waiting line,
    and a status flag (1 when a server's stream ran out).
    """
    c = services.shape[0]
    m = services.shape[1]
    free_at = np.zeros(c)
    used = np.zeros(c, dtype=np.int64)
    n = arrivals.shape[0]
    starts = np.empty(n)
    busy = 0.0
    longest = 0
    j = 0
    for k in range(n):
        s = 0
        for t in range(1, c):
            if free_at[t] < free_at[s]:
                s = t
        if used[s] >= m:
            return busy, longest, 1
        start = arrivals[k] if arrivals[k] > free_at[s] else free_at[s]
        end = start + services[s, used[s]]
        used[s] += 1
        free_at[s] = end
        starts[k] = start
        # waiting line seen at this arrival: earlier customers not yet started
        while j < k and starts[j] <= arrivals[k]:
            j += 1
        if k - j > longest:
            longest = k - j
        a = start if start > t0 else t0
        b = end if end < t1 else t1
        if b > a:
            busy += b - a
    return busy, longest, 0


mmc_fifo = jit(mmc_fifo_loop)
