"""Maximal dispatch flows at a fixed zone in-flow.

With ``x_k = lambda_v * p_k * q_k`` (vehicles of class k sent straight to
customers), the response constraint of customer class ``k + 1`` reads

    x_k <= x_{(k+1) mod n} + lambda_v * p_k - r_k

and the remaining constraints are bounds ``0 <= x_k <= lambda_v p_k`` plus
``x_0 <= mu_c - eps``. This is a difference-constraint system on one cycle,
so it has a componentwise greatest solution whenever it is feasible. That
solution simultaneously maximises every ``x_k``, hence minimises the
partial-charging load ``lambda_v - sum(x)``.
"""
import numpy as np

from .._accel import jit

OK = 0
CYCLE_DEFICIT = 1  # lambda_v below the in-flow floor
NEGATIVE_FLOW = 2  # some class cannot be fed without a negative dispatch


def max_dispatch_loop(lam, p, r, x0_cap, tol):
    n = p.shape[0]
    u = np.empty(n)
    w = np.empty(n)
    total_w = 0.0
    for k in range(n):
        u[k] = lam * p[k]
        w[k] = lam * p[k] - r[k]
        total_w += w[k]
    if x0_cap < u[0]:
        u[0] = x0_cap
    if total_w < -tol:
        return u, CYCLE_DEFICIT
    # Cyclic coordinate relaxation: each x_k drops to the largest value its
    # successor allows. Two laps cover every path on a non-negative cycle.
    for _ in range(2):
        for k in range(n - 1, -1, -1):
            nxt = k + 1
            if nxt == n:
                nxt = 0
            cap = u[nxt] + w[k]
            if cap < u[k]:
                u[k] = cap
    status = OK
    for k in range(n):
        if u[k] < -tol:
            status = NEGATIVE_FLOW
        elif u[k] < 0.0:
            u[k] = 0.0
    return u, status


max_dispatch = jit(max_dispatch_loop)
