"""Pure-numpy closed-loop kernel.

All users share the exploration schedule, so they are advanced in lockstep
with one vectorised update per step. Floating-point operations are ordered
exactly as in the compiled kernel, which makes both bit-identical.
"""

import numpy as np


def run_users(x0, draws, alpha, beta, gamma, period, horizon, history=False, record=False):
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    draws = np.ascontiguousarray(draws, dtype=np.float64)
    m = x0.shape[0]
    x = x0.copy()
    inc = np.zeros(m)
    best = np.zeros(m)
    paths = served = None
    if record:
        paths = np.empty((m, horizon + 1))
        served = np.empty((m, horizon))
        paths[:, 0] = x
    j = 0
    for k in range(horizon):
        explore = (k % period == 0) if period > 0 else k == 0
        if explore:
            u = draws[:, j]
            j += 1
            d = np.abs(x - u)
            if k == 0:
                inc = u.copy()
                best = d
            elif history:
                better = d < best
                inc = np.where(better, u, inc)
                best = np.where(better, d, best)
            else:
                inc = np.where(d < np.abs(x - inc), u, inc)
        else:
            u = inc
            if history:
                best = np.minimum(best, np.abs(x - u))
        x = alpha * x0 + beta * x + gamma * u
        if record:
            served[:, k] = u
            paths[:, k + 1] = x
    return x, inc, paths, served
