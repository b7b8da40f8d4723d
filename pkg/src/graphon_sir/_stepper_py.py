"""Numpy fallback for the fixed-step Runge-Kutta stepping loop.

Mirrors the compiled extension ``graphon_sir._stepper``: same signature, same
arithmetic (stage combination through a temporary, elementwise scale by the
step size afterwards), so the two backends agree to rounding noise.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def _segment(times: np.ndarray, t: float) -> int:
    idx = int(np.searchsorted(times, t, side="right")) - 1
    return max(idx, 0)


def run(
    rk_a: np.ndarray,
    rk_b: np.ndarray,
    rk_c: np.ndarray,
    a_times: np.ndarray,
    a_stack: np.ndarray,
    b_times: np.ndarray,
    b_stack: np.ndarray,
    g_times: np.ndarray,
    g_stack: np.ndarray,
    y0: np.ndarray,
    dt: float,
    n_steps: int,
    last_h: float,
    store_steps: np.ndarray,
    self_interaction: bool,
    out_states: np.ndarray,
    stats: np.ndarray,
) -> int:
    """Advance y0 for n_steps; fill out_states rows 1.. at store_steps.

    Returns -1 on success, or the 1-based index of the first step that
    produced a nonfinite state.  stats accumulates, in order: max |s+i+r-1|,
    max (y-1), max (-y), max per-step s increase, max per-step r decrease.
    """
    stages = rk_b.size
    n = b_stack.shape[1]
    y = y0.copy()
    k_rows = np.empty((stages, 3 * n))

    ptr = 0
    for k in range(n_steps):
        h = dt if k < n_steps - 1 else last_h
        t = k * dt
        for i in range(stages):
            if i == 0:
                ys = y
            else:
                ys = y + h * (rk_a[i, :i] @ k_rows[:i])
            t_stage = t + rk_c[i] * h
            ia = _segment(a_times, t_stage)
            ib = _segment(b_times, t_stage)
            ig = _segment(g_times, t_stage)
            s = ys[:n]
            inf_frac = ys[n : 2 * n]
            m = a_stack[ia] @ (b_stack[ib] * inf_frac)
            infection = s * m / n
            if self_interaction:
                infection = infection + b_stack[ib] * s * inf_frac
            recovery = g_stack[ig] * inf_frac
            k_rows[i, :n] = -infection
            k_rows[i, n : 2 * n] = infection - recovery
            k_rows[i, 2 * n :] = recovery
        y_new = y + h * (rk_b @ k_rows)

        if not np.isfinite(y_new).all():
            return k + 1
        sum_dev = np.abs(y_new[:n] + y_new[n : 2 * n] + y_new[2 * n :] - 1.0).max()
        stats[0] = max(stats[0], sum_dev)
        stats[1] = max(stats[1], (y_new - 1.0).max())
        stats[2] = max(stats[2], (-y_new).max())
        stats[3] = max(stats[3], (y_new[:n] - y[:n]).max())
        stats[4] = max(stats[4], (y[2 * n :] - y_new[2 * n :]).max())
        y = y_new

        if ptr < store_steps.size and store_steps[ptr] == k + 1:
            out_states[ptr + 1] = y
            ptr += 1
    return -1
