"""Fixed-step classical Runge-Kutta integration with divergence detection."""

from __future__ import annotations

import numpy as np


class DivergedError(RuntimeError):
    """State became non-finite during integration; carries the time."""

    def __init__(self, time: float):
        super().__init__(f"state became non-finite at t = {time:g}")
        self.time = float(time)


def rk4(f, x0, t0: float, t_end: float, step: float):
    """Integrate x' = f(t, x) with the classical fourth-order scheme.

    The state may carry leading batch axes; f must map (t, x) -> dx of the
    same shape.  Returns (times, states) with states[k] the state at
    times[k].  Overflow to non-finite values raises DivergedError.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    if t_end <= t0:
        raise ValueError("t_end must exceed t0")
    n_steps = max(int(round((t_end - t0) / step)), 1)
    times = t0 + step * np.arange(n_steps + 1)
    x = np.asarray(x0, dtype=float)
    out = np.empty((n_steps + 1,) + x.shape)
    out[0] = x
    half = step / 2.0
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_steps):
            t = times[k]
            k1 = f(t, x)
            k2 = f(t + half, x + half * k1)
            k3 = f(t + half, x + half * k2)
            k4 = f(t + step, x + step * k3)
            x = x + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.all(np.isfinite(x)):
                raise DivergedError(times[k + 1])
            out[k + 1] = x
    return times, out
