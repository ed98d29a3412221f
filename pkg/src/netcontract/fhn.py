"""Diffusively coupled FitzHugh-Nagumo networks.

Neuron i has a voltage v_i and recovery variable w_i:

    v_i' = c (v_i + w_i - v_i^3 / 3 + r(t)) - gamma * (L v)_i - ell_i v_i
    w_i' = -(v_i - a + b w_i) / c

with L the graph Laplacian of the coupling and r a shared periodic input.
In the norm |x|^2 = |v|^2 + c^2 |w|^2 the network contracts at rate eta
whenever the voltage-block bound c I - gamma (L + L^T)/2 - diag(ell) has
mu_2 at most -eta and eta <= b/c; the cheapest such gains have the closed
form (c + eta) 1 - (gamma / 2) L^T 1.  Contracting trajectories entrain to
the input's period regardless of their initial state.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from netcontract.integrate import DivergedError, rk4
from netcontract.metzler import matrix_measure

__all__ = [
    "SinusoidInput", "SpikeTrainInput", "ZeroInput", "FhnConfig", "Trajectory",
    "CertificateCheck", "ContractionCertificate", "EntrainmentReport",
    "laplacian", "voltage_jacobian_bound", "fhn_gains", "certify",
    "resolved_gains", "initial_state", "simulate", "closed_loop_jacobian",
    "scaled_norm_weights", "scaled_state_norm", "entrainment_check",
    "input_from_json", "input_to_json", "config_from_json", "config_to_json",
    "load_config", "write_trajectory_csv", "DivergedError",
]


@dataclass(frozen=True)
class SinusoidInput:
    offset: float = 4.0
    amplitude: float = 4.0
    period: float = 1.0

    def __call__(self, t):
        return self.offset + self.amplitude * np.sin(2.0 * np.pi * np.asarray(t) / self.period)


@dataclass(frozen=True, eq=False)
class SpikeTrainInput:
    """Periodic piecewise-linear input; breakpoints cover one period [0, T]."""

    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).ravel()
        v = np.asarray(self.values, dtype=float).ravel()
        if t.shape != v.shape or t.shape[0] < 2:
            raise ValueError("need matching breakpoint times and values (>= 2)")
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise ValueError("breakpoint times must start at 0 and increase")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", v)

    @property
    def period(self) -> float:
        return float(self.times[-1])

    def __call__(self, t):
        return np.interp(np.mod(np.asarray(t), self.period), self.times, self.values)


@dataclass(frozen=True)
class ZeroInput:
    period: float = 1.0

    def __call__(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))


def laplacian(adjacency) -> np.ndarray:
    """Graph Laplacian diag(M 1) - M of a binary adjacency (zero diagonal)."""
    M = np.asarray(adjacency, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"adjacency must be square, got shape {M.shape}")
    if np.any(np.diag(M) != 0):
        raise ValueError("adjacency has nonzero diagonal entries")
    if not np.isin(M, (0.0, 1.0)).all():
        raise ValueError("adjacency entries must be 0 or 1")
    return np.diag(M.sum(axis=1)) - M


@dataclass
class FhnConfig:
    adjacency: np.ndarray
    a: float = 0.0
    b: float = 2.0
    c: float = 6.0
    gamma: float = 0.05
    eta: float = 0.05
    gains: np.ndarray | None = None  # None: minimum-effort gains for eta
    input: object = field(default_factory=SinusoidInput)
    seed: int = 0
    t_end: float = 25.0
    step: float = 1e-3

    def __post_init__(self):
        self.adjacency = np.asarray(self.adjacency, dtype=float)
        laplacian(self.adjacency)  # validates shape and entries
        if self.c <= 0:
            raise ValueError("c must be positive")
        if self.b < 0:
            raise ValueError("b must be nonnegative")
        if self.gamma < 0:
            raise ValueError("gamma must be nonnegative")
        if self.step <= 0 or self.t_end <= 0:
            raise ValueError("step and t_end must be positive")
        if self.gains is not None:
            g = np.asarray(self.gains, dtype=float).ravel()
            if g.shape[0] != self.n_neurons:
                raise ValueError(
                    f"gains have length {g.shape[0]}, expected {self.n_neurons}")
            self.gains = g

    @property
    def n_neurons(self) -> int:
        return self.adjacency.shape[0]


def voltage_jacobian_bound(L, c: float, gamma: float) -> np.ndarray:
    """State-independent bound c I - gamma (L + L^T)/2 on the symmetric part
    of the voltage-voltage Jacobian block (the cubic only helps)."""
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    return c * np.eye(n) - gamma * (L + L.T) / 2.0


def fhn_gains(L, c: float, gamma: float, eta: float) -> np.ndarray:
    """Minimum-effort voltage gains for contraction rate eta.

    ell* = (c + eta) 1 - (gamma / 2) L^T 1.  Requires eta >= gamma *
    max_i L_ii - c so every gain stays purely dissipative in the bound.
    """
    L = np.asarray(L, dtype=float)
    n = L.shape[0]
    floor = gamma * float(np.max(np.diag(L))) - c if n else -c
    if eta < floor:
        raise ValueError(
            f"eta = {eta:g} violates eta >= gamma * max degree - c = {floor:g}")
    return (c + eta) * np.ones(n) - (gamma / 2.0) * (L.T @ np.ones(n))


def resolved_gains(config: FhnConfig) -> np.ndarray:
    if config.gains is not None:
        return config.gains
    return fhn_gains(laplacian(config.adjacency), config.c, config.gamma, config.eta)


def scaled_norm_weights(config: FhnConfig) -> np.ndarray:
    """Diagonal of the scaling T = diag(I, c I) under which the closed loop
    is measured."""
    n = config.n_neurons
    return np.concatenate([np.ones(n), config.c * np.ones(n)])


def scaled_state_norm(x, c: float) -> np.ndarray:
    """|x|_{2,T} = sqrt(|v|^2 + c^2 |w|^2), batched over leading axes."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1] // 2
    v = x[..., :n]
    w = x[..., n:]
    return np.sqrt((v * v).sum(axis=-1) + (c * c) * (w * w).sum(axis=-1))


def closed_loop_jacobian(config: FhnConfig, x) -> np.ndarray:
    """Jacobian of the closed-loop field at state x (gains resolved)."""
    n = config.n_neurons
    x = np.asarray(x, dtype=float).ravel()
    v = x[:n]
    L = laplacian(config.adjacency)
    ell = resolved_gains(config)
    c = config.c
    J = np.zeros((2 * n, 2 * n))
    J[:n, :n] = c * (np.eye(n) - np.diag(v * v)) - config.gamma * L - np.diag(ell)
    J[:n, n:] = c * np.eye(n)
    J[n:, :n] = -np.eye(n) / c
    J[n:, n:] = -(config.b / c) * np.eye(n)
    return J


@dataclass
class CertificateCheck:
    name: str
    passed: bool
    residual: float


@dataclass
class ContractionCertificate:
    eta_requested: float
    eta_certified: float
    mu_scaled: float
    checks: list[CertificateCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


# Slack for the certificate's floating-point comparisons.
_CERT_SLACK = 1e-9


def certify(config: FhnConfig) -> ContractionCertificate:
    """Contraction certificate for the closed-loop network.

    In the scaled norm, mu of the closed-loop Jacobian at any state is at
    most max(mu_2(c I - gamma (L + L^T)/2 - diag(ell)), -b/c).  The rate eta
    is certified when that bound is <= -eta, which also needs eta <= b/c.
    The nonnegativity of the bound plus eta*I is reported because the
    minimum-gain closed form is only guaranteed optimal under it.
    """
    L = laplacian(config.adjacency)
    ell = resolved_gains(config)
    eta = config.eta
    bound = voltage_jacobian_bound(L, config.c, config.gamma)
    closed_bound = bound - np.diag(ell)
    mu_v = matrix_measure(closed_bound, "two")
    mu_scaled = max(mu_v, -config.b / config.c)
    checks = [
        CertificateCheck("eta_le_b_over_c", eta <= config.b / config.c + _CERT_SLACK,
                         eta - config.b / config.c),
        CertificateCheck("bound_plus_eta_nonneg",
                         float(np.min(bound + eta * np.eye(config.n_neurons))) >= -1e-12,
                         -float(np.min(bound + eta * np.eye(config.n_neurons)))),
        CertificateCheck("scaled_measure_le_minus_eta", mu_scaled <= -eta + _CERT_SLACK,
                         mu_scaled + eta),
    ]
    return ContractionCertificate(eta_requested=float(eta),
                                  eta_certified=-mu_scaled,
                                  mu_scaled=mu_scaled, checks=checks)


def initial_state(config: FhnConfig, rng=None) -> np.ndarray:
    """Uniform draw from [-4, 4] per coordinate (seeded from the config)."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    return rng.uniform(-4.0, 4.0, size=2 * config.n_neurons)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    input_trace: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        self.input_trace = np.asarray(self.input_trace, dtype=float)
        if self.times.ndim != 1 or np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if self.states.shape[0] != self.times.shape[0]:
            raise ValueError("states and times disagree on sample count")
        if self.states.shape[-1] % 2 != 0:
            raise ValueError("state dimension must be even (v and w halves)")

    @property
    def n_neurons(self) -> int:
        return self.states.shape[-1] // 2

    @property
    def v(self) -> np.ndarray:
        return self.states[..., :self.n_neurons]

    @property
    def w(self) -> np.ndarray:
        return self.states[..., self.n_neurons:]


def _closed_loop_field(config: FhnConfig, ell: np.ndarray):
    L = laplacian(config.adjacency)
    a, b, c, gamma = config.a, config.b, config.c, config.gamma
    r = config.input
    n = config.n_neurons

    def f(t, x):
        v = x[..., :n]
        w = x[..., n:]
        dv = c * (v + w - v ** 3 / 3.0 + r(t)) - gamma * (v @ L.T) - ell * v
        dw = -(v - a + b * w) / c
        return np.concatenate([dv, dw], axis=-1)

    return f


def simulate(config: FhnConfig, x0=None, t_end: float | None = None,
             step: float | None = None) -> Trajectory:
    """Integrate the closed-loop network; x0 defaults to a seeded draw.

    x0 may carry leading batch axes (last axis 2N); batches integrate in
    lockstep on the shared grid.
    """
    ell = resolved_gains(config)
    if x0 is None:
        x0 = initial_state(config)
    x0 = np.asarray(x0, dtype=float)
    if x0.shape[-1] != 2 * config.n_neurons:
        raise ValueError(
            f"x0 has state dimension {x0.shape[-1]}, expected {2 * config.n_neurons}")
    times, states = rk4(_closed_loop_field(config, ell), x0, 0.0,
                        config.t_end if t_end is None else t_end,
                        config.step if step is None else step)
    return Trajectory(times=times, states=states,
                      input_trace=np.asarray(config.input(times), dtype=float))


@dataclass
class EntrainmentReport:
    eta: float
    period: float
    gap_slack: float            # worst gap(t) / (e^{-eta t} gap(0)) over pairs, t > 0
    decay_rate: float           # smallest fitted log-decay rate over pairs
    periodicity_residual: float
    sync_spread: float
    n_pairs: int


def entrainment_check(config: FhnConfig, trajectories, period: float | None = None,
                      fit_start: float = 1.0, transient_periods: int = 15) -> EntrainmentReport:
    """Entrainment diagnostics for trajectories on a common grid.

    Pairwise scaled gaps are compared against the certified envelope
    e^{-eta t} gap(0) and log-linear fitted for an empirical decay rate;
    steady-state periodicity and cross-neuron spread are measured over the
    final period.  The horizon must leave room for the transient
    (``transient_periods`` + 3 periods).
    """
    trajs = list(trajectories)
    if len(trajs) < 2:
        raise ValueError("need at least two trajectories")
    times = trajs[0].times
    for tr in trajs[1:]:
        if tr.states.shape != trajs[0].states.shape or not np.array_equal(tr.times, times):
            raise ValueError("trajectories must share one time grid")
    if period is None:
        period = getattr(config.input, "period", None)
        if period is None:
            raise ValueError("period not deducible from the input; pass it explicitly")
    period = float(period)
    t_end = float(times[-1])
    if t_end < (transient_periods + 3) * period:
        raise ValueError(
            f"horizon {t_end:g} too short: need at least {(transient_periods + 3)} "
            f"periods ({(transient_periods + 3) * period:g}) to pass the transient")
    eta = config.eta
    c = config.c

    gap_slack = 0.0
    decay_rate = math.inf
    fit_mask = times >= fit_start
    n_pairs = 0
    for ti, tj in combinations(trajs, 2):
        gap = scaled_state_norm(ti.states - tj.states, c)
        g0 = float(gap[0])
        n_pairs += 1
        if g0 == 0.0:
            continue
        envelope = g0 * np.exp(-eta * times)
        gap_slack = max(gap_slack, float(np.max(gap[1:] / envelope[1:])))
        valid = fit_mask & (gap > 0.0)
        if int(valid.sum()) >= 2:
            slope = float(np.polyfit(times[valid], np.log(gap[valid]), 1)[0])
            decay_rate = min(decay_rate, -slope)

    step = float(times[1] - times[0])
    k = int(round(period / step))
    if abs(k * step - period) > 1e-9 * max(1.0, period) or k < 1:
        raise ValueError("period is not an integer multiple of the sampling step")
    periodicity = 0.0
    spread = 0.0
    for tr in trajs:
        tail = tr.states[-(k + 1):]
        prev = tr.states[-(2 * k + 1):-k]
        periodicity = max(periodicity, float(np.max(np.abs(tail - prev))))
        v_tail = tr.v[-(k + 1):]
        spread = max(spread, float(np.max(v_tail.max(axis=-1) - v_tail.min(axis=-1))))
    return EntrainmentReport(eta=eta, period=period, gap_slack=gap_slack,
                             decay_rate=decay_rate, periodicity_residual=periodicity,
                             sync_spread=spread, n_pairs=n_pairs)


_INPUT_KINDS = {"sinusoid": SinusoidInput, "spike_train": SpikeTrainInput, "zero": ZeroInput}


def input_from_json(obj) -> object:
    kind = obj.get("kind")
    if kind not in _INPUT_KINDS:
        raise ValueError(f"unknown input kind {kind!r}; expected one of {sorted(_INPUT_KINDS)}")
    params = dict(obj.get("params", {}))
    if kind == "spike_train":
        params["times"] = np.asarray(params["times"], dtype=float)
        params["values"] = np.asarray(params["values"], dtype=float)
    return _INPUT_KINDS[kind](**params)


def input_to_json(inp) -> dict:
    if isinstance(inp, SinusoidInput):
        return {"kind": "sinusoid", "params": {"offset": inp.offset,
                                               "amplitude": inp.amplitude,
                                               "period": inp.period}}
    if isinstance(inp, SpikeTrainInput):
        return {"kind": "spike_train", "params": {"times": inp.times.tolist(),
                                                  "values": inp.values.tolist()}}
    if isinstance(inp, ZeroInput):
        return {"kind": "zero", "params": {"period": inp.period}}
    raise TypeError(f"cannot serialize input of type {type(inp).__name__}")


def config_from_json(obj: dict) -> FhnConfig:
    adjacency = np.asarray(obj["adjacency"], dtype=float)
    n = int(obj.get("N", adjacency.shape[0] if adjacency.ndim == 2 else 0) or 0)
    if adjacency.ndim == 1:
        if n <= 0 or adjacency.size != n * n:
            raise ValueError("flat adjacency requires N with N*N entries")
        adjacency = adjacency.reshape(n, n)
    if "N" in obj and int(obj["N"]) != adjacency.shape[0]:
        raise ValueError(
            f"N = {obj['N']} does not match adjacency of size {adjacency.shape[0]}")
    gains = obj.get("gains", "auto")
    if isinstance(gains, str):
        if gains != "auto":
            raise ValueError(f"gains must be 'auto' or a list, got {gains!r}")
        gains = None
    kwargs = {}
    for key in ("a", "b", "c", "gamma", "eta", "seed", "t_end", "step"):
        if key in obj:
            kwargs[key] = obj[key]
    if "input" in obj:
        kwargs["input"] = input_from_json(obj["input"])
    return FhnConfig(adjacency=adjacency, gains=gains, **kwargs)


def config_to_json(config: FhnConfig) -> dict:
    return {
        "N": config.n_neurons,
        "adjacency": config.adjacency.astype(int).tolist(),
        "a": config.a, "b": config.b, "c": config.c,
        "gamma": config.gamma, "eta": config.eta,
        "gains": "auto" if config.gains is None else config.gains.tolist(),
        "input": input_to_json(config.input),
        "seed": config.seed, "t_end": config.t_end, "step": config.step,
    }


def load_config(path) -> FhnConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return config_from_json(json.load(fh))


def write_trajectory_csv(path, traj: Trajectory) -> None:
    """CSV with header t, v1..vN, w1..wN, r; floats keep full precision."""
    n = traj.n_neurons
    if traj.states.ndim != 2:
        raise ValueError("CSV export expects a single (unbatched) trajectory")
    header = ",".join(["t"] + [f"v{i+1}" for i in range(n)]
                      + [f"w{i+1}" for i in range(n)] + ["r"])
    table = np.column_stack([traj.times, traj.states, traj.input_trace])
    np.savetxt(path, table, delimiter=",", fmt="%.17g", header=header, comments="")
