"""Projected inventory level: E[end-of-window inventory | current state].

Three interchangeable backends compute the expected lost sales over the
lead-time window; the projected level then follows from the balance
identity  E[J] = on_hand + pipeline - window * mean_demand + E[lost].

* ``LatticeExact``   exact for integer-valued demand (any real-valued state),
* ``MECustomer``     exact for Mixed-Erlang (hence exponential) demand,
* ``MonteCarlo``     unbiased for any demand; used as the oracle in tests.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import PipelineState
from .demand import DemandModel, MixedErlang
from .errors import ConfigError

DEFAULT_MC_PATHS = 100_000


@dataclass(frozen=True)
class LatticeExact:
    """Exact recursion over the integer demand lattice."""


@dataclass(frozen=True)
class MECustomer:
    """Customer-count recursion for Mixed-Erlang demand."""


@dataclass(frozen=True)
class MonteCarlo:
    paths: int = DEFAULT_MC_PATHS
    seed: int = 0


def default_backend(demand: DemandModel):
    if demand.integer_valued:
        return LatticeExact()
    if isinstance(demand, MixedErlang):
        return MECustomer()
    return MonteCarlo()


def parse_backend_spec(spec: str):
    """Parse a backend flag: ``lattice``, ``me``, or ``mc[:paths=N][,seed=S]``."""
    kind, _, rest = spec.partition(":")
    kind = kind.strip().lower()
    if kind == "lattice":
        return LatticeExact()
    if kind == "me":
        return MECustomer()
    if kind == "mc":
        kv = dict(item.split("=") for item in rest.split(",")) if rest else {}
        return MonteCarlo(
            paths=int(float(kv.get("paths", DEFAULT_MC_PATHS))), seed=int(kv.get("seed", 0))
        )
    raise ConfigError(f"unknown projection backend {spec!r}")


def _check_compatible(demand: DemandModel, backend) -> None:
    if isinstance(backend, LatticeExact) and not demand.integer_valued:
        raise ConfigError(f"lattice backend requires integer-valued demand, got {demand.kind}")
    if isinstance(backend, MECustomer) and not isinstance(demand, MixedErlang):
        raise ConfigError(f"ME backend requires Mixed-Erlang demand, got {demand.kind}")


# ---------------------------------------------------------------------------
# precomputed per-demand tables feeding the kernels
# ---------------------------------------------------------------------------


def lattice_tables(demand: DemandModel):
    """(pmf, suffix sums St, Sp, truncated mean) for an integer demand."""
    pmf = demand.pmf_array()
    d = np.arange(pmf.size, dtype=float)
    st = np.concatenate([np.cumsum((d * pmf)[::-1])[::-1], [0.0]])
    sp = np.concatenate([np.cumsum(pmf[::-1])[::-1], [0.0]])
    return pmf, st, sp, float(st[0])


def me_tables(demand: MixedErlang, window: int):
    """(lam, theta, elk, band size) for the customer-count recursion.

    ``elk[x] = E[(K - x)^+]``.  The band must reach (window + 1) * k_max so
    that states lumped into the overflow bucket can never stock out before
    the window ends; one extra k_max covers the myopic look-ahead.
    """
    theta = demand.theta_arr
    kmax = demand.k_max
    k = np.arange(theta.size, dtype=float)
    elk = np.array([float(np.maximum(k - x, 0.0) @ theta) for x in range(kmax)])
    band = (window + 2) * kmax + 4
    return demand.lam, theta, elk, band


def expected_lost_profile(state: PipelineState, demand: DemandModel, backend=None) -> np.ndarray:
    """E[lost sales in each of the next ``lead_time`` periods | state]."""
    backend = backend if backend is not None else default_backend(demand)
    _check_compatible(demand, backend)
    if isinstance(backend, MECustomer):
        return _me_profile(state, demand)
    if isinstance(backend, LatticeExact):
        return _lattice_profile(state, demand)
    return _mc_profile(state, demand, backend)[0]


def project_expected_level(state: PipelineState, demand: DemandModel, backend=None) -> float:
    """E[J at the end of the lead-time window | state], via the balance identity."""
    backend = backend if backend is not None else default_backend(demand)
    _check_compatible(demand, backend)
    tau = state.lead_time
    if isinstance(backend, LatticeExact):
        _, _, _, mu = lattice_tables(demand)
        el = _lattice_profile(state, demand)
    elif isinstance(backend, MECustomer):
        mu = demand.mean
        el = _me_profile(state, demand)
    else:
        mu = demand.mean
        el = _mc_profile(state, demand, backend)[0]
    return max(0.0, state.position - tau * mu + float(el.sum()))


def _me_profile(state: PipelineState, demand: MixedErlang) -> np.ndarray:
    tau = state.lead_time
    lam, theta, elk, band = me_tables(demand, tau)
    el = np.zeros(tau)
    cur = np.zeros(band)
    nxt = np.zeros(band)
    pq = np.zeros(band)
    pipe = np.asarray(state.outstanding, dtype=float)
    _kernels.me_el_profile(state.on_hand, pipe, lam, theta, elk, el, cur, nxt, pq, False)
    return el / lam


def me_customer_recursion(state: PipelineState, demand: MixedErlang) -> np.ndarray:
    """Per-period expected lost sales under the customer-count recursion."""
    if not isinstance(demand, MixedErlang):
        raise ConfigError(f"customer recursion requires Mixed-Erlang demand, got {demand.kind}")
    return _me_profile(state, demand)


def _lattice_profile(state: PipelineState, demand: DemandModel) -> np.ndarray:
    tau = state.lead_time
    pmf, st, sp, _ = lattice_tables(demand)
    size_l = int(math.floor(state.position)) + 2
    el = np.zeros(tau)
    anchors = np.zeros(tau + 1)
    probs = np.zeros((tau + 1, size_l))
    glen = np.zeros(tau + 1, dtype=np.int64)
    pipe = np.asarray(state.outstanding, dtype=float)
    _kernels.lattice_el_profile(state.on_hand, pipe, pmf, st, sp, el, anchors, probs, glen, False)
    return el


def lattice_recursion(state: PipelineState, demand: DemandModel) -> np.ndarray:
    """Per-period expected lost sales from the exact lattice propagation."""
    if not demand.integer_valued:
        raise ConfigError(f"lattice recursion requires integer-valued demand, got {demand.kind}")
    return _lattice_profile(state, demand)


def _mc_profile(state: PipelineState, demand: DemandModel, backend: MonteCarlo):
    """Monte Carlo estimate of the lost-sales profile, with standard errors."""
    tau = state.lead_time
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(backend.seed)))
    n = backend.paths
    inv = np.full(n, float(state.on_hand))
    el = np.zeros(tau)
    se = np.zeros(tau)
    for j in range(tau):
        d = demand.sample(rng, n)
        lost = np.maximum(d - inv, 0.0)
        el[j] = lost.mean()
        se[j] = lost.std(ddof=1) / math.sqrt(n)
        if j < tau - 1:
            inv = np.maximum(inv - d, 0.0) + state.outstanding[j]
    return el, se


def mc_project(state: PipelineState, demand: DemandModel, backend: MonteCarlo):
    """(projected level, standard error) from the Monte Carlo backend."""
    el, se = _mc_profile(state, demand, backend)
    level = max(0.0, state.position - state.lead_time * demand.mean + float(el.sum()))
    return level, float(np.sqrt((se**2).sum()))


def measure_throughput(demand: DemandModel, tau: int, backend=None, budget_s: float = 1.0, seed: int = 0):
    """Projections per minute on random states (cf. the reported speed table).

    For the ME backend this times the same tight loop the simulator runs;
    other backends are timed through the Python entry point.
    """
    backend = backend if backend is not None else default_backend(demand)
    _check_compatible(demand, backend)
    rng = np.random.default_rng(seed)
    mu = demand.mean
    n_states = 64
    inv = rng.uniform(0.0, 3.0 * mu, n_states)
    pipe = rng.uniform(0.0, 2.0 * mu, (n_states, tau - 1))
    if isinstance(backend, MECustomer):
        lam, theta, elk, band = me_tables(demand, tau)
        _kernels.me_projection_benchmark(inv, pipe, lam, theta, elk, band, 1)  # JIT warm-up
        rounds = 1
        while True:
            start = time.perf_counter()
            _kernels.me_projection_benchmark(inv, pipe, lam, theta, elk, band, rounds)
            elapsed = time.perf_counter() - start
            if elapsed >= budget_s:
                return rounds * n_states / elapsed * 60.0
            rounds = max(rounds * 2, int(rounds * budget_s / max(elapsed, 1e-9)))
    states = [PipelineState(float(inv[i]), tuple(float(x) for x in pipe[i]), tau) for i in range(n_states)]
    project_expected_level(states[0], demand, backend)
    count = 0
    start = time.perf_counter()
    while True:
        for s in states:
            project_expected_level(s, demand, backend)
        count += n_states
        elapsed = time.perf_counter() - start
        if elapsed >= budget_s:
            return count / elapsed * 60.0
