"""Exact and discrete-event samplers producing stationary workload pools.

Every sampler owns its randomness through :func:`heavyq.streams.stream`; the
role keys used per simulator are listed next to it.  Identical ``(spec, n,
seed)`` always produce identical pools, independent of chunk sizes or worker
counts.

Samplers
--------
``pk_exact_sample``
    i.i.d. draws from the exact stationary workload of a single-server queue
    via the geometric compound representation behind the Pollaczek-Khinchine
    formula: V = X_1 + ... + X_N with N geometric (P(N=n) = (1-rho) rho^n,
    the atom at zero being the idle probability) and X_i i.i.d. residual
    service requirements.  At drain speed c only rho changes (rho = lam
    beta / c); the jumps stay unscaled because the workload is measured in
    work units.  No warmup is needed - the samples are exactly stationary.

``fluid_sim``
    Alternating on/off cycles of a fluid queue; the per-cycle buffer recursion
    is solved in closed form by a prefix-scan Lindley identity, and the
    time-stationary pool is built by jittered-grid sampling (one uniform phase
    per cycle), which is unbiased for time averages.

``altspeed_des``
    Event-free simulation of the queue with alternating drain speed: the
    between-arrival drain is the increment of the toggle process' cumulative
    drain function, so the pre-arrival workloads satisfy a Lindley recursion
    (exact, since the drain speed is nonnegative).  Pre-arrival samples are
    time-stationary by PASTA and are tagged with the prevailing speed.

``mg2_des``
    FCFS simulation of two heterogeneous servers (exponential at server 1,
    generic at server 2).  The head-of-queue customer takes whichever server
    frees first; an arrival finding BOTH servers idle goes to server 1 (the
    exponential server) - this assignment rule is a modeling choice the
    published tail formulas do not depend on, since they consume the
    occupancies measured from the same simulation.  Occupancies of the empty
    and single-customer states are time integrals accumulated by an event
    sweep, with batch means for error bars.

Warmup for the discrete-event samplers discards the first 10% of simulated
time (or customers); the exact P-K sampler needs none.

Replications
------------
With heavy-tailed input a single simulated path has long-range-dependent
occupation errors (one huge service request drives a long excursion), so the
discrete-event samplers accept ``replications``: the run is split into that
many independent paths, replication i drawing from streams keyed by
``(seed, role, i)``, each with its own warmup, merged in replication order.
The merged pool is identical for any worker count or chunk size.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .asymptotics import AltSpeedSpec, FluidSpec, Mg1Spec, Mg1SpeedSpec, Mg2Occupancy, Mg2Spec
from .streams import stream

__all__ = [
    "SamplePool",
    "pk_exact_sample",
    "fluid_sim",
    "FluidResult",
    "altspeed_des",
    "AltSpeedResult",
    "mg2_des",
    "Mg2Result",
    "replicated_values",
]

# stream role keys (second component of the stream key)
_PK = 0
_FLUID_ON, _FLUID_OFF, _FLUID_PHASE = 10, 11, 12
_ALT_ARRIVALS, _ALT_SERVICE, _ALT_HIGH, _ALT_LOW, _ALT_GRID = 20, 21, 22, 23, 24
_MG2_ARRIVALS, _MG2_EXP, _MG2_GEN = 30, 31, 32
_REPLICATION = 90


@dataclass
class SamplePool:
    """Weighted simulation samples with provenance.

    ``values`` are nonnegative workloads or waiting times; ``weights`` are
    time weights (None means equal weights); ``tags`` are optional one-letter
    labels.  ``meta`` records model id, seed, warmup policy, and count.
    """

    values: np.ndarray
    weights: np.ndarray | None = None
    tags: np.ndarray | None = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.weights is not None:
            self.weights = np.asarray(self.weights, dtype=float)
            if self.weights.shape != self.values.shape:
                raise ValueError("weights must match values")
            if np.any(self.weights <= 0):
                raise ValueError("weights must be positive")
        if np.any(self.values < 0):
            raise ValueError("pool values must be nonnegative")
        self.meta.setdefault("count", self.values.size)

    @property
    def n(self) -> int:
        return self.values.size

    def total_weight(self) -> float:
        return float(self.values.size if self.weights is None else self.weights.sum())

    def subset(self, mask: np.ndarray, **meta) -> "SamplePool":
        return SamplePool(
            self.values[mask],
            None if self.weights is None else self.weights[mask],
            None if self.tags is None else self.tags[mask],
            meta={**self.meta, **meta, "count": int(mask.sum())},
        )

    def to_csv(self, path) -> None:
        tags = self.tags if self.tags is not None else np.full(self.n, "", dtype="<U1")
        weights = self.weights if self.weights is not None else np.ones(self.n)
        with open(path, "w") as fh:
            fh.write("value,weight,tag\n")
            for v, w, t in zip(self.values, weights, tags):
                fh.write(f"{v:.17g},{w:.17g},{t}\n")

    @classmethod
    def from_csv(cls, path) -> "SamplePool":
        data = np.genfromtxt(
            path, delimiter=",", skip_header=1, dtype=[("v", float), ("w", float), ("t", "U4")]
        )
        data = np.atleast_1d(data)
        weights = data["w"]
        if np.allclose(weights, 1.0):
            weights = None
        tags = data["t"] if any(t for t in data["t"]) else None
        return cls(data["v"], weights, tags)


def _exp_draws(rng: np.random.Generator, rate: float, size: int) -> np.ndarray:
    # inverse transform on (0, 1]; keeps draws reproducible per (seed, index)
    return -np.log(1.0 - rng.random(size)) / rate


# ---------------------------------------------------------------------------
# exact Pollaczek-Khinchine sampler


def pk_exact_sample(spec, n: int, seed: int) -> SamplePool:
    """n i.i.d. exact stationary workload samples of a single-server queue."""
    if isinstance(spec, Mg1Spec):
        spec = Mg1SpeedSpec(spec.lam, 1.0, spec.service)
    if not isinstance(spec, Mg1SpeedSpec):
        raise TypeError(f"expected a single-server spec, got {type(spec).__name__}")
    n = int(n)
    rho = spec.rho
    residual = spec.service.residual()
    rng = stream(seed, _PK)
    out = np.empty(n)
    mean_jumps = rho / (1.0 - rho)
    chunk = max(10_000, min(n, int(2e6 / max(mean_jumps, 1.0))))
    pos = 0
    while pos < n:
        m = min(chunk, n - pos)
        counts = rng.geometric(1.0 - rho, size=m) - 1
        total = int(counts.sum())
        if total:
            draws = np.asarray(residual.sample(rng, total))
            idx = np.repeat(np.arange(m), counts)
            out[pos : pos + m] = np.bincount(idx, weights=draws, minlength=m)
        else:
            out[pos : pos + m] = 0.0
        pos += m
    meta = {"model": "pk", "seed": seed, "warmup": "none (exact stationarity)", "count": n}
    return SamplePool(out, meta=meta)


# ---------------------------------------------------------------------------
# fluid queue


@dataclass
class FluidResult:
    stationary: SamplePool
    at_on_start: SamplePool


def _lindley(increments: np.ndarray, w0: float) -> np.ndarray:
    """Zero-floored random walk after each increment, starting from w0."""
    s = np.cumsum(increments)
    return np.maximum(s - np.minimum.accumulate(s), w0 + s)


def _split_counts(n: int, replications: int) -> list[int]:
    replications = max(1, int(replications))
    counts = [n // replications] * replications
    counts[0] += n - sum(counts)
    return counts


def _fluid_one(spec: FluidSpec, cycles: int, seed: int, rep: int, grid_per_cycle: int, warmup_frac: float):
    on = np.asarray(spec.on.sample(stream(seed, _FLUID_ON, rep), cycles))
    off = np.asarray(spec.off.sample(stream(seed, _FLUID_OFF, rep), cycles))
    phase = stream(seed, _FLUID_PHASE, rep).random(cycles)
    growth = spec.r - spec.d

    w_after = _lindley(growth * on - spec.d * off, 0.0)
    w_start = np.concatenate(([0.0], w_after[:-1]))
    warm = int(cycles * warmup_frac)

    g = int(grid_per_cycle)
    vals = np.empty((cycles - warm) * g)
    wts = np.empty_like(vals)
    block = 200_000
    for lo in range(warm, cycles, block):
        hi = min(cycles, lo + block)
        a, u, w0 = on[lo:hi, None], off[lo:hi, None], w_start[lo:hi, None]
        length = a + u
        t = (np.arange(g)[None, :] + phase[lo:hi, None]) * length / g
        rising = w0 + growth * t
        falling = np.maximum(0.0, w0 + growth * a - spec.d * (t - a))
        v = np.where(t <= a, rising, falling)
        o = (lo - warm) * g
        vals[o : o + v.size] = v.ravel()
        wts[o : o + v.size] = np.broadcast_to(length / g, v.shape).ravel()
    return vals, wts, w_start[warm:]


def fluid_sim(
    spec: FluidSpec,
    cycles: int,
    seed: int,
    grid_per_cycle: int = 8,
    warmup_frac: float = 0.1,
    replications: int = 1,
) -> FluidResult:
    """Simulate on/off cycles; returns time-stationary and on-start pools.

    The buffer grows at r - d during on-periods, drains at d during
    off-periods (floored at zero), so the workloads at successive on-starts
    follow the Lindley recursion w' = max(0, w + (r-d) A - d U).  Stationary
    samples are taken on a per-cycle grid with a random phase, each point
    weighted by cycle_length / grid_per_cycle.
    """
    parts = [
        _fluid_one(spec, m, seed, i, grid_per_cycle, warmup_frac)
        for i, m in enumerate(_split_counts(int(cycles), replications))
    ]
    meta = {
        "model": "fluid",
        "seed": seed,
        "warmup": f"first {warmup_frac:.0%} of cycles per replication",
        "replications": len(parts),
    }
    stationary = SamplePool(
        np.concatenate([p[0] for p in parts]),
        np.concatenate([p[1] for p in parts]),
        meta={**meta, "kind": "time-stationary"},
    )
    on_start_pool = SamplePool(
        np.concatenate([p[2] for p in parts]), meta={**meta, "kind": "at-on-start"}
    )
    return FluidResult(stationary, on_start_pool)


# ---------------------------------------------------------------------------
# alternating service speed


@dataclass
class AltSpeedResult:
    pool_high: SamplePool
    pool_all: SamplePool
    p_high: float
    p_high_se: float
    grid_pool: SamplePool | None = None


def _toggle_process(spec: AltSpeedSpec, horizon: float, seed: int, rep: int):
    """Alternating high/low segments covering [0, horizon], starting high."""
    rng_high = stream(seed, _ALT_HIGH, rep)
    rng_low = stream(seed, _ALT_LOW, rep)
    cycle_mean = 1.0 / spec.nu_rate + spec.delta
    highs, lows, covered = [], [], 0.0
    while covered < horizon:
        m = max(1024, int(1.1 * (horizon - covered) / cycle_mean) + 64)
        h = _exp_draws(rng_high, spec.nu_rate, m)
        low = np.asarray(spec.low.sample(rng_low, m))
        highs.append(h)
        lows.append(low)
        covered += float(h.sum() + low.sum())
    h = np.concatenate(highs)
    low = np.concatenate(lows)
    seg = np.empty(2 * h.size)
    seg[0::2] = h
    seg[1::2] = low
    epochs = np.concatenate(([0.0], np.cumsum(seg)))
    is_high = np.arange(seg.size) % 2 == 0
    speeds = np.where(is_high, spec.s_h, spec.s_l)
    drain = np.concatenate(([0.0], np.cumsum(speeds * seg)))
    high_time = np.concatenate(([0.0], np.cumsum(np.where(is_high, seg, 0.0))))
    return epochs, speeds, drain, high_time


def _toggle_eval(epochs, speeds, cumulative, rate_if_high, t):
    """Evaluate a piecewise-linear cumulative (drain or high-time) at times t."""
    j = np.searchsorted(epochs, t, side="right") - 1
    return cumulative[j] + rate_if_high(j) * (t - epochs[j]), j


def _altspeed_one(
    spec: AltSpeedSpec,
    arrivals: int,
    seed: int,
    rep: int,
    warmup_frac: float,
    batches: int,
    grid_points: int,
):
    n = int(arrivals)
    gaps = _exp_draws(stream(seed, _ALT_ARRIVALS, rep), spec.lam, n)
    t = np.cumsum(gaps)
    horizon = float(t[-1])
    service = np.asarray(spec.service.sample(stream(seed, _ALT_SERVICE, rep), n))

    epochs, speeds, drain, high_time = _toggle_process(spec, horizon, seed, rep)

    def speed_at(j):
        return np.where(j % 2 == 0, spec.s_h, spec.s_l)

    drained, j_arr = _toggle_eval(epochs, speeds, drain, speed_at, t)
    w_before = np.empty(n)
    w_before[0] = 0.0
    if n > 1:
        increments = service[:-1] - np.diff(drained)
        w_before[1:] = _lindley(increments, 0.0)
    high = j_arr % 2 == 0

    t0 = warmup_frac * horizon
    keep = t >= t0

    def high_rate(j):
        return np.where(j % 2 == 0, 1.0, 0.0)

    edges = np.linspace(t0, horizon, batches + 1)
    ht_edges, _ = _toggle_eval(epochs, speeds, high_time, high_rate, edges)
    batch_fracs = np.diff(ht_edges) / np.diff(edges)
    high_span = float(ht_edges[-1] - ht_edges[0])

    grid_vals = None
    if grid_points:
        g = np.sort(stream(seed, _ALT_GRID, rep).uniform(t0, horizon, int(grid_points)))
        drained_g, _ = _toggle_eval(epochs, speeds, drain, speed_at, g)
        prev = np.searchsorted(t, g, side="right") - 1
        w_after = w_before + service
        grid_vals = np.where(
            prev >= 0,
            np.maximum(0.0, w_after[prev] - (drained_g - drained[np.maximum(prev, 0)])),
            np.maximum(0.0, -drained_g),
        )

    return w_before[keep], high[keep], high_span, horizon - t0, batch_fracs, grid_vals


def altspeed_des(
    spec: AltSpeedSpec,
    arrivals: int,
    seed: int,
    warmup_frac: float = 0.1,
    batches: int = 30,
    grid_points: int = 0,
    replications: int = 1,
) -> AltSpeedResult:
    """Workload of the alternating-speed queue sampled at arrival epochs (PASTA).

    ``pool_all`` holds all post-warmup pre-arrival workloads tagged 'H'/'L' by
    the prevailing speed; ``pool_high`` is the conditional pool given high
    speed.  ``p_high`` is the post-warmup time fraction at high speed with a
    batch-means standard error.  ``grid_points`` > 0 additionally samples the
    workload at uniformly random times (used to cross-check PASTA).
    """
    counts = _split_counts(int(arrivals), replications)
    per_rep_batches = max(4, int(batches) // len(counts))
    vals, highs, fracs, grids = [], [], [], []
    high_span = span = 0.0
    for i, m in enumerate(counts):
        g = _split_counts(int(grid_points), len(counts))[i] if grid_points else 0
        w, h, hs, sp, bf, gv = _altspeed_one(
            spec, m, seed, i, warmup_frac, per_rep_batches, g
        )
        vals.append(w)
        highs.append(h)
        fracs.append(bf)
        high_span += hs
        span += sp
        if gv is not None:
            grids.append(gv)
    w_before = np.concatenate(vals)
    high = np.concatenate(highs)
    batch_fracs = np.concatenate(fracs)

    meta = {
        "model": "altspeed",
        "seed": seed,
        "warmup": f"first {warmup_frac:.0%} of simulated time per replication",
        "replications": len(counts),
    }
    tags = np.where(high, "H", "L").astype("<U1")
    pool_all = SamplePool(w_before, tags=tags, meta={**meta, "kind": "pre-arrival"})
    pool_high = SamplePool(w_before[high], meta={**meta, "kind": "pre-arrival given high speed"})
    p_high = high_span / span
    p_high_se = float(np.std(batch_fracs, ddof=1) / math.sqrt(batch_fracs.size))
    grid_pool = SamplePool(np.concatenate(grids), meta={**meta, "kind": "time-grid"}) if grids else None
    return AltSpeedResult(pool_high, pool_all, p_high, p_high_se, grid_pool)


# ---------------------------------------------------------------------------
# heterogeneous two-server queue


@njit(cache=True)
def _mg2_core(t, exp_service, gen_service):  # pragma: no cover - compiled
    n = t.size
    wait = np.empty(n)
    dep = np.empty(n)
    srv = np.empty(n, np.uint8)
    a1 = 0.0
    a2 = 0.0
    i1 = 0
    i2 = 0
    for k in range(n):
        tk = t[k]
        if a1 <= tk and a2 <= tk:
            b = tk
            s = 0
        elif a1 <= a2:
            b = a1 if a1 > tk else tk
            s = 0
        else:
            b = a2 if a2 > tk else tk
            s = 1
        wait[k] = b - tk
        if s == 0:
            d = b + exp_service[i1]
            i1 += 1
            a1 = d
        else:
            d = b + gen_service[i2]
            i2 += 1
            a2 = d
        dep[k] = d
        srv[k] = s
    return wait, dep, srv


@njit(cache=True)
def _mg2_state_times(t_arr, starts, start_srv, deps, dep_srv, t0, t1, nbatch):  # pragma: no cover
    acc = np.zeros((nbatch, 3))
    n = t_arr.size
    batch_len = (t1 - t0) / nbatch
    i = 0
    j = 0
    k = 0
    count = 0
    busy1 = 0
    busy2 = 0
    cur = 0.0
    big = 1e300
    while k < n and cur < t1:
        ta = t_arr[i] if i < n else big
        tb = starts[j] if j < n else big
        td = deps[k]
        te = min(ta, min(tb, td))
        lo = cur if cur > t0 else t0
        hi = te if te < t1 else t1
        if hi > lo:
            state = -1
            if count == 0:
                state = 0
            elif count == 1:
                state = 1 if busy1 == 1 else 2
            if state >= 0:
                pos = lo
                while pos < hi:
                    bi = int((pos - t0) / batch_len)
                    if bi >= nbatch:
                        bi = nbatch - 1
                    edge = t0 + (bi + 1) * batch_len
                    top = hi if hi < edge else edge
                    acc[bi, state] += top - pos
                    if top <= pos:
                        break
                    pos = top
        if td <= ta and td <= tb:
            count -= 1
            if dep_srv[k] == 0:
                busy1 -= 1
            else:
                busy2 -= 1
            k += 1
        elif ta <= tb:
            count += 1
            i += 1
        else:
            if start_srv[j] == 0:
                busy1 += 1
            else:
                busy2 += 1
            j += 1
        cur = te
    return acc


@dataclass
class Mg2Result:
    waits: SamplePool
    occ: Mg2Occupancy
    occ_batches: np.ndarray  # (batches, 3) state fractions
    window: tuple

    def identity_residual_se(self, spec: Mg2Spec) -> tuple[float, float]:
        """Work-conservation residual of the estimated occupancies and its SE."""
        resid = self.occ.identity_residual(spec)
        ib = 1.0 / spec.beta
        per_batch = (
            (ib + spec.mu) * self.occ_batches[:, 0]
            + ib * self.occ_batches[:, 1]
            + spec.mu * self.occ_batches[:, 2]
            - (ib + spec.mu - spec.lam)
        )
        se = float(np.std(per_batch, ddof=1) / math.sqrt(per_batch.size))
        return resid, se


def _mg2_one(spec: Mg2Spec, customers: int, seed: int, rep: int, warmup_frac: float, batches: int):
    n = int(customers)
    t = np.cumsum(_exp_draws(stream(seed, _MG2_ARRIVALS, rep), spec.lam, n))
    exp_service = _exp_draws(stream(seed, _MG2_EXP, rep), spec.mu, n)
    gen_service = np.asarray(spec.service2.sample(stream(seed, _MG2_GEN, rep), n))

    wait, dep, srv = _mg2_core(t, exp_service, gen_service)

    warm = int(n * warmup_frac)
    t0 = float(t[warm])
    t1 = float(t[-1])
    starts = t + wait  # nondecreasing for FCFS
    order = np.argsort(dep, kind="stable")
    acc = _mg2_state_times(t, starts, srv, dep[order], srv[order], t0, t1, int(batches))
    return wait[warm:], srv[warm:], acc, t1 - t0


def mg2_des(
    spec: Mg2Spec,
    customers: int,
    seed: int,
    warmup_frac: float = 0.1,
    batches: int = 30,
    replications: int = 1,
) -> Mg2Result:
    """FCFS two-server simulation: per-customer waiting times plus occupancies.

    See the module docstring for the both-idle assignment rule (server 1).
    """
    counts = _split_counts(int(customers), replications)
    per_rep_batches = max(4, int(batches) // len(counts))
    waits, servers, accs, spans = [], [], [], []
    for i, m in enumerate(counts):
        w, s, acc, span = _mg2_one(spec, m, seed, i, warmup_frac, per_rep_batches)
        waits.append(w)
        servers.append(s)
        accs.append(acc)
        spans.append(span)
    wait = np.concatenate(waits)
    srv = np.concatenate(servers)
    totals = sum(a.sum(axis=0) for a in accs) / sum(spans)
    occ = Mg2Occupancy(*[min(1.0, float(v)) for v in totals])
    fractions = np.concatenate(
        [a / (span / a.shape[0]) for a, span in zip(accs, spans)], axis=0
    )
    meta = {
        "model": "mg2",
        "seed": seed,
        "warmup": f"first {warmup_frac:.0%} of customers per replication",
        "replications": len(counts),
        "count": wait.size,
    }
    pool = SamplePool(wait, tags=np.where(srv == 0, "1", "2"), meta=meta)
    return Mg2Result(pool, occ, fractions, (0.0, sum(spans)))


# ---------------------------------------------------------------------------
# replication fan-out


def replicated_values(draw, n: int, seed: int, replications: int = 1, max_workers=None):
    """Fan n draws across replications; merge by replication index.

    ``draw(rng, count) -> ndarray``; replication i uses ``stream(seed, 90, i)``.
    The result is independent of ``max_workers``.
    """
    replications = max(1, int(replications))
    counts = [n // replications] * replications
    counts[0] += n - sum(counts)

    def run(i):
        return np.asarray(draw(stream(seed, _REPLICATION, i), counts[i]))

    if replications == 1:
        return run(0)
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        parts = list(pool.map(run, range(replications)))
    return np.concatenate(parts)
