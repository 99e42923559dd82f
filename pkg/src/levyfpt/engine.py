"""Vectorized batch simulation of the jump diffusion with passage tracking.

Paths advance on a uniform grid; jump epochs inside a step are inserted
exactly (conditionally uniform given the step's Poisson count), continuous
increments are exact Gaussian draws over every sub-segment, and
sub-barrier segments are promoted to crossings with the Brownian-bridge
acceptance probability ``exp(-2 (x-a)(x-b) / gap)``.  Endpoint and jump
crossings are detected directly; accepted bridge crossings date the
passage at the segment midpoint.

Randomness is drawn from per-chunk generators spawned from
``SeedSequence(seed)`` with a fixed chunk size, and chunk outputs are
written into disjoint slices of preallocated arrays, so results are
bit-identical for a given seed regardless of the worker-thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import ValidatedParams

CHUNK_SIZE = 16384


@dataclass
class StepState:
    """Mutable per-path state, advanced one grid step at a time.

    ``alive_at_last_jump`` is the survival indicator evaluated just after
    the most recent jump (inclusive of a crossing caused by that jump);
    before any jump it is True with ``last_jump_time = 0`` and
    ``x_at_last_jump = 0``, matching the convention that the zeroth jump
    happens at time zero at the origin.
    """

    x: np.ndarray
    crossed: np.ndarray
    tau: np.ndarray
    crossed_at_jump: np.ndarray
    last_jump_time: np.ndarray
    x_at_last_jump: np.ndarray
    alive_at_last_jump: np.ndarray

    @classmethod
    def fresh(cls, n: int) -> "StepState":
        return cls(
            x=np.zeros(n),
            crossed=np.zeros(n, dtype=bool),
            tau=np.full(n, np.inf),
            crossed_at_jump=np.zeros(n, dtype=bool),
            last_jump_time=np.zeros(n),
            x_at_last_jump=np.zeros(n),
            alive_at_last_jump=np.ones(n, dtype=bool),
        )


def _diffuse(state: StepState, sel, t_start, gap, rng, m: float, barrier: float):
    """Advance one continuous sub-segment for paths ``sel`` (None = all)."""
    if sel is None:
        n = state.x.size
        a = state.x
    else:
        n = sel.size
        if n == 0:
            return
        a = state.x[sel]
    z = rng.standard_normal(n)
    u = rng.random(n)
    gap = np.asarray(gap, dtype=float)
    b = a + m * gap + np.sqrt(gap) * z
    alive = ~state.crossed if sel is None else ~state.crossed[sel]

    end_hit = alive & (b >= barrier)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        p_bridge = np.exp(-2.0 * (barrier - a) * (barrier - b) / gap)
    mid_hit = alive & ~end_hit & (gap > 0) & (u < p_bridge)

    t_end = np.asarray(t_start, dtype=float) + gap
    if sel is None:
        state.tau[end_hit] = np.broadcast_to(t_end, (n,))[end_hit]
        state.tau[mid_hit] = (np.broadcast_to(t_end, (n,)) - gap / 2.0)[mid_hit]
        state.crossed |= end_hit | mid_hit
        state.x = b
    else:
        hit_idx = sel[end_hit]
        state.tau[hit_idx] = np.broadcast_to(t_end, (n,))[end_hit]
        mid_idx = sel[mid_hit]
        state.tau[mid_idx] = (np.broadcast_to(t_end, (n,)) - gap / 2.0)[mid_hit]
        state.crossed[sel] |= end_hit | mid_hit
        state.x[sel] = b


def _jump(state: StepState, sel, t_jump, rng, jumplaw, barrier: float):
    """Apply one jump at absolute times ``t_jump`` for paths ``sel``."""
    if sel.size == 0:
        return
    sizes = np.asarray(jumplaw.sample(rng, sel.size), dtype=float)
    pre = state.x[sel]
    post = pre + sizes
    alive = ~state.crossed[sel]
    jhit = alive & (pre < barrier) & (post >= barrier)
    hit_idx = sel[jhit]
    state.tau[hit_idx] = np.asarray(t_jump, dtype=float)[jhit] if np.ndim(t_jump) else t_jump
    state.crossed_at_jump[hit_idx] = True
    state.crossed[sel] |= jhit
    state.x[sel] = post
    state.last_jump_time[sel] = t_jump
    state.x_at_last_jump[sel] = post
    state.alive_at_last_jump[sel] = ~state.crossed[sel]


def step(state: StepState, t0: float, dt: float, rng, p: ValidatedParams):
    """Advance every path by one grid step of length ``dt`` starting at ``t0``."""
    n = state.x.size
    if p.lam > 0:
        counts = rng.poisson(p.lam * dt, n)
        kmax = int(counts.max()) if n else 0
    else:
        kmax = 0
    if kmax == 0:
        _diffuse(state, None, t0, dt, rng, p.m, p.x)
        return
    _diffuse(state, np.flatnonzero(counts == 0), t0, dt, rng, p.m, p.x)
    for k in range(1, kmax + 1):
        sel = np.flatnonzero(counts == k)
        if sel.size == 0:
            continue
        offsets = np.sort(rng.random((sel.size, k)), axis=1) * dt
        prev = np.zeros(sel.size)
        for j in range(k):
            _diffuse(state, sel, t0 + prev, offsets[:, j] - prev, rng, p.m, p.x)
            _jump(state, sel, t0 + offsets[:, j], rng, p.jump, p.x)
            prev = offsets[:, j]
        _diffuse(state, sel, t0 + prev, dt - prev, rng, p.m, p.x)


@dataclass
class PathData:
    """Snapshots over a batch of paths plus final passage results.

    Snapshot arrays have shape ``(len(snap_times), n_paths)``.
    """

    snap_times: np.ndarray
    x: np.ndarray
    alive: np.ndarray
    last_jump_time: np.ndarray
    x_at_last_jump: np.ndarray
    alive_at_last_jump: np.ndarray
    tau: np.ndarray
    crossed_at_jump: np.ndarray


def _simulate_chunk(p, n_steps, dt, n, rng, snap_steps):
    state = StepState.fresh(n)
    s_count = len(snap_steps)
    out_x = np.empty((s_count, n))
    out_alive = np.empty((s_count, n), dtype=bool)
    out_ljt = np.empty((s_count, n))
    out_xlj = np.empty((s_count, n))
    out_alj = np.empty((s_count, n), dtype=bool)
    pos = 0
    snap_set = {int(s): i for i, s in enumerate(snap_steps)}

    def record(step_idx):
        i = snap_set[step_idx]
        out_x[i] = state.x
        out_alive[i] = ~state.crossed
        out_ljt[i] = state.last_jump_time
        out_xlj[i] = state.x_at_last_jump
        out_alj[i] = state.alive_at_last_jump

    if 0 in snap_set:
        record(0)
    for k in range(n_steps):
        step(state, k * dt, dt, rng, p)
        if (k + 1) in snap_set:
            record(k + 1)
    return out_x, out_alive, out_ljt, out_xlj, out_alj, state.tau, state.crossed_at_jump


def run_paths(
    p: ValidatedParams,
    horizon: float,
    grid_dt: float,
    n_paths: int,
    seed,
    snap_times=None,
    threads: int = 1,
) -> PathData:
    """Simulate ``n_paths`` paths to ``horizon`` and snapshot at ``snap_times``.

    ``snap_times`` must lie on the step grid (the grid step is
    ``horizon / round(horizon / grid_dt)``); defaults to the horizon only.
    ``seed`` is an int or ``SeedSequence``; chunk streams derive from it.
    """
    if horizon <= 0 or grid_dt <= 0:
        raise ValueError("horizon and grid_dt must be positive")
    n_steps = max(1, int(round(horizon / grid_dt)))
    dt = horizon / n_steps
    if snap_times is None:
        snap_times = [horizon]
    snap_times = np.asarray(snap_times, dtype=float)
    snap_steps = np.rint(snap_times / dt).astype(int)
    if not np.allclose(snap_steps * dt, snap_times, rtol=0, atol=1e-9 * max(1.0, horizon)):
        raise ValueError("snapshot times must lie on the step grid")

    n_chunks = (n_paths + CHUNK_SIZE - 1) // CHUNK_SIZE
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = seq.spawn(n_chunks)

    s_count = len(snap_steps)
    data = PathData(
        snap_times=snap_times,
        x=np.empty((s_count, n_paths)),
        alive=np.empty((s_count, n_paths), dtype=bool),
        last_jump_time=np.empty((s_count, n_paths)),
        x_at_last_jump=np.empty((s_count, n_paths)),
        alive_at_last_jump=np.empty((s_count, n_paths), dtype=bool),
        tau=np.empty(n_paths),
        crossed_at_jump=np.empty(n_paths, dtype=bool),
    )

    def work(ci):
        lo = ci * CHUNK_SIZE
        hi = min(lo + CHUNK_SIZE, n_paths)
        rng = np.random.default_rng(children[ci])
        res = _simulate_chunk(p, n_steps, dt, hi - lo, rng, snap_steps)
        sl = slice(lo, hi)
        data.x[:, sl], data.alive[:, sl] = res[0], res[1]
        data.last_jump_time[:, sl], data.x_at_last_jump[:, sl] = res[2], res[3]
        data.alive_at_last_jump[:, sl] = res[4]
        data.tau[sl], data.crossed_at_jump[sl] = res[5], res[6]

    if threads > 1 and n_chunks > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            list(ex.map(work, range(n_chunks)))
    else:
        for ci in range(n_chunks):
            work(ci)
    return data
