"""Sampling campaigns: fixed sample blocks, process workers, ordered merge.

Sample ``i`` always uses the RNG stream ``(seed, i)`` and blocks are a fixed
partition of the index range, so the merged result does not depend on the
number of workers or on scheduling.  Per-block outputs are integers or
per-sample values stored by index; nothing is summed in floating point
across blocks.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .conformal import MapDescriptor, build_map
from .explorer import _buffers
from .hexlattice import DiscreteDomain, DomainSpec, build_domain
from .kernels import averaged_first_hit_kernel, erase_kernel, explore_kernel, pass_right_kernel
from .observables import FIRSTHIT_INTERVALS, PASSRIGHT_INTERVALS, T_POINTS, ProbeSet, build_probe_set, vertex_images
from .sleformula import theta_grid
from .stats import FIXED_SCALE

log = logging.getLogger(__name__)

BLOCK = 20_000


class CampaignError(RuntimeError):
    pass


@dataclass(frozen=True)
class Observables:
    firsthit: tuple = FIRSTHIT_INTERVALS  # r intervals, empty to skip
    passright: tuple = PASSRIGHT_INTERVALS  # t intervals, empty to skip
    n_theta: int = 199
    n_t: int = T_POINTS
    erase: bool = True


@dataclass
class DomainContext:
    spec: DomainSpec
    obs: Observables
    domain: DiscreteDomain = field(init=False)
    cmap: MapDescriptor = field(init=False)
    vmod: np.ndarray = field(init=False, default=None)
    vang: np.ndarray = field(init=False, default=None)
    probes: ProbeSet = field(init=False, default=None)

    def __post_init__(self):
        self.domain = build_domain(self.spec)
        self.cmap = build_map(self.domain.spec)
        if self.obs.firsthit:
            self.vmod, self.vang = vertex_images(self.domain, self.cmap)
        if self.obs.passright:
            self.probes = build_probe_set(
                self.domain, self.cmap, self.obs.passright, theta_grid(self.obs.n_theta), self.obs.n_t
            )


@dataclass
class BlockResult:
    start: int
    steps: np.ndarray  # int64 per sample: m (erased) or n (raw)
    raw_steps: np.ndarray
    revealed: np.ndarray
    firsthit: np.ndarray  # uint32 fixed point, (count, n_intervals)
    passright: np.ndarray  # int64 (n_intervals, n_theta, 5)


def run_block(ctx: DomainContext, seed: int, start: int, count: int) -> BlockResult:
    d = ctx.domain
    t = d.tables
    obs = ctx.obs
    color, stamp, path = _buffers(d)
    nvert = 2 * t.nq * t.nr
    pos = np.zeros(nvert, dtype=np.int64)
    vstamp = np.zeros(nvert, dtype=np.int64)
    times = np.empty(len(path), dtype=np.int64)
    dummy = np.zeros(1, dtype=np.int8)
    steps = np.empty(count, dtype=np.int64)
    raw_steps = np.empty(count, dtype=np.int64)
    revealed = np.empty(count, dtype=np.int64)

    n_fh = len(obs.firsthit)
    fh = np.zeros((count, n_fh), dtype=np.uint32)
    if n_fh:
        r_lo = np.array([iv[0] for iv in obs.firsthit], dtype=float)
        r_hi = np.array([iv[1] for iv in obs.firsthit], dtype=float)
        fh_out = np.empty(n_fh)

    n_pr = len(obs.passright)
    pr = np.zeros((n_pr, obs.n_theta, 5), dtype=np.int64)
    if n_pr:
        P = ctx.probes
        discard = np.zeros(P.probe_x.shape, dtype=np.uint8)
        cap = 4 * len(path)
        cross_line = np.empty(cap, dtype=np.int64)
        cross_x = np.empty(cap, dtype=np.float64)
        cnt = np.zeros(P.n_lines, dtype=np.int64)
        kk = np.zeros((n_pr, obs.n_theta), dtype=np.int64)
        vv = np.zeros((n_pr, obs.n_theta), dtype=np.int64)

    ident = np.arange(len(path), dtype=np.int64)
    useed = np.uint64(seed)
    for j in range(count):
        i = start + j
        epoch = j + 1
        n, rev = explore_kernel(
            t.hex_state, t.nb_delta, t.ahead_delta, t.turn, t.z_v, t.start_v, t.start_slot,
            t.end_v, color, stamp, epoch, useed, np.uint64(i), dummy, False, path,
        )
        if n < 0:
            raise CampaignError(f"exploration failed (code {n}) at sample {i}")
        raw_steps[j] = n - 1
        revealed[j] = rev
        if obs.erase:
            m1 = erase_kernel(path, n, t.nb_delta, pos, vstamp, epoch, times)
            if m1 < 0:
                raise CampaignError(f"corrupt path at sample {i}")
            idx, ncurve = times, m1
        else:
            idx, ncurve = ident, n
        steps[j] = ncurve - 1
        if n_fh:
            ok = averaged_first_hit_kernel(path, idx, ncurve, ctx.vmod, ctx.vang, r_lo, r_hi, fh_out)
            if not ok:
                raise CampaignError(f"curve never reached r = {r_hi.max()} at sample {i}")
            fh[j] = np.minimum(np.floor(fh_out * FIXED_SCALE), FIXED_SCALE - 1).astype(np.uint32)
        if n_pr:
            ok = pass_right_kernel(
                path, idx, ncurve, t.vx, t.vy, P.line_y, P.line_order, P.line_int, P.probe_x,
                P.probe_theta, P.probe_count, P.closure, discard, cross_line, cross_x, cnt, kk, vv, pr,
            )
            if not ok:
                raise CampaignError(f"crossing buffer overflow at sample {i}")
    return BlockResult(start, steps, raw_steps, revealed, fh, pr)


# worker-process state ------------------------------------------------------

_CTX: dict = {}


def _init_worker(spec, obs):
    _CTX["ctx"] = DomainContext(spec, obs)


def _work(args):
    seed, start, count = args
    return run_block(_CTX["ctx"], seed, start, count)


@dataclass
class CampaignResult:
    spec: DomainSpec
    obs: Observables
    n_samples: int
    steps: np.ndarray
    raw_steps: np.ndarray
    revealed: np.ndarray
    firsthit: np.ndarray
    passright: np.ndarray
    context: DomainContext | None = None


def blocks(n_samples: int, block: int = BLOCK):
    return [(s, min(block, n_samples - s)) for s in range(0, n_samples, block)]


def run_campaign(
    spec: DomainSpec,
    n_samples: int,
    seed: int,
    workers: int = 1,
    obs: Observables = Observables(),
    block: int = BLOCK,
    progress=None,
) -> CampaignResult:
    if n_samples < 1:
        raise CampaignError("sample count must be >= 1")
    parts = blocks(n_samples, block)
    if workers <= 1:
        ctx = DomainContext(spec, obs)
        results = []
        for k, (s, c) in enumerate(parts):
            results.append(run_block(ctx, seed, s, c))
            if progress:
                progress(k + 1, len(parts))
    else:
        ctx = None
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(spec, obs)) as ex:
            results = []
            for k, r in enumerate(ex.map(_work, [(seed, s, c) for s, c in parts])):
                results.append(r)
                if progress:
                    progress(k + 1, len(parts))
    results.sort(key=lambda r: r.start)
    pr = np.zeros_like(results[0].passright)
    for r in results:
        pr += r.passright
    return CampaignResult(
        spec,
        obs,
        n_samples,
        np.concatenate([r.steps for r in results]),
        np.concatenate([r.raw_steps for r in results]),
        np.concatenate([r.revealed for r in results]),
        np.concatenate([r.firsthit for r in results]),
        pr,
        ctx,
    )


def default_workers() -> int:
    return os.cpu_count() or 1
