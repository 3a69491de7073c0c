"""Exact interface and loop-erased distributions on tiny domains.

All 2^k interior colourings are traced with the explorer's compiled walk.
A path is keyed by its turn sequence: the slot of the first step followed
by one bit per interior vertex (1 = left turn), packed into fixed-width
uint64 rows ``[n_steps, first_slot, word_0, word_1, ...]``.  Turn keys are
unique per path and compare cheaply, which is what makes 2^24 colourings
feasible.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numba as nb
import numpy as np

from .explorer import _buffers
from .hexlattice import DiscreteDomain
from .kernels import erase_kernel, explore_kernel

K_MAX = 24
CHUNK = 1 << 18


class OracleError(ValueError):
    pass


@nb.njit(cache=True)
def encode_path(path, idx, n, vx, vy, nb_delta, row):
    """Pack the turn key of ``path[idx[0..n)]`` into ``row``; False if too long."""
    nwords = row.shape[0] - 2
    if n - 2 > 64 * nwords:
        return False
    for i in range(row.shape[0]):
        row[i] = 0
    row[0] = n - 1
    v0 = path[idx[0]]
    if n > 1:
        v1 = path[idx[1]]
        c = v0 & 1
        for k in range(3):
            if 2 * ((v0 >> 1) + nb_delta[c, k]) + (1 - c) == v1:
                row[1] = k
    for j in range(1, n - 1):
        a = path[idx[j - 1]]
        b = path[idx[j]]
        c = path[idx[j + 1]]
        cross = (vx[b] - vx[a]) * (vy[c] - vy[b]) - (vy[b] - vy[a]) * (vx[c] - vx[b])
        if cross > 0:
            w = (j - 1) >> 6
            row[2 + w] |= np.uint64(1) << np.uint64((j - 1) & 63)
    return True


@nb.njit(cache=True)
def _enumerate_chunk(
    code0, count, interior, hex_state, nb_delta, ahead_delta, turn, z_v, start_v, start_slot,
    end_v, color, stamp, forced, path, vx, vy, keys, erase, pos, vstamp, times,
):
    ident = np.arange(path.shape[0])
    for j in range(count):
        code = code0 + j
        for b in range(interior.shape[0]):
            forced[interior[b]] = (code >> b) & 1
        epoch = code + 1
        n, _ = explore_kernel(
            hex_state, nb_delta, ahead_delta, turn, z_v, start_v, start_slot, end_v,
            color, stamp, epoch, 0, 0, forced, True, path,
        )
        if n < 0:
            return -1
        if erase:
            m1 = erase_kernel(path, n, nb_delta, pos, vstamp, epoch, times)
            if m1 < 0:
                return -2
            ok = encode_path(path, times, m1, vx, vy, nb_delta, keys[j])
        else:
            ok = encode_path(path, ident, n, vx, vy, nb_delta, keys[j])
        if not ok:
            return -3
    return 0


@dataclass(frozen=True)
class ExactDistribution:
    """Path key -> count of colourings out of 2^k."""

    k: int
    counts: dict  # bytes(key row) -> int
    paths: dict  # bytes(key row) -> flat vertex array (a representative)

    @property
    def denominator(self) -> int:
        return 1 << self.k

    def probability(self, key) -> Fraction:
        return Fraction(self.counts.get(key, 0), self.denominator)

    def __len__(self):
        return len(self.counts)


def _words(domain: DiscreteDomain) -> int:
    # an interface crosses each edge at most once
    max_steps = 6 * len(domain.hexes) + 8
    return max_steps // 64 + 1


def _tables(domain: DiscreteDomain):
    t = domain.tables
    interior = np.array([domain.hex_to_flat(h) for h in domain.interior], dtype=np.int64)
    return t, interior


def _enumerate(domain: DiscreteDomain, erase: bool) -> ExactDistribution:
    t, interior = _tables(domain)
    k = len(interior)
    if k > K_MAX:
        raise OracleError(f"{k} interior hexagons exceeds the cap of {K_MAX}")
    color, stamp, path = _buffers(domain)
    forced = np.zeros(t.nq * t.nr, dtype=np.int8)
    nvert = 2 * t.nq * t.nr
    pos = np.zeros(nvert, dtype=np.int64)
    vstamp = np.zeros(nvert, dtype=np.int64)
    times = np.empty(len(path), dtype=np.int64)
    width = 2 + _words(domain)
    total = 1 << k
    counts: dict = {}
    reps: dict = {}
    for code0 in range(0, total, CHUNK):
        count = min(CHUNK, total - code0)
        keys = np.zeros((count, width), dtype=np.uint64)
        status = _enumerate_chunk(
            code0, count, interior, t.hex_state, t.nb_delta, t.ahead_delta, t.turn, t.z_v,
            t.start_v, t.start_slot, t.end_v, color, stamp, forced, path, t.vx, t.vy, keys,
            erase, pos, vstamp, times,
        )
        if status < 0:
            raise OracleError(f"enumeration failed with status {status}")
        uniq, first, cnt = np.unique(keys, axis=0, return_index=True, return_counts=True)
        for row, f, c in zip(uniq, first, cnt):
            key = row.tobytes()
            if key not in counts:
                counts[key] = 0
                reps[key] = code0 + int(f)
            counts[key] += int(c)
    paths = {key: _trace(domain, code, erase) for key, code in reps.items()}
    return ExactDistribution(k, counts, paths)


def _trace(domain, code, erase):
    from .explorer import explore_forced
    from .hexlattice import BLACK, WHITE
    from .looperase import erase_near_loops

    colors = {h: (BLACK if (code >> b) & 1 else WHITE) for b, h in enumerate(domain.interior)}
    p = explore_forced(domain, colors)
    if erase:
        return erase_near_loops(p, domain.tables.nb_delta).vertices
    return p.flat


def enumerate_interfaces(domain: DiscreteDomain) -> ExactDistribution:
    return _enumerate(domain, erase=False)


def enumerate_erased(domain: DiscreteDomain) -> ExactDistribution:
    return _enumerate(domain, erase=True)


@nb.njit(cache=True)
def _sample_keys(
    seed, start, count, hex_state, nb_delta, ahead_delta, turn, z_v, start_v, start_slot,
    end_v, color, stamp, path, vx, vy, raw_keys, erased_keys, pos, vstamp, times, corrupt,
):
    dummy = np.zeros(1, dtype=np.int8)
    ident = np.arange(path.shape[0])
    for j in range(count):
        epoch = j + 1
        n, _ = explore_kernel(
            hex_state, nb_delta, ahead_delta, turn, z_v, start_v, start_slot, end_v,
            color, stamp, epoch, seed, start + j, dummy, False, path,
        )
        if n < 0:
            return -1
        encode_path(path, ident, n, vx, vy, nb_delta, raw_keys[j])
        if corrupt:
            m1 = _erase_min(path, n, nb_delta, pos, vstamp, epoch, times)
        else:
            m1 = erase_kernel(path, n, nb_delta, pos, vstamp, epoch, times)
        if m1 < 0:
            return -2
        encode_path(path, times, m1, vx, vy, nb_delta, erased_keys[j])
    return 0


@nb.njit(cache=True)
def _erase_min(path, n, nb_delta, pos, stamp, epoch, times):
    """Deliberately wrong eraser (min instead of max), for mutation checks."""
    for i in range(n):
        pos[path[i]] = i
        stamp[path[i]] = epoch
    t = 0
    j = 0
    times[0] = 0
    while t != n - 1:
        v = path[t]
        c = v & 1
        best = n
        for k in range(3):
            u = 2 * ((v >> 1) + nb_delta[c, k]) + (1 - c)
            if stamp[u] == epoch:
                iu = pos[u]
                if iu > t and iu < best:
                    best = iu
        if best == n:
            return -1
        t = best
        j += 1
        times[j] = t
    return j + 1


def monte_carlo_counts(domain: DiscreteDomain, n_samples: int, seed: int, corrupt_eraser: bool = False, block: int = 1 << 16):
    """Empirical key counts of raw and erased paths."""
    t = domain.tables
    color, stamp, path = _buffers(domain)
    nvert = 2 * t.nq * t.nr
    pos = np.zeros(nvert, dtype=np.int64)
    vstamp = np.zeros(nvert, dtype=np.int64)
    times = np.empty(len(path), dtype=np.int64)
    width = 2 + _words(domain)
    raw: dict = {}
    erased: dict = {}
    for s in range(0, n_samples, block):
        c = min(block, n_samples - s)
        rk = np.zeros((c, width), dtype=np.uint64)
        ek = np.zeros((c, width), dtype=np.uint64)
        st = _sample_keys(
            np.uint64(seed), s, c, t.hex_state, t.nb_delta, t.ahead_delta, t.turn, t.z_v, t.start_v,
            t.start_slot, t.end_v, color, stamp, path, t.vx, t.vy, rk, ek, pos, vstamp, times,
            corrupt_eraser,
        )
        if st < 0:
            raise OracleError(f"sampling failed with status {st}")
        for keys, acc in ((rk, raw), (ek, erased)):
            u, cnt = np.unique(keys, axis=0, return_counts=True)
            for row, n in zip(u, cnt):
                key = row.tobytes()
                acc[key] = acc.get(key, 0) + int(n)
    return raw, erased


def total_variation(exact: ExactDistribution, counts: dict, n: int) -> float:
    keys = set(exact.counts) | set(counts)
    den = float(exact.denominator)
    return 0.5 * sum(abs(exact.counts.get(k, 0) / den - counts.get(k, 0) / n) for k in keys)


def expected_tv_noise(exact: ExactDistribution, n: int) -> float:
    """Approximate mean TV distance of an n-sample empirical law (normal
    approximation per path)."""
    p = np.array(list(exact.counts.values()), dtype=float) / exact.denominator
    return float(0.5 * np.sum(np.sqrt(2.0 * p * (1.0 - p) / (np.pi * n))))


@dataclass(frozen=True)
class OracleReport:
    k: int
    n_samples: int
    raw_paths: int
    erased_paths: int
    tv_raw: float
    tv_erased: float
    threshold: float

    @property
    def passed(self) -> bool:
        return self.tv_raw < self.threshold and self.tv_erased < self.threshold


def run_oracle(domain: DiscreteDomain, n_samples: int, seed: int, threshold: float = 0.005, corrupt_eraser: bool = False) -> OracleReport:
    raw_exact = enumerate_interfaces(domain)
    erased_exact = enumerate_erased(domain)
    raw, erased = monte_carlo_counts(domain, n_samples, seed, corrupt_eraser)
    return OracleReport(
        raw_exact.k,
        n_samples,
        len(raw_exact),
        len(erased_exact),
        total_variation(raw_exact, raw, n_samples),
        total_variation(erased_exact, erased, n_samples),
        threshold,
    )


def toy_domain(k: int = 12, shape: str = "square"):
    """First domain of ``shape`` with exactly k interior hexagons.

    Scans L upwards in steps of 0.1 and, for each L, the symmetric default
    placement followed by a fixed grid of lattice offsets.  No domain has an
    empty interior, so k = 0 is the k = 1 domain with that hexagon added to
    the white arc.
    """
    from dataclasses import replace

    from .hexlattice import DomainSpec, build_domain, default_spec

    if k == 0:
        d1 = toy_domain(1, shape)
        return replace(d1, interior=(), boundary_white=d1.boundary_white + d1.interior)

    offsets = [(ox / 2, oy / 2) for ox in range(4) for oy in range(3)]
    for L10 in range(20, 400):
        L = L10 / 10
        specs = [default_spec(shape, L)] + [DomainSpec(shape, L, offset=o) for o in offsets]
        smallest = None
        for spec in specs:
            try:
                d = build_domain(spec)
            except ValueError:
                continue
            if len(d.interior) == k:
                return d
            smallest = len(d.interior) if smallest is None else min(smallest, len(d.interior))
        if smallest is not None and smallest > k:
            break
    raise OracleError(f"no {shape} with exactly {k} interior hexagons")
