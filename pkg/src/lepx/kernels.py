"""Compiled inner loops: exploration, erasure and the per-sample observables.

Everything here works on the flat arrays of :class:`~lepx.hexlattice.LatticeTables`.
Colours are stored as 0 (white) / 1 (black); a hexagon's revealed colour is
valid only when its stamp equals the current epoch, so the colour field is
never cleared between samples.
"""

from __future__ import annotations

import numba as nb
import numpy as np

from .rng import philox_block

EXTERIOR, WHITE, BLACK, INTERIOR = 0, 1, 2, 3

ERR_STEP_CAP = -1
ERR_ESCAPE = -2
ERR_WRONG_END = -3

BAND = 0.1  # probes closer than this to the path are discarded


@nb.njit(cache=True)
def explore_kernel(
    hex_state,
    nb_delta,
    ahead_delta,
    turn,
    z_v,
    start_v,
    start_slot,
    end_v,
    color,
    stamp,
    epoch,
    seed,
    index,
    forced,
    use_forced,
    path,
):
    """Trace one interface into ``path``; returns (n_vertices, n_revealed).

    Interior colours come from ``forced`` (0/1 per hex) when ``use_forced``,
    otherwise from the Philox stream (seed, index), one bit per first reveal.
    A negative vertex count is an error code.
    """
    cap = path.shape[0]
    buf = np.empty(4, dtype=np.uint64)
    k0 = np.uint64(seed)
    k1 = np.uint64(index)
    block = np.uint64(0)
    bitpos = 256
    revealed = 0

    path[0] = z_v
    path[1] = start_v
    n = 2
    v = start_v
    k = start_slot
    while True:
        c = v & 1
        h = (v >> 1) + ahead_delta[c, k]
        st = hex_state[h]
        if st == EXTERIOR:
            break
        if st == INTERIOR:
            if stamp[h] == epoch:
                col = color[h]
            else:
                if use_forced:
                    col = forced[h]
                else:
                    if bitpos == 256:
                        block += np.uint64(1)
                        philox_block(
                            k0, k1, block, np.uint64(0), np.uint64(0), np.uint64(0), buf
                        )
                        bitpos = 0
                    col = np.uint8((buf[bitpos >> 6] >> np.uint64(bitpos & 63)) & np.uint64(1))
                    bitpos += 1
                color[h] = col
                stamp[h] = epoch
                revealed += 1
        elif st == WHITE:
            col = 0
        else:
            col = 1
        k = turn[c, k, col]
        v = 2 * ((v >> 1) + nb_delta[c, k]) + (1 - c)
        if n >= cap:
            return ERR_STEP_CAP, revealed
        path[n] = v
        n += 1
    if v != end_v:
        return ERR_WRONG_END, revealed
    return n, revealed


@nb.njit(cache=True)
def erase_kernel(path, n, nb_delta, pos, stamp, epoch, times):
    """Chronological near-loop erasure; writes retained indices to ``times``.

    ``t_{j+1}`` is the largest index after ``t_j`` whose vertex is a lattice
    neighbour of ``path[t_j]``; the occurrence index of every vertex is
    unique because the interface is self-avoiding.  Returns m + 1, the
    number of retained vertices, or -1 on a corrupt path.
    """
    for i in range(n):
        pos[path[i]] = i
        stamp[path[i]] = epoch
    t = 0
    j = 0
    times[0] = 0
    last = n - 1
    while t != last:
        v = path[t]
        c = v & 1
        best = -1
        for k in range(3):
            u = 2 * ((v >> 1) + nb_delta[c, k]) + (1 - c)
            if stamp[u] == epoch:
                iu = pos[u]
                if iu > t and iu > best:
                    best = iu
        if best < 0:
            return -1
        t = best
        j += 1
        times[j] = t
    return j + 1


@nb.njit(cache=True)
def averaged_first_hit_kernel(path, idx, n, vmod, vang, r_lo, r_hi, out):
    """Interval averages of the first-hit angle for one curve.

    The curve is ``path[idx[0..n)]`` (pass ``idx = arange`` for the raw
    path).  ``vmod``/``vang`` hold |phi| and arg(phi)/pi per vertex.  The
    first-hit angle is a step function of r that only changes at records of
    the running maximum of the modulus, so the average over [r_lo, r_hi] is
    exact.  Returns False if the curve never reaches the largest r_hi.
    """
    n_int = r_lo.shape[0]
    for i in range(n_int):
        out[i] = 0.0
    prev = 0.0
    for j in range(n):
        v = path[idx[j]]
        m = vmod[v]
        if m > prev:
            a = vang[v]
            for i in range(n_int):
                lo = prev if prev > r_lo[i] else r_lo[i]
                hi = m if m < r_hi[i] else r_hi[i]
                if hi > lo:
                    out[i] += a * (hi - lo)
            prev = m
    for i in range(n_int):
        out[i] /= r_hi[i] - r_lo[i]
    for i in range(n_int):
        if prev < r_hi[i]:
            return False
    return True


@nb.njit(cache=True)
def _segment_distance(px, py, ax, ay, bx, by):
    dx = bx - ax
    dy = by - ay
    u = ((px - ax) * dx + (py - ay) * dy) / (dx * dx + dy * dy)
    if u < 0.0:
        u = 0.0
    elif u > 1.0:
        u = 1.0
    ex = ax + u * dx - px
    ey = ay + u * dy - py
    return np.sqrt(ex * ex + ey * ey)


@nb.njit(cache=True)
def pass_right_kernel(
    path,
    idx,
    n,
    vx,
    vy,
    line_y,
    line_order,
    line_int,
    probe_x,
    probe_theta,
    probe_count,
    closure,
    discard,
    cross_line,
    cross_x,
    cnt,
    kk,
    vv,
    acc,
):
    """Right-side indicators of every probe for one curve.

    For each horizontal probe line, a probe is on the curve's right exactly
    when the ray from it towards -x crosses the closed loop (curve + black
    boundary arc) an odd number of times: the crossings of the curve's edges
    to the left of the probe plus ``closure[line]`` (1 when the line's left
    boundary point is on the black arc).  Per-sample counts of right
    indicators ``k`` and valid probes ``v`` per (interval, theta) are folded
    into ``acc[..., 0:5] += (k, v, k*k, v*v, k*v)``.
    """
    n_lines = line_y.shape[0]
    n_theta = kk.shape[1]
    discard[:, :] = 0
    kk[:, :] = 0
    vv[:, :] = 0
    cnt[:] = 0
    n_cross = 0
    for e in range(n - 1):
        a = path[idx[e]]
        b = path[idx[e + 1]]
        ax = vx[a]
        ay = vy[a]
        bx = vx[b]
        by = vy[b]
        ylo = ay if ay < by else by
        yhi = ay if ay > by else by
        xlo = ax if ax < bx else bx
        xhi = ax if ax > bx else bx
        # lines with y in [ylo - BAND, yhi + BAND]
        lo = np.searchsorted(line_y, ylo - BAND)
        hi = np.searchsorted(line_y, yhi + BAND, side="right")
        for s in range(lo, hi):
            ell = line_order[s]
            y = line_y[s]
            if (ay > y) != (by > y):
                if n_cross >= cross_line.shape[0]:
                    return False
                cross_line[n_cross] = ell
                cross_x[n_cross] = ax + (y - ay) * (bx - ax) / (by - ay)
                n_cross += 1
                cnt[ell] += 1
            npb = probe_count[ell]
            j0 = np.searchsorted(probe_x[ell, :npb], xlo - BAND)
            for j in range(j0, npb):
                px = probe_x[ell, j]
                if px > xhi + BAND:
                    break
                if _segment_distance(px, y, ax, ay, bx, by) < BAND:
                    discard[ell, j] = 1
    # bucket crossings by line, then sort each bucket by x
    start = np.zeros(n_lines + 1, dtype=np.int64)
    for ell in range(n_lines):
        start[ell + 1] = start[ell] + cnt[ell]
    fill = start[:-1].copy()
    xs = np.empty(n_cross, dtype=np.float64)
    for c in range(n_cross):
        ell = cross_line[c]
        xs[fill[ell]] = cross_x[c]
        fill[ell] += 1
    for ell in range(n_lines):
        seg = xs[start[ell] : start[ell + 1]]
        seg.sort()
        npb = probe_count[ell]
        p = 0
        nc = seg.shape[0]
        i_int = line_int[ell]
        for j in range(npb):
            px = probe_x[ell, j]
            while p < nc and seg[p] < px:
                p += 1
            if discard[ell, j]:
                continue
            th = probe_theta[ell, j]
            vv[i_int, th] += 1
            kk[i_int, th] += (p + closure[ell]) & 1
    for i in range(kk.shape[0]):
        for th in range(n_theta):
            k = kk[i, th]
            v = vv[i, th]
            acc[i, th, 0] += k
            acc[i, th, 1] += v
            acc[i, th, 2] += k * k
            acc[i, th, 3] += v * v
            acc[i, th, 4] += k * v
    return True
