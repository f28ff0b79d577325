"""Compiled inner loop of the event simulator.

The kernel owns the event heap (parallel numpy arrays) and a xoshiro256**
generator.  It processes diffusion events of singleton embedded groups
directly on the world's position/occupancy arrays and hands every other
valid event back to Python.
"""

from __future__ import annotations

import numpy as np
from numba import njit, uint64

DIFFUSION = 0
ACTION = 1

# kernel return codes
EMPTY = 0
TIME_LIMIT = 1
EVENT_LIMIT = 2
HANDOFF = 3

_DX = np.array([-1, 0, 1, -1, 1, -1, 0, 1], dtype=np.int64)
_DY = np.array([-1, -1, -1, 0, 0, 1, 1, 1], dtype=np.int64)


# ----------------------------------------------------------------------
# random numbers


@njit(cache=True)
def _rotl(x, k):
    return (x << uint64(k)) | (x >> uint64(64 - k))


@njit(cache=True)
def rng_next(s):
    result = _rotl(s[1] * uint64(5), 7) * uint64(9)
    t = s[1] << uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@njit(cache=True)
def rng_uniform(s):
    """Uniform double in [0, 1)."""
    return float(rng_next(s) >> uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True)
def rng_below(s, n):
    return int(rng_uniform(s) * n)


@njit(cache=True)
def rng_exponential(s, mean):
    return -mean * np.log(1.0 - rng_uniform(s))


def rng_state(seed: int) -> np.ndarray:
    """Seed the generator with splitmix64 expansion of ``seed``."""
    mask = (1 << 64) - 1
    x = seed & mask
    out = np.empty(4, dtype=np.uint64)
    for i in range(4):
        x = (x + 0x9E3779B97F4A7C15) & mask
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & mask
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & mask
        out[i] = z ^ (z >> 31)
    return out


@njit(cache=True)
def exponential_samples(s, mean, n):
    out = np.empty(n, dtype=np.float64)
    for i in range(n):
        out[i] = rng_exponential(s, mean)
    return out


# ----------------------------------------------------------------------
# event heap ordered by (time, seq)


@njit(cache=True)
def _less(h_time, h_seq, i, j):
    if h_time[i] != h_time[j]:
        return h_time[i] < h_time[j]
    return h_seq[i] < h_seq[j]


@njit(cache=True)
def _swap(h_time, h_seq, h_gid, h_gen, h_kind, i, j):
    h_time[i], h_time[j] = h_time[j], h_time[i]
    h_seq[i], h_seq[j] = h_seq[j], h_seq[i]
    h_gid[i], h_gid[j] = h_gid[j], h_gid[i]
    h_gen[i], h_gen[j] = h_gen[j], h_gen[i]
    h_kind[i], h_kind[j] = h_kind[j], h_kind[i]


@njit(cache=True)
def heap_push(h_time, h_seq, h_gid, h_gen, h_kind, hstate, t, gid, gen, kind):
    """Insert an event; the caller guarantees capacity."""
    i = hstate[0]
    hstate[0] = i + 1
    h_time[i] = t
    h_seq[i] = hstate[1]
    hstate[1] += 1
    h_gid[i] = gid
    h_gen[i] = gen
    h_kind[i] = kind
    while i > 0:
        parent = (i - 1) >> 1
        if _less(h_time, h_seq, i, parent):
            _swap(h_time, h_seq, h_gid, h_gen, h_kind, i, parent)
            i = parent
        else:
            break


@njit(cache=True)
def heap_pop(h_time, h_seq, h_gid, h_gen, h_kind, hstate):
    """Remove the minimum event, leaving it in slot ``size`` (just past the end)."""
    n = hstate[0] - 1
    hstate[0] = n
    _swap(h_time, h_seq, h_gid, h_gen, h_kind, 0, n)
    i = 0
    while True:
        left = 2 * i + 1
        if left >= n:
            break
        best = left
        right = left + 1
        if right < n and _less(h_time, h_seq, right, left):
            best = right
        if _less(h_time, h_seq, best, i):
            _swap(h_time, h_seq, h_gid, h_gen, h_kind, i, best)
            i = best
        else:
            break
    return n


# ----------------------------------------------------------------------
# diffusion


@njit(cache=True)
def _unlink(a, s, site_head, site_nxt, site_prv, site_cnt):
    nx = site_nxt[a]
    pv = site_prv[a]
    if pv >= 0:
        site_nxt[pv] = nx
    else:
        site_head[s] = nx
    if nx >= 0:
        site_prv[nx] = pv
    site_cnt[s] -= 1


@njit(cache=True)
def _link(a, s, site_head, site_nxt, site_prv, site_cnt):
    head = site_head[s]
    site_nxt[a] = head
    site_prv[a] = -1
    if head >= 0:
        site_prv[head] = a
    site_head[s] = a
    site_cnt[s] += 1


@njit(cache=True)
def _torus_l1(x0, y0, x1, y1, w, h):
    dx = abs(x0 - x1) % w
    dy = abs(y0 - y1) % h
    return min(dx, w - dx) + min(dy, h - dy)


@njit(cache=True)
def move_single(a, px, py, site_head, site_nxt, site_prv, site_cnt, bp, nbp, w, h, s):
    """Random step of a lone root actor; returns True when it moved."""
    x = px[a]
    y = py[a]
    d = rng_below(s, 8)
    tx = (x + _DX[d]) % w
    ty = (y + _DY[d]) % h
    if site_cnt[ty * w + tx] > 0:
        empties = np.empty(8, dtype=np.int64)
        ne = 0
        for k in range(8):
            ex = (x + _DX[k]) % w
            ey = (y + _DY[k]) % h
            if site_cnt[ey * w + ex] == 0:
                empties[ne] = k
                ne += 1
        if ne > 0:
            d = empties[rng_below(s, ne)]
            tx = (x + _DX[d]) % w
            ty = (y + _DY[d]) % h
    for i in range(nbp[a]):
        p = bp[a, i]
        if _torus_l1(tx, ty, px[p], py[p], w, h) > 2:
            return False
    _unlink(a, y * w + x, site_head, site_nxt, site_prv, site_cnt)
    _link(a, ty * w + tx, site_head, site_nxt, site_prv, site_cnt)
    px[a] = tx
    py[a] = ty
    return True


@njit(cache=True)
def run(h_time, h_seq, h_gid, h_gen, h_kind, hstate,
        px, py, site_head, site_nxt, site_prv, site_cnt, bp, nbp,
        g_single, g_mass, g_alive, g_gen,
        w, h, D, s, t_stop, max_events, counters, out):
    """Process events until one needs Python or a limit is reached.

    ``counters`` holds [valid events processed, moves accepted] and
    ``out[4]`` the time of the last event taken off the queue.  On
    ``HANDOFF`` the popped event is written to ``out[:4]`` as
    (time, gid, gen, kind).
    """
    while True:
        if hstate[0] == 0:
            return EMPTY
        if h_time[0] > t_stop:
            return TIME_LIMIT
        if counters[0] >= max_events:
            return EVENT_LIMIT
        n = heap_pop(h_time, h_seq, h_gid, h_gen, h_kind, hstate)
        t = h_time[n]
        g = h_gid[n]
        gen = h_gen[n]
        kind = h_kind[n]
        if g_alive[g] == 0 or g_gen[g] != gen:
            continue
        a = g_single[g]
        out[4] = t
        if kind == DIFFUSION and a >= 0 and nbp[a] >= 0:
            counters[0] += 1
            if move_single(a, px, py, site_head, site_nxt, site_prv, site_cnt, bp, nbp, w, h, s):
                counters[1] += 1
            dt = rng_exponential(s, g_mass[g] / D)
            heap_push(h_time, h_seq, h_gid, h_gen, h_kind, hstate, t + dt, g, gen, DIFFUSION)
            continue
        out[0] = t
        out[1] = g
        out[2] = gen
        out[3] = kind
        return HANDOFF
