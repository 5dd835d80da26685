"""SQ-style extensible arrays.

Superblock ``j`` holds ``2**(j//2)`` segments of ``2**ceil(j/2)`` postings,
so the first ``2**(j+1) - 1`` postings fill superblocks ``0..j`` exactly and
a position maps to (segment, offset) with a few shifts.  Segments carry no
link; their handles sit in a dope vector that starts at one slot and doubles
when full.  Superseded dope vectors stay in the arena.
"""
from dataclasses import dataclass

import numpy as np

from ._jit import choose, kernel
from .arena import FAILED, OK, arena_alloc
from .fbb import ComponentStats

Q_DOPE = 0
Q_DOPE_CAP = 1
Q_SEGMENTS = 2
Q_COUNT = 3
Q_LAST_FILL = 4
Q_DISCARDED = 5
Q_SUPER = 6
Q_SUPER_LEFT = 7
Q_CAP = 8
Q_ALLOCATED = 9
Q_MAX_CAP = 10
Q_WIDTH = 11


@kernel
def segments_before(j):
    """Number of segments in superblocks ``0..j-1``."""
    if j % 2 == 0:
        return (1 << (j // 2 + 1)) - 2
    return 3 * (1 << ((j - 1) // 2)) - 2


@kernel
def _msb(p):
    j = 0
    while p > 1:
        p >>= 1
        j += 1
    return j


@kernel
def locate(i):
    """(segment index, offset) of 0-based position ``i``."""
    p = i + 1
    j = _msb(p)
    b = p - (1 << j)
    h = (j + 1) >> 1
    return segments_before(j) + (b >> h), b & ((1 << h) - 1)


def sqa_locate(i):
    if i < 0:
        raise ValueError(f"position must be >= 0, got {i}")
    s, off = locate(int(i))
    return int(s), int(off)


def _locate_many_loop(pos):
    seg = np.empty(pos.shape[0], dtype=np.int64)
    off = np.empty(pos.shape[0], dtype=np.int64)
    for k in range(pos.shape[0]):
        seg[k], off[k] = locate(pos[k])
    return seg, off


def _locate_many_numpy(pos):
    p = pos.astype(np.int64) + 1
    j = (np.frexp(p.astype(np.float64))[1] - 1).astype(np.int64)
    b = p - (np.int64(1) << j)
    h = (j + 1) >> 1
    half = j >> 1
    before = np.where(j % 2 == 0, (np.int64(1) << (half + 1)) - 2, 3 * (np.int64(1) << half) - 2)
    return before + (b >> h), b & ((np.int64(1) << h) - 1)


locate_many = choose(_locate_many_loop, _locate_many_numpy)
locate_many.__doc__ = "Vectorised ``sqa_locate`` over an int64 array of positions."


def sqa_empty_state(null, n=None):
    shape = Q_WIDTH if n is None else (n, Q_WIDTH)
    st = np.zeros(shape, dtype=np.int64)
    st[..., Q_DOPE] = null
    st[..., Q_SUPER] = -1
    return st


@kernel
def sqa_append(mem, ast, table, log, states, t, value):
    """Append one posting; returns ``OK`` or the arena's failure status.

    A dope vector that was grown before a failed segment allocation is kept;
    the retry then only needs the segment.
    """
    if states[t, Q_COUNT] == 0 or states[t, Q_LAST_FILL] == states[t, Q_CAP]:
        if states[t, Q_SEGMENTS] == states[t, Q_DOPE_CAP]:
            new_cap = max(1, 2 * states[t, Q_DOPE_CAP])
            d = arena_alloc(mem, ast, table, log, new_cap)
            if d < 0:
                return d
            old = states[t, Q_DOPE]
            for k in range(states[t, Q_SEGMENTS]):
                mem[d + k] = mem[old + k]
            states[t, Q_DISCARDED] += states[t, Q_DOPE_CAP]
            states[t, Q_DOPE] = d
            states[t, Q_DOPE_CAP] = new_cap
        j = states[t, Q_SUPER]
        left = states[t, Q_SUPER_LEFT]
        if left == 0:
            j += 1
            left = 1 << (j // 2)
        cap = np.int64(1) << ((j + 1) // 2)
        h = arena_alloc(mem, ast, table, log, cap)
        if h < 0:
            return h
        states[t, Q_SUPER] = j
        states[t, Q_SUPER_LEFT] = left - 1
        states[t, Q_CAP] = cap
        mem[states[t, Q_DOPE] + states[t, Q_SEGMENTS]] = h
        states[t, Q_SEGMENTS] += 1
        states[t, Q_LAST_FILL] = 0
        states[t, Q_ALLOCATED] += cap
        if cap > states[t, Q_MAX_CAP]:
            states[t, Q_MAX_CAP] = cap
    seg = np.int64(mem[states[t, Q_DOPE] + states[t, Q_SEGMENTS] - 1])
    mem[seg + states[t, Q_LAST_FILL]] = value
    states[t, Q_LAST_FILL] += 1
    states[t, Q_COUNT] += 1
    return OK


@kernel
def sqa_extend(mem, ast, table, log, states, t, values, start):
    for i in range(start, values.shape[0]):
        status = sqa_append(mem, ast, table, log, states, t, values[i])
        if status != OK:
            return i, status
    return values.shape[0], OK


@kernel
def sqa_get_unchecked(mem, states, t, i):
    s, off = locate(i)
    return np.int64(mem[np.int64(mem[states[t, Q_DOPE] + s]) + off])


@kernel
def sqa_gather(mem, states, t, positions, out):
    for k in range(positions.shape[0]):
        out[k] = sqa_get_unchecked(mem, states, t, positions[k])


@kernel
def sqa_read(mem, states, t, out):
    """Copy postings segment by segment through the dope vector.

    The final segment contributes ``last_fill`` postings, so the result is an
    independent measure of the length; -1 if it would overrun ``out``.
    """
    n = 0
    segs = states[t, Q_SEGMENTS]
    j = 0
    left = 1
    for s in range(segs):
        cap = np.int64(1) << ((j + 1) // 2)
        take = cap if s < segs - 1 else states[t, Q_LAST_FILL]
        if n + take > out.shape[0]:
            return -1
        h = np.int64(mem[states[t, Q_DOPE] + s])
        for k in range(take):
            out[n + k] = mem[h + k]
        n += take
        left -= 1
        if left == 0:
            j += 1
            left = 1 << (j // 2)
    return n


@kernel
def sqa_checksum(mem, states, t, salt):
    n = 0
    segs = states[t, Q_SEGMENTS]
    acc = np.int64(0)
    j = 0
    left = 1
    for s in range(segs):
        cap = np.int64(1) << ((j + 1) // 2)
        take = cap if s < segs - 1 else states[t, Q_LAST_FILL]
        h = np.int64(mem[states[t, Q_DOPE] + s])
        for k in range(take):
            acc += np.int64(mem[h + k]) + salt
        n += take
        left -= 1
        if left == 0:
            j += 1
            left = 1 << (j // 2)
    return acc, n


@dataclass(frozen=True)
class SqArrayStats(ComponentStats):
    dope_capacity: int = 0
    dope_used: int = 0
    discarded_dope_units: int = 0

    @property
    def dope_slack(self):
        return self.dope_capacity - self.dope_used


def row_stats(row):
    segs = int(row[Q_SEGMENTS])
    alloc = int(row[Q_ALLOCATED])
    return SqArrayStats(
        components=segs,
        allocated_units=alloc,
        link_units=0,
        waste_units=alloc - int(row[Q_COUNT]),
        max_component=int(row[Q_MAX_CAP]),
        dope_capacity=int(row[Q_DOPE_CAP]),
        dope_used=segs,
        discarded_dope_units=int(row[Q_DISCARDED]),
    )


class SqArray:
    """Extensible array of postings with O(1) positional access."""

    def __init__(self, arena, states=None, t=0):
        self.arena = arena
        self.states = sqa_empty_state(arena.null, 1) if states is None else states
        self.t = t

    @property
    def state(self):
        return self.states[self.t]

    def __len__(self):
        return int(self.state[Q_COUNT])

    @property
    def dope(self):
        h = int(self.state[Q_DOPE])
        return None if h == self.arena.null else h

    def append(self, posting):
        self.extend([posting])

    def extend(self, postings):
        values = np.asarray(postings, dtype=np.int64).reshape(-1)
        if values.size and (values.min() < 0 or values.max() >= self.arena.null):
            raise ValueError("posting does not fit in one memory unit")
        done, status = self.arena.run(sqa_extend, self.states, self.t, values)
        if status == FAILED:
            raise self.arena.capacity_error(f"after appending {done} of {values.size} postings")

    def __getitem__(self, i):
        n = len(self)
        if i < 0:
            i += n
        if not 0 <= i < n:
            raise IndexError(f"position {i} out of range for SqArray of length {n}")
        return int(sqa_get_unchecked(self.arena.mem, self.states, self.t, i))

    def gather(self, positions):
        positions = np.asarray(positions, dtype=np.int64)
        if positions.size and (positions.min() < 0 or positions.max() >= len(self)):
            raise IndexError("position out of range")
        out = np.empty(positions.shape[0], dtype=np.int64)
        sqa_gather(self.arena.mem, self.states, self.t, positions, out)
        return out

    def to_array(self):
        out = np.empty(len(self), dtype=np.int64)
        n = sqa_read(self.arena.mem, self.states, self.t, out)
        if n != len(self):
            raise RuntimeError(f"segments hold {n} postings, expected {len(self)}")
        return out

    def __iter__(self):
        return iter(self.to_array().tolist())

    def segments(self):
        """(handle, capacity) of each allocated segment in dope order."""
        out = []
        dope = int(self.state[Q_DOPE])
        for s in range(int(self.state[Q_SEGMENTS])):
            cap = segment_capacity(s)
            out.append((int(self.arena.mem[dope + s]), cap))
        return out

    def stats(self):
        return row_stats(self.state)

    def __repr__(self):
        return f"SqArray(count={len(self)}, segments={int(self.state[Q_SEGMENTS])})"


def segment_capacity(s):
    """Capacity of segment ``s`` (0-based)."""
    j = 0
    while segments_before(j + 1) <= s:
        j += 1
    return 1 << ((j + 1) // 2)
