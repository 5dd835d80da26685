"""Dynamic Fibonacci chunked postings lists.

Run ``r`` (1-based) consists of ``F(r)`` chunks of capacity ``F(r)`` with
``F(1) = F(2) = 1``, so capacities go 1, 1, 2, 2, 3, 3, 3, 5, ...  Each chunk
is laid out in the arena as ``[next handle][payload]``; the head and tail
handles live with the owner of the list (a vocabulary entry).

A list is a row of int64 cursor state (``F_*`` slots).  The index keeps one
row per term in a 2-D array so the compiled build loop can append to any term
without touching Python objects.
"""
from dataclasses import dataclass

import numpy as np

from ._jit import kernel
from .arena import FAILED, OK, S_NULL, arena_alloc


def _fib_table(n):
    f = [0, 1, 1]
    while len(f) < n:
        f.append(f[-1] + f[-2])
    return np.array(f, dtype=np.int64)


FIB = _fib_table(91)  # F(90) is the last value below 2**63

F_HEAD = 0
F_TAIL = 1
F_COUNT = 2
F_LAST_FILL = 3
F_RUN = 4
F_RUN_LEFT = 5  # chunks still to be allocated in the current run
F_CAP = 6
F_COMPONENTS = 7
F_ALLOCATED = 8
F_MAX_CAP = 9
F_WIDTH = 10


@dataclass(frozen=True)
class ComponentStats:
    components: int
    allocated_units: int
    link_units: int
    waste_units: int
    max_component: int = 0


def fbb_schedule(k):
    """Capacity of the ``k``-th chunk (1-based)."""
    if k < 1:
        raise ValueError(f"chunk ordinal must be >= 1, got {k}")
    r = 1
    while FIB[r + 2] - 1 < k:
        r += 1
    return int(FIB[r])


def fbb_empty_state(null, n=None):
    """Fresh cursor state: one row, or an ``(n, F_WIDTH)`` table."""
    shape = F_WIDTH if n is None else (n, F_WIDTH)
    st = np.zeros(shape, dtype=np.int64)
    st[..., F_HEAD] = null
    st[..., F_TAIL] = null
    return st


@kernel
def fbb_append(mem, ast, table, log, states, t, value):
    """Append one posting; returns ``OK`` or the arena's failure status.

    On failure the list is unchanged, so the append can be retried after the
    arena grows.
    """
    if states[t, F_COUNT] == 0 or states[t, F_LAST_FILL] == states[t, F_CAP]:
        if states[t, F_RUN_LEFT] == 0:
            states[t, F_RUN] += 1
            states[t, F_CAP] = FIB[states[t, F_RUN]]
            states[t, F_RUN_LEFT] = states[t, F_CAP]
        cap = states[t, F_CAP]
        h = arena_alloc(mem, ast, table, log, cap + 1)
        if h < 0:
            # roll the cursor back so a retry sees the same schedule position
            if states[t, F_RUN_LEFT] == states[t, F_CAP]:
                states[t, F_RUN] -= 1
                states[t, F_CAP] = FIB[states[t, F_RUN]]
                states[t, F_RUN_LEFT] = 0
            return h
        states[t, F_RUN_LEFT] -= 1
        mem[h] = ast[S_NULL]
        if states[t, F_TAIL] == ast[S_NULL]:
            states[t, F_HEAD] = h
        else:
            mem[states[t, F_TAIL]] = h
        states[t, F_TAIL] = h
        states[t, F_LAST_FILL] = 0
        states[t, F_COMPONENTS] += 1
        states[t, F_ALLOCATED] += cap
        if cap > states[t, F_MAX_CAP]:
            states[t, F_MAX_CAP] = cap
    mem[states[t, F_TAIL] + 1 + states[t, F_LAST_FILL]] = value
    states[t, F_LAST_FILL] += 1
    states[t, F_COUNT] += 1
    return OK


@kernel
def fbb_extend(mem, ast, table, log, states, t, values, start):
    """Append ``values[start:]`` in order; returns (n_done, status)."""
    for i in range(start, values.shape[0]):
        status = fbb_append(mem, ast, table, log, states, t, values[i])
        if status != OK:
            return i, status
    return values.shape[0], OK


@kernel
def fbb_read(mem, null, states, t, out):
    """Walk the chain from the head, copying postings into ``out``.

    Returns the number of postings found, which callers compare against the
    stored count.
    """
    h = states[t, F_HEAD]
    run = 1
    left = FIB[1]
    n = 0
    total = states[t, F_COUNT]
    while h != null:
        cap = FIB[run]
        nxt = np.int64(mem[h])
        take = cap if nxt != null else states[t, F_LAST_FILL]
        if n + take > out.shape[0]:
            return -1
        for k in range(take):
            out[n + k] = mem[h + 1 + k]
        n += take
        left -= 1
        if left == 0:
            run += 1
            left = FIB[run]
        h = nxt
        if n > total:
            return -1
    return n


@kernel
def fbb_checksum(mem, null, states, t, salt):
    """Sum of ``posting + salt`` over the list plus the count walked."""
    h = states[t, F_HEAD]
    run = 1
    left = FIB[1]
    n = 0
    acc = np.int64(0)
    while h != null:
        cap = FIB[run]
        nxt = np.int64(mem[h])
        take = cap if nxt != null else states[t, F_LAST_FILL]
        for k in range(take):
            acc += np.int64(mem[h + 1 + k]) + salt
        n += take
        left -= 1
        if left == 0:
            run += 1
            left = FIB[run]
        h = nxt
    return acc, n


def row_stats(row):
    comps = int(row[F_COMPONENTS])
    alloc = int(row[F_ALLOCATED])
    return ComponentStats(
        components=comps,
        allocated_units=alloc,
        link_units=comps,
        waste_units=alloc - int(row[F_COUNT]),
        max_component=int(row[F_MAX_CAP]),
    )


class FbbList:
    """Append-only Fibonacci-chunked list of postings stored in ``arena``.

    The cursor is row ``t`` of ``states``, which lets an index hand out lists
    backed by its own table; by default the list owns a one-row table.
    """

    def __init__(self, arena, states=None, t=0):
        self.arena = arena
        self.states = fbb_empty_state(arena.null, 1) if states is None else states
        self.t = t

    @property
    def state(self):
        return self.states[self.t]

    def __len__(self):
        return int(self.state[F_COUNT])

    @property
    def head(self):
        h = int(self.state[F_HEAD])
        return None if h == self.arena.null else h

    @property
    def tail(self):
        h = int(self.state[F_TAIL])
        return None if h == self.arena.null else h

    def append(self, posting):
        self.extend([posting])

    def extend(self, postings):
        values = np.asarray(postings, dtype=np.int64).reshape(-1)
        if values.size and (values.min() < 0 or values.max() >= self.arena.null):
            raise ValueError("posting does not fit in one memory unit")
        done, status = self.arena.run(fbb_extend, self.states, self.t, values)
        if status == FAILED:
            raise self.arena.capacity_error(f"after appending {done} of {values.size} postings")

    def to_array(self):
        out = np.empty(len(self), dtype=np.int64)
        n = fbb_read(self.arena.mem, self.arena.null, self.states, self.t, out)
        if n != len(self):
            raise RuntimeError(f"chunk chain holds {n} postings, expected {len(self)}")
        return out

    def __iter__(self):
        return iter(self.to_array().tolist())

    def chunks(self):
        """(handle, capacity, fill) for each chunk, following next links."""
        null = self.arena.null
        out = []
        h = int(self.state[F_HEAD])
        k = 1
        while h != null:
            cap = fbb_schedule(k)
            nxt = int(self.arena.mem[h])
            out.append((h, cap, cap if nxt != null else int(self.state[F_LAST_FILL])))
            h = nxt
            k += 1
        return out

    def stats(self):
        return row_stats(self.state)

    def __repr__(self):
        return f"FbbList(count={len(self)}, components={int(self.state[F_COMPONENTS])})"
