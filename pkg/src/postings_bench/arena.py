"""Block-structured bump allocator with exact memory accounting.

Storage is carved sequentially out of fixed-size blocks (64 MiB by default).
Every block, regular or oversize, owns a contiguous range of a single virtual
unit address space, so a handle is just that address and fits in one memory
unit.  Nothing is ever freed.

The allocator state lives in plain numpy arrays so the same ``arena_alloc``
kernel serves both the Python API and the compiled indexing loops.
"""
from dataclasses import dataclass

import numpy as np

from ._jit import kernel

DEFAULT_BLOCK_BYTES = 64 * 1024 * 1024
DEFAULT_UNIT_BYTES = 4

# slots of the int64 state vector
S_TOP = 0          # units reserved so far (next block base)
S_CUR = 1          # base address of the current regular block
S_FILL = 2         # units used in the current regular block
S_NBLOCKS = 3      # regular blocks opened
S_NOVER = 4        # oversize blocks
S_OVER_UNITS = 5   # units held by oversize blocks
S_WASTED = 6       # units abandoned at the tails of closed regular blocks
S_USED = 7         # units handed out
S_BLOCK_UNITS = 8  # capacity of a regular block, in units
S_LIMIT = 9        # exclusive upper bound on reservable addresses
S_NULL = 10        # the null handle value
S_NTABLE = 11      # rows used in the block table
S_LOGGING = 12     # 1 when every request size is appended to the log
S_NLOG = 13        # entries used in the log
S_PENDING = 14     # size of the request that last returned GROW
N_STATE = 15

OK = 0
FAILED = -1
GROW = -2


class ArenaConfigError(ValueError):
    pass


class ArenaCapacityError(RuntimeError):
    pass


@dataclass(frozen=True)
class ArenaStats:
    blocks: int
    total_bytes: int
    used_units: int
    wasted_block_tail_units: int
    oversize_blocks: int = 0
    oversize_bytes: int = 0
    unit_bytes: int = DEFAULT_UNIT_BYTES

    @property
    def used_bytes(self):
        return self.used_units * self.unit_bytes


@kernel
def arena_alloc(mem, st, table, log, n):
    """Reserve ``n`` contiguous units and return the handle.

    Returns ``FAILED`` when the address space is exhausted and ``GROW`` when
    the physical buffers are too small; in both cases nothing is modified
    (``GROW`` records ``n`` in ``S_PENDING`` for ``Arena.grow``).
    """
    bu = st[S_BLOCK_UNITS]
    logging = st[S_LOGGING] != 0
    if logging and st[S_NLOG] == log.shape[0]:
        st[S_PENDING] = n
        return GROW
    if n > bu:
        base = st[S_TOP]
        if base + n > st[S_LIMIT]:
            return FAILED
        if base + n > mem.shape[0] or st[S_NTABLE] == table.shape[0]:
            st[S_PENDING] = n
            return GROW
        table[st[S_NTABLE], 0] = base
        table[st[S_NTABLE], 1] = n
        st[S_NTABLE] += 1
        st[S_TOP] = base + n
        st[S_NOVER] += 1
        st[S_OVER_UNITS] += n
        h = base
    else:
        if st[S_NBLOCKS] == 0 or st[S_FILL] + n > bu:
            base = st[S_TOP]
            if base + bu > st[S_LIMIT]:
                return FAILED
            if base + bu > mem.shape[0] or st[S_NTABLE] == table.shape[0]:
                st[S_PENDING] = n
                return GROW
            if st[S_NBLOCKS] > 0:
                st[S_WASTED] += bu - st[S_FILL]
            table[st[S_NTABLE], 0] = base
            table[st[S_NTABLE], 1] = bu
            st[S_NTABLE] += 1
            st[S_TOP] = base + bu
            st[S_CUR] = base
            st[S_FILL] = 0
            st[S_NBLOCKS] += 1
        h = st[S_CUR] + st[S_FILL]
        st[S_FILL] += n
    st[S_USED] += n
    if logging:
        log[st[S_NLOG]] = n
        st[S_NLOG] += 1
    return h


class Arena:
    """Bump allocator over ``block_bytes``-sized blocks of ``unit_bytes`` units.

    ``max_units`` lowers the addressable range below the handle-width limit
    (2**32 - 1 units for 4-byte units); it exists so exhaustion can be
    exercised without reserving gigabytes.  With ``record_log`` every request
    size is kept for later replay.
    """

    def __init__(self, block_bytes=DEFAULT_BLOCK_BYTES, unit_bytes=DEFAULT_UNIT_BYTES,
                 *, max_units=None, record_log=False):
        if unit_bytes not in (4, 8):
            raise ArenaConfigError(f"unit_bytes must be 4 or 8, got {unit_bytes}")
        if block_bytes <= 0 or block_bytes % unit_bytes:
            raise ArenaConfigError(
                f"block_bytes must be a positive multiple of {unit_bytes}, got {block_bytes}")
        self.block_bytes = int(block_bytes)
        self.unit_bytes = int(unit_bytes)
        self.dtype = np.dtype(np.uint32 if unit_bytes == 4 else np.uint64)
        # all-ones for 4-byte units; 8-byte units stop at int64 max so handles
        # survive the round trip through signed kernel arithmetic
        self.null = 2**32 - 1 if unit_bytes == 4 else 2**63 - 1
        limit = self.null
        if max_units is not None:
            limit = min(limit, int(max_units))
        st = np.zeros(N_STATE, dtype=np.int64)
        st[S_BLOCK_UNITS] = self.block_bytes // self.unit_bytes
        st[S_LIMIT] = limit
        st[S_NULL] = self.null
        st[S_LOGGING] = 1 if record_log else 0
        self.st = st
        self.mem = np.empty(0, dtype=self.dtype)
        self.table = np.empty((0, 2), dtype=np.int64)
        self._log = np.empty(0, dtype=np.int64)

    @property
    def block_units(self):
        return int(self.st[S_BLOCK_UNITS])

    def buffers(self):
        return self.mem, self.st, self.table, self._log

    def grow(self):
        """Enlarge the physical buffers enough to retry the pending request."""
        st = self.st
        needed = int(st[S_TOP]) + max(self.block_units, int(st[S_PENDING]))
        if needed > self.mem.shape[0]:
            size = max(needed, self.mem.shape[0] + self.mem.shape[0] // 2)
            mem = np.empty(size, dtype=self.dtype)
            mem[: self.mem.shape[0]] = self.mem
            self.mem = mem
        if int(st[S_NTABLE]) == self.table.shape[0]:
            table = np.empty((max(4, 2 * self.table.shape[0]), 2), dtype=np.int64)
            table[: self.table.shape[0]] = self.table
            self.table = table
        if st[S_LOGGING] and int(st[S_NLOG]) == self._log.shape[0]:
            log = np.empty(max(16, 2 * self._log.shape[0]), dtype=np.int64)
            log[: self._log.shape[0]] = self._log
            self._log = log

    def capacity_error(self, what):
        return ArenaCapacityError(
            f"arena address space exhausted {what} "
            f"({int(self.st[S_TOP])} of {int(self.st[S_LIMIT])} units reserved)")

    def alloc(self, n_units):
        n_units = int(n_units)
        if n_units < 1:
            raise ValueError(f"allocation size must be >= 1, got {n_units}")
        while True:
            h = arena_alloc(self.mem, self.st, self.table, self._log, n_units)
            if h == GROW:
                self.grow()
                continue
            if h == FAILED:
                raise self.capacity_error(f"allocating {n_units} units")
            return int(h)

    def run(self, step, *args):
        """Drive a resumable kernel ``step(mem, st, table, log, *args, start)``.

        ``step`` returns ``(done, status)``; the buffers are grown and the
        kernel resumed from ``done`` until it completes or the address space
        runs out.  Returns the final ``(done, status)``.
        """
        start = 0
        while True:
            done, status = step(self.mem, self.st, self.table, self._log, *args, start)
            if status == GROW:
                self.grow()
                start = done
                continue
            return done, status

    @property
    def log(self):
        return self._log[: int(self.st[S_NLOG])].copy()

    @property
    def total_bytes(self):
        return int(self.st[S_TOP]) * self.unit_bytes

    def stats(self):
        st = self.st
        return ArenaStats(
            blocks=int(st[S_NBLOCKS]),
            total_bytes=int(st[S_TOP]) * self.unit_bytes,
            used_units=int(st[S_USED]),
            wasted_block_tail_units=int(st[S_WASTED]),
            oversize_blocks=int(st[S_NOVER]),
            oversize_bytes=int(st[S_OVER_UNITS]) * self.unit_bytes,
            unit_bytes=self.unit_bytes,
        )

    def blocks(self):
        """(base, units) of every block in creation order."""
        return [tuple(int(v) for v in row) for row in self.table[: int(self.st[S_NTABLE])]]

    def resolve(self, handle):
        """Map a handle to (block ordinal, unit offset)."""
        n = int(self.st[S_NTABLE])
        bases = self.table[:n, 0]
        k = int(np.searchsorted(bases, handle, side="right")) - 1
        if handle == self.null or k < 0 or handle - bases[k] >= self.table[k, 1]:
            raise ValueError(f"handle {handle} does not belong to this arena")
        return k, int(handle - bases[k])

    def view(self, handle, n_units):
        return self.mem[handle: handle + n_units]

    def __repr__(self):
        s = self.stats()
        return (f"Arena(block_bytes={self.block_bytes}, unit_bytes={self.unit_bytes}, "
                f"blocks={s.blocks}, used_units={s.used_units})")
