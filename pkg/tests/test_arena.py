import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from postings_bench.arena import Arena, ArenaCapacityError, ArenaConfigError

from oracles import replay_arena


def test_fresh_default_arena():
    a = Arena(67108864, 4)
    s = a.stats()
    assert (s.blocks, s.total_bytes, s.used_units) == (0, 0, 0)


def test_fresh_small_arena():
    assert Arena(1024, 4).stats().blocks == 0


@pytest.mark.parametrize("block, unit", [(1000, 3), (0, 4), (10, 4), (12, 8), (-8, 4)])
def test_bad_config(block, unit):
    with pytest.raises(ArenaConfigError):
        Arena(block, unit)


def test_first_alloc_opens_block():
    a = Arena(67108864, 4)
    h = a.alloc(1)
    s = a.stats()
    assert h == 0
    assert (s.blocks, s.total_bytes, s.used_units) == (1, 67108864, 1)


def test_alloc_size_must_be_positive():
    with pytest.raises(ValueError):
        Arena(24).alloc(0)


def test_exact_fill_then_new_block():
    # 6-unit blocks: two alloc(3) fill block 1 exactly, a third opens block 2
    a = Arena(24, 4)
    a.alloc(3)
    a.alloc(3)
    assert a.stats().blocks == 1
    a.alloc(3)
    s = a.stats()
    assert s.blocks == 2 and s.wasted_block_tail_units == 0


def test_tail_waste_counted():
    a = Arena(24, 4)
    a.alloc(4)
    a.alloc(3)
    s = a.stats()
    assert s.blocks == 2 and s.wasted_block_tail_units == 2


def test_oversize_gets_exact_block():
    a = Arena(24, 4)
    h = a.alloc(10)
    s = a.stats()
    assert s.oversize_blocks == 1 and s.oversize_bytes == 40
    assert s.blocks == 0 and s.total_bytes == 40
    assert a.blocks() == [(h, 10)]


def test_oversize_does_not_close_current_block():
    a = Arena(24, 4)
    h1 = a.alloc(2)
    a.alloc(50)
    h2 = a.alloc(2)
    assert a.resolve(h1)[0] == a.resolve(h2)[0] == 0
    assert a.resolve(h2)[1] == 2


def test_twenty_units_matches_replay():
    a = Arena(24, 4, record_log=True)
    for n in (1, 2, 3, 4, 5, 5):
        a.alloc(n)
    ref = replay_arena(a.log.tolist(), 6)
    s = a.stats()
    assert s.used_units == 20
    assert s.blocks == ref["blocks"]
    assert s.total_bytes == ref["total_units"] * 4


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 16), st.lists(st.integers(1, 40), max_size=200), st.sampled_from([4, 8]))
def test_accounting_matches_replay(block_units, sizes, unit):
    a = Arena(block_units * unit, unit, record_log=True)
    handles = [a.alloc(n) for n in sizes]
    s = a.stats()
    ref = replay_arena(a.log.tolist(), block_units)
    assert a.log.tolist() == sizes
    assert s.blocks == ref["blocks"]
    assert s.used_units == ref["used_units"]
    assert s.wasted_block_tail_units == ref["wasted_block_tail_units"]
    assert s.oversize_blocks == ref["oversize_blocks"]
    assert s.total_bytes == s.blocks * a.block_bytes + s.oversize_bytes
    assert s.total_bytes == ref["total_units"] * unit
    # handles are disjoint ranges inside their blocks
    spans = sorted((h, h + n) for h, n in zip(handles, sizes))
    assert all(a1 <= b0 for (_, a1), (b0, _) in zip(spans, spans[1:]))
    for h, n in zip(handles, sizes):
        k, off = a.resolve(h)
        assert off + n <= a.blocks()[k][1]


def test_writes_survive_growth():
    a = Arena(64, 4)
    hs = []
    for i in range(500):
        h = a.alloc(3)
        a.view(h, 3)[:] = i
        hs.append(h)
    assert all((a.view(h, 3) == i).all() for i, h in enumerate(hs))


def test_capacity_error():
    a = Arena(40, 4, max_units=25)
    a.alloc(10)
    a.alloc(10)
    with pytest.raises(ArenaCapacityError):
        a.alloc(10)
    # a failed request leaves the accounting untouched
    assert a.stats().used_units == 20


def test_null_values():
    assert Arena(64, 4).null == 2**32 - 1
    assert Arena(64, 8).null == 2**63 - 1
    assert Arena(64, 8).mem.dtype == np.uint64


def test_resolve_rejects_foreign_handles():
    a = Arena(24, 4)
    a.alloc(2)
    with pytest.raises(ValueError):
        a.resolve(100)
    with pytest.raises(ValueError):
        a.resolve(a.null)
