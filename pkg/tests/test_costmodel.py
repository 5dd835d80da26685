import io

import numpy as np
import pytest

from postings_bench import costmodel
from postings_bench.costmodel import CostVariant, fbb_layout, mean_cost, method_cost, sqa_layout
from postings_bench.fbb import FbbList
from postings_bench.sqa import SqArray
from postings_bench.arena import Arena

from oracles import doubling_dope, fib_capacities, layout_by_scan, sq_capacities


def test_layout_examples():
    assert (fbb_layout(0).components, fbb_layout(0).allocated_units) == (0, 0)
    f = fbb_layout(10**6)
    assert (f.components, f.allocated_units, f.waste_units) == (2000, 1_000_818, 818)
    q = sqa_layout(0)
    assert (q.components, q.dope_capacity) == (0, 0)
    q = sqa_layout(7)
    assert (q.components, q.waste_units, q.dope_capacity, q.dope_discarded) == (4, 0, 4, 3)
    assert sqa_layout(10**6).max_component == 1024


def test_negative_length_rejected():
    with pytest.raises(ValueError):
        fbb_layout(-1)
    with pytest.raises(ValueError):
        sqa_layout(-1)


def test_method_cost_examples():
    assert method_cost(1, CostVariant.FBB) == 3
    assert method_cost(1, CostVariant.SQA_B) == 2
    assert method_cost(4, CostVariant.SQA_A) == 9
    assert method_cost(1, "fbb", include_vocab=False) == 1


def _brute_costs(L):
    """Per-length costs straight from the literal layouts."""
    fc, qc = fib_capacities(4000), sq_capacities(4000)
    out = {v: [] for v in CostVariant}
    for l in range(1, L + 1):
        n, alloc = layout_by_scan(fc, l)
        out[CostVariant.FBB].append(alloc - l + n + 2)
        n, alloc = layout_by_scan(qc, l)
        cap, disc = doubling_dope(n)
        out[CostVariant.SQA_B].append(alloc - l + cap + 1)
        out[CostVariant.SQA_A].append(alloc - l + cap + 1 + disc)
    return out


def test_costs_match_literal_layouts():
    L = 3000
    ref = _brute_costs(L)
    c = costmodel.layout_curves(L)
    for v in CostVariant:
        assert c.cost(v).tolist() == ref[v]
        assert [method_cost(l, v) for l in (1, 17, 999, L)] == [ref[v][l - 1] for l in (1, 17, 999, L)]


def test_mean_cost_small():
    assert mean_cost(1, CostVariant.FBB) == 3.0


@pytest.mark.parametrize("variant", list(CostVariant))
def test_mean_cost_brute_force(variant):
    L = 20000
    total = sum(method_cost(l, variant) for l in range(1, L + 1))
    assert mean_cost(L, variant) == pytest.approx(total / L, rel=1e-9)


def test_running_mean_matches_sum():
    c = costmodel.layout_curves(5000)
    for v in CostVariant:
        cost = c.cost(v).tolist()
        means = c.running_mean(v)
        for l in (1, 2, 100, 5000):
            assert means[l - 1] == pytest.approx(sum(cost[:l]) / l, rel=1e-9)


def test_invariants_over_range():
    c = costmodel.layout_curves(10**5)
    assert (np.diff(c.fbb_alloc) >= 0).all() and (np.diff(c.sqa_alloc) >= 0).all()
    assert (c.fbb_alloc >= c.length).all() and (c.sqa_alloc >= c.length).all()
    diff = c.cost(CostVariant.SQA_A) - c.cost(CostVariant.SQA_B)
    assert np.array_equal(diff, c.dope_discarded)


def test_loop_and_numpy_curves_agree():
    a = costmodel._curves_loop(10**5)
    b = costmodel._curves_numpy(10**5)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


@pytest.mark.parametrize("l", [1, 2, 3, 4, 7, 8, 100, 1234, 4181, 65536, 99999])
def test_layout_matches_live_structures(l):
    a = Arena(1 << 16)
    f = FbbList(a)
    f.extend(range(l))
    q = SqArray(a)
    q.extend(range(l))
    fl, ql, fs, qs = fbb_layout(l), sqa_layout(l), f.stats(), q.stats()
    assert (fl.components, fl.allocated_units, fl.waste_units, fl.max_component) == \
        (fs.components, fs.allocated_units, fs.waste_units, fs.max_component)
    assert (ql.components, ql.allocated_units, ql.dope_capacity, ql.dope_discarded) == \
        (qs.components, qs.allocated_units, qs.dope_capacity, qs.discarded_dope_units)


def _parse(text):
    lines = text.splitlines()
    return lines[0], [line.split(",") for line in lines[1:]]


def test_emit_curves_small():
    buf = io.StringIO()
    costmodel.emit_curves(4, 1, buf)
    header, rows = _parse(buf.getvalue())
    assert header == costmodel.CSV_HEADER
    assert len(rows) == 4
    assert rows[0][:2] == ["1", "1"]
    assert rows[0][4] == "3"
    assert all(int(r[5]) >= int(r[6]) for r in rows)
    assert "\r" not in buf.getvalue()


def test_emit_curves_stride_and_final_row():
    buf = io.StringIO()
    costmodel.emit_curves(2500, 1000, buf)
    _, rows = _parse(buf.getvalue())
    assert [int(r[0]) for r in rows] == [1000, 2000, 2500]
    assert all(len(r[7].split(".")[1]) == 6 for r in rows)


def test_emit_curves_consistent_at_million():
    buf = io.StringIO()
    costmodel.emit_curves(10**6, 10**5, buf)
    _, rows = _parse(buf.getvalue())
    last = rows[-1]
    assert int(last[0]) == 10**6
    assert int(last[2]) == fbb_layout(10**6).allocated_units
    assert int(last[3]) == sqa_layout(10**6).allocated_units
    assert int(last[4]) == method_cost(10**6, CostVariant.FBB)
    assert float(last[7]) == pytest.approx(mean_cost(10**6, CostVariant.FBB), abs=5e-7)


def test_emit_curves_rejects_bad_args():
    with pytest.raises(ValueError):
        costmodel.emit_curves(0, 1, io.StringIO())
    with pytest.raises(ValueError):
        costmodel.emit_curves(5, 0, io.StringIO())


def test_summary_vocab_sensitivity():
    s = costmodel.summarize(1000)
    assert s.mean_fbb - s.mean_fbb_no_vocab == pytest.approx(2)
    assert s.mean_sqa_b - s.mean_sqa_b_no_vocab == pytest.approx(1)
    assert s.fbb == fbb_layout(1000)
