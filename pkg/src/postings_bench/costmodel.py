"""Analytical memory-cost model for FBB lists and SQ arrays.

The cost of a method at list length ``l`` is the number of memory units it
occupies beyond an exact array of ``l`` postings.  Postings and handles are
one unit each; no postings live in the vocabulary and nothing is compressed.

* FBB: unused tail of the last chunk + one next-link per chunk + head/tail (2)
* SQA_B: unused tail of the last segment + dope vector capacity + dope handle (1)
* SQA_A: SQA_B plus every superseded dope vector
"""
import enum
import io
from dataclasses import dataclass

import numpy as np

from ._jit import choose
from .fbb import FIB
from .sqa import locate, segments_before

FBB_VOCAB_UNITS = 2
SQA_VOCAB_UNITS = 1

CSV_HEADER = "l,oracle,fbb_alloc,sqa_alloc,fbb_cost,sqa_cost_a,sqa_cost_b,fbb_mean,sqa_mean_a,sqa_mean_b"

# cumulative payload through run r is F(r) * F(r+1); index 0 is run 1
_FBB_CUM = FIB[1:46] * FIB[2:47]


class CostVariant(enum.Enum):
    FBB = "fbb"
    SQA_A = "sqa_a"
    SQA_B = "sqa_b"


@dataclass(frozen=True)
class LayoutStats:
    method: str
    length: int
    components: int
    allocated_units: int
    waste_units: int
    max_component: int
    vocab_units: int
    link_units: int = 0
    dope_capacity: int = 0
    dope_used: int = 0
    dope_discarded: int = 0


def fbb_layout(l):
    if l < 0:
        raise ValueError(f"length must be >= 0, got {l}")
    if l == 0:
        return LayoutStats("fbb", 0, 0, 0, 0, 0, FBB_VOCAB_UNITS)
    r = int(np.searchsorted(_FBB_CUM, l)) + 1
    size = int(FIB[r])
    before = int(FIB[r - 1]) * size
    need = -(-(l - before) // size)
    comps = int(FIB[r + 1]) - 1 + need
    alloc = before + need * size
    return LayoutStats("fbb", l, comps, alloc, alloc - l, size, FBB_VOCAB_UNITS,
                       link_units=comps)


def sqa_layout(l):
    if l < 0:
        raise ValueError(f"length must be >= 0, got {l}")
    if l == 0:
        return LayoutStats("sqa", 0, 0, 0, 0, 0, SQA_VOCAB_UNITS)
    seg, off = locate(l - 1)
    seg, off = int(seg), int(off)
    comps = seg + 1
    j = 0
    while segments_before(j + 1) <= seg:
        j += 1
    size = 1 << ((j + 1) // 2)
    alloc = l + size - 1 - off
    dope = 1 << (comps - 1).bit_length()
    return LayoutStats("sqa", l, comps, alloc, alloc - l, size, SQA_VOCAB_UNITS,
                       dope_capacity=dope, dope_used=comps, dope_discarded=dope - 1)


def method_cost(l, variant, include_vocab=True):
    if l < 1:
        raise ValueError(f"length must be >= 1, got {l}")
    variant = CostVariant(variant)
    if variant is CostVariant.FBB:
        s = fbb_layout(l)
        return s.waste_units + s.link_units + (s.vocab_units if include_vocab else 0)
    s = sqa_layout(l)
    cost = s.waste_units + s.dope_capacity + (s.vocab_units if include_vocab else 0)
    if variant is CostVariant.SQA_A:
        cost += s.dope_discarded
    return cost


def _curves_loop(L):
    """Incremental simulation of both schedules for l = 1..L."""
    fbb_alloc = np.empty(L, dtype=np.int64)
    fbb_comps = np.empty(L, dtype=np.int64)
    sqa_alloc = np.empty(L, dtype=np.int64)
    sqa_comps = np.empty(L, dtype=np.int64)
    dope_cap = np.empty(L, dtype=np.int64)
    fa = 0
    fc = 0
    run = 0
    run_left = 0
    qa = 0
    qc = 0
    j = -1
    sb_left = 0
    dc = 0
    for i in range(L):
        l = i + 1
        if l > fa:
            if run_left == 0:
                run += 1
                run_left = FIB[run]
            run_left -= 1
            fc += 1
            fa += FIB[run]
        if l > qa:
            if sb_left == 0:
                j += 1
                sb_left = 1 << (j // 2)
            sb_left -= 1
            qc += 1
            qa += 1 << ((j + 1) // 2)
            if qc > dc:
                dc = 1 if dc == 0 else 2 * dc
        fbb_alloc[i] = fa
        fbb_comps[i] = fc
        sqa_alloc[i] = qa
        sqa_comps[i] = qc
        dope_cap[i] = dc
    return fbb_alloc, fbb_comps, sqa_alloc, sqa_comps, dope_cap


def _curves_numpy(L):
    l = np.arange(1, L + 1, dtype=np.int64)
    r = np.searchsorted(_FBB_CUM, l) + 1
    size = FIB[r]
    before = FIB[r - 1] * size
    need = -(-(l - before) // size)
    fbb_comps = FIB[r + 1] - 1 + need
    fbb_alloc = before + need * size

    p = l
    j = (np.frexp(p.astype(np.float64))[1] - 1).astype(np.int64)
    b = p - (np.int64(1) << j)
    h = (j + 1) >> 1
    half = j >> 1
    seg_before = np.where(j % 2 == 0, (np.int64(1) << (half + 1)) - 2, 3 * (np.int64(1) << half) - 2)
    seg = seg_before + (b >> h)
    off = b & ((np.int64(1) << h) - 1)
    sqa_comps = seg + 1
    sqa_alloc = l + (np.int64(1) << h) - 1 - off
    dope_cap = np.int64(1) << (np.frexp((2 * sqa_comps - 1).astype(np.float64))[1] - 1).astype(np.int64)
    return fbb_alloc, fbb_comps, sqa_alloc, sqa_comps, dope_cap


_curves = choose(_curves_loop, _curves_numpy)


@dataclass
class Curves:
    """Per-length allocation and cost columns for l = 1..L."""
    length: np.ndarray
    fbb_alloc: np.ndarray
    fbb_components: np.ndarray
    sqa_alloc: np.ndarray
    sqa_components: np.ndarray
    dope_capacity: np.ndarray

    @property
    def dope_discarded(self):
        return self.dope_capacity - 1

    def cost(self, variant, include_vocab=True):
        variant = CostVariant(variant)
        if variant is CostVariant.FBB:
            c = self.fbb_alloc - self.length + self.fbb_components
            return c + FBB_VOCAB_UNITS if include_vocab else c
        c = self.sqa_alloc - self.length + self.dope_capacity
        if include_vocab:
            c = c + SQA_VOCAB_UNITS
        if variant is CostVariant.SQA_A:
            c = c + self.dope_discarded
        return c

    def running_mean(self, variant, include_vocab=True):
        # integer prefix sums stay exact; one division per length
        return np.cumsum(self.cost(variant, include_vocab)) / self.length


def layout_curves(L):
    if L < 1:
        raise ValueError(f"max length must be >= 1, got {L}")
    fa, fc, qa, qc, dc = _curves(int(L))
    return Curves(np.arange(1, L + 1, dtype=np.int64), fa, fc, qa, qc, dc)


def mean_cost(L, variant, include_vocab=True):
    """Mean of ``method_cost(l, variant)`` over l = 1..L."""
    costs = layout_curves(L).cost(variant, include_vocab)
    return float(costs.sum(dtype=np.int64)) / L


def _row_selector(L, stride):
    ls = np.arange(stride, L + 1, stride, dtype=np.int64)
    if ls.size == 0 or ls[-1] != L:
        ls = np.append(ls, L)
    return ls - 1


def emit_curves(L, stride, sink):
    """Write the CSV curve table for every ``stride``-th length (and ``L``)."""
    if L < 1 or stride < 1:
        raise ValueError("max length and stride must both be >= 1")
    c = layout_curves(L)
    idx = _row_selector(L, stride)
    ints = np.column_stack([
        c.length[idx], c.length[idx], c.fbb_alloc[idx], c.sqa_alloc[idx],
        c.cost(CostVariant.FBB)[idx], c.cost(CostVariant.SQA_A)[idx], c.cost(CostVariant.SQA_B)[idx],
    ])
    means = np.column_stack([c.running_mean(v)[idx] for v in CostVariant])
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for row_i, row_f in zip(ints.tolist(), means.tolist()):
        buf.write(",".join(map(str, row_i)))
        buf.write(",%.6f,%.6f,%.6f\n" % tuple(row_f))
    sink.write(buf.getvalue())
    return c


@dataclass(frozen=True)
class ModelSummary:
    length: int
    fbb: LayoutStats
    sqa: LayoutStats
    mean_fbb: float
    mean_sqa_a: float
    mean_sqa_b: float
    mean_fbb_no_vocab: float
    mean_sqa_a_no_vocab: float
    mean_sqa_b_no_vocab: float


def summarize(L, curves=None):
    c = curves if curves is not None else layout_curves(L)
    means = {}
    for v in CostVariant:
        for vocab in (True, False):
            means[v, vocab] = float(c.cost(v, vocab).sum(dtype=np.int64)) / L
    return ModelSummary(
        length=L,
        fbb=fbb_layout(L),
        sqa=sqa_layout(L),
        mean_fbb=means[CostVariant.FBB, True],
        mean_sqa_a=means[CostVariant.SQA_A, True],
        mean_sqa_b=means[CostVariant.SQA_B, True],
        mean_fbb_no_vocab=means[CostVariant.FBB, False],
        mean_sqa_a_no_vocab=means[CostVariant.SQA_A, False],
        mean_sqa_b_no_vocab=means[CostVariant.SQA_B, False],
    )
