"""In-memory text inversion into FBB lists or SQ arrays.

Every occurrence of a term in record ``d`` appends posting ``d`` to that
term's structure.  The vocabulary maps term bytes to an ordinal (order of
first occurrence); per-term structure state is one row of an int64 table, so
the whole build is a single compiled pass over the token stream.
"""
import functools
import math
import re
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import fbb, lexer, sqa
from ._jit import kernel
from .arena import DEFAULT_BLOCK_BYTES, DEFAULT_UNIT_BYTES, FAILED, OK, Arena, ArenaCapacityError

MAX_TERM_BYTES = 15
METHODS = ("fbb", "sqa")

# group 1 is the term cut to its first MAX_TERM_BYTES bytes
_TOKEN = re.compile(rb"([a-z0-9]{1,%d})[a-z0-9]*" % MAX_TERM_BYTES)

# Vocabulary footprint model, identical for both methods: a fixed 48-byte
# entry (16-byte term slot, 4-byte count, 28 bytes of list cursor) plus an
# open-addressing slot array of 4-byte entry references at load <= 0.5.
VOCAB_ENTRY_BYTES = 48
VOCAB_SLOT_BYTES = 4

_MASK64 = (1 << 64) - 1


class IndexCorruptionError(RuntimeError):
    pass


class BuildAborted(ArenaCapacityError):
    def __init__(self, message, stats):
        super().__init__(message)
        self.stats = stats


def _as_bytes(record):
    return record.encode("utf-8") if isinstance(record, str) else bytes(record)


def tokenize(record):
    """Lowercased ASCII alphanumeric runs of ``record``, each cut to 15 bytes."""
    return _TOKEN.findall(_as_bytes(record).lower())


def vocab_bytes(vocab_size):
    if vocab_size == 0:
        return 0
    slots = 1 << (2 * vocab_size - 1).bit_length()
    return vocab_size * VOCAB_ENTRY_BYTES + slots * VOCAB_SLOT_BYTES


@dataclass(frozen=True)
class BuildStats:
    records: int
    vocab_size: int
    postings: int
    build_seconds: float
    traversal_seconds: float
    arena_bytes: int
    vocab_bytes: int
    used_units: int = 0
    arena_blocks: int = 0

    @property
    def total_memory_bytes(self):
        return self.arena_bytes + self.vocab_bytes

    @property
    def indexing_rate(self):
        """Millions of postings per second over build plus traversal."""
        elapsed = self.build_seconds + self.traversal_seconds
        if self.postings == 0 or elapsed <= 0:
            return 0.0
        return self.postings / elapsed / 1e6


@dataclass(frozen=True)
class VocabEntry:
    term: bytes
    ordinal: int
    count: int
    payload: dict = field(repr=False)


_FBB_PAYLOAD = {"head": fbb.F_HEAD, "tail": fbb.F_TAIL, "last_fill": fbb.F_LAST_FILL,
                "run": fbb.F_RUN, "run_left": fbb.F_RUN_LEFT}
_SQA_PAYLOAD = {"dope": sqa.Q_DOPE, "dope_capacity": sqa.Q_DOPE_CAP,
                "last_fill": sqa.Q_LAST_FILL, "discarded_dope_units": sqa.Q_DISCARDED}


@kernel
def _fbb_build(mem, ast, table, log, states, term_ids, docs, start):
    for i in range(start, term_ids.shape[0]):
        status = fbb.fbb_append(mem, ast, table, log, states, term_ids[i], docs[i])
        if status != OK:
            return i, status
    return term_ids.shape[0], OK


@kernel
def _sqa_build(mem, ast, table, log, states, term_ids, docs, start):
    for i in range(start, term_ids.shape[0]):
        status = sqa.sqa_append(mem, ast, table, log, states, term_ids[i], docs[i])
        if status != OK:
            return i, status
    return term_ids.shape[0], OK


@kernel
def _fbb_traverse(mem, null, states):
    acc = np.int64(0)
    for t in range(states.shape[0]):
        a, n = fbb.fbb_checksum(mem, null, states, t, t)
        if n != states[t, fbb.F_COUNT]:
            return acc, t
        acc += a
    return acc, -1


@kernel
def _sqa_traverse(mem, states):
    acc = np.int64(0)
    for t in range(states.shape[0]):
        a, n = sqa.sqa_checksum(mem, states, t, t)
        if n != states[t, sqa.Q_COUNT]:
            return acc, t
        acc += a
    return acc, -1


class Index:
    def __init__(self, method, arena, terms, states, records_indexed, postings_total):
        self.method = method
        self.arena = arena
        self.terms = terms
        self.vocab = {t: i for i, t in enumerate(terms)}
        self.states = states
        self.records_indexed = records_indexed
        self.postings_total = postings_total

    def __len__(self):
        return len(self.terms)

    def __contains__(self, term):
        return _as_bytes(term) in self.vocab

    def _count_slot(self):
        return fbb.F_COUNT if self.method == "fbb" else sqa.Q_COUNT

    def structure(self, term):
        cls = fbb.FbbList if self.method == "fbb" else sqa.SqArray
        return cls(self.arena, self.states, self.vocab[_as_bytes(term)])

    def postings(self, term):
        return self.structure(term).to_array()

    def entry(self, term):
        term = _as_bytes(term)
        k = self.vocab[term]
        row = self.states[k]
        slots = _FBB_PAYLOAD if self.method == "fbb" else _SQA_PAYLOAD
        return VocabEntry(term, k, int(row[self._count_slot()]),
                          {name: int(row[i]) for name, i in slots.items()})

    def counts(self):
        return self.states[:, self._count_slot()].copy()

    def structure_units(self):
        """Arena units attributable to the per-term structures."""
        s = self.states
        if self.method == "fbb":
            return int(s[:, fbb.F_ALLOCATED].sum() + s[:, fbb.F_COMPONENTS].sum())
        return int(s[:, sqa.Q_ALLOCATED].sum() + s[:, sqa.Q_DOPE_CAP].sum() + s[:, sqa.Q_DISCARDED].sum())

    def __repr__(self):
        return f"Index(method={self.method!r}, terms={len(self)}, postings={self.postings_total})"


def _stream(records):
    """Term ordinals and record ordinals of every token, plus the term list."""
    n = len(records)
    if n == 0:
        return np.empty(0, np.int64), np.empty(0, np.int64), []
    blob = b"\n".join(_as_bytes(r) for r in records).lower()
    if blob.count(b"\n") != n - 1:
        raise ValueError("records must not contain line feeds")
    return lexer.scan(blob, MAX_TERM_BYTES)


@functools.cache
def _warm(method):
    a = Arena(1024)
    states = (fbb.fbb_empty_state if method == "fbb" else sqa.sqa_empty_state)(a.null, 1)
    ids = np.zeros(4, dtype=np.int64)
    build, _ = _KERNELS[method]
    a.run(build, states, ids, ids)
    lexer.scan(b"warm up\nnow", MAX_TERM_BYTES)
    if method == "fbb":
        _fbb_traverse(a.mem, a.null, states)
    else:
        _sqa_traverse(a.mem, states)


_KERNELS = {"fbb": (_fbb_build, fbb.fbb_empty_state), "sqa": (_sqa_build, sqa.sqa_empty_state)}


def build_index(records, method="fbb", block_bytes=DEFAULT_BLOCK_BYTES,
                unit_bytes=DEFAULT_UNIT_BYTES, arena=None):
    """Invert ``records``; returns (Index, BuildStats) with traversal time 0."""
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if not isinstance(records, (list, tuple)):
        records = list(records)
    _warm(method)
    arena = arena if arena is not None else Arena(block_bytes, unit_bytes)
    build, empty_state = _KERNELS[method]

    t0 = time.perf_counter()
    term_ids, docs, terms = _stream(records)
    if docs.size and docs[-1] >= arena.null:
        raise ValueError("record ordinals do not fit in one memory unit")
    states = empty_state(arena.null, len(terms))
    done, status = arena.run(build, states, term_ids, docs)
    elapsed = time.perf_counter() - t0

    index = Index(method, arena, terms, states, len(records), int(done))
    stats = _stats(index, elapsed)
    if status == FAILED:
        raise BuildAborted(
            f"arena exhausted after {done} of {term_ids.size} postings", stats)
    return index, stats


def _stats(index, build_seconds, traversal_seconds=0.0):
    a = index.arena.stats()
    return BuildStats(
        records=index.records_indexed,
        vocab_size=len(index),
        postings=index.postings_total,
        build_seconds=build_seconds,
        traversal_seconds=traversal_seconds,
        arena_bytes=a.total_bytes,
        vocab_bytes=vocab_bytes(len(index)),
        used_units=a.used_units,
        arena_blocks=a.blocks + a.oversize_blocks,
    )


def traverse_index(index):
    """Walk every postings list; returns (64-bit checksum, seconds)."""
    _warm(index.method)
    t0 = time.perf_counter()
    if index.method == "fbb":
        acc, bad = _fbb_traverse(index.arena.mem, index.arena.null, index.states)
    else:
        acc, bad = _sqa_traverse(index.arena.mem, index.states)
    elapsed = time.perf_counter() - t0
    if bad >= 0:
        raise IndexCorruptionError(
            f"postings for term {index.terms[bad]!r} do not match their stored count")
    return int(acc) & _MASK64, elapsed


def run(records, method="fbb", **arena_kw):
    """Build then traverse; returns (Index, BuildStats, checksum)."""
    index, stats = build_index(records, method, **arena_kw)
    checksum, seconds = traverse_index(index)
    return index, replace(stats, traversal_seconds=seconds), checksum


REPORT_HEADER = ("Corpus", "Method", "Records(M)", "|V|(M)", "Postings(M)",
                 "Build(s)", "Traversal(s)", "TotalMemory(MB)", "Rate(M/s)")


def sig3(x):
    """Three significant figures without exponents; large values keep every integer digit."""
    if x == 0:
        return "0"
    if abs(x) >= 100:
        return f"{x:.0f}"
    x = float(f"{x:.3g}")
    decimals = 2 - math.floor(math.log10(abs(x)))
    return f"{x:.{max(decimals, 0)}f}"


def report_row(corpus_name, method, stats):
    return (
        corpus_name,
        method.upper(),
        sig3(stats.records / 1e6),
        sig3(stats.vocab_size / 1e6),
        sig3(stats.postings / 1e6),
        sig3(stats.build_seconds),
        sig3(stats.traversal_seconds),
        sig3(stats.total_memory_bytes / 2**20),
        sig3(stats.indexing_rate),
    )
