"""Bulk tokenisation of a record blob into term ordinals.

The compiled path scans the lowercased bytes once, hashing each term
(FNV-1a, open addressing, table kept at most half full) into a vocabulary
that assigns ordinals by first occurrence.  The interpreted fallback gets the
same result from ``bytes.translate`` and a dict.
"""
import numpy as np

from ._jit import JIT_ENABLED, kernel

_ALNUM = b"abcdefghijklmnopqrstuvwxyz0123456789"
_IS_ALNUM = np.zeros(256, dtype=np.bool_)
_IS_ALNUM[list(_ALNUM)] = True

# non-alphanumerics become spaces; LF becomes a standalone 0x01 marker token
_SPLIT_TABLE = bytes(c if c in _ALNUM else (1 if c == 10 else 32) for c in range(256))

_FNV_OFFSET = np.uint64(0xCBF29CE484222325)
_FNV_PRIME = np.uint64(0x100000001B3)


@kernel
def _count_tokens(buf, is_alnum):
    n = 0
    inside = False
    for i in range(buf.shape[0]):
        a = is_alnum[buf[i]]
        if a and not inside:
            n += 1
        inside = a
    return n


@kernel
def _same(buf, a, b, n):
    for k in range(n):
        if buf[a + k] != buf[b + k]:
            return False
    return True


@kernel
def _scan_run(buf, is_alnum, max_len, ids, docs, slots, starts, lens, hashes, pos):
    """Tokenise from ``pos`` until the input ends or a table needs to grow.

    ``pos`` holds (byte offset, tokens emitted, record ordinal, terms); the
    return value is 0 when finished, 1 when the term arrays are full and
    2 when the slot table passes half full.
    """
    i, k, doc, n_terms = pos[0], pos[1], pos[2], pos[3]
    n = buf.shape[0]
    mask = slots.shape[0] - 1
    status = 0
    while i < n:
        if n_terms == starts.shape[0]:
            status = 1
            break
        if 2 * n_terms > slots.shape[0]:
            status = 2
            break
        c = buf[i]
        if not is_alnum[c]:
            if c == 10:
                doc += 1
            i += 1
            continue
        start = i
        h = _FNV_OFFSET
        while i < n and is_alnum[buf[i]]:
            if i - start < max_len:
                h = (h ^ np.uint64(buf[i])) * _FNV_PRIME
            i += 1
        length = min(i - start, max_len)
        s = np.int64(h & np.uint64(mask))
        while True:
            t = slots[s]
            if t < 0:
                break
            if hashes[t] == h and lens[t] == length and _same(buf, starts[t], start, length):
                break
            s = (s + 1) & mask
        if t < 0:
            t = n_terms
            starts[t] = start
            lens[t] = length
            hashes[t] = h
            slots[s] = t
            n_terms += 1
        ids[k] = t
        docs[k] = doc
        k += 1
    pos[0], pos[1], pos[2], pos[3] = i, k, doc, n_terms
    return status


@kernel
def _rehash(hashes, n_terms, size):
    slots = np.full(size, -1, dtype=np.int64)
    mask = size - 1
    for u in range(n_terms):
        s = np.int64(hashes[u] & np.uint64(mask))
        while slots[s] >= 0:
            s = (s + 1) & mask
        slots[s] = u
    return slots


@kernel
def _scan(buf, is_alnum, max_len, n_tokens):
    ids = np.empty(n_tokens, dtype=np.int64)
    docs = np.empty(n_tokens, dtype=np.int64)
    slots = np.full(1 << 16, -1, dtype=np.int64)
    starts = np.empty(1 << 14, dtype=np.int64)
    lens = np.empty(1 << 14, dtype=np.int64)
    hashes = np.empty(1 << 14, dtype=np.uint64)
    pos = np.zeros(4, dtype=np.int64)
    while True:
        status = _scan_run(buf, is_alnum, max_len, ids, docs, slots, starts, lens, hashes, pos)
        if status == 0:
            break
        n_terms = pos[3]
        if status == 1:
            starts = np.concatenate((starts, np.empty(n_terms, dtype=np.int64)))
            lens = np.concatenate((lens, np.empty(n_terms, dtype=np.int64)))
            hashes = np.concatenate((hashes, np.empty(n_terms, dtype=np.uint64)))
        else:
            slots = _rehash(hashes, n_terms, 2 * slots.shape[0])
    n_terms = pos[3]
    return ids, docs, starts[:n_terms], lens[:n_terms]


def _scan_jit(blob, max_len):
    buf = np.frombuffer(blob, dtype=np.uint8)
    n = _count_tokens(buf, _IS_ALNUM)
    ids, docs, starts, lens = _scan(buf, _IS_ALNUM, max_len, n)
    terms = [blob[s: s + l] for s, l in zip(starts.tolist(), lens.tolist())]
    return ids, docs, terms


def _scan_python(blob, max_len):
    toks = blob.translate(_SPLIT_TABLE).replace(b"\x01", b" \x01 ").split()
    vocab = {b"\x01": -1}
    sd = vocab.setdefault
    ids = []
    for t in toks:
        if len(t) > max_len:
            t = t[:max_len]
        ids.append(sd(t, len(vocab) - 1))
    ids = np.array(ids, dtype=np.int64)
    del vocab[b"\x01"]
    is_break = ids < 0
    docs = np.cumsum(is_break)[~is_break]
    return ids[~is_break], docs, list(vocab)


def scan(blob, max_len):
    """(term ordinals, record ordinals, terms) for a lowercased LF-joined blob."""
    if JIT_ENABLED:
        return _scan_jit(blob, max_len)
    return _scan_python(blob, max_len)
