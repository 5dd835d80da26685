"""Synthetic corpus generation and line-file reading.

Records are short lines of Zipf-distributed terms, rendered as ``t`` followed
by the base-36 digits of the term id (``t1`` is the most frequent).  Output is
a pure function of the configuration, including the seed.

PRNG: xoshiro256** whose four state words are filled from splitmix64 applied
to the 64-bit seed.  Each record draws one double for its length (geometric,
clamped to ``[1, max_record_len]``), then one double per token, which is
mapped to a rank by binary search in the Zipf CDF.  Doubles are
``(next() >> 11) * 2**-53``.
"""
import os
from dataclasses import dataclass

import numpy as np

from ._jit import JIT_ENABLED, kernel

SEED_ENV = "POSTINGS_BENCH_SEED"
DEFAULT_SEED = 42
_B36 = "0123456789abcdefghijklmnopqrstuvwxyz"


def default_seed():
    value = os.environ.get(SEED_ENV)
    return int(value, 0) if value else DEFAULT_SEED


@dataclass(frozen=True)
class SynthConfig:
    target_postings: int = 10_000_000
    vocab_size: int = 100_000
    zipf_exponent: float = 1.0
    mean_record_len: float = 3.0
    max_record_len: int = 20
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.target_postings < 0:
            raise ValueError("target_postings must be >= 0")
        if self.vocab_size < 1:
            raise ValueError("vocab_size must be >= 1")
        if not 1 <= self.mean_record_len <= self.max_record_len:
            raise ValueError("need 1 <= mean_record_len <= max_record_len")
        if self.zipf_exponent < 0:
            raise ValueError("zipf_exponent must be >= 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")


@dataclass(frozen=True)
class GenStats:
    records: int
    postings: int
    distinct_terms: int


_M64 = 0xFFFFFFFFFFFFFFFF


def splitmix64_seed(seed):
    """Four xoshiro256 state words derived from ``seed``."""
    out = []
    x = seed & _M64
    for _ in range(4):
        x = (x + 0x9E3779B97F4A7C15) & _M64
        z = x
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _M64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _M64
        out.append(z ^ (z >> 31))
    return np.array(out, dtype=np.uint64)


@kernel
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@kernel
def xoshiro_next(s):
    result = _rotl(s[1] * np.uint64(5), 7) * np.uint64(9)
    t = s[1] << np.uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@kernel
def next_double(s):
    return np.float64(xoshiro_next(s) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@kernel
def _generate(s, cdf, target, mean_len, max_len):
    ids = np.empty(target + max_len, dtype=np.int64)
    lengths = np.empty(target + 1, dtype=np.int64)
    p = 1.0 / mean_len
    log_q = np.log(1.0 - p) if p < 1.0 else 0.0
    V = cdf.shape[0]
    n = 0
    r = 0
    while n < target:
        u = next_double(s)
        if p >= 1.0:
            k = 1
        else:
            k = 1 + np.int64(np.floor(np.log(1.0 - u) / log_q))
        if k > max_len:
            k = max_len
        for _ in range(k):
            u = next_double(s)
            lo = 0
            hi = V - 1
            while lo < hi:
                mid = (lo + hi) >> 1
                if cdf[mid] > u:
                    hi = mid
                else:
                    lo = mid + 1
            ids[n] = lo + 1
            n += 1
        lengths[r] = k
        r += 1
    return lengths[:r], ids[:n]


def zipf_cdf(vocab_size, exponent):
    w = np.arange(1, vocab_size + 1, dtype=np.float64) ** -exponent
    cdf = np.cumsum(w)
    cdf /= cdf[-1]
    cdf[-1] = 1.0
    return cdf


def term_name(term_id):
    digits = []
    while term_id:
        term_id, d = divmod(term_id, 36)
        digits.append(_B36[d])
    return "t" + "".join(reversed(digits))


def sample(cfg):
    """(record lengths, term ids) for ``cfg``; no rendering."""
    state = splitmix64_seed(cfg.seed)
    cdf = zipf_cdf(cfg.vocab_size, cfg.zipf_exponent)
    if JIT_ENABLED:
        return _generate(state, cdf, cfg.target_postings, float(cfg.mean_record_len), cfg.max_record_len)
    with np.errstate(over="ignore"):
        return _generate(state, cdf, cfg.target_postings, float(cfg.mean_record_len), cfg.max_record_len)


def render(lengths, ids, vocab_size):
    """The corpus bytes: space-separated terms, one LF-terminated record per line."""
    if ids.size == 0:
        return b""
    used = np.unique(ids)
    names = np.empty(vocab_size + 1, dtype=object)
    for t in used.tolist():
        names[t] = term_name(t).encode("ascii")
    parts = np.empty(2 * ids.size, dtype=object)
    parts[0::2] = names[ids]
    seps = np.full(ids.size, b" ", dtype=object)
    seps[np.cumsum(lengths) - 1] = b"\n"
    parts[1::2] = seps
    return b"".join(parts.tolist())


def synth_generate(cfg, sink):
    """Write the corpus for ``cfg`` to the binary stream ``sink``."""
    lengths, ids = sample(cfg)
    sink.write(render(lengths, ids, cfg.vocab_size))
    return GenStats(records=int(lengths.size), postings=int(ids.size),
                    distinct_terms=int(np.unique(ids).size))


def synth_records(cfg):
    """The generated corpus as a list of records, plus its GenStats."""
    lengths, ids = sample(cfg)
    blob = render(lengths, ids, cfg.vocab_size)
    records = blob.split(b"\n")[:-1] if blob else []
    return records, GenStats(int(lengths.size), int(ids.size), int(np.unique(ids).size))


def read_lines(path):
    """Stream the records of a line file, terminators stripped.

    The file is opened immediately so a bad path fails here rather than on
    first iteration.
    """
    fh = open(path, "rb")
    return _lines(fh)


def _lines(fh):
    with fh:
        for line in fh:
            yield line[:-1] if line.endswith(b"\n") else line
