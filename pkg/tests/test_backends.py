"""The compiled kernels and the interpreted fallback give identical results."""
import json
import os
import subprocess
import sys

import pytest

from postings_bench import JIT_ENABLED

PROBE = r"""
import io, json, sys
import numpy as np
from postings_bench import BACKEND, costmodel, inverter, sqa
from postings_bench.corpus import SynthConfig, synth_generate, synth_records

cfg = SynthConfig(target_postings=20000, vocab_size=2000, seed=5)
recs, gen = synth_records(cfg)
out = {"backend": BACKEND}
for m in inverter.METHODS:
    idx, stats, chk = inverter.run(recs + [b"Mixed CASE, punct!! x" * 2], m, block_bytes=4096)
    out[m] = [chk, stats.postings, stats.vocab_size, stats.used_units, stats.arena_bytes]
c = costmodel.layout_curves(5000)
out["curves"] = [int(c.fbb_alloc.sum()), int(c.sqa_alloc.sum()), int(c.dope_capacity.sum()),
                 round(costmodel.mean_cost(5000, "sqa_a"), 9)]
seg, off = sqa.locate_many(np.arange(70000))
out["locate"] = [int(seg.sum()), int(off.sum())]
buf = io.BytesIO()
synth_generate(SynthConfig(target_postings=3000, vocab_size=50, seed=9), buf)
out["corpus"] = buf.getvalue().hex()
json.dump(out, sys.stdout)
"""


def _probe(disable_jit):
    env = dict(os.environ)
    env.pop("POSTINGS_BENCH_DISABLE_JIT", None)
    if disable_jit:
        env["POSTINGS_BENCH_DISABLE_JIT"] = "1"
    res = subprocess.run([sys.executable, "-c", PROBE], capture_output=True, text=True, env=env,
                         check=True, timeout=600)
    return json.loads(res.stdout)


@pytest.mark.skipif(not JIT_ENABLED, reason="numba not available")
def test_fallback_matches_compiled():
    jit = _probe(False)
    py = _probe(True)
    assert jit.pop("backend") == "numba"
    assert py.pop("backend") == "numpy"
    assert jit == py
