"""Compiled kernels vs the interpreted/numpy fallback.

Each backend runs in its own interpreter because the choice is made at import
time from POSTINGS_BENCH_DISABLE_JIT.  Usage:

    python benchmarks/bench_kernels.py [--postings N] [--repeat R]
"""
import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from postings_bench import BACKEND, costmodel, inverter, sqa
from postings_bench.corpus import SynthConfig, synth_records

postings, repeat = int(sys.argv[1]), int(sys.argv[2])

def best(fn):
    fn()  # compile / warm caches
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)

recs, _ = synth_records(SynthConfig(target_postings=postings, vocab_size=max(100, postings // 100)))
pos = np.arange(postings, dtype=np.int64)
out = {"backend": BACKEND}
out["layout_curves"] = best(lambda: costmodel.layout_curves(postings))
out["locate_many"] = best(lambda: sqa.locate_many(pos))
for m in inverter.METHODS:
    holder = {}
    out[f"build_{m}"] = best(lambda: holder.update(ix=inverter.build_index(recs, m)[0]))
    out[f"traverse_{m}"] = best(lambda: inverter.traverse_index(holder["ix"]))
json.dump(out, sys.stdout)
"""


def run_backend(disable_jit, postings, repeat):
    env = dict(os.environ)
    env.pop("POSTINGS_BENCH_DISABLE_JIT", None)
    if disable_jit:
        env["POSTINGS_BENCH_DISABLE_JIT"] = "1"
    res = subprocess.run([sys.executable, "-c", WORKER, str(postings), str(repeat)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(res.stdout)


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--postings", type=int, default=200_000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args()
    jit = run_backend(False, args.postings, args.repeat)
    ref = run_backend(True, args.postings, args.repeat)
    print(f"postings={args.postings} repeat={args.repeat} (best of, seconds)")
    print(f"{'kernel':<16}{jit['backend']:>12}{ref['backend']:>12}{'speedup':>10}")
    for key in jit:
        if key == "backend":
            continue
        a, b = jit[key], ref[key]
        print(f"{key:<16}{a:>12.4f}{b:>12.4f}{b / a if a else float('inf'):>9.1f}x")


if __name__ == "__main__":
    main()
