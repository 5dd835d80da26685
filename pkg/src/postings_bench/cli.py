"""Command-line front end: ``postings-bench model|generate|index|bench``."""
import argparse
import csv
import statistics
import sys
from dataclasses import replace
from pathlib import Path

from . import costmodel, inverter
from ._jit import BACKEND
from .arena import DEFAULT_BLOCK_BYTES, DEFAULT_UNIT_BYTES, ArenaCapacityError, ArenaConfigError
from .corpus import SynthConfig, default_seed, read_lines, synth_generate, synth_records

CSV_FIELDS = ("corpus", "method", "run", "records", "vocab", "postings", "build_seconds",
              "traversal_seconds", "total_memory_bytes", "arena_bytes", "vocab_bytes",
              "indexing_rate", "checksum")


class CliError(Exception):
    pass


def _positive(value):
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return n


def _nonneg(value):
    n = int(value)
    if n < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {value}")
    return n


def _methods(value):
    names = [m.strip().lower() for m in value.split(",") if m.strip()]
    bad = [m for m in names if m not in inverter.METHODS]
    if not names or bad:
        raise argparse.ArgumentTypeError(f"methods must be drawn from {','.join(inverter.METHODS)}")
    return list(dict.fromkeys(names))


def _add_synth_flags(p, postings_default=10_000_000):
    g = p.add_argument_group("synthetic corpus")
    g.add_argument("--postings", type=_nonneg, default=postings_default)
    g.add_argument("--vocab", type=_positive, default=100_000)
    g.add_argument("--zipf", type=float, default=1.0)
    g.add_argument("--mean-len", type=float, default=3.0)
    g.add_argument("--max-len", type=_positive, default=20)
    g.add_argument("--seed", type=lambda v: int(v, 0), default=None,
                   help="PRNG seed (default: $POSTINGS_BENCH_SEED or 42)")


def _add_index_flags(p):
    p.add_argument("--corpus", type=Path, help="line file to index instead of a synthetic corpus")
    p.add_argument("--name", help="corpus label in reports")
    p.add_argument("--block-bytes", type=_positive, default=DEFAULT_BLOCK_BYTES)
    p.add_argument("--unit-bytes", type=int, choices=(4, 8), default=DEFAULT_UNIT_BYTES)
    p.add_argument("--format", choices=("table", "csv"), default="table")
    _add_synth_flags(p)


def _synth_config(args):
    seed = args.seed if args.seed is not None else default_seed()
    try:
        return SynthConfig(args.postings, args.vocab, args.zipf, args.mean_len, args.max_len, seed)
    except ValueError as e:
        raise CliError(str(e)) from e


def _scale_label(n):
    for div, suffix in ((10**9, "B"), (10**6, "M"), (10**3, "K")):
        if n >= div and n % div == 0:
            return f"{n // div}{suffix}"
    return str(n)


def _load_records(args):
    if args.corpus is not None:
        try:
            records = list(read_lines(args.corpus))
        except OSError as e:
            raise CliError(f"cannot read corpus {args.corpus}: {e.strerror or e}") from e
        return args.name or args.corpus.stem, records, None
    cfg = _synth_config(args)
    records, gen = synth_records(cfg)
    return args.name or f"Synth{_scale_label(cfg.target_postings)}", records, gen


def _open_text_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    try:
        return open(path, "w", newline="\n"), True
    except OSError as e:
        raise CliError(f"cannot write {path}: {e.strerror or e}") from e


def cmd_model(args):
    out, close = _open_text_out(args.out)
    try:
        curves = costmodel.emit_curves(args.max_length, args.stride, out)
    finally:
        if close:
            out.close()
    s = costmodel.summarize(args.max_length, curves)
    info = sys.stderr if out is sys.stdout else sys.stdout
    print(f"summary at l={s.length}", file=info)
    print("method\tcomponents\tallocated\tmax_component\tmean_cost\tmean_cost_no_vocab", file=info)
    rows = (("FBB", s.fbb, s.mean_fbb, s.mean_fbb_no_vocab),
            ("SQA_A", s.sqa, s.mean_sqa_a, s.mean_sqa_a_no_vocab),
            ("SQA_B", s.sqa, s.mean_sqa_b, s.mean_sqa_b_no_vocab))
    for name, lay, mean, bare in rows:
        print(f"{name}\t{lay.components}\t{lay.allocated_units}\t{lay.max_component}"
              f"\t{mean:.6f}\t{bare:.6f}", file=info)
    print(f"sqa dope\tcapacity={s.sqa.dope_capacity}\tused={s.sqa.dope_used}"
          f"\tdiscarded={s.sqa.dope_discarded}", file=info)
    return 0


def cmd_generate(args):
    cfg = _synth_config(args)
    if args.out in (None, "-"):
        sink, close = sys.stdout.buffer, False
    else:
        try:
            sink, close = open(args.out, "wb"), True
        except OSError as e:
            raise CliError(f"cannot write {args.out}: {e.strerror or e}") from e
    try:
        gen = synth_generate(cfg, sink)
    finally:
        if close:
            sink.close()
    info = sys.stderr if not close else sys.stdout
    print(f"records={gen.records}\tpostings={gen.postings}\tdistinct_terms={gen.distinct_terms}"
          f"\tseed={cfg.seed}", file=info)
    return 0


def _build(records, method, args):
    try:
        return inverter.run(records, method, block_bytes=args.block_bytes, unit_bytes=args.unit_bytes)
    except ArenaConfigError as e:
        raise CliError(str(e)) from e
    except ArenaCapacityError as e:
        raise CliError(f"{method}: {e}") from e
    except inverter.IndexCorruptionError as e:
        raise CliError(f"{method}: {e}") from e


def _csv_record(name, method, run, stats, checksum):
    return {
        "corpus": name, "method": method, "run": run, "records": stats.records,
        "vocab": stats.vocab_size, "postings": stats.postings,
        "build_seconds": f"{stats.build_seconds:.6f}",
        "traversal_seconds": f"{stats.traversal_seconds:.6f}",
        "total_memory_bytes": stats.total_memory_bytes, "arena_bytes": stats.arena_bytes,
        "vocab_bytes": stats.vocab_bytes, "indexing_rate": f"{stats.indexing_rate:.6f}",
        "checksum": checksum if checksum is not None else "",
    }


def _check_gen(gen, stats):
    if gen is not None and gen.postings != stats.postings:
        raise CliError(f"indexed {stats.postings} postings but the generator emitted {gen.postings}")


def cmd_index(args):
    name, records, gen = _load_records(args)
    index, stats, checksum = _build(records, args.method, args)
    _check_gen(gen, stats)
    if args.format == "csv":
        w = csv.DictWriter(sys.stdout, CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerow(_csv_record(name, args.method, 1, stats, checksum))
    else:
        print("\t".join(inverter.REPORT_HEADER))
        print("\t".join(inverter.report_row(name, args.method, stats)))
        print(f"checksum\t{checksum}")
        print(f"memory\tarena={stats.arena_bytes}\tvocab={stats.vocab_bytes}"
              f"\tused_units={stats.used_units}\tblocks={stats.arena_blocks}")
    return 0


def _mean_stats(runs):
    first = runs[0]
    return replace(
        first,
        build_seconds=statistics.fmean(r.build_seconds for r in runs),
        traversal_seconds=statistics.fmean(r.traversal_seconds for r in runs),
    )


def cmd_bench(args):
    name, records, gen = _load_records(args)
    results = {}
    checksums = {}
    for method in args.method:
        runs = []
        for _ in range(args.runs):
            _, stats, checksum = _build(records, method, args)
            _check_gen(gen, stats)
            if checksums.setdefault(method, checksum) != checksum:
                raise CliError(f"{method}: checksum changed between runs")
            runs.append(stats)
        results[method] = runs

    if args.format == "csv":
        w = csv.DictWriter(sys.stdout, CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        for method, runs in results.items():
            for i, stats in enumerate(runs, 1):
                w.writerow(_csv_record(name, method, i, stats, checksums[method]))
            w.writerow(_csv_record(name, method, "mean", _mean_stats(runs), checksums[method]))
    else:
        print("\t".join(("Run",) + inverter.REPORT_HEADER))
        for method, runs in results.items():
            for i, stats in enumerate(runs, 1):
                print("\t".join((str(i),) + inverter.report_row(name, method, stats)))
            print("\t".join(("mean",) + inverter.report_row(name, method, _mean_stats(runs))))

    info = sys.stderr if args.format == "csv" else sys.stdout
    print(f"backend\t{BACKEND}", file=info)
    for method, runs in results.items():
        s = runs[0]
        print(f"{method}\tchecksum={checksums[method]}\tarena_bytes={s.arena_bytes}"
              f"\tvocab_bytes={s.vocab_bytes}\tused_units={s.used_units}", file=info)
    if len(set(checksums.values())) > 1:
        print("error: traversal checksums differ between methods", file=sys.stderr)
        return 1
    if {"fbb", "sqa"} <= results.keys():
        fbb_rate = _mean_stats(results["fbb"]).indexing_rate
        sqa_rate = _mean_stats(results["sqa"]).indexing_rate
        margin = (fbb_rate / sqa_rate - 1) * 100 if sqa_rate else float("nan")
        fbb_mem = results["fbb"][0].total_memory_bytes
        sqa_mem = results["sqa"][0].total_memory_bytes
        print(f"rate\tfbb={fbb_rate:.3f}\tsqa={sqa_rate:.3f}\tfbb_faster_by={margin:+.1f}%", file=info)
        print(f"memory\tsqa_excess={(sqa_mem / fbb_mem - 1) * 100:+.2f}%", file=info)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="postings-bench",
                                description="FBB chunked lists vs SQ extensible arrays for postings.")
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("model", help="analytical cost curves as CSV")
    m.add_argument("--max-length", type=_positive, default=1_000_000)
    m.add_argument("--stride", type=_positive, default=1000)
    m.add_argument("--out", default="-")
    m.set_defaults(func=cmd_model)

    g = sub.add_parser("generate", help="write a synthetic corpus")
    _add_synth_flags(g)
    g.add_argument("--out", default="-")
    g.set_defaults(func=cmd_generate)

    i = sub.add_parser("index", help="build and traverse one index")
    _add_index_flags(i)
    i.add_argument("--method", choices=inverter.METHODS, default="fbb")
    i.set_defaults(func=cmd_index)

    b = sub.add_parser("bench", help="repeated builds of every method")
    _add_index_flags(b)
    b.add_argument("--method", type=_methods, default=list(inverter.METHODS))
    b.add_argument("--runs", type=_positive, default=5)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        return 1


if __name__ == "__main__":
    sys.exit(main())
