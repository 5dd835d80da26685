"""Append-only postings structures: Fibonacci-chunked lists and SQ arrays."""
from ._jit import BACKEND, JIT_ENABLED
from .arena import Arena, ArenaCapacityError, ArenaConfigError, ArenaStats
from .costmodel import CostVariant, LayoutStats, fbb_layout, mean_cost, method_cost, sqa_layout
from .corpus import GenStats, SynthConfig, read_lines, synth_generate
from .fbb import ComponentStats, FbbList, fbb_schedule
from .inverter import BuildStats, Index, IndexCorruptionError, build_index, tokenize, traverse_index
from .sqa import SqArray, SqArrayStats, sqa_locate

__version__ = "0.1.0"
