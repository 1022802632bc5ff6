"""Backend benchmark: compiled kernel vs the pure-python fallback.

Runs the same workloads on every available backend and reports cycle
throughput. Invoke as ``python -m camalign.benchmark``.
"""

import argparse
import time

from .alignment import WavefrontEngine, dna_scheme
from .backend import available_backends
from .cam_array import CamArray
from .energy_model import EnergyLedger
from .microcode import Field, MicroProgram, alloc, execute, vec_add

import numpy as np


def _raw_cycle_workload(backend, rows, cycles, seed):
    """Random compare/write/shift mix straight through the kernel."""
    rng = np.random.default_rng(seed)
    array = CamArray(rows, backend=backend)
    prog = MicroProgram(array.row_bits, array.subword_bits)
    mask_all = (1 << array.row_bits) - 1
    for i in range(cycles):
        r = rng.integers(0, 10)
        key = int(rng.integers(0, 1 << 63)) | (int(rng.integers(0, 1 << 63)) << 64)
        if r < 6:
            prog.cmp(key, key & mask_all)
        elif r < 7:
            prog.shift()
        else:
            prog.cmp(key, key & mask_all)
            prog.wr(key >> 1, key & mask_all)
    t0 = time.perf_counter()
    execute(prog, array)
    dt = time.perf_counter() - t0
    return prog.cycle_count, dt


def _vec_add_workload(backend, rows, width, seed):
    rng = np.random.default_rng(seed)
    fields = [Field("a", width), Field("b", width), Field("s", width),
              Field("c", 1)]
    cmap = alloc(fields, row_bits=256)
    array = CamArray(rows, backend=backend)
    vals_a = rng.integers(0, 1 << width, rows)
    vals_b = rng.integers(0, 1 << width, rows)
    for r in range(rows):
        array.write_field(r, cmap.cols("a"), int(vals_a[r]))
        array.write_field(r, cmap.cols("b"), int(vals_b[r]))
    prog = vec_add(cmap, "a", "b", "s", "c")
    t0 = time.perf_counter()
    reps = 50
    for _ in range(reps):
        execute(prog, array)
    dt = time.perf_counter() - t0
    return prog.cycle_count * reps, dt


def _alignment_workload(backend, length, seed):
    rng = np.random.default_rng(seed)
    scheme = dna_scheme()
    a = [int(x) for x in rng.integers(0, 4, length)]
    b = [int(x) for x in rng.integers(0, 4, length)]
    engine = WavefrontEngine(scheme, [a], query_len=length, backend=backend)
    ledger = EnergyLedger()
    t0 = time.perf_counter()
    out = engine.run(b, ledger)
    dt = time.perf_counter() - t0
    return ledger.total_cycles, dt


def run(rows=1024, cycles=4000, length=48, seed=7):
    results = {}
    for name, backend in sorted(available_backends().items()):
        row = {}
        for label, fn in (
                ("raw-cycles", lambda: _raw_cycle_workload(backend, rows, cycles, seed)),
                ("vec-add", lambda: _vec_add_workload(backend, rows, 12, seed)),
                ("alignment", lambda: _alignment_workload(backend, length, seed))):
            n, dt = fn()
            row[label] = (n, dt, n / dt if dt else float("inf"))
        results[name] = row
    return results


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rows", type=int, default=1024)
    ap.add_argument("--cycles", type=int, default=4000)
    ap.add_argument("--length", type=int, default=48)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args(argv)
    results = run(args.rows, args.cycles, args.length, args.seed)
    for name, row in results.items():
        print(f"backend: {name}")
        for label, (n, dt, rate) in row.items():
            print(f"  {label:<11} {n:>8} cycles  {dt:8.3f} s  "
                  f"{rate:12.0f} cycles/s")
    if len(results) == 2:
        for label in ("raw-cycles", "vec-add", "alignment"):
            speedup = (results["compiled"][label][2] /
                       results["python"][label][2])
            print(f"compiled speedup on {label}: {speedup:.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
