import pytest
from hypothesis import given, strategies as st

from camalign import CamArray, EnergyLedger, ScheduleError
from camalign.errors import AllocationError
from camalign.microcode import (BUILTIN_LOGIC_OPS, Field, MicroProgram,
                                effective_table,
                                Strategy, TruthTable, alloc, builtin_table,
                                count_active_subwords, execute, match_score,
                                match_score_table, schedule, vec_add,
                                vec_cond_copy, vec_lt, vec_max, vec_sub,
                                vec_sub_const, broadcast_value)
from camalign.oracle import verify_program
from camalign.alignment import PROTEIN, dna_scheme, matrix_scheme
from camalign.io_formats import load_blosum62, matrix_for_alphabet

CYCLE_TARGETS = {  # op -> (baseline cycles, batched cycles)
    "full-add": (16, 12),
    "half-add": (8, 7),
    "xor": (8, 6),
    "and": (8, 5),
    "or": (8, 5),
}

GOLDEN_XOR_BATCHED = """\
# a: 0
# b: 1
# out: 2
CMP key=0000000000000000 mask=0000000000000003
CMP key=0000000000000003 mask=0000000000000003
WR key=0000000000000000 mask=0000000000000004
CMP key=0000000000000002 mask=0000000000000003
CMP key=0000000000000001 mask=0000000000000003
WR key=0000000000000004 mask=0000000000000004"""


@pytest.mark.parametrize("op", BUILTIN_LOGIC_OPS)
def test_builtin_cycle_counts(op):
    fields, tt, base_s, batch_s = builtin_table(op)
    cmap = alloc(fields, row_bits=256)
    base = schedule(tt, base_s, cmap)
    batched = schedule(tt, batch_s, cmap)
    assert (base.cycle_count, batched.cycle_count) == CYCLE_TARGETS[op]
    assert verify_program(tt, base, cmap)
    assert verify_program(tt, batched, cmap)


def test_golden_xor_dump():
    fields, tt, _, batch_s = builtin_table("xor")
    cmap = alloc(fields, row_bits=64)
    assert schedule(tt, batch_s, cmap).dump(cmap) == GOLDEN_XOR_BATCHED


def test_and_cube_cover_structure():
    fields, tt, _, _ = builtin_table("and")
    cmap = alloc(fields, row_bits=64)
    prog = schedule(tt, Strategy.BATCH_CUBES, cmap)
    kinds = [k for k, _, _ in prog.ops]
    assert kinds == [0, 0, 1, 0, 1]  # two cube compares, write 0; 11, write 1


def random_table(rng, max_in_bits=8, force_disjoint=True):
    n_in = rng.randint(1, max_in_bits)
    n_out = rng.randint(1, 4)
    fields = [Field("x", n_in), Field("y", n_out)]
    inputs = tuple(("x", i) for i in range(n_in))
    outputs = tuple(("y", i) for i in range(n_out))
    combos = [format(v, f"0{n_in}b")[::-1] for v in range(1 << n_in)]
    rng.shuffle(combos)
    n_entries = rng.randint(1, min(len(combos), 24))
    entries = tuple((c, format(rng.getrandbits(n_out), f"0{n_out}b")[::-1])
                    for c in combos[:n_entries])
    default = (format(rng.getrandbits(n_out), f"0{n_out}b")[::-1]
               if rng.random() < 0.3 else None)
    return fields, TruthTable(inputs, outputs, entries, default)


ALL_STRATEGIES = (Strategy.BASELINE, Strategy.BATCH_GROUPED,
                  Strategy.BATCH_CUBES, Strategy.BATCH_DEFAULT_WRITE,
                  Strategy.AUTO)


def test_random_tables_all_strategies(rng):
    for _ in range(25):
        fields, tt = random_table(rng)
        cmap = alloc(fields, row_bits=64)
        for strategy in ALL_STRATEGIES:
            prog = schedule(tt, strategy, cmap)
            v = verify_program(effective_table(tt, strategy), prog, cmap)
            assert v, (strategy, v.counterexample, tt)


def test_cycle_laws(rng):
    for _ in range(40):
        fields, tt = random_table(rng, max_in_bits=6)
        if tt.default is not None:
            continue
        cmap = alloc(fields, row_bits=64)
        E = len(tt.entries)
        groups = tt.groups()
        D = len(groups)
        base = schedule(tt, Strategy.BASELINE, cmap).cycle_count
        grouped = schedule(tt, Strategy.BATCH_GROUPED, cmap).cycle_count
        cubes = schedule(tt, Strategy.BATCH_CUBES, cmap).cycle_count
        dw = schedule(tt, Strategy.BATCH_DEFAULT_WRITE, cmap).cycle_count
        auto = schedule(tt, Strategy.AUTO, cmap).cycle_count
        assert base == 2 * E
        assert grouped == E + D
        assert cubes <= grouped
        largest = max(len(cubes_) for _, cubes_ in groups)
        assert dw == 2 + (E - largest) + (D - 1)
        assert auto <= min(grouped, cubes)
        if effective_table(tt, Strategy.BATCH_DEFAULT_WRITE) is tt:
            assert auto <= dw


def test_batched_equals_baseline_on_random_states(rng):
    for _ in range(8):
        fields, tt = random_table(rng, max_in_bits=5)
        cmap = alloc(fields, row_bits=64)
        # default-write on a partial default-free table deliberately changes
        # the function (non-entry rows gain the default), so compare only
        # the semantics-preserving strategies against each other
        strategies = [s for s in ALL_STRATEGIES
                      if effective_table(tt, s) is tt]
        progs = [schedule(tt, s, cmap) for s in strategies]
        for _ in range(10):
            rows = [rng.getrandbits(64) for _ in range(12)]
            finals = []
            for prog in progs:
                a = CamArray(len(rows), row_bits=64)
                a.load_rows(0, rows)
                execute(prog, a)
                finals.append([a.read_row(r) for r in range(len(rows))])
            assert all(f == finals[0] for f in finals)


def test_inconsistent_table_rejected():
    with pytest.raises(ScheduleError):
        TruthTable((("x", 0),), (("y", 0),), (("0", "0"), ("-", "1")))


def test_unallocated_field_rejected():
    cmap = alloc([Field("x", 1)], row_bits=64)
    tt = TruthTable((("x", 0),), (("y", 0),), (("0", "1"),))
    with pytest.raises(ScheduleError):
        schedule(tt, Strategy.BASELINE, cmap)


def test_unsolvable_hazard_cycle_rejected():
    # two entries that each rewrite a row into the other's pattern
    fields = [Field("x", 2)]
    tt = TruthTable((("x", 0), ("x", 1)), (("x", 0),),
                    (("00", "1"), ("10", "0")))
    cmap = alloc(fields, row_bits=64)
    with pytest.raises(ScheduleError):
        schedule(tt, Strategy.BATCH_GROUPED, cmap)


def test_default_write_requires_disjoint_columns():
    fields, tt, _, _ = builtin_table("full-add")
    cmap = alloc(fields, row_bits=64)
    with pytest.raises(ScheduleError):
        schedule(tt, Strategy.BATCH_DEFAULT_WRITE, cmap)
    # auto still succeeds by falling back to a legal batch schedule
    assert schedule(tt, Strategy.AUTO, cmap).cycle_count == 12


def test_write_without_compare_rejected():
    prog = MicroProgram(64, 32)
    prog.wr(1, 1)
    with pytest.raises(ScheduleError):
        prog.validate()


def test_verify_program_finds_dropped_write():
    fields, tt, _, batch_s = builtin_table("xor")
    cmap = alloc(fields, row_bits=64)
    good = schedule(tt, batch_s, cmap)
    bad = MicroProgram(64, 32)
    for kind, key, mask in good.ops[:-1]:   # drop the final write
        (bad.cmp(key, mask) if kind == 0 else bad.wr(key, mask))
    v = verify_program(tt, bad, cmap)
    assert not v
    assert v.counterexample is not None


# ---------------------------------------------------------------------------
# Allocation


def test_alloc_colocation_single_subword():
    fields = [Field(n, 1) for n in ("a", "b", "s", "c")]
    cmap = alloc(fields, colocate=[["a", "b", "s", "c"]], eom=True)
    subwords = {cmap.col(n, 0) // 32 for n in ("a", "b", "s", "c")}
    assert len(subwords) == 1
    mask = cmap.mask("a", "b", "c")
    assert count_active_subwords(mask, 32) == 1


def test_alloc_left_to_right_spreads_wide_operands():
    fields = [Field("a", 32), Field("b", 32), Field("c", 1)]
    cmap = alloc(fields, eom=False)
    for i in range(32):
        mask = (1 << cmap.col("a", i)) | (1 << cmap.col("b", i)) \
            | (1 << cmap.col("c", 0))
        assert count_active_subwords(mask, 32) == 3


def test_alloc_eom_bit_slices_share_subwords():
    fields = [Field("a", 12), Field("b", 12), Field("s", 12), Field("c", 1)]
    cmap = alloc(fields, colocate=[["a", "b", "s"]], eom=True)
    for i in range(12):
        slice_subwords = {cmap.col(n, i) // 32 for n in ("a", "b", "s")}
        assert len(slice_subwords) == 1


def test_alloc_capacity_error():
    with pytest.raises(AllocationError):
        alloc([Field(f"f{i}", 1) for i in range(300)], row_bits=256)


def test_alloc_rejects_overlapping_names():
    with pytest.raises(AllocationError):
        alloc([Field("a", 1), Field("a", 2)], row_bits=64)


# ---------------------------------------------------------------------------
# Vector operations


def setup_vec(rng, width, rows, names=("a", "b", "s"), extra=("carry", "borrow", "lt")):
    fields = [Field(n, width) for n in names]
    fields += [Field(n, 1) for n in extra]
    cmap = alloc(fields, row_bits=256)
    array = CamArray(rows, row_bits=256)
    return cmap, array


def test_vec_add_example():
    cmap, array = setup_vec(None, 4, 2)
    for r, (x, y) in enumerate([(1, 3), (2, 4)]):
        array.write_field(r, cmap.cols("a"), x)
        array.write_field(r, cmap.cols("b"), y)
    prog = vec_add(cmap, "a", "b", "s", "carry")
    assert prog.cycle_count == 4 * 12
    execute(prog, array)
    assert [array.read_field(r, cmap.cols("s")) for r in range(2)] == [4, 6]


def test_vec_add_random_rows_mod_2_pow_w(rng):
    w, rows = 8, 1000
    cmap, array = setup_vec(rng, w, rows)
    vals = [(rng.getrandbits(w), rng.getrandbits(w)) for _ in range(rows)]
    for r, (x, y) in enumerate(vals):
        array.write_field(r, cmap.cols("a"), x)
        array.write_field(r, cmap.cols("b"), y)
    execute(vec_add(cmap, "a", "b", "s", "carry"), array)
    for r, (x, y) in enumerate(vals):
        assert array.read_field(r, cmap.cols("s")) == (x + y) % 256
        assert array.read_field(r, cmap.cols("carry")) == (x + y) // 256


def test_vec_sub_and_sub_const(rng):
    w, rows = 9, 200
    cmap, array = setup_vec(rng, w, rows)
    mod = 1 << w
    vals = [(rng.getrandbits(w), rng.getrandbits(w)) for _ in range(rows)]
    for r, (x, y) in enumerate(vals):
        array.write_field(r, cmap.cols("a"), x)
        array.write_field(r, cmap.cols("b"), y)
    execute(vec_sub(cmap, "a", "b", "s", "borrow"), array)
    for r, (x, y) in enumerate(vals):
        assert array.read_field(r, cmap.cols("s")) == (x - y) % mod
    prog = MicroProgram(256, 32)
    broadcast_value(cmap, "borrow", 0, prog=prog)
    vec_sub_const(cmap, "a", 37, "a", "borrow", prog=prog)  # in place
    execute(prog, array)
    for r, (x, _) in enumerate(vals):
        assert array.read_field(r, cmap.cols("a")) == (x - 37) % mod


def signed(v, w):
    return v - (1 << w) if v >> (w - 1) else v


@pytest.mark.parametrize("pair,want", [((5, 3), 5), ((4, 4), 4), ((-2, 0), 0)])
def test_vec_max_examples(pair, want):
    w = 8
    cmap, array = setup_vec(None, w, 1)
    array.write_field(0, cmap.cols("a"), pair[0] % (1 << w))
    array.write_field(0, cmap.cols("b"), pair[1] % (1 << w))
    execute(vec_max(cmap, "a", "b", "s", "borrow", "lt"), array)
    assert signed(array.read_field(0, cmap.cols("s")), w) == want


def test_vec_max_random_signed(rng):
    w, rows = 12, 1000
    cmap, array = setup_vec(rng, w, rows)
    vals = [(rng.getrandbits(w), rng.getrandbits(w)) for _ in range(rows)]
    for r, (x, y) in enumerate(vals):
        array.write_field(r, cmap.cols("a"), x)
        array.write_field(r, cmap.cols("b"), y)
    execute(vec_max(cmap, "a", "b", "a", "borrow", "lt"), array)  # dest == a
    for r, (x, y) in enumerate(vals):
        want = max(signed(x, w), signed(y, w))
        assert signed(array.read_field(r, cmap.cols("a")), w) == want


def test_vec_lt_signed(rng):
    w, rows = 10, 400
    cmap, array = setup_vec(rng, w, rows)
    vals = [(rng.getrandbits(w), rng.getrandbits(w)) for _ in range(rows)]
    for r, (x, y) in enumerate(vals):
        array.write_field(r, cmap.cols("a"), x)
        array.write_field(r, cmap.cols("b"), y)
    execute(vec_lt(cmap, "a", "b", "borrow", "lt"), array)
    for r, (x, y) in enumerate(vals):
        assert array.read_field(r, cmap.cols("lt")) == \
            int(signed(x, w) < signed(y, w))


def test_conditional_ops_respect_flags(rng):
    cmap = alloc([Field("a", 6), Field("b", 6), Field("flag", 1)],
                 row_bits=64)
    array = CamArray(6, row_bits=64)
    for r in range(6):
        array.write_field(r, cmap.cols("a"), r + 1)
        array.write_field(r, cmap.cols("flag"), r % 2)
    flag = ((cmap.col("flag", 0), 1),)
    execute(vec_cond_copy(cmap, "a", "b", flags=flag), array)
    for r in range(6):
        want = r + 1 if r % 2 else 0
        assert array.read_field(r, cmap.cols("b")) == want


# ---------------------------------------------------------------------------
# Match score programs


def test_dna_match_scores_and_cycles(rng):
    scheme = dna_scheme()
    cmap = alloc([Field("qa", 2), Field("qb", 2), Field("out", 4)],
                 row_bits=64)
    tt = match_score_table(scheme, "qa", "qb", "out", 4)
    batched = schedule(tt, Strategy.BATCH_DEFAULT_WRITE, cmap)
    base = schedule(tt, Strategy.BASELINE, cmap)
    assert (base.cycle_count, batched.cycle_count) == (10, 7)
    array = CamArray(16, row_bits=64)
    pairs = [(x, y) for x in range(4) for y in range(4)]
    for r, (x, y) in enumerate(pairs):
        array.write_field(r, cmap.cols("qa"), x)
        array.write_field(r, cmap.cols("qb"), y)
    execute(batched, array)
    for r, (x, y) in enumerate(pairs):
        got = signed(array.read_field(r, cmap.cols("out")), 4)
        assert got == (2 if x == y else -1)


def test_blosum62_match_program():
    symbols, table = load_blosum62()
    scheme = matrix_scheme(matrix_for_alphabet(symbols, table, PROTEIN))
    cmap = alloc([Field("qa", 5), Field("qb", 5), Field("out", 6)],
                 row_bits=64)
    tt = match_score_table(scheme, "qa", "qb", "out", 6)
    distinct = len({v for row in scheme.matrix for v in row})
    batched = schedule(tt, Strategy.BATCH_GROUPED, cmap)
    assert batched.cycle_count == 23 * 23 + distinct
    assert schedule(tt, Strategy.BASELINE, cmap).cycle_count == 2 * 23 * 23
    assert verify_program(tt, batched, cmap)


def test_match_score_symbol_out_of_alphabet():
    scheme = dna_scheme()
    cmap = alloc([Field("qa", 2), Field("qb", 2), Field("out", 4),
                  Field("f", 1)], row_bits=64)
    prog = match_score(cmap, scheme, "qa", "qb", "out",
                       conditions=((cmap.col("f", 0), 1),))
    # conditioned: rows without the flag keep their sigma field
    array = CamArray(2, row_bits=64)
    array.write_field(0, cmap.cols("f"), 1)
    execute(prog, array)
    assert signed(array.read_field(0, cmap.cols("out")), 4) == 2  # A vs A
    assert array.read_field(1, cmap.cols("out")) == 0


def test_execute_rejects_width_mismatch():
    prog = MicroProgram(64, 32)
    prog.cmp(0, 0)
    from camalign import ConfigurationError
    with pytest.raises(ConfigurationError):
        execute(prog, CamArray(2, row_bits=128))


def test_batching_blocks_precharge_and_saves_cycles(rng):
    # overlapping cubes make a row match twice under per-cube pairs but
    # only once (then blocked) under the accumulating batch schedule
    fields, tt, _, _ = builtin_table("or")
    cmap = alloc(fields, row_bits=64)
    baseline = schedule(tt, Strategy.BASELINE, cmap)
    batched = schedule(tt, Strategy.BATCH_CUBES, cmap)
    E, D = len(tt.entries), len(tt.groups())
    assert D < E and batched.cycle_count < baseline.cycle_count
    rows = [rng.getrandbits(2) for _ in range(64)]
    results = {}
    for name, prog in (("base", baseline), ("batch", batched)):
        a = CamArray(len(rows), row_bits=64)
        a.load_rows(0, rows)
        results[name] = execute(prog, a)
    assert results["batch"].matched_rows <= results["base"].matched_rows
    assert results["batch"].blocked_rows > 0


# ---------------------------------------------------------------------------
# EOM energy invariance


def full_add_energy(cmap, rows_bits, rng):
    array = CamArray(len(rows_bits), row_bits=256)
    for r, (x, y) in enumerate(rows_bits):
        array.write_field(r, cmap.cols("a"), x)
        array.write_field(r, cmap.cols("b"), y)
    ledger = EnergyLedger()
    execute(vec_add(cmap, "a", "b", "s", "carry"), array, ledger)
    values = [(array.read_field(r, cmap.cols("s")),
               array.read_field(r, cmap.cols("carry")))
              for r in range(len(rows_bits))]
    return values, ledger


def test_eom_changes_energy_never_results(rng):
    w = 1
    fields = [Field("a", w), Field("b", w), Field("s", w), Field("carry", 1)]
    tight = alloc(fields, colocate=[["a", "b", "s", "carry"]], eom=True)
    from camalign.microcode import ColumnMap
    spread = ColumnMap({"a": (0,), "b": (32,), "s": (64,), "carry": (96,)},
                       256, 32)
    rows = [(rng.getrandbits(w), rng.getrandbits(w)) for _ in range(500)]
    vals_tight, led_tight = full_add_energy(tight, rows, rng)
    vals_spread, led_spread = full_add_energy(spread, rows, rng)
    assert vals_tight == vals_spread
    assert led_tight.total_cycles == led_spread.total_cycles
    assert led_tight.compare_j < led_spread.compare_j
