"""Microcode: compile truth tables and vector operations to cycle sequences.

A microprogram is an ordered list of compare / write / shift-tag cycles.
Truth-table compilation supports four schedules:

* ``BASELINE``      : one compare+write pair per entry (2E cycles). A table
  with a declared default output first broadcasts the default (one masked
  compare plus one write) and then pairs the exception entries.
* ``BATCH_GROUPED`` : entries with equal output share one write: all the
  group's compares run back to back (the batch-write tag ORs their matches)
  followed by a single write (E + D cycles).
* ``BATCH_CUBES``   : like grouped, but each group's compares are first
  compressed into don't-care cubes (greedy largest-cube cover), so AND/OR
  style tables drop below E + D.
* ``BATCH_DEFAULT_WRITE``: tag everything, write the most common output,
  then schedule the remaining groups. Requires input and output columns to
  be disjoint.
* ``AUTO``          : the cheapest legal batch schedule.

When an output field shares columns with an input field (the in-place
carry of a full add), a write can change which entry a row matches, so
groups are topologically ordered so that no rewritten row ever matches a
later compare with a different output. An unsatisfiable ordering raises
``ScheduleError``.
"""

import enum
from dataclasses import dataclass
from itertools import product

import numpy as np

from .cam_array import pack_words
from .errors import AllocationError, ConfigurationError, ScheduleError

KIND_COMPARE = 0
KIND_WRITE = 1
KIND_SHIFT = 2

_KIND_NAMES = {KIND_COMPARE: "CMP", KIND_WRITE: "WR", KIND_SHIFT: "SHIFT"}

_HAZARD_EXPANSION_LIMIT = 16  # minterm expansion bound for overlap analysis


class Strategy(enum.Enum):
    BASELINE = "baseline"
    BATCH_GROUPED = "batch-grouped"
    BATCH_CUBES = "batch-cubes"
    BATCH_DEFAULT_WRITE = "batch-default-write"
    AUTO = "auto"


@dataclass(frozen=True)
class Field:
    name: str
    width: int

    def __post_init__(self):
        if self.width <= 0:
            raise ConfigurationError(f"field {self.name!r} needs width >= 1")


@dataclass(frozen=True)
class ColumnMap:
    """Virtual field -> physical bit columns (LSB first)."""

    columns: dict
    row_bits: int
    subword_bits: int

    def __post_init__(self):
        seen = {}
        for name, cols in self.columns.items():
            for c in cols:
                if not 0 <= c < self.row_bits:
                    raise AllocationError(
                        f"field {name!r} column {c} outside {self.row_bits}-bit row")
                if c in seen:
                    raise AllocationError(
                        f"column {c} assigned to both {seen[c]!r} and {name!r}")
                seen[c] = name

    def cols(self, name):
        try:
            return self.columns[name]
        except KeyError:
            raise ScheduleError(f"field {name!r} is not allocated") from None

    def col(self, name, bit):
        cols = self.cols(name)
        if bit >= len(cols):
            raise ScheduleError(f"field {name!r} has no bit {bit}")
        return cols[bit]

    def width(self, name):
        return len(self.cols(name))

    def mask(self, *names):
        m = 0
        for n in names:
            for c in self.cols(n):
                m |= 1 << c
        return m

    def encode(self, name, value):
        """Two's-complement value -> (key, mask) over this field's columns."""
        cols = self.cols(name)
        key = 0
        for i, c in enumerate(cols):
            if (value >> i) & 1:
                key |= 1 << c
        return key, self.mask(name)

    def subword_of(self, col):
        return col // self.subword_bits

    def describe(self):
        lines = []
        for name in sorted(self.columns):
            cols = ",".join(str(c) for c in self.columns[name])
            lines.append(f"# {name}: {cols}")
        return lines


def alloc(fields, colocate=(), eom=False, row_bits=256, subword_bits=32):
    """Assign physical columns to fields.

    Without EOM, fields pack left to right in declaration order. With EOM,
    bit i of every field in a co-location group is placed in one sub-word
    (minimizing active sub-words for bit-serial ops); remaining fields fill
    the leftover columns.
    """
    fields = list(fields)
    total = sum(f.width for f in fields)
    if total > row_bits:
        raise AllocationError(
            f"{total} columns requested but the row has only {row_bits}")
    by_name = {f.name: f for f in fields}
    if len(by_name) != len(fields):
        raise AllocationError("duplicate field names")
    for group in colocate:
        for name in group:
            if name not in by_name:
                raise AllocationError(f"co-location names unknown field {name!r}")

    if not eom:
        columns = {}
        next_col = 0
        for f in fields:
            columns[f.name] = tuple(range(next_col, next_col + f.width))
            next_col += f.width
        return ColumnMap(columns, row_bits, subword_bits)

    n_subwords = row_bits // subword_bits
    free = [list(range(s * subword_bits, (s + 1) * subword_bits))
            for s in range(n_subwords)]
    columns = {name: [] for name in by_name}
    grouped = set()

    for group in colocate:
        members = [by_name[name] for name in group]
        grouped.update(g.name for g in members)
        max_w = max(m.width for m in members)
        for bit in range(max_w):
            slice_members = [m for m in members if m.width > bit]
            need = len(slice_members)
            if need > subword_bits:
                raise AllocationError(
                    f"co-location slice of {need} bits exceeds a "
                    f"{subword_bits}-bit sub-word")
            for sw in range(n_subwords):
                if len(free[sw]) >= need:
                    for m in slice_members:
                        columns[m.name].append(free[sw].pop(0))
                    break
            else:
                raise AllocationError("co-location request is infeasible "
                                      "with the remaining free columns")

    pool = [c for sw in free for c in sw]
    for f in fields:
        if f.name in grouped:
            continue
        columns[f.name] = pool[:f.width]
        del pool[:f.width]

    return ColumnMap({k: tuple(v) for k, v in columns.items()},
                     row_bits, subword_bits)


# ---------------------------------------------------------------------------
# Truth tables


def _check_cube(cube, n, what):
    if len(cube) != n or any(ch not in "01-" for ch in cube):
        raise ScheduleError(f"bad {what} {cube!r}")


def _cubes_intersect(a, b):
    return all(x == "-" or y == "-" or x == y for x, y in zip(a, b))


def _cube_covers(cube, minterm):
    return all(c == "-" or c == m for c, m in zip(cube, minterm))


def _expand(cube):
    slots = [("0", "1") if ch == "-" else (ch,) for ch in cube]
    return ["".join(bits) for bits in product(*slots)]


@dataclass(frozen=True)
class TruthTable:
    """Boolean function table over named field bits.

    ``inputs`` / ``outputs`` list (field, bit) pairs; entry strings index
    them positionally. Entry inputs may hold ``-`` (don't care). A table may
    declare a ``default`` output: rows matching no entry receive it (rows of
    a default-free table are left untouched).
    """

    inputs: tuple
    outputs: tuple
    entries: tuple
    default: str = None

    def __post_init__(self):
        n_in, n_out = len(self.inputs), len(self.outputs)
        if not n_in or not n_out:
            raise ScheduleError("table needs at least one input and output bit")
        for cube, out in self.entries:
            _check_cube(cube, n_in, "entry input")
            _check_cube(out, n_out, "entry output")
            if "-" in out:
                raise ScheduleError("entry outputs must be concrete")
        if self.default is not None:
            _check_cube(self.default, n_out, "default output")
        for i, (ca, oa) in enumerate(self.entries):
            for cb, ob in self.entries[i + 1:]:
                if oa != ob and _cubes_intersect(ca, cb):
                    raise ScheduleError(
                        f"inconsistent table: {ca!r} and {cb!r} overlap but "
                        f"map to {oa!r} vs {ob!r}")

    @property
    def n_inputs(self):
        return len(self.inputs)

    def lookup(self, bits):
        """Expected output string for a concrete input, or None."""
        for cube, out in self.entries:
            if _cube_covers(cube, bits):
                return out
        return self.default

    def groups(self):
        """Distinct outputs in first-appearance order with their cubes."""
        order, cubes = [], {}
        for cube, out in self.entries:
            if out not in cubes:
                order.append(out)
                cubes[out] = []
            cubes[out].append(cube)
        return [(out, tuple(cubes[out])) for out in order]


def table_from_function(inputs, outputs, fn):
    """Enumerate a function bits->bits into a TruthTable (test helper)."""
    entries = []
    for bits in product("01", repeat=len(inputs)):
        cube = "".join(bits)
        entries.append((cube, fn(cube)))
    return TruthTable(tuple(inputs), tuple(outputs), tuple(entries))


def _covers_all_inputs(tt):
    if tt.default is not None:
        return True
    if tt.n_inputs > _HAZARD_EXPANSION_LIMIT:
        return False
    covered = set()
    for cube, _ in tt.entries:
        covered.update(_expand(cube))
    return len(covered) == 1 << tt.n_inputs


def _synth_default(tt):
    groups = tt.groups()
    sizes = [sum(len(_expand(c)) for c in cubes) for _, cubes in groups]
    biggest = max(range(len(groups)), key=lambda i: (sizes[i], -i))
    return groups[biggest][0], [g for i, g in enumerate(groups) if i != biggest]


def effective_table(tt, strategy):
    """The function a schedule actually implements. Identical to the table
    except under the default-write schedule, where rows matching no entry
    receive the (declared or synthesized) default output."""
    if strategy != Strategy.BATCH_DEFAULT_WRITE or tt.default is not None:
        return tt
    default, _ = _synth_default(tt)
    return TruthTable(tt.inputs, tt.outputs, tt.entries, default)


# ---------------------------------------------------------------------------
# Programs


class MicroProgram:
    """An ordered compare/write/shift cycle sequence over one geometry."""

    def __init__(self, row_bits=256, subword_bits=32):
        self.row_bits = row_bits
        self.subword_bits = subword_bits
        self._ops = []          # (kind, key, mask) ints
        self._arrays = None

    # building ------------------------------------------------------------

    def _invalidate(self):
        self._arrays = None

    def cmp(self, key, mask):
        self._ops.append((KIND_COMPARE, key, mask))
        self._invalidate()
        return self

    def wr(self, key, mask):
        self._ops.append((KIND_WRITE, key, mask))
        self._invalidate()
        return self

    def shift(self):
        self._ops.append((KIND_SHIFT, 0, 0))
        self._invalidate()
        return self

    def extend(self, other):
        if (other.row_bits, other.subword_bits) != (self.row_bits, self.subword_bits):
            raise ConfigurationError("cannot concatenate programs of unlike geometry")
        self._ops.extend(other._ops)
        self._invalidate()
        return self

    def set_key(self, index, key):
        """Patch one op's key in place (used for per-iteration constants)."""
        kind, _, mask = self._ops[index]
        if kind == KIND_SHIFT:
            raise ConfigurationError("shift ops carry no key")
        self._ops[index] = (kind, key, mask)
        if self._arrays is not None:
            self._arrays[1][index] = pack_words(key, self.row_bits // 64)

    # inspection ----------------------------------------------------------

    @property
    def cycle_count(self):
        return len(self._ops)

    def __len__(self):
        return len(self._ops)

    @property
    def ops(self):
        return tuple(self._ops)

    def kind_counts(self):
        counts = {KIND_COMPARE: 0, KIND_WRITE: 0, KIND_SHIFT: 0}
        for kind, _, _ in self._ops:
            counts[kind] += 1
        return counts

    def active_subword_counts(self):
        """Per-op count of sub-words holding at least one unmasked column."""
        out = []
        for kind, _, mask in self._ops:
            if kind == KIND_SHIFT:
                out.append(0)
            else:
                out.append(count_active_subwords(mask, self.subword_bits))
        return out

    def validate(self):
        """Every write needs a compare since the previous write."""
        armed = False
        for kind, _, _ in self._ops:
            if kind == KIND_COMPARE:
                armed = True
            elif kind == KIND_WRITE:
                if not armed:
                    raise ScheduleError("write without a preceding compare")
                armed = False

    def arrays(self):
        """(kinds, keys, masks, active, write_bits) as numpy arrays."""
        if self._arrays is None:
            self.validate()
            n = len(self._ops)
            words = self.row_bits // 64
            kinds = np.empty(n, dtype=np.uint8)
            keys = np.zeros((n, words), dtype=np.uint64)
            masks = np.zeros((n, words), dtype=np.uint64)
            active = np.zeros(n, dtype=np.int64)
            wbits = np.zeros(n, dtype=np.int64)
            for i, (kind, key, mask) in enumerate(self._ops):
                kinds[i] = kind
                if kind != KIND_SHIFT:
                    keys[i] = pack_words(key, words)
                    masks[i] = pack_words(mask, words)
                    active[i] = count_active_subwords(mask, self.subword_bits)
                    wbits[i] = mask.bit_count()
            self._arrays = (kinds, keys, masks, active, wbits)
        return self._arrays

    def dump(self, cmap=None):
        """Bit-exact text form: header with the column map, one line per op."""
        digits = self.row_bits // 4
        lines = list(cmap.describe()) if cmap is not None else []
        for kind, key, mask in self._ops:
            if kind == KIND_SHIFT:
                lines.append("SHIFT")
            else:
                lines.append(f"{_KIND_NAMES[kind]} key={key:0{digits}x} "
                             f"mask={mask:0{digits}x}")
        return "\n".join(lines)


def count_active_subwords(mask, subword_bits):
    """Number of sub-words containing at least one unmasked column."""
    seen = set()
    while mask:
        bit = (mask & -mask).bit_length() - 1
        seen.add(bit // subword_bits)
        mask &= mask - 1
    return len(seen)


# ---------------------------------------------------------------------------
# Scheduling


def _compare_pattern(tt, cube, cmap, conditions):
    key = mask = 0
    for i, ch in enumerate(cube):
        if ch == "-":
            continue
        col = cmap.col(*tt.inputs[i])
        mask |= 1 << col
        if ch == "1":
            key |= 1 << col
    for col, bit in conditions:
        mask |= 1 << col
        if bit:
            key |= 1 << col
    return key, mask


def _write_pattern(tt, out, cmap):
    key = mask = 0
    for i, ch in enumerate(out):
        col = cmap.col(*tt.outputs[i])
        mask |= 1 << col
        if ch == "1":
            key |= 1 << col
    return key, mask


def _shared_positions(tt):
    """Input positions whose column is also written, with the output
    position that overwrites them."""
    out_pos = {bit: j for j, bit in enumerate(tt.outputs)}
    return {i: out_pos[bit] for i, bit in enumerate(tt.inputs) if bit in out_pos}


def _transition(minterm, out, shared):
    bits = list(minterm)
    for i, j in shared.items():
        bits[i] = out[j]
    return "".join(bits)


def _order_groups(tt, groups):
    """Topological group order so no rewritten row matches a later group."""
    shared = _shared_positions(tt)
    if not shared:
        return list(range(len(groups)))
    if tt.n_inputs > _HAZARD_EXPANSION_LIMIT:
        raise ScheduleError(
            "input/output columns overlap on a table too wide for hazard "
            "analysis; allocate disjoint output columns")
    minterms = []
    owner = {}
    for gi, (_, cubes) in enumerate(groups):
        ms = set()
        for cube in cubes:
            ms.update(_expand(cube))
        minterms.append(ms)
        for m in ms:
            owner[m] = gi
    after = [set() for _ in groups]   # after[g] = groups that must precede g
    for gi, (out, _) in enumerate(groups):
        for m in minterms[gi]:
            t = _transition(m, out, shared)
            tg = owner.get(t)
            if tg is not None and tg != gi:
                after[gi].add(tg)
    order = []
    placed = [False] * len(groups)
    while len(order) < len(groups):
        for gi in range(len(groups)):
            if not placed[gi] and all(placed[d] for d in after[gi]):
                order.append(gi)
                placed[gi] = True
                break
        else:
            raise ScheduleError(
                "no write order avoids re-matching rewritten rows; "
                "allocate disjoint output columns")
    return order


def _order_entries(tt):
    """Baseline analogue of _order_groups at entry granularity."""
    shared = _shared_positions(tt)
    entries = list(tt.entries)
    if not shared:
        return list(range(len(entries)))
    if tt.n_inputs > _HAZARD_EXPANSION_LIMIT:
        raise ScheduleError(
            "input/output columns overlap on a table too wide for hazard "
            "analysis; allocate disjoint output columns")
    after = [set() for _ in entries]
    for ei, (cube, out) in enumerate(entries):
        for m in _expand(cube):
            t = _transition(m, out, shared)
            for ej, (cj, oj) in enumerate(entries):
                if ej != ei and oj != out and _cube_covers(cj, t):
                    after[ei].add(ej)
    order = []
    placed = [False] * len(entries)
    while len(order) < len(entries):
        for ei in range(len(entries)):
            if not placed[ei] and all(placed[d] for d in after[ei]):
                order.append(ei)
                placed[ei] = True
                break
        else:
            raise ScheduleError(
                "no entry order avoids re-matching rewritten rows; "
                "allocate disjoint output columns")
    return order


def _cover_with_cubes(cubes, n_inputs):
    """Greedy largest-cube-first cover of a group's minterms.

    Cubes may only cover the group's own minterms (rows holding any other
    input combination must stay untouched), and may overlap each other.
    """
    allowed = set()
    for cube in cubes:
        allowed.update(_expand(cube))
    candidates = []
    seen = set()
    for m in sorted(allowed):
        grown = list(m)
        for pos in range(n_inputs):
            saved = grown[pos]
            grown[pos] = "-"
            if not all(x in allowed for x in _expand("".join(grown))):
                grown[pos] = saved
        cube = "".join(grown)
        if cube not in seen:
            seen.add(cube)
            candidates.append((cube, frozenset(_expand(cube))))
    cover = []
    uncovered = set(allowed)
    while uncovered:
        best_cube, best_set, best_gain = None, None, 0
        for cube, covered in candidates:
            gain = len(covered & uncovered)
            if gain > best_gain:
                best_cube, best_set, best_gain = cube, covered, gain
        if best_cube is None:
            raise ScheduleError("cube cover failed to progress")
        cover.append(best_cube)
        uncovered -= best_set
    return cover


def _emit_default(prog, tt, cmap, conditions):
    key, mask = _compare_pattern(tt, "-" * tt.n_inputs, cmap, conditions)
    prog.cmp(key, mask)
    prog.wr(*_write_pattern(tt, tt.default, cmap))


def schedule(tt, strategy, cmap, conditions=(), row_bits=None, subword_bits=None):
    """Compile a truth table into a microprogram.

    ``conditions`` are (column, bit) pairs ANDed into every compare; they
    implement the per-row execution flags of conditional vector ops.
    """
    row_bits = row_bits if row_bits is not None else cmap.row_bits
    subword_bits = subword_bits if subword_bits is not None else cmap.subword_bits
    for fld, bit in tt.inputs + tt.outputs:
        cmap.col(fld, bit)

    if strategy == Strategy.AUTO:
        candidates = [Strategy.BATCH_GROUPED, Strategy.BATCH_CUBES]
        if _covers_all_inputs(tt):
            # only then is a synthesized default semantics-preserving
            candidates.append(Strategy.BATCH_DEFAULT_WRITE)
        best = None
        for s in candidates:
            try:
                prog = schedule(tt, s, cmap, conditions, row_bits, subword_bits)
            except ScheduleError:
                continue
            if best is None or prog.cycle_count < best.cycle_count:
                best = prog
        if best is None:
            raise ScheduleError("no legal batch schedule for this table")
        return best

    prog = MicroProgram(row_bits, subword_bits)
    groups = tt.groups()

    if strategy == Strategy.BASELINE:
        if tt.default is not None:
            if _shared_positions(tt):
                raise ScheduleError("a default write needs disjoint "
                                    "input/output columns")
            _emit_default(prog, tt, cmap, conditions)
        for ei in _order_entries(tt):
            cube, out = tt.entries[ei]
            prog.cmp(*_compare_pattern(tt, cube, cmap, conditions))
            prog.wr(*_write_pattern(tt, out, cmap))
        return prog

    if strategy == Strategy.BATCH_GROUPED or strategy == Strategy.BATCH_CUBES:
        if tt.default is not None:
            if _shared_positions(tt):
                raise ScheduleError("a default write needs disjoint "
                                    "input/output columns")
            _emit_default(prog, tt, cmap, conditions)
        for gi in _order_groups(tt, groups):
            out, cubes = groups[gi]
            if strategy == Strategy.BATCH_CUBES:
                if tt.n_inputs > _HAZARD_EXPANSION_LIMIT:
                    raise ScheduleError("table too wide for cube covering")
                cubes = _cover_with_cubes(cubes, tt.n_inputs)
            for cube in cubes:
                prog.cmp(*_compare_pattern(tt, cube, cmap, conditions))
            prog.wr(*_write_pattern(tt, out, cmap))
        return prog

    if strategy == Strategy.BATCH_DEFAULT_WRITE:
        if _shared_positions(tt):
            raise ScheduleError("batch default write needs disjoint "
                                "input/output columns")
        if tt.default is not None:
            default, rest = tt.default, groups
        else:
            default, rest = _synth_default(tt)
        patched = TruthTable(tt.inputs, tt.outputs, tt.entries, default)
        _emit_default(prog, patched, cmap, conditions)
        for out, cubes in rest:
            for cube in cubes:
                prog.cmp(*_compare_pattern(tt, cube, cmap, conditions))
            prog.wr(*_write_pattern(tt, out, cmap))
        return prog

    raise ConfigurationError(f"unknown strategy {strategy!r}")


# ---------------------------------------------------------------------------
# Execution


@dataclass
class ExecutionCounts:
    """Per-run aggregates returned by execute()."""

    compares: int = 0
    writes: int = 0
    shifts: int = 0
    matched_rows: int = 0
    mismatched_rows: int = 0
    blocked_rows: int = 0
    rows_written: int = 0


def execute(prog, array, ledger=None):
    """Run a program on an array, optionally recording into an energy ledger."""
    if prog.row_bits != array.row_bits:
        raise ConfigurationError("program row width does not match the array")
    kinds, keys, masks, active, wbits = prog.arrays()
    n = len(kinds)
    matched = np.zeros(n, dtype=np.int64)
    mismatched = np.zeros(n, dtype=np.int64)
    blocked = np.zeros(n, dtype=np.int64)
    written = np.zeros(n, dtype=np.int64)
    array._kernel.execute(array.stored, array.tags, kinds, keys, masks,
                          matched, mismatched, blocked, written)
    is_cmp = kinds == KIND_COMPARE
    is_wr = kinds == KIND_WRITE
    n_shift = int((kinds == KIND_SHIFT).sum())
    counts = ExecutionCounts(
        compares=int(is_cmp.sum()),
        writes=int(is_wr.sum()),
        shifts=n_shift,
        matched_rows=int(matched.sum()),
        mismatched_rows=int(mismatched.sum()),
        blocked_rows=int(blocked.sum()),
        rows_written=int(written.sum()),
    )
    if ledger is not None:
        ledger.absorb_ops(kinds, active, matched, mismatched, blocked,
                          wbits, written, array.rows,
                          len(array.chip_boundaries))
    return counts


# ---------------------------------------------------------------------------
# Bit-serial vector operations


def _full_add_table(a, b, carry, dest, bit):
    """One bit of A + B + C -> C|S. The carry updates in place, so the
    scheduler's hazard ordering is what keeps the 12-cycle batch legal."""
    inputs = ((a, bit), (b, bit), (carry, 0))
    outputs = ((dest, bit), (carry, 0))
    entries = []
    for cube in ("000", "001", "010", "100", "011", "101", "110", "111"):
        x, y, c = (int(ch) for ch in cube)
        s = x + y + c
        entries.append((cube, f"{s & 1}{s >> 1}"))
    return TruthTable(inputs, outputs, tuple(entries))


def vec_add(cmap, a, b, dest, carry, strategy=Strategy.BATCH_GROUPED,
            conditions=(), prog=None):
    """dest = a + b, bit-serial LSB first; 12 cycles/bit batched.

    The carry column must hold 0 beforehand (broadcast_value clears it);
    it ends holding the final carry.
    """
    w = cmap.width(a)
    if cmap.width(b) != w or cmap.width(dest) != w:
        raise ConfigurationError("vec_add operands must share one width")
    prog = prog if prog is not None else MicroProgram(cmap.row_bits, cmap.subword_bits)
    for bit in range(w):
        prog.extend(schedule(_full_add_table(a, b, carry, dest, bit),
                             strategy, cmap, conditions))
    return prog


def _sub_const_bit_table(src, dest, borrow, bit, kbit):
    inputs = ((src, bit), (borrow, 0))
    outputs = ((dest, bit), (borrow, 0))
    entries = []
    for cube in ("00", "01", "10", "11"):
        s, br = (int(ch) for ch in cube)
        d = s - kbit - br
        entries.append((cube, f"{d & 1}{1 if d < 0 else 0}"))
    return TruthTable(inputs, outputs, tuple(entries))


def _add_const_bit_table(src, dest, carry, bit, kbit):
    inputs = ((src, bit), (carry, 0))
    outputs = ((dest, bit), (carry, 0))
    entries = []
    for cube in ("00", "01", "10", "11"):
        s, c = (int(ch) for ch in cube)
        t = s + kbit + c
        entries.append((cube, f"{t & 1}{t >> 1}"))
    return TruthTable(inputs, outputs, tuple(entries))


def vec_sub_const(cmap, src, constant, dest, borrow,
                  strategy=Strategy.BATCH_GROUPED, conditions=(), prog=None):
    """dest = src - constant (two's complement, wraps). Borrow must be 0.

    dest may alias src; the in-place borrow is hazard-ordered.
    """
    w = cmap.width(src)
    if cmap.width(dest) != w:
        raise ConfigurationError("vec_sub_const operands must share one width")
    prog = prog if prog is not None else MicroProgram(cmap.row_bits, cmap.subword_bits)
    for bit in range(w):
        kbit = (constant >> bit) & 1
        prog.extend(schedule(_sub_const_bit_table(src, dest, borrow, bit, kbit),
                             strategy, cmap, conditions))
    return prog


def vec_add_const(cmap, src, constant, dest, carry,
                  strategy=Strategy.BATCH_GROUPED, conditions=(), prog=None):
    """dest = src + constant (two's complement, wraps). Carry must be 0."""
    w = cmap.width(src)
    if cmap.width(dest) != w:
        raise ConfigurationError("vec_add_const operands must share one width")
    prog = prog if prog is not None else MicroProgram(cmap.row_bits, cmap.subword_bits)
    for bit in range(w):
        kbit = (constant >> bit) & 1
        prog.extend(schedule(_add_const_bit_table(src, dest, carry, bit, kbit),
                             strategy, cmap, conditions))
    return prog


def _sub_field_bit_table(a, b, dest, borrow, bit):
    inputs = ((a, bit), (b, bit), (borrow, 0))
    outputs = ((dest, bit), (borrow, 0))
    entries = []
    for cube in ("000", "001", "010", "100", "011", "101", "110", "111"):
        x, y, br = (int(ch) for ch in cube)
        d = x - y - br
        entries.append((cube, f"{d & 1}{1 if d < 0 else 0}"))
    return TruthTable(inputs, outputs, tuple(entries))


def vec_sub(cmap, a, b, dest, borrow, strategy=Strategy.BATCH_GROUPED,
            conditions=(), prog=None):
    """dest = a - b (two's complement, wraps). Borrow must be 0."""
    w = cmap.width(a)
    if cmap.width(b) != w or cmap.width(dest) != w:
        raise ConfigurationError("vec_sub operands must share one width")
    prog = prog if prog is not None else MicroProgram(cmap.row_bits, cmap.subword_bits)
    for bit in range(w):
        prog.extend(schedule(_sub_field_bit_table(a, b, dest, borrow, bit),
                             strategy, cmap, conditions))
    return prog


def _borrow_bit_table(a, b, borrow, bit):
    inputs = ((a, bit), (b, bit), (borrow, 0))
    outputs = ((borrow, 0),)
    entries = []
    for cube in ("000", "001", "010", "100", "011", "101", "110", "111"):
        x, y, br = (int(ch) for ch in cube)
        entries.append((cube, "1" if x - y - br < 0 else "0"))
    return TruthTable(inputs, outputs, tuple(entries))


def _lt_final_table(a, b, borrow, lt, sign_bit):
    # sign-extended final difference bit: the exact signed a<b predicate
    inputs = ((a, sign_bit), (b, sign_bit), (borrow, 0))
    outputs = ((lt, 0),)
    entries = []
    for cube in ("000", "001", "010", "100", "011", "101", "110", "111"):
        x, y, br = (int(ch) for ch in cube)
        entries.append((cube, "1" if (x ^ y ^ br) else "0"))
    return TruthTable(inputs, outputs, tuple(entries))


def vec_lt(cmap, a, b, borrow, lt, strategy=Strategy.BATCH_GROUPED,
           conditions=(), prog=None):
    """lt = (a < b) signed, via the borrow chain of a - b with one bit of
    sign extension. Clears the borrow column first. 2 + 10w + 10 cycles."""
    w = cmap.width(a)
    if cmap.width(b) != w:
        raise ConfigurationError("vec_lt operands must share one width")
    prog = prog if prog is not None else MicroProgram(cmap.row_bits, cmap.subword_bits)
    broadcast_value(cmap, borrow, 0, flags=(), prog=prog)
    for bit in range(w):
        prog.extend(schedule(_borrow_bit_table(a, b, borrow, bit),
                             strategy, cmap, conditions))
    prog.extend(schedule(_lt_final_table(a, b, borrow, lt, w - 1),
                         strategy, cmap, conditions))
    return prog


def vec_cond_copy(cmap, src, dest, flags=(), conditions=(), prog=None):
    """dest <- src on rows satisfying the flag bits; 4 cycles/bit."""
    w = cmap.width(src)
    if cmap.width(dest) != w:
        raise ConfigurationError("vec_cond_copy operands must share one width")
    prog = prog if prog is not None else MicroProgram(cmap.row_bits, cmap.subword_bits)
    cond = tuple(flags) + tuple(conditions)
    for bit in range(w):
        s_col, d_col = cmap.col(src, bit), cmap.col(dest, bit)
        for val in (1, 0):
            key = mask = 0
            mask |= 1 << s_col
            key |= val << s_col
            for col, b in cond:
                mask |= 1 << col
                if b:
                    key |= 1 << col
            prog.cmp(key, mask)
            prog.wr(val << d_col, 1 << d_col)
    return prog


def vec_copy(cmap, src, dest, conditions=(), prog=None):
    return vec_cond_copy(cmap, src, dest, (), conditions, prog)


def broadcast_value(cmap, fld, value, flags=(), prog=None):
    """Write a constant into a field of every row satisfying the flags
    (2 cycles; with no flags the compare is fully masked and hits all rows)."""
    prog = prog if prog is not None else MicroProgram(cmap.row_bits, cmap.subword_bits)
    key = mask = 0
    for col, b in flags:
        mask |= 1 << col
        if b:
            key |= 1 << col
    prog.cmp(key, mask)
    wkey, wmask = cmap.encode(fld, value)
    prog.wr(wkey, wmask)
    return prog


def broadcast_zero(cmap, fields, flags=(), prog=None):
    """Zero several fields at once (still 2 cycles: one write, many columns)."""
    prog = prog if prog is not None else MicroProgram(cmap.row_bits, cmap.subword_bits)
    key = mask = 0
    for col, b in flags:
        mask |= 1 << col
        if b:
            key |= 1 << col
    prog.cmp(key, mask)
    prog.wr(0, cmap.mask(*fields))
    return prog


def clamp_negative_to_zero(cmap, fld, conditions=(), prog=None):
    """fld <- max(fld, 0): one compare on the sign bit, one write of zeros."""
    prog = prog if prog is not None else MicroProgram(cmap.row_bits, cmap.subword_bits)
    sign_col = cmap.col(fld, cmap.width(fld) - 1)
    flags = ((sign_col, 1),) + tuple(conditions)
    key = mask = 0
    for col, b in flags:
        mask |= 1 << col
        if b:
            key |= 1 << col
    prog.cmp(key, mask)
    prog.wr(0, cmap.mask(fld))
    return prog


def vec_max(cmap, a, b, dest, borrow, lt, strategy=Strategy.BATCH_GROUPED,
            conditions=(), prog=None):
    """dest = max(a, b) by signed comparison (subtract + sign-conditioned
    copy). Ties keep the value (identical either way)."""
    prog = prog if prog is not None else MicroProgram(cmap.row_bits, cmap.subword_bits)
    vec_lt(cmap, a, b, borrow, lt, strategy, conditions, prog)
    lt_col = cmap.col(lt, 0)
    if dest == a:
        vec_cond_copy(cmap, b, dest, ((lt_col, 1),), conditions, prog)
    elif dest == b:
        vec_cond_copy(cmap, a, dest, ((lt_col, 0),), conditions, prog)
    else:
        vec_cond_copy(cmap, a, dest, ((lt_col, 0),), conditions, prog)
        vec_cond_copy(cmap, b, dest, ((lt_col, 1),), conditions, prog)
    return prog


def field_shift_down(cmap, src, dest, move_tmp, src_flags=(), recv_flags=(),
                     prog=None):
    """Move a field one row down: dest[r] <- src[r-1] bit-serially.

    Per bit: clear the transfer column, copy the source column into the
    tags (compare), shift the tags, write the transfer column, then copy
    it into the destination (9 cycles/bit). ``src_flags`` gate which rows
    supply a value (their match is what shifts); ``recv_flags`` gate which
    rows accept one (others keep their bits).
    """
    w = cmap.width(src)
    if cmap.width(dest) != w:
        raise ConfigurationError("shift source/destination widths differ")
    prog = prog if prog is not None else MicroProgram(cmap.row_bits, cmap.subword_bits)
    t_col = cmap.col(move_tmp, 0)
    for bit in range(w):
        s_col, d_col = cmap.col(src, bit), cmap.col(dest, bit)
        prog.cmp(0, 0)
        prog.wr(0, 1 << t_col)
        key, mask = 1 << s_col, 1 << s_col
        for col, b in src_flags:
            mask |= 1 << col
            if b:
                key |= 1 << col
        prog.cmp(key, mask)
        prog.shift()
        prog.wr(1 << t_col, 1 << t_col)
        for val in (1, 0):
            key = val << t_col
            mask = 1 << t_col
            for col, b in recv_flags:
                mask |= 1 << col
                if b:
                    key |= 1 << col
            prog.cmp(key, mask)
            prog.wr(val << d_col, 1 << d_col)
    return prog


# ---------------------------------------------------------------------------
# Named operation tables (cycle-table reporting and tests)


def builtin_table(name):
    """Well-known 1-bit operations as (fields, table, baseline strategy,
    batched strategy). The strategies are the pair under which the
    conventional cycle counts (16/12, 8/7, 8/6, 8/5) arise."""
    a, b = Field("a", 1), Field("b", 1)
    if name == "full-add":
        fields = [a, b, Field("carry", 1), Field("sum", 1)]
        return (fields, _full_add_table("a", "b", "carry", "sum", 0),
                Strategy.BASELINE, Strategy.BATCH_GROUPED)
    if name == "half-add":
        tt = TruthTable((("a", 0), ("b", 0)), (("sum", 0), ("carry", 0)),
                        (("00", "00"), ("01", "10"), ("10", "10"), ("11", "01")))
        return ([a, b, Field("sum", 1), Field("carry", 1)], tt,
                Strategy.BASELINE, Strategy.BATCH_GROUPED)
    if name in ("xor", "and", "or"):
        fn = {"xor": lambda x, y: x ^ y,
              "and": lambda x, y: x & y,
              "or": lambda x, y: x | y}[name]
        entries = tuple((f"{x}{y}", str(fn(x, y)))
                        for x, y in ((0, 0), (0, 1), (1, 0), (1, 1)))
        tt = TruthTable((("a", 0), ("b", 0)), (("out", 0),), entries)
        batched = Strategy.BATCH_GROUPED if name == "xor" else Strategy.BATCH_CUBES
        return ([a, b, Field("out", 1)], tt, Strategy.BASELINE, batched)
    raise ConfigurationError(f"unknown builtin operation {name!r}")


BUILTIN_LOGIC_OPS = ("full-add", "half-add", "xor", "and", "or")


# ---------------------------------------------------------------------------
# Match-score tables


def match_score_table(scheme, a_field, b_field, out_field, width):
    """sigma(a, b) -> out as a truth table over encoded symbol bits.

    A pair scheme (DNA) becomes a default table: mismatch as the default
    output with one exception entry per matching symbol. A substitution
    matrix enumerates every symbol pair.
    """
    bits = scheme.alphabet.bits
    inputs = tuple((a_field, i) for i in range(bits)) + \
        tuple((b_field, i) for i in range(bits))
    outputs = tuple((out_field, i) for i in range(width))

    def out_str(v):
        return "".join(str((v >> i) & 1) for i in range(width))

    def sym_cube(x, y):
        return "".join(str((x >> i) & 1) for i in range(bits)) + \
            "".join(str((y >> i) & 1) for i in range(bits))

    if scheme.matrix is None:
        entries = []
        for s in range(scheme.alphabet.size):
            if scheme.symbol_matches(s):
                entries.append((sym_cube(s, s), out_str(scheme.match)))
        return TruthTable(inputs, outputs, tuple(entries),
                          default=out_str(scheme.mismatch))
    entries = []
    for x in range(scheme.alphabet.size):
        for y in range(scheme.alphabet.size):
            entries.append((sym_cube(x, y), out_str(scheme.matrix[x][y])))
    return TruthTable(inputs, outputs, tuple(entries))


def match_score(cmap, scheme, a_field, b_field, out_field,
                strategy=None, conditions=(), prog=None):
    """Compile the substitution-score operation.

    DNA defaults to the batch default write (7 cycles for 2-bit symbols);
    matrix schemes default to plain grouping (entries + distinct values).
    """
    if strategy is None:
        strategy = (Strategy.BATCH_DEFAULT_WRITE if scheme.matrix is None
                    else Strategy.BATCH_GROUPED)
    tt = match_score_table(scheme, a_field, b_field, out_field,
                           cmap.width(out_field))
    sub = schedule(tt, strategy, cmap, conditions)
    if prog is None:
        return sub
    return prog.extend(sub)
