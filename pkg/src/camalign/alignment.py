"""Wavefront sequence alignment on the simulated associative array.

Database sequences are stored one symbol per row (a buffer row after
each); the query slides down the array one row per iteration, so each
iteration computes one antidiagonal of every pairwise score matrix in
parallel. Three antidiagonal fields cycle roles (new / previous / two
back), two gap fields carry the affine-gap recurrences (one updated in
place along the query direction, one shifted down along the database
direction), and a handful of one-bit flags steer which rows compute:

* ``first``/``buffer``/``last``: static layout marks,
* ``wf``  : rows on the current wavefront (compute this iteration),
* ``sd``  : the previous iteration's wavefront (rows that source the
  shifted fields),
* ``u``   : sd plus the newly activated head row (rows whose shifted-gap
  update must run so they can supply the row below),
* ``head``/``tail``: the wavefront's leading and retiring edge markers.

All value-producing compares carry the wavefront flags as conditions, so
rows outside the band keep their zero (boundary) state until activated.

After the alignment iterations, a cascade reduction slides each
sequence's running maximum down into its buffer row, and a bit-serial
probe search tags the globally best buffer row (ties resolve to the
lowest row index via the priority encoder).
"""

import math
from dataclasses import dataclass

from .cam_array import CamArray
from .energy_model import EnergyLedger
from .errors import AlphabetError, CapacityError, ConfigurationError
from .microcode import (ColumnMap, Field, MicroProgram, alloc,
                        broadcast_value, broadcast_zero,
                        clamp_negative_to_zero, count_active_subwords,
                        execute, field_shift_down, match_score, vec_add,
                        vec_add_const, vec_cond_copy, vec_copy, vec_max,
                        vec_sub_const)

META_BITS = 16


@dataclass(frozen=True)
class Alphabet:
    name: str
    letters: str
    bits: int
    never_match: str = ""   # symbols that mismatch everything, themselves included

    @property
    def size(self):
        return len(self.letters)

    def index(self, ch):
        i = self.letters.find(ch)
        if i < 0:
            raise AlphabetError(f"symbol {ch!r} is not in the {self.name} alphabet")
        return i


DNA = Alphabet("dna", "ACGT", 2)
DNA_MASKED = Alphabet("dna+x", "ACGTX", 3, never_match="X")
PROTEIN = Alphabet("protein", "ARNDCQEGHILKMFPSTWYVBZX", 5)


def encode_sequence(text, alphabet, mask_ambiguous=False):
    """Letters -> symbol indices. With ``mask_ambiguous`` on a DNA alphabet,
    anything outside ACGT becomes the mismatch-only X symbol."""
    if mask_ambiguous and alphabet is DNA:
        alphabet = DNA_MASKED
    out = []
    for pos, ch in enumerate(text.upper()):
        if mask_ambiguous and alphabet is DNA_MASKED and ch not in "ACGT":
            out.append(alphabet.index("X"))
            continue
        try:
            out.append(alphabet.index(ch))
        except AlphabetError:
            raise AlphabetError(
                f"symbol {ch!r} at position {pos} is not in the "
                f"{alphabet.name} alphabet") from None
    return out, alphabet


@dataclass(frozen=True)
class ScoringScheme:
    """Substitution scores plus gap penalties.

    ``match``/``mismatch`` describe a DNA-style pair scheme; ``matrix`` a
    full substitution matrix over the alphabet. ``g_first``/``g_ext`` are
    the affine open/extend penalties (subtracted; both non-negative with
    g_first >= g_ext), ``gap_d`` the linear gap score added by the
    global/semi-global recurrence (normally negative).
    """

    alphabet: Alphabet
    match: int = None
    mismatch: int = None
    matrix: tuple = None
    g_first: int = 2
    g_ext: int = 1
    gap_d: int = -1

    def __post_init__(self):
        if self.g_first < 0 or self.g_ext < 0 or self.g_first < self.g_ext:
            raise ConfigurationError(
                "gap penalties need g_first >= g_ext >= 0")
        if self.matrix is None:
            if self.match is None or self.mismatch is None:
                raise ConfigurationError("pair scheme needs match and mismatch")
        else:
            n = self.alphabet.size
            if len(self.matrix) != n or any(len(r) != n for r in self.matrix):
                raise ConfigurationError(
                    "matrix must be square over the alphabet")

    def symbol_matches(self, s):
        return self.alphabet.letters[s] not in self.alphabet.never_match

    def sigma(self, x, y):
        if self.matrix is not None:
            return self.matrix[x][y]
        if x == y and self.symbol_matches(x):
            return self.match
        return self.mismatch

    @property
    def max_abs_score(self):
        if self.matrix is not None:
            s = max(abs(v) for row in self.matrix for v in row)
        else:
            s = max(abs(self.match), abs(self.mismatch))
        return max(s, self.g_first, self.g_ext, abs(self.gap_d), 1)


def dna_scheme(match=2, mismatch=-1, g_first=2, g_ext=1, gap_d=-1,
               alphabet=DNA):
    return ScoringScheme(alphabet, match=match, mismatch=mismatch,
                         g_first=g_first, g_ext=g_ext, gap_d=gap_d)


def matrix_scheme(matrix, g_first=11, g_ext=1, gap_d=-4, alphabet=PROTEIN):
    return ScoringScheme(alphabet, matrix=tuple(tuple(r) for r in matrix),
                         g_first=g_first, g_ext=g_ext, gap_d=gap_d)


def score_bound(n, m, scheme, mode="local"):
    """Largest magnitude any score or gap intermediate can reach."""
    if mode == "local":
        if scheme.matrix is not None:
            s_max = max(max(row) for row in scheme.matrix)
            s_min = min(min(row) for row in scheme.matrix)
        else:
            s_max, s_min = scheme.match, scheme.mismatch
        return max((min(n, m) + 1) * max(s_max, 0), abs(s_min),
                   scheme.g_first + scheme.g_ext, 1)
    return (n + m) * scheme.max_abs_score


def required_score_width(n, m, scheme, mode="local"):
    """Bits so no score or gap intermediate can wrap.

    Local scores are clamped non-negative and bounded by the best all-match
    diagonal, so a 100-symbol DNA task fits 9 bits; the linear-gap modes can
    reach +-(n+m) * max|score|.
    """
    return max(2, math.ceil(math.log2(score_bound(n, m, scheme, mode) + 1)) + 1)


def validate_score_width(n, m, scheme, width, mode="local"):
    need = required_score_width(n, m, scheme, mode)
    if width < need:
        raise ConfigurationError(
            f"score width {width} too narrow: lengths {n}/{m} with this "
            f"scheme need {need} bits")
    return width


def signed_value(bits, width):
    return bits - (1 << width) if bits >> (width - 1) else bits


# ---------------------------------------------------------------------------
# Layout


SCORE_FIELDS = ("ad0", "ad1", "ad2", "egap", "fgap", "sigma", "maxs")


@dataclass(frozen=True)
class WavefrontLayout:
    """Field -> column assignment for the alignment datapath."""

    cmap: ColumnMap
    score_width: int
    symbol_bits: int

    def ad(self, i):
        return f"ad{i % 3}"

    def col(self, name):
        return self.cmap.col(name, 0)

    # condition tuples used all over the engine
    @property
    def in_wavefront(self):
        return ((self.col("wf"), 1), (self.col("buffer"), 0))

    @property
    def in_supply(self):
        return ((self.col("u"), 1), (self.col("buffer"), 0))

    @property
    def from_sd(self):
        return ((self.col("sd"), 1),)


def build_layout(scheme, score_width, eom=True, row_bits=256, subword_bits=32):
    s = scheme.alphabet.bits
    w = score_width
    fields = [Field("a_sym", s), Field("b_sym", s)]
    fields += [Field(name, w) for name in SCORE_FIELDS]
    fields += [Field(n, 1) for n in ("carry", "borrow", "lt", "mv",
                                     "first", "buffer", "last", "wf", "sd",
                                     "u", "head", "tail", "done")]
    fields.append(Field("meta", META_BITS))
    colocate = ([list(SCORE_FIELDS), ["a_sym", "b_sym"]] if eom else [])
    cmap = alloc(fields, colocate=colocate, eom=eom,
                 row_bits=row_bits, subword_bits=subword_bits)
    return WavefrontLayout(cmap, w, s)


@dataclass(frozen=True)
class SeqSpan:
    index: int
    start: int
    length: int
    buffer_row: int


@dataclass(frozen=True)
class DatabaseLayout:
    spans: tuple
    total_rows: int
    max_len: int
    chip_boundaries: tuple = ()

    @property
    def n_sequences(self):
        return len(self.spans)


def plan_database(seqs):
    spans = []
    row = 0
    for i, s in enumerate(seqs):
        if not s:
            raise ConfigurationError("sequences must be non-empty")
        spans.append(SeqSpan(i, row, len(s), row + len(s)))
        row += len(s) + 1
    return DatabaseLayout(tuple(spans), row, max(len(s) for s in seqs))


def init_database(array, layout, seqs):
    """Host-populate sequences, flags, and buffer-row metadata."""
    db = plan_database(seqs)
    if db.total_rows > array.rows:
        raise CapacityError(
            f"database needs {db.total_rows} rows; the array has {array.rows}")
    cm = layout.cmap
    for span, seq in zip(db.spans, seqs):
        for i, sym in enumerate(seq):
            if sym >= 1 << layout.symbol_bits:
                raise AlphabetError("symbol does not fit the layout encoding")
            array.write_field(span.start + i, cm.cols("a_sym"), sym)
        array.write_field(span.start, cm.cols("first"), 1)
        array.write_field(span.start + span.length - 1, cm.cols("last"), 1)
        array.write_field(span.buffer_row, cm.cols("buffer"), 1)
        array.write_field(span.buffer_row, cm.cols("meta"), span.index)
    return DatabaseLayout(db.spans, db.total_rows, db.max_len,
                          array.chip_boundaries)


def reset_program(layout):
    """Machine reset between queries: zero every transient column in one
    write, then rebuild the head marker from the first-row flags."""
    cm = layout.cmap
    prog = MicroProgram(cm.row_bits, cm.subword_bits)
    transient = list(SCORE_FIELDS) + ["b_sym", "carry", "borrow", "lt", "mv",
                                      "wf", "sd", "u", "head", "tail", "done"]
    broadcast_zero(cm, transient, prog=prog)
    c_first, c_head = layout.col("first"), layout.col("head")
    prog.cmp(1 << c_first, 1 << c_first).wr(1 << c_head, 1 << c_head)
    return prog


def reset_after_query(array, layout, ledger=None):
    """Public reset entry point; returns the cycle cost."""
    prog = reset_program(layout)
    execute(prog, array, ledger)
    return prog.cycle_count


# ---------------------------------------------------------------------------
# Engine


@dataclass
class IterationProfile:
    cycles: int
    compares: int
    writes: int
    shifts: int


@dataclass
class RunOutcome:
    scores: list
    argmax: int = None
    ranked: list = None
    mode: str = "local"
    iterations: int = 0
    cycles_per_iteration: int = 0
    iteration_profile: IterationProfile = None
    reduction_steps: int = 0
    cycles_per_reduction_step: int = 0
    setup_cycles: int = 0
    extraction_cycles: int = 0
    cell_updates: int = 0
    peak_power_w_per_chip: float = 0.0

    @property
    def score(self):
        return self.scores[0]

    @property
    def total_cycles(self):
        return (self.setup_cycles +
                self.iterations * self.cycles_per_iteration +
                self.reduction_steps * self.cycles_per_reduction_step +
                self.extraction_cycles)


class WavefrontEngine:
    """One database resident in one array, serving queries one at a time."""

    def __init__(self, scheme, seqs, mode="local", query_len=None,
                 score_width=None, eom=True, row_bits=256, subword_bits=32,
                 chip_rows=None, array=None, backend=None,
                 debug_overflow=False):
        if mode not in ("local", "global", "semi"):
            raise ConfigurationError(f"unknown alignment mode {mode!r}")
        self.debug_overflow = debug_overflow
        if mode in ("global", "semi") and len(seqs) != 1:
            raise ConfigurationError(
                f"{mode} alignment is a pairwise operation")
        self.scheme = scheme
        self.mode = mode
        self.seqs = [list(s) for s in seqs]
        db = plan_database(self.seqs)
        self.max_query_len = query_len if query_len is not None else db.max_len
        w = score_width if score_width is not None else required_score_width(
            db.max_len, self.max_query_len, scheme, mode)
        validate_score_width(db.max_len, self.max_query_len, scheme, w, mode)
        self.layout = build_layout(scheme, w, eom=eom, row_bits=row_bits,
                                   subword_bits=subword_bits)
        if array is None:
            bounds = ()
            if chip_rows:
                bounds = tuple(range(chip_rows, db.total_rows, chip_rows))
            array = CamArray(db.total_rows, row_bits, subword_bits,
                             chip_boundaries=bounds, backend=backend)
        self.array = array
        self.db = init_database(array, self.layout, self.seqs)
        self._reset = reset_program(self.layout)
        self._templates = None
        self._reduction = None

    # -- template construction -------------------------------------------

    def _iteration_template(self, phase):
        """Straight-line program for one iteration with AD roles fixed by
        ``phase`` = iteration mod 3. Returns (prog, patch slot dict)."""
        L, cm = self.layout, self.layout.cmap
        scheme, mode = self.scheme, self.mode
        right, middle, left = L.ad(phase), L.ad(phase - 1), L.ad(phase - 2)
        IN, SUP, SD = L.in_wavefront, L.in_supply, L.from_sd
        c = {n: L.col(n) for n in ("first", "buffer", "last", "wf", "sd",
                                   "u", "head", "tail")}
        prog = MicroProgram(cm.row_bits, cm.subword_bits)
        patches = {}

        # sd holds the supply set: the previous iteration's wavefront,
        # captured there before its trailing row retired. u adds the newly
        # activated head row (rows whose shifted-gap update must run).
        broadcast_value(cm, "u", 0, prog=prog)
        prog.cmp(1 << c["sd"], 1 << c["sd"]).wr(1 << c["u"], 1 << c["u"])
        prog.cmp(1 << c["head"], 1 << c["head"]).wr(1 << c["u"], 1 << c["u"])
        # extend the wavefront over the head row
        prog.cmp(1 << c["head"], 1 << c["head"]).wr(1 << c["wf"], 1 << c["wf"])
        # query slides one row down
        field_shift_down(cm, "b_sym", "b_sym", "mv",
                         src_flags=SD, recv_flags=IN, prog=prog)
        # next query symbol enters at still-active first rows (key patched)
        qcond = ((c["first"], 1), (c["wf"], 1))
        key = mask = 0
        for col, bit in qcond:
            mask |= 1 << col
            key |= bit << col
        prog.cmp(key, mask)
        prog.wr(0, cm.mask("b_sym"))
        patches["query_symbol"] = len(prog) - 1
        # tail marker arms at the first rows on iteration m-1 (key patched)
        prog.cmp(key, mask)
        prog.wr(0, 1 << c["tail"])
        patches["tail_arm"] = len(prog) - 1

        # diagonal antidiagonal slides down
        field_shift_down(cm, left, left, "mv",
                         src_flags=SD, recv_flags=IN, prog=prog)
        if mode == "global":
            # top boundary H[0, j] enters at the first row (keys patched)
            prog.cmp(key, mask)
            prog.wr(0, cm.mask(left))
            patches["bound_diag"] = len(prog) - 1

        # substitution scores
        match_score(cm, scheme, "a_sym", "b_sym", "sigma",
                    conditions=IN, prog=prog)
        # new antidiagonal = shifted diagonal + sigma
        broadcast_zero(cm, ("carry", "borrow"), prog=prog)
        vec_add(cm, left, "sigma", right, "carry", conditions=IN, prog=prog)

        if mode == "local":
            clamp_negative_to_zero(cm, right, conditions=IN, prog=prog)
            # scratch (reusing the retired AD column) = H[i, j-1] - g_first;
            # computed on the supply set so a just-retired row can still
            # feed the row below it.
            broadcast_zero(cm, ("borrow",), prog=prog)
            vec_sub_const(cm, middle, scheme.g_first, left, "borrow",
                          conditions=SUP, prog=prog)
            # E (in-place gap along the query direction)
            broadcast_zero(cm, ("borrow",), prog=prog)
            vec_sub_const(cm, "egap", scheme.g_ext, "egap", "borrow",
                          conditions=IN, prog=prog)
            vec_max(cm, "egap", left, "egap", "borrow", "lt",
                    conditions=IN, prog=prog)
            vec_max(cm, right, "egap", right, "borrow", "lt",
                    conditions=IN, prog=prog)
            # F (shifted gap along the database direction)
            broadcast_zero(cm, ("borrow",), prog=prog)
            vec_sub_const(cm, "fgap", scheme.g_ext, "fgap", "borrow",
                          conditions=SUP, prog=prog)
            vec_max(cm, "fgap", left, "fgap", "borrow", "lt",
                    conditions=SUP, prog=prog)
            field_shift_down(cm, "fgap", "fgap", "mv",
                             src_flags=SD, recv_flags=IN, prog=prog)
            vec_max(cm, right, "fgap", right, "borrow", "lt",
                    conditions=IN, prog=prog)
            # running per-row maximum
            vec_max(cm, "maxs", right, "maxs", "borrow", "lt",
                    conditions=IN, prog=prog)
        else:
            # linear-gap scoring: H = max(diag+sigma, up+d, left+d)
            field_shift_down(cm, middle, "fgap", "mv",
                             src_flags=SD, recv_flags=IN, prog=prog)
            if mode == "global":
                prog.cmp(key, mask)
                prog.wr(0, cm.mask("fgap"))
                patches["bound_up"] = len(prog) - 1
            broadcast_zero(cm, ("carry",), prog=prog)
            vec_add_const(cm, "fgap", scheme.gap_d, "fgap", "carry",
                          conditions=IN, prog=prog)
            vec_max(cm, right, "fgap", right, "borrow", "lt",
                    conditions=IN, prog=prog)
            broadcast_zero(cm, ("carry",), prog=prog)
            vec_add_const(cm, middle, scheme.gap_d, left, "carry",
                          conditions=IN, prog=prog)
            vec_max(cm, right, left, right, "borrow", "lt",
                    conditions=IN, prog=prog)
            if mode == "semi":
                # last column cells live on the retiring (tail) rows,
                # last row cells on the static last-flag row
                vec_max(cm, "maxs", right, "maxs", "borrow", "lt",
                        conditions=((c["tail"], 1),) + IN, prog=prog)
                vec_max(cm, "maxs", right, "maxs", "borrow", "lt",
                        conditions=((c["last"], 1),) + IN, prog=prog)

        # head advances; it dies on buffer rows
        field_shift_down(cm, "head", "head", "mv", prog=prog)
        prog.cmp((1 << c["head"]) | (1 << c["buffer"]),
                 (1 << c["head"]) | (1 << c["buffer"]))
        prog.wr(0, 1 << c["head"])
        # capture the supply set for the next iteration while the retiring
        # row is still flagged (it must source one more shift), then retire
        # it and advance the tail marker
        prog.cmp(1 << c["wf"], 1 << c["wf"]).wr(1 << c["sd"], 1 << c["sd"])
        prog.cmp(0, 1 << c["wf"]).wr(0, 1 << c["sd"])
        prog.cmp(1 << c["tail"], 1 << c["tail"]).wr(0, 1 << c["wf"])
        field_shift_down(cm, "tail", "tail", "mv", prog=prog)
        prog.cmp((1 << c["tail"]) | (1 << c["buffer"]),
                 (1 << c["tail"]) | (1 << c["buffer"]))
        prog.wr(0, 1 << c["tail"])
        prog.arrays()
        return prog, patches

    def _reduction_step_template(self):
        """One cascade step of the buffer-row max reduction."""
        L, cm = self.layout, self.layout.cmap
        c_wf, c_buf = L.col("wf"), L.col("buffer")
        prog = MicroProgram(cm.row_bits, cm.subword_bits)
        field_shift_down(cm, "sigma", "sigma", "mv",
                         src_flags=((c_wf, 1),), prog=prog)
        field_shift_down(cm, "wf", "wf", "mv", prog=prog)
        vec_max(cm, "sigma", "maxs", "sigma", "borrow", "lt",
                conditions=((c_wf, 1), (c_buf, 0)), prog=prog)
        vec_cond_copy(cm, "sigma", "maxs",
                      flags=((c_wf, 1), (c_buf, 1)), prog=prog)
        prog.cmp((1 << c_wf) | (1 << c_buf), (1 << c_wf) | (1 << c_buf))
        prog.wr(0, 1 << c_wf)
        prog.arrays()
        return prog

    def _reduction_init_template(self):
        L, cm = self.layout, self.layout.cmap
        c_first, c_wf = L.col("first"), L.col("wf")
        prog = MicroProgram(cm.row_bits, cm.subword_bits)
        prog.cmp(1 << c_first, 1 << c_first).wr(1 << c_wf, 1 << c_wf)
        vec_copy(cm, "maxs", "sigma", prog=prog)
        prog.arrays()
        return prog

    def templates(self):
        if self._templates is None:
            self._templates = [self._iteration_template(ph) for ph in range(3)]
            sizes = {len(t[0]) for t in self._templates}
            assert len(sizes) == 1, "iteration templates must be equal length"
        return self._templates

    def ad_roles(self, k):
        """(right, middle, left) antidiagonal indices at iteration k."""
        return (k % 3, (k - 1) % 3, (k - 2) % 3)

    # -- run ----------------------------------------------------------------

    def _global_preload(self):
        """Host-load the left boundary H[i, 0] = i*d into the AD column that
        will be read as the untouched neighbor when each row activates."""
        d = self.scheme.gap_d
        w = self.layout.score_width
        cm = self.layout.cmap
        for span in self.db.spans:
            for i in range(span.length):
                fld = self.layout.ad(i - 1)
                value = ((i + 1) * d) & ((1 << w) - 1)
                self.array.write_field(span.start + i, cm.cols(fld), value)

    def run(self, query, ledger=None, top_k=None):
        if not query:
            raise ConfigurationError("query must be non-empty")
        if len(query) > self.max_query_len:
            raise CapacityError(
                f"query of length {len(query)} exceeds the configured "
                f"maximum {self.max_query_len}")
        if any(s >= self.scheme.alphabet.size for s in query):
            raise AlphabetError("query symbol outside the scheme alphabet")
        ledger = ledger if ledger is not None else EnergyLedger()
        L, cm = self.layout, self.layout.cmap
        w = L.score_width
        m = len(query)
        d = self.scheme.gap_d
        chips = self.array.chips
        wmask = (1 << w) - 1

        setup = self._reset.cycle_count
        execute(self._reset, self.array, ledger)
        if self.mode == "global":
            self._global_preload()

        templates = self.templates()
        iterations = self.db.max_len + m - 1
        peak = 0.0
        profile = None
        for k in range(iterations):
            prog, patches = templates[k % 3]
            sym = query[k] if k < m else 0
            prog.set_key(patches["query_symbol"], cm.encode("b_sym", sym)[0])
            prog.set_key(patches["tail_arm"],
                         (1 << L.col("tail")) if k == m - 1 else 0)
            if self.mode == "global":
                prog.set_key(patches["bound_diag"],
                             cm.encode(L.ad(k - 2), (k * d) & wmask)[0])
                prog.set_key(patches["bound_up"],
                             cm.encode("fgap", ((k + 1) * d) & wmask)[0])
            before = ledger.snapshot()
            counts = execute(prog, self.array, ledger)
            if profile is None:
                profile = IterationProfile(len(prog), counts.compares,
                                           counts.writes, counts.shifts)
            peak = max(peak, _phase_power(before, ledger) / chips)
            if self.debug_overflow:
                self._assert_no_overflow(k, m)

        reduction_steps = 0
        red_cycles = 0
        if self.mode in ("local", "semi"):
            init = self._reduction_init_template()
            step = self._reduction_step_template()
            execute(init, self.array, ledger)
            for _ in range(self.db.max_len):
                before = ledger.snapshot()
                execute(step, self.array, ledger)
                peak = max(peak, _phase_power(before, ledger) / chips)
            reduction_steps = self.db.max_len
            red_cycles = len(step)
            setup += len(init)

        if self.mode in ("local", "semi"):
            scores = [signed_value(
                self.array.read_field(span.buffer_row, cm.cols("maxs")), w)
                for span in self.db.spans]
        else:
            span = self.db.spans[0]
            fld = self.layout.ad((iterations - 1) % 3)
            cell = span.start + span.length - 1
            scores = [signed_value(
                self.array.read_field(cell, cm.cols(fld)), w)]

        argmax = None
        extraction = 0
        ranked = None
        if self.mode == "local":
            row, extraction = self._probe_max(ledger)
            argmax = self._row_to_index(row)
            if top_k is not None:
                ranked, extra = self.top_k(top_k, ledger)
                extraction += extra

        return RunOutcome(
            scores=scores, argmax=argmax, ranked=ranked, mode=self.mode,
            iterations=iterations,
            cycles_per_iteration=len(templates[0][0]),
            iteration_profile=profile,
            reduction_steps=reduction_steps,
            cycles_per_reduction_step=red_cycles,
            setup_cycles=setup,
            extraction_cycles=extraction,
            cell_updates=sum(s.length for s in self.db.spans) * m,
            peak_power_w_per_chip=peak,
        )

    def _assert_no_overflow(self, k, m):
        """Debug tripwire: the freshly computed antidiagonal must stay
        inside the mathematical bound the width selection assumed; a value
        outside it can only come from a wrapped intermediate."""
        cm = self.layout.cmap
        w = self.layout.score_width
        fld = self.layout.ad(k)
        bound = score_bound(self.db.max_len, m, self.scheme, self.mode)
        for span in self.db.spans:
            lo = max(0, k - m + 1)
            hi = min(k, span.length - 1)
            for r in range(lo, hi + 1):
                v = signed_value(
                    self.array.read_field(span.start + r, cm.cols(fld)), w)
                if not -bound <= v <= bound:
                    raise ConfigurationError(
                        f"score overflow at iteration {k}, row "
                        f"{span.start + r}: {v} outside +-{bound}")

    # -- extraction ---------------------------------------------------------

    def _probe_max(self, ledger):
        """Bit-serial associative max search over the buffer rows' score
        field; returns (winner row, cycles). The tag flush between probes
        is a write with an empty mask (resets tags, stores nothing)."""
        L, cm = self.layout, self.layout.cmap
        w = L.score_width
        base_key = 1 << L.col("buffer")
        base_mask = (1 << L.col("buffer")) | (1 << L.col("done"))
        cols = cm.cols("maxs")
        value = 0
        cycles = 0
        key, mask = base_key, base_mask
        for bit in range(w - 1, -1, -1):
            want = 0 if bit == w - 1 else 1      # sign probes 0 first
            probe_key = key | (want << cols[bit])
            probe_mask = mask | (1 << cols[bit])
            count = self._recorded_compare(probe_key, probe_mask, ledger)
            self._flush_tags(ledger, count)
            cycles += 2
            got = want if count else 1 - want
            value |= got << bit
            key |= got << cols[bit]
            mask |= 1 << cols[bit]
        count = self._recorded_compare(key, mask, ledger)
        row = self.array.first_tagged_row()
        self._flush_tags(ledger, count)
        cycles += 2
        return row, cycles

    def _recorded_compare(self, key, mask, ledger):
        count = self.array.compare(key, mask)
        ledger.record_compare(count_active_subwords(mask, self.array.subword_bits),
                              count, self.array.rows - count, 0)
        return count

    def _flush_tags(self, ledger, tagged):
        self.array.write(0, 0)
        ledger.record_write(0, tagged)

    def _row_to_index(self, row):
        if row is None:
            return None
        return self.array.read_field(row, self.layout.cmap.cols("meta"))

    def top_k(self, k, ledger=None):
        """k highest buffer scores, descending, ties by row index.
        Repeats the max probe, retiring each winner via its done flag."""
        if k < 0 or k > self.db.n_sequences:
            raise ConfigurationError(
                f"top_k wants 0..{self.db.n_sequences} results")
        ledger = ledger if ledger is not None else EnergyLedger()
        cm = self.layout.cmap
        w = self.layout.score_width
        ranked = []
        cycles = 0
        for _ in range(k):
            row, c = self._probe_max(ledger)
            cycles += c
            idx = self._row_to_index(row)
            score = signed_value(self.array.read_field(row, cm.cols("maxs")), w)
            ranked.append((idx, score))
            self.array.write_field(row, cm.cols("done"), 1)
        # clear the done marks so the search stays repeatable
        for idx, _ in ranked:
            span = self.db.spans[idx]
            self.array.write_field(span.buffer_row, cm.cols("done"), 0)
        return ranked, cycles


def _phase_power(before, ledger):
    d_cyc = ledger.total_cycles - (before[0] + before[1] + before[2])
    d_bits = ledger.interdie_bits - before[3]
    d_e = ledger.total_energy_j - (before[4] + before[5] + before[6] + before[7])
    dt = (d_cyc * ledger.params.cycle_time_s +
          d_bits / ledger.params.interdie_bw_bit_s)
    return d_e / dt if dt > 0 else 0.0


# ---------------------------------------------------------------------------
# Public operations


def _empty_outcome(mode, score):
    return RunOutcome(scores=[score], mode=mode)


def _pairwise(a, b, scheme, mode, **kw):
    ledger = kw.pop("ledger", None)
    if not a or not b:
        if mode == "global":
            return _empty_outcome(mode, (len(a) + len(b)) * scheme.gap_d)
        return _empty_outcome(mode, 0)
    engine = WavefrontEngine(scheme, [a], mode=mode, query_len=len(b), **kw)
    return engine.run(b, ledger)


def align_pairwise_local(a, b, scheme, **kw):
    """Affine-gap local alignment score of a vs b on the simulated machine."""
    return _pairwise(a, b, scheme, "local", **kw)


def align_pairwise_global(a, b, scheme, **kw):
    """Linear-gap end-to-end alignment score."""
    return _pairwise(a, b, scheme, "global", **kw)


def align_semi_global(a, b, scheme, **kw):
    """Linear-gap score with free leading/trailing gaps."""
    return _pairwise(a, b, scheme, "semi", **kw)


def db_search(query, db, scheme, top_k=None, **kw):
    """Align one query against every stored sequence in parallel; returns
    the per-sequence scores, the argmax sequence, and optionally the
    top-k ranking."""
    ledger = kw.pop("ledger", None)
    engine = kw.pop("engine", None)
    if engine is None:
        engine = WavefrontEngine(scheme, db, mode="local",
                                 query_len=len(query), **kw)
    return engine.run(query, ledger, top_k=top_k)
