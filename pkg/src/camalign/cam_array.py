"""Cycle-level model of the resistive CAM array.

The machine state is a matrix of stored bits plus one batch-write tag
latch per row. Three cycle types exist:

* ``compare``: every row whose unmasked bits equal the key is tagged;
  results OR into the existing tags, so a burst of compares accumulates.
  Rows already tagged skip the precharge (they cost no compare energy).
* ``write``  : key bits land in the unmasked columns of every tagged
  row, then all tags reset.
* ``shift_tags``: the tag vector moves one row down; row 0 receives 0.
  Each shift moves one bit across every chip boundary of the daisy chain.

Keys and masks are plain ints, bit i = column i (LSB first). A set mask
bit marks an active (unmasked) column; masked-out columns match anything,
so a compare with mask 0 tags every row.

Host access (``load_rows`` / ``read_field`` / ``read_row`` /
``first_tagged_row``) bypasses the cycle machine and never touches tags;
it models the controller's out-of-band access path.

One array is a strictly sequential cycle machine: callers must serialize
operations on it. Distinct arrays share no state and may be driven from
different threads.
"""

import numpy as np

from .backend import DEFAULT as _default_backend
from .errors import ConfigurationError

WORD_BITS = 64


def pack_words(value, words):
    """Int -> little-endian uint64 word vector."""
    out = np.empty(words, dtype=np.uint64)
    m = (1 << WORD_BITS) - 1
    for w in range(words):
        out[w] = (value >> (w * WORD_BITS)) & m
    return out


def unpack_words(vec):
    value = 0
    for w in range(len(vec) - 1, -1, -1):
        value = (value << WORD_BITS) | int(vec[w])
    return value


class CamArray:
    """A CAM of ``rows`` word-rows, each ``row_bits`` wide.

    ``subword_bits`` only influences energy accounting (which sub-words
    precharge), never match results. ``chip_boundaries`` lists the row
    indices that start a new die; shift-down traffic across them is
    reported per cycle for inter-die cost accounting.
    """

    def __init__(self, rows, row_bits=256, subword_bits=32,
                 chip_boundaries=(), backend=None):
        if rows <= 0:
            raise ConfigurationError("array needs at least one row")
        if row_bits <= 0 or row_bits % subword_bits:
            raise ConfigurationError(
                f"row_bits {row_bits} must be a positive multiple of "
                f"subword_bits {subword_bits}")
        if row_bits % WORD_BITS:
            raise ConfigurationError(
                f"row_bits {row_bits} must be a multiple of {WORD_BITS}")
        bounds = sorted(set(chip_boundaries))
        if bounds and (bounds[0] <= 0 or bounds[-1] >= rows):
            raise ConfigurationError(
                "chip boundaries must lie strictly inside the row range")
        self.rows = rows
        self.row_bits = row_bits
        self.subword_bits = subword_bits
        self.subwords = row_bits // subword_bits
        self.words = row_bits // WORD_BITS
        self.chip_boundaries = tuple(bounds)
        self.stored = np.zeros((rows, self.words), dtype=np.uint64)
        self.tags = np.zeros(rows, dtype=np.uint8)
        self._kernel = backend if backend is not None else _default_backend
        self._limit = 1 << row_bits

    @property
    def chips(self):
        return len(self.chip_boundaries) + 1

    def _check_pattern(self, value, what):
        if not 0 <= value < self._limit:
            raise ConfigurationError(
                f"{what} does not fit a {self.row_bits}-bit row")
        return pack_words(value, self.words)

    # -- cycle machine ----------------------------------------------------

    def compare(self, key, mask):
        """Compare cycle. Returns the number of tagged rows afterwards."""
        kw = self._check_pattern(key, "key")
        mw = self._check_pattern(mask, "mask")
        matched, _, blocked = self._kernel.compare(self.stored, self.tags, kw, mw)
        return matched + blocked

    def write(self, key, mask):
        """Write cycle. Returns the number of rows written."""
        kw = self._check_pattern(key, "key")
        mw = self._check_pattern(mask, "mask")
        return self._kernel.write(self.stored, self.tags, kw, mw)

    def shift_tags(self):
        """Shift-down cycle on the tag chain. Returns the number of
        inter-die bit transfers (one per chip boundary)."""
        self._kernel.shift_tags(self.tags)
        return len(self.chip_boundaries)

    # -- host access (no cycles, no tag effects) --------------------------

    def load_rows(self, start, values):
        if start < 0 or start + len(values) > self.rows:
            raise ConfigurationError("row range out of bounds")
        for i, v in enumerate(values):
            self.stored[start + i] = self._check_pattern(v, "row value")

    def read_row(self, row):
        if not 0 <= row < self.rows:
            raise ConfigurationError(f"row {row} out of range")
        return unpack_words(self.stored[row])

    def read_field(self, row, columns):
        """Gather the given columns (LSB first) of one row into an int."""
        raw = self.read_row(row)
        out = 0
        for i, col in enumerate(columns):
            out |= ((raw >> col) & 1) << i
        return out

    def write_field(self, row, columns, value):
        """Host store of a field value into one row (init/reset path)."""
        raw = self.read_row(row)
        for i, col in enumerate(columns):
            raw &= ~(1 << col)
            raw |= ((value >> i) & 1) << col
        self.stored[row] = pack_words(raw, self.words)

    def first_tagged_row(self):
        """Priority-encoded lowest tagged row, or None."""
        hits = np.flatnonzero(self.tags)
        return int(hits[0]) if hits.size else None

    def tag_vector(self):
        return self.tags.copy()

    @property
    def precharge_blocked(self):
        """Per-row precharge-block state; held exactly while the tag is set."""
        return self.tags != 0

    def dump(self):
        """Debug dump: one line per row, `row_index | hex | tag`."""
        digits = self.row_bits // 4
        return "\n".join(
            f"{r} | {self.read_row(r):0{digits}x} | {int(self.tags[r])}"
            for r in range(self.rows))
