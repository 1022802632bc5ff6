"""Cycle and energy accounting.

Per-row compare energy depends on how many sub-words precharge: it is
interpolated linearly between the measured one-sub-word minimum and the
all-sub-words maximum (10-19 fJ for a matching row, 0.35-11 fJ for a
mismatching one). Rows whose batch-write tag is already set skip the
precharge entirely and cost nothing for the rest of the compare burst.
Writes cost 206 fJ per bit per tagged row, tag shifts 217 fJ per row,
and every shift moves one bit over each die boundary at 1 nJ/bit with a
500 Mbit/s per-die link.

A ledger is a plain sum of per-event contributions, so merging ledgers
from independent arrays is associative and order-free.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

FJ = 1e-15


@dataclass(frozen=True)
class EnergyParams:
    cycle_time_s: float = 2e-9
    compare_match_min_fj: float = 10.0    # all active columns in one sub-word
    compare_match_max_fj: float = 19.0    # spread over every sub-word
    compare_mismatch_min_fj: float = 0.35
    compare_mismatch_max_fj: float = 11.0
    write_bit_fj: float = 206.0
    shift_row_fj: float = 217.0
    interdie_bit_j: float = 1e-9
    interdie_bw_bit_s: float = 500e6
    subwords_per_row: int = 8

    def __post_init__(self):
        values = (self.cycle_time_s, self.compare_match_min_fj,
                  self.compare_match_max_fj, self.compare_mismatch_min_fj,
                  self.compare_mismatch_max_fj, self.write_bit_fj,
                  self.shift_row_fj, self.interdie_bit_j,
                  self.interdie_bw_bit_s)
        if any(v <= 0 for v in values):
            raise ConfigurationError("energy constants must be positive")
        if (self.compare_match_max_fj < self.compare_match_min_fj or
                self.compare_mismatch_max_fj < self.compare_mismatch_min_fj):
            raise ConfigurationError("compare energy anchors must be monotone")

    def _interp(self, lo, hi, active):
        a = min(max(active, 1), self.subwords_per_row)
        return lo + (hi - lo) * (a - 1) / (self.subwords_per_row - 1)

    def compare_match_fj(self, active_subwords):
        return self._interp(self.compare_match_min_fj,
                            self.compare_match_max_fj, active_subwords)

    def compare_mismatch_fj(self, active_subwords):
        return self._interp(self.compare_mismatch_min_fj,
                            self.compare_mismatch_max_fj, active_subwords)


@dataclass
class LedgerEvent:
    kind: str
    active_subwords: int = 0
    matched: int = 0
    mismatched: int = 0
    blocked: int = 0
    bits: int = 0
    rows: int = 0
    crossings: int = 0


class EnergyLedger:
    """Running cycle/energy totals for one array."""

    def __init__(self, params=None, log_events=False):
        self.params = params if params is not None else EnergyParams()
        self.log_events = log_events
        self.events = []
        self.compares = 0
        self.writes = 0
        self.shifts = 0
        self.interdie_bits = 0
        self.compare_j = 0.0
        self.write_j = 0.0
        self.shift_j = 0.0
        self.interdie_j = 0.0

    # single-event interface -----------------------------------------------

    def record_compare(self, active_subwords, matched, mismatched, blocked=0):
        if min(matched, mismatched, blocked) < 0:
            raise ConfigurationError("row counts must be non-negative")
        p = self.params
        self.compares += 1
        self.compare_j += FJ * (
            matched * p.compare_match_fj(active_subwords) +
            mismatched * p.compare_mismatch_fj(active_subwords))
        if self.log_events:
            self.events.append(LedgerEvent(
                "compare", active_subwords, matched, mismatched, blocked))

    def record_write(self, bits, tagged_rows):
        if bits < 0 or tagged_rows < 0:
            raise ConfigurationError("write counts must be non-negative")
        self.writes += 1
        self.write_j += FJ * self.params.write_bit_fj * bits * tagged_rows
        if self.log_events:
            self.events.append(LedgerEvent("write", bits=bits, rows=tagged_rows))

    def record_shift(self, rows, boundary_crossings=0):
        if rows < 0 or boundary_crossings < 0:
            raise ConfigurationError("shift counts must be non-negative")
        self.shifts += 1
        self.interdie_bits += boundary_crossings
        self.shift_j += FJ * self.params.shift_row_fj * rows
        self.interdie_j += self.params.interdie_bit_j * boundary_crossings
        if self.log_events:
            self.events.append(LedgerEvent(
                "shift", rows=rows, crossings=boundary_crossings))

    # bulk interface used by microcode.execute ------------------------------

    def absorb_ops(self, kinds, active, matched, mismatched, blocked,
                   write_bits, written, rows, n_boundaries):
        p = self.params
        is_cmp = kinds == 0
        is_wr = kinds == 1
        is_sh = kinds == 2
        n_sh = int(is_sh.sum())
        a = np.clip(active[is_cmp], 1, p.subwords_per_row).astype(np.float64)
        frac = (a - 1.0) / (p.subwords_per_row - 1)
        e_match = p.compare_match_min_fj + frac * (
            p.compare_match_max_fj - p.compare_match_min_fj)
        e_miss = p.compare_mismatch_min_fj + frac * (
            p.compare_mismatch_max_fj - p.compare_mismatch_min_fj)
        self.compares += int(is_cmp.sum())
        self.compare_j += FJ * float(
            (matched[is_cmp] * e_match + mismatched[is_cmp] * e_miss).sum())
        self.writes += int(is_wr.sum())
        self.write_j += FJ * p.write_bit_fj * float(
            (write_bits[is_wr] * written[is_wr]).sum())
        self.shifts += n_sh
        self.shift_j += FJ * p.shift_row_fj * rows * n_sh
        self.interdie_bits += n_sh * n_boundaries
        self.interdie_j += p.interdie_bit_j * n_sh * n_boundaries
        if self.log_events:
            for i in range(len(kinds)):
                if kinds[i] == 0:
                    self.events.append(LedgerEvent(
                        "compare", int(active[i]), int(matched[i]),
                        int(mismatched[i]), int(blocked[i])))
                elif kinds[i] == 1:
                    self.events.append(LedgerEvent(
                        "write", bits=int(write_bits[i]), rows=int(written[i])))
                else:
                    self.events.append(LedgerEvent(
                        "shift", rows=rows, crossings=n_boundaries))

    # aggregation -----------------------------------------------------------

    @property
    def total_cycles(self):
        return self.compares + self.writes + self.shifts

    @property
    def total_energy_j(self):
        return self.compare_j + self.write_j + self.shift_j + self.interdie_j

    def merge(self, other):
        """Add another ledger's totals into this one (associative)."""
        self.compares += other.compares
        self.writes += other.writes
        self.shifts += other.shifts
        self.interdie_bits += other.interdie_bits
        self.compare_j += other.compare_j
        self.write_j += other.write_j
        self.shift_j += other.shift_j
        self.interdie_j += other.interdie_j
        if self.log_events:
            self.events.extend(other.events)
        return self

    def snapshot(self):
        return (self.compares, self.writes, self.shifts, self.interdie_bits,
                self.compare_j, self.write_j, self.shift_j, self.interdie_j)

    def recompute_from_events(self):
        """Independent re-summation of the event log (testing hook)."""
        if not self.log_events:
            raise ConfigurationError("event logging is disabled")
        fresh = EnergyLedger(self.params)
        for ev in self.events:
            if ev.kind == "compare":
                fresh.record_compare(ev.active_subwords, ev.matched,
                                     ev.mismatched, ev.blocked)
            elif ev.kind == "write":
                fresh.record_write(ev.bits, ev.rows)
            else:
                fresh.record_shift(ev.rows, ev.crossings)
        return fresh


@dataclass
class RunReport:
    """Wall-model summary of one run."""

    compares: int
    writes: int
    shifts: int
    interdie_bits: int
    compare_j: float
    write_j: float
    shift_j: float
    interdie_j: float
    cycle_time_s: float
    interdie_bw_bit_s: float = 500e6
    cell_updates: int = 0
    peak_power_w_per_chip: float = 0.0

    @property
    def total_cycles(self):
        return self.compares + self.writes + self.shifts

    @property
    def runtime_s(self):
        return (self.total_cycles * self.cycle_time_s +
                self.interdie_bits / self.interdie_bw_bit_s)

    @property
    def total_energy_j(self):
        return self.compare_j + self.write_j + self.shift_j + self.interdie_j

    @property
    def avg_power_w(self):
        rt = self.runtime_s
        return self.total_energy_j / rt if rt else 0.0

    @property
    def cups(self):
        rt = self.runtime_s
        return self.cell_updates / rt if rt else 0.0

    def to_dict(self):
        return {
            "cycles": {"compare": self.compares, "write": self.writes,
                       "shift": self.shifts},
            "total_cycles": self.total_cycles,
            "energy_j": {"compare": self.compare_j, "write": self.write_j,
                         "shift": self.shift_j, "interdie": self.interdie_j},
            "total_energy_j": self.total_energy_j,
            "interdie_bits": self.interdie_bits,
            "runtime_s": self.runtime_s,
            "avg_power_w": self.avg_power_w,
            "cell_updates": self.cell_updates,
            "cups": self.cups,
            "peak_power_w_per_chip": self.peak_power_w_per_chip,
        }

    def to_json(self, **extra):
        doc = dict(self.to_dict(), **extra)
        return json.dumps(doc, sort_keys=True, indent=2)


def report(ledger, cell_updates=0, peak_power_w_per_chip=0.0):
    """Freeze a ledger into a RunReport."""
    return RunReport(
        compares=ledger.compares, writes=ledger.writes, shifts=ledger.shifts,
        interdie_bits=ledger.interdie_bits,
        compare_j=ledger.compare_j, write_j=ledger.write_j,
        shift_j=ledger.shift_j, interdie_j=ledger.interdie_j,
        cycle_time_s=ledger.params.cycle_time_s,
        interdie_bw_bit_s=ledger.params.interdie_bw_bit_s,
        cell_updates=cell_updates,
        peak_power_w_per_chip=peak_power_w_per_chip,
    )
