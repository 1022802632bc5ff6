"""Command-line front end.

Subcommands:

* ``align``    : pairwise alignment (local / global / semi) of the first
  records of two FASTA files, with optional oracle cross-check.
* ``search``   : align a query against every record of a database FASTA.
* ``microcode``: print baseline vs batched cycle counts (and optionally
  the full schedule dump) for a built-in or user-supplied truth table.
* ``report``   : render a JSON run report as a text summary.

Exit codes: 0 success; 2 bad input or configuration; 3 oracle mismatch
under ``--check-oracle`` (always fatal); 1 unexpected internal error.
Reports are canonical JSON (sorted keys, no timestamps), so identical
inputs produce byte-identical output.
"""

import argparse
import json
import os
import sys

from . import oracle
from .alignment import (PROTEIN, WavefrontEngine, dna_scheme,
                        encode_sequence, matrix_scheme, validate_score_width)
from .backend import backend_name
from .energy_model import EnergyLedger, report as make_report
from .errors import OracleMismatchError, SimulatorError
from .io_formats import (load_blosum62, matrix_for_alphabet, read_fasta,
                         read_matrix)
from .microcode import (BUILTIN_LOGIC_OPS, Field, Strategy, TruthTable, alloc,
                        builtin_table, match_score_table, schedule)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ORACLE = 3

_MODES = {"local": "local", "global": "global", "semi": "semi",
          "semi-global": "semi"}

_STRATEGIES = {s.value: s for s in Strategy}


def _add_scheme_args(p):
    p.add_argument("--match", type=int, default=2,
                   help="DNA match score (default +2)")
    p.add_argument("--mismatch", type=int, default=-1,
                   help="DNA mismatch score (default -1)")
    p.add_argument("--gap-open", type=int, default=2,
                   help="affine gap-open penalty (default 2)")
    p.add_argument("--gap-extend", type=int, default=1,
                   help="affine gap-extend penalty (default 1)")
    p.add_argument("--gap", type=int, default=-1, dest="gap_d",
                   help="linear gap score for global/semi-global (default -1)")
    p.add_argument("--matrix", metavar="FILE",
                   help="protein substitution matrix (NCBI format); "
                        "'blosum62' uses the packaged matrix")
    p.add_argument("--mask-ambiguous", action="store_true",
                   help="map non-ACGT DNA symbols to a mismatch-only symbol")


def _env_int(name, fallback):
    """Machine flags fall back to CAMALIGN_* environment overrides."""
    raw = os.environ.get(f"CAMALIGN_{name}")
    return int(raw) if raw else fallback


def _add_machine_args(p):
    p.add_argument("--row-bits", type=int,
                   default=_env_int("ROW_BITS", 256))
    p.add_argument("--subword-bits", type=int,
                   default=_env_int("SUBWORD_BITS", 32))
    p.add_argument("--chip-rows", type=int,
                   default=_env_int("CHIP_ROWS", None),
                   help="rows per simulated die (default: one die)")
    p.add_argument("--score-width", type=int,
                   default=_env_int("SCORE_WIDTH", None),
                   help="score field width in bits (validated up front)")
    p.add_argument("--no-eom", dest="eom", action="store_false",
                   help="disable efficient operand mapping")


def make_parser():
    ap = argparse.ArgumentParser(
        prog="camalign",
        description="Associative-processor alignment simulator")
    sub = ap.add_subparsers(dest="command", required=True)

    al = sub.add_parser("align", help="pairwise alignment of two FASTA files")
    al.add_argument("file_a")
    al.add_argument("file_b")
    al.add_argument("--mode", choices=sorted(_MODES), default="local")
    al.add_argument("--check-oracle", action="store_true",
                    help="cross-check against the DP oracle (mismatch is fatal)")
    al.add_argument("--engine", choices=("machine", "oracle"), default="machine",
                    help="compute on the simulated machine or the oracle only")
    al.add_argument("--oracle", dest="engine", action="store_const",
                    const="oracle", help="shorthand for --engine oracle")
    al.add_argument("--json", metavar="PATH", help="write the JSON report here")
    _add_scheme_args(al)
    _add_machine_args(al)

    se = sub.add_parser("search", help="query vs database search")
    se.add_argument("query")
    se.add_argument("database")
    se.add_argument("--top-k", type=int, default=None)
    se.add_argument("--check-oracle", action="store_true")
    se.add_argument("--json", metavar="PATH")
    _add_scheme_args(se)
    _add_machine_args(se)

    mc = sub.add_parser("microcode",
                        help="cycle table / schedule dump for an operation")
    mc.add_argument("op",
                    help=f"one of {', '.join(BUILTIN_LOGIC_OPS)}, dna-match, "
                         "blosum62-match, or a truth-table file")
    mc.add_argument("--strategy", choices=sorted(_STRATEGIES),
                    help="override the batched strategy")
    mc.add_argument("--dump", action="store_true",
                    help="print the batched schedule ops")
    mc.add_argument("--json", metavar="PATH")
    mc.add_argument("--score-width", type=int, default=8,
                    help="output width for the match-score ops")

    rp = sub.add_parser("report", help="summarize a JSON run report")
    rp.add_argument("path")
    return ap


def _build_scheme(args, seq_texts):
    if args.matrix:
        if args.matrix.lower() == "blosum62":
            symbols, table = load_blosum62()
        else:
            symbols, table = read_matrix(args.matrix)
        matrix = matrix_for_alphabet(symbols, table, PROTEIN)
        return matrix_scheme(matrix, g_first=args.gap_open,
                             g_ext=args.gap_extend, gap_d=args.gap_d)
    return dna_scheme(match=args.match, mismatch=args.mismatch,
                      g_first=args.gap_open, g_ext=args.gap_extend,
                      gap_d=args.gap_d)


def _encode_all(args, scheme, texts):
    alphabet = scheme.alphabet
    encoded = []
    for t in texts:
        seq, alphabet = encode_sequence(t, alphabet,
                                        mask_ambiguous=args.mask_ambiguous)
        encoded.append(seq)
    if alphabet is not scheme.alphabet:  # DNA promoted to the masked alphabet
        scheme = dna_scheme(match=args.match, mismatch=args.mismatch,
                            g_first=args.gap_open, g_ext=args.gap_extend,
                            gap_d=args.gap_d, alphabet=alphabet)
        encoded = [encode_sequence(t, alphabet, mask_ambiguous=True)[0]
                   for t in texts]
    return scheme, encoded


def _machine_doc(args, engine=None):
    doc = {"row_bits": args.row_bits, "subword_bits": args.subword_bits,
           "chip_rows": args.chip_rows, "eom": args.eom,
           "backend": backend_name()}
    if engine is not None:
        doc["rows"] = engine.array.rows
        doc["score_width"] = engine.layout.score_width
        doc["chips"] = engine.array.chips
    return doc


def _emit(doc, path):
    text = json.dumps(doc, sort_keys=True, indent=2)
    if path:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(text + "\n")
    return text


def _oracle_scores(mode, db, query, scheme):
    fn = {"local": oracle.sw_local, "global": oracle.nw_global,
          "semi": oracle.semi_global}[mode]
    return [fn(s, query, scheme).score for s in db]


def cmd_align(args):
    rec_a = read_fasta(args.file_a)[0]
    rec_b = read_fasta(args.file_b)[0]
    mode = _MODES[args.mode]
    scheme, (a, b) = _encode_all(args, _build_scheme(args, None),
                                 [rec_a.sequence, rec_b.sequence])
    if args.score_width is not None:
        validate_score_width(len(a), len(b), scheme, args.score_width, mode)

    doc = {"command": "align", "mode": mode,
           "a": {"name": rec_a.name, "length": len(a)},
           "b": {"name": rec_b.name, "length": len(b)},
           "scheme": {"g_first": scheme.g_first, "g_ext": scheme.g_ext,
                      "gap_d": scheme.gap_d,
                      "alphabet": scheme.alphabet.name}}

    if args.engine == "oracle":
        score = _oracle_scores(mode, [a], b, scheme)[0]
        doc.update(score=score, engine="oracle")
        print(_emit(doc, args.json))
        return EXIT_OK

    ledger = EnergyLedger()
    engine = WavefrontEngine(scheme, [a], mode=mode, query_len=len(b),
                             score_width=args.score_width, eom=args.eom,
                             row_bits=args.row_bits,
                             subword_bits=args.subword_bits,
                             chip_rows=args.chip_rows)
    out = engine.run(b, ledger)
    rep = make_report(ledger, cell_updates=out.cell_updates,
                      peak_power_w_per_chip=out.peak_power_w_per_chip)
    doc.update(score=out.score, engine="machine",
               machine=_machine_doc(args, engine),
               run=rep.to_dict(),
               stats={"iterations": out.iterations,
                      "cycles_per_iteration": out.cycles_per_iteration,
                      "reduction_steps": out.reduction_steps,
                      "cycles_per_reduction_step": out.cycles_per_reduction_step,
                      "setup_cycles": out.setup_cycles,
                      "extraction_cycles": out.extraction_cycles})
    if args.check_oracle:
        want = _oracle_scores(mode, [a], b, scheme)[0]
        doc["oracle_score"] = want
        if want != out.score:
            print(_emit(doc, args.json))
            raise OracleMismatchError(
                f"machine scored {out.score}, oracle says {want}")
    print(_emit(doc, args.json))
    return EXIT_OK


def cmd_search(args):
    q_rec = read_fasta(args.query)[0]
    db_recs = read_fasta(args.database)
    scheme, encoded = _encode_all(args, _build_scheme(args, None),
                                  [q_rec.sequence] + [r.sequence for r in db_recs])
    query, db = encoded[0], encoded[1:]
    if args.score_width is not None:
        n = max(len(s) for s in db)
        validate_score_width(n, len(query), scheme, args.score_width)

    ledger = EnergyLedger()
    engine = WavefrontEngine(scheme, db, mode="local", query_len=len(query),
                             score_width=args.score_width, eom=args.eom,
                             row_bits=args.row_bits,
                             subword_bits=args.subword_bits,
                             chip_rows=args.chip_rows)
    k = args.top_k if args.top_k is not None else min(3, len(db))
    out = engine.run(query, ledger, top_k=k)
    rep = make_report(ledger, cell_updates=out.cell_updates,
                      peak_power_w_per_chip=out.peak_power_w_per_chip)
    ranks = {idx: r for r, (idx, _) in enumerate(out.ranked, start=1)}
    table = [{"index": i, "id": db_recs[i].name, "score": s,
              "rank": ranks.get(i)}
             for i, s in enumerate(out.scores)]
    doc = {"command": "search", "query": {"name": q_rec.name,
                                          "length": len(query)},
           "database": {"sequences": len(db),
                        "rows": engine.array.rows},
           "scores": table,
           "argmax": out.argmax,
           "top_k": [{"index": i, "id": db_recs[i].name, "score": s}
                     for i, s in out.ranked],
           "machine": _machine_doc(args, engine),
           "run": rep.to_dict()}
    if args.check_oracle:
        want = _oracle_scores("local", db, query, scheme)
        doc["oracle_scores"] = want
        if want != out.scores:
            print(_emit(doc, args.json))
            raise OracleMismatchError("database scores diverged from the oracle")
    print(_emit(doc, args.json))
    return EXIT_OK


def _table_from_file(path):
    entries = []
    default = None
    with open(path, "r", encoding="ascii") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if parts[0] == "default":
                default = parts[1]
                continue
            if len(parts) != 2:
                raise SimulatorError(f"{path}: expected '<inputs> <outputs>'")
            entries.append((parts[0], parts[1]))
    if not entries:
        raise SimulatorError(f"{path}: no table entries")
    n_in, n_out = len(entries[0][0]), len(entries[0][1])
    fields = [Field("in", n_in), Field("out", n_out)]
    tt = TruthTable(tuple(("in", i) for i in range(n_in)),
                    tuple(("out", i) for i in range(n_out)),
                    tuple(entries), default=default)
    return fields, tt, Strategy.BASELINE, Strategy.AUTO


def _microcode_subject(args):
    name = args.op
    if name in BUILTIN_LOGIC_OPS:
        return builtin_table(name)
    if name == "dna-match":
        scheme = dna_scheme()
        fields = [Field("a_sym", 2), Field("b_sym", 2),
                  Field("score", args.score_width)]
        tt = match_score_table(scheme, "a_sym", "b_sym", "score",
                               args.score_width)
        return fields, tt, Strategy.BASELINE, Strategy.BATCH_DEFAULT_WRITE
    if name == "blosum62-match":
        symbols, table = load_blosum62()
        scheme = matrix_scheme(matrix_for_alphabet(symbols, table, PROTEIN))
        fields = [Field("a_sym", 5), Field("b_sym", 5),
                  Field("score", args.score_width)]
        tt = match_score_table(scheme, "a_sym", "b_sym", "score",
                               args.score_width)
        return fields, tt, Strategy.BASELINE, Strategy.BATCH_GROUPED
    return _table_from_file(name)


def cmd_microcode(args):
    fields, tt, base_strategy, batch_strategy = _microcode_subject(args)
    if args.strategy:
        batch_strategy = _STRATEGIES[args.strategy]
    cmap = alloc(fields, row_bits=256)
    base = schedule(tt, base_strategy, cmap)
    batched = schedule(tt, batch_strategy, cmap)
    doc = {"command": "microcode", "op": args.op,
           "baseline": {"strategy": base_strategy.value,
                        "cycles": base.cycle_count},
           "batched": {"strategy": batch_strategy.value,
                       "cycles": batched.cycle_count},
           "entries": len(tt.entries),
           "distinct_outputs": len(tt.groups())}
    print(f"{args.op}: baseline {base.cycle_count}, "
          f"batched {batched.cycle_count}")
    if args.dump:
        print(batched.dump(cmap))
    if args.json:
        _emit(doc, args.json)
    return EXIT_OK


def cmd_report(args):
    with open(args.path, "r", encoding="ascii") as fh:
        doc = json.load(fh)
    run = doc.get("run", doc)
    lines = [f"command: {doc.get('command', '?')}"]
    if "score" in doc:
        lines.append(f"score: {doc['score']}")
    if "argmax" in doc:
        lines.append(f"best sequence: {doc['argmax']}")
    cyc = run.get("cycles", {})
    lines.append(f"cycles: {run.get('total_cycles', '?')} "
                 f"(compare {cyc.get('compare', '?')}, "
                 f"write {cyc.get('write', '?')}, shift {cyc.get('shift', '?')})")
    if "runtime_s" in run:
        lines.append(f"runtime: {run['runtime_s']:.3e} s")
        lines.append(f"energy: {run.get('total_energy_j', 0.0):.3e} J")
        lines.append(f"CUPS: {run.get('cups', 0.0):.3e}")
        lines.append(f"peak power/chip: "
                     f"{run.get('peak_power_w_per_chip', 0.0):.3e} W")
    print("\n".join(lines))
    return EXIT_OK


def main(argv=None):
    args = make_parser().parse_args(argv)
    handlers = {"align": cmd_align, "search": cmd_search,
                "microcode": cmd_microcode, "report": cmd_report}
    try:
        return handlers[args.command](args)
    except OracleMismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except (SimulatorError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
