import pytest

from camalign import (AlphabetError, CamArray, CapacityError,
                      ConfigurationError, EnergyLedger, DNA, DNA_MASKED,
                      PROTEIN, WavefrontEngine, align_pairwise_global,
                      align_pairwise_local, align_semi_global, db_search,
                      dna_scheme, encode_sequence, matrix_scheme, oracle,
                      required_score_width, reset_after_query)
from camalign.alignment import (build_layout, init_database, plan_database,
                                validate_score_width)
from camalign.io_formats import load_blosum62, matrix_for_alphabet

SCHEME = dna_scheme()


def enc(s):
    return encode_sequence(s, DNA)[0]


class TestPairwiseExamples:
    def test_perfect_match(self):
        assert align_pairwise_local(enc("ACGT"), enc("ACGT"), SCHEME).score == 8

    def test_hand_checked_local(self):
        assert align_pairwise_local(enc("ACGT"), enc("AGGT"), SCHEME).score == 5

    def test_all_mismatch_floors_at_zero(self):
        assert align_pairwise_local(enc("A"), enc("C"), SCHEME).score == 0

    def test_global_examples(self):
        assert align_pairwise_global([], [], SCHEME).score == 0
        assert align_pairwise_global(enc("AC"), enc("AC"), SCHEME).score == 4
        assert align_pairwise_global(enc("AACGT"), enc("ACGT"),
                                     SCHEME).score == 7

    def test_semi_global_contained_read(self):
        assert align_semi_global(enc("TTTTACGTTTTT"), enc("ACGT"),
                                 SCHEME).score == 8

    def test_empty_inputs(self):
        assert align_pairwise_local([], enc("AC"), SCHEME).score == 0
        assert align_semi_global(enc("AC"), [], SCHEME).score == 0
        assert align_pairwise_global([], enc("ACG"), SCHEME).score == -3


class TestRandomOracleEquivalence:
    def test_dna_random_pairs(self, rng):
        for _ in range(12):
            a = [rng.randrange(4) for _ in range(rng.randint(1, 40))]
            b = [rng.randrange(4) for _ in range(rng.randint(1, 40))]
            ge = rng.randint(0, 4)
            sch = dna_scheme(match=rng.randint(1, 6),
                             mismatch=-rng.randint(1, 6),
                             g_first=rng.randint(ge, 6), g_ext=ge,
                             gap_d=-rng.randint(0, 5))
            assert (align_pairwise_local(a, b, sch).score ==
                    oracle.sw_local(a, b, sch).score)
            assert (align_pairwise_global(a, b, sch).score ==
                    oracle.nw_global(a, b, sch).score)
            assert (align_semi_global(a, b, sch).score ==
                    oracle.semi_global(a, b, sch).score)

    def test_protein_pair(self, rng):
        symbols, table = load_blosum62()
        sch = matrix_scheme(matrix_for_alphabet(symbols, table, PROTEIN))
        for _ in range(3):
            a = [rng.randrange(23) for _ in range(rng.randint(1, 24))]
            b = [rng.randrange(23) for _ in range(rng.randint(1, 24))]
            assert (align_pairwise_local(a, b, sch).score ==
                    oracle.sw_local(a, b, sch).score)

    def test_masked_dna_never_matches_itself(self):
        seq, alphabet = encode_sequence("ACGNNT", DNA, mask_ambiguous=True)
        assert alphabet is DNA_MASKED
        sch = dna_scheme(alphabet=DNA_MASKED)
        out = align_pairwise_local(seq, seq, sch)
        # the two N positions mismatch even against themselves
        assert out.score == oracle.sw_local(seq, seq, sch).score < 12


class TestDatabaseSearch:
    def test_two_sequence_example(self):
        out = db_search(enc("ACGT"), [enc("ACGT"), enc("TTTT")], SCHEME,
                        top_k=2)
        assert out.scores == [8, 2]
        assert out.argmax == 0
        assert out.ranked == [(0, 8), (1, 2)]

    def test_identical_copy_wins_with_2m_score(self):
        q = enc("ACGTA")
        out = db_search(q, [enc("GGGGG"), q], SCHEME)
        assert out.scores[1] == 2 * len(q)
        assert out.argmax == 1

    def test_tie_breaks_to_lowest_index(self):
        q = enc("ACG")
        out = db_search(q, [q, q, q], SCHEME, top_k=3)
        assert out.argmax == 0
        assert out.ranked == [(0, 6), (1, 6), (2, 6)]

    def test_scores_match_oracle(self, rng):
        for _ in range(4):
            db = [[rng.randrange(4) for _ in range(rng.randint(1, 24))]
                  for _ in range(rng.randint(1, 10))]
            q = [rng.randrange(4) for _ in range(rng.randint(1, 20))]
            out = db_search(q, db, SCHEME, top_k=len(db))
            want = [oracle.sw_local(s, q, SCHEME).score for s in db]
            assert out.scores == want
            order = sorted(range(len(db)), key=lambda i: (-want[i], i))
            assert out.ranked == [(i, want[i]) for i in order]

    def test_single_sequence_equals_pairwise(self, rng):
        a = [rng.randrange(4) for _ in range(17)]
        b = [rng.randrange(4) for _ in range(11)]
        assert (db_search(b, [a], SCHEME).scores[0] ==
                align_pairwise_local(a, b, SCHEME).score)

    def test_top_k_bounds(self):
        eng = WavefrontEngine(SCHEME, [enc("ACG"), enc("GGG")], query_len=4)
        eng.run(enc("ACGG"))
        with pytest.raises(ConfigurationError):
            eng.top_k(3)
        assert eng.top_k(0)[0] == []


class TestLayoutAndReset:
    def test_row_accounting(self):
        db = plan_database([enc("ACGT"), enc("ACGT")])
        assert db.total_rows == 10
        assert [s.buffer_row for s in db.spans] == [4, 9]

    def test_population_round_trips(self):
        layout = build_layout(SCHEME, 8)
        seqs = [enc("ACGT"), enc("TTA")]
        array = CamArray(9)
        db = init_database(array, layout, seqs)
        cm = layout.cmap
        for span, seq in zip(db.spans, seqs):
            got = [array.read_field(span.start + i, cm.cols("a_sym"))
                   for i in range(span.length)]
            assert got == seq
            assert array.read_field(span.start, cm.cols("first")) == 1
            assert array.read_field(span.buffer_row, cm.cols("buffer")) == 1
            assert array.read_field(span.buffer_row, cm.cols("meta")) == span.index
            assert array.read_field(span.start + span.length - 1,
                                    cm.cols("last")) == 1

    def test_capacity_error(self):
        layout = build_layout(SCHEME, 8)
        with pytest.raises(CapacityError):
            init_database(CamArray(4), layout, [enc("ACGT")])

    def test_reset_makes_queries_repeatable(self):
        eng = WavefrontEngine(SCHEME, [enc("ACGTTG"), enc("TGCA")],
                              query_len=6)
        q = enc("ACGTGC")
        first = eng.run(q)
        reset_after_query(eng.array, eng.layout)
        second = eng.run(q)
        assert first.scores == second.scores
        assert first.argmax == second.argmax

    def test_chip_boundaries_incur_interdie_cost(self):
        led = EnergyLedger()
        eng = WavefrontEngine(SCHEME, [enc("ACGTAC"), enc("GGAT")],
                              query_len=5, chip_rows=4)
        assert eng.array.chips == 3
        assert eng.db.chip_boundaries == (4, 8)
        out = eng.run(enc("ACGTA"), led)
        shifts_per_iter = out.iteration_profile.shifts
        # every shift cycle moves one bit over each of the two boundaries
        assert led.interdie_bits == 2 * led.shifts
        assert led.interdie_j == pytest.approx(led.interdie_bits * 1e-9)
        # and the result is still exact
        assert out.scores == [oracle.sw_local(s, enc("ACGTA"), SCHEME).score
                              for s in (enc("ACGTAC"), enc("GGAT"))]
        assert shifts_per_iter > 0

    def test_alphabet_mismatch_rejected(self):
        eng = WavefrontEngine(SCHEME, [enc("ACG")], query_len=3)
        with pytest.raises(AlphabetError):
            eng.run([0, 7, 1])

    def test_query_longer_than_configured_rejected(self):
        eng = WavefrontEngine(SCHEME, [enc("ACG")], query_len=3)
        with pytest.raises(CapacityError):
            eng.run(enc("ACGT"))


class TestMachineBookkeeping:
    def test_ad_roles_cycle(self):
        eng = WavefrontEngine(SCHEME, [enc("ACGT")], query_len=4)
        for k in range(9):
            right, middle, left = eng.ad_roles(k)
            assert (right, middle, left) == (k % 3, (k - 1) % 3, (k - 2) % 3)
            assert {right, middle, left} == {0, 1, 2}

    def test_cycle_decomposition(self):
        led = EnergyLedger()
        eng = WavefrontEngine(SCHEME, [enc("ACGTT"), enc("GAC")], query_len=4)
        out = eng.run(enc("ACGG"), led)
        # straight-line iterations: ledger total equals the decomposition
        assert led.total_cycles == out.total_cycles
        assert out.iterations == 5 + 4 - 1
        assert out.reduction_steps == 5
        prof = out.iteration_profile
        assert prof.cycles == out.cycles_per_iteration
        assert prof.compares + prof.writes + prof.shifts == prof.cycles

    def test_score_width_selection(self):
        # clamped local scores for a 100-symbol +2 task fit 9 bits
        assert required_score_width(100, 100, SCHEME, "local") == 9
        assert required_score_width(100, 100, SCHEME, "global") > 9
        with pytest.raises(ConfigurationError):
            validate_score_width(100, 100, SCHEME, 8, "local")

    def test_explicit_score_width_validated(self):
        with pytest.raises(ConfigurationError):
            WavefrontEngine(SCHEME, [enc("ACGTACGTACGT")], query_len=12,
                            score_width=4)

    def test_eom_off_still_exact(self, rng):
        a = [rng.randrange(4) for _ in range(13)]
        b = [rng.randrange(4) for _ in range(9)]
        out = align_pairwise_local(a, b, SCHEME, eom=False)
        assert out.score == oracle.sw_local(a, b, SCHEME).score

    def test_debug_overflow_tripwire_stays_quiet(self, rng):
        for mode, fn in (("local", align_pairwise_local),
                         ("global", align_pairwise_global)):
            a = [rng.randrange(4) for _ in range(14)]
            b = [rng.randrange(4) for _ in range(10)]
            out = fn(a, b, SCHEME, debug_overflow=True)
            want = (oracle.sw_local if mode == "local"
                    else oracle.nw_global)(a, b, SCHEME).score
            assert out.score == want

    def test_parallel_arrays_are_independent(self, rng):
        import threading
        pairs = [([rng.randrange(4) for _ in range(20)],
                  [rng.randrange(4) for _ in range(15)]) for _ in range(4)]
        results = [None] * len(pairs)

        def work(i):
            a, b = pairs[i]
            results[i] = align_pairwise_local(a, b, SCHEME).score

        threads = [threading.Thread(target=work, args=(i,))
                   for i in range(len(pairs))]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        for (a, b), got in zip(pairs, results):
            assert got == oracle.sw_local(a, b, SCHEME).score
