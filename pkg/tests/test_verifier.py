import itertools

import pytest

from setcoh.datagen import (
    Statement,
    StatementSet,
    apply_rule,
    compose_union,
    corrupt_qa,
    gen_qa_set,
    gen_qa_world,
    gen_seed_pair,
)
from setcoh.logic import is_satisfiable, parse_formula
from setcoh.rules import RULES_BY_ID
from setcoh.model import ModelParams, build_vocabulary
from setcoh.verifier import (
    CONSISTENT_REACHED,
    EnergyScorer,
    GradedOracleScorer,
    LocateResult,
    OracleScorer,
    SIZE_TWO_STOP,
    UnknownSetIdError,
    external_scorer_from_file,
    locate,
    pair_subsets,
    verify_elementwise,
    verify_set,
    write_scores_file,
)

TRAIN_SET = StatementSet(
    id="train-or", label="inconsistent", provenance="I",
    statements=[
        Statement(kind="sentence", semantics=parse_formula("(or p q)"),
                  text="Either the train arrives at 8 AM, or the train arrives at 9 AM."),
        Statement(kind="sentence", semantics=parse_formula("(not p)"),
                  text="The train does not arrive at 8 AM."),
        Statement(kind="sentence", semantics=parse_formula("(not q)"),
                  text="The train does not arrive at 9 AM."),
    ],
)


class FixedScorer:
    def __init__(self, value, threshold=0.5):
        self.value = value
        self.threshold = threshold
        self.calls = 0

    def score(self, s):
        self.calls += 1
        return self.value


class TestVerifySet:
    def test_oracle_flags_collective_contradiction(self):
        verdict = verify_set(OracleScorer(), TRAIN_SET)
        assert verdict.label == "inconsistent"
        assert verdict.score == 1.0

    def test_oracle_accepts_rule_outputs(self):
        for rule_id in ("SE-6", "SE-1", "SC-3", "SN-2"):
            rule = RULES_BY_ID[rule_id]
            out = apply_rule(rule, [gen_seed_pair(800, rule.relation)])
            assert verify_set(OracleScorer(), out).label == "consistent"

    def test_score_at_threshold_is_inconsistent(self):
        verdict = verify_set(FixedScorer(0.5, threshold=0.5), TRAIN_SET)
        assert verdict.label == "inconsistent"
        below = verify_set(FixedScorer(0.4999, threshold=0.5), TRAIN_SET)
        assert below.label == "consistent"


class TestVerifyElementwise:
    def test_pair_count(self):
        world = gen_qa_world(820, 2)
        s = gen_qa_set(world)
        assert len(pair_subsets(s)) == 6  # N=4

    def test_ratio_arithmetic(self):
        s = gen_qa_set(gen_qa_world(821, 2))  # N=4, 6 pairs

        class OnePairFlagged:
            threshold = 0.5

            def __init__(self):
                self.n = 0

            def score(self, subset):
                self.n += 1
                return 1.0 if self.n == 1 else 0.0

        verdict = verify_elementwise(OnePairFlagged(), s, mtr=0.2)
        assert verdict.detail.pair_count == 6
        assert verdict.detail.inconsistent_pairs == 1
        assert verdict.detail.ratio == pytest.approx(1 / 6)
        assert verdict.label == "consistent"

    def test_pairwise_blind_set_splits_the_strategies(self):
        out = apply_rule("SE-28", gen_seed_pair(822, "entailment"))
        assert verify_set(OracleScorer(), out).label == "inconsistent"
        verdict = verify_elementwise(OracleScorer(), out, mtr=0.0)
        assert verdict.label == "consistent"
        assert verdict.detail.inconsistent_pairs == 0

    def test_context_rides_into_pairs(self):
        # a corrupted QA pair conflicts only under the world's exclusion axioms
        si = corrupt_qa(gen_qa_set(gen_qa_world(823, 2)), 0, flips=("no-to-yes",))
        verdict = verify_elementwise(OracleScorer(), si, mtr=0.0)
        assert verdict.label == "inconsistent"
        assert verdict.detail.inconsistent_pairs >= 1

    def test_monotone_in_mtr(self):
        si = corrupt_qa(gen_qa_set(gen_qa_world(824, 3)), 1)
        labels = [verify_elementwise(OracleScorer(), si, mtr=m).label for m in (0.0, 0.2, 0.5, 1.0)]
        seen_consistent = False
        for label in labels:
            if label == "consistent":
                seen_consistent = True
            else:
                assert not seen_consistent  # never flips back to inconsistent

    def test_mtr_bounds(self):
        with pytest.raises(ValueError):
            verify_elementwise(OracleScorer(), TRAIN_SET, mtr=1.5)


class TestLocate:
    def test_consistent_input_removes_nothing(self):
        s = gen_qa_set(gen_qa_world(830, 3))
        result = locate(OracleScorer(), s)
        assert result.removed_indices == ()
        assert result.terminal == CONSISTENT_REACHED
        assert result.trace == ()

    def test_corrupted_set_yields_the_gold_index(self):
        for seed in range(6):
            si = corrupt_qa(gen_qa_set(gen_qa_world(840 + seed, 2 + seed % 3)), seed,
                            flips=("no-to-yes",))
            result = locate(OracleScorer(), si)
            assert result.removed_indices == si.gold_inconsistent_indices
            assert result.terminal == CONSISTENT_REACHED

    def test_union_with_one_corrupted_part(self):
        c = gen_qa_set(gen_qa_world(850, 2))
        si = corrupt_qa(gen_qa_set(gen_qa_world(851, 2)), 0, flips=("no-to-yes",))
        union = compose_union([c, si], shuffle_seed=4)
        result = locate(OracleScorer(), union)
        assert result.removed_indices == union.gold_inconsistent_indices

    def test_size_two_stop(self):
        si = corrupt_qa(gen_qa_set(gen_qa_world(852, 1)), 0, flips=("no-to-yes",))
        pair = StatementSet(
            id="two", label="inconsistent", provenance="I",
            statements=[si.statements[1], si.statements[2]],
            context_semantics=si.context_semantics,
        )
        result = locate(OracleScorer(), pair)
        assert result.removed_indices == ()
        assert result.terminal == SIZE_TWO_STOP

    def test_tie_break_smallest_original_index(self):
        s = gen_qa_set(gen_qa_world(853, 3))  # size 5, constant scorer never satisfied
        scorer = FixedScorer(1.0)
        result = locate(scorer, s)
        assert result.terminal == SIZE_TWO_STOP
        assert result.removed_indices == (0, 1, 2)

    def test_call_count_bound(self):
        s = gen_qa_set(gen_qa_world(854, 4))  # size 6
        scorer = FixedScorer(1.0)
        locate(scorer, s)
        n = len(s)
        assert scorer.calls <= 1 + sum(range(3, n + 1))

    def test_trace_length_equals_iterations(self):
        si = corrupt_qa(gen_qa_set(gen_qa_world(855, 2)), 0, flips=("no-to-yes",))
        result = locate(OracleScorer(), si)
        assert len(result.trace) == len(result.removed_indices)

    def test_removed_indices_belong_to_a_minimal_unsatisfiable_core(self):
        for seed in range(4):
            si = corrupt_qa(gen_qa_set(gen_qa_world(860 + seed, 2)), seed)
            result = locate(OracleScorer(), si)
            formulas = si.formulas()
            context = list(si.context_semantics)
            n = len(formulas)
            minimal_cores = []
            for r in range(2, n + 1):
                for combo in itertools.combinations(range(n), r):
                    subset = [formulas[i] for i in combo]
                    if is_satisfiable(subset + context):
                        continue
                    proper_sat = all(
                        is_satisfiable([formulas[i] for i in sub] + context)
                        for k in range(len(combo))
                        for sub in [combo[:k] + combo[k + 1:]]
                    )
                    if proper_sat:
                        minimal_cores.append(set(combo))
            for removed in result.removed_indices:
                assert any(removed in core for core in minimal_cores)

    def test_verdicts_invariant_under_reordering(self):
        si = corrupt_qa(gen_qa_set(gen_qa_world(870, 3)), 2)
        reversed_set = StatementSet(
            id=si.id + ".rev", label=si.label, provenance=si.provenance,
            statements=list(reversed(si.statements)),
            context_semantics=si.context_semantics,
        )
        assert verify_set(OracleScorer(), si).label == verify_set(OracleScorer(), reversed_set).label
        vocab = build_vocabulary([si])
        scorer = EnergyScorer(ModelParams.init(vocab, d=8, h=6, seed=0), threshold=0.0)
        assert (
            verify_set(scorer, si).label
            == verify_set(scorer, StatementSet(
                id=si.id, label=si.label, provenance=si.provenance,
                statements=list(reversed(si.statements)),
                context_semantics=si.context_semantics,
            )).label
        )

    def test_graded_oracle_scores_fraction_of_bad_pairs(self):
        out = apply_rule("SE-28", gen_seed_pair(880, "entailment"))
        assert GradedOracleScorer().score(out) == 0.0  # pairwise-blind
        si = corrupt_qa(gen_qa_set(gen_qa_world(881, 1)), 0, flips=("no-to-yes",))
        assert GradedOracleScorer().score(si) > 0.0


class TestExternalScorer:
    def test_round_trip_identical_verdicts(self, tmp_path):
        sets = [gen_qa_set(gen_qa_world(890 + k, 2)) for k in range(3)]
        sets.append(corrupt_qa(sets[0], 0, set_id="bad-one"))
        oracle = OracleScorer()
        scores = {s.id: oracle.score(s) for s in sets}
        path = tmp_path / "scores.csv"
        write_scores_file(path, oracle.threshold, scores)
        external = external_scorer_from_file(path)
        assert external.threshold == 0.5
        for s in sets:
            assert verify_set(external, s).label == verify_set(oracle, s).label

    def test_unknown_id(self, tmp_path):
        path = tmp_path / "scores.csv"
        write_scores_file(path, 0.5, {"known": 0.9})
        scorer = external_scorer_from_file(path)
        with pytest.raises(UnknownSetIdError):
            scorer.score(TRAIN_SET)

    def test_header_flags_verdict(self, tmp_path):
        path = tmp_path / "scores.csv"
        path.write_text("threshold=0.5\nid1,0.9\n")
        scorer = external_scorer_from_file(path)
        s = StatementSet(
            id="id1", label="inconsistent", provenance="I",
            statements=TRAIN_SET.statements,
        )
        assert verify_set(scorer, s).label == "inconsistent"

    def test_bad_header(self, tmp_path):
        path = tmp_path / "scores.csv"
        path.write_text("0.5\nid1,0.9\n")
        with pytest.raises(ValueError):
            external_scorer_from_file(path)


def test_locate_result_rejects_duplicates():
    with pytest.raises(ValueError):
        LocateResult((1, 1), CONSISTENT_REACHED, ())
