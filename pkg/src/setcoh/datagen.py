"""Generation of labeled statement sets with oracle-certified labels.

Two corpus styles are produced.  Sentence-style sets come from the rule
inventory in :mod:`setcoh.rules`, applied to synthetic seed pairs whose
logical relation (entailment / contradiction / neutral) is certified by
the truth-table oracle before use.  QA-style sets describe one object
attribute (one open question, one "yes" affirmation, one "no" per
distractor) and are corrupted into inconsistent variants by flipping a
single answer.

Every generated set carries per-statement formulas, so its label can be
re-derived exactly at any time (:func:`validate_with_oracle`).  Sets may
additionally carry *context* formulas: side conditions that are part of
the set's world (a seed pair's entailment axiom, a QA world's
exactly-one-value constraints) without being statements themselves.

Larger sets are unions of base sets over disjoint atom namespaces; the
provenance string records the composition ("C", "CI", "IIII", ...) and
fully determines the label.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from . import wordbank
from .logic import (
    Atom,
    AtomRef,
    Formula,
    Implies,
    Not,
    Or,
    atoms_of,
    format_formula,
    is_satisfiable,
    negate,
    parse_formula,
    realize,
)
from .rules import (
    ALL_RULES,
    CONSISTENT,
    CONTRADICTION,
    ENTAILMENT,
    INCONSISTENT,
    NEUTRAL,
    PAIRWISE_INCONSISTENT_PATTERNS,
    RULES_BY_ID,
    Rule,
)

SENTENCE = "sentence"
QA = "qa"

FLIP_NO_TO_YES = "no-to-yes"
FLIP_YES_TO_NO = "yes-to-no"
FLIP_OPEN_REPLACE = "open-replace"
DEFAULT_FLIPS = (FLIP_NO_TO_YES, FLIP_OPEN_REPLACE)

PROVENANCE_CLASSES = (
    "C", "I", "CC", "CI", "II",
    "CCC", "CCI", "CII", "III",
    "CCCC", "CCCI", "CCII", "CIII", "IIII",
)


class RelationMismatchError(ValueError):
    """A rule was applied to seed pairs of the wrong relation or count."""


class UnknownRuleError(KeyError):
    """No rule with the requested identifier exists."""


class NamespaceCollisionError(ValueError):
    """Union parts share atom names and cannot be merged."""


class MissingSemanticsError(ValueError):
    """An operation requiring ground-truth formulas met a statement without one."""


class MalformedRecordError(ValueError):
    """A JSONL record failed validation; message carries the line number."""


class InsufficientRuleCoverageError(ValueError):
    """The requested rule families provide no rule for a needed label."""


class GenerationError(RuntimeError):
    """Internal certification failure: a generated label disagreed with the oracle."""


@dataclass(frozen=True)
class Statement:
    """One unit of information: a sentence, or a question-answer pair."""

    kind: str
    text: str | None = None
    question: str | None = None
    answer: str | None = None
    semantics: Formula | None = None

    def __post_init__(self) -> None:
        if self.kind == SENTENCE:
            if not self.text or self.question is not None or self.answer is not None:
                raise ValueError("sentence statements carry text only")
        elif self.kind == QA:
            if self.text is not None or not self.question or not self.answer:
                raise ValueError("qa statements carry a question and a non-empty answer")
        else:
            raise ValueError(f"unknown statement kind {self.kind!r}")


@dataclass
class StatementSet:
    """A labeled, provenance-tagged collection of statements."""

    id: str
    statements: list[Statement]
    label: str
    provenance: str
    rule_id: str | None = None
    difficulty: str = "medium"
    gold_inconsistent_indices: tuple[int, ...] | None = None
    context_semantics: tuple[Formula, ...] = ()

    def __post_init__(self) -> None:
        if len(self.statements) < 2:
            raise ValueError(f"set {self.id!r}: need at least 2 statements")
        if self.label not in (CONSISTENT, INCONSISTENT):
            raise ValueError(f"set {self.id!r}: bad label {self.label!r}")
        if not self.provenance or set(self.provenance) - {"C", "I"}:
            raise ValueError(f"set {self.id!r}: bad provenance {self.provenance!r}")
        expected = CONSISTENT if "I" not in self.provenance else INCONSISTENT
        if self.label != expected:
            raise ValueError(f"set {self.id!r}: label {self.label!r} contradicts provenance {self.provenance!r}")

    def __len__(self) -> int:
        return len(self.statements)

    def formulas(self) -> list[Formula]:
        """Per-statement formulas; raises if any statement lacks semantics."""
        out = []
        for i, s in enumerate(self.statements):
            if s.semantics is None:
                raise MissingSemanticsError(f"set {self.id!r}: statement {i} has no semantics")
            out.append(s.semantics)
        return out

    def all_formulas(self) -> list[Formula]:
        return self.formulas() + list(self.context_semantics)

    def namespaces(self) -> frozenset[str]:
        names: set[str] = set()
        for f in [s.semantics for s in self.statements if s.semantics is not None] + list(self.context_semantics):
            names |= atoms_of(f)
        return frozenset(n.split(".", 1)[0] for n in names)


@dataclass(frozen=True)
class SeedPair:
    """A premise/hypothesis pair with an oracle-certified relation.

    ``axioms`` carry the relation itself as formulas (the entailment
    implication, or the contradiction's mutual exclusion); rules that
    depend on the relation attach them as context.
    """

    premise: tuple[Formula, str]
    hypothesis: tuple[Formula, str]
    relation: str
    axioms: tuple[Formula, ...]
    atoms: dict[str, Atom]
    namespace: str


@dataclass(frozen=True)
class QAWorld:
    """One object attribute with a true value and implausible distractors."""

    obj: str
    attribute_type: str
    true_value: str
    distractor_values: tuple[str, ...]
    namespace: str

    def __post_init__(self) -> None:
        values = (self.true_value, *self.distractor_values)
        if len(set(values)) != len(values):
            raise ValueError("world values must be distinct")

    def atom_id(self, value: str) -> str:
        return f"{self.namespace}.{value}"

    def value_atoms(self) -> dict[str, Atom]:
        out = {}
        for value in (self.true_value, *self.distractor_values):
            out[self.atom_id(value)] = Atom(
                id=self.atom_id(value),
                surface_pos=f"the {self.obj} is {value}",
                surface_neg=f"the {self.obj} is not {value}",
            )
        return out

    def context(self) -> tuple[Formula, ...]:
        """Exactly-one-value constraints: an at-least-one chain plus pairwise exclusions."""
        values = [self.true_value, *self.distractor_values]
        refs = [AtomRef(self.atom_id(v)) for v in values]
        at_least_one: Formula = refs[-1]
        for ref in reversed(refs[:-1]):
            at_least_one = Or(ref, at_least_one)
        exclusions: list[Formula] = [
            Implies(a, Not(b)) for a, b in itertools.combinations(refs, 2)
        ]
        return (at_least_one, *exclusions)


@dataclass
class DatasetSplit:
    train: list[StatementSet] = field(default_factory=list)
    validation1: list[StatementSet] = field(default_factory=list)
    validation2: list[StatementSet] = field(default_factory=list)
    test: list[StatementSet] = field(default_factory=list)

    def splits(self) -> dict[str, list[StatementSet]]:
        return {
            "train": self.train,
            "validation1": self.validation1,
            "validation2": self.validation2,
            "test": self.test,
        }


def pools(sets: Iterable[StatementSet]) -> tuple[list[StatementSet], list[StatementSet]]:
    """Split into (consistent, inconsistent) base pools, preserving order."""
    cs = [s for s in sets if s.label == CONSISTENT]
    is_ = [s for s in sets if s.label == INCONSISTENT]
    return cs, is_


def gen_seed_pair(rng_seed: int, relation: str) -> SeedPair:
    """Deterministic synthetic premise/hypothesis pair of the given relation.

    Entailment and contradiction pairs use two fresh atoms plus an axiom
    recording the relation (``p -> h``; ``p -> not h``).  Neutral pairs
    are two unconstrained atoms.  The relation is certified against the
    oracle before the pair is returned.
    """
    if rng_seed < 0:
        raise ValueError("rng_seed must be non-negative")
    if relation not in (ENTAILMENT, CONTRADICTION, NEUTRAL):
        raise ValueError(f"unknown relation {relation!r}")
    rng = random.Random(f"seed-pair:{relation}:{rng_seed}")
    ns = f"{relation[0]}{rng_seed:x}"
    vp_p, vp_h = rng.sample(wordbank.VERB_PHRASES, 2)
    if relation == NEUTRAL:
        subj_p, subj_h = rng.sample(wordbank.SUBJECTS, 2)
    else:
        subj_p = subj_h = rng.choice(wordbank.SUBJECTS)
    p_atom = Atom(f"{ns}.p", f"{subj_p} {vp_p[0]}", f"{subj_p} {vp_p[1]}")
    h_atom = Atom(f"{ns}.h", f"{subj_h} {vp_h[0]}", f"{subj_h} {vp_h[1]}")
    p, h = AtomRef(p_atom.id), AtomRef(h_atom.id)
    if relation == ENTAILMENT:
        axioms: tuple[Formula, ...] = (Implies(p, h),)
    elif relation == CONTRADICTION:
        axioms = (Implies(p, Not(h)),)
    else:
        axioms = ()
    atoms = {p_atom.id: p_atom, h_atom.id: h_atom}
    pair = SeedPair(
        premise=(p, realize(p, atoms)),
        hypothesis=(h, realize(h, atoms)),
        relation=relation,
        axioms=axioms,
        atoms=atoms,
        namespace=ns,
    )
    _certify_seed_pair(pair)
    return pair


def _certify_seed_pair(pair: SeedPair) -> None:
    p, h = pair.premise[0], pair.hypothesis[0]
    ax = list(pair.axioms)
    joint = is_satisfiable([p, h] + ax)
    p_not_h = is_satisfiable([p, negate(h)] + ax)
    not_p_h = is_satisfiable([negate(p), h] + ax)
    not_both = is_satisfiable([negate(p), negate(h)] + ax)
    if pair.relation == ENTAILMENT:
        ok = (not p_not_h) and joint and not_p_h and not_both
    elif pair.relation == CONTRADICTION:
        ok = (not joint) and p_not_h and not_p_h and not_both
    else:
        ok = joint and p_not_h and not_p_h and not_both
    if not ok:
        raise GenerationError(f"seed pair {pair.namespace} failed {pair.relation} certification")


def _substitution(seeds: Sequence[SeedPair]) -> dict[str, str]:
    sub = {"p": seeds[0].premise[0].name, "h": seeds[0].hypothesis[0].name}
    if len(seeds) > 1:
        sub["p2"] = seeds[1].premise[0].name
        sub["h2"] = seeds[1].hypothesis[0].name
    return sub


def _instantiate(f: Formula, sub: dict[str, str]) -> Formula:
    if isinstance(f, AtomRef):
        return AtomRef(sub[f.name])
    if isinstance(f, Not):
        return Not(_instantiate(f.operand, sub))
    if isinstance(f, Or):
        return Or(_instantiate(f.left, sub), _instantiate(f.right, sub))
    if isinstance(f, Implies):
        return Implies(_instantiate(f.antecedent, sub), _instantiate(f.consequent, sub))
    raise TypeError(f"not a formula: {f!r}")


def apply_rule(rule: Rule | str, seeds: SeedPair | Sequence[SeedPair], set_id: str | None = None) -> StatementSet:
    """Instantiate a rule row on certified seed pairs and realize it to text.

    Label and difficulty come from the rule row; the label is re-checked
    against the oracle (with the seed axioms as context where the rule
    requires them) before the set is returned.
    """
    if isinstance(rule, str):
        try:
            rule = RULES_BY_ID[rule]
        except KeyError:
            raise UnknownRuleError(rule) from None
    if isinstance(seeds, SeedPair):
        seeds = [seeds]
    seeds = list(seeds)
    if len(seeds) != rule.seeds_required:
        raise RelationMismatchError(
            f"rule {rule.rule_id} needs {rule.seeds_required} seed pair(s), got {len(seeds)}"
        )
    for seed in seeds:
        if seed.relation != rule.relation:
            raise RelationMismatchError(
                f"rule {rule.rule_id} needs a {rule.relation} seed, got {seed.relation}"
            )
    if len(seeds) == 2 and seeds[0].namespace == seeds[1].namespace:
        raise NamespaceCollisionError(f"two-seed rule {rule.rule_id} got seeds from one namespace")

    sub = _substitution(seeds)
    atom_table: dict[str, Atom] = {}
    for seed in seeds:
        atom_table.update(seed.atoms)
    statements = []
    for template in rule.members:
        f = _instantiate(template, sub)
        statements.append(Statement(kind=SENTENCE, text=realize(f, atom_table), semantics=f))
    context: tuple[Formula, ...] = ()
    if rule.attach_context:
        context = tuple(ax for seed in seeds for ax in seed.axioms)
    out = StatementSet(
        id=set_id or f"{rule.rule_id.lower()}.{'.'.join(s.namespace for s in seeds)}",
        statements=statements,
        label=rule.label,
        provenance="C" if rule.label == CONSISTENT else "I",
        rule_id=rule.rule_id,
        difficulty=rule.difficulty,
        context_semantics=context,
    )
    if not validate_with_oracle(out):
        raise GenerationError(f"rule {rule.rule_id}: oracle disagrees with stated label")
    return out


def gen_qa_world(rng_seed: int, n_distractors: int) -> QAWorld:
    """Deterministic QA world: object phrase, attribute, true value, distractors."""
    if not 1 <= n_distractors <= 8:
        raise ValueError("n_distractors must be in 1..8")
    rng = random.Random(f"qa-world:{rng_seed}")
    obj = f"{rng.choice(wordbank.OBJECT_ADJECTIVES)} {rng.choice(wordbank.OBJECT_NOUNS)}"
    attribute = rng.choice(wordbank.ATTRIBUTE_NAMES)
    plausible, implausible = wordbank.ATTRIBUTES[attribute]
    return QAWorld(
        obj=obj,
        attribute_type=attribute,
        true_value=rng.choice(plausible),
        distractor_values=tuple(rng.sample(implausible, n_distractors)),
        namespace=f"q{rng_seed:x}",
    )


def gen_qa_set(world: QAWorld, set_id: str | None = None) -> StatementSet:
    """Consistent QA set: open question, affirmation, one "no" per distractor."""
    if len(world.distractor_values) < 1:
        raise ValueError("world needs at least one distractor value")
    true_ref = AtomRef(world.atom_id(world.true_value))
    statements = [
        Statement(
            kind=QA,
            question=f"what {world.attribute_type} is {world.obj}?",
            answer=world.true_value,
            semantics=true_ref,
        ),
        Statement(
            kind=QA,
            question=f"is {world.obj} {world.true_value}?",
            answer="yes",
            semantics=true_ref,
        ),
    ]
    for value in world.distractor_values:
        statements.append(
            Statement(
                kind=QA,
                question=f"is {world.obj} {value}?",
                answer="no",
                semantics=Not(AtomRef(world.atom_id(value))),
            )
        )
    out = StatementSet(
        id=set_id or f"qa.{world.namespace}",
        statements=statements,
        label=CONSISTENT,
        provenance="C",
        rule_id="QA-GEN",
        context_semantics=world.context(),
    )
    if not validate_with_oracle(out):
        raise GenerationError(f"qa set {out.id}: generated set is not satisfiable")
    return out


def _qa_flip_candidates(sc: StatementSet, flips: Sequence[str]) -> list[tuple[int, Statement]]:
    candidates: list[tuple[int, Statement]] = []
    # Distractor values, recovered from the "no" statements' negated atoms.
    distractors = [
        s.semantics.operand.name.split(".", 1)[1]
        for s in sc.statements
        if s.answer == "no" and isinstance(s.semantics, Not)
    ]
    for i, s in enumerate(sc.statements):
        if s.answer == "no" and FLIP_NO_TO_YES in flips:
            candidates.append((i, replace(s, answer="yes", semantics=negate(s.semantics))))
        elif s.answer == "yes" and FLIP_YES_TO_NO in flips:
            candidates.append((i, replace(s, answer="no", semantics=negate(s.semantics))))
        elif s.answer not in ("yes", "no") and FLIP_OPEN_REPLACE in flips:
            ns = s.semantics.name.split(".", 1)[0]
            for value in distractors:
                candidates.append((i, replace(s, answer=value, semantics=AtomRef(f"{ns}.{value}"))))
    return candidates


def corrupt_qa(
    sc: StatementSet,
    rng_seed: int,
    flips: Sequence[str] = DEFAULT_FLIPS,
    set_id: str | None = None,
) -> StatementSet:
    """Flip one answer of a consistent QA set, yielding a certified inconsistent set.

    Candidate flips (no->yes on a distractor, yes->no on the
    affirmation, or replacing the open answer with a distractor, per
    ``flips``) are filtered by the oracle: the flipped set must be
    unsatisfiable, removing the flipped statement must restore
    satisfiability, and for sets of size >= 4 that removal must be the
    only one that does.  One valid flip is then chosen at random.
    """
    if sc.label != CONSISTENT or any(s.kind != QA for s in sc.statements):
        raise ValueError("corrupt_qa needs a consistent QA set")
    sc.formulas()  # every statement must carry semantics
    valid: list[tuple[int, Statement]] = []
    for idx, flipped in _qa_flip_candidates(sc, flips):
        statements = list(sc.statements)
        statements[idx] = flipped
        formulas = [s.semantics for s in statements]
        context = list(sc.context_semantics)
        if is_satisfiable(formulas + context):
            continue
        fixes = [
            j for j in range(len(statements))
            if is_satisfiable([f for k, f in enumerate(formulas) if k != j] + context)
        ]
        certified = fixes == [idx] if len(statements) >= 4 else idx in fixes
        if certified:
            valid.append((idx, flipped))
    if not valid:
        raise GenerationError(f"set {sc.id!r}: no certified flip under modes {tuple(flips)}")
    rng = random.Random(f"qa-flip:{rng_seed}")
    idx, flipped = valid[rng.randrange(len(valid))]
    statements = list(sc.statements)
    statements[idx] = flipped
    return StatementSet(
        id=set_id or f"{sc.id}.flip",
        statements=statements,
        label=INCONSISTENT,
        provenance="I",
        rule_id="QA-FLIP",
        gold_inconsistent_indices=(idx,),
        context_semantics=sc.context_semantics,
    )


def compose_union(
    parts: Sequence[StatementSet],
    set_id: str | None = None,
    shuffle_seed: int = 0,
) -> StatementSet:
    """Merge 2-4 base sets into one, shuffling statements and remapping gold indices.

    Parts must be base sets ("C" or "I" provenance) over pairwise
    disjoint atom namespaces; the union's provenance sorts the part tags
    (C's first) and its label is consistent iff every part is.
    """
    parts = list(parts)
    if not 2 <= len(parts) <= 4:
        raise ValueError("compose_union takes 2-4 parts")
    for part in parts:
        if part.provenance not in ("C", "I"):
            raise ValueError(f"part {part.id!r} is already a union (provenance {part.provenance!r})")
    seen: set[str] = set()
    for part in parts:
        ns = part.namespaces()
        if ns & seen:
            raise NamespaceCollisionError(
                f"union parts share atom namespaces: {sorted(ns & seen)}"
            )
        seen |= ns

    flat: list[Statement] = []
    gold: list[int] = []
    for part in parts:
        base = len(flat)
        flat.extend(part.statements)
        if part.gold_inconsistent_indices:
            gold.extend(base + g for g in part.gold_inconsistent_indices)
    order = list(range(len(flat)))
    random.Random(f"union-shuffle:{shuffle_seed}").shuffle(order)
    position = {old: new for new, old in enumerate(order)}
    statements = [flat[old] for old in order]
    remapped = tuple(sorted(position[g] for g in gold))

    provenance = "".join(sorted(part.provenance for part in parts))
    label = CONSISTENT if "I" not in provenance else INCONSISTENT
    has_gold = any(part.gold_inconsistent_indices is not None for part in parts)
    return StatementSet(
        id=set_id or "u." + ".".join(part.id for part in parts),
        statements=statements,
        label=label,
        provenance=provenance,
        difficulty="easy" if any(p.difficulty == "easy" for p in parts) else "medium",
        gold_inconsistent_indices=remapped if has_gold else None,
        context_semantics=tuple(f for part in parts for f in part.context_semantics),
    )


def derive_pairwise_dataset(
    seeds: Sequence[SeedPair],
    qa_sets: Sequence[StatementSet],
    rng_seed: int = 0,
) -> list[StatementSet]:
    """Size-2 sets for element-wise training and evaluation.

    From each entailment seed: the four inconsistent patterns (premise
    against its negation, hypothesis against its negation, premise with
    negated hypothesis, disjunction with negated hypothesis), each
    carrying the entailment axiom as context, plus consistent 2-subsets
    drawn from a consistent rule instance on the same seed.  From QA
    sets: the (flipped, conflicting) pair of corrupted sets as
    inconsistent, and 2-subsets of consistent sets as consistent.
    """
    rng = random.Random(f"pairwise:{rng_seed}")
    out: list[StatementSet] = []
    consistent_rules = [
        r for r in ALL_RULES
        if r.relation == ENTAILMENT and r.seeds_required == 1
        and r.label == CONSISTENT and len(r.members) >= 3
    ]
    for seed in seeds:
        if seed.relation != ENTAILMENT:
            raise RelationMismatchError("pairwise sentence patterns need entailment seeds")
        sub = _substitution([seed])
        for pattern_id, members in PAIRWISE_INCONSISTENT_PATTERNS:
            formulas = [_instantiate(parse_formula(m), sub) for m in members]
            statements = [
                Statement(kind=SENTENCE, text=realize(f, seed.atoms), semantics=f)
                for f in formulas
            ]
            pair_set = StatementSet(
                id=f"{pattern_id.lower()}.{seed.namespace}",
                statements=statements,
                label=INCONSISTENT,
                provenance="I",
                rule_id=pattern_id,
                context_semantics=seed.axioms,
            )
            if not validate_with_oracle(pair_set):
                raise GenerationError(f"pairwise pattern {pattern_id} failed certification")
            out.append(pair_set)
        donor = apply_rule(rng.choice(consistent_rules), seed)
        subsets = list(itertools.combinations(range(len(donor.statements)), 2))
        rng.shuffle(subsets)
        for n, (i, j) in enumerate(subsets[:4]):
            out.append(
                StatementSet(
                    id=f"ew-c{n}.{seed.namespace}",
                    statements=[donor.statements[i], donor.statements[j]],
                    label=CONSISTENT,
                    provenance="C",
                    rule_id="EW-C",
                    context_semantics=donor.context_semantics,
                )
            )
    for qa_set in qa_sets:
        if any(s.kind != QA for s in qa_set.statements):
            raise ValueError(f"set {qa_set.id!r} is not QA-style")
        if qa_set.gold_inconsistent_indices:
            g = qa_set.gold_inconsistent_indices[0]
            formulas = qa_set.formulas()
            context = list(qa_set.context_semantics)
            partner = next(
                j for j in range(len(formulas))
                if j != g and not is_satisfiable([formulas[g], formulas[j]] + context)
            )
            first, second = sorted((g, partner))
            out.append(
                StatementSet(
                    id=f"qa-ew-i.{qa_set.id}",
                    statements=[qa_set.statements[first], qa_set.statements[second]],
                    label=INCONSISTENT,
                    provenance="I",
                    rule_id="QA-EW",
                    gold_inconsistent_indices=(0 if first == g else 1,),
                    context_semantics=qa_set.context_semantics,
                )
            )
        else:
            i, j = sorted(rng.sample(range(len(qa_set.statements)), 2))
            out.append(
                StatementSet(
                    id=f"qa-ew-c.{qa_set.id}",
                    statements=[qa_set.statements[i], qa_set.statements[j]],
                    label=CONSISTENT,
                    provenance="C",
                    rule_id="QA-EW",
                    context_semantics=qa_set.context_semantics,
                )
            )
    return out


def validate_with_oracle(s: StatementSet) -> bool:
    """True iff the stored label agrees with exact satisfiability."""
    return (s.label == CONSISTENT) == is_satisfiable(s.all_formulas())


@dataclass(frozen=True)
class GenConfig:
    """Corpus-generation settings for :func:`build_splits`."""

    style: str = QA                          # "qa" or "snli"
    train_count: int = 2000                  # consistent/inconsistent pairs in train
    eval_count: int = 200                    # pairs in each of validation1/validation2/test
    families: tuple[str, ...] = ("SE", "SC", "SN", "DE")
    qa_distractors: tuple[int, int] = (1, 4)
    qa_flips: tuple[str, ...] = DEFAULT_FLIPS

    def __post_init__(self) -> None:
        if self.style not in (QA, "snli"):
            raise ValueError(f"unknown style {self.style!r}")
        if self.train_count < 1 or self.eval_count < 1:
            raise ValueError("counts must be >= 1")


_SPLIT_NAMES = ("train", "validation1", "validation2", "test")


def _item_seed(master: int, split_idx: int, item: int) -> int:
    return ((master * 4 + split_idx) * 2_000_003 + item) * 8


def _gen_snli_pair(itemseed: int, rule_rng: random.Random, config: GenConfig,
                   split: str, item: int) -> tuple[StatementSet, StatementSet]:
    c_rules = [r for r in ALL_RULES if r.label == CONSISTENT and r.rule_id.split("-")[0] in config.families]
    i_by_family = {
        fam: [r for r in ALL_RULES if r.label == INCONSISTENT and r.rule_id.startswith(fam + "-")]
        for fam in config.families
    }
    if not c_rules or not any(i_by_family.values()):
        raise InsufficientRuleCoverageError(f"families {config.families} lack rules for both labels")
    c_rule = c_rules[rule_rng.randrange(len(c_rules))]
    family = c_rule.rule_id.split("-")[0]
    if not i_by_family[family]:
        raise InsufficientRuleCoverageError(f"family {family} has no inconsistent rules")
    i_rule = i_by_family[family][rule_rng.randrange(len(i_by_family[family]))]
    seeds = [gen_seed_pair(itemseed, c_rule.relation)]
    if c_rule.seeds_required == 2:
        seeds.append(gen_seed_pair(itemseed + 3, c_rule.relation))
    consistent = apply_rule(c_rule, seeds, set_id=f"{split}-snli-c{item:06d}")
    inconsistent = apply_rule(i_rule, seeds, set_id=f"{split}-snli-i{item:06d}")
    return consistent, inconsistent


def _gen_qa_pair(itemseed: int, size_rng: random.Random, config: GenConfig,
                 split: str, item: int) -> tuple[StatementSet, StatementSet]:
    lo, hi = config.qa_distractors
    world = gen_qa_world(itemseed, size_rng.randint(lo, hi))
    consistent = gen_qa_set(world, set_id=f"{split}-qa-c{item:06d}")
    inconsistent = corrupt_qa(
        consistent, itemseed + 2, flips=config.qa_flips, set_id=f"{split}-qa-i{item:06d}"
    )
    return consistent, inconsistent


def build_splits(config: GenConfig, rng_seed: int) -> DatasetSplit:
    """Deterministic train/validation1/validation2/test corpus.

    Each split holds matched (consistent, inconsistent) pairs
    interleaved in order; evaluation splits therefore contain equal
    counts of both labels.
    """
    out = DatasetSplit()
    for split_idx, split in enumerate(_SPLIT_NAMES):
        count = config.train_count if split == "train" else config.eval_count
        bucket = out.splits()[split]
        for item in range(count):
            itemseed = _item_seed(rng_seed, split_idx, item)
            aux_rng = random.Random(f"choices:{rng_seed}:{split_idx}:{item}")
            if config.style == QA:
                c, i = _gen_qa_pair(itemseed, aux_rng, config, split, item)
            else:
                c, i = _gen_snli_pair(itemseed, aux_rng, config, split, item)
            bucket.append(c)
            bucket.append(i)
    return out


def _statement_to_json(s: Statement) -> dict:
    record: dict = {"kind": s.kind}
    if s.kind == SENTENCE:
        record["text"] = s.text
    else:
        record["question"] = s.question
        record["answer"] = s.answer
    if s.semantics is not None:
        record["semantics"] = format_formula(s.semantics)
    return record


def _statement_from_json(record: dict) -> Statement:
    semantics = record.get("semantics")
    return Statement(
        kind=record["kind"],
        text=record.get("text"),
        question=record.get("question"),
        answer=record.get("answer"),
        semantics=parse_formula(semantics) if semantics is not None else None,
    )


def set_to_json(s: StatementSet) -> dict:
    record: dict = {
        "id": s.id,
        "statements": [_statement_to_json(st) for st in s.statements],
        "label": s.label,
        "provenance": s.provenance,
        "difficulty": s.difficulty,
    }
    if s.rule_id is not None:
        record["rule_id"] = s.rule_id
    if s.gold_inconsistent_indices is not None:
        record["gold_inconsistent_indices"] = list(s.gold_inconsistent_indices)
    if s.context_semantics:
        record["context_semantics"] = [format_formula(f) for f in s.context_semantics]
    return record


def set_from_json(record: dict) -> StatementSet:
    gold = record.get("gold_inconsistent_indices")
    return StatementSet(
        id=record["id"],
        statements=[_statement_from_json(r) for r in record["statements"]],
        label=record["label"],
        provenance=record["provenance"],
        rule_id=record.get("rule_id"),
        difficulty=record.get("difficulty", "medium"),
        gold_inconsistent_indices=tuple(gold) if gold is not None else None,
        context_semantics=tuple(parse_formula(f) for f in record.get("context_semantics", [])),
    )


def save_jsonl(sets: Iterable[StatementSet], path) -> None:
    """One StatementSet per line, UTF-8, LF-terminated."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in sets:
            fh.write(json.dumps(set_to_json(s)) + "\n")


def load_jsonl(path) -> list[StatementSet]:
    """Inverse of :func:`save_jsonl`; reports the line number on bad records."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                out.append(set_from_json(record))
            except (ValueError, KeyError, TypeError) as exc:
                raise MalformedRecordError(f"{path}:{lineno}: {exc}") from exc
    return out
