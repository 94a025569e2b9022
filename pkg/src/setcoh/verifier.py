"""Consistency decisions from any scorer, plus greedy inconsistency localization.

A scorer maps a statement set to a real score (higher = less
consistent) and carries a decision threshold; the uniform rule is
*consistent iff score < threshold* (a score exactly at the threshold is
inconsistent).  Concrete scorers wrap the trained energy model, the
binary classifier's softmax, the exact truth-table oracle, or an
externally produced score file.

Element-wise verification scores all N(N-1)/2 statement pairs and
tolerates up to a given fraction of inconsistent pairs (the maximum
tolerance rate).  Subsets inherit the parent set's context formulas:
world knowledge stays in force when statements are dropped.

Localization removes, while the set is judged inconsistent and larger
than two statements, the statement whose exclusion yields the lowest
score, reusing that score as the next verification (so a full run
costs at most 1 + sum(k for k in 3..N) scorer calls).
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, replace
from typing import Protocol, Sequence

from .datagen import CONSISTENT, INCONSISTENT, StatementSet
from .logic import is_satisfiable
from .model import ModelParams, binary_logits, energy, serialize_set, softmax


class UnknownSetIdError(KeyError):
    """An external score file has no row for the requested set id."""


class Scorer(Protocol):
    threshold: float

    def score(self, s: StatementSet) -> float: ...


@dataclass(frozen=True)
class PairwiseDetail:
    pair_count: int
    inconsistent_pairs: int
    ratio: float


@dataclass(frozen=True)
class Verdict:
    label: str
    score: float
    detail: PairwiseDetail | None = None


@dataclass(frozen=True)
class LocateResult:
    removed_indices: tuple[int, ...]          # original positions, in removal order
    terminal: str                             # "consistent-reached" | "size-two-stop"
    trace: tuple[tuple[tuple[int, float], ...], ...]  # per iteration: (index, score) pairs

    def __post_init__(self) -> None:
        if len(set(self.removed_indices)) != len(self.removed_indices):
            raise ValueError("removed indices must be duplicate-free")


CONSISTENT_REACHED = "consistent-reached"
SIZE_TWO_STOP = "size-two-stop"


@dataclass
class EnergyScorer:
    """Energy model with its learned threshold."""

    params: ModelParams
    threshold: float

    def score(self, s: StatementSet) -> float:
        shuffle_seed = zlib.crc32(s.id.encode("utf-8"))
        return energy(self.params, serialize_set(self.params.vocab, s, shuffle_seed))


@dataclass
class BinarySoftmaxScorer:
    """Binary classifier scored on the softmax of the inconsistent class."""

    params: ModelParams
    threshold: float

    def score(self, s: StatementSet) -> float:
        shuffle_seed = zlib.crc32(s.id.encode("utf-8"))
        logits = binary_logits(self.params, serialize_set(self.params.vocab, s, shuffle_seed))
        return float(softmax(logits)[1])


@dataclass
class OracleScorer:
    """Truth-table ground truth: 1.0 if jointly unsatisfiable, else 0.0."""

    threshold: float = 0.5

    def score(self, s: StatementSet) -> float:
        return 0.0 if is_satisfiable(s.all_formulas()) else 1.0


@dataclass
class GradedOracleScorer:
    """Fraction of unsatisfiable 2-subsets; richer ties for locate testing.

    Not a ground-truth consistency oracle: collectively inconsistent
    sets whose pairs are all satisfiable score 0.
    """

    threshold: float = 0.5

    def score(self, s: StatementSet) -> float:
        formulas = s.formulas()
        context = list(s.context_semantics)
        n = len(formulas)
        pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
        if not pairs:
            return 0.0
        bad = sum(1 for i, j in pairs if not is_satisfiable([formulas[i], formulas[j]] + context))
        return bad / len(pairs)


@dataclass
class ExternalScorer:
    """Scores looked up by set id from an external file."""

    scores: dict[str, float]
    threshold: float

    def score(self, s: StatementSet) -> float:
        try:
            return self.scores[s.id]
        except KeyError:
            raise UnknownSetIdError(s.id) from None


def external_scorer_from_file(path) -> ExternalScorer:
    """Parse a score file: header line ``threshold=<real>``, then ``set_id,score`` rows."""
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith("threshold="):
            raise ValueError(f"{path}: expected 'threshold=<real>' header, got {header!r}")
        threshold = float(header.split("=", 1)[1])
        scores: dict[str, float] = {}
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            set_id, _, value = line.rpartition(",")
            if not set_id:
                raise ValueError(f"{path}:{lineno}: expected 'set_id,score'")
            scores[set_id] = float(value)
    return ExternalScorer(scores=scores, threshold=threshold)


def write_scores_file(path, threshold: float, scores: dict[str, float]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"threshold={threshold!r}\n")
        for set_id, value in scores.items():
            fh.write(f"{set_id},{value!r}\n")


def classify(score: float, threshold: float) -> str:
    return CONSISTENT if score < threshold else INCONSISTENT


def verify_set(scorer: Scorer, s: StatementSet) -> Verdict:
    """Whole-set verdict: consistent iff the score is strictly below the threshold."""
    score = scorer.score(s)
    return Verdict(label=classify(score, scorer.threshold), score=score)


def _subset(s: StatementSet, keep: Sequence[int], suffix: str) -> StatementSet:
    return replace(
        s,
        id=f"{s.id}#{suffix}",
        statements=[s.statements[i] for i in keep],
        gold_inconsistent_indices=None,
    )


def pair_subsets(s: StatementSet) -> list[tuple[tuple[int, int], StatementSet]]:
    n = len(s.statements)
    return [
        ((i, j), _subset(s, (i, j), f"p{i}-{j}"))
        for i in range(n)
        for j in range(i + 1, n)
    ]


def verify_elementwise(scorer: Scorer, s: StatementSet, mtr: float) -> Verdict:
    """Pairwise verdict: consistent iff the inconsistent-pair ratio is at most ``mtr``."""
    if not 0.0 <= mtr <= 1.0:
        raise ValueError("mtr must be in [0, 1]")
    pairs = pair_subsets(s)
    bad = 0
    for _, pair in pairs:
        if scorer.score(pair) >= scorer.threshold:
            bad += 1
    ratio = bad / len(pairs)
    detail = PairwiseDetail(pair_count=len(pairs), inconsistent_pairs=bad, ratio=ratio)
    label = CONSISTENT if ratio <= mtr else INCONSISTENT
    return Verdict(label=label, score=ratio, detail=detail)


def locate(scorer: Scorer, s: StatementSet) -> LocateResult:
    """Greedy removal of the statement whose exclusion scores lowest.

    Stops as soon as the remainder is judged consistent, or when an
    inconsistent remainder has only two statements left.  Ties in the
    leave-one-out argmin break toward the smallest original index.
    """
    remaining = list(range(len(s.statements)))
    current_score = scorer.score(s)
    removed: list[int] = []
    trace: list[tuple[tuple[int, float], ...]] = []
    while True:
        if current_score < scorer.threshold:
            return LocateResult(tuple(removed), CONSISTENT_REACHED, tuple(trace))
        if len(remaining) == 2:
            return LocateResult(tuple(removed), SIZE_TWO_STOP, tuple(trace))
        scored: list[tuple[int, float]] = []
        for position, original in enumerate(remaining):
            keep = remaining[:position] + remaining[position + 1 :]
            subset = _subset(s, keep, f"loo{original}")
            scored.append((original, scorer.score(subset)))
        trace.append(tuple(scored))
        best_original, best_score = min(scored, key=lambda item: (item[1], item[0]))
        removed.append(best_original)
        remaining.remove(best_original)
        current_score = best_score
