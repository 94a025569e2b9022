"""Contrastive training of the energy scorer and the binary baseline.

Training pairs a consistent set against an inconsistent one under a
margin hinge; richer regimes add union-based comparisons built from
freshly sampled partner sets each epoch, up to eight ordered contrast
kinds.  After every epoch a decision threshold is fit on a validation1
mixture (consistent: C and CC; inconsistent: I, CI, II) by exhaustive
scan over score midpoints, and the epoch with the best validation1
macro accuracy wins.

The binary baseline shares the encoder and trains its 2-way head with
cross-entropy on the same five set classes; its threshold is fit on the
softmax score of the inconsistent class, by the same scan.

Fine-tuning mixes n source with n target pairs per epoch (re-sampled
every epoch) and adds an L2 penalty, anchored at zero by default or at
the starting weights.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .datagen import (
    CONSISTENT,
    StatementSet,
    compose_union,
    pools,
)
from .model import (
    CLS_INDEX,
    ModelParams,
    TokenCounts,
    accumulate_grad_energy,
    accumulate_grad_logits,
    energy_from_counts,
    logits_from_counts,
    softmax,
    statement_text,
    tokenize,
    zero_grads,
)

# Ordered (more-consistent, less-consistent) comparisons; the first is
# the basic contrast, 2-6 compare across labels via unions, 7-8 order
# degrees of inconsistency.
CONTRAST_KINDS: tuple[tuple[str, str], ...] = (
    ("C", "I"),
    ("C", "CI"),
    ("C", "II"),
    ("CC", "I"),
    ("CC", "CI"),
    ("CC", "II"),
    ("CI", "I"),
    ("I", "II"),
)

REGIMES = {
    "basic": CONTRAST_KINDS[:1],
    "six": CONTRAST_KINDS[:6],
    "eight": CONTRAST_KINDS[:8],
}

THRESHOLD_CLASSES_CONSISTENT = ("C", "CC")
THRESHOLD_CLASSES_INCONSISTENT = ("I", "CI", "II")


class PoolExhaustedError(ValueError):
    """Could not sample a partner set with a disjoint namespace."""


class EmptyValidationError(ValueError):
    """Threshold learning received no scored sets."""


class TrainingDivergedError(RuntimeError):
    """Loss or parameters became non-finite; message carries epoch and step."""


@dataclass(frozen=True)
class TrainerConfig:
    alpha: float = 0.01                  # hinge margin
    learning_rate: float = 1e-3
    epochs: int = 20
    batch_size: int = 32
    regime: str = "eight"
    optimizer: str = "adam"              # "adam" or "sgd"
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    rng_seed: int = 0
    l2_weight: float = 1e-5              # fine-tuning only
    l2_anchor: str = "zero"              # "zero" or "start"
    pairs_per_epoch: int | None = None   # subsample of base pairs per epoch
    val_per_class: int | None = None     # threshold-mixture size per class

    def __post_init__(self) -> None:
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.regime not in REGIMES:
            raise ValueError(f"unknown regime {self.regime!r}")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass(frozen=True)
class Threshold:
    value: float
    learned_epoch: int = -1
    source: str = "energy"               # "energy" or "inconsistent-softmax"
    degenerate: bool = False


@dataclass(frozen=True)
class ContrastInstance:
    more: StatementSet
    less: StatementSet
    kind: tuple[str, str]
    more_parts: tuple[StatementSet, ...]
    less_parts: tuple[StatementSet, ...]


@dataclass
class EpochStats:
    epoch: int
    mean_hinge_loss: float
    val1_macro_acc: float
    threshold: float
    median_energies: dict[str, float]


@dataclass
class TrainResult:
    params: ModelParams
    threshold: Threshold
    log: list[EpochStats]


def hinge_loss(e_more_consistent: float, e_less_consistent: float, alpha: float) -> float:
    """``max(e_more - e_less + alpha, 0)``: zero once the margin is satisfied."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return max(e_more_consistent - e_less_consistent + alpha, 0.0)


class CountsCache:
    """Per-set sparse token histograms, mergeable for unions without re-tokenizing."""

    def __init__(self, vocab) -> None:
        self.vocab = vocab
        self._by_id: dict[str, tuple[np.ndarray, np.ndarray]] = {}

    def _statement_hist(self, s: StatementSet) -> tuple[np.ndarray, np.ndarray]:
        cached = self._by_id.get(s.id)
        if cached is None:
            ids: list[int] = []
            for statement in s.statements:
                ids.extend(self.vocab.encode(w) for w in tokenize(statement_text(statement)))
            hist = np.bincount(np.asarray(ids, dtype=np.int64), minlength=len(self.vocab))
            nz = np.nonzero(hist)[0]
            cached = (nz, hist[nz].astype(np.float64))
            self._by_id[s.id] = cached
        return cached

    def counts(self, parts: Sequence[StatementSet]) -> TokenCounts:
        """Token counts of the serialized union of ``parts`` (CLS included)."""
        hist: dict[int, float] = {CLS_INDEX: 1.0}
        for part in parts:
            ids, vals = self._statement_hist(part)
            for i, v in zip(ids.tolist(), vals.tolist()):
                hist[i] = hist.get(i, 0.0) + v
        ids_sorted = np.array(sorted(hist), dtype=np.int64)
        counts = np.array([hist[i] for i in ids_sorted], dtype=np.float64)
        return TokenCounts(ids=ids_sorted, counts=counts, total=int(counts.sum()))


def _sample_partner(
    pool: Sequence[StatementSet],
    rng: random.Random,
    taken: frozenset[str],
) -> StatementSet:
    for _ in range(200):
        candidate = pool[rng.randrange(len(pool))]
        if not (candidate.namespaces() & taken):
            return candidate
    raise PoolExhaustedError("no namespace-disjoint partner after 200 draws")


def build_contrast_batch(
    pool_C: Sequence[StatementSet],
    pool_I: Sequence[StatementSet],
    regime: str,
    rng_seed: int,
    pairs: int | None = None,
    paired: bool = True,
) -> list[ContrastInstance]:
    """Contrast instances for sampled base pairs.

    For every base pair (S_C, S_I) one instance per contrast kind in the
    regime is emitted; the union sets S_CC, S_CI, S_II are built once
    per base pair from independently sampled namespace-disjoint
    partners.  ``paired=True`` samples S_C and S_I at the same pool
    index (pools generated as matched pairs).
    """
    if not pool_C or not pool_I:
        raise PoolExhaustedError("empty base pool")
    kinds = REGIMES[regime]
    # Separate streams so the base-pair sequence is identical across
    # regimes for one seed (partner draws consume the second stream only).
    pair_rng = random.Random(f"contrast-pairs:{rng_seed}")
    rng = random.Random(f"contrast-partners:{rng_seed}")
    if pairs is None:
        pairs = min(len(pool_C), len(pool_I))
    out: list[ContrastInstance] = []
    for _ in range(pairs):
        if paired:
            i = pair_rng.randrange(min(len(pool_C), len(pool_I)))
            base_c, base_i = pool_C[i], pool_I[i]
        else:
            base_c = pool_C[pair_rng.randrange(len(pool_C))]
            base_i = pool_I[pair_rng.randrange(len(pool_I))]
        taken = base_c.namespaces() | base_i.namespaces()
        by_tag: dict[str, tuple[StatementSet, ...]] = {
            "C": (base_c,),
            "I": (base_i,),
        }
        needed = {tag for pair in kinds for tag in pair}
        if "CC" in needed:
            by_tag["CC"] = (base_c, _sample_partner(pool_C, rng, taken))
        if "CI" in needed:
            by_tag["CI"] = (_sample_partner(pool_C, rng, taken), base_i)
        if "II" in needed:
            by_tag["II"] = (base_i, _sample_partner(pool_I, rng, taken))
        composed: dict[str, StatementSet] = {}
        for tag, parts in by_tag.items():
            if len(parts) == 1:
                composed[tag] = parts[0]
            else:
                composed[tag] = compose_union(
                    parts, shuffle_seed=rng.randrange(2**31)
                )
        for kind in kinds:
            more_tag, less_tag = kind
            out.append(
                ContrastInstance(
                    more=composed[more_tag],
                    less=composed[less_tag],
                    kind=kind,
                    more_parts=by_tag[more_tag],
                    less_parts=by_tag[less_tag],
                )
            )
    return out


def _threshold_scan(scores: Sequence[float], labels: Sequence[str]) -> tuple[float, float, bool]:
    """Best strict-below threshold by macro accuracy.

    Candidates are midpoints of consecutive distinct scores plus the two
    infinite sentinels.  Ties prefer the smallest finite candidate; a
    degenerate (sentinel) winner is flagged.
    """
    if not scores:
        raise EmptyValidationError("no scores to fit a threshold on")
    distinct = sorted(set(scores))
    midpoints = [(a + b) / 2.0 for a, b in zip(distinct, distinct[1:])]
    candidates = midpoints + [float("inf"), float("-inf")]
    consistent = np.array([label == CONSISTENT for label in labels])
    values = np.array(scores)
    n_cons = int(consistent.sum())
    n_incons = len(labels) - n_cons

    def macro_acc(t: float) -> float:
        predicted = values < t
        acc_c = (predicted & consistent).sum() / n_cons if n_cons else 0.0
        acc_i = (~predicted & ~consistent).sum() / n_incons if n_incons else 0.0
        return (acc_c + acc_i) / 2.0

    best_acc = max(macro_acc(t) for t in candidates)
    finite_best = [t for t in midpoints if macro_acc(t) == best_acc]
    if finite_best:
        return min(finite_best), best_acc, False
    chosen = float("inf") if macro_acc(float("inf")) == best_acc else float("-inf")
    return chosen, best_acc, True


def build_threshold_mixture(
    validation_sets: Sequence[StatementSet],
    rng_seed: int = 0,
    per_class: int | None = None,
) -> list[StatementSet]:
    """C/CC/I/CI/II mixture over a validation split for threshold fitting."""
    pool_c, pool_i = pools(validation_sets)
    if not pool_c or not pool_i:
        raise EmptyValidationError("validation split lacks one of the labels")
    rng = random.Random(f"threshold-mixture:{rng_seed}")
    n = per_class or min(len(pool_c), len(pool_i))
    out: list[StatementSet] = []
    for tag in THRESHOLD_CLASSES_CONSISTENT + THRESHOLD_CLASSES_INCONSISTENT:
        for k in range(n):
            if tag == "C":
                out.append(pool_c[k % len(pool_c)])
            elif tag == "I":
                out.append(pool_i[k % len(pool_i)])
            else:
                parts = [pool_c[k % len(pool_c)] if ch == "C" else pool_i[k % len(pool_i)] for ch in tag]
                taken = parts[0].namespaces()
                pool = pool_c if tag[1] == "C" else pool_i
                parts[1] = _sample_partner(pool, rng, taken)
                out.append(
                    compose_union(parts, set_id=f"thr-{tag}-{k}", shuffle_seed=rng.randrange(2**31))
                )
    return out


def learn_threshold(params: ModelParams, validation_sets: Sequence[StatementSet],
                    epoch: int = -1) -> Threshold:
    """Threshold over model energies maximizing macro accuracy on the given sets."""
    cache = CountsCache(params.vocab)
    scores = [energy_from_counts(params, cache.counts([s])) for s in validation_sets]
    labels = [s.label for s in validation_sets]
    value, _, degenerate = _threshold_scan(scores, labels)
    return Threshold(value=value, learned_epoch=epoch, source="energy", degenerate=degenerate)


class _Optimizer:
    def __init__(self, params: ModelParams, config: TrainerConfig) -> None:
        self.config = config
        self.t = 0
        if config.optimizer == "adam":
            self.m = zero_grads(params)
            self.v = zero_grads(params)

    def step(self, params: ModelParams, grads: dict[str, np.ndarray]) -> None:
        cfg = self.config
        arrays = params.arrays()
        if cfg.optimizer == "sgd":
            for name, arr in arrays.items():
                arr -= cfg.learning_rate * grads[name]
            return
        self.t += 1
        b1, b2 = cfg.betas
        correction1 = 1.0 - b1 ** self.t
        correction2 = 1.0 - b2 ** self.t
        for name, arr in arrays.items():
            g = grads[name]
            self.m[name] = b1 * self.m[name] + (1.0 - b1) * g
            self.v[name] = b2 * self.v[name] + (1.0 - b2) * g * g
            m_hat = self.m[name] / correction1
            v_hat = self.v[name] / correction2
            arr -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.eps)


def _median_energies(
    params: ModelParams,
    cache: CountsCache,
    mixture: Sequence[StatementSet],
) -> dict[str, float]:
    by_class: dict[str, list[float]] = {}
    for s in mixture:
        by_class.setdefault(s.provenance, []).append(energy_from_counts(params, cache.counts([s])))
    return {tag: float(np.median(vals)) for tag, vals in sorted(by_class.items())}


def _epoch_instances(
    pool_c: Sequence[StatementSet],
    pool_i: Sequence[StatementSet],
    config: TrainerConfig,
    epoch: int,
) -> list[ContrastInstance]:
    return build_contrast_batch(
        pool_c,
        pool_i,
        config.regime,
        rng_seed=config.rng_seed * 1_000 + epoch,
        pairs=config.pairs_per_epoch,
    )


def _check_finite(value: float, params: ModelParams, epoch: int, step: int) -> None:
    if not np.isfinite(value):
        raise TrainingDivergedError(f"non-finite loss at epoch {epoch}, step {step}")
    for name, arr in params.arrays().items():
        if not np.isfinite(arr).all():
            raise TrainingDivergedError(f"non-finite {name} at epoch {epoch}, step {step}")


def train(params: ModelParams, splits, config: TrainerConfig) -> TrainResult:
    """Hinge-contrast training; returns the best-validation1 epoch's model.

    ``splits`` needs ``train`` and ``validation1`` set lists.  The
    returned threshold is the one learned at the winning epoch.
    """
    params = params.copy()
    pool_c, pool_i = pools(splits.train)
    cache = CountsCache(params.vocab)
    val_mixture = build_threshold_mixture(
        splits.validation1, rng_seed=config.rng_seed, per_class=config.val_per_class
    )
    val_counts = [cache.counts([s]) for s in val_mixture]
    val_labels = [s.label for s in val_mixture]
    optimizer = _Optimizer(params, config)
    log: list[EpochStats] = []
    best: tuple[float, ModelParams, Threshold] | None = None

    for epoch in range(config.epochs):
        instances = _epoch_instances(pool_c, pool_i, config, epoch)
        losses: list[float] = []
        for start in range(0, len(instances), config.batch_size):
            batch = instances[start : start + config.batch_size]
            grads = zero_grads(params)
            batch_loss = 0.0
            for inst in batch:
                tc_more = cache.counts(inst.more_parts)
                tc_less = cache.counts(inst.less_parts)
                e_more = energy_from_counts(params, tc_more)
                e_less = energy_from_counts(params, tc_less)
                loss = hinge_loss(e_more, e_less, config.alpha)
                batch_loss += loss
                if loss > 0.0:
                    accumulate_grad_energy(params, tc_more, grads, scale=1.0 / len(batch))
                    accumulate_grad_energy(params, tc_less, grads, scale=-1.0 / len(batch))
            batch_loss /= len(batch)
            losses.append(batch_loss)
            optimizer.step(params, grads)
            _check_finite(batch_loss, params, epoch, start // config.batch_size)
        scores = [energy_from_counts(params, tc) for tc in val_counts]
        value, acc, degenerate = _threshold_scan(scores, val_labels)
        threshold = Threshold(value=value, learned_epoch=epoch, source="energy", degenerate=degenerate)
        log.append(
            EpochStats(
                epoch=epoch,
                mean_hinge_loss=float(np.mean(losses)),
                val1_macro_acc=acc,
                threshold=value,
                median_energies=_median_energies(params, cache, val_mixture),
            )
        )
        if best is None or acc > best[0]:
            best = (acc, params.copy(), threshold)
    assert best is not None
    return TrainResult(params=best[1], threshold=best[2], log=log)


def _binary_instances(
    pool_c: Sequence[StatementSet],
    pool_i: Sequence[StatementSet],
    config: TrainerConfig,
    epoch: int,
) -> list[tuple[tuple[StatementSet, ...], int]]:
    # Reuse the contrast partner machinery: one C/CC/I/CI/II quintuple per base pair.
    instances = build_contrast_batch(
        pool_c, pool_i, "eight", rng_seed=config.rng_seed * 1_000 + epoch,
        pairs=config.pairs_per_epoch,
    )
    out: list[tuple[tuple[StatementSet, ...], int]] = []
    seen_parts: set[int] = set()  # part tuples are shared within a base pair
    for inst in instances:
        for parts, tag in ((inst.more_parts, inst.kind[0]), (inst.less_parts, inst.kind[1])):
            if id(parts) in seen_parts:
                continue
            seen_parts.add(id(parts))
            out.append((parts, 0 if "I" not in tag else 1))
    return out


def train_binary(params: ModelParams, splits, config: TrainerConfig) -> tuple[ModelParams, Threshold]:
    """Cross-entropy training of the 2-way head on the five set classes."""
    params = params.copy()
    pool_c, pool_i = pools(splits.train)
    cache = CountsCache(params.vocab)
    val_mixture = build_threshold_mixture(
        splits.validation1, rng_seed=config.rng_seed, per_class=config.val_per_class
    )
    val_counts = [cache.counts([s]) for s in val_mixture]
    val_labels = [s.label for s in val_mixture]
    optimizer = _Optimizer(params, config)
    best: tuple[float, ModelParams, Threshold] | None = None

    for epoch in range(config.epochs):
        examples = _binary_instances(pool_c, pool_i, config, epoch)
        for start in range(0, len(examples), config.batch_size):
            batch = examples[start : start + config.batch_size]
            grads = zero_grads(params)
            batch_loss = 0.0
            for parts, label in batch:
                tc = cache.counts(parts)
                logits = logits_from_counts(params, tc)
                probs = softmax(logits)
                batch_loss += -float(np.log(max(probs[label], 1e-300)))
                upstream = probs.copy()
                upstream[label] -= 1.0
                accumulate_grad_logits(params, tc, upstream, grads, scale=1.0 / len(batch))
            batch_loss /= len(batch)
            optimizer.step(params, grads)
            _check_finite(batch_loss, params, epoch, start // config.batch_size)
        scores = [float(softmax(logits_from_counts(params, tc))[1]) for tc in val_counts]
        value, acc, degenerate = _threshold_scan(scores, val_labels)
        threshold = Threshold(value=value, learned_epoch=epoch, source="inconsistent-softmax",
                              degenerate=degenerate)
        if best is None or acc > best[0]:
            best = (acc, params.copy(), threshold)
    assert best is not None
    return best[1], best[2]


def cross_entropy(logits: np.ndarray, label: int) -> float:
    probs = softmax(np.asarray(logits, dtype=np.float64))
    return -float(np.log(max(probs[label], 1e-300)))


def fine_tune(
    source_params: ModelParams,
    source_pool: Sequence[StatementSet],
    target_pool: Sequence[StatementSet],
    n: int,
    config: TrainerConfig,
) -> ModelParams:
    """Adapt a trained scorer with n source + n target pairs per epoch.

    Pools are full split lists (both labels).  Every epoch re-samples n
    matched base pairs from each domain, trains the configured contrast
    regime on the 2n pairs, and adds ``l2_weight`` times the squared
    distance to the anchor ("zero" or "start") to the loss.
    """
    params = source_params.copy()
    src_c, src_i = pools(source_pool)
    tgt_c, tgt_i = pools(target_pool)
    if n > min(len(src_c), len(src_i)) or n > min(len(tgt_c), len(tgt_i)):
        raise ValueError("n exceeds a pool size")
    anchor = None
    if config.l2_anchor == "start":
        anchor = {name: arr.copy() for name, arr in params.arrays().items()}
    cache = CountsCache(params.vocab)
    optimizer = _Optimizer(params, config)

    for epoch in range(config.epochs):
        rng = random.Random(f"fine-tune:{config.rng_seed}:{epoch}")
        src_idx = rng.sample(range(min(len(src_c), len(src_i))), n)
        tgt_idx = rng.sample(range(min(len(tgt_c), len(tgt_i))), n)
        instances = []
        for pool_c, pool_i, indices, tag in (
            (src_c, src_i, src_idx, "src"),
            (tgt_c, tgt_i, tgt_idx, "tgt"),
        ):
            sub_c = [pool_c[i] for i in indices]
            sub_i = [pool_i[i] for i in indices]
            instances.extend(
                build_contrast_batch(
                    sub_c, sub_i, config.regime,
                    rng_seed=config.rng_seed * 10_000 + epoch * 10 + (0 if tag == "src" else 1),
                    pairs=n,
                )
            )
        rng.shuffle(instances)
        for start in range(0, len(instances), config.batch_size):
            batch = instances[start : start + config.batch_size]
            grads = zero_grads(params)
            batch_loss = 0.0
            for inst in batch:
                tc_more = cache.counts(inst.more_parts)
                tc_less = cache.counts(inst.less_parts)
                loss = hinge_loss(
                    energy_from_counts(params, tc_more),
                    energy_from_counts(params, tc_less),
                    config.alpha,
                )
                batch_loss += loss
                if loss > 0.0:
                    accumulate_grad_energy(params, tc_more, grads, scale=1.0 / len(batch))
                    accumulate_grad_energy(params, tc_less, grads, scale=-1.0 / len(batch))
            if config.l2_weight:
                for name, arr in params.arrays().items():
                    delta = arr if anchor is None else arr - anchor[name]
                    grads[name] += 2.0 * config.l2_weight * delta
                    batch_loss += config.l2_weight * float((delta * delta).sum())
            batch_loss /= len(batch)
            optimizer.step(params, grads)
            _check_finite(batch_loss, params, epoch, start // config.batch_size)
    return params
