"""Precision/recall/F1 reporting, splits, and the ablation harness."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from kirelex.corpus import (
    RelationLabel,
    TweetCollection,
    tokenize,
)
from kirelex.embedding import EmbeddingProvider
from kirelex.labeler import LabelerConfig, knn_label
from kirelex.lexicon import Lexicon
from kirelex.matcher import MatcherConfig, PhraseMatchRecord, match_phrases
from kirelex.metric import TrainConfig, assemble_examples, represent, train

LABEL_ORDER = [RelationLabel.REASON, RelationLabel.EFFECT, RelationLabel.ADDICTION]

FULL_MODEL_ROW = "full model"
NO_CONTRASTIVE_ROW = "(-) contrastive learning loss"
NO_KNOWLEDGE_ROW = "(-) knowledge infusion"


def harmonic_f1(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


@dataclass
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int
    undefined_precision: bool = False


@dataclass
class EvalReport:
    per_class: dict[RelationLabel, ClassMetrics]
    macro: tuple[float, float, float]
    micro: tuple[float, float, float]
    confusion: np.ndarray  # rows gold, cols predicted, LABEL_ORDER
    n: int

    def to_dict(self) -> dict:
        return {
            "per_class": {
                label.value: {
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                    "undefined_precision": m.undefined_precision,
                }
                for label, m in self.per_class.items()
            },
            "macro": {"precision": self.macro[0], "recall": self.macro[1], "f1": self.macro[2]},
            "micro": {"precision": self.micro[0], "recall": self.micro[1], "f1": self.micro[2]},
            "confusion": self.confusion.tolist(),
            "labels": [label.value for label in LABEL_ORDER],
            "n": self.n,
        }

    def render_table(self) -> str:
        lines = [f"{'class':<12} {'prec':>7} {'rec':>7} {'f1':>7} {'support':>8}"]
        for label, m in self.per_class.items():
            lines.append(
                f"{label.value:<12} {m.precision:>7.4f} {m.recall:>7.4f} "
                f"{m.f1:>7.4f} {m.support:>8d}"
            )
        lines.append(
            f"{'macro':<12} {self.macro[0]:>7.4f} {self.macro[1]:>7.4f} {self.macro[2]:>7.4f}"
        )
        lines.append(
            f"{'micro':<12} {self.micro[0]:>7.4f} {self.micro[1]:>7.4f} {self.micro[2]:>7.4f}"
        )
        return "\n".join(lines)


def evaluate(
    predictions: dict[str, RelationLabel], gold: dict[str, RelationLabel]
) -> EvalReport:
    """One-vs-rest per-class P/R/F1, macro over classes present, micro pooled."""
    if not gold:
        raise ValueError("empty gold set")
    missing = set(predictions) - set(gold)
    if missing:
        raise ValueError(f"predicted ids not in gold: {sorted(missing)[:5]}")
    absent = set(gold) - set(predictions)
    if absent:
        raise ValueError(f"gold ids without predictions: {sorted(absent)[:5]}")

    index = {label: i for i, label in enumerate(LABEL_ORDER)}
    confusion = np.zeros((3, 3), dtype=np.int64)
    for tweet_id, gold_label in gold.items():
        confusion[index[gold_label], index[predictions[tweet_id]]] += 1

    per_class: dict[RelationLabel, ClassMetrics] = {}
    present: list[RelationLabel] = []
    for label in LABEL_ORDER:
        i = index[label]
        tp = int(confusion[i, i])
        support = int(confusion[i, :].sum())
        predicted = int(confusion[:, i].sum())
        undefined = predicted == 0
        precision = 0.0 if undefined else tp / predicted
        recall = 0.0 if support == 0 else tp / support
        per_class[label] = ClassMetrics(
            precision=precision,
            recall=recall,
            f1=harmonic_f1(precision, recall),
            support=support,
            undefined_precision=undefined,
        )
        if support > 0 or predicted > 0:
            present.append(label)

    macro = tuple(
        float(np.mean([getattr(per_class[label], m) for label in present]))
        for m in ("precision", "recall", "f1")
    )
    accuracy = float(np.trace(confusion) / confusion.sum())
    return EvalReport(
        per_class=per_class,
        macro=macro,  # type: ignore[arg-type]
        micro=(accuracy, accuracy, accuracy),
        confusion=confusion,
        n=int(confusion.sum()),
    )


def stratified_split(
    labels: dict[str, RelationLabel], test_fraction: float = 0.2, seed: int = 0
) -> tuple[list[str], list[str]]:
    """Seeded per-class split; ids sorted before shuffling for determinism."""
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    train_ids: list[str] = []
    test_ids: list[str] = []
    for label in LABEL_ORDER:
        ids = sorted(i for i, l in labels.items() if l == label)
        if not ids:
            continue
        perm = rng.permutation(len(ids))
        n_test = max(1, round(len(ids) * test_fraction)) if len(ids) > 1 else 0
        test_ids.extend(ids[i] for i in perm[:n_test])
        train_ids.extend(ids[i] for i in perm[n_test:])
    return sorted(train_ids), sorted(test_ids)


@dataclass
class AblationConfig:
    use_knowledge_matching: bool = True
    use_contrastive: bool = True

    @property
    def row_label(self) -> str:
        if self.use_knowledge_matching and self.use_contrastive:
            return FULL_MODEL_ROW
        if not self.use_contrastive and self.use_knowledge_matching:
            return NO_CONTRASTIVE_ROW
        if not self.use_knowledge_matching and self.use_contrastive:
            return NO_KNOWLEDGE_ROW
        return "(-) contrastive learning loss, (-) knowledge infusion"


@dataclass
class AblationRow:
    label: str
    config: AblationConfig
    report: EvalReport
    delta_macro_f1: float = 0.0


@dataclass
class AblationReport:
    rows: list[AblationRow] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "rows": [
                {
                    "label": row.label,
                    "use_knowledge_matching": row.config.use_knowledge_matching,
                    "use_contrastive": row.config.use_contrastive,
                    "report": row.report.to_dict(),
                    "delta_macro_f1": row.delta_macro_f1,
                }
                for row in self.rows
            ]
        }


def run_configuration(
    collection: TweetCollection,
    lexicon: Lexicon,
    provider: EmbeddingProvider,
    train_config: TrainConfig,
    ablation: AblationConfig,
    seed: int,
    matcher_config: MatcherConfig | None = None,
    labeler_config: LabelerConfig | None = None,
    test_fraction: float = 0.2,
    records: dict[str, PhraseMatchRecord] | None = None,
) -> EvalReport:
    """Train/evaluate one pipeline configuration on a stratified split.

    With contrastive learning off, classification runs kNN directly on the
    raw assembled inputs instead of learned representations. Precomputed
    match records may be passed to avoid re-matching across configurations.
    """
    matcher_config = matcher_config or MatcherConfig()
    labeler_config = labeler_config or LabelerConfig()
    labeled = collection.labeled()
    if not labeled:
        raise ValueError("no labeled tweets")

    if records is None:
        records = {}
        if ablation.use_knowledge_matching:
            for tweet in labeled:
                records[tweet.id] = match_phrases(
                    tokenize(tweet), lexicon, provider, matcher_config
                )
    examples = assemble_examples(
        labeled, records, provider, use_phrases=ablation.use_knowledge_matching
    )
    if not examples:
        raise ValueError("no usable examples after assembly")

    labels = {ex.tweet_id: ex.label for ex in examples}
    train_ids, test_ids = stratified_split(labels, test_fraction, seed)
    by_id = {ex.tweet_id: ex for ex in examples}
    train_examples = [by_id[i] for i in train_ids]
    test_examples = [by_id[i] for i in test_ids]
    if not test_examples:
        raise ValueError("held-out split is empty")

    cfg = TrainConfig(**{**train_config.__dict__, "seed": seed})
    if ablation.use_contrastive:
        model, _ = train(train_examples, cfg)
        rep = lambda ex: represent(model, ex.input)
    else:
        rep = lambda ex: ex.input

    labeled_points = [(ex.tweet_id, rep(ex), ex.label) for ex in train_examples]
    queries = [(ex.tweet_id, rep(ex)) for ex in test_examples]
    k = min(labeler_config.k, len(labeled_points))
    weak = knn_label(labeled_points, queries, LabelerConfig(k=k))
    predictions = {wl.tweet_id: wl.label for wl in weak}
    gold = {ex.tweet_id: ex.label for ex in test_examples}
    return evaluate(predictions, gold)


def ablation_run(
    collection: TweetCollection,
    lexicon: Lexicon,
    provider: EmbeddingProvider,
    train_config: TrainConfig,
    ablation: AblationConfig,
    seed: int,
    **kwargs,
) -> AblationReport:
    """Run one ablation configuration and report it against the full model."""
    full = AblationConfig(True, True)
    full_report = run_configuration(
        collection, lexicon, provider, train_config, full, seed, **kwargs
    )
    rows = [AblationRow(label=full.row_label, config=full, report=full_report)]
    if (ablation.use_knowledge_matching, ablation.use_contrastive) != (True, True):
        report = run_configuration(
            collection, lexicon, provider, train_config, ablation, seed, **kwargs
        )
        rows.append(
            AblationRow(
                label=ablation.row_label,
                config=ablation,
                report=report,
                delta_macro_f1=report.macro[2] - full_report.macro[2],
            )
        )
    return AblationReport(rows=rows)


def ablation_grid(
    collection: TweetCollection,
    lexicon: Lexicon,
    provider: EmbeddingProvider,
    train_config: TrainConfig,
    seed: int,
    **kwargs,
) -> AblationReport:
    """The three-row study: full, minus contrastive loss, minus knowledge."""
    configs = [
        AblationConfig(True, True),
        AblationConfig(use_knowledge_matching=True, use_contrastive=False),
        AblationConfig(use_knowledge_matching=False, use_contrastive=True),
    ]
    if "records" not in kwargs:
        matcher_config = kwargs.get("matcher_config") or MatcherConfig()
        kwargs["records"] = {
            tweet.id: match_phrases(tokenize(tweet), lexicon, provider, matcher_config)
            for tweet in collection.labeled()
        }
    rows: list[AblationRow] = []
    full_f1 = None
    for config in configs:
        report = run_configuration(
            collection, lexicon, provider, train_config, config, seed, **kwargs
        )
        if full_f1 is None:
            full_f1 = report.macro[2]
        rows.append(
            AblationRow(
                label=config.row_label,
                config=config,
                report=report,
                delta_macro_f1=report.macro[2] - full_f1,
            )
        )
    return AblationReport(rows=rows)
