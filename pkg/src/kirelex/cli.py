"""Command-line pipeline: match -> train -> label -> eval -> project."""
from __future__ import annotations

import argparse
import copy
import hashlib
import json
import os
import sys
from importlib import resources
from pathlib import Path

import numpy as np

from kirelex import evaluation, labeler, matcher, metric, synth, viz
from kirelex.corpus import (
    RelationLabel,
    TweetCollection,
    load_tweets,
    save_tweets,
    tokenize,
)
from kirelex.embedding import (
    EmbeddingProvider,
    HashProvider,
    HttpProvider,
    StoreProvider,
    read_store,
)
from kirelex.lexicon import load_lexicon
from kirelex.matcher import MatcherConfig, PhraseMatch, PhraseMatchRecord
from kirelex.metric import TrainConfig

DEFAULT_CONFIG: dict = {
    "seed": 0,
    "paths": {
        "tweets": None,  # defaults to the packaged sample corpus
        "lexicon": None,  # defaults to the packaged sample lexicon
        "store": None,
        "output_dir": "kirelex-out",
    },
    "provider": {"kind": "hash", "dim": 64, "url": None},
    "matcher": {"tau": 0.75, "n_min": 1, "n_max": 3, "substitution": True},
    "train": {
        "margin": 0.2,
        "learning_rate": 1e-3,
        "epochs": 50,
        "triplets_per_anchor": 4,
        "optimizer": "adam",
        "hidden_dim": 256,
        "output_dim": 128,
        "batch_size": 32,
        "activation": "tanh",
    },
    "labeler": {"k": 5},
    "projection": {
        "method": "pca",
        "tsne_perplexity": 30,
        "tsne_iters": 1000,
        "tsne_learning_rate": 200,
        "tsne_early_exaggeration": 12,
    },
    "split": {"test_fraction": 0.2},
}


class StageError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(message)
        self.stage = stage


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def _apply_set(config: dict, assignment: str) -> None:
    if "=" not in assignment:
        raise ValueError(f"--set expects key=value, got {assignment!r}")
    key, raw = assignment.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    node = config
    parts = key.split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value


def _sample_path(name: str) -> str:
    return str(resources.files("kirelex").joinpath("data", name))


def resolve_config(path: str | None, sets: list[str]) -> dict:
    config = copy.deepcopy(DEFAULT_CONFIG)
    if path:
        with open(path, "r", encoding="utf-8") as fh:
            config = _deep_merge(config, json.load(fh))
    for assignment in sets:
        _apply_set(config, assignment)
    env_seed = os.environ.get("KIRELEX_SEED")
    if env_seed is not None:
        config["seed"] = int(env_seed)
    if config["paths"]["tweets"] is None:
        config["paths"]["tweets"] = _sample_path("sample_tweets.jsonl")
    if config["paths"]["lexicon"] is None:
        config["paths"]["lexicon"] = _sample_path("sample_lexicon.jsonl")
    for key in ("tweets", "lexicon"):
        if not Path(config["paths"][key]).exists():
            raise StageError("config", f"missing input path {key}: {config['paths'][key]}")
    return config


def config_hash(config: dict) -> str:
    return hashlib.sha256(
        json.dumps(config, sort_keys=True).encode("utf-8")
    ).hexdigest()[:16]


def build_provider(config: dict) -> EmbeddingProvider:
    spec = config["provider"]
    if spec["kind"] == "hash":
        return HashProvider(dim=int(spec["dim"]), seed=int(config["seed"]))
    if spec["kind"] == "store":
        store_path = config["paths"].get("store") or spec.get("store")
        if not store_path:
            raise StageError("config", "store provider requires paths.store")
        return StoreProvider(read_store(store_path))
    if spec["kind"] == "http":
        if not spec.get("url"):
            raise StageError("config", "http provider requires provider.url")
        return HttpProvider(url=spec["url"], dim=int(spec["dim"]))
    raise StageError("config", f"unknown provider kind: {spec['kind']!r}")


def _matcher_config(config: dict) -> MatcherConfig:
    m = config["matcher"]
    return MatcherConfig(
        tau=float(m["tau"]),
        n_min=int(m["n_min"]),
        n_max=int(m["n_max"]),
        substitution=bool(m["substitution"]),
    )


def _train_config(config: dict) -> TrainConfig:
    t = config["train"]
    per_anchor = t["triplets_per_anchor"]
    return TrainConfig(
        margin=float(t["margin"]),
        learning_rate=float(t["learning_rate"]),
        epochs=int(t["epochs"]),
        triplets_per_anchor=None if per_anchor is None else int(per_anchor),
        optimizer=t["optimizer"],
        seed=int(config["seed"]),
        hidden_dim=int(t["hidden_dim"]),
        output_dim=int(t["output_dim"]),
        batch_size=int(t["batch_size"]),
        activation=t["activation"],
    )


def _projection_config(config: dict) -> viz.ProjectionConfig:
    p = config["projection"]
    return viz.ProjectionConfig(
        method=p["method"],
        seed=int(config["seed"]),
        tsne_perplexity=float(p["tsne_perplexity"]),
        tsne_iters=int(p["tsne_iters"]),
        tsne_learning_rate=float(p["tsne_learning_rate"]),
        tsne_early_exaggeration=float(p["tsne_early_exaggeration"]),
    )


class Pipeline:
    """Shared state and stage implementations for the subcommands."""

    def __init__(self, config: dict):
        self.config = config
        self.hash = config_hash(config)
        self.out = Path(config["paths"]["output_dir"])
        self.out.mkdir(parents=True, exist_ok=True)
        self.provider = build_provider(config)
        self.collection: TweetCollection = load_tweets(config["paths"]["tweets"])
        self.lexicon = load_lexicon(config["paths"]["lexicon"])
        self._records: dict[str, PhraseMatchRecord] | None = None
        self._model: metric.MetricModel | None = None
        self._train_ids: list[str] | None = None
        self._test_ids: list[str] | None = None

    def _write_json(self, name: str, payload: dict) -> None:
        payload = {"config_hash": self.hash, **payload}
        (self.out / name).write_text(
            json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8"
        )

    # ----- match -----

    def records(self) -> dict[str, PhraseMatchRecord]:
        if self._records is None:
            matches_path = self.out / "matches.jsonl"
            if matches_path.exists():
                self._records = _read_match_records(matches_path)
            else:
                cfg = _matcher_config(self.config)
                self._records = {}
                for tweet in self.collection:
                    tokens = tokenize(tweet)
                    self._records[tweet.id] = matcher.match_phrases(
                        tokens, self.lexicon, self.provider, cfg
                    )
        return self._records

    def stage_match(self) -> None:
        records = self.records()
        ordered = [records[t.id] for t in self.collection]
        matcher.write_match_records(
            ordered, self.out / "matches.jsonl", meta={"config_hash": self.hash}
        )

    # ----- train -----

    def _examples(self) -> list[metric.ExampleVector]:
        return metric.assemble_examples(
            self.collection.labeled(), self.records(), self.provider, use_phrases=True
        )

    def _split(self, examples):
        labels = {ex.tweet_id: ex.label for ex in examples}
        return evaluation.stratified_split(
            labels, float(self.config["split"]["test_fraction"]), int(self.config["seed"])
        )

    def stage_train(self) -> None:
        examples = self._examples()
        if not examples:
            raise StageError("train", "no fully matched labeled tweets to train on")
        train_ids, test_ids = self._split(examples)
        by_id = {ex.tweet_id: ex for ex in examples}
        model, history = metric.train([by_id[i] for i in train_ids], _train_config(self.config))
        metric.save_model(model, self.out / "model.kirx")
        self._write_json(
            "history.json",
            {"epoch_losses": history.epoch_losses, "triplet_count": history.triplet_count},
        )
        self._model, self._train_ids, self._test_ids = model, train_ids, test_ids

    def model(self) -> metric.MetricModel:
        if self._model is None:
            path = self.out / "model.kirx"
            if path.exists():
                self._model = metric.load_model(path)
            else:
                self.stage_train()
        assert self._model is not None
        return self._model

    def _labeled_points(self):
        examples = self._examples()
        train_ids, test_ids = self._split(examples)
        by_id = {ex.tweet_id: ex for ex in examples}
        model = self.model()
        points = [
            (i, metric.represent(model, by_id[i].input), by_id[i].label)
            for i in train_ids
        ]
        return points, [by_id[i] for i in test_ids]

    # ----- eval (held-out split) -----

    def stage_eval(self) -> None:
        points, test_examples = self._labeled_points()
        if not test_examples:
            raise StageError("eval", "empty held-out split")
        model = self.model()
        k = min(int(self.config["labeler"]["k"]), len(points))
        queries = [(ex.tweet_id, metric.represent(model, ex.input)) for ex in test_examples]
        weak = labeler.knn_label(points, queries, labeler.LabelerConfig(k=k))
        predictions = {wl.tweet_id: wl.label for wl in weak}
        gold = {ex.tweet_id: ex.label for ex in test_examples}
        report = evaluation.evaluate(predictions, gold)
        self._write_json("report.json", report.to_dict())

    # ----- label -----

    def stage_label(self) -> None:
        points, _ = self._labeled_points()
        model = self.model()
        records = self.records()
        queries = []
        for tweet in self.collection.unlabeled():
            record = records.get(tweet.id)
            if record is None or not record.fully_matched:
                continue
            vec = _assemble_input(record, self.provider)
            queries.append((tweet.id, metric.represent(model, vec)))
        k = min(int(self.config["labeler"]["k"]), len(points))
        weak = labeler.knn_label(points, queries, labeler.LabelerConfig(k=k))
        labeler.write_weak_labels(
            weak, self.out / "weak_labels.jsonl", meta={"config_hash": self.hash}
        )

    # ----- project -----

    def stage_project(self) -> None:
        model = self.model()
        records = self.records()
        gold = {t.id: t.label for t in self.collection}
        points = []
        for tweet in self.collection:
            record = records.get(tweet.id)
            if record is None or not record.fully_matched:
                continue
            vec = metric.represent(model, _assemble_input(record, self.provider))
            points.append((tweet.id, vec, gold[tweet.id]))
        projected = viz.project_2d(points, _projection_config(self.config))
        viz.emit_plot(projected, self.out / "projection.csv", "csv")
        viz.emit_plot(projected, self.out / "projection.svg", "svg")

    # ----- ablate -----

    def stage_ablate(self) -> None:
        report = evaluation.ablation_grid(
            self.collection,
            self.lexicon,
            self.provider,
            _train_config(self.config),
            int(self.config["seed"]),
            matcher_config=_matcher_config(self.config),
            labeler_config=labeler.LabelerConfig(k=int(self.config["labeler"]["k"])),
            test_fraction=float(self.config["split"]["test_fraction"]),
        )
        self._write_json("ablation.json", report.to_dict())

    # ----- manifest -----

    def write_manifest(self) -> None:
        artifacts = {}
        for path in sorted(self.out.iterdir()):
            if path.name == "manifest.json" or path.is_dir():
                continue
            artifacts[path.name] = hashlib.sha256(path.read_bytes()).hexdigest()
        self._write_json("manifest.json", {"artifacts": artifacts})


def _assemble_input(record: PhraseMatchRecord, provider: EmbeddingProvider) -> np.ndarray:
    assert record.cannabis is not None and record.depression is not None
    return np.concatenate(
        [
            provider.embed(record.substituted_text),
            provider.embed(record.cannabis.phrase),
            provider.embed(record.depression.phrase),
        ]
    )


def _read_match_records(path: Path) -> dict[str, PhraseMatchRecord]:
    records: dict[str, PhraseMatchRecord] = {}
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            obj = json.loads(line)
            if "_meta" in obj:
                continue
            records[obj["id"]] = PhraseMatchRecord(
                tweet_id=obj["id"],
                cannabis=_match_from_json(obj.get("cannabis")),
                depression=_match_from_json(obj.get("depression")),
                substituted_text=obj["substituted"],
            )
    return records


def _match_from_json(obj: dict | None) -> PhraseMatch | None:
    if obj is None:
        return None
    return PhraseMatch(
        ngram=obj["ngram"],
        phrase=obj["phrase"],
        canonical=obj["phrase"],
        similarity=obj["sim"],
        span=(obj["span"][0], obj["span"][1]),
    )


def _run_eval_files(pred_path: str, gold_path: str, out_path: str | None) -> None:
    def read_labels(path: str) -> dict[str, RelationLabel]:
        labels: dict[str, RelationLabel] = {}
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                obj = json.loads(line)
                if "_meta" in obj:
                    continue
                labels[obj["id"]] = RelationLabel.parse(obj["label"])
        return labels

    report = evaluation.evaluate(read_labels(pred_path), read_labels(gold_path))
    text = json.dumps(report.to_dict(), sort_keys=True, indent=2) + "\n"
    if out_path:
        Path(out_path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    sys.stdout.write(report.render_table() + "\n")


def _run_synth(args, config: dict) -> None:
    corpus = synth.generate_synthetic_corpus(
        synth.SynthConfig(n=args.n, seed=int(config["seed"]))
    )
    save_tweets(corpus, args.output)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="kirelex", description=__doc__)
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument(
        "--set",
        dest="sets",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config entry (dotted path, JSON value)",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("match", "train", "label", "ablate", "project", "pipeline"):
        sub.add_parser(name)
    eval_parser = sub.add_parser("eval")
    eval_parser.add_argument("--pred", help="predictions JSONL (id/label)")
    eval_parser.add_argument("--gold", help="gold JSONL (id/label)")
    eval_parser.add_argument("--out", help="write the report JSON here")
    synth_parser = sub.add_parser("synth")
    synth_parser.add_argument("--n", type=int, default=300)
    synth_parser.add_argument("--output", required=True)

    args = parser.parse_args(argv)
    stage = args.command
    try:
        config = resolve_config(args.config, args.sets)
        if args.command == "synth":
            _run_synth(args, config)
            return 0
        if args.command == "eval" and args.pred and args.gold:
            _run_eval_files(args.pred, args.gold, args.out)
            return 0

        pipeline = Pipeline(config)
        stages = {
            "match": [pipeline.stage_match],
            "train": [pipeline.stage_match, pipeline.stage_train],
            "eval": [pipeline.stage_eval],
            "label": [pipeline.stage_label],
            "ablate": [pipeline.stage_ablate],
            "project": [pipeline.stage_project],
            "pipeline": [
                pipeline.stage_match,
                pipeline.stage_train,
                pipeline.stage_eval,
                pipeline.stage_label,
                pipeline.stage_project,
            ],
        }
        for fn in stages[args.command]:
            stage = fn.__name__.removeprefix("stage_")
            fn()
        pipeline.write_manifest()
        return 0
    except StageError as exc:
        sys.stderr.write(json.dumps({"stage": exc.stage, "error": str(exc)}) + "\n")
        return 1
    except Exception as exc:  # pragma: no cover - defensive catch-all per stage
        sys.stderr.write(json.dumps({"stage": stage, "error": str(exc)}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
