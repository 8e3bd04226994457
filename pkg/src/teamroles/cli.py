"""Pipeline CLI: one subcommand per stage, file artifacts between stages.

Stage artifacts are plain files in --output-dir so every stage can be
inspected and re-run independently; re-running a stage over unchanged
inputs produces identical bytes. Configuration comes from a JSON file
(--config) with every field overridable by a flag; the effective config
is echoed into the output directory.
"""
from __future__ import annotations

import argparse
import csv
import json
import shutil
import sys
from pathlib import Path

import numpy as np

from . import dataset, explain, features, ingest, llm, metrics, mlp, openalex
from .errors import ConfigError, PipelineError, UpstreamArtifactMissing
from .types import BinaryRole, PaperRecord, to_binary

DEFAULT_CONFIG = {
    "output_dir": "out",
    "cache_dir": None,
    "offline": False,
    "seed": 0,
    "mailto": None,
    "split_ratio": 0.2,
    "sampling": {"per_journal": 250, "min_team": 2, "max_team": 8},
    "backend": {
        "endpoint_url": "",
        "model_name": "mock",
        "temperature": 0.01,
        "max_retries": 2,
        "api_key_env": "TEAMROLES_API_KEY",
    },
    "train": {"epochs": 20, "batch_size": 32, "learning_rate": 0.001, "hidden_sizes": [64, 32]},
    "explain": {"n_samples": 256, "n_baseline_samples": 32, "svg": False},
}

ARTIFACTS = {
    "corpus": "corpus.jsonl",
    "rejects": "rejects.jsonl",
    "sampled": "corpus_sampled.jsonl",
    "labels_rule": "labels_rule.jsonl",
    "labels_llm": "labels_llm.jsonl",
    "features": "features.csv",
    "train": "train.csv",
    "test": "test.csv",
    "split_manifest": "split_manifest.json",
    "model": "model.json",
    "metrics": "metrics.json",
    "metrics_text": "metrics.txt",
    "attributions": "attributions.csv",
    "shap_summary": "shap_summary.csv",
    "lratio": "lratio.csv",
}


def load_config(args) -> dict:
    config = json.loads(json.dumps(DEFAULT_CONFIG))  # deep copy
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                user = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load config {args.config}: {exc}") from exc
        for key, value in user.items():
            if isinstance(value, dict) and isinstance(config.get(key), dict):
                config[key].update(value)
            else:
                config[key] = value
    for name in ("output_dir", "cache_dir", "seed"):
        value = getattr(args, name.replace("-", "_"), None)
        if value is not None:
            config[name] = value
    if getattr(args, "offline", False):
        config["offline"] = True
    return config


def _out(config: dict, key: str) -> Path:
    return Path(config["output_dir"]) / ARTIFACTS[key]


def _require(stage: str, path: Path) -> Path:
    if not path.exists():
        raise UpstreamArtifactMissing(stage, str(path))
    return path


def _echo_config(config: dict) -> None:
    out_dir = Path(config["output_dir"])
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "config_used.json", "w", encoding="utf-8") as fh:
        json.dump({"schema_version": 1, **config}, fh, indent=2, sort_keys=True)


def _client(config: dict) -> openalex.OpenAlexClient:
    if not config.get("cache_dir"):
        raise ConfigError("cache_dir is required for OpenAlex-backed stages")
    return openalex.OpenAlexClient(
        openalex.ClientConfig(
            mailto=config.get("mailto"),
            cache_dir=Path(config["cache_dir"]),
            offline=bool(config["offline"]),
        )
    )


def _read_labels(path: Path) -> dict:
    labels = {}
    for outcome in llm.read_outcomes(path):
        if outcome.label is not None:
            labels[outcome.record_id] = outcome.label
    return labels


def cmd_ingest(args, config) -> int:
    corpus_file = ingest.CorpusFile(
        path=Path(args.input), format=args.format, delimiter=args.delimiter
    )
    result = ingest.parse_corpus(corpus_file)
    ingest.write_corpus(result.records, _out(config, "corpus"))
    ingest.write_rejects(result.rejects, _out(config, "rejects"))
    print(f"ingest: {len(result.records)} records, {len(result.rejects)} rejects")
    return 0


def cmd_sample(args, config) -> int:
    records = ingest.read_corpus(_require("sample", _out(config, "corpus")))
    papers = ingest.group_papers(records)
    plan = ingest.SamplingPlan(
        per_journal=config["sampling"]["per_journal"],
        min_team=config["sampling"]["min_team"],
        max_team=config["sampling"]["max_team"],
        seed=int(config["seed"]),
    )
    selected = ingest.sample_papers(papers, plan)
    rows = [rec for paper in selected for rec in paper.authors]
    ingest.write_corpus(rows, _out(config, "sampled"))
    print(f"sample: {len(selected)} papers, {len(rows)} rows")
    return 0


def cmd_label_rule(args, config) -> int:
    from .rules import NoKeywordMatch, classify_statement

    records = ingest.read_corpus(_require("label-rule", _out(config, "corpus")))
    outcomes = []
    for rec in records:
        try:
            label = classify_statement(rec.statement)
            outcomes.append(llm.BatchOutcome(rec.record_id, label, None, None))
        except NoKeywordMatch as exc:
            outcomes.append(llm.BatchOutcome(rec.record_id, None, f"NoKeywordMatch: {exc}", None))
    llm.write_outcomes(outcomes, _out(config, "labels_rule"))
    labeled = sum(1 for o in outcomes if o.ok)
    print(f"label-rule: {labeled}/{len(outcomes)} labeled")
    return 0


def cmd_label_llm(args, config) -> int:
    records = ingest.read_corpus(_require("label-llm", _out(config, "corpus")))
    backend_cfg = llm.BackendConfig(
        endpoint_url=config["backend"]["endpoint_url"],
        model_name=config["backend"]["model_name"],
        temperature=config["backend"]["temperature"],
        max_retries=config["backend"]["max_retries"],
        api_key_env=config["backend"]["api_key_env"],
    )
    if args.backend == "http":
        backend = llm.HttpBackend()
    else:
        backend = llm.MockBackend()
    outcomes = llm.classify_batch(records, backend, config=backend_cfg)
    llm.write_outcomes(outcomes, _out(config, "labels_llm"))
    labeled = sum(1 for o in outcomes if o.ok)
    print(f"label-llm: {labeled}/{len(outcomes)} labeled via {args.backend}")
    return 0


def cmd_fetch(args, config) -> int:
    records = ingest.read_corpus(_require("fetch", _out(config, "corpus")))
    client = _client(config)
    fetched, failed = 0, 0
    for rec in records:
        try:
            author_id = client.resolve_author(rec.author_name, rec.paper_id)
            client.fetch_author_profile(author_id)
            fetched += 1
        except PipelineError:
            failed += 1
    client.write_manifest()
    print(f"fetch: {fetched} profiles, {failed} failures")
    return 0


def cmd_featurize(args, config) -> int:
    corpus_path = _require("featurize", _out(config, "corpus"))
    labels_path = Path(args.labels) if args.labels else _out(config, "labels_rule")
    _require("featurize", labels_path)
    records = ingest.read_corpus(corpus_path)
    labels = _read_labels(labels_path)
    client = _client(config)

    # one focal-paper record per paper, shared across its authors
    focal_by_paper = {}
    for rec in records:
        if rec.paper_id in focal_by_paper:
            continue
        try:
            work = client.fetch_work(rec.paper_id)
        except PipelineError as exc:
            print(f"featurize: cannot fetch {rec.paper_id}: {exc}", file=sys.stderr)
            focal_by_paper[rec.paper_id] = None
            continue
        focal_by_paper[rec.paper_id] = PaperRecord(
            paper_id=rec.paper_id,
            journal=rec.journal,
            year=rec.year,
            authors=tuple(r for r in records if r.paper_id == rec.paper_id),
            referenced_work_ids=work.referenced_work_ids,
            topic_ids=work.topic_ids,
        )

    examples = []
    skipped = 0
    for rec in records:
        role = labels.get(rec.record_id)
        focal = focal_by_paper.get(rec.paper_id)
        if role is None or focal is None:
            skipped += 1
            continue
        try:
            author_id = client.resolve_author(rec.author_name, rec.paper_id)
            profile = client.fetch_author_profile(author_id)
        except PipelineError as exc:
            print(f"featurize: skipping {rec.record_id}: {exc}", file=sys.stderr)
            skipped += 1
            continue
        examples.append(
            dataset.LabeledExample(
                author_id=author_id,
                paper_id=rec.paper_id,
                features=features.extract_features(profile, focal),
                label=to_binary(role),
            )
        )
    dataset.write_examples(examples, _out(config, "features"))
    print(f"featurize: {len(examples)} examples, {skipped} skipped")
    return 0


def cmd_split(args, config) -> int:
    examples = dataset.read_examples(_require("split", _out(config, "features")))
    result = dataset.stratified_split(
        examples,
        ratio=float(config["split_ratio"]),
        seed=int(config["seed"]),
        group_by_author=bool(args.group_by_author),
    )
    dataset.write_examples(result.train, _out(config, "train"))
    dataset.write_examples(result.test, _out(config, "test"))
    dataset.write_split_manifest(result, _out(config, "split_manifest"))
    print(f"split: {len(result.train)} train, {len(result.test)} test")
    return 0


def cmd_train(args, config) -> int:
    examples = dataset.read_examples(_require("train", _out(config, "train")))
    train_cfg = mlp.TrainConfig(
        epochs=int(config["train"]["epochs"]),
        batch_size=int(config["train"]["batch_size"]),
        learning_rate=float(config["train"]["learning_rate"]),
        hidden_sizes=tuple(config["train"]["hidden_sizes"]),
        seed=int(config["seed"]),
    )
    model = mlp.train(examples, train_cfg)
    mlp.save_model(model, _out(config, "model"))
    print(f"train: {len(examples)} examples, final loss {model.loss_history[-1]:.4f}")
    return 0


def cmd_evaluate(args, config) -> int:
    model = mlp.load_model(_require("evaluate", _out(config, "model")))
    examples = dataset.read_examples(_require("evaluate", _out(config, "test")))
    gold = [ex.label for ex in examples]
    predicted = [mlp.predict(model, ex.features) for ex in examples]
    report = metrics.classification_report(gold, predicted, labels=list(BinaryRole))
    metrics.save_report(report, _out(config, "metrics"))
    with open(_out(config, "metrics_text"), "w", encoding="utf-8") as fh:
        fh.write(metrics.report_to_text(report) + "\n")
    print(f"evaluate: macro F1 {report.macro_f1:.3f} on {len(examples)} test examples")
    return 0


def cmd_explain(args, config) -> int:
    model = mlp.load_model(_require("explain", _out(config, "model")))
    train_examples = dataset.read_examples(_require("explain", _out(config, "train")))
    test_examples = dataset.read_examples(_require("explain", _out(config, "test")))

    seed = int(config["seed"])
    rng = np.random.default_rng(seed)
    n_baselines = min(int(config["explain"]["n_baseline_samples"]), len(train_examples))
    picks = rng.choice(len(train_examples), size=n_baselines, replace=False)
    baselines = [np.zeros(len(model.config.feature_indices))]
    baselines += [mlp.model_input(model, train_examples[i].features) for i in picks]

    attributions = []
    ids = []
    for i, ex in enumerate(test_examples):
        x = mlp.model_input(model, ex.features)
        attributions.append(
            explain.gradient_shap(
                model, x, baselines, n_samples=int(config["explain"]["n_samples"]), seed=seed + i
            )
        )
        ids.append(f"{ex.paper_id}:{ex.author_id}")
    explain.write_attributions(attributions, ids, _out(config, "attributions"))
    rows = explain.shap_summary(attributions)
    explain.write_summary(rows, _out(config, "shap_summary"))
    if config["explain"].get("svg"):
        explain.write_summary_svg(rows, Path(config["output_dir"]) / "shap_summary.svg")
    print(f"explain: {len(attributions)} attributions, top feature {rows[0].feature}")
    return 0


def cmd_lratio(args, config) -> int:
    records = ingest.read_corpus(_require("lratio", _out(config, "corpus")))
    labels_path = Path(args.labels) if args.labels else _out(config, "labels_rule")
    labels = _read_labels(_require("lratio", labels_path))

    teams = {}
    for rec in records:
        label = labels.get(rec.record_id)
        if label is not None:
            teams.setdefault(rec.paper_id, []).append(label)
    with open(_out(config, "lratio"), "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["paper_id", "team_size", "l_ratio"])
        for paper_id in sorted(teams):
            team = teams[paper_id]
            writer.writerow([paper_id, len(team), repr(metrics.l_ratio(team))])
    print(f"lratio: {len(teams)} papers")
    return 0


def cmd_report(args, config) -> int:
    report_dir = Path(config["output_dir"]) / "report"
    report_dir.mkdir(parents=True, exist_ok=True)
    shutil.copyfile(_require("report", _out(config, "metrics")), report_dir / "metrics.json")
    shutil.copyfile(
        _require("report", _out(config, "shap_summary")), report_dir / "shap_summary.csv"
    )

    labels_path = Path(args.labels) if args.labels else _out(config, "labels_rule")
    labels = _read_labels(_require("report", labels_path))
    distribution = metrics.label_distribution(list(labels.values()))
    with open(report_dir / "distribution.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["role", "count"])
        for role, count in distribution.items():
            writer.writerow([role.value, count])
    print(f"report: written to {report_dir}")
    return 0


COMMANDS = {
    "ingest": cmd_ingest,
    "sample": cmd_sample,
    "label-rule": cmd_label_rule,
    "label-llm": cmd_label_llm,
    "fetch": cmd_fetch,
    "featurize": cmd_featurize,
    "split": cmd_split,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "explain": cmd_explain,
    "lratio": cmd_lratio,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="teamroles", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--output-dir", dest="output_dir", help="artifact directory")
        p.add_argument("--cache-dir", dest="cache_dir", help="metadata cache directory")
        p.add_argument("--seed", type=int, help="pipeline seed")
        p.add_argument("--offline", action="store_true", help="never touch the network")

    p = sub.add_parser("ingest", help="parse a raw corpus into canonical JSON-lines")
    p.add_argument("--input", required=True)
    p.add_argument("--format", choices=["delimited-table", "json-lines"], default="delimited-table")
    p.add_argument("--delimiter", default=",")
    common(p)

    p = sub.add_parser("sample", help="journal-stratified paper sampling")
    common(p)

    p = sub.add_parser("label-rule", help="keyword-hierarchy labeling")
    common(p)

    p = sub.add_parser("label-llm", help="few-shot chat-backend labeling")
    p.add_argument("--backend", choices=["mock", "http"], default="mock")
    common(p)

    p = sub.add_parser("fetch", help="warm the metadata cache for the corpus")
    common(p)

    p = sub.add_parser("featurize", help="compute the ten features per labeled record")
    p.add_argument("--labels", help="labels file (default labels_rule.jsonl)")
    common(p)

    p = sub.add_parser("split", help="stratified train/test split")
    p.add_argument("--group-by-author", action="store_true")
    common(p)

    p = sub.add_parser("train", help="train the dense network")
    common(p)

    p = sub.add_parser("evaluate", help="score the model on the test partition")
    common(p)

    p = sub.add_parser("explain", help="gradient-path attributions for test examples")
    common(p)

    p = sub.add_parser("lratio", help="per-paper leadership ratio")
    p.add_argument("--labels", help="labels file (default labels_rule.jsonl)")
    common(p)

    p = sub.add_parser("report", help="aggregate metrics, distribution, and attributions")
    p.add_argument("--labels", help="labels file (default labels_rule.jsonl)")
    common(p)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
        _echo_config(config)
        return COMMANDS[args.command](args, config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except UpstreamArtifactMissing as exc:
        print(f"missing upstream artifact: {exc}", file=sys.stderr)
        return 3
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
