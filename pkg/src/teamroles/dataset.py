"""Labeled-example assembly and the stratified train/test split."""
from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass
from typing import Dict, List, Sequence

from .errors import PipelineError
from .types import FEATURE_NAMES, BinaryRole, FeatureVector


class ClassTooSmall(PipelineError):
    def __init__(self, label):
        super().__init__(f"class {label} has fewer than 2 examples")
        self.label = label


@dataclass(frozen=True)
class LabeledExample:
    author_id: str
    paper_id: str
    features: FeatureVector
    label: BinaryRole


@dataclass(frozen=True)
class SplitResult:
    train: List[LabeledExample]
    test: List[LabeledExample]
    seed: int
    ratio: float


def stratified_split(
    examples: Sequence[LabeledExample],
    ratio: float,
    seed: int,
    group_by_author: bool = False,
) -> SplitResult:
    """Per-class split: the test partition gets round(ratio * class_count) examples.

    `ratio` is the test fraction. With group_by_author=True whole authors
    are assigned to one side, preventing same-author leakage (off by
    default to match the plain example-level split).
    """
    if not (0.0 < ratio < 1.0):
        raise ValueError(f"ratio must be in (0,1), got {ratio}")

    rng = random.Random(seed)
    by_class: Dict[BinaryRole, List[LabeledExample]] = {}
    for ex in examples:
        by_class.setdefault(ex.label, []).append(ex)
    for label, members in by_class.items():
        if len(members) < 2:
            raise ClassTooSmall(label)

    train: List[LabeledExample] = []
    test: List[LabeledExample] = []
    for label in sorted(by_class, key=lambda b: b.value):
        members = by_class[label]
        if group_by_author:
            groups: Dict[str, List[LabeledExample]] = {}
            for ex in members:
                groups.setdefault(ex.author_id, []).append(ex)
            keys = sorted(groups)
            rng.shuffle(keys)
            n_test = math.floor(ratio * len(members) + 0.5)
            picked = 0
            for key in keys:
                if picked < n_test:
                    test.extend(groups[key])
                    picked += len(groups[key])
                else:
                    train.extend(groups[key])
        else:
            order = list(range(len(members)))
            rng.shuffle(order)
            n_test = math.floor(ratio * len(members) + 0.5)
            test.extend(members[i] for i in order[:n_test])
            train.extend(members[i] for i in order[n_test:])
    return SplitResult(train, test, seed, ratio)


FEATURE_TABLE_HEADER = ["author_id", "paper_id", *FEATURE_NAMES, "label"]


def write_examples(examples: Sequence[LabeledExample], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(FEATURE_TABLE_HEADER)
        for ex in examples:
            writer.writerow(
                [ex.author_id, ex.paper_id]
                + [repr(v) for v in ex.features.to_list()]
                + [ex.label.value]
            )


def read_examples(path) -> List[LabeledExample]:
    examples = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            examples.append(
                LabeledExample(
                    author_id=row["author_id"],
                    paper_id=row["paper_id"],
                    features=FeatureVector.from_list([float(row[n]) for n in FEATURE_NAMES]),
                    label=BinaryRole.from_string(row["label"]),
                )
            )
    return examples


def write_split_manifest(result: SplitResult, path) -> None:
    counts = {"train": {}, "test": {}}
    for name, part in (("train", result.train), ("test", result.test)):
        for label in BinaryRole:
            counts[name][label.value] = sum(1 for ex in part if ex.label is label)
    manifest = {
        "schema_version": 1,
        "seed": result.seed,
        "ratio": result.ratio,
        "counts": counts,
        "n_train": len(result.train),
        "n_test": len(result.test),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
