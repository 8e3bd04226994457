"""Corpus parsing and journal-stratified sampling.

Input corpora are delimited tables or JSON-lines with one (paper, author)
row per line. Rows that violate corpus invariants are collected into a
rejects report instead of being silently dropped.
"""
from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .errors import PipelineError
from .types import (
    CORPUS_YEAR_MAX,
    CORPUS_YEAR_MIN,
    ContributionRecord,
    Journal,
    PaperRecord,
    RoleLabel,
    UnknownJournal,
    parse_journal,
)

REQUIRED_FIELDS = ("paper_id", "journal", "year", "author_name", "statement")
OPTIONAL_FIELDS = ("author_position", "is_corresponding", "gold_role")


class FileUnreadable(PipelineError):
    pass


class FormatError(PipelineError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class MissingColumn(PipelineError):
    def __init__(self, name: str):
        super().__init__(f"missing required column: {name}")
        self.name = name


class InsufficientPapers(PipelineError):
    def __init__(self, journal: Journal, available: int, requested: int):
        super().__init__(
            f"{journal.value}: {available} eligible papers, {requested} requested"
        )
        self.journal = journal
        self.available = available
        self.requested = requested


class NonPositiveInput(PipelineError):
    pass


@dataclass(frozen=True)
class CorpusFile:
    path: Path
    format: str = "delimited-table"  # or "json-lines"
    column_map: Dict[str, str] = field(default_factory=dict)  # source column -> record field
    delimiter: str = ","

    def __post_init__(self):
        if self.format not in ("delimited-table", "json-lines"):
            raise ValueError(f"unknown corpus format: {self.format}")


@dataclass(frozen=True)
class SamplingPlan:
    per_journal: int = 250
    min_team: int = 2
    max_team: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.per_journal < 1:
            raise ValueError("per_journal must be >= 1")
        if self.min_team > self.max_team:
            raise ValueError("min_team must be <= max_team")


@dataclass(frozen=True)
class Reject:
    line: int
    row: dict
    reason: str


@dataclass
class ParseResult:
    records: List[ContributionRecord]
    rejects: List[Reject]


def _truthy(value) -> bool:
    if isinstance(value, bool):
        return value
    return str(value).strip().lower() in ("1", "true", "yes", "y", "t")


def _iter_rows(file: CorpusFile):
    """Yield (line_number, row_dict) for either supported format."""
    try:
        text = Path(file.path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FileUnreadable(f"cannot read {file.path}: {exc}") from exc

    if file.format == "json-lines":
        for lineno, line in enumerate(text.splitlines(), start=1):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError as exc:
                raise FormatError(lineno, f"bad JSON: {exc}") from exc
            if not isinstance(row, dict):
                raise FormatError(lineno, "row is not a JSON object")
            yield lineno, row
    else:
        reader = csv.DictReader(text.splitlines(), delimiter=file.delimiter)
        if reader.fieldnames is None:
            raise FormatError(1, "empty file, header row required")
        for lineno, row in enumerate(reader, start=2):
            if None in row.values() or None in row:
                raise FormatError(lineno, "column count does not match header")
            yield lineno, row


def parse_corpus(file: CorpusFile) -> ParseResult:
    """Parse a corpus file into ContributionRecords plus a rejects report.

    record count + reject count always equals the input row count.
    """
    column_map = dict(file.column_map)
    records: List[ContributionRecord] = []
    rejects: List[Reject] = []
    # per-paper fallback when the source carries no position column
    position_counter: Dict[str, int] = {}

    first = True
    for lineno, raw in _iter_rows(file):
        if column_map:
            row = {column_map.get(k, k): v for k, v in raw.items()}
        else:
            row = dict(raw)
        if first:
            for name in REQUIRED_FIELDS:
                if name not in row:
                    raise MissingColumn(name)
            first = False

        try:
            journal = parse_journal(str(row["journal"]))
        except UnknownJournal:
            rejects.append(Reject(lineno, raw, "unknown_journal"))
            continue
        try:
            year = int(row["year"])
        except (TypeError, ValueError):
            rejects.append(Reject(lineno, raw, "bad_year"))
            continue
        if not (CORPUS_YEAR_MIN <= year <= CORPUS_YEAR_MAX):
            rejects.append(Reject(lineno, raw, "year_out_of_range"))
            continue
        statement = str(row["statement"]).strip()
        if not statement:
            rejects.append(Reject(lineno, raw, "empty_statement"))
            continue

        paper_id = str(row["paper_id"])
        if row.get("author_position") not in (None, ""):
            try:
                position = int(row["author_position"])
            except (TypeError, ValueError):
                rejects.append(Reject(lineno, raw, "bad_author_position"))
                continue
        else:
            position = position_counter.get(paper_id, 0) + 1
        if position < 1:
            rejects.append(Reject(lineno, raw, "bad_author_position"))
            continue
        position_counter[paper_id] = max(position_counter.get(paper_id, 0), position)

        gold_role: Optional[RoleLabel] = None
        if row.get("gold_role") not in (None, ""):
            try:
                gold_role = RoleLabel.from_string(str(row["gold_role"]))
            except ValueError:
                rejects.append(Reject(lineno, raw, "bad_gold_role"))
                continue

        records.append(
            ContributionRecord(
                paper_id=paper_id,
                journal=journal,
                year=year,
                author_name=str(row["author_name"]).strip(),
                author_position=position,
                is_corresponding=_truthy(row.get("is_corresponding", False)),
                statement=statement,
                gold_role=gold_role,
            )
        )
    return ParseResult(records, rejects)


def group_papers(records: List[ContributionRecord]) -> List[PaperRecord]:
    """Group per-author rows into PaperRecords, preserving first-seen order."""
    by_paper: Dict[str, List[ContributionRecord]] = {}
    for rec in records:
        by_paper.setdefault(rec.paper_id, []).append(rec)
    papers = []
    for paper_id, recs in by_paper.items():
        recs = sorted(recs, key=lambda r: r.author_position)
        papers.append(
            PaperRecord(
                paper_id=paper_id,
                journal=recs[0].journal,
                year=recs[0].year,
                authors=tuple(recs),
            )
        )
    return papers


def sample_papers(papers: List[PaperRecord], plan: SamplingPlan) -> List[PaperRecord]:
    """Seeded per-journal sampling: shuffle eligible papers, take a prefix.

    Deterministic given the seed and independent of input ordering.
    """
    eligible: Dict[Journal, List[PaperRecord]] = {j: [] for j in Journal}
    for paper in papers:
        if plan.min_team <= paper.team_size <= plan.max_team:
            eligible[paper.journal].append(paper)

    rng = random.Random(plan.seed)
    selected: List[PaperRecord] = []
    for journal in Journal:
        pool = sorted(eligible[journal], key=lambda p: p.paper_id)
        if len(pool) < plan.per_journal:
            raise InsufficientPapers(journal, len(pool), plan.per_journal)
        rng.shuffle(pool)
        selected.extend(pool[: plan.per_journal])
    return selected


def expected_rows(journals: float, per_journal: float, avg_authors: float) -> float:
    """Expected labeled-row count for a sampling plan: journals x entries x mean team size."""
    if journals <= 0 or per_journal <= 0 or avg_authors <= 0:
        raise NonPositiveInput("all sizing inputs must be positive")
    return journals * per_journal * avg_authors


def record_to_json(rec: ContributionRecord) -> dict:
    return {
        "paper_id": rec.paper_id,
        "journal": rec.journal.value,
        "year": rec.year,
        "author_name": rec.author_name,
        "author_position": rec.author_position,
        "is_corresponding": rec.is_corresponding,
        "statement": rec.statement,
        "gold_role": rec.gold_role.value if rec.gold_role else None,
    }


def record_from_json(data: dict) -> ContributionRecord:
    return ContributionRecord(
        paper_id=data["paper_id"],
        journal=parse_journal(data["journal"]),
        year=int(data["year"]),
        author_name=data["author_name"],
        author_position=int(data["author_position"]),
        is_corresponding=bool(data["is_corresponding"]),
        statement=data["statement"],
        gold_role=RoleLabel.from_string(data["gold_role"]) if data.get("gold_role") else None,
    )


def write_corpus(records: List[ContributionRecord], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(record_to_json(rec), sort_keys=True) + "\n")


def read_corpus(path) -> List[ContributionRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(record_from_json(json.loads(line)))
    return records


def write_rejects(rejects: List[Reject], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rej in rejects:
            row = dict(rej.row)
            row["reject_reason"] = rej.reason
            row["line"] = rej.line
            fh.write(json.dumps(row, sort_keys=True) + "\n")
