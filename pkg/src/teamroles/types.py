"""Core vocabulary types shared by the whole pipeline.

All types are immutable value objects; invariants are checked at
construction so downstream code can rely on them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .errors import PipelineError

CORPUS_YEAR_MIN = 2003
CORPUS_YEAR_MAX = 2020


class RoleLabel(Enum):
    """Three-level author-role taxonomy, ordered by hierarchy rank."""

    LEADERSHIP = "Leadership"
    DIRECT_SUPPORT = "Direct Support"
    INDIRECT_SUPPORT = "Indirect Support"

    @property
    def rank(self) -> int:
        return _ROLE_RANK[self]

    @classmethod
    def from_string(cls, text: str) -> "RoleLabel":
        key = text.strip().lower().replace("_", " ")
        for label in cls:
            if label.value.lower() == key:
                return label
        raise ValueError(f"unknown role label: {text!r}")


_ROLE_RANK = {
    RoleLabel.LEADERSHIP: 2,
    RoleLabel.DIRECT_SUPPORT: 1,
    RoleLabel.INDIRECT_SUPPORT: 0,
}

# Canonical iteration order, highest rank first.
ROLE_ORDER = (RoleLabel.LEADERSHIP, RoleLabel.DIRECT_SUPPORT, RoleLabel.INDIRECT_SUPPORT)


class BinaryRole(Enum):
    LEADERSHIP = "Leadership"
    SUPPORT = "Support"

    @classmethod
    def from_string(cls, text: str) -> "BinaryRole":
        key = text.strip().lower()
        for label in cls:
            if label.value.lower() == key:
                return label
        raise ValueError(f"unknown binary role: {text!r}")


def to_binary(label: RoleLabel) -> BinaryRole:
    """Collapse the three-level taxonomy to Leadership vs Support."""
    if label is RoleLabel.LEADERSHIP:
        return BinaryRole.LEADERSHIP
    return BinaryRole.SUPPORT


def role_max(a: RoleLabel, b: RoleLabel) -> RoleLabel:
    """Higher of two roles under Leadership > Direct Support > Indirect Support."""
    return a if a.rank >= b.rank else b


class Journal(Enum):
    PNAS = "PNAS"
    NATURE = "Nature"
    SCIENCE = "Science"
    PLOS_ONE = "PLoS One"


# Case-insensitive alias table for journal normalization.
_JOURNAL_ALIASES = {
    "pnas": Journal.PNAS,
    "proceedings of the national academy of sciences": Journal.PNAS,
    "nature": Journal.NATURE,
    "science": Journal.SCIENCE,
    "plos one": Journal.PLOS_ONE,
    "plos  one": Journal.PLOS_ONE,
    "plosone": Journal.PLOS_ONE,
}


class UnknownJournal(PipelineError):
    pass


def parse_journal(name: str) -> Journal:
    """Normalize a journal string to the canonical enum; unknown names are rejected."""
    key = " ".join(name.strip().lower().split())
    try:
        return _JOURNAL_ALIASES[key]
    except KeyError:
        raise UnknownJournal(f"unknown journal: {name!r}") from None


@dataclass(frozen=True)
class ContributionRecord:
    """One author's self-reported statement on one paper."""

    paper_id: str
    journal: Journal
    year: int
    author_name: str
    author_position: int
    is_corresponding: bool
    statement: str
    gold_role: Optional[RoleLabel] = None

    def __post_init__(self):
        if self.author_position < 1:
            raise ValueError(f"author_position must be >= 1, got {self.author_position}")

    @property
    def record_id(self) -> str:
        return f"{self.paper_id}#{self.author_position}"


@dataclass(frozen=True)
class PaperRecord:
    paper_id: str
    journal: Journal
    year: int
    authors: tuple  # ordered ContributionRecord tuple
    referenced_work_ids: frozenset = frozenset()
    topic_ids: frozenset = frozenset()

    def __post_init__(self):
        positions = [a.author_position for a in self.authors]
        if any(p > len(self.authors) for p in positions):
            raise ValueError(
                f"paper {self.paper_id}: author_position exceeds team size {len(self.authors)}"
            )

    @property
    def team_size(self) -> int:
        return len(self.authors)


@dataclass(frozen=True)
class WorkEntry:
    """One publication in an author's history."""

    work_id: str
    year: int
    author_position: int
    is_corresponding: bool
    referenced_work_ids: frozenset
    topic_ids: frozenset
    citation_count: int
    institution_ids: frozenset

    def __post_init__(self):
        if self.citation_count < 0:
            raise ValueError(f"citation_count must be >= 0, got {self.citation_count}")


@dataclass(frozen=True)
class AuthorProfile:
    author_id: str
    works: tuple  # tuple of WorkEntry

    def __post_init__(self):
        ids = [w.work_id for w in self.works]
        if len(ids) != len(set(ids)):
            raise ValueError(f"profile {self.author_id} contains duplicate work ids")

    def before(self, year: int) -> "AuthorProfile":
        """Restrict the profile to works published strictly before `year`."""
        return AuthorProfile(self.author_id, tuple(w for w in self.works if w.year < year))


# Canonical feature order (index 0-9). Model input and attribution output
# are both aligned to this order.
FEATURE_NAMES = (
    "contribution_to_references",
    "contribution_to_topics",
    "probability_of_leading",
    "probability_of_leading_correspondence",
    "career_age",
    "citation_count",
    "unique_topics",
    "total_publications",
    "citation_impact_per_year",
    "institutional_diversity",
)

_RATIO_FEATURES = frozenset(FEATURE_NAMES[:4])


@dataclass(frozen=True)
class FeatureVector:
    contribution_to_references: float
    contribution_to_topics: float
    probability_of_leading: float
    probability_of_leading_correspondence: float
    career_age: float
    citation_count: float
    unique_topics: float
    total_publications: float
    citation_impact_per_year: float
    institutional_diversity: float

    def __post_init__(self):
        for name in FEATURE_NAMES:
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValueError(f"feature {name} is not finite: {value}")
            if value < 0:
                raise ValueError(f"feature {name} is negative: {value}")
            if name in _RATIO_FEATURES and value > 1.0:
                raise ValueError(f"ratio feature {name} exceeds 1: {value}")

    def to_list(self) -> list:
        return [float(getattr(self, name)) for name in FEATURE_NAMES]

    @classmethod
    def from_list(cls, values) -> "FeatureVector":
        if len(values) != len(FEATURE_NAMES):
            raise ValueError(f"expected {len(FEATURE_NAMES)} values, got {len(values)}")
        return cls(*[float(v) for v in values])

    def to_dict(self) -> dict:
        return {name: float(getattr(self, name)) for name in FEATURE_NAMES}

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureVector":
        return cls(**{name: float(data[name]) for name in FEATURE_NAMES})
