"""OpenAlex metadata client with an append-only cache and offline mode.

The cache is one JSON-lines file per entity kind, keyed by normalized
request URL; with offline=True no network call is ever made, so a
complete fixture cache makes the downstream pipeline byte-reproducible.
"""
from __future__ import annotations

import json
import re
import threading
import time
import unicodedata
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple
from urllib.parse import parse_qsl, urlencode, urlsplit, urlunsplit

from .errors import PipelineError
from .types import AuthorProfile, WorkEntry

PAGE_SIZE = 200


class NotFound(PipelineError):
    pass


class RateLimited(PipelineError):
    pass


class OfflineCacheMiss(PipelineError):
    pass


class MalformedResponse(PipelineError):
    def __init__(self, field_name: str, detail: str = ""):
        super().__init__(f"missing or malformed field: {field_name} {detail}".strip())
        self.field_name = field_name


class NoMatch(PipelineError):
    pass


class AmbiguousMatch(PipelineError):
    def __init__(self, candidates: List[str]):
        super().__init__(f"ambiguous author match: {candidates}")
        self.candidates = candidates


@dataclass(frozen=True)
class ClientConfig:
    base_url: str = "https://api.openalex.org"
    mailto: Optional[str] = None
    max_requests_per_second: float = 8.0
    cache_dir: Path = Path(".openalex-cache")
    offline: bool = False


def normalize_url(url: str) -> str:
    """Canonical cache key: sorted query params, mailto dropped."""
    parts = urlsplit(url)
    params = [(k, v) for k, v in parse_qsl(parts.query) if k != "mailto"]
    return urlunsplit((parts.scheme, parts.netloc, parts.path, urlencode(sorted(params)), ""))


class TokenBucket:
    """Rate limiter: never more than `rate` acquisitions per 1-second window.

    Capacity is a single token, so acquisitions are spaced at least
    1/rate apart with no initial burst.
    """

    def __init__(self, rate: float, clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        self.rate = rate
        self.clock = clock
        self.sleep = sleep
        self._tokens = 1.0
        self._last = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        if self.rate <= 0:
            return
        with self._lock:
            while True:
                now = self.clock()
                self._tokens = min(1.0, self._tokens + (now - self._last) * self.rate)
                self._last = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                self.sleep((1.0 - self._tokens) / self.rate)


class JsonLinesCache:
    """Append-only per-kind cache; lookups return the newest entry for a URL."""

    def __init__(self, cache_dir: Path):
        self.cache_dir = Path(cache_dir)
        self._entries: Dict[str, Dict[str, str]] = {}  # kind -> url -> body
        self._lock = threading.Lock()
        self._load()

    def _path(self, kind: str) -> Path:
        return self.cache_dir / f"{kind}.jsonl"

    def _load(self) -> None:
        if not self.cache_dir.is_dir():
            return
        for path in sorted(self.cache_dir.glob("*.jsonl")):
            kind = path.stem
            table = self._entries.setdefault(kind, {})
            with open(path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    entry = json.loads(line)
                    table[entry["request_url"]] = entry["body"]

    def get(self, kind: str, url: str) -> Optional[str]:
        return self._entries.get(kind, {}).get(normalize_url(url))

    def put(self, kind: str, url: str, body: str) -> None:
        key = normalize_url(url)
        with self._lock:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
            entry = {
                "request_url": key,
                "fetched_at": datetime.now(timezone.utc).isoformat(),
                "body": body,
            }
            with open(self._path(kind), "a", encoding="utf-8") as fh:
                fh.write(json.dumps(entry, sort_keys=True) + "\n")
            self._entries.setdefault(kind, {})[key] = body


@dataclass(frozen=True)
class Authorship:
    author_id: str
    display_name: str
    position: int  # 1-based
    is_corresponding: bool
    institution_ids: frozenset


@dataclass(frozen=True)
class RawWork:
    work_id: str
    year: int
    citation_count: int
    referenced_work_ids: frozenset
    topic_ids: frozenset
    authorships: Tuple[Authorship, ...]


def _short_id(openalex_id: str) -> str:
    # "https://openalex.org/W123" and "W123" both normalize to "W123"
    return openalex_id.rsplit("/", 1)[-1]


def parse_work(data: dict) -> RawWork:
    for name in ("id", "publication_year", "authorships"):
        if data.get(name) is None:
            raise MalformedResponse(name)
    authorships = []
    for i, auth in enumerate(data["authorships"]):
        author = auth.get("author") or {}
        if not author.get("id"):
            raise MalformedResponse("authorships.author.id", f"(position {i + 1})")
        authorships.append(
            Authorship(
                author_id=_short_id(author["id"]),
                display_name=author.get("display_name", ""),
                position=i + 1,
                is_corresponding=bool(auth.get("is_corresponding", False)),
                institution_ids=frozenset(
                    _short_id(inst["id"]) for inst in auth.get("institutions", []) if inst.get("id")
                ),
            )
        )
    # topics read from the concept id list as delivered by the API
    topic_ids = frozenset(
        _short_id(c["id"]) for c in data.get("concepts") or data.get("topics") or [] if c.get("id")
    )
    return RawWork(
        work_id=_short_id(data["id"]),
        year=int(data["publication_year"]),
        citation_count=int(data.get("cited_by_count", 0)),
        referenced_work_ids=frozenset(_short_id(w) for w in data.get("referenced_works", [])),
        topic_ids=topic_ids,
        authorships=tuple(authorships),
    )


def normalize_name(name: str) -> str:
    """Lowercase, strip diacritics and punctuation, collapse whitespace."""
    decomposed = unicodedata.normalize("NFKD", name)
    stripped = "".join(c for c in decomposed if not unicodedata.combining(c))
    cleaned = re.sub(r"[^a-z0-9\s]", " ", stripped.lower())
    return " ".join(cleaned.split())


class OpenAlexClient:
    """Cache-first client; safe to share across threads."""

    def __init__(self, config: ClientConfig, clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        self.config = config
        self.cache = JsonLinesCache(config.cache_dir)
        self.limiter = TokenBucket(config.max_requests_per_second, clock=clock, sleep=sleep)

    def _request(self, kind: str, url: str) -> dict:
        cached = self.cache.get(kind, url)
        if cached is not None:
            return json.loads(cached)
        if self.config.offline:
            raise OfflineCacheMiss(f"offline mode, not cached: {normalize_url(url)}")

        import requests

        full_url = url
        if self.config.mailto:
            sep = "&" if "?" in url else "?"
            full_url = f"{url}{sep}mailto={self.config.mailto}"
        for attempt in range(3):
            self.limiter.acquire()
            resp = requests.get(full_url, timeout=30)
            if resp.status_code == 404:
                raise NotFound(normalize_url(url))
            if resp.status_code == 429:
                if attempt == 2:
                    raise RateLimited(normalize_url(url))
                self.limiter.sleep(2.0 * (attempt + 1))
                continue
            resp.raise_for_status()
            self.cache.put(kind, url, resp.text)
            return resp.json()
        raise RateLimited(normalize_url(url))

    def fetch_work(self, work_id: str) -> RawWork:
        url = f"{self.config.base_url}/works/{_short_id(work_id)}"
        return parse_work(self._request("works", url))

    def fetch_author_profile(self, author_id: str, before_year: Optional[int] = None) -> AuthorProfile:
        """Page through an author's works and build their publication history."""
        author_id = _short_id(author_id)
        cursor = "*"
        entries: List[WorkEntry] = []
        seen = set()
        while cursor:
            url = (
                f"{self.config.base_url}/works"
                f"?cursor={cursor}&filter=author.id:{author_id}&per-page={PAGE_SIZE}"
            )
            page = self._request("authors", url)
            if "results" not in page:
                raise MalformedResponse("results")
            for raw in page["results"]:
                work = parse_work(raw)
                if work.work_id in seen:
                    continue
                mine = [a for a in work.authorships if a.author_id == author_id]
                if not mine:
                    continue
                if before_year is not None and work.year >= before_year:
                    continue
                seen.add(work.work_id)
                entries.append(
                    WorkEntry(
                        work_id=work.work_id,
                        year=work.year,
                        author_position=mine[0].position,
                        is_corresponding=mine[0].is_corresponding,
                        referenced_work_ids=work.referenced_work_ids,
                        topic_ids=work.topic_ids,
                        citation_count=work.citation_count,
                        institution_ids=mine[0].institution_ids,
                    )
                )
            cursor = (page.get("meta") or {}).get("next_cursor")
        return AuthorProfile(author_id, tuple(entries))

    def resolve_author(self, name: str, paper_work_id: str) -> str:
        """Match a corpus author name against a work's authorship list.

        Normalized exact match first, then surname + first initial.
        """
        work = self.fetch_work(paper_work_id)
        target = normalize_name(name)
        exact = [a for a in work.authorships if normalize_name(a.display_name) == target]
        if len(exact) == 1:
            return exact[0].author_id
        if len(exact) > 1:
            raise AmbiguousMatch([a.author_id for a in exact])

        tokens = target.split()
        if not tokens:
            raise NoMatch(f"empty name for work {paper_work_id}")
        surname, initial = tokens[-1], tokens[0][:1]
        loose = []
        for auth in work.authorships:
            cand = normalize_name(auth.display_name).split()
            if cand and cand[-1] == surname and cand[0][:1] == initial:
                loose.append(auth)
        if len(loose) == 1:
            return loose[0].author_id
        if len(loose) > 1:
            raise AmbiguousMatch([a.author_id for a in loose])
        raise NoMatch(f"{name!r} not on work {paper_work_id}")

    def write_manifest(self) -> None:
        manifest = {
            "base_url": self.config.base_url,
            "written_at": datetime.now(timezone.utc).isoformat(),
            "kinds": sorted(k for k in self.cache._entries),
        }
        self.cache.cache_dir.mkdir(parents=True, exist_ok=True)
        with open(self.cache.cache_dir / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
