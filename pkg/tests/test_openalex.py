import json

import pytest

from teamroles.openalex import (
    AmbiguousMatch,
    ClientConfig,
    JsonLinesCache,
    NoMatch,
    OfflineCacheMiss,
    OpenAlexClient,
    TokenBucket,
    normalize_name,
    normalize_url,
    parse_work,
)

BASE = "https://api.openalex.org"


def offline_client(cache_dir) -> OpenAlexClient:
    return OpenAlexClient(ClientConfig(cache_dir=cache_dir, offline=True))


def test_normalize_url_sorts_params_and_drops_mailto():
    a = normalize_url(f"{BASE}/works?per-page=200&cursor=*&mailto=x@y.z")
    b = normalize_url(f"{BASE}/works?cursor=*&per-page=200")
    assert a == b


def test_normalize_name():
    assert normalize_name("  José  Álvarez-Núñez ") == "jose alvarez nunez"
    assert normalize_name("J. Smith") == "j smith"


def test_fetch_work_from_fixture_cache(cache_dir):
    client = offline_client(cache_dir)
    work = client.fetch_work("W1001")
    assert work.work_id == "W1001"
    assert work.year >= 2003
    assert len(work.authorships) >= 2
    assert all(a.author_id.startswith("A") for a in work.authorships)


def test_fetch_work_offline_cache_miss(cache_dir):
    client = offline_client(cache_dir)
    with pytest.raises(OfflineCacheMiss):
        client.fetch_work("W999999")


def test_fetch_work_referenced_count_matches_fixture(cache_dir, fixture_cache_raw):
    url = normalize_url(f"{BASE}/works/W1001")
    raw = fixture_cache_raw["works"][url]
    client = offline_client(cache_dir)
    work = client.fetch_work("W1001")
    assert len(work.referenced_work_ids) == len(set(raw["referenced_works"]))


def test_fetch_author_profile_paginates(cache_dir, fixture_cache_raw):
    # A001's fixture listing is split over two cursor pages
    client = offline_client(cache_dir)
    profile = client.fetch_author_profile("A001")
    page1 = fixture_cache_raw["authors"][
        normalize_url(f"{BASE}/works?cursor=*&filter=author.id:A001&per-page=200")
    ]
    assert page1["meta"]["next_cursor"] == "page2"
    total = len(page1["results"]) + len(
        fixture_cache_raw["authors"][
            normalize_url(f"{BASE}/works?cursor=page2&filter=author.id:A001&per-page=200")
        ]["results"]
    )
    assert len(profile.works) == total


def test_fetch_author_profile_before_year_filter(cache_dir):
    client = offline_client(cache_dir)
    full = client.fetch_author_profile("A002")
    years = sorted(w.year for w in full.works)
    cutoff = years[len(years) // 2]
    filtered = client.fetch_author_profile("A002", before_year=cutoff)
    assert len(filtered.works) == sum(1 for y in years if y < cutoff)
    empty = client.fetch_author_profile("A002", before_year=years[0])
    assert empty.works == ()


def test_cache_idempotence(tmp_path):
    """Two fetches of the same URL perform at most one network request."""
    calls = []

    class CountingClient(OpenAlexClient):
        def _request(self, kind, url):
            cached = self.cache.get(kind, url)
            if cached is not None:
                return json.loads(cached)
            calls.append(url)
            body = {
                "id": "W1",
                "publication_year": 2010,
                "cited_by_count": 1,
                "referenced_works": [],
                "concepts": [],
                "authorships": [
                    {"author": {"id": "A1", "display_name": "Ann Lee"}, "institutions": []}
                ],
            }
            self.cache.put(kind, url, json.dumps(body))
            return body

    client = CountingClient(ClientConfig(cache_dir=tmp_path / "cache"))
    client.fetch_work("W1")
    client.fetch_work("W1")
    assert len(calls) == 1


def test_cache_survives_reload(tmp_path):
    cache = JsonLinesCache(tmp_path / "cache")
    cache.put("works", f"{BASE}/works/W1", '{"x": 1}')
    reloaded = JsonLinesCache(tmp_path / "cache")
    assert reloaded.get("works", f"{BASE}/works/W1") == '{"x": 1}'


def test_cache_newest_entry_wins(tmp_path):
    cache = JsonLinesCache(tmp_path / "cache")
    cache.put("works", f"{BASE}/works/W1", '{"v": 1}')
    cache.put("works", f"{BASE}/works/W1", '{"v": 2}')
    reloaded = JsonLinesCache(tmp_path / "cache")
    assert json.loads(reloaded.get("works", f"{BASE}/works/W1"))["v"] == 2


def test_resolve_author_exact_and_initial(cache_dir, fixture_cache_raw):
    client = offline_client(cache_dir)
    url = normalize_url(f"{BASE}/works/W1001")
    authorships = fixture_cache_raw["works"][url]["authorships"]
    name = authorships[0]["author"]["display_name"]
    expected = authorships[0]["author"]["id"].rsplit("/", 1)[-1]
    assert client.resolve_author(name, "W1001") == expected
    first, last = name.split()
    assert client.resolve_author(f"{first[0]}. {last}", "W1001") == expected


def test_resolve_author_no_match(cache_dir):
    client = offline_client(cache_dir)
    with pytest.raises(NoMatch):
        client.resolve_author("Zz Nobody", "W1001")


def test_resolve_author_ambiguous(tmp_path):
    cache = JsonLinesCache(tmp_path / "cache")
    body = {
        "id": "W1",
        "publication_year": 2010,
        "authorships": [
            {"author": {"id": "A1", "display_name": "John Smith"}, "institutions": []},
            {"author": {"id": "A2", "display_name": "Jane Smith"}, "institutions": []},
        ],
    }
    cache.put("works", f"{BASE}/works/W1", json.dumps(body))
    client = offline_client(tmp_path / "cache")
    with pytest.raises(AmbiguousMatch):
        client.resolve_author("J. Smith", "W1")


def test_parse_work_short_ids():
    work = parse_work(
        {
            "id": "https://openalex.org/W77",
            "publication_year": 2012,
            "cited_by_count": 3,
            "referenced_works": ["https://openalex.org/R1", "R2"],
            "concepts": [{"id": "https://openalex.org/C9"}],
            "authorships": [
                {
                    "author": {"id": "https://openalex.org/A5", "display_name": "Bo Chen"},
                    "is_corresponding": True,
                    "institutions": [{"id": "https://openalex.org/I3"}],
                }
            ],
        }
    )
    assert work.work_id == "W77"
    assert work.referenced_work_ids == {"R1", "R2"}
    assert work.topic_ids == {"C9"}
    assert work.authorships[0].institution_ids == {"I3"}
    assert work.authorships[0].is_corresponding


def test_token_bucket_respects_rate():
    """At most `rate` acquisitions in any 1-second window of fake time."""
    now = [0.0]
    slept = []

    def clock():
        return now[0]

    def sleep(seconds):
        slept.append(seconds)
        now[0] += seconds

    bucket = TokenBucket(rate=4.0, clock=clock, sleep=sleep)
    stamps = []
    for _ in range(20):
        bucket.acquire()
        stamps.append(now[0])
    for i in range(len(stamps)):
        window = [t for t in stamps if stamps[i] <= t < stamps[i] + 1.0]
        assert len(window) <= 4
