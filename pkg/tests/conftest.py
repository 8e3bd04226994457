import json
from pathlib import Path

import pytest

FIXTURE_DIR = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def fixture_dir() -> Path:
    return FIXTURE_DIR


@pytest.fixture(scope="session")
def corpus_csv(fixture_dir) -> Path:
    return fixture_dir / "corpus.csv"


@pytest.fixture(scope="session")
def cache_dir(fixture_dir) -> Path:
    return fixture_dir / "cache"


@pytest.fixture(scope="session")
def fixture_cache_raw(cache_dir):
    """Raw cache bodies, parsed directly from the JSON-lines files.

    Used by oracle tests that must not share parsing code with the client.
    """
    out = {}
    for kind in ("works", "authors"):
        table = {}
        with open(cache_dir / f"{kind}.jsonl", encoding="utf-8") as fh:
            for line in fh:
                entry = json.loads(line)
                table[entry["request_url"]] = json.loads(entry["body"])
        out[kind] = table
    return out
