import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # for the oracles module

from trendnets.corpus import load_stopwords


@pytest.fixture(scope="session")
def stopwords():
    return load_stopwords()


@pytest.fixture
def jsonl_corpus(tmp_path):
    """Factory writing a JSON-lines corpus file from (id, title, year) rows."""

    def write(rows, name="corpus.jsonl", **field_names):
        title_field = field_names.get("title_field", "title")
        year_field = field_names.get("year_field", "year")
        path = tmp_path / name
        with open(path, "w", encoding="utf-8") as fh:
            for row in rows:
                if isinstance(row, str):
                    fh.write(row + "\n")
                    continue
                doc_id, title, year = row
                record = {"id": doc_id, title_field: title, year_field: year}
                fh.write(json.dumps(record) + "\n")
        return path

    return write


# a tiny deterministic titles corpus: a stable topic plus one bursting topic
# appearing only in later years, spanning 2003..2018
def synthetic_titles(num_per_year=14):
    rows = []
    stable = [
        "signal processing for wireless networks",
        "image segmentation using graph methods",
        "speech recognition with hidden markov models",
        "channel estimation in communication systems",
        "object tracking in video sequences",
        "sparse coding for image classification",
        "distributed optimization over networks",
    ]
    bursty = [
        "adversarial learning for image generation",
        "deep adversarial networks for generation",
        "generative adversarial training methods",
    ]
    k = 0
    for year in range(2003, 2019):
        for n in range(num_per_year):
            if year >= 2015 and n < 6:
                title = bursty[(k + n) % len(bursty)]
            else:
                title = stable[(k + n) % len(stable)]
            rows.append((f"d{year}-{n}", title, year))
        k += 1
    return rows


@pytest.fixture
def titles_corpus(jsonl_corpus):
    return jsonl_corpus(synthetic_titles())
