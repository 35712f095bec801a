"""Corpus ingestion: timestamped titles in, a cleaned and binned token corpus out.

Documents arrive as JSON lines with configurable field names. Titles are
lowercased, stripped of symbols (intra-word hyphens survive), filtered
against a stop-word list, Porter-stemmed and de-duplicated per document, so
that downstream co-occurrence counts papers rather than token instances.
Documents whose titles clean down to nothing stay in their period subset:
they were published, so they still count toward the per-period collection
size that normalizes edge weights.
"""

from __future__ import annotations

import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ConfigurationError, EmptyCorpusError
from .stemming import porter_stem


@dataclass(frozen=True)
class Document:
    id: str
    title: str
    year: int


@dataclass(frozen=True)
class TokenizedDocument:
    id: str
    period: int  # 1-based period index; 0 when not yet assigned
    tokens: tuple[str, ...]


@dataclass(frozen=True)
class BinSpec:
    """Temporal binning: [start_year, end_year] split into spans of years_per_bin."""

    start_year: int
    end_year: int
    years_per_bin: int

    def __post_init__(self):
        if self.end_year < self.start_year:
            raise ConfigurationError("end_year precedes start_year")
        if self.years_per_bin < 1:
            raise ConfigurationError("years_per_bin must be >= 1")

    @property
    def num_periods(self) -> int:
        span = self.end_year - self.start_year + 1
        return -(-span // self.years_per_bin)

    def period_of(self, year: int) -> int:
        if year < self.start_year or year > self.end_year:
            raise ConfigurationError(
                f"year {year} outside configured range "
                f"[{self.start_year}, {self.end_year}]"
            )
        return (year - self.start_year) // self.years_per_bin + 1


@dataclass
class BinnedCorpus:
    bin_spec: BinSpec
    subsets: list[list[TokenizedDocument]]

    @property
    def num_periods(self) -> int:
        return len(self.subsets)

    @property
    def omega_sizes(self) -> list[int]:
        return [len(s) for s in self.subsets]


@dataclass
class VocabularyIndex:
    """Bidirectional map between stemmed words and dense integer ids."""

    word_to_id: dict[str, int]
    id_to_word: list[str]
    counts: list[int]  # number of documents containing each stem
    label_map: dict[int, str] = field(default_factory=dict)

    @property
    def size(self) -> int:
        return len(self.id_to_word)

    def label(self, word_id: int) -> str:
        return self.label_map.get(word_id, self.id_to_word[word_id])

    def write_tsv(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for i, word in enumerate(self.id_to_word):
                fh.write(f"{i}\t{word}\t{self.label(i)}\t{self.counts[i]}\n")

    @classmethod
    def read_tsv(cls, path: str | Path) -> "VocabularyIndex":
        id_to_word: list[str] = []
        counts: list[int] = []
        label_map: dict[int, str] = {}
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                wid, word, label, count = line.rstrip("\n").split("\t")
                assert int(wid) == len(id_to_word), f"non-dense id {wid} in {path}"
                id_to_word.append(word)
                counts.append(int(count))
                if label != word:
                    label_map[int(wid)] = label
        return cls(
            word_to_id={w: i for i, w in enumerate(id_to_word)},
            id_to_word=id_to_word,
            counts=counts,
            label_map=label_map,
        )


@dataclass(frozen=True)
class CorpusSchema:
    title_field: str = "title"
    year_field: str = "year"
    id_field: str = "id"


@dataclass
class IngestResult:
    documents: list[Document]
    skipped: int


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Read a one-word-per-line stop-word file; None loads the bundled list."""
    if path is None:
        text = resources.files("trendnets").joinpath("data/stopwords.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


def ingest(path: str | Path, schema: CorpusSchema = CorpusSchema()) -> IngestResult:
    """Read documents from a JSON-lines file.

    Records missing a title or a usable integer year are skipped and counted,
    not fatal. Raises EmptyCorpusError when nothing valid remains.
    """
    documents: list[Document] = []
    skipped = 0
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                skipped += 1
                continue
            if not isinstance(record, dict):
                skipped += 1
                continue
            title = record.get(schema.title_field)
            year = record.get(schema.year_field)
            if not isinstance(title, str) or not title.strip():
                skipped += 1
                continue
            try:
                year = int(year)
            except (TypeError, ValueError):
                skipped += 1
                continue
            doc_id = str(record.get(schema.id_field, lineno))
            documents.append(Document(id=doc_id, title=title.strip(), year=year))
    if not documents:
        raise EmptyCorpusError(f"no valid documents in {path} ({skipped} skipped)")
    return IngestResult(documents=documents, skipped=skipped)


def clean_tokens(title: str, stopwords: frozenset[str]) -> list[str]:
    """Surface tokens after symbol stripping and filtering, before stemming.

    Keeps intra-word hyphens, drops tokens without letters (pure numbers)
    and tokens shorter than two characters. Order preserved, duplicates
    removed.
    """
    seen = set()
    out: list[str] = []
    for raw in title.lower().split():
        tok = "".join(ch for ch in raw if ch.isalnum() or ch == "-").strip("-")
        if len(tok) < 2 or tok in stopwords:
            continue
        if not any(ch.isalpha() for ch in tok):
            continue
        if tok not in seen:
            seen.add(tok)
            out.append(tok)
    return out


def preprocess(
    doc: Document,
    stopwords: frozenset[str],
    bin_spec: BinSpec | None = None,
) -> TokenizedDocument:
    """Clean, stem and de-duplicate one document's title.

    Stop words are filtered both before and after stemming so that no final
    token is ever a stop word; stems shorter than two characters are dropped
    for the same reason the surface filter drops them.
    """
    seen = set()
    tokens: list[str] = []
    for surface in clean_tokens(doc.title, stopwords):
        stem = porter_stem(surface)
        if len(stem) < 2 or stem in stopwords:
            continue
        if stem not in seen:
            seen.add(stem)
            tokens.append(stem)
    period = bin_spec.period_of(doc.year) if bin_spec is not None else 0
    return TokenizedDocument(id=doc.id, period=period, tokens=tuple(tokens))


def bin_documents(docs: Sequence[TokenizedDocument], bin_spec: BinSpec) -> BinnedCorpus:
    """Group tokenized documents into their period subsets.

    Every document must carry a period stamped from this bin_spec; every
    period must end up non-empty (edge weights divide by subset size).
    """
    T = bin_spec.num_periods
    subsets: list[list[TokenizedDocument]] = [[] for _ in range(T)]
    bad = [d.id for d in docs if not 1 <= d.period <= T]
    if bad:
        raise ConfigurationError(
            f"{len(bad)} documents outside the {T}-period range: {bad[:10]}"
        )
    for doc in docs:
        subsets[doc.period - 1].append(doc)
    empty = [t + 1 for t, s in enumerate(subsets) if not s]
    if empty:
        raise ConfigurationError(f"periods with no documents: {empty}")
    return BinnedCorpus(bin_spec=bin_spec, subsets=subsets)


def prepare_corpus(
    documents: Iterable[Document],
    stopwords: frozenset[str],
    bin_spec: BinSpec,
) -> BinnedCorpus:
    """Tokenize and bin a document collection in one pass."""
    docs = list(documents)
    offenders = [
        d.id for d in docs if d.year < bin_spec.start_year or d.year > bin_spec.end_year
    ]
    if offenders:
        raise ConfigurationError(
            f"{len(offenders)} documents outside year range "
            f"[{bin_spec.start_year}, {bin_spec.end_year}]: {offenders[:10]}"
        )
    tokenized = [preprocess(d, stopwords, bin_spec) for d in docs]
    return bin_documents(tokenized, bin_spec)


def build_vocabulary(corpus: BinnedCorpus, min_count: int = 1) -> VocabularyIndex:
    """Index stems occurring in at least min_count documents, ids in lexicographic order."""
    counts: Counter[str] = Counter()
    for subset in corpus.subsets:
        for doc in subset:
            counts.update(doc.tokens)
    kept = sorted(w for w, c in counts.items() if c >= min_count)
    if not kept:
        raise ConfigurationError(
            f"no words occur in at least {min_count} documents"
        )
    word_to_id = {w: i for i, w in enumerate(kept)}
    return VocabularyIndex(
        word_to_id=word_to_id,
        id_to_word=kept,
        counts=[counts[w] for w in kept],
    )


def restore_labels(
    vocab: VocabularyIndex,
    raw_corpus: Sequence[Document],
    active_ids: set[int],
    stopwords: frozenset[str],
) -> dict[int, str]:
    """Pick a display surface form for each active stem.

    For every stem on the map, the winning label is the original (unstemmed)
    surface form whose occurrences co-occur most with other active-map words;
    ties go to the more frequent form, then to the lexicographically smaller
    one. Stems never seen in the raw corpus fall back to themselves.
    """
    unknown = active_ids - set(range(vocab.size))
    if unknown:
        raise ConfigurationError(f"ids not in vocabulary: {sorted(unknown)[:10]}")
    active_stems = {vocab.id_to_word[i]: i for i in active_ids}
    co: dict[int, Counter[str]] = defaultdict(Counter)
    freq: dict[int, Counter[str]] = defaultdict(Counter)
    for doc in raw_corpus:
        surfaces = clean_tokens(doc.title, stopwords)
        stem_of = {s: porter_stem(s) for s in surfaces}
        present = {stem_of[s] for s in surfaces} & active_stems.keys()
        if not present:
            continue
        for surface in surfaces:
            stem = stem_of[surface]
            if stem in present:
                wid = active_stems[stem]
                co[wid][surface] += len(present) - 1
                freq[wid][surface] += 1
    labels: dict[int, str] = {}
    for wid in active_ids:
        candidates = freq.get(wid)
        if not candidates:
            labels[wid] = vocab.id_to_word[wid]
            continue
        labels[wid] = min(
            candidates, key=lambda s: (-co[wid][s], -candidates[s], s)
        )
    return labels
