"""Load, validate, and serve the evaluation dataset.

The corpus file is a UTF-8 JSON array; each element describes one citing
(main) paper together with its gold related-work section and the papers it
cites, keyed by positive citation indices:

    [
      {
        "main": {"id": ..., "title": ..., "abstract": ..., "introduction": ...,
                 "related_work": ...},
        "cited": [{"index": 1, "id": ..., "title": ..., "abstract": ...,
                   "introduction": ...}, ...]
      },
      ...
    ]

Unknown fields are ignored with a warning. Citation indices are normalized to
a contiguous 1..n range at load time; when the source uses sparse keys, the
gold text markers are rewritten accordingly and the original->normalized remap
is kept on the record for traceability.
"""

from __future__ import annotations

import json
import logging
import random
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ConfigurationError, CorpusParseError, CorpusValidationError
from .textops import citation_indices, split_paragraphs, split_sentences

logger = logging.getLogger(__name__)

_MAIN_FIELDS = {"id", "title", "abstract", "introduction", "related_work"}
_CITED_FIELDS = {"index", "id", "title", "abstract", "introduction"}
_MARKER_RE = re.compile(r"\[(\d+(?:\s*,\s*\d+)*)\]")


@dataclass(frozen=True)
class PaperRecord:
    id: str
    title: str
    abstract: str
    introduction: str


@dataclass(frozen=True)
class CitationSet:
    """A main paper, its gold related-work text, and its cited papers."""

    main: PaperRecord
    gold_related_work: str
    cited: dict[int, PaperRecord]
    index_remap: dict[int, int] = field(default_factory=dict)

    @property
    def indices(self) -> tuple[int, ...]:
        return tuple(sorted(self.cited))


@dataclass(frozen=True)
class CorpusStats:
    paper_count: int
    total_citations: int
    mean_citations_per_paper: float


@dataclass(frozen=True)
class MismatchFixture:
    """A real citation sentence paired with a paper it never cited."""

    sentence: str
    citation_index: int
    source_paper_id: str
    wrong_paper: PaperRecord
    wrong_paper_source_id: str
    label: str = "non-entail"


@dataclass(frozen=True)
class EntailmentFixture:
    """A citation sentence paired with the paper it actually cites."""

    sentence: str
    citation_index: int
    source_paper_id: str
    paper: PaperRecord
    label: str = "entail"


def corpus_stats(corpus: Sequence[CitationSet]) -> CorpusStats:
    total = sum(len(cs.cited) for cs in corpus)
    mean = total / len(corpus) if corpus else 0.0
    return CorpusStats(len(corpus), total, mean)


def _require_text(paper_id: str, name: str, value) -> str:
    if not isinstance(value, str) or not value.strip():
        raise CorpusValidationError(paper_id, f"{name} must be non-empty text")
    return value


def _rewrite_markers(text: str, remap: dict[int, int]) -> str:
    def sub(match: re.Match) -> str:
        parts = [int(p) for p in match.group(1).split(",")]
        return "[" + ", ".join(str(remap.get(p, p)) for p in parts) + "]"

    return _MARKER_RE.sub(sub, text)


def _build_citation_set(entry: dict, position: int) -> CitationSet:
    if not isinstance(entry, dict):
        raise CorpusParseError(f"record {position}: expected an object", position)
    main_raw = entry.get("main")
    if not isinstance(main_raw, dict):
        raise CorpusParseError(f"record {position}: missing 'main' object", position)
    paper_id = str(main_raw.get("id", f"record-{position}"))

    unknown = set(entry) - {"main", "cited"}
    unknown |= set(main_raw) - _MAIN_FIELDS
    if unknown:
        logger.warning("paper %s: ignoring unknown fields %s", paper_id, sorted(unknown))

    main = PaperRecord(
        id=paper_id,
        title=_require_text(paper_id, "title", main_raw.get("title")),
        abstract=_require_text(paper_id, "abstract", main_raw.get("abstract")),
        introduction=_require_text(paper_id, "introduction", main_raw.get("introduction")),
    )
    gold = _require_text(paper_id, "related_work", main_raw.get("related_work"))

    cited_raw = entry.get("cited")
    if not isinstance(cited_raw, list):
        raise CorpusParseError(f"record {position}: missing 'cited' array", position)

    by_index: dict[int, PaperRecord] = {}
    for item in cited_raw:
        if not isinstance(item, dict) or "index" not in item:
            raise CorpusParseError(
                f"record {position}: cited entry without an index", position
            )
        if set(item) - _CITED_FIELDS:
            logger.warning(
                "paper %s: ignoring unknown cited fields %s",
                paper_id,
                sorted(set(item) - _CITED_FIELDS),
            )
        index = item["index"]
        if not isinstance(index, int) or index < 1:
            raise CorpusValidationError(paper_id, f"citation index {index!r} is not a positive integer")
        if index in by_index:
            raise CorpusValidationError(paper_id, f"duplicate citation index {index}")
        cited_id = str(item.get("id", f"{paper_id}-cited-{index}"))
        by_index[index] = PaperRecord(
            id=cited_id,
            title=_require_text(cited_id, "title", item.get("title")),
            abstract=_require_text(cited_id, "abstract", item.get("abstract")),
            introduction=_require_text(cited_id, "introduction", item.get("introduction")),
        )

    if not by_index:
        raise CorpusValidationError(paper_id, "cited list is empty")

    original = sorted(by_index)
    remap = {orig: pos for pos, orig in enumerate(original, start=1)}
    if all(orig == new for orig, new in remap.items()):
        remap_kept: dict[int, int] = {}
        cited = {i: by_index[i] for i in original}
    else:
        remap_kept = remap
        cited = {remap[i]: by_index[i] for i in original}
        gold = _rewrite_markers(gold, remap)

    in_gold = set(citation_indices(gold))
    extra = in_gold - set(cited)
    if extra:
        raise CorpusValidationError(
            paper_id, f"gold related work cites unknown indices {sorted(extra)}"
        )

    return CitationSet(main=main, gold_related_work=gold, cited=cited, index_remap=remap_kept)


def load_corpus(path: str | Path) -> list[CitationSet]:
    """Parse and validate a corpus file, preserving record order."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CorpusParseError(f"cannot read corpus file {path}: {exc}") from exc
    if not text.strip():
        return []
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorpusParseError(f"corpus file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, list):
        raise CorpusParseError("corpus file must contain a top-level array")
    return [_build_citation_set(entry, i) for i, entry in enumerate(data)]


def save_corpus(corpus: Sequence[CitationSet], path: str | Path) -> None:
    """Write a corpus back out in the documented file format."""
    payload = []
    for cs in corpus:
        payload.append(
            {
                "main": {
                    "id": cs.main.id,
                    "title": cs.main.title,
                    "abstract": cs.main.abstract,
                    "introduction": cs.main.introduction,
                    "related_work": cs.gold_related_work,
                },
                "cited": [
                    {
                        "index": index,
                        "id": record.id,
                        "title": record.title,
                        "abstract": record.abstract,
                        "introduction": record.introduction,
                    }
                    for index, record in sorted(cs.cited.items())
                ],
            }
        )
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )


def citation_sentences(cs: CitationSet) -> list[tuple[str, tuple[int, ...]]]:
    """Sentences of the gold related work that carry at least one marker."""
    found: list[tuple[str, tuple[int, ...]]] = []
    for block in split_paragraphs(cs.gold_related_work):
        for sentence in split_sentences(block):
            indices = citation_indices(sentence)
            if indices:
                found.append((sentence, indices))
    return found


def mismatch_fixtures(
    corpus: Sequence[CitationSet], seed: int, count: int | None = None
) -> list[MismatchFixture]:
    """Pair real citation sentences with papers from other citation sets.

    Every output is a non-entailment instance by construction; the drawn paper
    comes from a different CitationSet and never shares an id with any paper
    the sentence cites. Deterministic for a fixed corpus and seed.
    """
    if not corpus:
        raise ConfigurationError("cannot build mismatch fixtures from an empty corpus")
    if len(corpus) < 2:
        raise ConfigurationError(
            "mismatching requires at least two citation sets to draw wrong papers from"
        )
    rng = random.Random(seed)
    pool: list[tuple[int, str, tuple[int, ...]]] = []
    for set_index, cs in enumerate(corpus):
        for sentence, indices in citation_sentences(cs):
            pool.append((set_index, sentence, indices))
    if not pool:
        raise ConfigurationError("no citation sentences found in the corpus")
    rng.shuffle(pool)
    if count is not None:
        if count > len(pool):
            raise ConfigurationError(
                f"requested {count} fixtures but only {len(pool)} citation sentences exist"
            )
        pool = pool[:count]

    fixtures: list[MismatchFixture] = []
    for set_index, sentence, indices in pool:
        source = corpus[set_index]
        excluded_ids = {source.cited[i].id for i in indices if i in source.cited}
        candidates = [
            (other.main.id, paper)
            for j, other in enumerate(corpus)
            if j != set_index
            for paper in other.cited.values()
            if paper.id not in excluded_ids
        ]
        if not candidates:
            raise ConfigurationError(
                f"no mismatch candidate exists for a sentence of paper {source.main.id!r}"
            )
        source_id, wrong = candidates[rng.randrange(len(candidates))]
        fixtures.append(
            MismatchFixture(
                sentence=sentence,
                citation_index=indices[0],
                source_paper_id=source.main.id,
                wrong_paper=wrong,
                wrong_paper_source_id=source_id,
            )
        )
    return fixtures


def entailment_fixtures(
    corpus: Sequence[CitationSet], seed: int, count: int | None = None
) -> list[EntailmentFixture]:
    """Untouched positives: citation sentences paired with their cited papers."""
    rng = random.Random(seed)
    pool: list[EntailmentFixture] = []
    for cs in corpus:
        for sentence, indices in citation_sentences(cs):
            index = indices[0]
            pool.append(
                EntailmentFixture(
                    sentence=sentence,
                    citation_index=index,
                    source_paper_id=cs.main.id,
                    paper=cs.cited[index],
                )
            )
    rng.shuffle(pool)
    if count is not None:
        if count > len(pool):
            raise ConfigurationError(
                f"requested {count} fixtures but only {len(pool)} citation sentences exist"
            )
        pool = pool[:count]
    return pool


def find_paper(corpus: Iterable[CitationSet], paper_id: str) -> CitationSet:
    for cs in corpus:
        if cs.main.id == paper_id:
            return cs
    raise ConfigurationError(f"unknown paper id {paper_id!r}")
