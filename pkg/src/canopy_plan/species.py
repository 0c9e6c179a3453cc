"""Species knowledge base: keyed retrieval, recommendations, growth profiles.

Reference documents are small structured text files::

    chunk_id: gabala-1600-peaty        (optional, defaults to the file stem)
    humidity_mm: 1600
    soil_type: Peaty and grassy mountain meadow

    <free reference text>

    Suitable Trees:

    Ərik (Apricot): Requires well-drained, fertile soil ...
    Şaftalı (Peach): ...

Retrieval is deterministic: a chunk scores the Jaccard overlap of soil
tokens plus ``1 / (1 + |Δhumidity| / 100)``, so an exact key scores 2.
"""

from __future__ import annotations

import csv
import io
import math
import re
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import ArgumentError, LoadError, ParseError, ProfileError, RetrievalError
from .metrics import SetMetrics, classification_metrics

_ALIAS = re.compile(r"^(?P<name>.*?)\s*\((?P<alias>[^()]*)\)\s*$")
_HEADER = re.compile(r"^(chunk_id|humidity_mm|soil_type|source)\s*:\s*(.*)$", re.IGNORECASE)
_QUOTES = "\"'“”„«»"


def normalize_text(text: str) -> str:
    return " ".join(unicodedata.normalize("NFC", text).split())


def normalize_soil(soil: str) -> str:
    """Lowercase, trim, collapse spaces and drop trailing 'soil'/'soils'.

    Diacritics are kept.  The suffix is stripped repeatedly so the function
    is idempotent, but never reduces the label to nothing.
    """
    words = normalize_text(soil).lower().strip(" .,;:").split()
    while len(words) > 1 and words[-1] in ("soil", "soils"):
        words.pop()
    return " ".join(words)


def soil_tokens(soil: str) -> frozenset[str]:
    return frozenset(re.findall(r"\w+", normalize_soil(soil)))


def split_alias(label: str) -> tuple[str, str | None]:
    """``"Ərik (Apricot)"`` -> ``("Ərik", "Apricot")``."""
    label = normalize_text(label)
    m = _ALIAS.match(label)
    if m and m.group("name"):
        return m.group("name"), normalize_text(m.group("alias")) or None
    return label, None


@dataclass(frozen=True)
class SoilClimateKey:
    humidity_mm: float
    soil_type: str

    def __post_init__(self):
        if not (self.humidity_mm > 0 and math.isfinite(self.humidity_mm)):
            raise ArgumentError(f"humidity_mm must be positive, got {self.humidity_mm!r}")
        soil = normalize_soil(self.soil_type)
        if not soil:
            raise ArgumentError("soil_type is empty")
        object.__setattr__(self, "soil_type", soil)
        object.__setattr__(self, "humidity_mm", float(self.humidity_mm))


@dataclass(frozen=True)
class KnowledgeChunk:
    chunk_id: str
    key: SoilClimateKey
    body: str
    species: tuple[str, ...]
    aliases: Mapping[str, str] = field(default_factory=dict)


def _species_section(body: str, chunk_id: str) -> tuple[tuple[str, ...], dict[str, str]]:
    lines = body.splitlines()
    start = None
    for i, line in enumerate(lines):
        if line.strip().strip(_QUOTES).strip().casefold() == "suitable trees:":
            start = i + 1
            break
    if start is None:
        raise LoadError(f"chunk {chunk_id!r} has no 'Suitable Trees:' section")
    names, aliases = [], {}
    for line in lines[start:]:
        text = line.strip().strip(_QUOTES).lstrip("-*• ").strip()
        if not text:
            continue
        if text.endswith(":") and not names:
            continue
        if text.endswith(":"):
            break  # next section heading
        head = text.split(":", 1)[0] if ":" in text else text
        name, alias = split_alias(head)
        if name in names:
            raise LoadError(f"chunk {chunk_id!r} lists {name!r} twice")
        names.append(name)
        if alias:
            aliases[name] = alias
    if not names:
        raise LoadError(f"chunk {chunk_id!r} has an empty species list")
    return tuple(names), aliases


def parse_document(text: str, default_id: str) -> KnowledgeChunk:
    meta: dict[str, str] = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        line = lines[i].strip()
        if not line and not meta:
            i += 1
            continue
        m = _HEADER.match(line)
        if not m:
            break
        meta[m.group(1).lower()] = m.group(2).strip()
        i += 1
    chunk_id = meta.get("chunk_id") or default_id
    for required in ("humidity_mm", "soil_type"):
        if required not in meta:
            raise LoadError(f"chunk {chunk_id!r} lacks '{required}:'")
    try:
        humidity = float(meta["humidity_mm"])
        key = SoilClimateKey(humidity, meta["soil_type"])
    except (ValueError, ArgumentError) as exc:
        raise LoadError(f"chunk {chunk_id!r}: {exc}") from None
    body = "\n".join(lines[i:]).strip()
    species, aliases = _species_section(body, chunk_id)
    return KnowledgeChunk(chunk_id, key, body, species, aliases)


class KnowledgeBase:
    """Immutable collection of chunks with unique normalised keys."""

    def __init__(self, chunks: Iterable[KnowledgeChunk] = ()):
        self._chunks: dict[str, KnowledgeChunk] = {}
        seen: dict[tuple[float, str], str] = {}
        for chunk in chunks:
            if chunk.chunk_id in self._chunks:
                raise LoadError(f"duplicate chunk id {chunk.chunk_id!r}")
            k = (chunk.key.humidity_mm, chunk.key.soil_type)
            if k in seen:
                raise LoadError(f"ambiguous key: {chunk.chunk_id!r} and {seen[k]!r} share {k}")
            seen[k] = chunk.chunk_id
            self._chunks[chunk.chunk_id] = chunk

    def __len__(self) -> int:
        return len(self._chunks)

    def __iter__(self):
        return iter(self._chunks.values())

    def __getitem__(self, chunk_id: str) -> KnowledgeChunk:
        return self._chunks[chunk_id]


def load_kb(documents: Iterable[tuple[str, str]] | str | Path) -> KnowledgeBase:
    """Build a knowledge base from ``(doc_id, text)`` pairs or a directory of ``*.txt``."""
    if isinstance(documents, (str, Path)):
        root = Path(documents)
        documents = [(p.stem, p.read_text(encoding="utf-8")) for p in sorted(root.glob("*.txt"))]
    return KnowledgeBase(parse_document(text, doc_id) for doc_id, text in documents)


def score_chunk(key: SoilClimateKey, chunk: KnowledgeChunk) -> float:
    a, b = soil_tokens(key.soil_type), soil_tokens(chunk.key.soil_type)
    jaccard = len(a & b) / len(a | b) if a | b else 0.0
    return jaccard + 1.0 / (1.0 + abs(key.humidity_mm - chunk.key.humidity_mm) / 100.0)


def retrieve_chunks(
    key: SoilClimateKey, kb: KnowledgeBase, top_k: int = 1
) -> list[tuple[KnowledgeChunk, float]]:
    if len(kb) == 0:
        raise RetrievalError("knowledge base is empty")
    if top_k < 1:
        raise ArgumentError("top_k must be at least 1")
    scored = [(chunk, score_chunk(key, chunk)) for chunk in kb]
    scored.sort(key=lambda cs: (-cs[1], cs[0].chunk_id))
    return scored[:top_k]


def _fmt_mm(mm: float) -> str:
    return str(int(mm)) if float(mm).is_integer() else f"{mm:g}"


@dataclass(frozen=True)
class Recommendation:
    key: SoilClimateKey
    species_names: tuple[str, ...]
    source_chunk_id: str
    rendered_text: str
    aliases: Mapping[str, str] = field(default_factory=dict)
    score: float = 0.0

    def as_dict(self) -> dict:
        return {
            "humidity_mm": self.key.humidity_mm,
            "soil_type": self.key.soil_type,
            "species": list(self.species_names),
            "aliases": dict(self.aliases),
            "source_chunk_id": self.source_chunk_id,
            "score": self.score,
            "rendered_text": self.rendered_text,
        }


def render_recommendation(key: SoilClimateKey, species: Sequence[str]) -> str:
    soil = key.soil_type[:1].upper() + key.soil_type[1:]
    mm = _fmt_mm(key.humidity_mm)
    lines = [
        "Soil type and Humidity (Climate):",
        "",
        f"Soil Type: {soil}, Humidity Level: {mm}",
        "",
        "Recommended Tree Species:",
        "",
        f"The following tree species are suitable for humidity {mm} mm with {soil} soil:",
        "",
        *(f"* {name}" for name in species),
    ]
    return "\n".join(lines) + "\n"


def recommend_species(key: SoilClimateKey, kb: KnowledgeBase) -> Recommendation:
    chunk, score = retrieve_chunks(key, kb, top_k=1)[0]
    return Recommendation(
        key=key,
        species_names=chunk.species,
        source_chunk_id=chunk.chunk_id,
        rendered_text=render_recommendation(key, chunk.species),
        aliases=dict(chunk.aliases),
        score=score,
    )


def recommendation_metrics(recommended: set, truth: set, universe: set) -> SetMetrics:
    """Accuracy, precision and recall (percent) of a recommended species set."""
    return classification_metrics(recommended, truth, universe)


# -- growth profiles ---------------------------------------------------------

STAGE_BOUNDS = {"young": (5, 10), "mature": (11, 20), "old": (21, None)}
PRODUCTIVE_AGE = STAGE_BOUNDS["young"][0]
GROWTH_CLASSES = ("fast", "medium", "slow")


@dataclass(frozen=True)
class StageRates:
    """Per-tree annual rates (kg per tree per year) for one age stage."""

    stage: str
    start: int
    end: int | None
    o2_kg: float
    co2_kg: float
    yield_kg: float

    def covers(self, age: int) -> bool:
        return age >= self.start and (self.end is None or age <= self.end)


@dataclass(frozen=True)
class SpeciesProfile:
    name: str
    alias: str | None
    growth_class: str
    spacing_m2: float
    stages: tuple[StageRates, ...]
    source: str = ""

    def __post_init__(self):
        if not self.spacing_m2 > 0:
            raise ProfileError(f"{self.label}: spacing must be positive")
        if self.growth_class not in GROWTH_CLASSES:
            raise ProfileError(f"{self.label}: unknown growth class {self.growth_class!r}")
        if not self.stages:
            raise ProfileError(f"{self.label}: no stage rates")
        prev_end = PRODUCTIVE_AGE - 1
        for s in self.stages:
            if (s.start, s.end) != STAGE_BOUNDS.get(s.stage):
                raise ProfileError(f"{self.label}: stage {s.stage!r} has bounds {s.start}-{s.end}")
            if prev_end is None or s.start <= prev_end:
                raise ProfileError(f"{self.label}: stages overlap or are out of order")
            if min(s.o2_kg, s.co2_kg, s.yield_kg) < 0:
                raise ProfileError(f"{self.label}: negative rate in stage {s.stage!r}")
            prev_end = s.end

    @property
    def label(self) -> str:
        return f"{self.name} ({self.alias})" if self.alias else self.name

    def names(self) -> set[str]:
        return {n.casefold() for n in (self.name, self.alias, self.label) if n}

    def stage_at(self, age: int) -> StageRates | None:
        """Rates for a tree of ``age`` years; ``None`` before it is productive."""
        if age < PRODUCTIVE_AGE:
            return None
        for s in self.stages:
            if s.covers(age):
                return s
        raise ProfileError(f"{self.label}: no stage rates defined for age {age}")


def _growth_class(text: str) -> str:
    word = text.strip().casefold().split("-")[0].split()[0] if text.strip() else ""
    if word not in GROWTH_CLASSES:
        raise ValueError(f"unknown growing type {text!r}")
    return word


def _years(text: str) -> int:
    m = re.match(r"^\s*(\d+)\s*(years?)?\s*$", text)
    if not m:
        raise ValueError(f"not a year count: {text!r}")
    return int(m.group(1))


PROFILE_COLUMNS = ("tree_name", "growing_type", "age_stage", "growing_timeline_years",
                   "o2_kg", "co2_kg", "yield_kg", "space_m2")


def load_profiles(text: str) -> list[SpeciesProfile]:
    """Parse the species CSV: one row per (tree, age stage).

    Column order mirrors the reference tree table, with ``space_m2`` (and an
    optional ``source`` note) appended.  Profiles keep first-appearance order.
    """
    reader = csv.DictReader(line for line in io.StringIO(text) if not line.startswith("#"))
    missing = set(PROFILE_COLUMNS) - set(reader.fieldnames or ())
    if missing:
        raise LoadError(f"species table lacks columns {sorted(missing)}")
    rows: dict[str, list[dict]] = {}
    for rownum, row in enumerate(reader, start=2):
        row["_row"] = rownum
        rows.setdefault(normalize_text(row["tree_name"]), []).append(row)

    profiles = []
    for label, group in rows.items():
        name, alias = split_alias(label)
        stages, spacing, gclass = [], set(), set()
        for row in group:
            try:
                stage = row["age_stage"].strip().casefold()
                if stage not in STAGE_BOUNDS:
                    raise ValueError(f"unknown age stage {row['age_stage']!r}")
                start, end = STAGE_BOUNDS[stage]
                if _years(row["growing_timeline_years"]) != start:
                    raise ValueError(f"{stage} stage must begin at {start} years")
                stages.append(StageRates(stage, start, end, float(row["o2_kg"]),
                                         float(row["co2_kg"]), float(row["yield_kg"])))
                spacing.add(float(row["space_m2"]))
                gclass.add(_growth_class(row["growing_type"]))
            except (ValueError, TypeError, AttributeError) as exc:
                raise ParseError(f"{label}: {exc}", row=row["_row"]) from None
        if len(spacing) != 1 or len(gclass) != 1:
            raise LoadError(f"{label}: inconsistent spacing or growing type across stages")
        stages.sort(key=lambda s: s.start)
        source = "; ".join(sorted({(r.get("source") or "").strip() for r in group} - {""}))
        profiles.append(SpeciesProfile(name, alias, gclass.pop(), spacing.pop(), tuple(stages), source))
    return profiles


def match_profiles(
    recommendation: Recommendation, profiles: Sequence[SpeciesProfile]
) -> list[SpeciesProfile]:
    """Profiles for the recommended species, matched on local name or Latin alias."""
    out = []
    for name in recommendation.species_names:
        wanted = {name.casefold()}
        if name in recommendation.aliases:
            wanted.add(recommendation.aliases[name].casefold())
        hits = [p for p in profiles if p.names() & wanted]
        if not hits:
            raise LoadError(f"no species profile for recommended species {name!r}")
        if len(hits) > 1:
            raise LoadError(f"several species profiles match {name!r}")
        out.append(hits[0])
    return out


def find_profile(name: str, profiles: Sequence[SpeciesProfile]) -> SpeciesProfile:
    wanted = {normalize_text(name).casefold(), *(n.casefold() for n in split_alias(name) if n)}
    hits = [p for p in profiles if p.names() & wanted]
    if len(hits) != 1:
        raise ArgumentError(f"species {name!r} matches {len(hits)} profiles")
    return hits[0]
