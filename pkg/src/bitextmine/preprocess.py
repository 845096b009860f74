"""Deterministic monolingual-corpus cleaning.

Rule-based filters applied before embedding/mining: sentence splitting
on terminal punctuation, punctuation/digit-ratio rejection, dominant
Unicode-script whitelisting, and exact-duplicate removal. Everything is
deterministic and order-preserving so pipeline output is reproducible.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field

#: Sentence-terminal punctuation (Latin + CJK full-width forms).
TERMINALS = frozenset(".!?…。！？")

#: Order in which rejection rules are applied; the first failing rule
#: is the one charged in the report.
RULE_ORDER = ("min_chars", "ratio", "script", "dedup")

#: ISO 15924 four-letter codes for the scripts this module can name.
SCRIPT_ALIASES = {
    "Latn": "Latin", "Cyrl": "Cyrillic", "Grek": "Greek",
    "Arab": "Arabic", "Hebr": "Hebrew", "Deva": "Devanagari",
    "Beng": "Bengali", "Guru": "Gurmukhi", "Gujr": "Gujarati",
    "Orya": "Oriya", "Taml": "Tamil", "Telu": "Telugu",
    "Knda": "Kannada", "Mlym": "Malayalam", "Sinh": "Sinhala",
    "Thai": "Thai", "Laoo": "Lao", "Tibt": "Tibetan",
    "Mymr": "Myanmar", "Geor": "Georgian", "Hang": "Hangul",
    "Ethi": "Ethiopic", "Khmr": "Khmer", "Mong": "Mongolian",
    "Hira": "Hiragana", "Kana": "Katakana", "Hani": "Han",
    "Armn": "Armenian", "Syrc": "Syriac", "Thaa": "Thaana",
}

#: unicodedata.name() first words that are not themselves script names.
_NAME_PREFIX_TO_SCRIPT = {
    "CJK": "Han",
    "KANGXI": "Han",
    "HIRAGANA": "Hiragana",
    "KATAKANA": "Katakana",
    "HANGUL": "Hangul",
    "FULLWIDTH": "Latin",  # FULLWIDTH LATIN ... forms
}


def canonical_script(name: str) -> str:
    """Map an ISO 15924 code or script name to the canonical name."""
    if name in SCRIPT_ALIASES:
        return SCRIPT_ALIASES[name]
    return name.capitalize() if name.islower() or name.isupper() else name


def _char_script(ch: str) -> str | None:
    try:
        name = unicodedata.name(ch)
    except ValueError:
        return None
    first = name.split(" ", 1)[0].split("-", 1)[0]
    if first in _NAME_PREFIX_TO_SCRIPT:
        return _NAME_PREFIX_TO_SCRIPT[first]
    return first.capitalize()


def dominant_script(s: str) -> str | None:
    """Majority script over letter characters; None if no letters or a tie."""
    counts: dict[str, int] = {}
    for ch in s:
        if unicodedata.category(ch).startswith("L"):
            script = _char_script(ch)
            if script is not None:
                counts[script] = counts.get(script, 0) + 1
    if not counts:
        return None
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    if len(ranked) > 1 and ranked[0][1] == ranked[1][1]:
        return None
    return ranked[0][0]


def split_sentences(text: str, terminals: frozenset = TERMINALS) -> list[str]:
    """Break text after terminal punctuation followed by whitespace.

    Punctuation stays attached to its sentence; pieces are trimmed;
    empty input yields an empty list.
    """
    pieces = []
    start = 0
    for i, ch in enumerate(text):
        if ch in terminals and i + 1 < len(text) and text[i + 1].isspace():
            piece = text[start:i + 1].strip()
            if piece:
                pieces.append(piece)
            start = i + 1
    tail = text[start:].strip()
    if tail:
        pieces.append(tail)
    return pieces


def punct_num_ratio(s: str) -> float:
    """(punctuation + decimal digits) / non-whitespace characters.

    Punctuation is any Unicode general category P*; digits are Nd.
    Empty or all-whitespace strings score 0.
    """
    hits = 0
    total = 0
    for ch in s:
        if ch.isspace():
            continue
        total += 1
        cat = unicodedata.category(ch)
        if cat.startswith("P") or cat == "Nd":
            hits += 1
    return hits / total if total else 0.0


@dataclass(frozen=True)
class PreprocessConfig:
    max_punct_num_ratio: float = 0.20
    allowed_scripts: frozenset[str] = frozenset()  # empty = allow all
    min_chars: int = 1
    dedup: bool = True

    def __post_init__(self):
        if not 0.0 <= self.max_punct_num_ratio <= 1.0:
            raise ValueError("max_punct_num_ratio must be in [0, 1]")
        if self.min_chars < 1:
            raise ValueError("min_chars must be >= 1")
        object.__setattr__(
            self, "allowed_scripts",
            frozenset(canonical_script(s) for s in self.allowed_scripts),
        )


@dataclass
class FilterReport:
    input_count: int = 0
    kept_count: int = 0
    rejected_by_rule: dict[str, int] = field(
        default_factory=lambda: {rule: 0 for rule in RULE_ORDER}
    )

    def reconciles(self) -> bool:
        return self.kept_count + sum(self.rejected_by_rule.values()) == self.input_count

    def to_dict(self) -> dict:
        return {
            "input_count": self.input_count,
            "kept_count": self.kept_count,
            "rejected_by_rule": dict(self.rejected_by_rule),
        }


def _first_failing_rule(line: str, cfg: PreprocessConfig, seen: set) -> str | None:
    if len(line) < cfg.min_chars:
        return "min_chars"
    if punct_num_ratio(line) > cfg.max_punct_num_ratio:
        return "ratio"
    if cfg.allowed_scripts:
        script = dominant_script(line)
        if script is None or script not in cfg.allowed_scripts:
            return "script"
    if cfg.dedup and line in seen:
        return "dedup"
    return None


def run_pipeline(lines, cfg: PreprocessConfig | None = None):
    """Filter lines; returns (kept list, FilterReport).

    Lines are whitespace-trimmed before any rule runs and are emitted
    trimmed, which makes the pipeline idempotent. Rules fire in
    RULE_ORDER and only the first failure is counted.
    """
    if cfg is None:
        cfg = PreprocessConfig()
    report = FilterReport()
    seen: set[str] = set()
    kept: list[str] = []
    for raw in lines:
        report.input_count += 1
        line = raw.strip()
        rule = _first_failing_rule(line, cfg, seen)
        if rule is None:
            kept.append(line)
            seen.add(line)
            report.kept_count += 1
        else:
            report.rejected_by_rule[rule] += 1
    return kept, report
