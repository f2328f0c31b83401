"""Transcript parsing, frame pairing, tokenization and corpus files."""

from __future__ import annotations

import hashlib
import json
import math
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .vectorize import SparseBag, Vocabulary, bag_of, build_vocab, combine_bags


class TranscriptParseError(ValueError):
    def __init__(self, msg: str, line: int):
        super().__init__(f"line {line}: {msg}")
        self.line = line


@dataclass(frozen=True)
class TranscriptCue:
    start_s: float
    end_s: float
    text: str

    def __post_init__(self):
        if self.start_s < 0 or self.end_s < self.start_s:
            raise ValueError(f"bad cue span [{self.start_s}, {self.end_s}]")


@dataclass(frozen=True)
class FrameRecord:
    timestamp_s: int
    sprites: Mapping[str, int] | None = None
    path: str | None = None


_TS = {
    "srt": re.compile(r"^(\d{2,}):(\d{2}):(\d{2}),(\d{3})$"),
    "vtt": re.compile(r"^(?:(\d{2,}):)?(\d{2}):(\d{2})\.(\d{3})$"),
}
_ARROW = re.compile(r"\s+-->\s+")


def _parse_ts(tok: str, fmt: str, lineno: int) -> float:
    m = _TS[fmt].match(tok)
    if not m:
        raise TranscriptParseError(f"malformed timestamp {tok!r}", lineno)
    h, mi, s, ms = (int(g) if g else 0 for g in m.groups())
    if mi >= 60 or s >= 60:
        raise TranscriptParseError(f"malformed timestamp {tok!r}", lineno)
    # one division from integer milliseconds, so serialize/parse round-trips exactly
    return (((h * 60 + mi) * 60 + s) * 1000 + ms) / 1000


def parse_transcript(content: bytes | str, format: str) -> list[TranscriptCue]:
    """Parse SRT or WebVTT content into cues, one per subtitle block.

    Text lines of a block are joined with single spaces.  Cues come back
    sorted by start time (stable, so equal starts keep file order).
    """
    if format not in _TS:
        raise ValueError(f"unknown transcript format {format!r}")
    if isinstance(content, bytes):
        content = content.decode("utf-8-sig")
    else:
        content = content.lstrip("﻿")
    lines = content.replace("\r\n", "\n").replace("\r", "\n").split("\n")

    cues = []
    i = 0
    if format == "vtt":
        while i < len(lines) and not lines[i].strip():
            i += 1
        if i < len(lines) and lines[i].startswith("WEBVTT"):
            i += 1
    while i < len(lines):
        if not lines[i].strip():
            i += 1
            continue
        # a block: optional identifier line, timing line, text lines
        block_start = i
        while i < len(lines) and lines[i].strip() and "-->" not in lines[i]:
            i += 1
        if i >= len(lines) or not lines[i].strip():
            if format == "vtt" and lines[block_start].split()[0] in ("NOTE", "STYLE", "REGION"):
                continue
            raise TranscriptParseError("block without a timing line", block_start + 1)
        lineno = i + 1
        parts = _ARROW.split(lines[i].strip(), maxsplit=1)
        if len(parts) != 2:
            raise TranscriptParseError("malformed timing line", lineno)
        start = _parse_ts(parts[0], format, lineno)
        end_tok = parts[1].split()[0] if parts[1].split() else ""
        end = _parse_ts(end_tok, format, lineno)
        if end < start:
            raise TranscriptParseError("cue ends before it starts", lineno)
        i += 1
        text = []
        while i < len(lines) and lines[i].strip():
            text.append(lines[i].strip())
            i += 1
        cues.append(TranscriptCue(start, end, " ".join(text)))
    cues.sort(key=lambda c: c.start_s)
    return cues


def _fmt_ts(sec: float, sep: str) -> str:
    ms = round(sec * 1000)
    h, ms = divmod(ms, 3_600_000)
    m, ms = divmod(ms, 60_000)
    s, ms = divmod(ms, 1000)
    return f"{h:02d}:{m:02d}:{s:02d}{sep}{ms:03d}"


def serialize_transcript(cues: Sequence[TranscriptCue], format: str) -> str:
    if format == "srt":
        blocks = [f"{n}\n{_fmt_ts(c.start_s, ',')} --> {_fmt_ts(c.end_s, ',')}\n{c.text}\n"
                  for n, c in enumerate(cues, 1)]
        return "\n".join(blocks)
    if format == "vtt":
        blocks = [f"{_fmt_ts(c.start_s, '.')} --> {_fmt_ts(c.end_s, '.')}\n{c.text}\n" for c in cues]
        return "WEBVTT\n\n" + "\n".join(blocks)
    raise ValueError(f"unknown transcript format {format!r}")


@dataclass
class PairingSummary:
    paired: int = 0
    dropped: int = 0


def pair_frames(cues: Sequence[TranscriptCue], frames: Iterable[FrameRecord | int],
                summary: PairingSummary | None = None) -> list[tuple[TranscriptCue, list[int]]]:
    """Pair each cue with every available frame t with floor(start) <= t <= ceil(end).

    Cues that cover no available frame are dropped and counted in `summary`.
    """
    stamps = sorted({f.timestamp_s if isinstance(f, FrameRecord) else int(f) for f in frames})
    available = set(stamps)
    out = []
    dropped = 0
    for cue in cues:
        lo, hi = math.floor(cue.start_s), math.ceil(cue.end_s)
        ts = [t for t in range(lo, hi + 1) if t in available]
        if ts:
            out.append((cue, ts))
        else:
            dropped += 1
    if summary is not None:
        summary.paired += len(out)
        summary.dropped += dropped
    return out


_SEP = re.compile(r"[^\w']+|_+")


def tokenize(text: str) -> list[str]:
    """Lowercase; anything other than letters, digits and apostrophes separates."""
    return [t for t in _SEP.split(text.lower()) if t]


# -- corpus ------------------------------------------------------------------

@dataclass(frozen=True)
class PairedExample:
    id: str
    frame_timestamps: tuple[int, ...]
    sprite_bag: SparseBag
    comment_text: str
    comment_bag: SparseBag
    topic_label: str | None = None

    def __post_init__(self):
        ts = self.frame_timestamps
        if not ts or any(a >= b for a, b in zip(ts, ts[1:])):
            raise ValueError(f"example {self.id}: frame timestamps must be non-empty and increasing")


@dataclass
class Corpus:
    examples: list[PairedExample]
    sprite_vocab: Vocabulary
    word_vocab: Vocabulary
    # name-level records kept so the corpus can be re-vectorized under other vocabularies
    records: list[dict] = field(default_factory=list, repr=False)

    def __len__(self) -> int:
        return len(self.examples)

    def __getitem__(self, i):
        return self.examples[i]

    def __iter__(self):
        return iter(self.examples)

    @property
    def ids(self) -> list[str]:
        return [e.id for e in self.examples]

    def fingerprint(self) -> str:
        return hashlib.sha256(corpus_jsonl(self.records).encode()).hexdigest()[:16]

    def revectorize(self, sprite_vocab: Vocabulary, word_vocab: Vocabulary) -> "Corpus":
        return corpus_from_records(self.records, sprite_vocab, word_vocab)


def corpus_from_records(records: Sequence[dict], sprite_vocab: Vocabulary | None = None,
                        word_vocab: Vocabulary | None = None) -> Corpus:
    """Vectorize name-level records; missing vocabularies are built from the records.

    Out-of-vocabulary sprites and words are dropped.
    """
    records = [dict(r) for r in records]
    tokens = [tokenize(r["comment"]) for r in records]
    if sprite_vocab is None:
        sprite_vocab = build_vocab(*(sorted(r["sprites"]) for r in records))
    if word_vocab is None:
        word_vocab = build_vocab(*tokens)
    examples = []
    for r, toks in zip(records, tokens):
        sb, _ = bag_of({k: v for k, v in r["sprites"].items() if v}, sprite_vocab)
        wb, _ = bag_of(toks, word_vocab)
        examples.append(PairedExample(
            id=str(r["id"]), frame_timestamps=tuple(int(t) for t in r["frames"]),
            sprite_bag=sb, comment_text=r["comment"], comment_bag=wb,
            topic_label=r.get("topic")))
    return Corpus(examples, sprite_vocab, word_vocab, records)


def build_records(pairs, frame_sprites: Mapping[int, Mapping[str, int]], prefix: str = "ex") -> list[dict]:
    """Turn (cue, timestamps) pairs into corpus records, summing per-frame sprite maps."""
    records = []
    for n, (cue, ts) in enumerate(pairs):
        names = sorted({k for t in ts for k in frame_sprites.get(t, {})})
        vocab = Vocabulary(names)
        bag = combine_bags(bag_of(frame_sprites.get(t, {}), vocab)[0] for t in ts)
        sprites = {k: int(v) for k, v in bag.named(vocab).items()}
        records.append({"id": f"{prefix}{n:05d}", "frames": list(ts),
                        "sprites": sprites, "comment": cue.text})
    return records


def corpus_jsonl(records: Iterable[dict]) -> str:
    lines = []
    for r in records:
        obj = {"id": r["id"], "frames": list(r["frames"]),
               "sprites": dict(sorted(r["sprites"].items())), "comment": r["comment"]}
        if r.get("topic") is not None:
            obj["topic"] = r["topic"]
        lines.append(json.dumps(obj, ensure_ascii=False, separators=(",", ":")))
    return "".join(line + "\n" for line in lines)


def read_jsonl(path) -> list[dict]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise SchemaError(f"{path}:{n}: invalid JSON ({e.msg})") from None
    return out


class SchemaError(ValueError):
    pass


def load_corpus_records(path) -> list[dict]:
    records = read_jsonl(path)
    seen = set()
    for n, r in enumerate(records, 1):
        if not isinstance(r, dict) or not {"id", "frames", "sprites", "comment"} <= r.keys():
            raise SchemaError(f"{path}: record {n} needs id, frames, sprites and comment")
        if not isinstance(r["sprites"], dict) or not isinstance(r["frames"], list):
            raise SchemaError(f"{path}: record {n} has malformed frames or sprites")
        if r["id"] in seen:
            raise SchemaError(f"{path}: duplicate id {r['id']!r}")
        seen.add(r["id"])
    return records


def load_frame_records(path) -> list[FrameRecord]:
    frames = []
    seen = set()
    for n, r in enumerate(read_jsonl(path), 1):
        if not isinstance(r, dict) or not isinstance(r.get("t"), int) or r["t"] < 0 \
                or not isinstance(r.get("sprites"), dict):
            raise SchemaError(f"{path}: frame record {n} needs a nonnegative integer 't' and a 'sprites' map")
        if r["t"] in seen:
            raise SchemaError(f"{path}: duplicate frame timestamp {r['t']}")
        seen.add(r["t"])
        frames.append(FrameRecord(r["t"], {k: int(v) for k, v in r["sprites"].items()}))
    return frames


def frames_jsonl(frames: Iterable[FrameRecord]) -> str:
    return "".join(json.dumps({"t": f.timestamp_s, "sprites": dict(sorted(f.sprites.items()))},
                              separators=(",", ":")) + "\n" for f in frames)
