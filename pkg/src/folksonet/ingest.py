"""Reading tagging posts and aggregating them into tag-clouds.

A post is one user attaching a set of tags to a resource. Resources are
described by their tag-cloud: for each tag, the number of distinct users
who attached it. The corpus also keeps the global frequency of every tag
over the analysed resources.
"""
from __future__ import annotations

import io
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime
from types import MappingProxyType
from typing import BinaryIO, Iterable, Mapping

from .errors import ConfigError, ParseError

log = logging.getLogger(__name__)

FORMATS = ("jsonl", "tsv")


def normalize_tag(tag: str) -> str:
    return tag.strip().lower()


@dataclass(frozen=True)
class Post:
    user: str
    resource: str
    tags: frozenset[str]
    timestamp: datetime | None = None

    def __post_init__(self):
        if not self.tags:
            raise ConfigError(f"post ({self.user}, {self.resource}) has no tags")
        if any(not t for t in self.tags):
            raise ConfigError("empty tag in post")


@dataclass(frozen=True)
class TagCloud:
    resource: str
    freqs: Mapping[str, int]

    def __post_init__(self):
        if any(c < 1 for c in self.freqs.values()):
            raise ConfigError(f"non-positive tag count in cloud of {self.resource}")
        object.__setattr__(self, "freqs", MappingProxyType(dict(self.freqs)))

    def __eq__(self, other):
        if not isinstance(other, TagCloud):
            return NotImplemented
        return self.resource == other.resource and dict(self.freqs) == dict(other.freqs)

    def __hash__(self):
        return hash((self.resource, frozenset(self.freqs.items())))

    def __len__(self):
        return len(self.freqs)

    def total(self) -> int:
        return sum(self.freqs.values())


@dataclass(frozen=True, eq=False)
class Corpus:
    clouds: Mapping[str, TagCloud]
    global_freqs: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "clouds", MappingProxyType(dict(self.clouds)))
        object.__setattr__(self, "global_freqs", MappingProxyType(dict(self.global_freqs)))

    def __eq__(self, other):
        if not isinstance(other, Corpus):
            return NotImplemented
        return (dict(self.clouds) == dict(other.clouds)
                and dict(self.global_freqs) == dict(other.global_freqs))

    @property
    def resources(self) -> list[str]:
        """Resource ids in sorted order (the default matrix order)."""
        return sorted(self.clouds)

    def __len__(self):
        return len(self.clouds)


def _parse_ts(raw, lineno: int) -> datetime | None:
    if raw is None or raw == "":
        return None
    if not isinstance(raw, str):
        raise ParseError("timestamp must be an ISO-8601 string", lineno)
    try:
        # fromisoformat in 3.10 does not accept a trailing Z
        return datetime.fromisoformat(raw[:-1] + "+00:00" if raw.endswith("Z") else raw)
    except ValueError as exc:
        raise ParseError(f"bad timestamp {raw!r}: {exc}", lineno) from None


def _records_jsonl(lines: Iterable[tuple[int, str]]):
    for lineno, line in lines:
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", lineno) from None
        if not isinstance(obj, dict):
            raise ParseError("record is not a JSON object", lineno)
        for key in ("user", "resource", "tags"):
            if key not in obj:
                raise ParseError(f"missing key {key!r}", lineno)
        user, resource, tags = obj["user"], obj["resource"], obj["tags"]
        if not isinstance(user, str) or not isinstance(resource, str):
            raise ParseError("user and resource must be strings", lineno)
        if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
            raise ParseError("tags must be an array of strings", lineno)
        yield lineno, user, resource, tags, _parse_ts(obj.get("ts"), lineno)


def _records_tsv(lines: Iterable[tuple[int, str]]):
    first = True
    for lineno, line in lines:
        line = line.rstrip("\r\n")
        if not line.strip():
            continue
        cols = line.split("\t")
        if first:
            first = False
            if cols[0].strip() == "user":
                continue
        if len(cols) not in (3, 4):
            raise ParseError(f"expected 3 or 4 tab-separated columns, got {len(cols)}", lineno)
        ts = _parse_ts(cols[3].strip(), lineno) if len(cols) == 4 else None
        tags = cols[2].split(",") if cols[2].strip() else []
        yield lineno, cols[0], cols[1], tags, ts


def parse_posts(stream: BinaryIO | bytes, fmt: str = "jsonl") -> tuple[list[Post], int]:
    """Parse posts from a byte stream.

    Returns the deduplicated posts and the number of records rejected for
    carrying no usable tag. Records from the same user on the same resource
    are merged into one post by tag-set union, kept at the position of the
    first record.
    """
    if fmt not in FORMATS:
        raise ConfigError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    data = stream if isinstance(stream, bytes) else stream.read()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"input is not UTF-8: {exc}") from None
    lines = enumerate(io.StringIO(text, newline=None), start=1)
    records = _records_jsonl(lines) if fmt == "jsonl" else _records_tsv(lines)

    merged: dict[tuple[str, str], list] = {}
    rejected = 0
    for lineno, user, resource, raw_tags, ts in records:
        tags = {normalize_tag(t) for t in raw_tags} - {""}
        if not tags:
            rejected += 1
            continue
        key = (user, resource)
        if key in merged:
            entry = merged[key]
            entry[0] |= tags
            if entry[1] is None:
                entry[1] = ts
        else:
            merged[key] = [tags, ts]
    if rejected:
        log.warning("rejected %d record(s) with no tags", rejected)
    posts = [Post(u, r, frozenset(tags), ts) for (u, r), (tags, ts) in merged.items()]
    return posts, rejected


def serialize_posts(posts: Iterable[Post], fmt: str = "jsonl") -> bytes:
    """Inverse of :func:`parse_posts` for already-normalized posts."""
    out = []
    if fmt == "jsonl":
        for p in posts:
            obj = {"user": p.user, "resource": p.resource, "tags": sorted(p.tags)}
            if p.timestamp is not None:
                obj["ts"] = p.timestamp.isoformat()
            out.append(json.dumps(obj, ensure_ascii=False, sort_keys=False))
    elif fmt == "tsv":
        out.append("user\tresource\ttags\tts")
        for p in posts:
            ts = p.timestamp.isoformat() if p.timestamp is not None else ""
            out.append(f"{p.user}\t{p.resource}\t{','.join(sorted(p.tags))}\t{ts}")
    else:
        raise ConfigError(f"unknown format {fmt!r}")
    return ("\n".join(out) + "\n").encode("utf-8")


def build_corpus(posts: Iterable[Post]) -> Corpus:
    """Count, for each resource, how many users assigned each tag."""
    counts: dict[str, Counter] = {}
    seen: set[tuple[str, str]] = set()
    for p in posts:
        key = (p.user, p.resource)
        if key in seen:
            raise ConfigError(f"duplicate post for user {p.user!r} on {p.resource!r}")
        seen.add(key)
        counts.setdefault(p.resource, Counter()).update(p.tags)
    if not counts:
        raise ConfigError("no posts: cannot build a corpus")
    global_freqs: Counter = Counter()
    for c in counts.values():
        global_freqs.update(c)
    clouds = {r: TagCloud(r, dict(c)) for r, c in counts.items()}
    return Corpus(clouds, dict(global_freqs))


def read_posts(path, fmt: str | None = None) -> tuple[list[Post], int]:
    """Read posts from a file; format inferred from the suffix when not given."""
    path = str(path)
    if fmt is None:
        fmt = "tsv" if path.endswith((".tsv", ".txt")) else "jsonl"
    with open(path, "rb") as fh:
        return parse_posts(fh, fmt)


def merge_posts(*batches: Iterable[Post]) -> list[Post]:
    """Concatenate post lists, merging repeated (user, resource) pairs by tag union."""
    merged: dict[tuple[str, str], Post] = {}
    for batch in batches:
        for p in batch:
            key = (p.user, p.resource)
            old = merged.get(key)
            if old is None:
                merged[key] = p
            else:
                merged[key] = Post(p.user, p.resource, old.tags | p.tags,
                                   old.timestamp if old.timestamp is not None else p.timestamp)
    return list(merged.values())
