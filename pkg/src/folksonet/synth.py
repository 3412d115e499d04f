"""Synthetic folksonomies with planted community structure.

Every community owns a tag vocabulary; each of its resources is bookmarked
by ``taggings_per_resource`` distinct users, and every tag slot of a post is
filled from the community vocabulary with probability ``1 - noise_rate`` and
from the shared vocabulary otherwise (without repeating a tag in one post).

Randomness comes from a :class:`Stream`: raw 64-bit outputs of PCG64
(seeded through numpy's SeedSequence) reduced by the documented rules in
its methods, so a given seed reproduces the same posts everywhere.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import ConfigError
from .ingest import Post


class Stream:
    """Portable draws from PCG64.

    * ``u64()``: next raw output.
    * ``below(m)``: unbiased integer in ``[0, m)`` by rejection: draw ``x``
      until ``x < 2**64 - (2**64 % m)``, return ``x % m``.
    * ``uniform()``: ``(x >> 11) * 2**-53``, a double in ``[0, 1)``.
    """

    def __init__(self, seed: int):
        self._bits = np.random.PCG64(seed)

    def u64(self) -> int:
        return int(self._bits.random_raw())

    def below(self, m: int) -> int:
        if m <= 0:
            raise ValueError("m must be positive")
        limit = (1 << 64) - ((1 << 64) % m)
        while True:
            x = self.u64()
            if x < limit:
                return x % m

    def uniform(self) -> float:
        return (self.u64() >> 11) * (1.0 / (1 << 53))

    def sample(self, population: Sequence, k: int) -> list:
        """``k`` distinct items, partial Fisher-Yates over a copy."""
        pool = list(population)
        if k > len(pool):
            raise ValueError("sample larger than population")
        for i in range(k):
            j = i + self.below(len(pool) - i)
            pool[i], pool[j] = pool[j], pool[i]
        return pool[:k]


@dataclass(frozen=True)
class PlantedCommunity:
    resource_count: int
    vocabulary: tuple[str, ...]
    taggings_per_resource: int

    def __post_init__(self):
        object.__setattr__(self, "vocabulary", tuple(self.vocabulary))


@dataclass(frozen=True)
class PlantedSpec:
    communities: tuple[PlantedCommunity, ...]
    shared_vocabulary: tuple[str, ...] = ()
    noise_rate: float = 0.0
    users: int = 1000
    seed: int = 0
    tags_per_post: int = 3
    # nested-community benchmarks need overlapping vocabularies
    allow_overlap: bool = False

    def __post_init__(self):
        object.__setattr__(self, "communities", tuple(
            c if isinstance(c, PlantedCommunity) else PlantedCommunity(*c)
            for c in self.communities))
        object.__setattr__(self, "shared_vocabulary", tuple(self.shared_vocabulary))

    def validate(self) -> None:
        if not self.communities:
            raise ConfigError("at least one community is required")
        if not 0 <= self.noise_rate < 1:
            raise ConfigError(f"noise_rate must lie in [0, 1), got {self.noise_rate}")
        if self.noise_rate > 0 and not self.shared_vocabulary:
            raise ConfigError("noise_rate > 0 needs a shared vocabulary")
        if self.tags_per_post < 1:
            raise ConfigError("tags_per_post must be positive")
        shared = set(self.shared_vocabulary)
        seen: set[str] = set()
        for i, c in enumerate(self.communities):
            vocab = set(c.vocabulary)
            if c.resource_count < 1 or c.taggings_per_resource < 1:
                raise ConfigError(f"community {i}: counts must be positive")
            if len(vocab) < self.tags_per_post:
                raise ConfigError(f"community {i}: vocabulary smaller than tags_per_post")
            if c.taggings_per_resource > self.users:
                raise ConfigError(f"community {i}: more taggings per resource than users")
            if vocab & shared:
                raise ConfigError(f"community {i}: vocabulary overlaps the shared vocabulary")
            if not self.allow_overlap and vocab & seen:
                raise ConfigError(f"community {i}: vocabulary overlaps another community")
            seen |= vocab

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "PlantedSpec":
        obj = json.loads(text)
        obj["communities"] = tuple(PlantedCommunity(**c) for c in obj["communities"])
        return cls(**obj)


@dataclass
class Planted:
    posts: list[Post]
    resources: list[str]
    labels: list[int] = field(default_factory=list)

    def truth(self) -> dict[str, int]:
        return dict(zip(self.resources, self.labels))


def generate(spec: PlantedSpec) -> Planted:
    spec.validate()
    rng = Stream(spec.seed)
    users = [f"u{i:05d}" for i in range(spec.users)]
    shared = list(spec.shared_vocabulary)
    width = len(str(sum(c.resource_count for c in spec.communities)))
    posts, resources, labels = [], [], []
    rid = 0
    for label, comm in enumerate(spec.communities):
        vocab = list(comm.vocabulary)
        for _ in range(comm.resource_count):
            resource = f"r{rid:0{width}d}"
            rid += 1
            resources.append(resource)
            labels.append(label)
            for user in rng.sample(users, comm.taggings_per_resource):
                tags: list[str] = []
                for _ in range(spec.tags_per_post):
                    source = vocab if rng.uniform() >= spec.noise_rate else shared
                    left = [t for t in source if t not in tags]
                    if not left:
                        # source exhausted within this post; use the other one
                        other = shared if source is vocab else vocab
                        left = [t for t in other if t not in tags]
                    tags.append(left[rng.below(len(left))])
                posts.append(Post(user, resource, frozenset(tags)))
    return Planted(posts, resources, labels)


def vocabulary(prefix: str, size: int) -> tuple[str, ...]:
    return tuple(f"{prefix}{i:03d}" for i in range(size))


def two_community_spec(resources: int = 200, vocab: int = 50, shared: int = 30,
                       taggings: int = 10, noise_rate: float = 0.2, seed: int = 42,
                       users: int = 1000) -> PlantedSpec:
    """Two unrelated topics, as in a design/politics split."""
    return PlantedSpec(
        communities=(PlantedCommunity(resources, vocabulary("a", vocab), taggings),
                     PlantedCommunity(resources, vocabulary("b", vocab), taggings)),
        shared_vocabulary=vocabulary("s", shared), noise_rate=noise_rate,
        users=users, seed=seed)


def nested_spec(resources: int = 100, vocab: int = 40, overlap: float = 0.5,
                shared: int = 30, taggings: int = 10, noise_rate: float = 0.2,
                seed: int = 42, users: int = 1000) -> tuple[PlantedSpec, list[int]]:
    """Two super-communities, each split into two sub-communities.

    Sub-communities of one super-community share ``overlap`` of their
    vocabulary; different super-communities share nothing. Returns the spec
    and the super-community of each sub-community.
    """
    common = int(round(vocab * overlap))
    own = vocab - common
    comms, parent = [], []
    for s, name in enumerate("xy"):
        core = vocabulary(f"{name}c", common)
        for sub in range(2):
            comms.append(PlantedCommunity(
                resources, core + vocabulary(f"{name}{sub}_", own), taggings))
            parent.append(s)
    spec = PlantedSpec(tuple(comms), vocabulary("s", shared), noise_rate, users, seed,
                       allow_overlap=True)
    return spec, parent


def six_community_spec(seed: int = 7, noise_rate: float = 0.02, users: int = 2000) -> PlantedSpec:
    """400 resources in six communities of decreasing size.

    Two broad topics of 200 resources each; each topic is split into a large
    and one or two smaller sub-topics that share a small topic core. Large
    vocabularies and few taggings per resource keep links between sibling
    sub-topics sparse, which is what lets them show up as separate low modes
    of Q once the power transform has flattened the link strengths.
    """
    def sub(topic: str, name: str, size: int, own: int = 80, core: int = 2):
        return PlantedCommunity(size, vocabulary(f"{topic}_", core) + vocabulary(f"{name}_", own), 5)

    comms = (
        sub("pol", "humor", 110), sub("des", "visual", 100), sub("pol", "blogs", 70),
        sub("des", "web", 60), sub("des", "type", 40), sub("pol", "war", 20),
    )
    return PlantedSpec(comms, vocabulary("misc_", 60), noise_rate, users, seed,
                       allow_overlap=True)


def ari(labels_a: Sequence, labels_b: Sequence) -> float:
    """Adjusted Rand Index from the pair-counting contingency table."""
    a, b = list(labels_a), list(labels_b)
    if len(a) != len(b):
        raise ConfigError(f"labelings differ in length ({len(a)} vs {len(b)})")
    if not a:
        raise ConfigError("labelings are empty")
    _, ia = np.unique(np.asarray(a, dtype=object).astype(str), return_inverse=True)
    _, ib = np.unique(np.asarray(b, dtype=object).astype(str), return_inverse=True)
    table = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(table, (ia, ib), 1)

    def pairs(x):
        x = np.asarray(x, dtype=np.float64)
        return float((x * (x - 1) / 2).sum())

    index = pairs(table)
    sum_a, sum_b = pairs(table.sum(axis=1)), pairs(table.sum(axis=0))
    total = len(a) * (len(a) - 1) / 2
    expected = sum_a * sum_b / total if total else 0.0
    max_index = (sum_a + sum_b) / 2
    if max_index == expected:
        # both partitions trivial in the same way (e.g. a single element)
        return 1.0
    return (index - expected) / (max_index - expected)


def write_truth_csv(planted: Planted, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["resource_id", "community"])
        for rid, lab in zip(planted.resources, planted.labels):
            w.writerow([rid, lab])


def read_truth_csv(path) -> dict[str, int]:
    with open(path, newline="", encoding="utf-8") as fh:
        return {row["resource_id"]: int(row["community"]) for row in csv.DictReader(fh)}
