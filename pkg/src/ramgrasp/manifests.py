"""Dataset manifests: entry listing, deterministic splits, anchor statistics.

A manifest is a JSON file:

    {
      "split_seed": 42,
      "entries": [
        {"annotation": "labels/img0001.xml",
         "image": "images/img0001.png",
         "subset": "SSS"},
        ...
      ]
    }

Relative paths resolve against a caller-supplied root directory. The
image_id of an entry is the stem of its annotation filename.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

from .annotations import SUBSET_TAGS, AnnotatedImage, parse_annotation
from .errors import EmptyTrainingSet, InsufficientEntries
from .geometry import GraspBox

_SPLITMIX_GAMMA = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class ManifestEntry:
    annotation: str
    image: str
    subset: str = "other"

    def __post_init__(self):
        if self.subset not in SUBSET_TAGS:
            raise ValueError(f"subset must be one of {SUBSET_TAGS}")

    @property
    def image_id(self) -> str:
        return Path(self.annotation).stem


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple[ManifestEntry, ...]
    split_seed: int = 42

    def __post_init__(self):
        paths = [e.annotation for e in self.entries]
        if len(set(paths)) != len(paths):
            raise ValueError("manifest annotation paths must be unique")

    def __len__(self) -> int:
        return len(self.entries)

    def subset_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for e in self.entries:
            counts[e.subset] = counts.get(e.subset, 0) + 1
        return counts


def load_manifest(path: str | Path) -> DatasetManifest:
    doc = json.loads(Path(path).read_text())
    entries = tuple(
        ManifestEntry(
            annotation=e["annotation"],
            image=e.get("image", ""),
            subset=e.get("subset", "other"),
        )
        for e in doc["entries"]
    )
    return DatasetManifest(entries, split_seed=int(doc.get("split_seed", 42)))


def save_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    doc = {
        "split_seed": manifest.split_seed,
        "entries": [
            {"annotation": e.annotation, "image": e.image, "subset": e.subset}
            for e in manifest.entries
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def load_annotations(
    manifest: DatasetManifest, root: str | Path = ".", **parse_kwargs
) -> list[AnnotatedImage]:
    """Parse every entry; the manifest's subset tag and image_id win over
    whatever the XML happens to carry."""
    root = Path(root)
    images = []
    for entry in manifest.entries:
        img = parse_annotation((root / entry.annotation).read_bytes(), **parse_kwargs)
        images.append(replace(img, image_id=entry.image_id, subset=entry.subset))
    return images


class SplitMix64:
    """Deterministic 64-bit generator used for manifest shuffling.

    next(): state += 0x9E3779B97F4A7C15; z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB; return z ^ (z >> 31).
    """

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next(self) -> int:
        self.state = (self.state + _SPLITMIX_GAMMA) & _MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
        return z ^ (z >> 31)


def shuffled_indices(n: int, seed: int) -> list[int]:
    """Fisher-Yates shuffle of range(n) driven by SplitMix64.

    The algorithm is pinned (swap index j = next() mod (i + 1), i from
    n-1 down to 1) so splits reproduce across platforms and versions.
    """
    rng = SplitMix64(seed)
    idx = list(range(n))
    for i in range(n - 1, 0, -1):
        j = rng.next() % (i + 1)
        idx[i], idx[j] = idx[j], idx[i]
    return idx


def split(
    manifest: DatasetManifest,
    train_count: int,
    test_count: int,
    seed: int | None = None,
) -> tuple[DatasetManifest, DatasetManifest]:
    """Deterministic train/test split: seeded shuffle, then prefix split."""
    if seed is None:
        seed = manifest.split_seed
    n = len(manifest.entries)
    if train_count + test_count > n:
        raise InsufficientEntries(
            f"requested {train_count} + {test_count} entries from {n}"
        )
    order = shuffled_indices(n, seed)
    train = tuple(manifest.entries[i] for i in order[:train_count])
    test = tuple(manifest.entries[i] for i in order[train_count : train_count + test_count])
    return (
        DatasetManifest(train, split_seed=seed),
        DatasetManifest(test, split_seed=seed),
    )


def anchor_dims(images: Iterable[AnnotatedImage]) -> tuple[float, float]:
    """Arithmetic means of box w and h over all boxes of all images."""
    total_w = 0.0
    total_h = 0.0
    count = 0
    for img in images:
        for box in img.boxes:
            total_w += box.w
            total_h += box.h
            count += 1
    if count == 0:
        raise EmptyTrainingSet("no boxes found to compute anchor dimensions")
    return total_w / count, total_h / count


def anchor_dims_from(
    manifest: DatasetManifest, root: str | Path = ".", **parse_kwargs
) -> tuple[float, float]:
    """Anchor dimensions resolved directly from a manifest's files."""
    return anchor_dims(load_annotations(manifest, root, **parse_kwargs))


def angle_histogram(images: Iterable[AnnotatedImage], bin_width: float = 10.0) -> list[int]:
    """Counts per angle bin over [0, 180); default 18 bins of 10 degrees."""
    n_bins = int(round(180.0 / bin_width))
    counts = [0] * n_bins
    for img in images:
        for box in img.boxes:
            counts[min(int(box.theta // bin_width), n_bins - 1)] += 1
    return counts


def boxes_per_image(images: Iterable[AnnotatedImage]) -> dict[int, int]:
    """Distribution of ground-truth boxes per image."""
    dist: dict[int, int] = {}
    for img in images:
        k = len(img.boxes)
        dist[k] = dist.get(k, 0) + 1
    return dict(sorted(dist.items()))


def all_boxes(images: Iterable[AnnotatedImage]) -> list[GraspBox]:
    out: list[GraspBox] = []
    for img in images:
        out.extend(img.boxes)
    return out
