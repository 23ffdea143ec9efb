"""Ground-truth ingestion (COCO-style polygons) and point-in-mask tests.

Location accuracy needs a single geometric predicate: does a click lie on a
ground-truth segment of its resolved class? Inside-ness uses the even-odd
rule and counts boundary points as hits, so clicks on object edges are not
penalized.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

from .errors import ValidationError
from .vocabulary import Vocabulary, normalize

log = logging.getLogger(__name__)

Point = tuple[float, float]
PointOutcome = Literal["hit", "miss", "class_absent"]

_EPS = 1e-9


@dataclass(frozen=True)
class GroundTruthInstance:
    class_name: str  # normalized
    polygons: tuple[tuple[Point, ...], ...]

    def area(self) -> float:
        """Total shoelace area over all polygon parts, in square pixels."""
        total = 0.0
        for poly in self.polygons:
            acc = 0.0
            n = len(poly)
            for i in range(n):
                x1, y1 = poly[i]
                x2, y2 = poly[(i + 1) % n]
                acc += x1 * y2 - x2 * y1
            total += abs(acc) / 2.0
        return total


@dataclass
class GroundTruthImage:
    image_id: str
    width: int
    height: int
    instances: list[GroundTruthInstance]

    @property
    def class_set(self) -> set[str]:
        return {inst.class_name for inst in self.instances}


@dataclass
class GroundTruthSet:
    images: dict[str, GroundTruthImage]
    vocabulary_id: str

    def image(self, image_id: str) -> GroundTruthImage | None:
        return self.images.get(image_id)


def _point_on_segment(px: float, py: float, ax: float, ay: float,
                      bx: float, by: float) -> bool:
    cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax)
    if abs(cross) > _EPS * max(1.0, abs(bx - ax) + abs(by - ay)):
        return False
    return (min(ax, bx) - _EPS <= px <= max(ax, bx) + _EPS
            and min(ay, by) - _EPS <= py <= max(ay, by) + _EPS)


def point_in_polygon(p: Point, polygon: tuple[Point, ...]) -> bool:
    """Even-odd containment; points on the boundary count as inside."""
    px, py = p
    n = len(polygon)
    inside = False
    for i in range(n):
        ax, ay = polygon[i]
        bx, by = polygon[(i + 1) % n]
        if _point_on_segment(px, py, ax, ay, bx, by):
            return True
        # crossing test: edge straddles the horizontal line through p
        if (ay > py) != (by > py):
            x_at = ax + (py - ay) * (bx - ax) / (by - ay)
            if px < x_at:
                inside = not inside
    return inside


def point_in_class_mask(gt: GroundTruthImage, class_name: str,
                        p: Point) -> PointOutcome:
    """hit / miss / class_absent for a click against one image's masks.

    class_absent is independent of p: it reports that the image has no
    instance of the class at all, which excludes the click from location
    accuracy to avoid conflating semantic and location errors.
    """
    norm = normalize(class_name)
    instances = [inst for inst in gt.instances if inst.class_name == norm]
    if not instances:
        return "class_absent"
    for inst in instances:
        for poly in inst.polygons:
            if point_in_polygon(p, poly):
                return "hit"
    return "miss"


def _parse_polygon(flat: list[float], image_id, width: int,
                   height: int) -> tuple[Point, ...] | None:
    if len(flat) < 6 or len(flat) % 2 != 0:
        log.warning("image %s: degenerate polygon with %d coordinates dropped",
                    image_id, len(flat))
        return None
    points = tuple((float(flat[i]), float(flat[i + 1]))
                   for i in range(0, len(flat), 2))
    for x, y in points:
        if not (0 <= x <= width and 0 <= y <= height):
            raise ValidationError(
                f"image {image_id}: polygon vertex ({x},{y}) outside "
                f"bounds {width}x{height}")
    return points


def load_ground_truth(path: str | Path, vocab: Vocabulary) -> GroundTruthSet:
    """Parse a COCO-style ground-truth file and map categories to the vocabulary.

    Unknown category ids and categories outside the vocabulary are errors;
    degenerate polygons drop the instance with a warning.
    """
    with open(path, encoding="utf-8") as f:
        doc = json.load(f)
    categories: dict[int, str] = {}
    for cat in doc.get("categories", []):
        cls = vocab.contains(cat["name"])
        if cls is None:
            raise ValidationError(
                f"{path}: category {cat['name']!r} not in vocabulary {vocab.name!r}")
        categories[int(cat["id"])] = cls.normalized

    images: dict[str, GroundTruthImage] = {}
    for img in doc.get("images", []):
        image_id = str(img["id"])
        images[image_id] = GroundTruthImage(
            image_id=image_id, width=int(img["width"]), height=int(img["height"]),
            instances=[])

    for ann in doc.get("annotations", []):
        image_id = str(ann["image_id"])
        if image_id not in images:
            raise ValidationError(f"{path}: annotation references unknown image {image_id}")
        cat_id = int(ann["category_id"])
        if cat_id not in categories:
            raise ValidationError(f"{path}: unknown category id {cat_id}")
        gt_img = images[image_id]
        polygons = []
        for flat in ann.get("segmentation", []):
            poly = _parse_polygon(flat, image_id, gt_img.width, gt_img.height)
            if poly is not None:
                polygons.append(poly)
        if not polygons:
            log.warning("image %s: instance of %s rejected, no valid polygon",
                        image_id, categories[cat_id])
            continue
        gt_img.instances.append(GroundTruthInstance(
            class_name=categories[cat_id], polygons=tuple(polygons)))

    return GroundTruthSet(images=images, vocabulary_id=vocab.name)
