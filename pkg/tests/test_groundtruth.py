import json
import math

import numpy as np
import pytest

from speechlabel.errors import ValidationError
from speechlabel.groundtruth import (
    GroundTruthImage,
    GroundTruthInstance,
    load_ground_truth,
    point_in_class_mask,
    point_in_polygon,
)
from speechlabel.vocabulary import ClassName, Vocabulary


def vocab_of(*names):
    return Vocabulary(name="v", classes=[ClassName.of(n) for n in names])


def square(x0, y0, x1, y1):
    return ((float(x0), float(y0)), (float(x1), float(y0)),
            (float(x1), float(y1)), (float(x0), float(y1)))


def gt_image(instances, image_id="i1", size=(100, 100)):
    return GroundTruthImage(image_id=image_id, width=size[0], height=size[1],
                            instances=list(instances))


DOG_SQUARE = gt_image([GroundTruthInstance("dog", (square(10, 10, 20, 20),))])


def test_interior_point_hits():
    assert point_in_class_mask(DOG_SQUARE, "dog", (15, 15)) == "hit"


def test_exterior_point_misses():
    assert point_in_class_mask(DOG_SQUARE, "dog", (25, 25)) == "miss"


def test_boundary_point_hits():
    assert point_in_class_mask(DOG_SQUARE, "dog", (10, 15)) == "hit"
    assert point_in_class_mask(DOG_SQUARE, "dog", (10, 10)) == "hit"


def test_absent_class_ignored_independent_of_point():
    for p in [(15, 15), (25, 25), (0, 0)]:
        assert point_in_class_mask(DOG_SQUARE, "cat", p) == "class_absent"


def test_multi_polygon_instance_hits_any_part():
    inst = GroundTruthInstance("dog", (square(0, 0, 5, 5), square(50, 50, 60, 60)))
    img = gt_image([inst])
    assert point_in_class_mask(img, "dog", (52, 55)) == "hit"
    assert point_in_class_mask(img, "dog", (30, 30)) == "miss"


def test_instance_area_shoelace():
    inst = GroundTruthInstance("dog", (square(10, 10, 30, 25),))
    assert inst.area() == pytest.approx(20 * 15)
    two = GroundTruthInstance("dog", (square(0, 0, 2, 2), square(5, 5, 7, 7)))
    assert two.area() == pytest.approx(8.0)


# --- scanline rasterization oracle -----------------------------------------

def scanline_inside(poly, px, py):
    """Even-odd scanline fill at 1-pixel resolution, evaluated at row py."""
    xs = []
    n = len(poly)
    for i in range(n):
        ax, ay = poly[i]
        bx, by = poly[(i + 1) % n]
        if (ay > py) != (by > py):
            xs.append(ax + (py - ay) * (bx - ax) / (by - ay))
    xs.sort()
    inside = False
    for x in xs:
        if x > px:
            break
        inside = not inside
    return inside


def boundary_distance(poly, px, py):
    best = math.inf
    n = len(poly)
    for i in range(n):
        ax, ay = poly[i]
        bx, by = poly[(i + 1) % n]
        dx, dy = bx - ax, by - ay
        length_sq = dx * dx + dy * dy
        if length_sq == 0:
            d = math.hypot(px - ax, py - ay)
        else:
            u = max(0.0, min(1.0, ((px - ax) * dx + (py - ay) * dy) / length_sq))
            d = math.hypot(px - (ax + u * dx), py - (ay + u * dy))
        best = min(best, d)
    return best


def random_polygon(rng, size=60):
    kind = rng.integers(3)
    if kind == 0:  # triangle
        pts = rng.uniform(2, size - 2, size=(3, 2))
    elif kind == 1:  # convex-ish quad from jittered rectangle
        x0, y0 = rng.uniform(2, size / 2, size=2)
        w, h = rng.uniform(8, size / 2, size=2)
        base = [(x0, y0), (x0 + w, y0), (x0 + w, y0 + h), (x0, y0 + h)]
        pts = np.array(base) + rng.uniform(-2, 2, size=(4, 2))
        pts = np.clip(pts, 1, size - 1)
    else:  # star-shaped polygon around a center
        k = int(rng.integers(5, 9))
        angles = np.sort(rng.uniform(0, 2 * np.pi, size=k))
        radii = rng.uniform(4, size / 2 - 2, size=k)
        cx = cy = size / 2
        pts = np.stack([cx + radii * np.cos(angles), cy + radii * np.sin(angles)],
                       axis=1)
        pts = np.clip(pts, 1, size - 1)
    return tuple((float(x), float(y)) for x, y in pts)


def test_point_in_polygon_matches_scanline_oracle():
    rng = np.random.default_rng(42)
    size = 60
    probes = 0
    disagreements = 0
    for _ in range(500):
        poly = random_polygon(rng, size)
        points = rng.integers(0, size, size=(50, 2))
        for px, py in points:
            probes += 1
            ours = point_in_polygon((float(px), float(py)), poly)
            oracle = scanline_inside(poly, float(px), float(py))
            if ours != oracle:
                disagreements += 1
                # disagreement is only tolerable at the mask boundary
                assert boundary_distance(poly, float(px), float(py)) <= 1.0
    assert probes == 25000
    assert disagreements <= 0.02 * probes


# --- loading ---------------------------------------------------------------

def write_gt(tmp_path, doc):
    path = tmp_path / "gt.json"
    path.write_text(json.dumps(doc))
    return path


MINIMAL = {
    "images": [{"id": "i1", "width": 100, "height": 100, "file_name": "i1.png"}],
    "categories": [{"id": 1, "name": "dog"}],
    "annotations": [{"id": 1, "image_id": "i1", "category_id": 1,
                     "segmentation": [[10, 10, 60, 10, 35, 50]]}],
}


def test_load_minimal_triangle(tmp_path):
    gt = load_ground_truth(write_gt(tmp_path, MINIMAL), vocab_of("dog", "cat"))
    img = gt.image("i1")
    assert img.class_set == {"dog"}
    assert point_in_class_mask(img, "dog", (35, 20)) == "hit"


def test_load_rejects_unknown_category(tmp_path):
    doc = dict(MINIMAL, categories=[{"id": 1, "name": "unicorn"}])
    with pytest.raises(ValidationError):
        load_ground_truth(write_gt(tmp_path, doc), vocab_of("dog"))


def test_load_image_with_no_instances(tmp_path):
    doc = dict(MINIMAL, annotations=[])
    gt = load_ground_truth(write_gt(tmp_path, doc), vocab_of("dog"))
    assert gt.image("i1").class_set == set()


def test_load_drops_degenerate_polygon_with_warning(tmp_path, caplog):
    doc = dict(MINIMAL, annotations=[
        {"id": 1, "image_id": "i1", "category_id": 1,
         "segmentation": [[10, 10, 20, 20]]}])
    with caplog.at_level("WARNING"):
        gt = load_ground_truth(write_gt(tmp_path, doc), vocab_of("dog"))
    assert gt.image("i1").instances == []
    assert any("degenerate" in r.message for r in caplog.records)


def test_load_rejects_out_of_bounds_vertex(tmp_path):
    doc = dict(MINIMAL, annotations=[
        {"id": 1, "image_id": "i1", "category_id": 1,
         "segmentation": [[10, 10, 500, 10, 35, 50]]}])
    with pytest.raises(ValidationError):
        load_ground_truth(write_gt(tmp_path, doc), vocab_of("dog"))
