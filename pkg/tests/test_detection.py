import random

import pytest
from hypothesis import given, settings, strategies as st

import oracles
from canopy_plan.detection import (
    DetectionBox,
    ImageMeta,
    RegionSet,
    aggregate_area,
    area_csv,
    box_area_km2,
    image_level_metrics,
    load_regions,
    parse_label_file,
    parse_manifest,
    serialize_labels,
    union_area_km2,
)
from canopy_plan.errors import ArgumentError, FormatError, ParseError

SQUARE = ImageMeta("sq", 1400, 1400)


def test_parse_examples():
    (full,) = parse_label_file("0 0.5 0.5 1.0 1.0")
    assert (full.class_label, full.cx, full.cy, full.w, full.h) == ("suitable_place", 0.5, 0.5, 1.0, 1.0)
    assert full.confidence is None and not full.clamped
    (b,) = parse_label_file("0 0.5 0.5 0.2 0.1 0.91")
    assert b.confidence == 0.91
    assert parse_label_file("") == []
    assert parse_label_file("# header\n\n") == []


def test_parse_named_class_and_custom_map():
    (b,) = parse_label_file("road 0.5 0.5 0.2 0.2")
    assert b.class_label == "road"
    (c,) = parse_label_file("3 0.5 0.5 0.2 0.2", class_map={3: "field"})
    assert c.class_label == "field"


@pytest.mark.parametrize("text,line", [
    ("0 0.5 oops 0.2 0.1", 1),
    ("0 0.5 0.5 0.2 0.1\n0 0.5 0.5", 2),
    ("0 0.5 0.5 0.2 0.1\n\n7 0.5 0.5 0.2 0.2", 3),
    ("0 0.5 0.5 0 0.1", 1),
    ("0 0.5 0.5 0.2 0.1 1.5", 1),
    ("0 nan 0.5 0.2 0.1", 1),
    ("0 0.5 0.5 0.2 0.1 0.3 0.4", 1),
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(ParseError) as info:
        parse_label_file(text)
    assert info.value.line == line


def test_boxes_crossing_border_are_clamped():
    (b,) = parse_label_file("0 0.95 0.5 0.2 0.2")
    assert b.clamped
    x0, y0, x1, y1 = b.extent
    assert x0 == pytest.approx(0.85) and x1 == pytest.approx(1.0)
    assert box_area_km2(b, SQUARE) == pytest.approx(0.15 * 0.2)
    regions = RegionSet()
    regions.add(SQUARE, [b])
    assert regions.clamped_count == 1


def test_area_examples():
    full = DetectionBox("suitable_place", 0.5, 0.5, 1.0, 1.0)
    assert box_area_km2(full, SQUARE) == 1.0
    assert box_area_km2(full, ImageMeta("y", 640, 640)) == pytest.approx((640 / 1400) ** 2, rel=1e-12)
    assert box_area_km2(full, ImageMeta("y", 640, 640)) == pytest.approx(0.20898, abs=1e-5)
    assert box_area_km2(DetectionBox("suitable_place", 0.5, 0.5, 0.5, 0.5), SQUARE) == 0.25


@given(st.floats(0.01, 1), st.floats(0.01, 1), st.floats(10, 1e5))
def test_area_quadratic_in_scale(w, h, ppk):
    box = DetectionBox("suitable_place", 0.5, 0.5, w, h)
    a = box_area_km2(box, ImageMeta("i", 800, 600, ppk))
    b = box_area_km2(box, ImageMeta("i", 800, 600, 2 * ppk))
    assert b == pytest.approx(a / 4, rel=1e-12)


def test_meta_validation():
    with pytest.raises(ArgumentError):
        ImageMeta("x", 0, 10)
    with pytest.raises(ArgumentError):
        ImageMeta("x", 10, 10, 0.0)


def test_aggregate_examples():
    assert aggregate_area(RegionSet()) == 0.0
    regions = RegionSet()
    regions.add(SQUARE, [DetectionBox("suitable_place", 0.2, 0.2, 0.2, 0.2),
                         DetectionBox("suitable_place", 0.7, 0.7, 0.25, 0.2)])
    assert aggregate_area(regions) == pytest.approx(0.09, abs=1e-15)


def test_two_hundred_image_fixture_totals_nine():
    regions = RegionSet()
    rng = random.Random(9)
    for i in range(200):
        # each scene holds 0.045 km² split over two disjoint boxes
        split = rng.choice([0.1, 0.15, 0.2])
        regions.add(ImageMeta(f"img{i:03d}", 1400, 1400), [
            DetectionBox("suitable_place", 0.25, 0.25, 0.15, split),
            DetectionBox("suitable_place", 0.75, 0.75, 0.15, 0.3 - split),
        ])
    assert aggregate_area(regions) == pytest.approx(9.0, abs=1e-9)


def test_missing_metadata_is_an_error():
    regions = RegionSet(boxes={"ghost": [DetectionBox("suitable_place", 0.5, 0.5, 0.1, 0.1)]})
    with pytest.raises(ArgumentError, match="ghost"):
        aggregate_area(regions)


box_st = st.builds(
    DetectionBox,
    st.just("suitable_place"),
    st.floats(0.1, 0.9), st.floats(0.1, 0.9), st.floats(0.01, 0.2), st.floats(0.01, 0.2),
)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(100, 3000), st.integers(100, 3000), st.lists(box_st, max_size=6)),
                min_size=1, max_size=12), st.randoms())
def test_aggregate_permutation_invariant_and_additive(images, rnd):
    entries = [(ImageMeta(f"i{k}", w, h), boxes) for k, (w, h, boxes) in enumerate(images)]
    whole = RegionSet()
    for meta, boxes in entries:
        whole.add(meta, boxes)
    shuffled = RegionSet()
    order = list(entries)
    rnd.shuffle(order)
    for meta, boxes in order:
        shuffled.add(meta, rnd.sample(boxes, len(boxes)))
    assert aggregate_area(shuffled) == pytest.approx(aggregate_area(whole), rel=1e-9, abs=1e-15)

    cut = len(entries) // 2
    left, right = RegionSet(), RegionSet()
    for meta, boxes in entries[:cut]:
        left.add(meta, boxes)
    for meta, boxes in entries[cut:]:
        right.add(meta, boxes)
    assert aggregate_area(left) + aggregate_area(right) == pytest.approx(
        aggregate_area(whole), rel=1e-9, abs=1e-15)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 19), st.integers(0, 19), st.integers(1, 10), st.integers(1, 10)),
                min_size=1, max_size=6))
def test_union_matches_raster_oracle(specs):
    res = 20
    rects, boxes = [], []
    for x0, y0, w, h in specs:
        x1, y1 = min(x0 + w, res), min(y0 + h, res)
        rects.append((x0, y0, x1, y1))
        boxes.append(DetectionBox("suitable_place", (x0 + x1) / 2 / res, (y0 + y1) / 2 / res,
                                  (x1 - x0) / res, (y1 - y0) / res))
    meta = ImageMeta("u", 1400, 1400)
    expected = oracles.raster_union_cells(rects, res) / res ** 2
    assert union_area_km2(boxes, meta) == pytest.approx(expected, abs=1e-12)
    regions = RegionSet()
    regions.add(meta, boxes)
    assert aggregate_area(regions, merge_overlaps=True) <= aggregate_area(regions) + 1e-12


def test_union_of_identical_boxes_counts_once():
    b = DetectionBox("suitable_place", 0.5, 0.5, 0.4, 0.4)
    assert union_area_km2([b, b, b], SQUARE) == pytest.approx(0.16)
    assert union_area_km2([], SQUARE) == 0.0


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(box_st, st.none() | st.floats(0, 1)), max_size=8))
def test_parse_serialize_fixed_point(items):
    boxes = [DetectionBox(b.class_label, b.cx, b.cy, b.w, b.h, c) for b, c in items]
    once = parse_label_file(serialize_labels(boxes))
    twice = parse_label_file(serialize_labels(once))
    assert once == twice == boxes


def test_metrics_examples():
    imgs = {f"i{k}" for k in range(10)}
    m = image_level_metrics(imgs, imgs, imgs)
    assert (m.accuracy, m.precision, m.recall) == (100.0, 100.0, 100.0)
    truth = {f"i{k}" for k in range(9)}
    m = image_level_metrics(imgs, truth, imgs)
    assert (m.tp, m.fp, m.fn, m.tn) == (9, 1, 0, 0)
    assert m.precision == pytest.approx(90.0) and m.recall == 100.0
    m = image_level_metrics(set(), set(), imgs)
    assert m.precision is None and m.recall is None and m.accuracy == 100.0
    with pytest.raises(ArgumentError):
        image_level_metrics(set(), set(), set())
    with pytest.raises(ArgumentError):
        image_level_metrics({"zz"}, set(), imgs)


def test_metrics_match_confusion_oracle():
    rng = random.Random(50)
    for _ in range(200):
        universe = {f"img{k}" for k in range(50)}
        pred = {i for i in universe if rng.random() < rng.random()}
        truth = {i for i in universe if rng.random() < rng.random()}
        m = image_level_metrics(pred, truth, universe)
        tp, fp, fn = len(pred & truth), len(pred - truth), len(truth - pred)
        assert (m.tp, m.fp, m.fn, m.tn) == (tp, fp, fn, 50 - tp - fp - fn)
        for got, want in zip((m.accuracy, m.precision, m.recall),
                             oracles.confusion_bruteforce(pred, truth, universe)):
            assert (got is None and want is None) or got == pytest.approx(want, rel=1e-12)
        for v in (m.accuracy, m.precision, m.recall):
            assert v is None or 0.0 <= v <= 100.0


def test_manifest_parsing():
    metas = parse_manifest("image_id,width_px,height_px,px_per_km\na,640,480,\nb,10,10,700\n")
    assert metas["a"].px_per_km == 1400.0 and metas["b"].px_per_km == 700.0
    with pytest.raises(FormatError):
        parse_manifest("id,w,h\n")
    with pytest.raises(ParseError) as info:
        parse_manifest("image_id,width_px,height_px\na,1,1\na,2,2\n")
    assert info.value.row == 3
    with pytest.raises(ParseError):
        parse_manifest("image_id,width_px,height_px\na,wide,1\n")


def test_bundled_scene_totals_two_box_area(data_dir):
    regions = load_regions(data_dir / "labels", (data_dir / "manifest.csv").read_text("utf-8"))
    assert aggregate_area(regions) == pytest.approx(0.09, abs=1e-12)
    assert regions.positive_images() == {"scene_0001"}
    assert regions.positive_images(min_confidence=0.95) == set()
    csv_text = area_csv(regions)
    assert csv_text.splitlines()[0] == "image_id,boxes,area_km2"
    assert csv_text.splitlines()[-1] == "TOTAL,2,0.09"
