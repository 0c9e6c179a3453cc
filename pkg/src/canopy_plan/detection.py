"""Detector label files to ground area, plus image-level detection metrics.

Label files hold one box per line, ``class cx cy w h [confidence]``, with
coordinates normalised to the image size.  Ground area uses a fixed
pixels-per-kilometre scale (1400 px/km for the Gabala imagery).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import ArgumentError, FormatError, ParseError
from .metrics import SetMetrics, classification_metrics

DEFAULT_PX_PER_KM = 1400.0
SUITABLE = "suitable_place"
DEFAULT_CLASS_MAP = {0: SUITABLE}


@dataclass(frozen=True)
class ImageMeta:
    image_id: str
    width_px: int
    height_px: int
    px_per_km: float = DEFAULT_PX_PER_KM
    geo_hint: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.width_px < 1 or self.height_px < 1:
            raise ArgumentError(f"{self.image_id}: image dimensions must be positive")
        if not (self.px_per_km > 0 and math.isfinite(self.px_per_km)):
            raise ArgumentError(f"{self.image_id}: px_per_km must be positive")


@dataclass(frozen=True)
class DetectionBox:
    class_label: str
    cx: float
    cy: float
    w: float
    h: float
    confidence: float | None = None
    clamped: bool = False

    def __post_init__(self):
        if not (0.0 <= self.cx <= 1.0 and 0.0 <= self.cy <= 1.0):
            raise ArgumentError(f"box centre ({self.cx}, {self.cy}) outside [0, 1]")
        if not (0.0 < self.w <= 1.0 and 0.0 < self.h <= 1.0):
            raise ArgumentError(f"box size ({self.w}, {self.h}) outside (0, 1]")
        if self.confidence is not None and not 0.0 <= self.confidence <= 1.0:
            raise ArgumentError(f"confidence {self.confidence} outside [0, 1]")

    @property
    def extent(self) -> tuple[float, float, float, float]:
        """(x0, y0, x1, y1) in normalised image coordinates."""
        return (self.cx - self.w / 2, self.cy - self.h / 2,
                self.cx + self.w / 2, self.cy + self.h / 2)

    def clamp(self) -> "DetectionBox":
        x0, y0, x1, y1 = self.extent
        if x0 >= 0.0 and y0 >= 0.0 and x1 <= 1.0 and y1 <= 1.0:
            return self
        x0, y0 = max(x0, 0.0), max(y0, 0.0)
        x1, y1 = min(x1, 1.0), min(y1, 1.0)
        return replace(self, cx=(x0 + x1) / 2, cy=(y0 + y1) / 2,
                       w=x1 - x0, h=y1 - y0, clamped=True)


def parse_label_file(
    text: str,
    meta: ImageMeta | None = None,
    class_map: Mapping[int, str] | None = None,
) -> list[DetectionBox]:
    """Parse one label file.  Boxes crossing the image border are clamped.

    An integer class token is looked up in ``class_map`` (default
    ``{0: "suitable_place"}``); any other token is taken as the label itself.
    """
    class_map = DEFAULT_CLASS_MAP if class_map is None else class_map
    where = f"{meta.image_id}: " if meta is not None else ""
    boxes = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split()
        if len(fields) not in (5, 6):
            raise ParseError(f"{where}expected 5 or 6 fields, found {len(fields)}", line=lineno)
        token = fields[0]
        try:
            index = int(token)
        except ValueError:
            label = token
        else:
            if index not in class_map:
                raise ParseError(f"{where}class index {index} not in class map", line=lineno)
            label = class_map[index]
        try:
            numbers = [float(f) for f in fields[1:]]
        except ValueError as exc:
            raise ParseError(f"{where}{exc}", line=lineno) from None
        if not all(math.isfinite(v) for v in numbers):
            raise ParseError(f"{where}non-finite coordinate", line=lineno)
        conf = numbers[4] if len(numbers) == 5 else None
        try:
            box = DetectionBox(label, *numbers[:4], confidence=conf).clamp()
        except ArgumentError as exc:
            raise ParseError(f"{where}{exc}", line=lineno) from None
        boxes.append(box)
    return boxes


def serialize_labels(boxes: Iterable[DetectionBox], class_map: Mapping[int, str] | None = None) -> str:
    class_map = DEFAULT_CLASS_MAP if class_map is None else class_map
    index = {label: i for i, label in class_map.items()}
    lines = []
    for b in boxes:
        head = str(index[b.class_label]) if b.class_label in index else b.class_label
        fields = [head, *(repr(v) for v in (b.cx, b.cy, b.w, b.h))]
        if b.confidence is not None:
            fields.append(repr(b.confidence))
        lines.append(" ".join(fields))
    return "\n".join(lines) + ("\n" if lines else "")


def box_area_km2(box: DetectionBox, meta: ImageMeta) -> float:
    return (box.w * meta.width_px / meta.px_per_km) * (box.h * meta.height_px / meta.px_per_km)


def union_area_km2(boxes: Sequence[DetectionBox], meta: ImageMeta) -> float:
    """Area of the union of axis-aligned boxes, by a sweep over x slabs."""
    if not boxes:
        return 0.0
    rects = [b.extent for b in boxes]
    xs = sorted({x for r in rects for x in (r[0], r[2])})
    total = []
    for left, right in zip(xs, xs[1:]):
        spans = sorted((r[1], r[3]) for r in rects if r[0] <= left and r[2] >= right)
        covered, cur_lo, cur_hi = [], None, None
        for lo, hi in spans:
            if cur_hi is None or lo > cur_hi:
                if cur_hi is not None:
                    covered.append(cur_hi - cur_lo)
                cur_lo, cur_hi = lo, hi
            else:
                cur_hi = max(cur_hi, hi)
        if cur_hi is not None:
            covered.append(cur_hi - cur_lo)
        total.append((right - left) * math.fsum(covered))
    scale = (meta.width_px / meta.px_per_km) * (meta.height_px / meta.px_per_km)
    return math.fsum(total) * scale


@dataclass
class RegionSet:
    """Detections grouped by image, with the metadata needed to size them."""

    boxes: dict[str, list[DetectionBox]] = field(default_factory=dict)
    metas: dict[str, ImageMeta] = field(default_factory=dict)

    def add(self, meta: ImageMeta, boxes: Iterable[DetectionBox]) -> None:
        self.metas[meta.image_id] = meta
        self.boxes.setdefault(meta.image_id, []).extend(boxes)

    def image_areas(self, merge_overlaps: bool = False) -> dict[str, float]:
        out = {}
        for image_id in sorted(set(self.boxes) | set(self.metas)):
            boxes = self.boxes.get(image_id, [])
            meta = self.metas.get(image_id)
            if meta is None:
                if boxes:
                    raise ArgumentError(f"no metadata for image {image_id!r}")
                continue
            if merge_overlaps:
                out[image_id] = union_area_km2(boxes, meta)
            else:
                out[image_id] = math.fsum(box_area_km2(b, meta) for b in boxes)
        return out

    @property
    def total_area_km2(self) -> float:
        return aggregate_area(self)

    @property
    def clamped_count(self) -> int:
        return sum(b.clamped for bs in self.boxes.values() for b in bs)

    def positive_images(self, min_confidence: float = 0.0, label: str = SUITABLE) -> set[str]:
        return {
            image_id
            for image_id, bs in self.boxes.items()
            if any(b.class_label == label and (b.confidence is None or b.confidence >= min_confidence)
                   for b in bs)
        }


def aggregate_area(regions: RegionSet, merge_overlaps: bool = False) -> float:
    """Total detected area in km².

    Overlapping boxes are summed unless ``merge_overlaps`` is set.  Summation
    is exactly rounded (``math.fsum``) so the result does not depend on order.
    """
    return math.fsum(regions.image_areas(merge_overlaps).values())


def parse_manifest(text: str) -> dict[str, ImageMeta]:
    """Parse ``image_id,width_px,height_px[,px_per_km]`` CSV."""
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise FormatError("manifest is empty")
    missing = {"image_id", "width_px", "height_px"} - set(reader.fieldnames)
    if missing:
        raise FormatError(f"manifest header lacks {sorted(missing)}")
    metas = {}
    for rownum, row in enumerate(reader, start=2):
        try:
            scale = row.get("px_per_km") or ""
            meta = ImageMeta(
                row["image_id"].strip(),
                int(row["width_px"]),
                int(row["height_px"]),
                float(scale) if scale.strip() else DEFAULT_PX_PER_KM,
            )
        except (TypeError, ValueError) as exc:
            raise ParseError(str(exc), row=rownum) from None
        if meta.image_id in metas:
            raise ParseError(f"duplicate image_id {meta.image_id!r}", row=rownum)
        metas[meta.image_id] = meta
    return metas


def load_regions(
    labels_dir: str | Path,
    manifest_text: str,
    class_map: Mapping[int, str] | None = None,
) -> RegionSet:
    """Read ``<image_id>.txt`` label files; manifest images without a file have no boxes."""
    labels_dir = Path(labels_dir)
    metas = parse_manifest(manifest_text)
    regions = RegionSet()
    for meta in metas.values():
        regions.add(meta, [])
    for path in sorted(labels_dir.glob("*.txt")):
        image_id = path.stem
        boxes = parse_label_file(path.read_text(encoding="utf-8"), metas.get(image_id), class_map)
        regions.boxes.setdefault(image_id, []).extend(boxes)
    return regions


def area_csv(regions: RegionSet, merge_overlaps: bool = False) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["image_id", "boxes", "area_km2"])
    areas = regions.image_areas(merge_overlaps)
    for image_id, area in areas.items():
        writer.writerow([image_id, len(regions.boxes.get(image_id, [])), f"{area:.9g}"])
    writer.writerow(["TOTAL", sum(len(v) for v in regions.boxes.values()),
                     f"{math.fsum(areas.values()):.9g}"])
    return buf.getvalue()


def image_level_metrics(
    predicted_positive: set[str], truth_positive: set[str], all_images: set[str]
) -> SetMetrics:
    """Accuracy, precision and recall (percent) of image-level suitability calls."""
    return classification_metrics(predicted_positive, truth_positive, all_images)
