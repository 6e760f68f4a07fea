"""Rolabelimg-style XML annotations and geometric label transforms.

The on-disk schema (one file per image):

    <annotation>
      <folder>SSS</folder>
      <filename>img0001.png</filename>
      <size><width>416</width><height>416</height><depth>3</depth></size>
      <object>
        <name>carrot</name>
        <type>robndbox</type>
        <robndbox>
          <cx>100.0</cx><cy>200.0</cy><w>80.0</w><h>30.0</h>
          <angle>0.7853981633974483</angle>
        </robndbox>
      </object>
    </annotation>

Angles are stored in radians in [0, pi] and converted to canonical
degrees in [0, 180) at the parse boundary; every internal module works
in degrees. xml_angle_convention selects how the stored angle maps onto
the internal counterclockwise-from-+x convention: "ccw" reads it
directly, "cw" negates it (for files written by tools that measure
clockwise in the y-down pixel frame).
"""

from __future__ import annotations

import math
import warnings
import xml.etree.ElementTree as ET
from dataclasses import dataclass, replace
from typing import Literal

from .errors import AngleOutOfRange, MalformedXml, MissingField, OutOfImage
from .geometry import GraspBox

SUBSET_TAGS = ("SSS", "NSS", "MOS", "other")
ANGLE_SLACK_RAD = 1e-6

XmlAngleConvention = Literal["ccw", "cw"]
TransformOp = Literal["rot90cw", "rot180", "rot270cw", "flip_h", "flip_v"]

TRANSFORM_OPS: tuple[TransformOp, ...] = (
    "rot90cw",
    "rot180",
    "rot270cw",
    "flip_h",
    "flip_v",
)


@dataclass(frozen=True)
class AnnotatedImage:
    image_id: str
    width: float
    height: float
    subset: str
    boxes: tuple[GraspBox, ...]
    object_names: tuple[str, ...]

    def __post_init__(self):
        if len(self.boxes) != len(self.object_names):
            raise ValueError("boxes and object_names must be parallel")
        if self.subset not in SUBSET_TAGS:
            raise ValueError(f"subset must be one of {SUBSET_TAGS}, got {self.subset!r}")


def _require(parent: ET.Element, tag: str) -> ET.Element:
    el = parent.find(tag)
    if el is None:
        raise MissingField(tag)
    return el


def _require_float(parent: ET.Element, tag: str) -> float:
    el = _require(parent, tag)
    try:
        return float(el.text)
    except (TypeError, ValueError):
        raise MalformedXml(f"element {tag!r} is not a number: {el.text!r}") from None


def parse_annotation(
    xml_data: bytes | str,
    xml_angle_convention: XmlAngleConvention = "ccw",
) -> AnnotatedImage:
    """Parse one rolabelimg robndbox annotation.

    Raises MalformedXml / MissingField on schema violations,
    AngleOutOfRange when an angle leaves [0, pi] by more than 1e-6 rad
    (values inside the slack normalize with a warning), and OutOfImage
    when a box center lies outside the image.
    """
    try:
        root = ET.fromstring(xml_data)
    except ET.ParseError as exc:
        raise MalformedXml(f"unparseable XML: {exc}") from exc
    if root.tag != "annotation":
        raise MalformedXml(f"root element is {root.tag!r}, expected 'annotation'")

    size = _require(root, "size")
    width = _require_float(size, "width")
    height = _require_float(size, "height")
    filename_el = root.find("filename")
    filename = (filename_el.text or "") if filename_el is not None else ""
    image_id = filename.rsplit(".", 1)[0] if filename else ""
    folder_el = root.find("folder")
    folder = (folder_el.text or "").strip() if folder_el is not None else ""
    subset = folder if folder in SUBSET_TAGS else "other"

    boxes: list[GraspBox] = []
    names: list[str] = []
    for obj in root.findall("object"):
        name_el = _require(obj, "name")
        rb = _require(obj, "robndbox")
        cx = _require_float(rb, "cx")
        cy = _require_float(rb, "cy")
        w = _require_float(rb, "w")
        h = _require_float(rb, "h")
        angle = _require_float(rb, "angle")
        theta = _angle_to_degrees(angle, xml_angle_convention)
        if not (0.0 <= cx <= width and 0.0 <= cy <= height):
            raise OutOfImage(
                f"box center ({cx}, {cy}) outside image {width} x {height}"
            )
        boxes.append(GraspBox(cx, cy, w, h, theta))
        names.append(name_el.text or "")

    return AnnotatedImage(image_id, width, height, subset, tuple(boxes), tuple(names))


def _angle_to_degrees(angle_rad: float, convention: XmlAngleConvention) -> float:
    if not math.isfinite(angle_rad):
        raise AngleOutOfRange(f"angle {angle_rad!r} is not finite")
    if angle_rad < -ANGLE_SLACK_RAD or angle_rad > math.pi + ANGLE_SLACK_RAD:
        raise AngleOutOfRange(
            f"angle {angle_rad} rad outside [0, pi] beyond {ANGLE_SLACK_RAD} slack"
        )
    if angle_rad < 0.0 or angle_rad > math.pi:
        warnings.warn(
            f"angle {angle_rad} rad marginally outside [0, pi]; normalizing",
            stacklevel=3,
        )
    deg = math.degrees(angle_rad) % 180.0
    if convention == "cw":
        deg = (-deg) % 180.0
    elif convention != "ccw":
        raise ValueError(f"unknown xml_angle_convention {convention!r}")
    return deg


def serialize_annotation(
    img: AnnotatedImage,
    xml_angle_convention: XmlAngleConvention = "ccw",
    image_suffix: str = ".png",
) -> str:
    """Canonical XML writer with bit-stable field ordering.

    Angles are written with repr precision so parse(serialize(img))
    reproduces them to well under 1e-9 rad.
    """
    lines = ["<annotation>"]
    lines.append(f"  <folder>{img.subset}</folder>")
    lines.append(f"  <filename>{img.image_id}{image_suffix}</filename>")
    lines.append("  <size>")
    lines.append(f"    <width>{img.width:g}</width>")
    lines.append(f"    <height>{img.height:g}</height>")
    lines.append("    <depth>3</depth>")
    lines.append("  </size>")
    for box, name in zip(img.boxes, img.object_names):
        deg = box.theta
        if xml_angle_convention == "cw":
            deg = (-deg) % 180.0
        rad = math.radians(deg)
        lines.append("  <object>")
        lines.append(f"    <name>{name}</name>")
        lines.append("    <type>robndbox</type>")
        lines.append("    <robndbox>")
        lines.append(f"      <cx>{box.x!r}</cx>")
        lines.append(f"      <cy>{box.y!r}</cy>")
        lines.append(f"      <w>{box.w!r}</w>")
        lines.append(f"      <h>{box.h!r}</h>")
        lines.append(f"      <angle>{rad!r}</angle>")
        lines.append("    </robndbox>")
        lines.append("  </object>")
    lines.append("</annotation>")
    return "\n".join(lines) + "\n"


def _transform_box(
    box: GraspBox, op: TransformOp, width: float, height: float
) -> GraspBox:
    x, y, theta = box.x, box.y, box.theta
    if op == "rot90cw":
        nx, ny = height - y, x
        ntheta = (theta + 90.0) % 180.0
    elif op == "rot180":
        nx, ny = width - x, height - y
        ntheta = theta
    elif op == "rot270cw":
        nx, ny = y, width - x
        ntheta = (theta + 90.0) % 180.0
    elif op == "flip_h":
        nx, ny = width - x, y
        ntheta = (180.0 - theta) % 180.0
    elif op == "flip_v":
        nx, ny = x, height - y
        ntheta = (180.0 - theta) % 180.0
    else:
        raise ValueError(f"unknown transform {op!r}")
    return GraspBox(nx, ny, box.w, box.h, ntheta)


def transform_labels(img: AnnotatedImage, op: TransformOp) -> AnnotatedImage:
    """Label math for the geometric augmentations.

    Centers use the continuous pixel-coordinate convention (horizontal
    flip maps x to W - x); w and h never change; angles follow the
    rigid motion on the mod-180 circle. 90/270 degree rotations swap the
    image dimensions.
    """
    if op in ("rot90cw", "rot270cw"):
        new_w, new_h = img.height, img.width
    else:
        new_w, new_h = img.width, img.height
    boxes = tuple(_transform_box(b, op, img.width, img.height) for b in img.boxes)
    return replace(img, width=new_w, height=new_h, boxes=boxes)
