"""Shipped class specs and importance groupings for CamVid and Cityscapes.

Group order is ascending importance: G1 (background surfaces) up to G3
(traffic participants and signage that must be detected with high recall).
Cityscapes class names follow the common table naming (vegetation -> tree,
person -> pedestrian, traffic sign -> sign).
"""

from __future__ import annotations

from .core import ClassSpec
from .metrics import GroupSpec

CAMVID_NAMES = (
    "sky",
    "building",
    "pole",
    "road",
    "sidewalk",
    "tree",
    "sign",
    "fence",
    "car",
    "pedestrian",
    "bicyclist",
)

CAMVID_GROUP_NAMES = (
    ("sky", "building", "tree"),
    ("pole", "road", "sidewalk", "fence"),
    ("sign", "car", "pedestrian", "bicyclist"),
)

CITYSCAPES_NAMES = (
    "road",
    "sidewalk",
    "building",
    "wall",
    "fence",
    "pole",
    "traffic light",
    "sign",
    "tree",
    "terrain",
    "sky",
    "pedestrian",
    "rider",
    "car",
    "truck",
    "bus",
    "train",
    "motorcycle",
    "bicycle",
)

CITYSCAPES_GROUP_NAMES = (
    ("road", "building", "wall", "tree", "terrain", "sky"),
    ("car", "sidewalk", "fence", "pole", "pedestrian"),
    ("sign", "rider", "truck", "bus", "train", "motorcycle", "bicycle", "traffic light"),
)


def camvid_class_spec() -> ClassSpec:
    return ClassSpec(names=CAMVID_NAMES)


def camvid_groups() -> GroupSpec:
    return GroupSpec.from_names(camvid_class_spec(), CAMVID_GROUP_NAMES, ("G1", "G2", "G3"))


def cityscapes_class_spec() -> ClassSpec:
    return ClassSpec(names=CITYSCAPES_NAMES)


def cityscapes_groups() -> GroupSpec:
    return GroupSpec.from_names(
        cityscapes_class_spec(), CITYSCAPES_GROUP_NAMES, ("G1", "G2", "G3")
    )
