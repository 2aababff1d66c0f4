"""SemanticKITTI-style label ids, names and display colors.

Only used for naming and PLY export colors; nothing in the pipeline depends
on this particular table.
"""

from __future__ import annotations

LABEL_NAMES = {
    0: "unlabeled",
    10: "car",
    11: "bicycle",
    13: "bus",
    15: "motorcycle",
    18: "truck",
    20: "other-vehicle",
    30: "person",
    31: "bicyclist",
    32: "motorcyclist",
    40: "road",
    44: "parking",
    48: "sidewalk",
    49: "other-ground",
    50: "building",
    51: "fence",
    70: "vegetation",
    71: "trunk",
    72: "terrain",
    80: "pole",
    81: "traffic-sign",
}

LABEL_COLORS = {
    0: (128, 128, 128),
    10: (100, 150, 245),
    11: (100, 230, 245),
    13: (100, 80, 250),
    15: (30, 60, 150),
    18: (80, 30, 180),
    20: (0, 0, 255),
    30: (255, 30, 30),
    31: (255, 40, 200),
    32: (150, 30, 90),
    40: (255, 0, 255),
    44: (255, 150, 255),
    48: (75, 0, 75),
    49: (175, 0, 75),
    50: (255, 200, 0),
    51: (255, 120, 50),
    70: (0, 175, 0),
    71: (135, 60, 0),
    72: (150, 240, 80),
    80: (255, 240, 150),
    81: (255, 0, 0),
}

DEFAULT_COLOR = (200, 200, 200)


def label_name(label_id: int) -> str:
    return LABEL_NAMES.get(int(label_id), f"class-{int(label_id)}")


def label_color(label_id: int):
    return LABEL_COLORS.get(int(label_id), DEFAULT_COLOR)
