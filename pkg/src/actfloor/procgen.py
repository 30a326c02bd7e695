"""Procedural generation of clean raster floorplans.

Produces RPLAN-style ground-truth rasters used as test fixtures and demo
datasets: a rectangular footprint with a 2-px exterior wall, a strip of
non-living rooms along one side, a living room filling the rest, interior
doors connecting every room to the living room, and a main-entrance opening
in the exterior wall.
"""

from __future__ import annotations

import random

import numpy as np

from .core import SIZE, RasterFloorplan, RoomLabel

WALL_T = 2          # wall thickness, px
DOOR_SPAN = 6       # interior door opening, px
ENTRANCE_SPAN = 8   # main entrance opening, px

_FILLER_CATEGORIES = (
    RoomLabel.SECOND, RoomLabel.STUDY, RoomLabel.BATHROOM,
    RoomLabel.KITCHEN, RoomLabel.BALCONY,
)


def generate_floorplan(seed: int, size: int = SIZE) -> RasterFloorplan:
    """Build a valid floorplan deterministically from the seed."""
    rng = random.Random(seed)

    width = rng.randrange(170, 217, 2)
    height = rng.randrange(170, 217, 2)
    x0 = (size - width) // 2 + rng.randrange(-8, 9)
    y0 = (size - height) // 2 + rng.randrange(-8, 9)
    x1, y1 = x0 + width, y0 + height

    category = np.full((size, size), int(RoomLabel.OUTSIDE), dtype=np.uint8)
    room_ids = np.zeros((size, size), dtype=np.uint8)
    inside = np.zeros((size, size), dtype=np.uint8)
    boundary = np.zeros((size, size), dtype=np.uint8)

    inside[y0:y1, x0:x1] = 1
    category[y0:y1, x0:x1] = int(RoomLabel.LIVING)

    # Exterior wall band.
    category[y0:y0 + WALL_T, x0:x1] = int(RoomLabel.WALL)
    category[y1 - WALL_T:y1, x0:x1] = int(RoomLabel.WALL)
    category[y0:y1, x0:x0 + WALL_T] = int(RoomLabel.WALL)
    category[y0:y1, x1 - WALL_T:x1] = int(RoomLabel.WALL)
    boundary[y0:y1, x0:x1] = (category[y0:y1, x0:x1] == int(RoomLabel.WALL))

    # Interior area.
    iy0, iy1 = y0 + WALL_T, y1 - WALL_T
    ix0, ix1 = x0 + WALL_T, x1 - WALL_T

    # Left strip of rooms, living room on the right.
    strip_w = rng.randrange(60, 89)
    xw = ix0 + strip_w  # vertical wall columns xw .. xw+WALL_T-1
    category[iy0:iy1, xw:xw + WALL_T] = int(RoomLabel.WALL)

    n_rooms = rng.randrange(2, 5)
    strip_h = iy1 - iy0
    # Ensure each room is at least 40 px tall after walls.
    while n_rooms > 2 and (strip_h - (n_rooms - 1) * WALL_T) // n_rooms < 40:
        n_rooms -= 1

    cats = [int(RoomLabel.MASTER)] + [
        int(c) for c in rng.sample(_FILLER_CATEGORIES, n_rooms - 1)
    ]
    rng.shuffle(cats)

    room_ids[iy0:iy1, xw + WALL_T:ix1] = 1  # living room

    usable = strip_h - (n_rooms - 1) * WALL_T
    base = usable // n_rooms
    heights = [base] * n_rooms
    heights[-1] += usable - base * n_rooms

    y = iy0
    for i, (cat, h) in enumerate(zip(cats, heights)):
        ry0, ry1 = y, y + h
        category[ry0:ry1, ix0:xw] = cat
        room_ids[ry0:ry1, ix0:xw] = i + 2
        # Door opening in the vertical wall, centered on the room.
        dc = (ry0 + ry1) // 2
        d0 = max(ry0 + 2, dc - DOOR_SPAN // 2)
        category[d0:d0 + DOOR_SPAN, xw:xw + WALL_T] = int(RoomLabel.INTERIOR_DOOR)
        y = ry1
        if i < n_rooms - 1:
            category[y:y + WALL_T, ix0:xw] = int(RoomLabel.WALL)
            y += WALL_T

    # Main entrance on the east exterior wall, opening into the living room.
    ec = (iy0 + iy1) // 2
    e0 = max(iy0 + 2, ec - ENTRANCE_SPAN // 2)
    category[e0:e0 + ENTRANCE_SPAN, x1 - WALL_T:x1] = int(RoomLabel.MAIN_ENTRANCE)
    boundary[e0:e0 + ENTRANCE_SPAN, x1 - WALL_T:x1] = 1

    return RasterFloorplan(inside=inside, boundary=boundary,
                           category=category, room_ids=room_ids)


def generate_dataset(n: int, seed: int = 0, size: int = SIZE) -> list[RasterFloorplan]:
    """A list of n distinct floorplans derived from one seed."""
    return [generate_floorplan(seed * 100003 + i, size=size) for i in range(n)]
