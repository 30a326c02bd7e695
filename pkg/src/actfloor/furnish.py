"""Rule-based placement of one primary furniture piece per non-living room.

Placement follows conventional arrangement rules: beds, toilets and stoves
go against the wall opposite (or diagonally opposite) the room entrance,
desks sit beside or opposite the entrance, and washing machines take any
side of a balcony.  Every rule admits several candidate positions; the seed
picks one uniformly so re-seeding sweeps the whole candidate set.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .core import RasterFloorplan, RoomLabel
from .errors import NoRoomEntrance, NoSharedWall, RoomTooSmall


class FurnitureKind(str, Enum):
    BED = "Bed"
    DESK = "Desk"
    TOILET = "Toilet"
    STOVE = "Stove"
    WASHING_MACHINE = "WashingMachine"


KIND_FOR_CATEGORY = {
    int(RoomLabel.MASTER): FurnitureKind.BED,
    int(RoomLabel.SECOND): FurnitureKind.BED,
    int(RoomLabel.STUDY): FurnitureKind.DESK,
    int(RoomLabel.BATHROOM): FurnitureKind.TOILET,
    int(RoomLabel.KITCHEN): FurnitureKind.STOVE,
    int(RoomLabel.BALCONY): FurnitureKind.WASHING_MACHINE,
}


@dataclass(frozen=True)
class Rect:
    """Axis-aligned pixel rectangle; x is the column of the left edge."""

    x: int
    y: int
    w: int
    h: int

    def pixels(self) -> tuple[slice, slice]:
        return slice(self.y, self.y + self.h), slice(self.x, self.x + self.w)

    def contains(self, x: int, y: int) -> bool:
        return self.x <= x < self.x + self.w and self.y <= y < self.y + self.h

    def as_list(self) -> list[int]:
        return [self.x, self.y, self.w, self.h]


@dataclass(frozen=True)
class FurnitureInstance:
    kind: FurnitureKind
    rect: Rect
    room_id: int
    entrance: tuple[int, int]  # (x, y) pixel on the room's wall

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "rect": self.rect.as_list(),
                "room_id": self.room_id,
                "entrance": [self.entrance[0], self.entrance[1]]}

    @staticmethod
    def from_json(d: dict) -> "FurnitureInstance":
        return FurnitureInstance(kind=FurnitureKind(d["kind"]),
                                 rect=Rect(*d["rect"]),
                                 room_id=int(d["room_id"]),
                                 entrance=(int(d["entrance"][0]), int(d["entrance"][1])))


@dataclass
class PlacementPolicy:
    """Tunable sizing rules; defaults follow common practice at 256px scale."""

    bed_area_fraction: float = 0.30     # of room area, aspect 4:3
    desk_area_fraction: float = 0.15    # of room area, aspect 2:1
    toilet_size: tuple[int, int] = (12, 8)           # along-wall x depth
    washing_machine_size: tuple[int, int] = (10, 10)
    stove_depth: int = 8
    desk_entrance_offset: int = 4       # min gap between desk and door opening
    clearance: int = 1                  # entrance clearance zone radius

    candidate_sides: dict = field(default_factory=lambda: {
        FurnitureKind.BED: "opposite",
        FurnitureKind.DESK: "beside-or-opposite",
        FurnitureKind.TOILET: "opposite",
        FurnitureKind.STOVE: "opposite",
        FurnitureKind.WASHING_MACHINE: "any-side",
    })


def serialize_furniture(furniture: list[FurnitureInstance]) -> str:
    return json.dumps([f.to_json() for f in furniture], indent=1, sort_keys=True)


def parse_furniture(text: str) -> list[FurnitureInstance]:
    return [FurnitureInstance.from_json(d) for d in json.loads(text)]


# ---------------------------------------------------------------------------
# Room geometry helpers
# ---------------------------------------------------------------------------

def room_bbox(mask: np.ndarray) -> tuple[int, int, int, int]:
    """(x0, y0, x1, y1) exclusive bounds of the true pixels."""
    ys, xs = np.nonzero(mask)
    return int(xs.min()), int(ys.min()), int(xs.max()) + 1, int(ys.max()) + 1


def detect_room_entrance(fp: RasterFloorplan, room_id: int) -> tuple[int, int]:
    """Center of the INTERIOR_DOOR pixels 4-adjacent to the room region."""
    room = fp.room_mask(room_id)
    door = fp.category == RoomLabel.INTERIOR_DOOR
    pad = np.pad(room, 1)
    adj = (pad[:-2, 1:-1] | pad[2:, 1:-1] | pad[1:-1, :-2] | pad[1:-1, 2:])
    touching = door & adj
    if not touching.any():
        raise NoRoomEntrance(f"room {room_id} has no adjacent interior door")
    ys, xs = np.nonzero(touching)
    return int(round(xs.mean())), int(round(ys.mean()))


def _entrance_side(bbox, ex, ey) -> str:
    x0, y0, x1, y1 = bbox
    dists = {"W": abs(ex - x0), "E": abs(ex - (x1 - 1)),
             "N": abs(ey - y0), "S": abs(ey - (y1 - 1))}
    return min(dists, key=lambda s: (dists[s], s))


_OPPOSITE = {"N": "S", "S": "N", "W": "E", "E": "W"}


def _flush_candidates(bbox, side: str, along: int, depth: int) -> list[Rect]:
    """Left-corner / center / right-corner rects flush against one wall."""
    x0, y0, x1, y1 = bbox
    rects = []
    if side in ("N", "S"):
        w, h = along, depth
        y = y0 if side == "N" else y1 - h
        xs = sorted({x0, (x0 + x1 - w) // 2, x1 - w})
        rects = [Rect(x, y, w, h) for x in xs]
    else:
        w, h = depth, along
        x = x0 if side == "W" else x1 - w
        ys = sorted({y0, (y0 + y1 - h) // 2, y1 - h})
        rects = [Rect(x, y, w, h) for y in ys]
    return rects


def _beside_entrance_candidates(bbox, side: str, ex, ey, along, depth, offset) -> list[Rect]:
    x0, y0, x1, y1 = bbox
    rects = []
    if side in ("N", "S"):
        y = y0 if side == "N" else y1 - depth
        for x in (ex - offset - along, ex + offset + 1):
            rects.append(Rect(x, y, along, depth))
    else:
        x = x0 if side == "W" else x1 - depth
        for y in (ey - offset - along, ey + offset + 1):
            rects.append(Rect(x, y, depth, along))
    return rects


def _sized(area_fraction: float, aspect: tuple[int, int], room_area: int,
           max_along: int, max_depth: int) -> tuple[int, int]:
    """(along-wall, depth) side lengths for an area-fraction rule."""
    target = area_fraction * room_area
    long_side = (target * aspect[0] / aspect[1]) ** 0.5
    short_side = (target * aspect[1] / aspect[0]) ** 0.5
    along = max(4, min(int(round(long_side)), max_along))
    depth = max(3, min(int(round(short_side)), max_depth))
    return along, depth


def _legal(rect: Rect, room: np.ndarray, ex: int, ey: int, clearance: int) -> bool:
    h, w = room.shape
    if rect.x < 0 or rect.y < 0 or rect.x + rect.w > w or rect.y + rect.h > h:
        return False
    if not room[rect.pixels()].all():
        return False
    # Keep the entrance clearance zone free.
    if (rect.x - clearance <= ex <= rect.x + rect.w - 1 + clearance
            and rect.y - clearance <= ey <= rect.y + rect.h - 1 + clearance):
        return False
    return True


def candidate_rects(fp: RasterFloorplan, room_id: int, kind: FurnitureKind,
                    policy: PlacementPolicy,
                    entrance: tuple[int, int] | None = None) -> list[Rect]:
    """All rule-allowed, collision-free rects for one room, deduplicated."""
    room = fp.room_mask(room_id)
    ex, ey = entrance if entrance is not None else detect_room_entrance(fp, room_id)
    bbox = room_bbox(room)
    x0, y0, x1, y1 = bbox
    bw, bh = x1 - x0, y1 - y0
    area = int(room.sum())
    side = _entrance_side(bbox, ex, ey)
    opp = _OPPOSITE[side]

    if kind is FurnitureKind.BED:
        max_along = (bw if opp in ("N", "S") else bh) - 2
        max_depth = (bh if opp in ("N", "S") else bw) - 6
        along, depth = _sized(policy.bed_area_fraction, (4, 3), area, max_along, max_depth)
        cands = _flush_candidates(bbox, opp, along, depth)
    elif kind is FurnitureKind.DESK:
        max_along = (bw if opp in ("N", "S") else bh) - 2
        max_depth = (bh if opp in ("N", "S") else bw) - 6
        along, depth = _sized(policy.desk_area_fraction, (2, 1), area, max_along, max_depth)
        cands = _flush_candidates(bbox, opp, along, depth)
        # Beside the entrance: same wall as the opening, offset from it.
        max_along_e = (bw if side in ("N", "S") else bh) - 2
        along_e = min(along, max_along_e)
        cands += _beside_entrance_candidates(bbox, side, ex, ey, along_e, depth,
                                             policy.desk_entrance_offset)
    elif kind is FurnitureKind.TOILET:
        along, depth = policy.toilet_size
        cands = _flush_candidates(bbox, opp, along, depth)
    elif kind is FurnitureKind.STOVE:
        along = (bw if opp in ("N", "S") else bh)  # full wall length
        cands = _flush_candidates(bbox, opp, along, policy.stove_depth)
    elif kind is FurnitureKind.WASHING_MACHINE:
        along, depth = policy.washing_machine_size
        cands = []
        for s in ("N", "S", "W", "E"):
            cands += _flush_candidates(bbox, s, along, depth)
    else:
        raise ValueError(kind)

    seen, out = set(), []
    for r in cands:
        if r not in seen and _legal(r, room, ex, ey, policy.clearance):
            seen.add(r)
            out.append(r)
    return out


def place_primary_furniture(fp: RasterFloorplan, policy: PlacementPolicy | None = None,
                            seed: int = 0, on_error: str = "raise") -> list[FurnitureInstance]:
    """One furniture piece per non-living room, chosen uniformly by seed.

    on_error="skip" drops unfurnishable rooms instead of raising; useful for
    provisional layouts whose rooms may be clipped.
    """
    policy = policy or PlacementPolicy()
    rng = random.Random(seed)
    placed: list[FurnitureInstance] = []
    for room_id in fp.room_ids_present():
        cat = fp.room_category(room_id)
        kind = KIND_FOR_CATEGORY.get(cat)
        if kind is None:
            continue
        try:
            entrance = detect_room_entrance(fp, room_id)
            cands = candidate_rects(fp, room_id, kind, policy, entrance)
            if not cands:
                raise RoomTooSmall(f"no legal {kind.value} rect in room {room_id}")
        except (NoRoomEntrance, RoomTooSmall):
            if on_error == "skip":
                continue
            raise
        rect = rng.choice(cands)
        placed.append(FurnitureInstance(kind=kind, rect=rect,
                                        room_id=room_id, entrance=entrance))
    return placed


def shared_wall_pixels(fp: RasterFloorplan, room_id: int,
                       other: np.ndarray, reach: int = 3) -> list[tuple[int, int]]:
    """Wall pixels with the room on one axis side and `other` on the opposite.

    `reach` accommodates wall bands thicker than one pixel.
    """
    room = fp.room_mask(room_id)
    wall = fp.category == RoomLabel.WALL
    door = fp.category == RoomLabel.INTERIOR_DOOR
    band = wall | door  # door pixels sit in the wall band
    h, w = band.shape
    out = []
    ys, xs = np.nonzero(band)
    for y, x in zip(ys, xs):
        for dy, dx in ((0, 1), (1, 0)):
            a = b = False
            for k in range(1, reach + 1):
                ya, xa = y - dy * k, x - dx * k
                yb, xb = y + dy * k, x + dx * k
                if 0 <= ya < h and 0 <= xa < w and room[ya, xa]:
                    a = True
                if 0 <= yb < h and 0 <= xb < w and other[yb, xb]:
                    b = True
            if a and b:
                out.append((x, y))
                break
            a2 = b2 = False
            for k in range(1, reach + 1):
                ya, xa = y - dy * k, x - dx * k
                yb, xb = y + dy * k, x + dx * k
                if 0 <= ya < h and 0 <= xa < w and other[ya, xa]:
                    a2 = True
                if 0 <= yb < h and 0 <= xb < w and room[yb, xb]:
                    b2 = True
            if a2 and b2:
                out.append((x, y))
                break
    return out


def _rect_distance(x: int, y: int, rect: Rect) -> float:
    dx = max(rect.x - x, 0, x - (rect.x + rect.w - 1))
    dy = max(rect.y - y, 0, y - (rect.y + rect.h - 1))
    return float(np.hypot(dx, dy))


def synthesize_room_entrance(room_id: int, fp: RasterFloorplan,
                             furniture_rect: Rect) -> tuple[int, int]:
    """Entrance pixel on a wall shared with the living region, placed to
    maximize straight-line clearance to the furniture; ties break on the
    lowest (y, x) pixel."""
    living = fp.category == RoomLabel.LIVING
    shared = shared_wall_pixels(fp, room_id, living)
    if not shared:
        raise NoSharedWall(f"room {room_id} shares no wall with the living region")
    best = max(shared, key=lambda p: (_rect_distance(p[0], p[1], furniture_rect),
                                      (-p[1], -p[0])))
    return best
