"""Raster-to-vector conversion: adaptive-threshold wall extraction,
morphological regularization into axis-aligned segments, room polygon
assignment, activity-guided door placement, and the three-condition
success verdict.

Interior door openings (and noise) interrupt wall runs, so regularization
bridges small collinear gaps; doors are then re-placed from the activity
map, which is also where they come from in the full pipeline.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .actsim import ActivityMap
from .core import ROOM_CODES, RoomLabel
from .errors import AmbiguousRoom, NoClosedRegion, NoLivingRoom

ADAPTIVE_WINDOW = 15
ADAPTIVE_OFFSET = 2.0 / 255.0
MIN_SEGMENT = 6
GAP_TOL = 8           # collinear gaps up to a door opening get bridged
DOMINANCE = 0.80
DOOR_WIDTH = 8


@dataclass(frozen=True)
class Segment:
    """Axis-aligned wall segment between two grid points (x0,y0)-(x1,y1)."""

    x0: int
    y0: int
    x1: int
    y1: int

    @property
    def horizontal(self) -> bool:
        return self.y0 == self.y1

    @property
    def length(self) -> int:
        return abs(self.x1 - self.x0) + abs(self.y1 - self.y0)

    def as_list(self) -> list[int]:
        return [self.x0, self.y0, self.x1, self.y1]


@dataclass(frozen=True)
class Door:
    room_index: int
    position: tuple[int, int]  # (x, y)
    width: int = DOOR_WIDTH

    def to_json(self) -> dict:
        return {"room_index": self.room_index,
                "position": [self.position[0], self.position[1]],
                "width": self.width}


@dataclass
class Room:
    type: int                       # RoomLabel room code
    polygon: list[tuple[int, int]]  # closed rectilinear ring, (x, y)

    def to_json(self) -> dict:
        return {"type": self.type, "polygon": [[x, y] for x, y in self.polygon]}


@dataclass
class VectorFloorplan:
    rooms: list[Room] = field(default_factory=list)
    walls: list[Segment] = field(default_factory=list)
    doors: list[Door] = field(default_factory=list)
    main_entrance: Segment | None = None


@dataclass(frozen=True)
class SuccessReport:
    ok: bool
    failed_conditions: frozenset

    @staticmethod
    def from_failures(failed) -> "SuccessReport":
        f = frozenset(failed)
        return SuccessReport(ok=not f, failed_conditions=f)

    def to_json(self) -> dict:
        return {"ok": self.ok, "failed_conditions": sorted(self.failed_conditions)}


CLOSED_ROOMS = "ClosedRooms"
BALANCED_TYPES = "BalancedTypes"
LIVING_CONNECTIVITY = "LivingConnectivity"


# ---------------------------------------------------------------------------
# Wall extraction
# ---------------------------------------------------------------------------

def extract_walls(category: np.ndarray, window: int = ADAPTIVE_WINDOW,
                  offset: float = ADAPTIVE_OFFSET) -> np.ndarray:
    """Adaptive threshold over a wall-intensity rendering of the labels."""
    intensity = (np.asarray(category) == int(RoomLabel.WALL)).astype(np.float64)
    local_mean = ndimage.uniform_filter(intensity, size=window, mode="nearest")
    return (intensity > local_mean + offset).astype(np.uint8)


# ---------------------------------------------------------------------------
# Regularization into segments
# ---------------------------------------------------------------------------

def _runs(row: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of true pixels as (start, stop) half-open intervals."""
    idx = np.nonzero(row)[0]
    if len(idx) == 0:
        return []
    out = []
    start = prev = idx[0]
    for i in idx[1:]:
        if i != prev + 1:
            out.append((int(start), int(prev) + 1))
            start = i
        prev = i
    out.append((int(start), int(prev) + 1))
    return out


def _group_runs(runs_by_line: list[list[tuple[int, int]]],
                min_len: int) -> list[tuple[int, int, int]]:
    """Merge overlapping runs from adjacent scanlines into (line, start, stop).

    A thick straight wall spans several adjacent scanlines; the merged
    segment sits on their rounded mean line.
    """
    groups: list[dict] = []  # {lines:[], start, stop, last_line}
    for line, runs in enumerate(runs_by_line):
        for (a, b) in runs:
            if b - a < min_len:
                continue
            merged = None
            for g in groups:
                if g["last_line"] >= line - 1 and a < g["stop"] and b > g["start"]:
                    g["lines"].append(line)
                    g["start"] = min(g["start"], a)
                    g["stop"] = max(g["stop"], b)
                    g["last_line"] = line
                    merged = g
                    break
            if merged is None:
                groups.append({"lines": [line], "start": a, "stop": b,
                               "last_line": line})
    out = []
    for g in groups:
        center = int(round(float(np.mean(g["lines"]))))
        out.append((center, g["start"], g["stop"]))
    return out


def _bridge_collinear(segs: list[tuple[int, int, int]],
                      gap_tol: int) -> list[tuple[int, int, int]]:
    """Merge collinear (line, start, stop) triples separated by small gaps."""
    segs = sorted(segs)
    out: list[list[int]] = []
    for line, a, b in segs:
        if out and abs(out[-1][0] - line) <= 1 and a - out[-1][2] <= gap_tol:
            out[-1][2] = max(out[-1][2], b)
            out[-1][1] = min(out[-1][1], a)
        else:
            out.append([line, a, b])
    return [tuple(s) for s in out]


def regularize_walls(mask: np.ndarray, min_len: int = MIN_SEGMENT,
                     gap_tol: int = GAP_TOL) -> list[Segment]:
    """Morphological closing, then snap runs to straight axis-aligned
    segments that form closing boxes."""
    m = ndimage.binary_closing(np.asarray(mask) > 0, structure=np.ones((3, 3)))

    h_runs = [_runs(m[y]) for y in range(m.shape[0])]
    v_runs = [_runs(m[:, x]) for x in range(m.shape[1])]
    horiz = _bridge_collinear(_group_runs(h_runs, min_len), gap_tol)
    vert = _bridge_collinear(_group_runs(v_runs, min_len), gap_tol)

    segments = [Segment(x0=a, y0=y, x1=b - 1, y1=y) for y, a, b in horiz]
    segments += [Segment(x0=x, y0=a, x1=x, y1=b - 1) for x, a, b in vert]

    if not _has_enclosed_region(segments, m.shape):
        raise NoClosedRegion("segments enclose no region")
    return segments


def draw_segments(segments: list[Segment], shape: tuple[int, int]) -> np.ndarray:
    canvas = np.zeros(shape, dtype=bool)
    for s in segments:
        x0, x1 = sorted((s.x0, s.x1))
        y0, y1 = sorted((s.y0, s.y1))
        canvas[y0:y1 + 1, x0:x1 + 1] = True
    return canvas


def _enclosed_regions(segments: list[Segment], shape) -> tuple[np.ndarray, list[int]]:
    wall = draw_segments(segments, shape)
    labels, n = ndimage.label(~wall, structure=np.array([[0, 1, 0],
                                                         [1, 1, 1],
                                                         [0, 1, 0]]))
    border = set(labels[0, :]) | set(labels[-1, :]) | set(labels[:, 0]) | set(labels[:, -1])
    keep = [i for i in range(1, n + 1) if i not in border]
    return labels, keep


def _has_enclosed_region(segments: list[Segment], shape) -> bool:
    if not segments:
        return False
    _, keep = _enclosed_regions(segments, shape)
    return len(keep) > 0


# ---------------------------------------------------------------------------
# Room assignment
# ---------------------------------------------------------------------------

def trace_polygon(region: np.ndarray) -> list[tuple[int, int]]:
    """Outer rectilinear ring of a 4-connected pixel region, on grid corners.

    Edges are collected from pixel sides facing non-region pixels and chained
    counterclockwise (region kept on the left); collinear points dropped.
    """
    pad = np.pad(region, 1)
    edges: dict[tuple[int, int], tuple[int, int]] = {}
    ys, xs = np.nonzero(region)
    for y, x in zip(ys.tolist(), xs.tolist()):
        if not pad[y, x + 1]:       # north side
            edges[(x, y)] = (x + 1, y)
        if not pad[y + 1, x + 2]:   # east side
            edges[(x + 1, y)] = (x + 1, y + 1)
        if not pad[y + 2, x + 1]:   # south side
            edges[(x + 1, y + 1)] = (x, y + 1)
        if not pad[y + 1, x]:       # west side
            edges[(x, y + 1)] = (x, y)
    if not edges:
        return []
    start = min(edges)
    ring = [start]
    cur = edges.pop(start)
    while cur != start:
        ring.append(cur)
        cur = edges.pop(cur)
    ring.append(start)
    # Drop collinear intermediate points (ring[:-1] holds distinct corners).
    out = []
    pts = ring[:-1]
    n = len(pts)
    for i in range(n):
        px, py = pts[i - 1]
        cx, cy = pts[i]
        nx, ny = pts[(i + 1) % n]
        if (px == cx == nx) or (py == cy == ny):
            continue
        out.append(ring[i])
    out.append(out[0])
    return out


def polygon_area(polygon: list[tuple[int, int]]) -> float:
    pts = polygon if polygon[0] != polygon[-1] else polygon[:-1]
    x = np.array([p[0] for p in pts], dtype=np.float64)
    y = np.array([p[1] for p in pts], dtype=np.float64)
    return float(abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))) / 2.0)


def polygon_mask(polygon: list[tuple[int, int]], shape) -> np.ndarray:
    """Pixels inside a rectilinear grid-corner ring (even-odd on centers)."""
    mask = np.zeros(shape, dtype=bool)
    pts = polygon if polygon[0] != polygon[-1] else polygon[:-1]
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    n = len(pts)
    for y in range(y0, y1):
        cy = y + 0.5
        crossings = []
        for i in range(n):
            ax, ay = pts[i]
            bx, by = pts[(i + 1) % n]
            if ax == bx and min(ay, by) <= cy < max(ay, by):
                crossings.append(ax)
        crossings.sort()
        for a, b in zip(crossings[::2], crossings[1::2]):
            mask[y, a:b] = True
    return mask


def assign_rooms(segments: list[Segment], category: np.ndarray,
                 dominance: float = DOMINANCE) -> list[Room]:
    """Label every enclosed region with its dominant room category."""
    labels, keep = _enclosed_regions(segments, category.shape)
    if not keep:
        raise NoClosedRegion("segments enclose no region")
    rooms = []
    for ri in keep:
        region = labels == ri
        vals = category[region]
        total = vals.size
        counts = [(int((vals == c).sum()), c) for c in ROOM_CODES]
        best_count, best_code = max(counts)
        if (vals == int(RoomLabel.OUTSIDE)).sum() > total / 2:
            continue  # enclosed exterior pocket, not a room
        if best_count < dominance * total:
            raise AmbiguousRoom(
                f"region {ri}: dominant category covers {best_count}/{total}")
        rooms.append(Room(type=best_code, polygon=trace_polygon(region)))
    return rooms


# ---------------------------------------------------------------------------
# Door placement
# ---------------------------------------------------------------------------

def place_doors(rooms: list[Room], activity: ActivityMap,
                entrance: Segment | None = None) -> list[Door]:
    """Door per non-living room at the wall pixel nearest the room's
    activity peak, preferring walls shared with the living region."""
    shape = activity.density.shape
    masks = [polygon_mask(r.polygon, shape) for r in rooms]
    living_idx = [i for i, r in enumerate(rooms) if r.type == int(RoomLabel.LIVING)]
    if not living_idx:
        raise NoLivingRoom("no living room among the typed regions")
    living_mask = np.zeros(shape, dtype=bool)
    for i in living_idx:
        living_mask |= masks[i]

    struct = ndimage.generate_binary_structure(2, 1)
    living_dil = ndimage.binary_dilation(living_mask, struct, iterations=3)

    doors = []
    for i, room in enumerate(rooms):
        if room.type == int(RoomLabel.LIVING):
            continue
        mask = masks[i]
        dens = np.where(mask, activity.density, -1.0)
        flat = int(np.argmax(dens))
        py, px = np.unravel_index(flat, shape)

        room_dil = ndimage.binary_dilation(mask, struct, iterations=3)
        shared = room_dil & living_dil & ~mask & ~living_mask
        if not shared.any():
            shared = ndimage.binary_dilation(mask, struct) & ~mask
        ys, xs = np.nonzero(shared)
        d2 = (ys - py) ** 2 + (xs - px) ** 2
        order = np.lexsort((xs, ys, d2))  # distance, then lowest (y, x)
        k = order[0]
        doors.append(Door(room_index=i, position=(int(xs[k]), int(ys[k]))))
    return doors


# ---------------------------------------------------------------------------
# Success verdict
# ---------------------------------------------------------------------------

def _polygon_closed(polygon: list[tuple[int, int]]) -> bool:
    if len(polygon) < 5 or polygon[0] != polygon[-1]:
        return False
    for (ax, ay), (bx, by) in zip(polygon, polygon[1:]):
        if ax != bx and ay != by:
            return False
    return polygon_area(polygon) > 0


def check_success(vf: VectorFloorplan, shape: tuple[int, int] = (256, 256)) -> SuccessReport:
    """Evaluate the three vectorization-success conditions."""
    failed = set()

    if not vf.rooms or not all(
            _polygon_closed(r.polygon) and r.type in ROOM_CODES for r in vf.rooms):
        failed.add(CLOSED_ROOMS)

    types = [r.type for r in vf.rooms]
    if types.count(int(RoomLabel.LIVING)) < 1 or types.count(int(RoomLabel.MASTER)) < 1:
        failed.add(BALANCED_TYPES)

    living_mask = np.zeros(shape, dtype=bool)
    for r in vf.rooms:
        if r.type == int(RoomLabel.LIVING):
            living_mask |= polygon_mask(r.polygon, shape)
    struct = ndimage.generate_binary_structure(2, 1)
    living_near = ndimage.binary_dilation(living_mask, struct, iterations=4)

    def touches_living(x, y):
        return (0 <= y < shape[0] and 0 <= x < shape[1] and living_near[y, x])

    exempt = {int(RoomLabel.BATHROOM), int(RoomLabel.BALCONY)}
    if living_mask.any():
        for door in vf.doors:
            rtype = vf.rooms[door.room_index].type
            if rtype in exempt:
                continue
            if not touches_living(*door.position):
                failed.add(LIVING_CONNECTIVITY)
        if vf.main_entrance is not None:
            s = vf.main_entrance
            mx, my = (s.x0 + s.x1) // 2, (s.y0 + s.y1) // 2
            if not touches_living(mx, my):
                failed.add(LIVING_CONNECTIVITY)
        else:
            failed.add(LIVING_CONNECTIVITY)
    else:
        failed.add(LIVING_CONNECTIVITY)

    return SuccessReport.from_failures(failed)


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------

ROOM_FILLS = {
    int(RoomLabel.LIVING): "#f5e4c3",
    int(RoomLabel.MASTER): "#c9a66b",
    int(RoomLabel.SECOND): "#9dbbd8",
    int(RoomLabel.STUDY): "#a8d8c9",
    int(RoomLabel.BATHROOM): "#cfc3e8",
    int(RoomLabel.KITCHEN): "#e8b4b8",
    int(RoomLabel.BALCONY): "#d4e8a8",
    int(RoomLabel.OTHER_ROOM): "#dddddd",
}


def export_svg(vf: VectorFloorplan, size: tuple[int, int] = (256, 256)) -> str:
    w, h = size
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" '
             f'viewBox="0 0 {w} {h}">']
    for room in vf.rooms:
        pts = room.polygon
        d = "M " + " L ".join(f"{x},{y}" for x, y in pts[:-1]) + " Z"
        fill = ROOM_FILLS.get(room.type, "#ffffff")
        parts.append(f'<path class="room" d="{d}" fill="{fill}" '
                     f'stroke="none" data-type="{room.type}"/>')
    for s in vf.walls:
        parts.append(f'<line class="wall" x1="{s.x0}" y1="{s.y0}" '
                     f'x2="{s.x1}" y2="{s.y1}" stroke="#222222" stroke-width="2"/>')
    for door in vf.doors:
        x, y = door.position
        r = door.width / 2
        parts.append(f'<path class="door" d="M {x - r},{y} A {r} {r} 0 0 1 '
                     f'{x + r},{y}" fill="none" stroke="#884422"/>')
    if vf.main_entrance is not None:
        s = vf.main_entrance
        parts.append(f'<line class="entrance" x1="{s.x0}" y1="{s.y0}" '
                     f'x2="{s.x1}" y2="{s.y1}" stroke="#cc2222" stroke-width="3"/>')
    parts.append("</svg>")
    return "\n".join(parts)


def export_json(vf: VectorFloorplan) -> str:
    doc = {
        "rooms": [r.to_json() for r in vf.rooms],
        "walls": [s.as_list() for s in vf.walls],
        "doors": [d.to_json() for d in vf.doors],
        "main_entrance": vf.main_entrance.as_list() if vf.main_entrance else None,
    }
    return json.dumps(doc, indent=1, sort_keys=True)


def parse_json(text: str) -> VectorFloorplan:
    doc = json.loads(text)
    return VectorFloorplan(
        rooms=[Room(type=int(r["type"]),
                    polygon=[(int(x), int(y)) for x, y in r["polygon"]])
               for r in doc["rooms"]],
        walls=[Segment(*s) for s in doc["walls"]],
        doors=[Door(room_index=int(d["room_index"]),
                    position=(int(d["position"][0]), int(d["position"][1])),
                    width=int(d["width"]))
               for d in doc["doors"]],
        main_entrance=Segment(*doc["main_entrance"]) if doc["main_entrance"] else None,
    )


# ---------------------------------------------------------------------------
# End-to-end pipeline
# ---------------------------------------------------------------------------

def entrance_segment_from_mask(entrance: np.ndarray) -> Segment | None:
    ys, xs = np.nonzero(np.asarray(entrance) > 0)
    if len(ys) == 0:
        return None
    return Segment(x0=int(xs.min()), y0=int(ys.min()),
                   x1=int(xs.max()), y1=int(ys.max()))


def vectorize_floorplan(category: np.ndarray, activity: ActivityMap,
                        entrance: np.ndarray | None = None) -> VectorFloorplan:
    """extract -> regularize -> assign -> place_doors, assembled."""
    mask = extract_walls(category)
    segments = regularize_walls(mask)
    rooms = assign_rooms(segments, category)
    if entrance is None:
        entrance = np.asarray(category) == int(RoomLabel.MAIN_ENTRANCE)
    ent = entrance_segment_from_mask(entrance)
    doors = place_doors(rooms, activity, ent)
    return VectorFloorplan(rooms=rooms, walls=segments, doors=doors,
                           main_entrance=ent)
