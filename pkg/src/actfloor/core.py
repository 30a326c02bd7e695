"""Raster floorplan data model, label encoding, file I/O and boundary extraction.

A floorplan is a four-channel 256x256 raster: an inside mask, a boundary
mask (exterior wall outline plus the main-entrance marking), a room-category
label image, and a room-IDs image.  Channels are stored as individual 8-bit
grayscale PNGs referenced from a small JSON manifest, which keeps round-trips
bit-exact and the files inspectable with any image viewer.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from enum import IntEnum
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import IllegalLabel, IoFailure, MissingChannel, NoEntrance, SizeMismatch

SIZE = 256


class RoomLabel(IntEnum):
    """Category codes for the label channel.

    Codes 0..7 are room categories; 100+ are structural.
    """

    LIVING = 0
    MASTER = 1
    SECOND = 2
    STUDY = 3
    BATHROOM = 4
    KITCHEN = 5
    BALCONY = 6
    OTHER_ROOM = 7
    WALL = 100
    INTERIOR_DOOR = 120
    MAIN_ENTRANCE = 140
    OUTSIDE = 255


ROOM_CODES = tuple(range(8))
ALL_CODES = frozenset(int(v) for v in RoomLabel)

# Labels a resident can stand on (everything inside except wall pixels).
WALKABLE_CODES = ALL_CODES - {int(RoomLabel.WALL), int(RoomLabel.OUTSIDE)}

CHANNEL_NAMES = ("inside", "boundary", "category", "room_ids")


@dataclass(frozen=True)
class RasterFloorplan:
    """Four aligned 256x256 channels; immutable after construction."""

    inside: np.ndarray    # uint8, 0/1
    boundary: np.ndarray  # uint8, 0/1
    category: np.ndarray  # uint8, RoomLabel codes
    room_ids: np.ndarray  # uint8, 0 = not a room interior

    def __post_init__(self):
        shapes = {c.shape for c in self.channels()}
        if len(shapes) != 1:
            raise SizeMismatch(f"channel shapes differ: {shapes}")
        bad = set(np.unique(self.category)) - ALL_CODES
        if bad:
            raise IllegalLabel(f"unknown category codes: {sorted(bad)}")
        outside = self.category == RoomLabel.OUTSIDE
        if not np.array_equal(outside, self.inside == 0):
            raise IllegalLabel("category==OUTSIDE must coincide with inside==0")
        for c in self.channels():
            c.setflags(write=False)

    def channels(self) -> tuple[np.ndarray, ...]:
        return (self.inside, self.boundary, self.category, self.room_ids)

    def __eq__(self, other) -> bool:
        if not isinstance(other, RasterFloorplan):
            return NotImplemented
        return all(np.array_equal(a, b) for a, b in zip(self.channels(), other.channels()))

    def room_mask(self, room_id: int) -> np.ndarray:
        return self.room_ids == room_id

    def room_category(self, room_id: int) -> int:
        """Dominant category label of the given room region."""
        cats = self.category[self.room_mask(room_id)]
        vals, counts = np.unique(cats, return_counts=True)
        return int(vals[np.argmax(counts)])

    def room_ids_present(self) -> list[int]:
        ids = np.unique(self.room_ids)
        return [int(i) for i in ids if i > 0]


@dataclass(frozen=True)
class BoundaryImage:
    """Exterior outline of a footprint plus the main-entrance pixels."""

    inside: np.ndarray    # uint8, 0/1
    boundary: np.ndarray  # uint8, 0/1 ring
    entrance: np.ndarray  # uint8, 0/1, subset of boundary

    def __post_init__(self):
        if self.inside.shape != self.boundary.shape or self.inside.shape != self.entrance.shape:
            raise SizeMismatch("boundary channels must share dimensions")
        for c in (self.inside, self.boundary, self.entrance):
            c.setflags(write=False)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BoundaryImage):
            return NotImplemented
        return (np.array_equal(self.inside, other.inside)
                and np.array_equal(self.boundary, other.boundary)
                and np.array_equal(self.entrance, other.entrance))


def _read_channel(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("L"), dtype=np.uint8)
    except FileNotFoundError:
        raise MissingChannel(str(path))
    except OSError as e:
        raise IoFailure(str(e))


def load_floorplan(path: str | Path) -> RasterFloorplan:
    """Load a floorplan from a manifest file or a directory containing one."""
    path = Path(path)
    manifest_path = path / "manifest.json" if path.is_dir() else path
    try:
        manifest = json.loads(manifest_path.read_text())
    except FileNotFoundError:
        raise MissingChannel(f"no manifest at {manifest_path}")
    except (OSError, json.JSONDecodeError) as e:
        raise IoFailure(str(e))

    base = manifest_path.parent
    arrays = {}
    for name in CHANNEL_NAMES:
        if name not in manifest:
            raise MissingChannel(name)
        arrays[name] = _read_channel(base / manifest[name])
    shapes = {a.shape for a in arrays.values()}
    if len(shapes) != 1:
        raise SizeMismatch(f"channel sizes differ: {shapes}")
    return RasterFloorplan(**arrays)


def save_floorplan(fp: RasterFloorplan, path: str | Path, plan_id: str | None = None) -> Path:
    """Write the four channel PNGs and a manifest; returns the manifest path."""
    path = Path(path)
    try:
        path.mkdir(parents=True, exist_ok=True)
        manifest = {"id": plan_id or path.name}
        for name, arr in zip(CHANNEL_NAMES, fp.channels()):
            fname = f"_{name}.png" if plan_id is None else f"{plan_id}_{name}.png"
            Image.fromarray(np.asarray(arr, dtype=np.uint8)).save(path / fname)
            manifest[name] = fname
        out = path / "manifest.json"
        out.write_text(json.dumps(manifest, sort_keys=True, indent=1))
        return out
    except OSError as e:
        raise IoFailure(str(e))


def inner_outline(inside: np.ndarray) -> np.ndarray:
    """Inside pixels 4-adjacent to a non-inside pixel (or the image border)."""
    m = inside > 0
    padded = np.pad(m, 1, constant_values=False)
    neighbors_all_inside = (
        padded[:-2, 1:-1] & padded[2:, 1:-1] & padded[1:-1, :-2] & padded[1:-1, 2:]
    )
    return (m & ~neighbors_all_inside).astype(np.uint8)


def extract_boundary(fp: RasterFloorplan) -> BoundaryImage:
    """Deterministic boundary extraction from the inside/entrance channels.

    Depends only on the inside mask and the MAIN_ENTRANCE labels; interior
    room labels never change the result.
    """
    entrance_all = (fp.category == RoomLabel.MAIN_ENTRANCE)
    if not entrance_all.any():
        raise NoEntrance("floorplan has no MAIN_ENTRANCE pixel")
    ring = inner_outline(fp.inside)
    entrance = (entrance_all & (ring > 0)).astype(np.uint8)
    if not entrance.any():
        # Entrance marked only on interior wall layers; project to the ring.
        ys, xs = np.nonzero(entrance_all)
        ry, rx = np.nonzero(ring)
        ent = np.zeros_like(ring)
        for y, x in zip(ys, xs):
            k = np.argmin((ry - y) ** 2 + (rx - x) ** 2)
            ent[ry[k], rx[k]] = 1
        entrance = ent
    return BoundaryImage(inside=(fp.inside > 0).astype(np.uint8),
                         boundary=ring, entrance=entrance)


def split_dataset(manifests: list, seed: int) -> tuple[list, list, list]:
    """Deterministic 30:1:1 train/val/test split; remainder goes to train."""
    if not manifests:
        raise ValueError("empty manifest list")
    items = list(manifests)
    random.Random(seed).shuffle(items)
    n = len(items)
    n_val = n // 32
    n_test = n // 32
    n_train = n - n_val - n_test
    return (items[:n_train],
            items[n_train:n_train + n_val],
            items[n_train + n_val:])
