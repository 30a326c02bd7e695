import numpy as np
import pytest

from actfloor import furnish, procgen
from actfloor.core import RoomLabel
from actfloor.errors import NoRoomEntrance, RoomTooSmall
from actfloor.furnish import (FurnitureKind, PlacementPolicy, Rect,
                              candidate_rects, detect_room_entrance,
                              place_primary_furniture)


class TestRect:
    def test_pixels_slices(self):
        r = Rect(2, 3, 4, 5)
        grid = np.zeros((20, 20), dtype=bool)
        grid[r.pixels()] = True
        assert grid.sum() == 20
        assert grid[3:8, 2:6].all()

    def test_contains(self):
        r = Rect(2, 3, 4, 5)
        assert r.contains(2, 3) and r.contains(5, 7)
        assert not r.contains(6, 3) and not r.contains(2, 8)


class TestPlacement:
    def test_deterministic(self, plans):
        fp = plans[0]
        assert place_primary_furniture(fp, seed=9) == place_primary_furniture(fp, seed=9)

    def test_rects_inside_their_room(self, furnished):
        for fp, furniture, _ in furnished:
            for f in furniture:
                room = fp.room_mask(f.room_id)
                assert room[f.rect.pixels()].all()

    def test_kind_matches_room_category(self, furnished):
        for fp, furniture, _ in furnished:
            for f in furniture:
                cat = fp.room_category(f.room_id)
                assert furnish.KIND_FOR_CATEGORY[cat] == f.kind

    def test_bed_sizing_rule(self, furnished):
        # ~30% of room area at 4:3, up to rounding and room-size clamping.
        policy = PlacementPolicy()
        for fp, furniture, _ in furnished:
            for f in furniture:
                if f.kind is not FurnitureKind.BED:
                    continue
                area = int(fp.room_mask(f.room_id).sum())
                frac = f.rect.w * f.rect.h / area
                assert 0.15 <= frac <= policy.bed_area_fraction + 0.08

    def test_toilet_fixed_size(self, furnished):
        for _, furniture, _ in furnished:
            for f in furniture:
                if f.kind is FurnitureKind.TOILET:
                    assert sorted((f.rect.w, f.rect.h)) == [8, 12]

    def test_stove_full_wall(self, furnished):
        for fp, furniture, _ in furnished:
            for f in furniture:
                if f.kind is not FurnitureKind.STOVE:
                    continue
                room = fp.room_mask(f.room_id)
                x0, y0, x1, y1 = furnish.room_bbox(room)
                assert (f.rect.w, f.rect.h) in (
                    (x1 - x0, 8), (8, y1 - y0))

    def test_seed_sweep_covers_candidates(self, plans):
        # Re-seeding must reach every legal candidate for a room.
        fp = plans[0]
        policy = PlacementPolicy()
        rid = next(r for r in fp.room_ids_present()
                   if fp.room_category(r) == int(RoomLabel.MASTER))
        cands = set(candidate_rects(fp, rid, FurnitureKind.BED, policy))
        seen = set()
        for seed in range(300):
            for f in place_primary_furniture(fp, policy, seed=seed):
                if f.room_id == rid:
                    seen.add(f.rect)
        assert seen == cands

    def test_entrance_clearance(self, furnished):
        # The rule keeps the entrance pixel (with clearance 1) uncovered.
        for fp, furniture, _ in furnished:
            for f in furniture:
                ex, ey = f.entrance
                assert not f.rect.contains(ex, ey)

    def test_no_room_entrance_raises(self):
        fp = procgen.generate_floorplan(seed=0)
        cat = np.array(fp.category)
        cat[cat == int(RoomLabel.INTERIOR_DOOR)] = int(RoomLabel.WALL)
        from actfloor.core import RasterFloorplan
        sealed = RasterFloorplan(inside=fp.inside, boundary=fp.boundary,
                                 category=cat, room_ids=fp.room_ids)
        with pytest.raises(NoRoomEntrance):
            place_primary_furniture(sealed, seed=0)
        assert place_primary_furniture(sealed, seed=0, on_error="skip") == []

    def test_room_too_small_raises(self):
        # A 3x3 master bedroom cannot host even the minimum 4x3 bed.
        from actfloor.core import RasterFloorplan, inner_outline
        size = 32
        inside = np.zeros((size, size), dtype=np.uint8)
        inside[2:-2, 2:-2] = 1
        cat = np.full((size, size), int(RoomLabel.OUTSIDE), dtype=np.uint8)
        cat[2:-2, 2:-2] = int(RoomLabel.LIVING)
        cat[4:7, 4:7] = int(RoomLabel.MASTER)
        cat[4:7, 7] = int(RoomLabel.WALL)
        cat[5, 7] = int(RoomLabel.INTERIOR_DOOR)
        cat[16, 2] = int(RoomLabel.MAIN_ENTRANCE)
        rids = np.zeros_like(cat)
        rids[4:7, 4:7] = 1
        fp = RasterFloorplan(inside=inside, boundary=inner_outline(inside),
                             category=cat, room_ids=rids)
        with pytest.raises(RoomTooSmall):
            place_primary_furniture(fp, seed=0)


class TestSerialization:
    def test_round_trip(self, furnished):
        _, furniture, _ = furnished[0]
        text = furnish.serialize_furniture(furniture)
        assert furnish.parse_furniture(text) == furniture

    def test_json_shape(self, furnished):
        _, furniture, _ = furnished[0]
        d = furniture[0].to_json()
        assert set(d) == {"kind", "rect", "room_id", "entrance"}
        assert len(d["rect"]) == 4


class TestEntranceDetection:
    def test_entrance_adjacent_to_room(self, plans):
        for fp in plans:
            for rid in fp.room_ids_present():
                if furnish.KIND_FOR_CATEGORY.get(fp.room_category(rid)) is None:
                    continue
                ex, ey = detect_room_entrance(fp, rid)
                assert fp.category[ey, ex] in (int(RoomLabel.INTERIOR_DOOR),
                                               int(RoomLabel.WALL))

    def test_synthesized_entrance_on_shared_wall(self, plans):
        fp = plans[0]
        rid = next(r for r in fp.room_ids_present()
                   if fp.room_category(r) == int(RoomLabel.MASTER))
        rect = next(f for f in place_primary_furniture(fp, seed=0)
                    if f.room_id == rid).rect
        x, y = furnish.synthesize_room_entrance(rid, fp, rect)
        assert fp.category[y, x] in (int(RoomLabel.WALL),
                                     int(RoomLabel.INTERIOR_DOOR))
