"""Session-oriented HTTP service for the interactive designer.

Versioned under /v1.  Sessions are in-memory; requests to the same session
are serialized through a per-session lock while different sessions proceed
in parallel.  The dataset index is read-shared across sessions.
"""

from __future__ import annotations

import base64
import io
import json
import os
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Query, Request
from fastapi.responses import JSONResponse
from PIL import Image

from . import actsim, furnish, genlab, vectorize
from .actsim import ActivityMap, BiRrtParams
from .core import RasterFloorplan, RoomLabel, load_floorplan
from .errors import ActfloorError
from .furnish import FurnitureInstance, FurnitureKind, Rect
from .genlab import DatasetIndex, GeneratorInput, RetrievalGenerator

ENV_DATASET = "ACTFLOOR_DATASET"

MODE_AUTO = "Auto"
MODE_MANUAL = "Manual"


@dataclass
class Session:
    id: str
    boundary_inside: np.ndarray
    boundary_ring: np.ndarray
    entrance: np.ndarray
    mode: str = MODE_MANUAL
    furniture: list[FurnitureInstance] = field(default_factory=list)
    activity: ActivityMap | None = None
    last_category: np.ndarray | None = None
    last_vector: vectorize.VectorFloorplan | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)
    _next_instance: int = 1

    def invalidate_activity(self):
        self.activity = None
        self.last_category = None
        self.last_vector = None

    def as_floorplan(self) -> RasterFloorplan:
        """Provisional single-region floorplan over the raw boundary."""
        category = np.full(self.boundary_inside.shape, int(RoomLabel.OUTSIDE),
                           dtype=np.uint8)
        inside = self.boundary_inside > 0
        category[inside] = int(RoomLabel.LIVING)
        category[(self.boundary_ring > 0) & inside] = int(RoomLabel.WALL)
        category[(self.entrance > 0) & inside] = int(RoomLabel.MAIN_ENTRANCE)
        room_ids = np.zeros_like(category)
        return RasterFloorplan(inside=inside.astype(np.uint8),
                               boundary=self.boundary_ring.astype(np.uint8),
                               category=category, room_ids=room_ids)


def _decode_boundary_png(data: bytes):
    """inside / ring / entrance masks from an uploaded boundary PNG.

    Grayscale convention: 0 outside, 255 inside, 128 boundary ring,
    200 entrance opening.  An RGB upload uses R=ring, G=inside, B=entrance.
    """
    try:
        with Image.open(io.BytesIO(data)) as im:
            if im.mode in ("RGB", "RGBA"):
                arr = np.asarray(im.convert("RGB"))
                ring = arr[:, :, 0] > 127
                inside = (arr[:, :, 1] > 127) | ring
                entrance = arr[:, :, 2] > 127
            else:
                arr = np.asarray(im.convert("L"))
                ring = arr == 128
                entrance = arr == 200
                inside = (arr > 0)
    except OSError:
        raise ValueError("not a decodable image")
    if not inside.any() or not ring.any() or not entrance.any():
        raise ValueError("boundary image must mark inside, ring and entrance")
    # The ring must enclose the interior: walking from an interior pixel may
    # never reach a non-inside pixel without crossing the ring.
    from scipy import ndimage
    labels, _ = ndimage.label(~ring)
    interior_labels = set(np.unique(labels[inside & ~ring])) - {0}
    exterior_labels = set(np.unique(labels[~inside])) - {0}
    if not interior_labels or interior_labels & exterior_labels:
        raise ValueError("boundary ring is not closed")
    return inside.astype(np.uint8), ring.astype(np.uint8), entrance.astype(np.uint8)


def _png_b64(arr: np.ndarray) -> str:
    buf = io.BytesIO()
    Image.fromarray(np.asarray(arr, dtype=np.uint8)).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def load_dataset_index(dataset_dir: str | Path,
                       seed: int = 0) -> DatasetIndex:
    """Index every floorplan directory under dataset_dir; activity maps are
    synthesized on the fly when no .actf32 dump is stored alongside."""
    dataset_dir = Path(dataset_dir)
    plans = []
    for manifest in sorted(dataset_dir.glob("*/manifest.json")):
        fp = load_floorplan(manifest)
        act_path = manifest.parent / "activity.actf32"
        if act_path.exists():
            amap = actsim.load_activity_f32(act_path)
        else:
            furniture = furnish.place_primary_furniture(fp, seed=seed)
            amap = actsim.synthesize_activity_map(fp, furniture, seed=seed)
        plans.append((manifest.parent.name, fp, amap))
    return DatasetIndex.build(plans)


def create_app(index: DatasetIndex | None = None,
               rrt_params: BiRrtParams | None = None) -> FastAPI:
    app = FastAPI(title="actfloor")
    sessions: dict[str, Session] = {}
    state_lock = threading.Lock()
    params = rrt_params or BiRrtParams()

    if index is None and os.environ.get(ENV_DATASET):
        index = load_dataset_index(os.environ[ENV_DATASET])
    app.state.index = index

    def get_session(sid: str) -> Session | None:
        with state_lock:
            return sessions.get(sid)

    def error(status: int, code: str, detail: str = "") -> JSONResponse:
        return JSONResponse(status_code=status,
                            content={"error": code, "detail": detail})

    @app.post("/v1/sessions", status_code=201)
    async def create_session(request: Request):
        data = await request.body()
        if request.headers.get("content-type", "").startswith("application/json"):
            try:
                doc = json.loads(data)
                data = base64.b64decode(doc["boundary_png"])
            except (ValueError, KeyError, TypeError) as e:
                return error(400, "BadBoundary", f"bad JSON payload: {e}")
        try:
            inside, ring, entrance = _decode_boundary_png(data)
        except ValueError as e:
            return error(400, "BadBoundary", str(e))
        sid = uuid.uuid4().hex
        with state_lock:
            sessions[sid] = Session(id=sid, boundary_inside=inside,
                                    boundary_ring=ring, entrance=entrance)
        return {"session_id": sid, "mode": MODE_MANUAL}

    furniture_cache: dict[str, list[FurnitureInstance]] = {}

    def _entry_furniture(entry) -> list[FurnitureInstance]:
        """Rule-based layout for an index entry, memoized per plan id."""
        if entry.plan_id not in furniture_cache:
            fp = _entry_floorplan(entry)
            furniture_cache[entry.plan_id] = furnish.place_primary_furniture(
                fp, seed=0, on_error="skip")
        return furniture_cache[entry.plan_id]

    @app.get("/v1/sessions/{sid}/recommendations")
    def recommendations(sid: str, top: int = Query(10, ge=1)):
        sess = get_session(sid)
        if sess is None:
            return error(404, "UnknownSession")
        if app.state.index is None or len(app.state.index) == 0:
            return error(503, "IndexNotLoaded")
        ranked = app.state.index.rank_by_boundary(sess.boundary_inside)[:top]
        return {"results": [
            {"id": e.plan_id, "distance": d,
             "boundary_png": _png_b64(e.inside * 255),
             "furniture": [f.to_json() for f in _entry_furniture(e)]}
            for d, e in ranked]}

    @app.post("/v1/sessions/{sid}/furniture")
    async def furniture_command(sid: str, request: Request):
        sess = get_session(sid)
        if sess is None:
            return error(404, "UnknownSession")
        cmd = await request.json()
        with sess.lock:
            try:
                if cmd["op"] == "add":
                    return _furniture_add(sess, cmd)
                if cmd["op"] == "move":
                    return _furniture_move(sess, cmd)
                if cmd["op"] == "remove":
                    return _furniture_remove(sess, cmd)
                if cmd["op"] == "apply":
                    return _furniture_apply(sess, cmd)
            except KeyError as e:
                return error(400, "BadCommand", str(e))
        return error(400, "BadCommand", f"unknown op {cmd.get('op')!r}")

    def _rect_inside(sess: Session, rect: Rect) -> bool:
        h, w = sess.boundary_inside.shape
        if rect.x < 0 or rect.y < 0 or rect.x + rect.w > w or rect.y + rect.h > h:
            return False
        walkable = (sess.boundary_inside > 0) & (sess.boundary_ring == 0)
        return bool(walkable[rect.pixels()].all())

    def _entrance_for(sess: Session, rect: Rect) -> tuple[int, int]:
        # Free-form sessions have no room partition: anchor the trip start on
        # the ring pixel with the most clearance to the piece.
        ys, xs = np.nonzero(sess.boundary_ring)
        cx, cy = rect.x + rect.w / 2, rect.y + rect.h / 2
        k = int(np.argmax((xs - cx) ** 2 + (ys - cy) ** 2))
        return int(xs[k]), int(ys[k])

    def _furniture_payload(sess: Session):
        return {"furniture": [f.to_json() for f in sess.furniture]}

    def _furniture_add(sess: Session, cmd):
        kind = FurnitureKind(cmd["kind"])
        rect = Rect(*cmd["rect"])
        if not _rect_inside(sess, rect):
            return error(409, "OutOfBoundary")
        ent = _entrance_for(sess, rect)
        inst = FurnitureInstance(kind=kind, rect=rect,
                                 room_id=sess._next_instance, entrance=ent)
        sess._next_instance += 1
        sess.furniture.append(inst)
        sess.invalidate_activity()
        return {"instance": inst.to_json(), **_furniture_payload(sess)}

    def _furniture_move(sess: Session, cmd):
        iid = int(cmd["room_id"])
        rect = Rect(*cmd["rect"])
        idx = next((i for i, f in enumerate(sess.furniture) if f.room_id == iid), None)
        if idx is None:
            return error(404, "UnknownInstance")
        if not _rect_inside(sess, rect):
            return error(409, "OutOfBoundary")
        old = sess.furniture[idx]
        sess.furniture[idx] = FurnitureInstance(
            kind=old.kind, rect=rect, room_id=old.room_id,
            entrance=_entrance_for(sess, rect))
        sess.invalidate_activity()
        return {"instance": sess.furniture[idx].to_json(), **_furniture_payload(sess)}

    def _furniture_apply(sess: Session, cmd):
        """Replace session furniture with a recommendation's layout, scaled
        from the entry's footprint bounding box onto the session's."""
        if app.state.index is None or len(app.state.index) == 0:
            return error(503, "IndexNotLoaded")
        entry = next((e for e in app.state.index.entries
                      if e.plan_id == cmd["plan_id"]), None)
        if entry is None:
            return error(404, "UnknownInstance", f"no plan {cmd['plan_id']!r}")
        sy, sx = np.nonzero(sess.boundary_inside)
        ey, ex = np.nonzero(entry.inside)
        fx = (sx.max() - sx.min() + 1) / (ex.max() - ex.min() + 1)
        fy = (sy.max() - sy.min() + 1) / (ey.max() - ey.min() + 1)
        applied = []
        for f in _entry_furniture(entry):
            rect = Rect(x=int(round(sx.min() + (f.rect.x - ex.min()) * fx)),
                        y=int(round(sy.min() + (f.rect.y - ey.min()) * fy)),
                        w=max(1, int(round(f.rect.w * fx))),
                        h=max(1, int(round(f.rect.h * fy))))
            if not _rect_inside(sess, rect):
                continue  # piece lands on a wall or outside; drop it
            applied.append(FurnitureInstance(
                kind=f.kind, rect=rect, room_id=sess._next_instance,
                entrance=_entrance_for(sess, rect)))
            sess._next_instance += 1
        sess.furniture = applied
        sess.invalidate_activity()
        return _furniture_payload(sess)

    def _furniture_remove(sess: Session, cmd):
        iid = int(cmd["room_id"])
        idx = next((i for i, f in enumerate(sess.furniture) if f.room_id == iid), None)
        if idx is None:
            return error(404, "UnknownInstance")
        del sess.furniture[idx]
        sess.invalidate_activity()
        return _furniture_payload(sess)

    @app.post("/v1/sessions/{sid}/activity")
    def synthesize_activity(sid: str, mode: str = Query(MODE_MANUAL),
                            seed: int = Query(0)):
        sess = get_session(sid)
        if sess is None:
            return error(404, "UnknownSession")
        with sess.lock:
            sess.mode = mode
            if mode == MODE_AUTO:
                fp, furniture = _auto_layout(sess, seed)
                if fp is None:
                    return error(503, "IndexNotLoaded")
            else:
                if not sess.furniture:
                    return error(422, "NoConnectivity",
                                 "manual mode needs at least one furniture piece")
                fp, furniture = sess.as_floorplan(), sess.furniture
            try:
                amap = actsim.synthesize_activity_map(fp, furniture, params, seed=seed)
            except ActfloorError as e:
                return error(422, "NoConnectivity", str(e))
            sess.activity = amap
            sess.last_category = None
            sess.last_vector = None
            return {"activity_png": _png_b64(np.round(amap.density * 255)),
                    "seed": seed}

    def _auto_layout(sess: Session, seed: int):
        """Rule-based furnishing of a retrieval-provided provisional layout."""
        if app.state.index is None or len(app.state.index) == 0:
            return None, None
        ranked = app.state.index.rank_by_boundary(sess.boundary_inside)
        entry = ranked[0][1]
        category = genlab.transfer_layout(entry, sess.boundary_inside)
        fp = _floorplan_from_category(category, sess)
        furniture = furnish.place_primary_furniture(fp, seed=seed, on_error="skip")
        return fp, furniture

    @app.post("/v1/sessions/{sid}/generate")
    def generate(sid: str, seed: int = Query(0)):
        sess = get_session(sid)
        if sess is None:
            return error(404, "UnknownSession")
        with sess.lock:
            if sess.activity is None:
                return error(422, "MissingActivity")
            if app.state.index is None or len(app.state.index) == 0:
                return error(500, "GeneratorFailure", "no dataset index configured")
            from .core import BoundaryImage
            boundary = BoundaryImage(inside=sess.boundary_inside,
                                     boundary=sess.boundary_ring,
                                     entrance=sess.entrance)
            gen = RetrievalGenerator(app.state.index)
            try:
                category = gen.generate(GeneratorInput(boundary=boundary,
                                                       activity=sess.activity), seed)
                vf = vectorize.vectorize_floorplan(category, sess.activity,
                                                   entrance=sess.entrance)
                report = vectorize.check_success(vf, shape=category.shape)
            except ActfloorError as e:
                return error(500, "GeneratorFailure", str(e))
            sess.last_category = category
            sess.last_vector = vf
            return {"category_png": _png_b64(category),
                    "vector": vectorize.export_json(vf),
                    "svg": vectorize.export_svg(vf, size=category.shape[::-1]),
                    "success": report.to_json()}

    return app


def _label_rooms(category: np.ndarray) -> np.ndarray:
    """Connected components of each room code, as a room-id image."""
    from scipy import ndimage
    room_ids = np.zeros(category.shape, dtype=np.int32)
    next_id = 1
    for code in range(8):
        labels, n = ndimage.label(category == code)
        for i in range(1, n + 1):
            region = labels == i
            if region.sum() < 20:
                continue  # speckle, not a room
            room_ids[region] = next_id
            next_id += 1
    return room_ids


def _floorplan_from_category(category: np.ndarray, sess: Session) -> RasterFloorplan:
    """Wrap a transferred category image as a floorplan with room ids."""
    inside = (category != int(RoomLabel.OUTSIDE)).astype(np.uint8)
    cat = category.copy()
    cat[(sess.entrance > 0) & (inside > 0)] = int(RoomLabel.MAIN_ENTRANCE)
    return RasterFloorplan(inside=inside, boundary=sess.boundary_ring,
                           category=cat, room_ids=_label_rooms(category))


def _entry_floorplan(entry) -> RasterFloorplan:
    """Rebuild a fully-typed floorplan from a dataset index entry."""
    from .core import inner_outline
    inside = (entry.inside > 0).astype(np.uint8)
    return RasterFloorplan(inside=inside,
                           boundary=inner_outline(inside).astype(np.uint8),
                           category=entry.category,
                           room_ids=_label_rooms(entry.category))
