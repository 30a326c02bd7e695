"""Generation stage: the generator contract, the full adversarial /
cycle-consistency / identity objective as pure functions, and a non-neural
retrieval baseline so the pipeline runs end to end.

Discriminators are modeled as score-map inputs rather than trained networks,
which makes every loss term a testable function with no learning stack.
"""

from __future__ import annotations

import subprocess
import tempfile
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .actsim import ActivityMap
from .core import ROOM_CODES, BoundaryImage, RasterFloorplan, RoomLabel, extract_boundary
from .errors import EmptyIndex, NonFiniteInput, ScoreOutOfRange, SizeMismatch
from .metrics import HuSignature, hu_distance, hu_signature, nmi_arrays


@dataclass
class LossWeights:
    lambda1: float = 1.0   # adversarial
    lambda2: float = 10.0  # cycle consistency
    lambda3: float = 5.0   # identity


@dataclass(frozen=True)
class GeneratorInput:
    """Three-channel boundary rendering concatenated with the activity map."""

    boundary: BoundaryImage
    activity: ActivityMap

    def __post_init__(self):
        if self.boundary.inside.shape != self.activity.density.shape:
            raise SizeMismatch("boundary and activity dimensions differ")

    def channels(self) -> np.ndarray:
        """4-channel float image: inside, boundary ring, entrance, activity."""
        b = self.boundary
        return np.stack([b.inside.astype(np.float64),
                         b.boundary.astype(np.float64),
                         b.entrance.astype(np.float64),
                         self.activity.density], axis=0)


# ---------------------------------------------------------------------------
# Loss terms
# ---------------------------------------------------------------------------

def adversarial_loss(real_scores: np.ndarray, fake_scores: np.ndarray) -> float:
    """mean(log(real)) + mean(log(1 - fake)) over patch score grids."""
    real = np.asarray(real_scores, dtype=np.float64)
    fake = np.asarray(fake_scores, dtype=np.float64)
    for name, s in (("real", real), ("fake", fake)):
        if not np.isfinite(s).all() or (s <= 0).any() or (s >= 1).any():
            raise ScoreOutOfRange(f"{name} scores must lie strictly in (0, 1)")
    return float(np.mean(np.log(real)) + np.mean(np.log(1.0 - fake)))


def cycle_loss(reconstructed: np.ndarray, original: np.ndarray) -> float:
    """Mean absolute per-pixel difference (L1)."""
    a = np.asarray(reconstructed, dtype=np.float64)
    b = np.asarray(original, dtype=np.float64)
    if a.shape != b.shape:
        raise SizeMismatch(f"{a.shape} vs {b.shape}")
    return float(np.mean(np.abs(a - b)))


def identity_loss(generated: np.ndarray, target: np.ndarray) -> float:
    """Same L1 contract as cycle_loss; callers supply the identity pairing
    (the floorplan variant feeds the generator an all-zero activity map)."""
    return cycle_loss(generated, target)


def total_loss(parts: dict, weights: LossWeights | None = None) -> float:
    """lambda1*(adv_f+adv_b) + lambda2*(cyc_b+cyc_f) + lambda3*(id_b+id_f)."""
    w = weights or LossWeights()
    required = ("adv_f", "adv_b", "cyc_b", "cyc_f", "id_b", "id_f")
    vals = {}
    for key in required:
        v = float(parts[key])
        if not np.isfinite(v):
            raise NonFiniteInput(f"{key} is not finite")
        vals[key] = v
    return (w.lambda1 * (vals["adv_f"] + vals["adv_b"])
            + w.lambda2 * (vals["cyc_b"] + vals["cyc_f"])
            + w.lambda3 * (vals["id_b"] + vals["id_f"]))


def one_hot_category(category: np.ndarray) -> np.ndarray:
    """Room-code image as stacked binary channels, for L1 losses over labels."""
    chans = [np.asarray(category == c, dtype=np.float64) for c in ROOM_CODES]
    return np.stack(chans, axis=0)


# ---------------------------------------------------------------------------
# Dataset index and retrieval baseline
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IndexEntry:
    plan_id: str
    inside: np.ndarray         # uint8 mask
    signature: HuSignature
    activity: np.ndarray       # float density
    category: np.ndarray       # label image


@dataclass
class DatasetIndex:
    entries: list[IndexEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    @staticmethod
    def build(plans: list[tuple[str, RasterFloorplan, ActivityMap]]) -> "DatasetIndex":
        entries = []
        for plan_id, fp, amap in plans:
            entries.append(IndexEntry(
                plan_id=plan_id,
                inside=np.asarray(fp.inside, dtype=np.uint8),
                signature=hu_signature(fp.inside),
                activity=amap.density.copy(),
                category=np.asarray(fp.category, dtype=np.uint8),
            ))
        return DatasetIndex(entries=entries)

    def rank_by_boundary(self, inside: np.ndarray) -> list[tuple[float, IndexEntry]]:
        """Entries sorted by Hu-moment distance to the query mask, ascending."""
        sig = hu_signature(inside)
        ranked = sorted(
            ((hu_distance_sig(sig, e.signature), i, e) for i, e in enumerate(self.entries)),
            key=lambda t: (t[0], t[1]))
        return [(d, e) for d, _, e in ranked]


def hu_distance_sig(a: HuSignature, b: HuSignature) -> float:
    return float(np.sum(np.abs(np.asarray(a.values) - np.asarray(b.values))))


def _nearest_label_fill(category: np.ndarray, known: np.ndarray,
                        fill_region: np.ndarray) -> np.ndarray:
    """Fill `fill_region` with the 4-connected-nearest known label.

    Level-by-level BFS from all known pixels; equal-distance ties resolve to
    the lower label code.
    """
    out = category.copy()
    dist = np.full(category.shape, -1, dtype=np.int32)
    best = np.full(category.shape, 255, dtype=np.int16)
    q: deque[tuple[int, int]] = deque()
    ys, xs = np.nonzero(known)
    for y, x in zip(ys, xs):
        dist[y, x] = 0
        best[y, x] = out[y, x]
        q.append((y, x))
    h, w = category.shape
    target = fill_region | known
    while q:
        y, x = q.popleft()
        for dy, dx in ((-1, 0), (1, 0), (0, -1), (0, 1)):
            ny, nx = y + dy, x + dx
            if not (0 <= ny < h and 0 <= nx < w) or not target[ny, nx]:
                continue
            nd = dist[y, x] + 1
            if dist[ny, nx] == -1:
                dist[ny, nx] = nd
                best[ny, nx] = best[y, x]
                q.append((ny, nx))
            elif dist[ny, nx] == nd and best[y, x] < best[ny, nx]:
                best[ny, nx] = best[y, x]
    out[fill_region] = best[fill_region].astype(category.dtype)
    return out


def retrieval_generate(inp: GeneratorInput, index: DatasetIndex, k: int = 10) -> np.ndarray:
    """Retrieval baseline: nearest boundary by Hu distance, refined among the
    top-k by activity-map NMI, then the winner's layout transferred onto the
    query footprint."""
    if len(index) == 0:
        raise EmptyIndex("dataset index is empty")
    if k < 1:
        raise ValueError("k must be >= 1")
    ranked = index.rank_by_boundary(inp.boundary.inside)[:k]
    if len(ranked) == 1 or k == 1:
        entry = ranked[0][1]
    else:
        entry = max(ranked, key=lambda t: nmi_arrays(inp.activity.density,
                                                     t[1].activity))[1]
    return transfer_layout(entry, inp.boundary.inside)


def transfer_layout(entry: IndexEntry, inside: np.ndarray) -> np.ndarray:
    """Copy the entry's category image onto the query footprint; uncovered
    interior pixels take the nearest transferred label, exterior is OUTSIDE."""
    inside_b = inside > 0
    out = np.full(inside.shape, int(RoomLabel.OUTSIDE), dtype=np.uint8)
    covered = inside_b & (entry.inside > 0)
    out[covered] = entry.category[covered]
    uncovered = inside_b & ~covered
    if uncovered.any():
        if not covered.any():
            out[uncovered] = int(RoomLabel.LIVING)
        else:
            out = _nearest_label_fill(out, covered, uncovered)
    out[~inside_b] = int(RoomLabel.OUTSIDE)
    # The footprint boundary must not leak OUTSIDE labels inward.
    out[inside_b & (out == int(RoomLabel.OUTSIDE))] = int(RoomLabel.WALL)
    # Exterior walls: the query footprint's own perimeter (2 px) is solid
    # wall except where the transferred entrance opening sits, so every room
    # stays enclosed even when the query extends past the source footprint.
    from scipy import ndimage
    eroded = ndimage.binary_erosion(
        inside_b, ndimage.generate_binary_structure(2, 1), iterations=2)
    perimeter = inside_b & ~eroded & (out != int(RoomLabel.MAIN_ENTRANCE))
    out[perimeter] = int(RoomLabel.WALL)
    return out


def confinement_holds(category: np.ndarray, inside: np.ndarray) -> bool:
    """output(p)=OUTSIDE exactly where p is outside the footprint."""
    outside = np.asarray(inside) == 0
    return bool(np.array_equal(category == int(RoomLabel.OUTSIDE), outside))


# ---------------------------------------------------------------------------
# Generator contract and external plug-in
# ---------------------------------------------------------------------------

class RetrievalGenerator:
    """Default Generator implementation backed by a DatasetIndex."""

    def __init__(self, index: DatasetIndex, k: int = 10):
        self.index = index
        self.k = k

    def generate(self, inp: GeneratorInput, seed: int = 0) -> np.ndarray:
        return retrieval_generate(inp, self.index, self.k)


class PluginGenerator:
    """Directory-based exchange with an external generator process.

    The input is written as a PNG pair (boundary rendering + activity map)
    into a scratch directory; the command is invoked with that directory as
    its last argument and must write `category.png` back.
    """

    def __init__(self, command: list[str]):
        self.command = list(command)

    def generate(self, inp: GeneratorInput, seed: int = 0) -> np.ndarray:
        with tempfile.TemporaryDirectory() as d:
            dd = Path(d)
            b = inp.boundary
            rgb = np.stack([b.inside * 255, b.boundary * 255, b.entrance * 255],
                           axis=-1).astype(np.uint8)
            Image.fromarray(rgb).save(dd / "boundary.png")
            act = np.round(inp.activity.density * 255).astype(np.uint8)
            Image.fromarray(act).save(dd / "activity.png")
            subprocess.run(self.command + [str(dd)], check=True)
            with Image.open(dd / "category.png") as im:
                return np.asarray(im.convert("L"), dtype=np.uint8)


def generator_input_from_floorplan(fp: RasterFloorplan,
                                   amap: ActivityMap) -> GeneratorInput:
    return GeneratorInput(boundary=extract_boundary(fp), activity=amap)
