"""Evaluation toolkit: pixel error, mutual information / NMI, Hu-moment
shape distance, and the Elo rating system for pairwise preference studies.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (EmptyShape, MalformedLine, SizeMismatch, UnknownPlayer,
                     ZeroEntropy)

HIST_BINS = 256


# ---------------------------------------------------------------------------
# Pixel error
# ---------------------------------------------------------------------------

# Room codes 0..7 map to equally spaced values in [0, 1]; structural labels
# are excluded from the error computation.
_ROOM_SCALE = {c: c / 7.0 for c in range(8)}


def pixel_error(pred: np.ndarray, gt: np.ndarray,
                inside: np.ndarray | None = None) -> dict:
    """MSE/MAE between category images on the unit room-code scale.

    Only pixels where both images carry a room code (and, when given, lie in
    the inside mask) contribute.
    """
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    if pred.shape != gt.shape:
        raise SizeMismatch(f"{pred.shape} vs {gt.shape}")
    sel = (pred <= 7) & (gt <= 7)
    if inside is not None:
        if inside.shape != gt.shape:
            raise SizeMismatch("inside mask size differs")
        sel &= np.asarray(inside) > 0
    if not sel.any():
        return {"mse": 0.0, "mae": 0.0}
    a = pred[sel].astype(np.float64) / 7.0
    b = gt[sel].astype(np.float64) / 7.0
    diff = np.abs(a - b)
    return {"mse": float(np.mean(diff ** 2)), "mae": float(np.mean(diff))}


# ---------------------------------------------------------------------------
# Mutual information / NMI
# ---------------------------------------------------------------------------

def _discretize(img: np.ndarray) -> np.ndarray:
    """Unit-range intensities to integer bins 0..255."""
    a = np.asarray(img, dtype=np.float64)
    return np.clip((a * HIST_BINS).astype(np.int64), 0, HIST_BINS - 1)


def intensity_histograms(a: np.ndarray, b: np.ndarray):
    """Normalized marginal histograms and the joint, 256 bins over [0, 1]."""
    if a.shape != b.shape:
        raise SizeMismatch(f"{a.shape} vs {b.shape}")
    ia, ib = _discretize(a).ravel(), _discretize(b).ravel()
    joint = np.zeros((HIST_BINS, HIST_BINS), dtype=np.float64)
    np.add.at(joint, (ia, ib), 1.0)
    joint /= joint.sum()
    return joint.sum(axis=1), joint.sum(axis=0), joint


def entropy(p: np.ndarray) -> float:
    """Shannon entropy in nats; 0*log(0) := 0."""
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)))


def mutual_information(a: np.ndarray, b: np.ndarray) -> float:
    """MI over the 256-bin intensity discretization, natural log."""
    pa, pb, joint = intensity_histograms(a, b)
    nz = joint > 0
    ii, jj = np.nonzero(nz)
    pj = joint[nz]
    return float(np.sum(pj * np.log(pj / (pa[ii] * pb[jj]))))


def nmi_arrays(a: np.ndarray, b: np.ndarray) -> float:
    """2*MI / (H(a) + H(b)); raises ZeroEntropy when both images are constant."""
    pa, pb, joint = intensity_histograms(a, b)
    ha, hb = entropy(pa), entropy(pb)
    if ha + hb <= 0:
        raise ZeroEntropy("both images are constant")
    nz = joint > 0
    ii, jj = np.nonzero(nz)
    pj = joint[nz]
    mi = float(np.sum(pj * np.log(pj / (pa[ii] * pb[jj]))))
    return 2.0 * mi / (ha + hb)


def nmi(a, b) -> float:
    """NMI between two activity maps (or raw unit-range arrays)."""
    da = a.density if hasattr(a, "density") else a
    db = b.density if hasattr(b, "density") else b
    return nmi_arrays(da, db)


# ---------------------------------------------------------------------------
# Hu moment invariants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HuSignature:
    """Seven sign-log-scaled invariant moments of a filled shape mask."""

    values: tuple[float, ...]


def _raw_hu_moments(mask: np.ndarray) -> np.ndarray:
    """Hu invariants treating each pixel as a filled unit square.

    Square integration (rather than point masses) makes the invariants exact
    under integer translation and integer upsampling of the mask.
    """
    m = np.asarray(mask, dtype=np.float64)
    if m.sum() <= 0:
        raise EmptyShape("mask has no pixels")
    ys, xs = np.nonzero(m)
    w = m[ys, xs]
    xs = xs.astype(np.float64)
    ys = ys.astype(np.float64)

    # Integral of t^p over the unit interval centered at t.
    def g(t, p):
        if p == 0:
            return np.ones_like(t)
        if p == 1:
            return t
        if p == 2:
            return t * t + 1.0 / 12.0
        return t ** 3 + t / 4.0

    def raw(p, q):
        return float(np.sum(w * g(xs, p) * g(ys, q)))

    m00 = raw(0, 0)
    cx, cy = raw(1, 0) / m00, raw(0, 1) / m00
    mu = {
        (2, 0): raw(2, 0) - cx * raw(1, 0),
        (0, 2): raw(0, 2) - cy * raw(0, 1),
        (1, 1): raw(1, 1) - cx * raw(0, 1),
        (3, 0): raw(3, 0) - 3 * cx * raw(2, 0) + 2 * cx * cx * raw(1, 0),
        (0, 3): raw(0, 3) - 3 * cy * raw(0, 2) + 2 * cy * cy * raw(0, 1),
        (2, 1): raw(2, 1) - 2 * cx * raw(1, 1) - cy * raw(2, 0) + 2 * cx * cx * raw(0, 1),
        (1, 2): raw(1, 2) - 2 * cy * raw(1, 1) - cx * raw(0, 2) + 2 * cy * cy * raw(1, 0),
    }

    def eta(p, q):
        return mu[(p, q)] / (m00 ** (1 + (p + q) / 2.0))

    n20, n02, n11 = eta(2, 0), eta(0, 2), eta(1, 1)
    n30, n03 = eta(3, 0), eta(0, 3)
    n21, n12 = eta(2, 1), eta(1, 2)

    h1 = n20 + n02
    h2 = (n20 - n02) ** 2 + 4 * n11 ** 2
    h3 = (n30 - 3 * n12) ** 2 + (3 * n21 - n03) ** 2
    h4 = (n30 + n12) ** 2 + (n21 + n03) ** 2
    h5 = ((n30 - 3 * n12) * (n30 + n12)
          * ((n30 + n12) ** 2 - 3 * (n21 + n03) ** 2)
          + (3 * n21 - n03) * (n21 + n03)
          * (3 * (n30 + n12) ** 2 - (n21 + n03) ** 2))
    h6 = ((n20 - n02) * ((n30 + n12) ** 2 - (n21 + n03) ** 2)
          + 4 * n11 * (n30 + n12) * (n21 + n03))
    h7 = ((3 * n21 - n03) * (n30 + n12)
          * ((n30 + n12) ** 2 - 3 * (n21 + n03) ** 2)
          - (n30 - 3 * n12) * (n21 + n03)
          * (3 * (n30 + n12) ** 2 - (n21 + n03) ** 2))
    return np.array([h1, h2, h3, h4, h5, h6, h7])


def hu_signature(mask: np.ndarray, zero_tol: float = 1e-12) -> HuSignature:
    """sign(h) * log|h| per invariant, taming the magnitude spread.

    Invariants below `zero_tol` count as exactly zero so that symmetric
    shapes (whose odd moments vanish analytically) compare cleanly.
    """
    h = _raw_hu_moments(mask)
    vals = np.zeros(7)
    big = np.abs(h) >= zero_tol
    vals[big] = np.sign(h[big]) * np.log(np.abs(h[big]))
    return HuSignature(values=tuple(float(v) for v in vals))


def hu_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Sum of absolute differences between the two sign-log signatures."""
    sa = np.asarray(hu_signature(a).values)
    sb = np.asarray(hu_signature(b).values)
    return float(np.sum(np.abs(sa - sb)))


# ---------------------------------------------------------------------------
# Elo rating system
# ---------------------------------------------------------------------------

INITIAL_RATING = 1000.0
# Maximum adjustment per game: number of players (pairwise duels) times 42.
DEFAULT_K = 84.0

A_WINS, B_WINS, DRAW = "AWins", "BWins", "Draw"
_SCORES = {A_WINS: 1.0, B_WINS: 0.0, DRAW: 0.5}


@dataclass(frozen=True)
class EloTable:
    ratings: dict = field(default_factory=dict)
    k_factor: float = DEFAULT_K
    history: tuple = ()

    def with_player(self, player: str) -> "EloTable":
        if player in self.ratings:
            return self
        r = dict(self.ratings)
        r[player] = INITIAL_RATING
        return replace(self, ratings=r)

    def rating(self, player: str) -> float:
        if player not in self.ratings:
            raise UnknownPlayer(player)
        return self.ratings[player]


def elo_expected(r_a: float, r_b: float) -> tuple[float, float]:
    """Expected scores; e_a + e_b == 1 by construction."""
    e_a = 1.0 / (1.0 + 10.0 ** ((r_b - r_a) / 400.0))
    return e_a, 1.0 - e_a


def elo_update(table: EloTable, a: str, b: str, outcome: str) -> EloTable:
    """Apply one match: R' = R + K*(S - E); win 1, loss 0, draw 0.5."""
    if outcome not in _SCORES:
        raise ValueError(f"outcome must be one of {sorted(_SCORES)}")
    r_a, r_b = table.rating(a), table.rating(b)
    e_a, e_b = elo_expected(r_a, r_b)
    s_a = _SCORES[outcome]
    s_b = 1.0 - s_a
    ratings = dict(table.ratings)
    ratings[a] = r_a + table.k_factor * (s_a - e_a)
    ratings[b] = r_b + table.k_factor * (s_b - e_b)
    return replace(table, ratings=ratings,
                   history=table.history + ((a, b, outcome),))


def parse_match_log(text: str) -> list[dict]:
    """Line-delimited JSON: {player_a, player_b, question, outcome}."""
    matches = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            d = json.loads(line)
            outcome = d["outcome"]
            if isinstance(outcome, (int, float)) and not isinstance(outcome, bool):
                # Numeric score-for-A shorthand: 1 win, 0 loss, 0.5 draw.
                by_score = {v: k for k, v in _SCORES.items()}
                if float(outcome) not in by_score:
                    raise KeyError("outcome")
                outcome = by_score[float(outcome)]
            if outcome not in _SCORES:
                raise KeyError("outcome")
            matches.append({"player_a": d["player_a"], "player_b": d["player_b"],
                            "question": d.get("question", ""),
                            "outcome": outcome})
        except (json.JSONDecodeError, KeyError, TypeError) as e:
            raise MalformedLine(f"line {lineno}: {e}")
    return matches


def tabulate_elo(matches: list[dict], k_factor: float = DEFAULT_K) -> dict:
    """Final ratings per question after sequential application in log order."""
    tables: dict[str, EloTable] = {}
    for m in matches:
        q = m["question"]
        t = tables.get(q, EloTable(k_factor=k_factor))
        t = t.with_player(m["player_a"]).with_player(m["player_b"])
        tables[q] = elo_update(t, m["player_a"], m["player_b"], m["outcome"])
    return {q: dict(t.ratings) for q, t in tables.items()}
