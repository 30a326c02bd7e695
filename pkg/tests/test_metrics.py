import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from actfloor import metrics
from actfloor.errors import (EmptyShape, MalformedLine, SizeMismatch,
                             UnknownPlayer, ZeroEntropy)
from actfloor.metrics import (EloTable, elo_expected, elo_update, hu_distance,
                              hu_signature, mutual_information, nmi_arrays,
                              parse_match_log, pixel_error, tabulate_elo)


# ---------------------------------------------------------------------------
# Brute-force oracles, deliberately written differently from the library.
# ---------------------------------------------------------------------------

def mi_oracle(a, b):
    ia = np.minimum((a * 256).astype(int), 255).ravel()
    ib = np.minimum((b * 256).astype(int), 255).ravel()
    n = len(ia)
    joint = {}
    for x, y in zip(ia, ib):
        joint[(x, y)] = joint.get((x, y), 0) + 1
    pa, pb = {}, {}
    for x in ia:
        pa[x] = pa.get(x, 0) + 1
    for y in ib:
        pb[y] = pb.get(y, 0) + 1
    mi = 0.0
    for (x, y), c in joint.items():
        pxy = c / n
        mi += pxy * math.log(pxy / ((pa[x] / n) * (pb[y] / n)))
    return mi


def entropy_oracle(vals):
    n = len(vals)
    counts = {}
    for v in vals:
        counts[v] = counts.get(v, 0) + 1
    return -sum((c / n) * math.log(c / n) for c in counts.values())


class TestMutualInformation:
    def test_against_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            a = rng.random((32, 32))
            b = rng.random((32, 32))
            assert mutual_information(a, b) == pytest.approx(mi_oracle(a, b), abs=1e-6)

    def test_nmi_against_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            a = rng.random((32, 32))
            b = rng.random((32, 32))
            ia = np.minimum((a * 256).astype(int), 255).ravel()
            ib = np.minimum((b * 256).astype(int), 255).ravel()
            expected = 2 * mi_oracle(a, b) / (entropy_oracle(ia) + entropy_oracle(ib))
            assert nmi_arrays(a, b) == pytest.approx(expected, abs=1e-6)

    def test_self_nmi_is_one(self):
        rng = np.random.default_rng(2)
        x = rng.random((16, 16))
        assert nmi_arrays(x, x) == pytest.approx(1.0, abs=1e-12)

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        a, b = rng.random((16, 16)), rng.random((16, 16))
        assert nmi_arrays(a, b) == pytest.approx(nmi_arrays(b, a), abs=1e-12)

    def test_independent_near_zero(self):
        # Product distribution: MI of independent halves stays small.
        rng = np.random.default_rng(4)
        a = np.repeat(rng.random(512), 8).reshape(64, 64)
        b = rng.random((64, 64))
        assert 0.0 <= nmi_arrays(a, b) < 0.5

    def test_zero_entropy(self):
        c = np.full((8, 8), 0.5)
        with pytest.raises(ZeroEntropy):
            nmi_arrays(c, c)

    def test_size_mismatch(self):
        with pytest.raises(SizeMismatch):
            mutual_information(np.zeros((4, 4)), np.zeros((5, 5)))


class TestPixelError:
    def test_double_loop_oracle(self):
        rng = np.random.default_rng(5)
        pred = rng.integers(0, 8, (16, 16)).astype(np.uint8)
        gt = rng.integers(0, 8, (16, 16)).astype(np.uint8)
        pred[0, :4] = 100  # structural labels excluded from the error
        got = pixel_error(pred, gt)
        se = ae = n = 0
        for y in range(16):
            for x in range(16):
                if pred[y, x] > 7 or gt[y, x] > 7:
                    continue
                d = abs(int(pred[y, x]) - int(gt[y, x])) / 7.0
                se += d * d
                ae += d
                n += 1
        # equal up to float summation order
        assert got["mse"] == pytest.approx(se / n, abs=1e-12)
        assert got["mae"] == pytest.approx(ae / n, abs=1e-12)

    def test_identical_is_zero(self):
        a = np.full((8, 8), 3, dtype=np.uint8)
        assert pixel_error(a, a) == {"mse": 0.0, "mae": 0.0}

    def test_inside_mask_restricts(self):
        pred = np.zeros((4, 4), dtype=np.uint8)
        gt = np.full((4, 4), 7, dtype=np.uint8)
        inside = np.zeros((4, 4), dtype=np.uint8)
        inside[0, 0] = 1
        assert pixel_error(pred, gt, inside)["mae"] == pytest.approx(1.0)


class TestHuMoments:
    shapes = []
    _rng = np.random.default_rng(6)
    for _ in range(8):
        m = np.zeros((64, 64), dtype=np.uint8)
        x0, y0 = _rng.integers(4, 20, 2)
        w, h = _rng.integers(8, 30, 2)
        m[y0:y0 + h, x0:x0 + w] = 1
        # punch an L-shaped notch for asymmetry
        m[y0:y0 + h // 2, x0:x0 + w // 2] = 0
        shapes.append(m)

    def test_translation_invariance(self):
        for m in self.shapes:
            shifted = np.roll(np.roll(m, 5, axis=0), -3, axis=1)
            assert hu_distance(m, shifted) == pytest.approx(0.0, abs=1e-6)

    def test_scale_invariance(self):
        for m in self.shapes:
            up = np.kron(m, np.ones((3, 3), dtype=np.uint8))
            assert hu_distance(m, up) == pytest.approx(0.0, abs=1e-6)

    def test_distinct_shapes_nonzero(self):
        square = np.zeros((32, 32), dtype=np.uint8)
        square[8:24, 8:24] = 1
        bar = np.zeros((32, 32), dtype=np.uint8)
        bar[14:18, 2:30] = 1
        assert hu_distance(square, bar) > 0.1

    def test_pseudometric_properties(self):
        a, b, c = self.shapes[:3]
        assert hu_distance(a, a) == 0.0
        assert hu_distance(a, b) == pytest.approx(hu_distance(b, a))
        assert hu_distance(a, c) <= hu_distance(a, b) + hu_distance(b, c) + 1e-9

    def test_empty_shape(self):
        with pytest.raises(EmptyShape):
            hu_signature(np.zeros((8, 8)))


class TestElo:
    def test_expected_formula_oracle(self):
        for ra, rb in ((1000, 1000), (1200, 1000), (900, 1300)):
            e_a, e_b = elo_expected(ra, rb)
            assert e_a == pytest.approx(1 / (1 + 10 ** ((rb - ra) / 400)))
            assert e_a + e_b == pytest.approx(1.0, abs=0)

    def test_hundred_point_gap(self):
        e_a, _ = elo_expected(1100, 1000)
        assert e_a == pytest.approx(0.64, abs=0.005)

    def test_update_oracle(self):
        t = EloTable().with_player("a").with_player("b")
        t = elo_update(t, "a", "b", metrics.A_WINS)
        # equal ratings: E = 0.5, so the winner gains K/2 = 42.
        assert t.ratings["a"] == pytest.approx(1042.0)
        assert t.ratings["b"] == pytest.approx(958.0)

    def test_draw_at_equal_ratings_is_noop(self):
        t = EloTable().with_player("a").with_player("b")
        t = elo_update(t, "a", "b", metrics.DRAW)
        assert t.ratings == {"a": 1000.0, "b": 1000.0}

    def test_new_player_starts_at_1000(self):
        assert EloTable().with_player("x").rating("x") == 1000.0

    def test_unknown_player(self):
        with pytest.raises(UnknownPlayer):
            EloTable().rating("ghost")

    def test_default_k_is_84(self):
        assert metrics.DEFAULT_K == 84.0
        assert EloTable().k_factor == 84.0

    @given(st.lists(st.tuples(st.sampled_from("abcd"), st.sampled_from("abcd"),
                              st.sampled_from(["AWins", "BWins", "Draw"])),
                    max_size=40))
    @settings(max_examples=50, deadline=None)
    def test_zero_sum_property(self, games):
        t = EloTable()
        for a, b, outcome in games:
            if a == b:
                continue
            t = t.with_player(a).with_player(b)
            t = elo_update(t, a, b, outcome)
        if t.ratings:
            total = sum(t.ratings.values())
            assert total == pytest.approx(1000.0 * len(t.ratings), abs=1e-9)

    def test_table_immutability(self):
        t0 = EloTable().with_player("a").with_player("b")
        elo_update(t0, "a", "b", metrics.A_WINS)
        assert t0.ratings == {"a": 1000.0, "b": 1000.0}
        assert t0.history == ()


class TestMatchLog:
    def test_parse_and_tabulate(self):
        lines = [json.dumps({"player_a": "x", "player_b": "y",
                             "question": f"q{i % 2}", "outcome": "AWins"})
                 for i in range(4)]
        matches = parse_match_log("\n".join(lines))
        assert len(matches) == 4
        tables = tabulate_elo(matches)
        assert set(tables) == {"q0", "q1"}
        assert tables["q0"]["x"] > 1000 > tables["q0"]["y"]

    def test_numeric_outcomes(self):
        line = json.dumps({"player_a": "x", "player_b": "y", "outcome": 0.5})
        assert parse_match_log(line)[0]["outcome"] == metrics.DRAW

    def test_malformed_line_number(self):
        text = json.dumps({"player_a": "x", "player_b": "y", "outcome": "AWins"}) \
            + "\n{broken"
        with pytest.raises(MalformedLine, match="line 2"):
            parse_match_log(text)

    def test_bad_outcome(self):
        with pytest.raises(MalformedLine):
            parse_match_log('{"player_a":"x","player_b":"y","outcome":"Tie"}')

    def test_empty_log(self):
        assert parse_match_log("") == []
        assert tabulate_elo([]) == {}

    def test_study_shaped_log(self):
        # 2 sets x 30 pairs x 5 raters x 5 questions = 1500 updates.
        rng = np.random.default_rng(7)
        lines = []
        for q in range(5):
            for _ in range(2 * 30 * 5):
                out = rng.choice(["AWins", "BWins", "Draw"])
                lines.append(json.dumps({"player_a": "ours", "player_b": "base",
                                         "question": f"q{q}", "outcome": str(out)}))
        matches = parse_match_log("\n".join(lines))
        assert len(matches) == 1500
        tables = tabulate_elo(matches)
        assert all(len(t) == 2 for t in tables.values())
