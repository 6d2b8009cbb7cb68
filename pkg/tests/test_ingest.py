import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trajeval.errors import IngestError
from trajeval.ingest import (DatasetSpec, RawRecord, downsample, parse_ethucy,
                             parse_predictions, write_predictions)
from trajeval.trajdata import Position, PredictionSet, Sequence


class TestParseEthucy:
    def test_basic_line(self, tmp_path):
        p = tmp_path / "eth.txt"
        p.write_text("840 1.0 8.46 3.59\n")
        (rec,) = parse_ethucy(p)
        assert rec == RawRecord(840, 1, Position(8.46, 3.59))

    def test_tabs_and_float_frames(self, tmp_path):
        p = tmp_path / "eth.txt"
        p.write_text("840.0\t1.0\t8.46\t3.59\n850.0\t1.0\t8.60\t3.80\n")
        recs = parse_ethucy(p)
        assert [(r.frame, r.agent_id) for r in recs] == [(840, 1), (850, 1)]

    def test_comments_and_blank_lines_skipped(self, tmp_path):
        p = tmp_path / "eth.txt"
        p.write_text("# header comment\n\n840 1 8.46 3.59\n")
        assert len(parse_ethucy(p)) == 1

    def test_malformed_line_carries_line_number(self, tmp_path):
        p = tmp_path / "eth.txt"
        p.write_text("840 1 8.46 3.59\n840 1 abc 3.59\n")
        with pytest.raises(IngestError, match=r":2:"):
            parse_ethucy(p)

    def test_wrong_field_count(self, tmp_path):
        p = tmp_path / "eth.txt"
        p.write_text("840 1 8.46\n")
        with pytest.raises(IngestError, match="4 fields"):
            parse_ethucy(p)

    def test_non_integer_agent_id(self, tmp_path):
        p = tmp_path / "eth.txt"
        p.write_text("840 1.5 8.46 3.59\n")
        with pytest.raises(IngestError):
            parse_ethucy(p)

    def test_empty_file(self, tmp_path):
        p = tmp_path / "eth.txt"
        p.write_text("")
        assert parse_ethucy(p) == []


class TestDownsample:
    def test_25_to_2p5_keeps_every_tenth(self):
        recs = [RawRecord(f, 1, Position(0.0, 0.0)) for f in range(10)]
        kept = downsample(recs, 25.0, 2.5)
        assert [r.frame for r in kept] == [0]

    def test_identity(self):
        recs = [RawRecord(f, 1, Position(0.0, 0.0)) for f in range(5)]
        assert downsample(recs, 2.5, 2.5) == recs

    def test_non_integer_ratio_rejected(self):
        with pytest.raises(ValueError, match="integer"):
            downsample([], 10.0, 4.0)

    def test_phase(self):
        recs = [RawRecord(f, 1, Position(0.0, 0.0)) for f in range(10)]
        kept = downsample(recs, 10.0, 2.5, phase=2)
        assert [r.frame for r in kept] == [2, 6]


def make_pset(seq_id, k, n, t, rng, agent_ids=None):
    agent_ids = tuple(agent_ids or range(1, n + 1))
    return PredictionSet(seq_id, rng.standard_normal((k, n, t, 2)) * 10,
                         agent_ids=agent_ids)


class TestPredictionDump:
    def test_small_dump_shape(self, tmp_path):
        path = tmp_path / "pred.txt"
        path.write_text(
            "#trajeval-pred v1 K=2 T=2\n"
            "seq:0\t0\t1\t1\t0.0\t0.0\n"
            "seq:0\t0\t1\t2\t1.0\t0.0\n"
            "seq:0\t1\t1\t1\t0.0\t1.0\n"
            "seq:0\t1\t1\t2\t1.0\t1.0\n")
        out = parse_predictions(path)
        assert out["seq:0"].samples.shape == (2, 1, 2, 2)
        assert out["seq:0"].agent_ids == (1,)
        np.testing.assert_array_equal(out["seq:0"].samples[1, 0, 1], [1.0, 1.0])

    def test_duplicate_cell_rejected(self, tmp_path):
        path = tmp_path / "pred.txt"
        path.write_text(
            "#trajeval-pred v1 K=1 T=1\n"
            "s\t0\t1\t1\t0.0\t0.0\n"
            "s\t0\t1\t1\t0.5\t0.5\n")
        with pytest.raises(IngestError, match="duplicate cell"):
            parse_predictions(path)

    def test_missing_cell_named(self, tmp_path):
        path = tmp_path / "pred.txt"
        path.write_text(
            "#trajeval-pred v1 K=1 T=2\n"
            "s\t0\t7\t1\t0.0\t0.0\n")
        with pytest.raises(IngestError, match=r"sample=0, agent=7, t=2"):
            parse_predictions(path)

    def test_header_required(self, tmp_path):
        path = tmp_path / "pred.txt"
        path.write_text("s\t0\t1\t1\t0.0\t0.0\n")
        with pytest.raises(IngestError, match="header"):
            parse_predictions(path)

    def test_wrong_k_vs_header(self, tmp_path):
        path = tmp_path / "pred.txt"
        path.write_text(
            "#trajeval-pred v1 K=2 T=1\n"
            "s\t0\t1\t1\t0.0\t0.0\n")
        with pytest.raises(IngestError, match="K=1"):
            parse_predictions(path)
        out = parse_predictions(path, allow_ragged_k=True)
        assert out["s"].samples.shape == (1, 1, 1, 2)

    def test_unknown_sequence_with_index(self, tmp_path):
        path = tmp_path / "pred.txt"
        path.write_text("#trajeval-pred v1 K=1 T=1\nmystery\t0\t1\t1\t0.0\t0.0\n")
        seq = Sequence("known", "sc", 2.5, (1,), np.zeros((1, 2, 2)), np.zeros((1, 1, 2)))
        with pytest.raises(IngestError, match="unknown sequence id"):
            parse_predictions(path, sequences={"known": seq})

    def test_agent_order_follows_sequence(self, tmp_path):
        rng = np.random.default_rng(3)
        pset = make_pset("s", 1, 2, 1, rng, agent_ids=(9, 4))
        path = tmp_path / "pred.txt"
        write_predictions({"s": pset}, path)
        seq = Sequence("s", "sc", 2.5, (9, 4), np.zeros((2, 2, 2)), np.zeros((2, 1, 2)))
        out = parse_predictions(path, sequences={"s": seq})
        assert out["s"].agent_ids == (9, 4)
        np.testing.assert_array_equal(out["s"].samples, pset.samples)
        # without the index, agents sort by id
        out2 = parse_predictions(path)
        assert out2["s"].agent_ids == (4, 9)
        np.testing.assert_array_equal(out2["s"].samples[:, 0], pset.samples[:, 1])

    def test_round_trip_seeded(self, tmp_path):
        rng = np.random.default_rng(11)
        pred_map = {f"scene:{i}": make_pset(f"scene:{i}", 3, int(rng.integers(1, 5)), 4, rng)
                    for i in range(4)}
        path = tmp_path / "pred.txt"
        write_predictions(pred_map, path)
        back = parse_predictions(path)
        assert set(back) == set(pred_map)
        for sid in pred_map:
            np.testing.assert_array_equal(back[sid].samples, pred_map[sid].samples)
            assert back[sid].agent_ids == pred_map[sid].agent_ids

    def test_order_insensitive(self, tmp_path):
        rng = np.random.default_rng(5)
        pred_map = {"a": make_pset("a", 2, 2, 3, rng), "b": make_pset("b", 2, 1, 3, rng)}
        path = tmp_path / "pred.txt"
        write_predictions(pred_map, path)
        lines = path.read_text().splitlines()
        header, data = lines[0], lines[1:]
        random.Random(0).shuffle(data)
        shuffled = tmp_path / "shuffled.txt"
        shuffled.write_text("\n".join([header] + data) + "\n")
        back = parse_predictions(shuffled)
        for sid in pred_map:
            np.testing.assert_array_equal(back[sid].samples, pred_map[sid].samples)

    @settings(max_examples=30, deadline=None)
    @given(st.data())
    def test_round_trip_property(self, tmp_path_factory, data):
        k = data.draw(st.integers(1, 5))
        n = data.draw(st.integers(1, 4))
        t = data.draw(st.integers(1, 5))
        coords = data.draw(st.lists(
            st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, width=64),
            min_size=k * n * t * 2, max_size=k * n * t * 2))
        samples = np.asarray(coords).reshape(k, n, t, 2)
        pset = PredictionSet("seq", samples, agent_ids=tuple(range(n)))
        path = tmp_path_factory.mktemp("rt") / "pred.txt"
        write_predictions({"seq": pset}, path)
        back = parse_predictions(path)["seq"]
        np.testing.assert_array_equal(back.samples, pset.samples)


class TestDatasetSpec:
    def test_leave_out_scene_must_exist(self):
        with pytest.raises(ValueError, match="leave_out_scene"):
            DatasetSpec("eth", "meters", 25.0, files=("data/eth.txt",), leave_out_scene="zara9")
        spec = DatasetSpec("eth", "meters", 25.0, files=("data/eth.txt",), leave_out_scene="eth")
        assert spec.leave_out_scene == "eth"

    def test_unknown_name(self):
        with pytest.raises(ValueError, match="unknown dataset"):
            DatasetSpec("mars", "meters", 25.0)
