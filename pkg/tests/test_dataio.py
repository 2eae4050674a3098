import tempfile
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lobm import dataio


def _ds(**kw):
    kw.setdefault("m", 4)
    kw.setdefault("n", 2)
    kw.setdefault("records", [(1, 1, 0, 0), (0, 1, 0, 1)])
    return dataio.Dataset(**kw)


class TestDatasetValidation:
    def test_valid(self):
        ds = _ds()
        assert ds.as_array().shape == (2, 4)

    def test_wrong_length(self):
        with pytest.raises(ValueError, match="length"):
            _ds(records=[(1, 1, 0)])

    def test_wrong_weight(self):
        with pytest.raises(ValueError, match="weight"):
            _ds(records=[(1, 1, 1, 0)])

    def test_collision_needs_flag(self):
        with pytest.raises(ValueError, match="collision"):
            _ds(records=[(2, 0, 0, 0)])
        ds = _ds(records=[(2, 0, 0, 0)], collision_flag=True)
        assert ds.records == [(2, 0, 0, 0)]


class TestRoundTrip:
    def test_write_read(self, tmp_path):
        ds = _ds(provenance=["generator test", "weights n=2"])
        p = tmp_path / "d.txt"
        dataio.write_dataset(ds, p)
        back = dataio.read_dataset(p)
        assert back.m == ds.m and back.n == ds.n
        assert back.records == ds.records
        assert back.collision_flag == ds.collision_flag
        assert back.provenance == ds.provenance

    def test_byte_identical_rewrite(self, tmp_path):
        ds = _ds(provenance=["p1"])
        a, b = tmp_path / "a.txt", tmp_path / "b.txt"
        dataio.write_dataset(ds, a)
        dataio.write_dataset(dataio.read_dataset(a), b)
        assert a.read_bytes() == b.read_bytes()

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.integers(0, 5), min_size=2, max_size=30, unique=True))
    def test_roundtrip_property(self, picks):
        m, n = 6, 3
        rng = np.random.default_rng(sum(picks))
        records = [tuple(np.isin(np.arange(m), rng.permutation(m)[:n]).astype(int))
                   for _ in range(len(picks))]
        ds = dataio.Dataset(m=m, n=n, records=records)
        with tempfile.TemporaryDirectory() as tmp:
            p = Path(tmp) / "r.txt"
            dataio.write_dataset(ds, p)
            assert dataio.read_dataset(p).records == ds.records


class TestReadErrors:
    def test_empty_file(self, tmp_path):
        p = tmp_path / "e.txt"
        p.write_text("")
        with pytest.raises(ValueError, match="empty"):
            dataio.read_dataset(p)

    def test_malformed_header(self, tmp_path):
        p = tmp_path / "h.txt"
        p.write_text("four two\n1100\n")
        with pytest.raises(ValueError, match=":1:"):
            dataio.read_dataset(p)

    def test_bad_record_reports_line(self, tmp_path):
        p = tmp_path / "b.txt"
        p.write_text("4 2 0\n1100\n11x0\n")
        with pytest.raises(ValueError, match=":3:"):
            dataio.read_dataset(p)

    def test_weight_mismatch_reports_line(self, tmp_path):
        p = tmp_path / "w.txt"
        p.write_text("4 2 0\n1100\n1110\n")
        with pytest.raises(ValueError, match=":3:.*weight"):
            dataio.read_dataset(p)

    def test_collision_digit_without_flag(self, tmp_path):
        p = tmp_path / "c.txt"
        p.write_text("4 2 0\n2000\n")
        with pytest.raises(ValueError, match="collision"):
            dataio.read_dataset(p)


class TestIngestRankings:
    def test_basic(self):
        ds = dataio.ingest_rankings([[3, 1, 2], [2, 4, 1]], m=4, n=2)
        assert ds.records == [(1, 0, 1, 0), (0, 1, 0, 1)]

    def test_short_row(self):
        with pytest.raises(ValueError, match="need 2"):
            dataio.ingest_rankings([[3]], m=4, n=2)

    def test_unknown_id(self):
        with pytest.raises(ValueError, match="unknown item"):
            dataio.ingest_rankings([[5, 1]], m=4, n=2)

    def test_duplicate_in_top(self):
        with pytest.raises(ValueError, match="duplicate"):
            dataio.ingest_rankings([[1, 1]], m=4, n=2)


class TestIngestExpression:
    def test_magnitude_ordering(self):
        rows = [{"a": -5.0, "b": 1.0, "c": 2.0}]
        ds = dataio.ingest_expression_table(rows, ["a", "b", "c"], n=2)
        assert ds.records == [(1, 0, 1)]

    def test_signed_ordering(self):
        rows = [{"a": -5.0, "b": 1.0, "c": 2.0}]
        ds = dataio.ingest_expression_table(rows, ["a", "b", "c"], n=2, signed=True)
        assert ds.records == [(0, 1, 1)]

    def test_tie_breaks_to_lower_index(self):
        rows = [{"a": 1.0, "b": 1.0, "c": 1.0}]
        ds = dataio.ingest_expression_table(rows, ["a", "b", "c"], n=2)
        assert ds.records == [(1, 1, 0)]

    def test_missing_score(self):
        with pytest.raises(ValueError, match="missing"):
            dataio.ingest_expression_table([{"a": 1.0}], ["a", "b"], n=1)


class TestExternalReaders:
    def test_preflib(self, tmp_path):
        p = tmp_path / "soc.txt"
        p.write_text("# metadata\n2: 3,1,2\n1: 2,3,1\n")
        rows = dataio.read_preflib_rankings(p)
        assert rows == [[3, 1, 2], [3, 1, 2], [2, 3, 1]]

    def test_preflib_malformed(self, tmp_path):
        p = tmp_path / "bad.txt"
        p.write_text("x: 1,2\n")
        with pytest.raises(ValueError, match="malformed"):
            dataio.read_preflib_rankings(p)

    def test_ranking_csv(self, tmp_path):
        p = tmp_path / "r.csv"
        p.write_text("3,1,2\n2,4,1\n")
        assert dataio.read_ranking_csv(p) == [[3, 1, 2], [2, 4, 1]]

    def test_expression_csv(self, tmp_path):
        p = tmp_path / "e.csv"
        p.write_text("g1,g2\n1.5,-2.0\n0.0,3.0\n")
        universe, rows = dataio.read_expression_csv(p)
        assert universe == ["g1", "g2"]
        assert rows == [{"g1": 1.5, "g2": -2.0}, {"g1": 0.0, "g2": 3.0}]


class TestShuffleSplit:
    def test_partition_and_determinism(self):
        records = [tuple(np.isin(np.arange(5), [i % 5, (i + 1) % 5]).astype(int))
                   for i in range(20)]
        ds = dataio.Dataset(m=5, n=2, records=records)
        tr1, te1 = dataio.shuffle_split(ds, seed=7)
        tr2, te2 = dataio.shuffle_split(ds, seed=7)
        assert tr1.records == tr2.records and te1.records == te2.records
        assert len(tr1.records) == 16 and len(te1.records) == 4
        assert sorted(tr1.records + te1.records) == sorted(records)

    def test_different_seeds_differ(self):
        records = [tuple(np.isin(np.arange(6), [i % 6, (i + 3) % 6]).astype(int))
                   for i in range(30)]
        ds = dataio.Dataset(m=6, n=2, records=records)
        tr1, _ = dataio.shuffle_split(ds, seed=1)
        tr2, _ = dataio.shuffle_split(ds, seed=2)
        assert tr1.records != tr2.records
