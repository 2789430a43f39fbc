import gzip
import io
from datetime import datetime

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dpsim.dataset import (
    NodeSeries,
    Reading,
    SynthKind,
    SynthSpec,
    clean,
    load_readings,
    parse_readings,
    series_digest,
    slice_series,
    synth,
    write_series_csv,
)

LINE = "2004-02-28 00:59:16.02785 3 1 19.3024 38.4629 45.08 2.68742"


class TestParse:
    def test_reference_line(self):
        res = parse_readings([LINE])
        assert res.rejects == []
        (r,) = res.readings
        assert (r.node_id, r.epoch, r.temperature) == (1, 3, 19.3024)
        assert r.timestamp == datetime(2004, 2, 28, 0, 59, 16, 27850)

    def test_wrong_field_count(self):
        res = parse_readings(["2004-02-28 00:59:16.02785 3 1 19.3024 38.4629"])
        assert res.readings == [] and res.rejects[0][0] == 1
        assert "fields" in res.rejects[0][1]

    @pytest.mark.parametrize("mote", [0, 55])
    def test_mote_out_of_range(self, mote):
        res = parse_readings([f"2004-02-28 00:59:16.02785 3 {mote} 19.3 38.4 45.08 2.68"])
        assert res.readings == [] and "range" in res.rejects[0][1]

    def test_whole_seconds_and_bad_numbers(self):
        res = parse_readings([
            "2004-03-01 10:00:00 7 2 20.1 40 50 2.7",
            "2004-03-01 10:00:31 8 2 abc 40 50 2.7",
            "2004-03-01 10:00:31 8 2 20.1 40 nan-ish 2.7",
            b"2004-03-01 10:01:02 9 2 20.2 40 50 2.7\n",
        ])
        assert [r.epoch for r in res.readings] == [7, 9]
        assert [n for n, _ in res.rejects] == [2, 3]

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.text(max_size=80).filter(lambda s: "\n" not in s and "\r" not in s), max_size=30))
    def test_totality(self, lines):
        res = parse_readings(lines)
        assert res.lines == len(lines)

    @settings(max_examples=100, deadline=None)
    @given(st.binary(max_size=400))
    def test_bytes_never_crash(self, blob):
        lines = blob.splitlines(keepends=True)
        assert parse_readings(lines).lines == len(lines)

    def test_gzip(self, tmp_path):
        p = tmp_path / "data.txt.gz"
        with gzip.open(p, "wt") as fh:
            fh.write(LINE + "\n" + LINE.replace(" 3 1 ", " 4 1 ") + "\n")
        assert [r.epoch for r in load_readings(p).readings] == [3, 4]


def readings(node, pairs):
    return [Reading(node, e, t) for e, t in pairs]


class TestClean:
    def test_keep_first_duplicate(self):
        res = clean(readings(1, [(7, 20.1), (7, 20.2), (6, 19.0)]))
        assert res.series[1].epochs == (6, 7)
        assert res.series[1].temperatures == (19.0, 20.1)
        assert res.duplicates[1] == 1

    def test_bounds(self):
        res = clean(readings(2, [(1, 20.0), (2, 122.15), (3, -40.0)]))
        assert res.series[2].temperatures == (20.0,)
        assert res.out_of_bounds[2] == 2

    def test_custom_bounds(self):
        res = clean(readings(2, [(1, 20.0), (2, 122.15)]), bounds=(-50, 200))
        assert len(res.series[2]) == 2

    def test_clean_input_unchanged(self):
        rs = readings(3, [(1, 20.0), (2, 20.5), (5, 21.0)])
        res = clean(rs)
        assert res.series[3].to_readings() == rs
        assert res.drops(3) == 0

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.tuples(st.integers(1, 4), st.integers(0, 30), st.floats(-50, 150)), max_size=80))
    def test_idempotent_and_monotone(self, rows):
        first = clean([Reading(n, e, t) for n, e, t in rows])
        flat = [r for s in first.series.values() for r in s.to_readings()]
        second = clean(flat)
        assert second.series == first.series
        for s in first.series.values():
            assert all(a < b for a, b in zip(s.epochs, s.epochs[1:]))


class TestSynth:
    def test_constant(self):
        assert synth(SynthSpec(SynthKind.CONSTANT, 5, level=21)).temperatures == (21.0,) * 5

    def test_ramp(self):
        assert synth(SynthSpec("Ramp", 4, level=0, slope=1)).temperatures == (0.0, 1.0, 2.0, 3.0)

    @pytest.mark.parametrize("kind", ["RandomWalk", "SineNoise"])
    def test_seeded(self, kind):
        a = synth(SynthSpec(kind, 200, seed=11, noise_sd=0.1))
        b = synth(SynthSpec(kind, 200, seed=11, noise_sd=0.1))
        c = synth(SynthSpec(kind, 200, seed=12, noise_sd=0.1))
        assert a == b and a != c

    def test_invalid(self):
        with pytest.raises(ValueError):
            synth(SynthSpec("Constant", 0))
        with pytest.raises(ValueError):
            synth(SynthSpec("RandomWalk", 10, step_sd=-1))


def test_normalized_csv_and_digest():
    series = {2: NodeSeries(2, (0, 1), (20.0, 20.5)), 1: NodeSeries(1, (3,), (19.25,))}
    buf = io.StringIO()
    write_series_csv(series, buf)
    assert buf.getvalue() == "node_id,epoch,temperature\n1,3,19.25\n2,0,20.0\n2,1,20.5\n"
    assert series_digest(series) == series_digest(dict(reversed(list(series.items()))))
    assert slice_series(series[2], 0, 1) == NodeSeries(2, (0,), (20.0,))


def test_ingestion_digest_reproducible(tmp_path):
    lines = [
        f"2004-03-01 10:{i // 60:02d}:{i % 60:02d}.5 {i} {1 + i % 3} {20 + (i % 7) / 10} 40 50 2.7"
        for i in range(300)
    ]
    p = tmp_path / "slice.txt"
    p.write_text("\n".join(lines) + "\n")
    digests = {series_digest(clean(load_readings(p).readings).series) for _ in range(3)}
    assert len(digests) == 1
