
import numpy as np
import pytest

from ssmcell.engine import Event, EventKind, run
from ssmcell.tracefile import (
    TraceFileError,
    emit_profile_data,
    read_events,
    read_trace,
    trace_lines,
    write_events,
    write_trace,
)
from helpers import tiny_scenario


@pytest.fixture(scope="module")
def short_result():
    return run(tiny_scenario(duration=3.0))


class TestTraceRoundTrip:
    def test_write_read_identity(self, short_result, tmp_path):
        path = tmp_path / "trace.csv"
        write_trace(short_result.trace, path, {"scenario": "tiny"})
        back = read_trace(path)
        assert len(back) == len(short_result.trace)
        for a, b in zip(short_result.trace, back):
            assert a.t == b.t
            assert np.array_equal(a.q, b.q)
            assert np.array_equal(a.qdot, b.qdot)
            assert a.fraction == b.fraction
            assert a.mode == b.mode and a.source == b.source
            assert a.d_i == b.d_i and a.dyn_msd == b.dyn_msd
            assert a.pending == b.pending

    def test_header_mismatch_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,3\n", encoding="utf-8")
        with pytest.raises(TraceFileError):
            read_trace(path)

    def test_malformed_row_names_line(self, short_result, tmp_path):
        path = tmp_path / "trace.csv"
        lines = list(trace_lines(short_result.trace[:3]))
        lines[2] = lines[2].replace(lines[2].split(",")[0], "not_a_number", 1)
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        with pytest.raises(TraceFileError) as exc:
            read_trace(path)
        assert ":3:" in str(exc.value)

    def test_deterministic_bytes(self, short_result, tmp_path):
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        write_trace(short_result.trace, p1)
        write_trace(short_result.trace, p2)
        assert p1.read_bytes() == p2.read_bytes()


class TestEvents:
    def test_round_trip(self, tmp_path):
        events = [
            Event(0.5, EventKind.ZONE_ENTER, "zone=warning;human=0"),
            Event(0.52, EventKind.MODE_SWITCH, "mode=collaborative;fraction=0.5"),
        ]
        path = tmp_path / "events.csv"
        write_events(events, path)
        assert read_events(path) == events

    def test_missing_header_rejected(self, tmp_path):
        path = tmp_path / "events.csv"
        path.write_text("nope\n", encoding="utf-8")
        with pytest.raises(TraceFileError):
            read_events(path)


class TestProfileData:
    def test_speeds_match_rows(self, short_result, tmp_path):
        path = tmp_path / "profile.csv"
        emit_profile_data(short_result.trace, path)
        lines = [l for l in path.read_text().splitlines() if l and not l.startswith("#")]
        assert lines[0] == "t_s,commanded_speed_m_s"
        assert len(lines) - 1 == len(short_result.trace)
        for line, rowd in zip(lines[1:], short_result.trace):
            t_text, v_text = line.split(",")
            assert float(t_text) == rowd.t
            assert float(v_text) == rowd.v_cap

    def test_zone_annotations_present(self, short_result, tmp_path):
        path = tmp_path / "profile.csv"
        emit_profile_data(short_result.trace, path)
        annotations = [l for l in path.read_text().splitlines() if l.startswith("# interval")]
        assert annotations

    def test_empty_trace_header_only(self, tmp_path):
        path = tmp_path / "profile.csv"
        emit_profile_data([], path)
        assert path.read_text() == "t_s,commanded_speed_m_s\n"
