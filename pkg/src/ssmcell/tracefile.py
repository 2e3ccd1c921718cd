"""Trace and event file serialization: one CSV row per control tick plus a sidecar."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .control import CommandSource, ModeKind
from .engine import Event, EventKind, TraceRow
from .zones import Zone

TRACE_COLUMNS = (
    ["t"]
    + [f"q{i + 1}" for i in range(6)]
    + [f"qd{i + 1}" for i in range(6)]
    + [
        "tcp_x",
        "tcp_y",
        "tcp_z",
        "tcp_speed",
        "human_x",
        "human_y",
        "human_speed",
        "occ_left",
        "occ_right",
        "d_i",
        "dyn_msd",
        "mode",
        "fraction",
        "v_cap",
        "v_task",
        "source",
        "damped",
        "pending",
        "lyap",
    ]
)


class TraceFileError(ValueError):
    pass


def _f(x: float) -> str:
    # repr round-trips doubles exactly and deterministically
    return repr(float(x))


def trace_lines(trace: list[TraceRow], metadata: dict | None = None):
    if metadata:
        for k, v in metadata.items():
            yield f"# {k}={v}"
    yield ",".join(TRACE_COLUMNS)
    for r in trace:
        fields = (
            [_f(r.t)]
            + [_f(v) for v in r.q]
            + [_f(v) for v in r.qdot]
            + [_f(r.tcp[0]), _f(r.tcp[1]), _f(r.tcp[2]), _f(r.tcp_speed)]
            + [_f(r.human_x), _f(r.human_y), _f(r.human_speed)]
            + [r.occ_left.name.lower(), r.occ_right.name.lower()]
            + [_f(r.d_i), _f(r.dyn_msd), r.mode.value]
            + [_f(r.fraction), _f(r.v_cap), _f(r.v_task)]
            + [r.source.value, str(int(r.damped)), str(int(r.pending)), _f(r.lyap)]
        )
        yield ",".join(fields)


def write_trace(trace: list[TraceRow], path, metadata: dict | None = None):
    Path(path).write_text("\n".join(trace_lines(trace, metadata)) + "\n", encoding="utf-8")


def read_trace(path) -> list[TraceRow]:
    rows = []
    header = None
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line or line.startswith("#"):
            continue
        if header is None:
            header = line.split(",")
            if header != TRACE_COLUMNS:
                raise TraceFileError(f"{path}: unexpected trace columns")
            continue
        parts = line.split(",")
        if len(parts) != len(TRACE_COLUMNS):
            raise TraceFileError(f"{path}:{lineno}: wrong field count")
        try:
            rows.append(
                TraceRow(
                    t=float(parts[0]),
                    q=np.array([float(x) for x in parts[1:7]]),
                    qdot=np.array([float(x) for x in parts[7:13]]),
                    tcp=np.array([float(x) for x in parts[13:16]]),
                    tcp_speed=float(parts[16]),
                    human_x=float(parts[17]),
                    human_y=float(parts[18]),
                    human_speed=float(parts[19]),
                    occ_left=Zone[parts[20].upper()],
                    occ_right=Zone[parts[21].upper()],
                    d_i=float(parts[22]),
                    dyn_msd=float(parts[23]),
                    mode=ModeKind(parts[24]),
                    fraction=float(parts[25]),
                    v_cap=float(parts[26]),
                    v_task=float(parts[27]),
                    source=CommandSource(parts[28]),
                    damped=bool(int(parts[29])),
                    pending=bool(int(parts[30])),
                    lyap=float(parts[31]),
                )
            )
        except (ValueError, KeyError) as exc:
            raise TraceFileError(f"{path}:{lineno}: {exc}") from exc
    if header is None:
        raise TraceFileError(f"{path}: no header row")
    return rows


def write_events(events: list[Event], path):
    lines = ["t,kind,payload"]
    lines.extend(f"{_f(e.t)},{e.kind.value},{e.payload}" for e in events)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_events(path) -> list[Event]:
    events = []
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "t,kind,payload":
        raise TraceFileError(f"{path}: missing events header")
    for lineno, line in enumerate(lines[1:], 2):
        if not line:
            continue
        parts = line.split(",", 2)
        if len(parts) != 3:
            raise TraceFileError(f"{path}:{lineno}: wrong field count")
        try:
            events.append(Event(t=float(parts[0]), kind=EventKind(parts[1]), payload=parts[2]))
        except ValueError as exc:
            raise TraceFileError(f"{path}:{lineno}: {exc}") from exc
    return events


def emit_profile_data(trace: list[TraceRow], path):
    """Two-column commanded-speed series plus zone-interval annotations for plotting."""
    lines = ["t_s,commanded_speed_m_s"]
    lines.extend(f"{_f(r.t)},{_f(r.v_cap)}" for r in trace)
    if trace:
        dt = trace[1].t - trace[0].t if len(trace) > 1 else 0.0
        start = trace[0]
        current = max(start.occ_left, start.occ_right)
        t0 = start.t
        annotations = []
        for r in trace[1:]:
            zone = max(r.occ_left, r.occ_right)
            if zone != current:
                annotations.append((t0, r.t, current))
                current, t0 = zone, r.t
        annotations.append((t0, trace[-1].t + dt, current))
        for a, b, zone in annotations:
            lines.append(f"# interval,{zone.name.lower()},{_f(a)},{_f(b)}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
