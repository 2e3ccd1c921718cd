"""Scenario definition: sectioned key/value files, validation, script interpolation."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .perception import DEFAULT_FOOTPRINT_RADIUS, DEFAULT_STATURE, HumanState, Posture
from .separation import SeparationInputs
from .zones import (
    DANGER_MARGIN,
    DEFAULT_HEIGHT_BAND,
    DEFAULT_LASER_MOUNT_HEIGHT,
    DEFAULT_QUADRANT_HALF_WIDTH,
    DEFAULT_SCALE_FLOOR_DISTANCE,
    SafetyParams,
    ZoneLayout,
    build_zone_layout,
    compute_msd_static,
)


class ScenarioError(ValueError):
    """Validation failure(s) with line/field context."""

    def __init__(self, errors):
        self.errors = list(errors) if isinstance(errors, (list, tuple)) else [errors]
        super().__init__("; ".join(str(e) for e in self.errors))


@dataclass(frozen=True)
class Entry:
    key: str
    value: str
    line: int


def parse_sections(source) -> dict[str, list[Entry]]:
    """Parse '[section]' / 'key = value' text; '#' starts a comment."""
    if isinstance(source, (str, Path)) and "\n" not in str(source):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = str(source)
    sections: dict[str, list[Entry]] = {}
    current = None
    errors = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip().lower()
            sections.setdefault(current, [])
            continue
        if "=" not in line:
            errors.append(f"line {lineno}: expected 'key = value', got {line!r}")
            continue
        if current is None:
            errors.append(f"line {lineno}: entry before any [section]")
            continue
        key, value = line.split("=", 1)
        sections[current].append(Entry(key.strip().lower(), value.strip(), lineno))
    if errors:
        raise ScenarioError(errors)
    return sections


class SimMode(enum.Enum):
    AUTONOMOUS = "autonomous"
    TRADITIONAL = "traditional"
    PROPOSED = "proposed"


@dataclass(frozen=True)
class HumanWaypoint:
    t: float
    x: float
    y: float
    posture: Posture = Posture.STANDING


@dataclass(frozen=True)
class HumanScript:
    """Timed ground waypoints with piecewise-linear motion and posture switches."""

    waypoints: tuple[HumanWaypoint, ...]
    footprint_radius: float = DEFAULT_FOOTPRINT_RADIUS
    stature: float = DEFAULT_STATURE

    def state_at(self, t: float) -> HumanState:
        wps = self.waypoints
        if t <= wps[0].t:
            return self._make(wps[0].x, wps[0].y, math.pi, 0.0, wps[0].posture)
        heading = math.pi
        for i in range(len(wps) - 1):
            a, b = wps[i], wps[i + 1]
            dx, dy = b.x - a.x, b.y - a.y
            seg_len = math.hypot(dx, dy)
            if seg_len > 0:
                seg_heading = math.atan2(dy, dx)
            else:
                seg_heading = heading
            if t < b.t:  # segment [a.t, b.t); posture switches exactly at waypoint times
                u = (t - a.t) / (b.t - a.t)
                speed = seg_len / (b.t - a.t)
                return self._make(
                    a.x + u * dx, a.y + u * dy, seg_heading, speed, a.posture
                )
            heading = seg_heading
        last = wps[-1]
        return self._make(last.x, last.y, heading, 0.0, last.posture)

    def _make(self, x, y, heading, speed, posture) -> HumanState:
        return HumanState(
            ground=(x, y),
            heading=heading,
            walk_speed=speed,
            footprint_radius=self.footprint_radius,
            posture=posture,
            stature=self.stature,
        )

    @property
    def end_time(self) -> float:
        return self.waypoints[-1].t


@dataclass(frozen=True)
class TaskStep:
    """One pick/place step: move the TCP to target, then process for dwell seconds."""

    name: str
    target: tuple[float, float, float]
    dwell: float
    modes: tuple[str, ...] = ()  # empty = active in every mode

    def active_in(self, mode: SimMode) -> bool:
        return not self.modes or mode.value in self.modes


@dataclass(frozen=True)
class RobotTask:
    steps: tuple[TaskStep, ...]
    cycles: int = 1

    def steps_for(self, mode: SimMode) -> list[TaskStep]:
        return [s for s in self.steps if s.active_in(mode)]


@dataclass(frozen=True)
class LayoutConfig:
    workspace_length: float = 1.5
    workspace_width: float = 0.9
    quadrant_half_width: float = DEFAULT_QUADRANT_HALF_WIDTH
    danger_margin: float = DANGER_MARGIN
    laser_mount_height: float = DEFAULT_LASER_MOUNT_HEIGHT
    height_min: float = DEFAULT_HEIGHT_BAND[0]
    height_max: float = DEFAULT_HEIGHT_BAND[1]
    scale_floor_distance: float = DEFAULT_SCALE_FLOOR_DISTANCE


@dataclass(frozen=True)
class GainsConfig:
    kp: float = 20.0
    kd: float = 2.0
    task_gain: float = 1.0
    k0: float = 0.05
    ks_floor: float = 0.3
    accel_limit: float = 2.0


@dataclass(frozen=True)
class ScannerPose:
    x: float
    y: float
    heading: float


@dataclass(frozen=True)
class Scenario:
    name: str
    mode: SimMode
    duration: float
    seed: int
    humans: tuple[HumanScript, ...]
    task: RobotTask
    q0: tuple[float, float, float, float, float, float]
    scanners: tuple[ScannerPose, ...]
    safety: SafetyParams = SafetyParams()
    separation: SeparationInputs = SeparationInputs()
    layout_config: LayoutConfig = LayoutConfig()
    gains_config: GainsConfig = GainsConfig()
    control_period: float = 0.002
    nominal_speed: float = 1.0
    robot_model: str = "default"
    sequential: bool = False
    noise: float = 0.0
    parallelism: float = 1.0
    stall_threshold: float = 5.0

    def build_layout(self) -> ZoneLayout:
        lc = self.layout_config
        return build_zone_layout(
            compute_msd_static(self.safety),
            lc.workspace_length,
            lc.workspace_width,
            lc.quadrant_half_width,
            danger_margin=lc.danger_margin,
            height_band=(lc.height_min, lc.height_max),
            laser_mount_height=lc.laser_mount_height,
            scale_floor_distance=lc.scale_floor_distance,
        )

    def with_mode(self, mode: SimMode) -> "Scenario":
        return replace(self, mode=mode)


def _validate_scenario(sc: Scenario) -> list[str]:
    errors = []
    if sc.duration <= 0:
        errors.append("scenario: duration must be positive")
    if sc.control_period <= 0:
        errors.append("scenario: control_period must be positive")
    for h, script in enumerate(sc.humans):
        if not script.waypoints:
            errors.append(f"human {h}: no waypoints")
            continue
        for i in range(1, len(script.waypoints)):
            if script.waypoints[i].t <= script.waypoints[i - 1].t:
                errors.append(
                    f"human {h}: waypoint {i} timestamp {script.waypoints[i].t} "
                    f"not after waypoint {i - 1}"
                )
        if script.end_time > sc.duration:
            errors.append(
                f"human {h}: script ends at {script.end_time}s after the "
                f"{sc.duration}s run"
            )
    if not sc.task.steps:
        errors.append("task: no steps")
    if sc.task.cycles < 1:
        errors.append("task: cycles must be >= 1")
    try:
        sc.build_layout()
    except ValueError as exc:
        errors.append(f"layout: {exc}")
    return errors


_POSTURES = {p.value: p for p in Posture}
_MODES = {m.value: m for m in SimMode}


def _floats(entry: Entry, n: int, errors: list, what: str) -> list[float] | None:
    parts = entry.value.split()
    if len(parts) != n:
        errors.append(f"line {entry.line}: {what} needs {n} values, got {len(parts)}")
        return None
    try:
        return [float(p) for p in parts]
    except ValueError:
        errors.append(f"line {entry.line}: {what} has a non-numeric value")
        return None


class _SectionReader:
    def __init__(self, entries: list[Entry], section: str, errors: list):
        self.map = {}
        self.section = section
        self.errors = errors
        for e in entries:
            self.map.setdefault(e.key, []).append(e)

    def scalar(self, key, cast=float, default=None):
        if key not in self.map:
            if default is None:
                self.errors.append(f"[{self.section}]: missing required key '{key}'")
            return default
        e = self.map[key][-1]
        try:
            if cast is bool:
                return e.value.strip().lower() in ("1", "true", "yes", "on")
            return cast(e.value)
        except ValueError:
            self.errors.append(f"line {e.line}: cannot parse '{key}' as {cast.__name__}")
            return default

    def rows(self, key) -> list[Entry]:
        return self.map.get(key, [])


def parse_scenario(source) -> Scenario:
    """Parse and fully validate a scenario file; raises ScenarioError with all problems."""
    sections = parse_sections(source)
    errors: list[str] = []

    def reader(name) -> _SectionReader:
        return _SectionReader(sections.get(name, []), name, errors)

    sc = reader("scenario")
    if "scenario" not in sections:
        raise ScenarioError(["missing [scenario] section"])
    name = sc.scalar("name", str, "unnamed")
    mode_text = sc.scalar("mode", str, "proposed")
    mode = _MODES.get(mode_text)
    if mode is None:
        errors.append(f"[scenario]: unknown mode '{mode_text}'")
        mode = SimMode.PROPOSED
    duration = sc.scalar("duration", float, 0.0)
    seed = sc.scalar("seed", int, 0)
    control_period = sc.scalar("control_period", float, 0.002)
    nominal_speed = sc.scalar("nominal_speed", float, 1.0)
    sequential = sc.scalar("sequential", bool, False)
    noise = sc.scalar("noise", float, 0.0)
    parallelism = sc.scalar("parallelism", float, 1.0)
    stall_threshold = sc.scalar("stall_threshold", float, 5.0)

    sa = reader("safety")
    safety = SafetyParams(
        approach_speed=sa.scalar("approach_speed", float, 1.6),
        stop_time=sa.scalar("stop_time", float, 0.5),
        intrusion=sa.scalar("intrusion", float, 0.85),
        uncertainty=sa.scalar("uncertainty", float, 0.1),
    )
    se = reader("separation")
    separation = SeparationInputs(
        robot_reaction_time=se.scalar("robot_reaction_time", float, 0.1),
        perception_response_time=se.scalar("perception_response_time", float, 0.064),
        intrusion=se.scalar("intrusion", float, 0.2),
        robot_uncertainty=se.scalar("robot_uncertainty", float, 0.05),
        human_uncertainty=se.scalar("human_uncertainty", float, 0.05),
    )
    la = reader("layout")
    layout_config = LayoutConfig(
        workspace_length=la.scalar("workspace_length", float, 1.5),
        workspace_width=la.scalar("workspace_width", float, 0.9),
        quadrant_half_width=la.scalar("quadrant_half_width", float, DEFAULT_QUADRANT_HALF_WIDTH),
        danger_margin=la.scalar("danger_margin", float, DANGER_MARGIN),
        laser_mount_height=la.scalar("laser_mount_height", float, DEFAULT_LASER_MOUNT_HEIGHT),
        height_min=la.scalar("height_min", float, DEFAULT_HEIGHT_BAND[0]),
        height_max=la.scalar("height_max", float, DEFAULT_HEIGHT_BAND[1]),
        scale_floor_distance=la.scalar(
            "scale_floor_distance", float, DEFAULT_SCALE_FLOOR_DISTANCE
        ),
    )
    ga = reader("gains")
    gains_config = GainsConfig(
        kp=ga.scalar("kp", float, 20.0),
        kd=ga.scalar("kd", float, 2.0),
        task_gain=ga.scalar("task_gain", float, 1.0),
        k0=ga.scalar("k0", float, 0.05),
        ks_floor=ga.scalar("ks_floor", float, 0.3),
        accel_limit=ga.scalar("accel_limit", float, 2.0),
    )

    ro = reader("robot")
    robot_model = ro.scalar("model", str, "default")
    q0_rows = ro.rows("q0")
    q0 = (0.0,) * 6
    if q0_rows:
        vals = _floats(q0_rows[-1], 6, errors, "q0")
        if vals:
            q0 = tuple(vals)

    scanners = []
    for e in reader("scanners").rows("scanner"):
        vals = _floats(e, 3, errors, "scanner")
        if vals:
            scanners.append(ScannerPose(*vals))

    humans = []
    for sec_name in sorted(s for s in sections if s.startswith("human")):
        hr = _SectionReader(sections[sec_name], sec_name, errors)
        waypoints = []
        for idx, e in enumerate(hr.rows("waypoint")):
            parts = e.value.split()
            if len(parts) != 4:
                errors.append(f"line {e.line}: waypoint {idx} needs 't x y posture'")
                continue
            try:
                t, x, y = float(parts[0]), float(parts[1]), float(parts[2])
            except ValueError:
                errors.append(f"line {e.line}: waypoint {idx} has a non-numeric value")
                continue
            posture = _POSTURES.get(parts[3].lower())
            if posture is None:
                errors.append(f"line {e.line}: waypoint {idx} unknown posture '{parts[3]}'")
                continue
            waypoints.append(HumanWaypoint(t, x, y, posture))
        humans.append(
            HumanScript(
                waypoints=tuple(waypoints),
                footprint_radius=hr.scalar("footprint_radius", float, DEFAULT_FOOTPRINT_RADIUS),
                stature=hr.scalar("stature", float, DEFAULT_STATURE),
            )
        )

    steps = []
    ta = reader("task")
    cycles = ta.scalar("cycles", int, 1)
    for idx, e in enumerate(ta.rows("step")):
        parts = e.value.split()
        if len(parts) not in (5, 6):
            errors.append(f"line {e.line}: step {idx} needs 'name x y z dwell [modes]'")
            continue
        try:
            target = (float(parts[1]), float(parts[2]), float(parts[3]))
            dwell = float(parts[4])
        except ValueError:
            errors.append(f"line {e.line}: step {idx} has a non-numeric value")
            continue
        modes: tuple[str, ...] = ()
        if len(parts) == 6:
            modes = tuple(m.strip() for m in parts[5].split(","))
            unknown = [m for m in modes if m not in _MODES]
            if unknown:
                errors.append(f"line {e.line}: step {idx} unknown modes {unknown}")
                continue
        steps.append(TaskStep(name=parts[0], target=target, dwell=dwell, modes=modes))

    scenario = Scenario(
        name=name,
        mode=mode,
        duration=duration,
        seed=seed,
        humans=tuple(humans),
        task=RobotTask(steps=tuple(steps), cycles=cycles),
        q0=q0,
        scanners=tuple(scanners),
        safety=safety,
        separation=separation,
        layout_config=layout_config,
        gains_config=gains_config,
        control_period=control_period,
        nominal_speed=nominal_speed,
        robot_model=robot_model,
        sequential=sequential,
        noise=noise,
        parallelism=parallelism,
        stall_threshold=stall_threshold,
    )
    errors.extend(_validate_scenario(scenario))
    if errors:
        raise ScenarioError(errors)
    return scenario


def serialize_scenario(sc: Scenario) -> str:
    """Canonical text form; parse(serialize(sc)) == sc."""
    out = []

    def kv(key, value):
        if isinstance(value, float):
            value = repr(value)
        out.append(f"{key} = {value}")

    out.append("[scenario]")
    kv("name", sc.name)
    kv("mode", sc.mode.value)
    kv("duration", sc.duration)
    kv("seed", sc.seed)
    kv("control_period", sc.control_period)
    kv("nominal_speed", sc.nominal_speed)
    kv("sequential", "true" if sc.sequential else "false")
    kv("noise", sc.noise)
    kv("parallelism", sc.parallelism)
    kv("stall_threshold", sc.stall_threshold)
    out.append("")
    out.append("[safety]")
    kv("approach_speed", sc.safety.approach_speed)
    kv("stop_time", sc.safety.stop_time)
    kv("intrusion", sc.safety.intrusion)
    kv("uncertainty", sc.safety.uncertainty)
    out.append("")
    out.append("[separation]")
    kv("robot_reaction_time", sc.separation.robot_reaction_time)
    kv("perception_response_time", sc.separation.perception_response_time)
    kv("intrusion", sc.separation.intrusion)
    kv("robot_uncertainty", sc.separation.robot_uncertainty)
    kv("human_uncertainty", sc.separation.human_uncertainty)
    out.append("")
    out.append("[layout]")
    lc = sc.layout_config
    kv("workspace_length", lc.workspace_length)
    kv("workspace_width", lc.workspace_width)
    kv("quadrant_half_width", lc.quadrant_half_width)
    kv("danger_margin", lc.danger_margin)
    kv("laser_mount_height", lc.laser_mount_height)
    kv("height_min", lc.height_min)
    kv("height_max", lc.height_max)
    kv("scale_floor_distance", lc.scale_floor_distance)
    out.append("")
    out.append("[gains]")
    gc = sc.gains_config
    kv("kp", gc.kp)
    kv("kd", gc.kd)
    kv("task_gain", gc.task_gain)
    kv("k0", gc.k0)
    kv("ks_floor", gc.ks_floor)
    kv("accel_limit", gc.accel_limit)
    out.append("")
    out.append("[robot]")
    kv("model", sc.robot_model)
    kv("q0", " ".join(repr(v) for v in sc.q0))
    out.append("")
    out.append("[scanners]")
    for s in sc.scanners:
        kv("scanner", f"{s.x!r} {s.y!r} {s.heading!r}")
    for i, human in enumerate(sc.humans):
        out.append("")
        out.append("[human]" if i == 0 else f"[human{i + 1}]")
        kv("footprint_radius", human.footprint_radius)
        kv("stature", human.stature)
        for w in human.waypoints:
            kv("waypoint", f"{w.t!r} {w.x!r} {w.y!r} {w.posture.value}")
    out.append("")
    out.append("[task]")
    kv("cycles", sc.task.cycles)
    for s in sc.task.steps:
        row = f"{s.name} {s.target[0]!r} {s.target[1]!r} {s.target[2]!r} {s.dwell!r}"
        if s.modes:
            row += " " + ",".join(s.modes)
        kv("step", row)
    return "\n".join(out) + "\n"
