"""Deterministic fixed-timestep orchestration of the cell: sensors, controller, task, trace."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import perception
from .control import CommandSource, Controller, ControllerConfig, Gains, ModeKind
from .kinematics import FrameChain, Jacobian, JointState, RobotModel, load_robot_model, tcp_position
from .perception import ScannerMount, min_distance_tcp, pose_landmarks, simulate_scan
from .scenario import Scenario, SimMode, TaskStep
from .separation import compute_msd_dynamic
from .stability import LyapunovSample, lyapunov_value
from .zones import Quadrant, Zone, ZoneLayout, classify_footprint

ARRIVAL_TOL = 0.003  # m, TCP-to-target distance that counts as arrived
_GRID_EPS = 1e-9


class EventKind(enum.Enum):
    ZONE_ENTER = "zone_enter"
    ZONE_EXIT = "zone_exit"
    MODE_SWITCH = "mode_switch"
    ESTOP = "estop"
    DEADLOCK = "deadlock"
    TASK_STEP_DONE = "task_step_done"
    CYCLE_DONE = "cycle_done"


@dataclass(frozen=True)
class Event:
    t: float
    kind: EventKind
    payload: str = ""


@dataclass(frozen=True)
class TraceRow:
    t: float
    q: np.ndarray = field(repr=False)
    qdot: np.ndarray = field(repr=False)
    tcp: np.ndarray = field(repr=False)
    tcp_speed: float = 0.0
    human_x: float = math.nan
    human_y: float = math.nan
    human_speed: float = 0.0
    occ_left: Zone = Zone.NORMAL
    occ_right: Zone = Zone.NORMAL
    d_i: float = math.inf
    dyn_msd: float = 0.0
    mode: ModeKind = ModeKind.FULL
    fraction: float = 0.0
    v_cap: float = 0.0
    v_task: float = 0.0
    source: CommandSource = CommandSource.PRIMARY_LOOP
    damped: bool = False
    pending: bool = True
    lyap: float = 0.0


@dataclass(frozen=True)
class SimResult:
    scenario: Scenario
    layout: ZoneLayout
    trace: list[TraceRow]
    events: list[Event]

    def lyapunov_samples(self) -> list[LyapunovSample]:
        return [LyapunovSample(t=r.t, value=r.lyap, mode=r.mode) for r in self.trace]


def build_gains(scenario: Scenario) -> Gains:
    gc = scenario.gains_config
    return Gains.diagonal(
        kp=gc.kp,
        kd=gc.kd,
        task_gain=gc.task_gain,
        k0=gc.k0,
        ks_floor=gc.ks_floor,
        accel_limit=gc.accel_limit,
    )


def build_model(scenario: Scenario) -> RobotModel:
    if scenario.robot_model == "default":
        return RobotModel()
    return load_robot_model(scenario.robot_model)


def build_scanner_mounts(scenario: Scenario, layout: ZoneLayout) -> tuple[ScannerMount, ...]:
    if not scenario.scanners:
        return perception.default_scanner_mounts(layout)
    return tuple(
        ScannerMount(x=p.x, y=p.y, heading=p.heading, plane_height=layout.laser_mount_height)
        for p in scenario.scanners
    )


def _expand_plan(scenario: Scenario) -> list[tuple[int, TaskStep]]:
    steps = scenario.task.steps_for(scenario.mode)
    return [(cycle, step) for cycle in range(scenario.task.cycles) for step in steps]


def nominal_task_duration(scenario: Scenario, mode: SimMode) -> float:
    """Robot-only task duration at nominal speed: segment lengths plus dwells."""
    model = build_model(scenario)
    pos = tcp_position(model, np.asarray(scenario.q0))
    total = 0.0
    for _ in range(scenario.task.cycles):
        for step in scenario.task.steps_for(mode):
            target = np.asarray(step.target)
            total += float(np.linalg.norm(target - pos)) / scenario.nominal_speed
            total += step.dwell
            pos = target
    return total


def ideal_cycle_time(scenario: Scenario) -> float:
    """Nominal solo duration of the full task divided by the scenario's parallelism."""
    return nominal_task_duration(scenario, SimMode.AUTONOMOUS) / scenario.parallelism


class _TaskTracker:
    """Walks the expanded step plan: move the TCP to each target, then dwell.

    Dwell (processing) time advances only while the commanded fraction is
    positive, so a stalled robot accrues pending time instead of progress.
    """

    def __init__(self, plan: list[tuple[int, TaskStep]], nominal_speed: float):
        self.plan = plan
        self.nominal_speed = nominal_speed
        self.idx = 0
        self.dwelling = False
        self.dwell_left = 0.0
        self.events: list[tuple[float, EventKind, str]] = []

    @property
    def pending(self) -> bool:
        return self.idx < len(self.plan)

    def advance(self, t: float, tcp: np.ndarray, fraction: float, dt: float) -> np.ndarray:
        """Commanded task direction for this tick (unit vector, shortened on arrival)."""
        if not self.pending:
            return np.zeros(3)
        cycle, step = self.plan[self.idx]
        if not self.dwelling:
            delta = np.asarray(step.target) - tcp
            dist = float(np.linalg.norm(delta))
            if dist > ARRIVAL_TOL:
                if fraction <= 0.0:
                    return np.zeros(3)
                # Never overshoot: cap the commanded speed at dist/dt.
                scale = min(1.0, dist / (fraction * self.nominal_speed * dt))
                return delta / dist * scale
            self.dwelling = True
            self.dwell_left = step.dwell
        if fraction > 0.0:
            self.dwell_left -= dt
        if self.dwell_left <= 1e-12:
            self.events.append((t, EventKind.TASK_STEP_DONE, f"step={step.name};cycle={cycle}"))
            if self.idx + 1 >= len(self.plan) or self.plan[self.idx + 1][0] != cycle:
                self.events.append((t, EventKind.CYCLE_DONE, f"cycle={cycle}"))
            self.idx += 1
            self.dwelling = False
        return np.zeros(3)


def run(scenario: Scenario, bridge=None) -> SimResult:
    """Execute one scenario deterministically; returns the trace and event log.

    The robot integrates commanded joint rates semi-implicitly at the control
    period; sensors sample on their native grids with zero-order hold between
    arrivals.  The optional bridge receives one message per tick and never
    feeds anything back into the simulation.
    """
    layout = scenario.build_layout()
    model = build_model(scenario)
    gains = build_gains(scenario)
    dt = scenario.control_period
    n_ticks = int(round(scenario.duration / dt))
    rng = np.random.default_rng(scenario.seed)
    mounts = build_scanner_mounts(scenario, layout)
    scan_period = mounts[0].scan_period
    skeleton_period = 1.0 / perception.SKELETON_RATE

    controller = Controller(
        model,
        layout,
        gains,
        scenario.separation,
        ControllerConfig(
            control_period=dt,
            nominal_speed=scenario.nominal_speed,
            scan_period=scan_period,
            skeleton_period=skeleton_period,
            sequential=scenario.sequential,
        ),
    )
    controller.fraction = 1.0  # cold start at nominal speed; arbitration pulls it down
    tracker = _TaskTracker(_expand_plan(scenario), scenario.nominal_speed)

    q = np.asarray(scenario.q0, dtype=float)
    q_ref = q.copy()
    e_prev = np.zeros(6)
    prev_tcp: np.ndarray | None = None
    prev_mode: ModeKind | None = None
    prev_source: CommandSource | None = None
    prev_zone = [Zone.NORMAL for _ in scenario.humans]
    ignore_humans = scenario.mode == SimMode.AUTONOMOUS
    quadrant_blind = scenario.mode == SimMode.TRADITIONAL

    trace: list[TraceRow] = []
    events: list[Event] = []
    last_scan_tick = -1
    last_skel_tick = -1
    seq = 0

    for i in range(n_ticks):
        t = i * dt
        humans = [script.state_at(t) for script in scenario.humans]
        chain = FrameChain(model, q)
        tcp = chain.tcp
        tcp_speed = 0.0 if prev_tcp is None else float(np.linalg.norm(tcp - prev_tcp)) / dt

        # Sensors fire on their own grids; the controller holds the last message.
        scan_tick = int(math.floor(t / scan_period + _GRID_EPS))
        if scan_tick > last_scan_tick:
            last_scan_tick = scan_tick
            t_scan = scan_tick * scan_period
            if ignore_humans or not scenario.humans:
                occ = {Quadrant.LEFT: Zone.NORMAL, Quadrant.RIGHT: Zone.NORMAL}
            else:
                at_scan = [s.state_at(t_scan) for s in scenario.humans]
                entries = []
                for mount in mounts:
                    scan = simulate_scan(mount, at_scan, t_scan, rng=rng, noise=scenario.noise)
                    entries.extend(perception.scan_to_occupancy(scan, mount, layout))
                occ = perception.merge_occupancy(entries)
                if quadrant_blind:
                    worst = max(occ.values())
                    occ = {Quadrant.LEFT: worst, Quadrant.RIGHT: worst}
            controller.offer_scan(t_scan, occ)
        skel_tick = int(math.floor(t / skeleton_period + _GRID_EPS))
        if skel_tick > last_skel_tick:
            last_skel_tick = skel_tick
            t_skel = skel_tick * skeleton_period
            if ignore_humans or not scenario.humans:
                controller.offer_skeleton(t_skel, math.inf, 0.0)
            else:
                tracked = scenario.humans[0].state_at(t_skel)
                frame = perception.skeleton_sample(tracked, t_skel)
                d_i, _ = min_distance_tcp(frame, tcp)
                controller.offer_skeleton(t_skel, d_i, tracked.walk_speed)

        # Ground-truth zone occupancy drives the event log (nested enters/exits).
        for h, human in enumerate(humans):
            zone = classify_footprint(layout, human.ground, human.footprint_radius).zone
            if zone > prev_zone[h]:
                for level in range(prev_zone[h] + 1, zone + 1):
                    events.append(
                        Event(t, EventKind.ZONE_ENTER, f"zone={Zone(level).name.lower()};human={h}")
                    )
            elif zone < prev_zone[h]:
                for level in range(prev_zone[h], zone, -1):
                    events.append(
                        Event(t, EventKind.ZONE_EXIT, f"zone={Zone(level).name.lower()};human={h}")
                    )
            prev_zone[h] = zone

        d_true = math.inf
        if humans:
            landmarks = pose_landmarks(humans[0])
            d_true = float(np.min(np.linalg.norm(landmarks - tcp, axis=1)))

        robot_quadrant = (
            Quadrant.LEFT if tcp[1] < 0 else Quadrant.RIGHT if tcp[1] > 0 else Quadrant.BOTH
        )
        task_dir = tracker.advance(t, tcp, controller.fraction, dt)
        for te, kind, payload in tracker.events:
            events.append(Event(te, kind, payload))
        tracker.events.clear()

        command = controller.step(
            t,
            robot_quadrant=robot_quadrant,
            task_direction=task_dir,
            joint_reference=q_ref,
            state=JointState(q=q, qdot=np.zeros(6), t=t),
            tcp_speed=tcp_speed,
            dt=dt,
            J=Jacobian(matrix=chain.jacobian_matrix()),
        )
        if prev_mode is not None and command.mode.kind != prev_mode:
            events.append(
                Event(
                    t,
                    EventKind.MODE_SWITCH,
                    f"mode={command.mode.kind.value};fraction={command.mode.fraction!r}",
                )
            )
        if command.source == CommandSource.ESTOP and prev_source != CommandSource.ESTOP:
            events.append(Event(t, EventKind.ESTOP, "source=watchdog"))
        prev_mode = command.mode.kind
        prev_source = command.source

        e = q_ref - q
        edot = (e - e_prev) / dt if i else np.zeros(6)
        e_prev = e
        human0 = humans[0] if humans else None
        msd_now = compute_msd_dynamic(
            scenario.separation.with_speeds(human0.walk_speed if human0 else 0.0, tcp_speed)
        )
        trace.append(
            TraceRow(
                t=t,
                q=q.copy(),
                qdot=command.qdot_cmd.copy(),
                tcp=tcp.copy(),
                tcp_speed=tcp_speed,
                human_x=float(human0.ground[0]) if human0 else math.nan,
                human_y=float(human0.ground[1]) if human0 else math.nan,
                human_speed=human0.walk_speed if human0 else 0.0,
                occ_left=controller.occupancy[Quadrant.LEFT],
                occ_right=controller.occupancy[Quadrant.RIGHT],
                d_i=d_true,
                dyn_msd=msd_now,
                mode=command.mode.kind,
                fraction=command.fraction,
                v_cap=command.v_cartesian,
                v_task=float(np.linalg.norm(task_dir)) * command.fraction * scenario.nominal_speed,
                source=command.source,
                damped=command.damped,
                pending=tracker.pending,
                lyap=lyapunov_value(e, edot, gains),
            )
        )
        if bridge is not None:
            bridge.publish(seq, t, command.mode.kind.value, command.fraction, d_true, msd_now)
            seq += 1

        # Semi-implicit integration: rates from the state at t applied over [t, t+dt].
        q = q + command.qdot_cmd * dt
        q_ref = q_ref + command.qdot_task * dt
        prev_tcp = tcp

    return SimResult(scenario=scenario, layout=layout, trace=trace, events=events)


def detect_deadlock(
    trace: list[TraceRow], events: list[Event], stall_threshold: float = 5.0
) -> list[Event]:
    """Deadlock events: standstill with pending task steps for longer than the threshold."""
    if not trace or math.isinf(stall_threshold):
        return []
    out: list[Event] = []
    start: float | None = None
    dt = trace[1].t - trace[0].t if len(trace) > 1 else 0.0
    stalled = (ModeKind.STANDSTILL, ModeKind.ESTOP)

    def close(end_t: float):
        nonlocal start
        if start is not None and end_t - start > stall_threshold:
            out.append(Event(start, EventKind.DEADLOCK, f"duration={end_t - start!r}"))
        start = None

    for row in trace:
        if row.pending and row.mode in stalled:
            if start is None:
                start = row.t
        else:
            close(row.t)
    close(trace[-1].t + dt)
    return out


def run_benchmark(scenario: Scenario) -> dict[SimMode, SimResult]:
    """Run the same human script and task under all three control configurations."""
    results = {}
    for mode in (SimMode.AUTONOMOUS, SimMode.TRADITIONAL, SimMode.PROPOSED):
        result = run(scenario.with_mode(mode))
        result.events.extend(detect_deadlock(result.trace, result.events, scenario.stall_threshold))
        results[mode] = result
    return results
