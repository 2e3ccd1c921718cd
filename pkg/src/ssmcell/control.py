"""Hierarchical two-loop velocity controller: zone arbitration, skeleton scaling, resolution."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .kinematics import (
    DEFAULT_DAMPING,
    Jacobian,
    JointState,
    RANK_TOL,
    RobotModel,
    SINGULARITY_THRESHOLD,
    jacobian,
    null_space_projector,
    pseudo_inverse,
)
from .separation import SeparationInputs, ViolationGate
from .zones import Quadrant, Zone, ZoneLayout

NOMINAL_SPEED = 1.0  # m/s, full Cartesian speed
FULL_FRACTION = 1.0
COLLABORATIVE_FRACTION = 0.5
CONTROL_PERIOD = 0.002  # s
STALE_PERIODS = 3.0  # sensor silence tolerated, in units of that sensor's period
_TIME_TOL = 1e-9


class ControlError(ValueError):
    pass


class ModeKind(enum.Enum):
    FULL = "full"
    COLLABORATIVE = "collaborative"
    REDUCED = "reduced"
    STANDSTILL = "standstill"
    ESTOP = "estop"


class CommandSource(enum.Enum):
    PRIMARY_LOOP = "primary"
    SECONDARY_LOOP = "secondary"
    ESTOP = "estop"


@dataclass(frozen=True)
class SpeedMode:
    kind: ModeKind
    fraction: float

    def __post_init__(self):
        if not 0.0 <= self.fraction <= 1.0:
            raise ControlError(f"fraction {self.fraction} outside [0, 1]")
        expected = {
            ModeKind.FULL: FULL_FRACTION,
            ModeKind.COLLABORATIVE: COLLABORATIVE_FRACTION,
            ModeKind.STANDSTILL: 0.0,
            ModeKind.ESTOP: 0.0,
        }
        if self.kind in expected and self.fraction != expected[self.kind]:
            raise ControlError(f"{self.kind} must carry fraction {expected[self.kind]}")


MODE_FULL = SpeedMode(ModeKind.FULL, FULL_FRACTION)
MODE_COLLABORATIVE = SpeedMode(ModeKind.COLLABORATIVE, COLLABORATIVE_FRACTION)
MODE_STANDSTILL = SpeedMode(ModeKind.STANDSTILL, 0.0)
MODE_ESTOP = SpeedMode(ModeKind.ESTOP, 0.0)


@dataclass(frozen=True)
class Gains:
    """Controller gains; kp/kd/task_gain are positive-definite diagonal 6x6."""

    kp: np.ndarray = field(repr=False)
    kd: np.ndarray = field(repr=False)
    task_gain: np.ndarray = field(repr=False)
    k0: float = 0.05
    ks_floor: float = 0.3
    accel_limit: float = 2.0  # fraction/s slew bound on the commanded fraction

    def __post_init__(self):
        for name in ("kp", "kd", "task_gain"):
            m = getattr(self, name)
            if m.shape != (6, 6):
                raise ControlError(f"{name} must be 6x6")
            if np.any(np.diag(m) < 0) or (name != "kd" and np.any(np.diag(m) <= 0)):
                raise ControlError(f"{name} diagonal must be positive")
        if self.k0 < 0:
            raise ControlError("k0 must be >= 0")
        if not 0.0 < self.ks_floor <= 1.0:
            raise ControlError("ks_floor must lie in (0, 1]")
        if self.accel_limit <= 0:
            raise ControlError("accel_limit must be positive")

    @staticmethod
    def diagonal(
        kp: float = 20.0,
        kd: float = 2.0,
        task_gain: float = 1.0,
        k0: float = 0.05,
        ks_floor: float = 0.3,
        accel_limit: float = 2.0,
    ) -> "Gains":
        return Gains(
            kp=np.eye(6) * kp,
            kd=np.eye(6) * kd,
            task_gain=np.eye(6) * task_gain,
            k0=k0,
            ks_floor=ks_floor,
            accel_limit=accel_limit,
        )


@dataclass(frozen=True)
class SpeedCommand:
    """One control tick's arbitration output and resolved joint rates."""

    t: float
    mode: SpeedMode
    fraction: float  # slew-limited fraction actually applied this tick
    v_cartesian: float  # fraction x nominal speed (m/s)
    qdot_cmd: np.ndarray = field(repr=False)
    qdot_task: np.ndarray = field(repr=False, default=None)  # resolution before PD correction
    source: CommandSource = CommandSource.PRIMARY_LOOP
    damped: bool = False


def primary_speed_select(occupancy: dict[Quadrant, Zone], robot_quadrant: Quadrant) -> SpeedMode:
    """Zone/quadrant arbitration of the laser loop.

    Danger on the robot's side stops it; warning on its side, or any intrusion
    on the opposite side, drops it to collaborative speed; otherwise full speed.
    """
    left = occupancy.get(Quadrant.LEFT, Zone.NORMAL)
    right = occupancy.get(Quadrant.RIGHT, Zone.NORMAL)
    if robot_quadrant == Quadrant.BOTH:
        own, opposite = max(left, right), Zone.NORMAL
    elif robot_quadrant == Quadrant.LEFT:
        own, opposite = left, right
    else:
        own, opposite = right, left
    if own == Zone.DANGER:
        return MODE_STANDSTILL
    if own == Zone.WARNING or opposite >= Zone.WARNING:
        return MODE_COLLABORATIVE
    return MODE_FULL


def scale_factor(d_i: float, layout: ZoneLayout, gains: Gains) -> float:
    """Skeleton-distance scaling: 1 at the trigger distance, floor at the danger boundary."""
    start = layout.scale_start_distance
    floor_d = layout.scale_floor_distance
    if d_i >= start:
        return 1.0
    if d_i <= floor_d or start <= floor_d:
        return gains.ks_floor
    return gains.ks_floor + (1.0 - gains.ks_floor) * (d_i - floor_d) / (start - floor_d)


def secondary_scale(
    d_i: float, layout: ZoneLayout, mode_in: SpeedMode, gains: Gains
) -> SpeedMode:
    """Apply the skeleton scaling to the primary mode; can only reduce speed."""
    if d_i < 0:
        raise ControlError("d_i must be >= 0")
    if mode_in.kind in (ModeKind.STANDSTILL, ModeKind.ESTOP):
        return mode_in
    if d_i > layout.scale_start_distance:
        return mode_in
    target = min(mode_in.fraction, scale_factor(d_i, layout, gains) * FULL_FRACTION)
    if target < mode_in.fraction:
        return SpeedMode(ModeKind.REDUCED, target)
    return mode_in


def energy_objective(q, model: RobotModel) -> float:
    """Joint-range-centering surrogate for motor energy use; 0 at the midpoints, else < 0."""
    q = np.asarray(q, dtype=float)
    total = 0.0
    for i, (lo, hi) in enumerate(model.joint_limits):
        mid = 0.5 * (lo + hi)
        rng = hi - lo
        total -= ((q[i] - mid) / rng) ** 2
    return total


def energy_objective_gradient(q, model: RobotModel) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    grad = np.empty(6)
    for i, (lo, hi) in enumerate(model.joint_limits):
        mid = 0.5 * (lo + hi)
        rng = hi - lo
        grad[i] = -2.0 * (q[i] - mid) / (rng * rng)
    return grad


def pd_joint_control(e, edot, gains: Gains) -> np.ndarray:
    """Joint-space PD law: Kp e + Kd de/dt."""
    return gains.kp @ np.asarray(e, dtype=float) + gains.kd @ np.asarray(edot, dtype=float)


def cartesian_to_joint_rates(
    J: Jacobian,
    v_task,
    gains: Gains,
    w_grad,
    *,
    project: bool = True,
    damping: float = 0.0,
) -> np.ndarray:
    """Resolve a 6-vector task velocity into joint rates with a secondary objective.

    With projection enabled the secondary term k0*grad(w) is pushed through the
    null-space projector so it cannot disturb the task-space velocity; the
    projector always uses the exact pseudo-inverse even when the task side is
    damped.
    """
    v_task = np.asarray(v_task, dtype=float)
    w_grad = np.asarray(w_grad, dtype=float)
    base = pseudo_inverse(J, damping) @ (gains.task_gain @ v_task)
    qdot0 = gains.k0 * w_grad
    if project:
        return base + null_space_projector(J) @ qdot0
    return base + qdot0


@dataclass
class ControllerConfig:
    control_period: float = CONTROL_PERIOD
    nominal_speed: float = NOMINAL_SPEED
    scan_period: float = 0.030
    skeleton_period: float = 1.0 / 30.0
    stale_periods: float = STALE_PERIODS
    damping: float = DEFAULT_DAMPING
    singular_threshold: float = SINGULARITY_THRESHOLD
    # Gate both loops to the skeleton rate (the slow-loop emulation baseline).
    sequential: bool = False


class Controller:
    """Single-writer controller state machine fed by timestamped sensor messages.

    Sensor messages may arrive at different rates (zero-order hold between
    arrivals) or out of order within a period (latest timestamp wins).  A
    sensor silent for longer than stale_periods of its own period forces a
    fail-safe standstill.  An explicit e-stop latches until reset.
    """

    def __init__(
        self,
        model: RobotModel,
        layout: ZoneLayout,
        gains: Gains,
        separation: SeparationInputs,
        config: ControllerConfig | None = None,
    ):
        self.model = model
        self.layout = layout
        self.gains = gains
        self.separation = separation
        self.config = config or ControllerConfig()
        self.fraction = 0.0
        self.mode = MODE_STANDSTILL
        self._occ: dict[Quadrant, Zone] = {Quadrant.LEFT: Zone.NORMAL, Quadrant.RIGHT: Zone.NORMAL}
        self._occ_t = -math.inf
        self._d_i = math.inf
        self._human_speed = 0.0
        self._skel_t = -math.inf
        self._gate = ViolationGate()
        self._estop_latched = False
        self._e_prev = np.zeros(6)
        self._held: tuple[SpeedMode, CommandSource] | None = None
        self._held_skel_t = -math.inf
        # Constant pieces of the per-tick resolution.
        self._pd_matrix = np.linalg.solve(np.eye(6) + self.gains.kd, self.gains.kp)
        limits = np.asarray(model.joint_limits, dtype=float)
        self._joint_mid = 0.5 * (limits[:, 0] + limits[:, 1])
        self._joint_range_sq = (limits[:, 1] - limits[:, 0]) ** 2

    @property
    def occupancy(self) -> dict[Quadrant, Zone]:
        return dict(self._occ)

    @property
    def held_distance(self) -> float:
        return self._d_i

    @property
    def tracking_error(self) -> np.ndarray:
        return self._e_prev.copy()

    def offer_scan(self, t: float, occupancy: dict[Quadrant, Zone]):
        if t >= self._occ_t:  # latest wins; stale duplicates dropped
            self._occ = dict(occupancy)
            self._occ_t = t

    def offer_skeleton(self, t: float, d_i: float, human_speed: float = 0.0):
        if t >= self._skel_t:
            self._d_i = d_i
            self._human_speed = human_speed
            self._skel_t = t

    def engage_estop(self):
        self._estop_latched = True

    def reset_estop(self):
        self._estop_latched = False

    def _stale(self, t: float) -> bool:
        n = self.config.stale_periods
        return (
            t - self._occ_t > n * self.config.scan_period + _TIME_TOL
            or t - self._skel_t > n * self.config.skeleton_period + _TIME_TOL
        )

    def _arbitrate(self, t: float, robot_quadrant: Quadrant, tcp_speed: float):
        primary = primary_speed_select(self._occ, robot_quadrant)
        mode = secondary_scale(self._d_i, self.layout, primary, self.gains)
        source = (
            CommandSource.SECONDARY_LOOP if mode is not primary else CommandSource.PRIMARY_LOOP
        )
        inputs = self.separation.with_speeds(self._human_speed, tcp_speed)
        if math.isfinite(self._d_i) and self._gate.update(self._d_i, inputs):
            mode = MODE_STANDSTILL
            source = CommandSource.SECONDARY_LOOP
        return mode, source

    def _resolve_rates(self, q: np.ndarray, v6: np.ndarray, J: Jacobian) -> tuple[np.ndarray, bool]:
        """Single-SVD velocity resolution with null-space energy optimization."""
        Jm = J.matrix
        U, s, Vt = np.linalg.svd(Jm)
        damped = s[-1] < self.config.singular_threshold
        if damped:
            d = self.config.damping
            task_factors = s / (s * s + d * d)
        else:
            task_factors = np.where(s > RANK_TOL * s[0], 1.0 / np.where(s > 0, s, 1.0), 0.0)
        exact_factors = np.where(s > RANK_TOL * s[0], 1.0 / np.where(s > 0, s, 1.0), 0.0)
        base = Vt.T @ (task_factors * (U.T @ (self.gains.task_gain @ v6)))
        qdot0 = self.gains.k0 * (-2.0 * (q - self._joint_mid) / self._joint_range_sq)
        # N qdot0 = qdot0 - J^+ (J qdot0) without forming the projector.
        null_term = qdot0 - Vt.T @ (exact_factors * (U.T @ (Jm @ qdot0)))
        return base + null_term, damped

    def step(
        self,
        t: float,
        *,
        robot_quadrant: Quadrant,
        task_direction,
        joint_reference,
        state: JointState,
        tcp_speed: float = 0.0,
        dt: float | None = None,
        J: Jacobian | None = None,
    ) -> SpeedCommand:
        dt = self.config.control_period if dt is None else dt
        estop_now = False
        if self._estop_latched:
            mode, source = MODE_ESTOP, CommandSource.ESTOP
            estop_now = True
        elif self._stale(t):
            mode, source = MODE_STANDSTILL, CommandSource.ESTOP
            estop_now = True
        elif self.config.sequential:
            # Both loops polled together at skeleton arrivals only.
            if self._held is None or self._skel_t > self._held_skel_t:
                self._held = self._arbitrate(t, robot_quadrant, tcp_speed)
                self._held_skel_t = self._skel_t
            mode, source = self._held
        else:
            mode, source = self._arbitrate(t, robot_quadrant, tcp_speed)

        if estop_now:
            self.fraction = 0.0  # e-stop engagement is exempt from the slew bound
        else:
            step_max = self.gains.accel_limit * dt
            delta = mode.fraction - self.fraction
            self.fraction += math.copysign(min(abs(delta), step_max), delta) if delta else 0.0
        self.mode = mode

        q = state.q
        if J is None:
            J = jacobian(self.model, q)
        v6 = np.zeros(6)
        v6[:3] = np.asarray(task_direction, dtype=float) * (
            self.fraction * self.config.nominal_speed
        )
        qdot_raw, damped = self._resolve_rates(q, v6, J)
        e = np.asarray(joint_reference, dtype=float) - q
        self._e_prev = e
        # PD law applied semi-implicitly against the velocity plant: with the
        # reference advancing at the task rates, de/dt = -u, so
        # u = Kp e + Kd de/dt collapses to (I + Kd) u = Kp e.  This keeps the
        # 2 ms discrete loop stable at the default gains.
        u_pd = self._pd_matrix @ e
        # Both outputs are clamped from the same raw vector so that a zero PD
        # correction leaves them bit-identical (exact reference tracking).
        qdot_task = self.model.clamp_joint_rates(qdot_raw)
        qdot_cmd = self.model.clamp_joint_rates(qdot_raw + u_pd)
        return SpeedCommand(
            t=t,
            mode=mode,
            fraction=self.fraction,
            v_cartesian=self.fraction * self.config.nominal_speed,
            qdot_cmd=qdot_cmd,
            qdot_task=qdot_task,
            source=source,
            damped=damped,
        )


def ziegler_nichols_gains(
    dt: float = CONTROL_PERIOD,
    *,
    k0: float = 0.05,
    ks_floor: float = 0.3,
    accel_limit: float = 2.0,
) -> Gains:
    """PD gains from an ultimate-gain sweep on the simulated velocity plant.

    The plant is a velocity-commanded joint with one control period of
    actuation latency; proportional gain is swept upward until the error
    stops decaying, giving the ultimate gain and oscillation period.
    """

    def decay_ratio(kp: float) -> float:
        e, u_prev, n = 1.0, 0.0, 400
        peak = 0.0
        for k in range(n):
            e -= u_prev * dt
            u_prev = kp * e
            if k >= n // 2:
                peak = max(peak, abs(e))
        return peak

    lo, hi = 1.0, 4.0 / dt
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if decay_ratio(mid) < 1.0:
            lo = mid
        else:
            hi = mid
    ku = lo
    tu = 2.0 * dt  # boundary oscillation alternates sign every step
    kp = 0.8 * ku
    kd = kp * tu / 8.0
    return Gains.diagonal(kp=kp, kd=kd, k0=k0, ks_floor=ks_floor, accel_limit=accel_limit)
