"""6-DOF serial arm: forward kinematics, geometric Jacobian, damped pseudo-inverse."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# Singular values below this fraction of the largest count as rank-deficient.
RANK_TOL = 1e-10
# Default damping used by callers when the arm is close to a singular pose.
DEFAULT_DAMPING = 1e-3
SINGULARITY_THRESHOLD = 1e-2


class KinematicsError(ValueError):
    pass


class JointLimitError(KinematicsError):
    pass


@dataclass(frozen=True)
class LinkRow:
    """One serial link: rotation offset (rad), offset d (m), length a (m), twist alpha (rad)."""

    theta_offset: float
    d: float
    a: float
    alpha: float


# UR5-proportioned arm whose maximum TCP distance is exactly the quoted
# 0.850 m reach (sum of the three link lengths, attained at q = 0).
DEFAULT_LINK_ROWS = (
    LinkRow(0.0, 0.0, 0.0, math.pi / 2),
    LinkRow(0.0, 0.0, 0.425, 0.0),
    LinkRow(0.0, 0.0, 0.330, 0.0),
    LinkRow(0.0, 0.0, 0.095, math.pi / 2),
    LinkRow(0.0, 0.0, 0.0, -math.pi / 2),
    LinkRow(0.0, 0.0, 0.0, 0.0),
)
DEFAULT_REACH = 0.850  # m
DEFAULT_JOINT_LIMIT = 2.0 * math.pi  # rad, symmetric
DEFAULT_MAX_JOINT_SPEED = math.pi  # rad/s per joint


@dataclass(frozen=True)
class RobotModel:
    """Parameters of a 6-joint serial arm."""

    link_parameters: tuple[LinkRow, ...] = DEFAULT_LINK_ROWS
    joint_limits: tuple[tuple[float, float], ...] = tuple(
        (-DEFAULT_JOINT_LIMIT, DEFAULT_JOINT_LIMIT) for _ in range(6)
    )
    max_joint_speed: tuple[float, ...] = tuple(DEFAULT_MAX_JOINT_SPEED for _ in range(6))
    reach: float = DEFAULT_REACH

    def __post_init__(self):
        if len(self.link_parameters) != 6:
            raise KinematicsError("robot model needs exactly 6 link rows")
        if len(self.joint_limits) != 6 or len(self.max_joint_speed) != 6:
            raise KinematicsError("joint limits and speed limits need 6 entries")
        for i, (lo, hi) in enumerate(self.joint_limits):
            if not lo < hi:
                raise KinematicsError(f"joint {i}: limit min must be < max")
        for i, v in enumerate(self.max_joint_speed):
            if v <= 0:
                raise KinematicsError(f"joint {i}: max speed must be positive")
        if self.reach <= 0:
            raise KinematicsError("reach must be positive")

    def check_joint_vector(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if q.shape != (6,):
            raise KinematicsError(f"expected 6 joint values, got shape {q.shape}")
        for i, (lo, hi) in enumerate(self.joint_limits):
            if not lo <= q[i] <= hi:
                raise JointLimitError(f"joint {i} value {q[i]:.6f} outside [{lo:.6f}, {hi:.6f}]")
        return q

    def clamp_joint_rates(self, qdot: np.ndarray) -> np.ndarray:
        """Scale a joint-rate vector uniformly so every joint respects its speed limit."""
        limits = np.asarray(self.max_joint_speed)
        over = np.abs(qdot) / limits
        worst = over.max()
        if worst > 1.0:
            return qdot / worst
        return qdot


@dataclass(frozen=True)
class JointState:
    """Instantaneous joint configuration at time t."""

    q: np.ndarray
    qdot: np.ndarray
    t: float = 0.0

    @staticmethod
    def make(model: RobotModel, q, qdot, t: float = 0.0) -> "JointState":
        q = model.check_joint_vector(q)
        qdot = np.asarray(qdot, dtype=float)
        limits = np.asarray(model.max_joint_speed)
        if np.any(np.abs(qdot) > limits + 1e-12):
            raise KinematicsError("joint rate exceeds speed limit")
        return JointState(q=q, qdot=qdot, t=t)


@dataclass(frozen=True)
class Pose:
    """TCP position (m) and orientation as a unit quaternion (w, x, y, z)."""

    position: np.ndarray
    orientation: np.ndarray

    def __post_init__(self):
        n = float(np.linalg.norm(self.orientation))
        if abs(n - 1.0) > 1e-9:
            raise KinematicsError(f"quaternion norm {n} not unit")


@dataclass(frozen=True)
class Jacobian:
    """Geometric Jacobian mapping joint rates to (linear m/s, angular rad/s)."""

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.shape != (6, 6):
            raise KinematicsError(f"Jacobian must be 6x6, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise KinematicsError("Jacobian has non-finite entries")


def _dh_transform(theta: float, d: float, a: float, alpha: float) -> np.ndarray:
    ct, st = math.cos(theta), math.sin(theta)
    ca, sa = math.cos(alpha), math.sin(alpha)
    return np.array(
        [
            [ct, -st * ca, st * sa, a * ct],
            [st, ct * ca, -ct * sa, a * st],
            [0.0, sa, ca, d],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


class FrameChain:
    """Hand-rolled cumulative frames for the hot path: origins, z axes, final rotation."""

    __slots__ = ("origins", "z_axes", "rotation")

    def __init__(self, model: RobotModel, q):
        cos, sin = math.cos, math.sin
        r00, r01, r02 = 1.0, 0.0, 0.0
        r10, r11, r12 = 0.0, 1.0, 0.0
        r20, r21, r22 = 0.0, 0.0, 1.0
        px = py = pz = 0.0
        origins = [(0.0, 0.0, 0.0)]
        z_axes = [(0.0, 0.0, 1.0)]
        for i, row in enumerate(model.link_parameters):
            theta = q[i] + row.theta_offset
            ct, st = cos(theta), sin(theta)
            ca, sa = cos(row.alpha), sin(row.alpha)
            a, d = row.a, row.d
            # local translation (a*ct, a*st, d), local rotation Rz(theta)*Rx(alpha)
            tx, ty, tz = a * ct, a * st, d
            px += r00 * tx + r01 * ty + r02 * tz
            py += r10 * tx + r11 * ty + r12 * tz
            pz += r20 * tx + r21 * ty + r22 * tz
            l00, l01, l02 = ct, -st * ca, st * sa
            l10, l11, l12 = st, ct * ca, -ct * sa
            l21, l22 = sa, ca
            n00 = r00 * l00 + r01 * l10
            n01 = r00 * l01 + r01 * l11 + r02 * l21
            n02 = r00 * l02 + r01 * l12 + r02 * l22
            n10 = r10 * l00 + r11 * l10
            n11 = r10 * l01 + r11 * l11 + r12 * l21
            n12 = r10 * l02 + r11 * l12 + r12 * l22
            n20 = r20 * l00 + r21 * l10
            n21 = r20 * l01 + r21 * l11 + r22 * l21
            n22 = r20 * l02 + r21 * l12 + r22 * l22
            r00, r01, r02 = n00, n01, n02
            r10, r11, r12 = n10, n11, n12
            r20, r21, r22 = n20, n21, n22
            origins.append((px, py, pz))
            z_axes.append((r02, r12, r22))
        self.origins = origins
        self.z_axes = z_axes
        self.rotation = np.array(
            [[r00, r01, r02], [r10, r11, r12], [r20, r21, r22]]
        )

    @property
    def tcp(self) -> np.ndarray:
        return np.array(self.origins[-1])

    def jacobian_matrix(self) -> np.ndarray:
        px, py, pz = self.origins[-1]
        J = np.empty((6, 6))
        for i in range(6):
            zx, zy, zz = self.z_axes[i]
            ox, oy, oz = self.origins[i]
            dx, dy, dz = px - ox, py - oy, pz - oz
            J[0, i] = zy * dz - zz * dy
            J[1, i] = zz * dx - zx * dz
            J[2, i] = zx * dy - zy * dx
            J[3, i] = zx
            J[4, i] = zy
            J[5, i] = zz
        return J


def link_frames(model: RobotModel, q) -> list[np.ndarray]:
    """Cumulative 4x4 frames from the base to each link, base frame first (7 entries)."""
    q = np.asarray(q, dtype=float)
    T = np.eye(4)
    frames = [T]
    for i, row in enumerate(model.link_parameters):
        T = T @ _dh_transform(q[i] + row.theta_offset, row.d, row.a, row.alpha)
        frames.append(T)
    return frames


def _rotation_to_quaternion(R: np.ndarray) -> np.ndarray:
    # Shepperd's method, numerically safe for all rotation matrices.
    tr = R[0, 0] + R[1, 1] + R[2, 2]
    if tr > 0:
        s = math.sqrt(tr + 1.0) * 2.0
        w = 0.25 * s
        x = (R[2, 1] - R[1, 2]) / s
        y = (R[0, 2] - R[2, 0]) / s
        z = (R[1, 0] - R[0, 1]) / s
    elif R[0, 0] >= R[1, 1] and R[0, 0] >= R[2, 2]:
        s = math.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2]) * 2.0
        w = (R[2, 1] - R[1, 2]) / s
        x = 0.25 * s
        y = (R[0, 1] + R[1, 0]) / s
        z = (R[0, 2] + R[2, 0]) / s
    elif R[1, 1] >= R[2, 2]:
        s = math.sqrt(1.0 + R[1, 1] - R[0, 0] - R[2, 2]) * 2.0
        w = (R[0, 2] - R[2, 0]) / s
        x = (R[0, 1] + R[1, 0]) / s
        y = 0.25 * s
        z = (R[1, 2] + R[2, 1]) / s
    else:
        s = math.sqrt(1.0 + R[2, 2] - R[0, 0] - R[1, 1]) * 2.0
        w = (R[1, 0] - R[0, 1]) / s
        x = (R[0, 2] + R[2, 0]) / s
        y = (R[1, 2] + R[2, 1]) / s
        z = 0.25 * s
    qv = np.array([w, x, y, z])
    return qv / np.linalg.norm(qv)


def forward_kinematics(model: RobotModel, q) -> Pose:
    """TCP pose in the base frame for joint vector q (q must respect the limits)."""
    q = model.check_joint_vector(q)
    chain = FrameChain(model, q)
    return Pose(position=chain.tcp, orientation=_rotation_to_quaternion(chain.rotation))


def tcp_position(model: RobotModel, q) -> np.ndarray:
    """Position-only forward kinematics without the limit check (hot path)."""
    return FrameChain(model, q).tcp


def jacobian(model: RobotModel, q) -> Jacobian:
    """Geometric Jacobian at q: column i is (z_i x (p - p_i), z_i) for revolute joints."""
    return Jacobian(matrix=FrameChain(model, q).jacobian_matrix())


def pseudo_inverse(J: Jacobian | np.ndarray, damping: float = 0.0) -> np.ndarray:
    """Moore-Penrose inverse (damping 0) or damped least squares J^T (J J^T + d^2 I)^-1."""
    m = J.matrix if isinstance(J, Jacobian) else np.asarray(J, dtype=float)
    if damping < 0:
        raise KinematicsError("damping must be >= 0")
    if damping == 0.0:
        return np.linalg.pinv(m, rcond=RANK_TOL)
    U, s, Vt = np.linalg.svd(m, full_matrices=False)
    # SVD form of the damped inverse; defined even when s has zeros.
    factors = s / (s * s + damping * damping)
    return (Vt.T * factors) @ U.T


def null_space_projector(J: Jacobian | np.ndarray) -> np.ndarray:
    """N = I - J^+ J; maps joint rates into motions invisible at the TCP."""
    m = J.matrix if isinstance(J, Jacobian) else np.asarray(J, dtype=float)
    return np.eye(m.shape[1]) - pseudo_inverse(m) @ m


def smallest_singular_value(J: Jacobian | np.ndarray) -> float:
    m = J.matrix if isinstance(J, Jacobian) else np.asarray(J, dtype=float)
    return float(np.linalg.svd(m, compute_uv=False)[-1])


def max_reach_sampled(model: RobotModel, samples: int = 4000, seed: int = 0) -> float:
    """Sampled maximization of TCP distance with a coordinate-descent refinement."""
    rng = np.random.default_rng(seed)
    lows = np.array([lo for lo, _ in model.joint_limits])
    highs = np.array([hi for _, hi in model.joint_limits])
    best_q = np.zeros(6)
    best = float(np.linalg.norm(tcp_position(model, best_q)))
    for _ in range(samples):
        q = rng.uniform(lows, highs)
        d = float(np.linalg.norm(tcp_position(model, q)))
        if d > best:
            best, best_q = d, q
    step = 0.1
    while step > 1e-6:
        improved = False
        for i in range(6):
            for delta in (-step, step):
                q = best_q.copy()
                q[i] = np.clip(q[i] + delta, lows[i], highs[i])
                d = float(np.linalg.norm(tcp_position(model, q)))
                if d > best:
                    best, best_q, improved = d, q, True
        if not improved:
            step *= 0.5
    return best


def load_robot_model(path) -> RobotModel:
    """Parse a robot model file: sectioned key/value text with 6 link rows."""
    from .scenario import parse_sections  # local import to avoid a cycle

    sections = parse_sections(path)
    rows = [e.value for e in sections.get("links", []) if e.key == "link"]
    if len(rows) != 6:
        raise KinematicsError(f"{path}: expected 6 link rows, found {len(rows)}")
    link_parameters = tuple(LinkRow(*[float(x) for x in r.split()]) for r in rows)
    limit_rows = [e.value for e in sections.get("limits", []) if e.key == "joint"]
    if len(limit_rows) != 6:
        raise KinematicsError(f"{path}: expected 6 joint limit rows")
    joint_limits = tuple(tuple(float(x) for x in r.split()) for r in limit_rows)
    speed_rows = [e.value for e in sections.get("speeds", []) if e.key == "max"]
    if len(speed_rows) != 1:
        raise KinematicsError(f"{path}: expected one 'max' row in [speeds]")
    max_joint_speed = tuple(float(x) for x in speed_rows[0].split())
    reach_rows = [e.value for e in sections.get("reach", []) if e.key == "reach"]
    if len(reach_rows) != 1:
        raise KinematicsError(f"{path}: expected one 'reach' row in [reach]")
    return RobotModel(
        link_parameters=link_parameters,
        joint_limits=joint_limits,
        max_joint_speed=max_joint_speed,
        reach=float(reach_rows[0]),
    )
