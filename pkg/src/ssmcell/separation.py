"""Time-varying protective separation distance and the violation predicate."""

from __future__ import annotations

from dataclasses import dataclass

# Hysteresis applied by the control loop so the predicate cannot chatter on noise.
VIOLATION_HYSTERESIS = 0.02  # m


class SeparationError(ValueError):
    pass


@dataclass(frozen=True)
class SeparationInputs:
    """Inputs for the dynamic separation distance.

    human_speed / robot_speed in m/s; robot_reaction_time is the controller
    latency (s); perception_response_time the sensing latency (s); intrusion,
    robot_uncertainty, human_uncertainty are fixed allowances (m).
    """

    human_speed: float = 0.0
    robot_speed: float = 0.0
    robot_reaction_time: float = 0.1
    perception_response_time: float = 0.064
    intrusion: float = 0.2
    robot_uncertainty: float = 0.05
    human_uncertainty: float = 0.05

    def __post_init__(self):
        for name in (
            "human_speed",
            "robot_speed",
            "robot_reaction_time",
            "perception_response_time",
            "intrusion",
            "robot_uncertainty",
            "human_uncertainty",
        ):
            if getattr(self, name) < 0:
                raise SeparationError(f"{name} must be >= 0")

    def with_speeds(self, human_speed: float, robot_speed: float) -> "SeparationInputs":
        return SeparationInputs(
            human_speed=human_speed,
            robot_speed=robot_speed,
            robot_reaction_time=self.robot_reaction_time,
            perception_response_time=self.perception_response_time,
            intrusion=self.intrusion,
            robot_uncertainty=self.robot_uncertainty,
            human_uncertainty=self.human_uncertainty,
        )


def separation_terms(inputs: SeparationInputs) -> tuple[float, float, float]:
    """The three travel terms: (human travel, robot travel, robot stopping travel)."""
    t_r = inputs.robot_reaction_time
    t_s = inputs.perception_response_time
    s_h = inputs.human_speed * (t_r + t_s)
    s_r = inputs.robot_speed * t_r
    s_s = inputs.robot_speed * (t_r + t_s)
    return s_h, s_r, s_s


def compute_msd_dynamic(inputs: SeparationInputs) -> float:
    """Dynamic minimum separation distance: travel terms plus fixed allowances."""
    s_h, s_r, s_s = separation_terms(inputs)
    return s_h + s_r + s_s + inputs.intrusion + inputs.robot_uncertainty + inputs.human_uncertainty


def separation_violated(actual_distance: float, inputs: SeparationInputs) -> bool:
    """True iff the measured distance is strictly below the dynamic minimum.

    A distance exactly equal to the minimum is compliant.
    """
    if actual_distance < 0:
        raise SeparationError("actual_distance must be >= 0")
    return bool(actual_distance < compute_msd_dynamic(inputs))


class ViolationGate:
    """Stateful violation predicate with release hysteresis for in-loop use.

    Trips as soon as the distance drops below the dynamic minimum and releases
    only once the distance clears the minimum plus the hysteresis band.
    """

    def __init__(self, hysteresis: float = VIOLATION_HYSTERESIS):
        if hysteresis < 0:
            raise SeparationError("hysteresis must be >= 0")
        self.hysteresis = hysteresis
        self.tripped = False

    def update(self, actual_distance: float, inputs: SeparationInputs) -> bool:
        msd = compute_msd_dynamic(inputs)
        if self.tripped:
            if actual_distance > msd + self.hysteresis:
                self.tripped = False
        else:
            if actual_distance < msd:
                self.tripped = True
        return self.tripped

    def reset(self):
        self.tripped = False
