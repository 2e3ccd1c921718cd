"""Shared scenario builders and independent oracles for the test suite."""

import dataclasses
import math

import numpy as np

from ssmcell.perception import Posture
from ssmcell.scenario import HumanScript, HumanWaypoint, RobotTask, TaskStep
from ssmcell.scenarios import sorting_benchmark
from ssmcell.zones import Zone


def oracle_transform_chain(model, q):
    """Independent 4x4 homogeneous-transform product, coded from scratch."""
    T = np.eye(4)
    for angle, row in zip(q, model.link_parameters):
        theta = angle + row.theta_offset
        ct, st = math.cos(theta), math.sin(theta)
        ca, sa = math.cos(row.alpha), math.sin(row.alpha)
        rot_z = np.array([[ct, -st, 0, 0], [st, ct, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])
        trans_z = np.eye(4)
        trans_z[2, 3] = row.d
        trans_x = np.eye(4)
        trans_x[0, 3] = row.a
        rot_x = np.array([[1, 0, 0, 0], [0, ca, -sa, 0], [0, sa, ca, 0], [0, 0, 0, 1]])
        T = T @ rot_z @ trans_z @ trans_x @ rot_x
    return T


def finite_difference_jacobian(model, q, h=1e-6):
    """Central finite differences of the transform chain (position and rotation)."""
    J = np.zeros((6, 6))
    T0 = oracle_transform_chain(model, q)
    for i in range(6):
        qp, qm = q.copy(), q.copy()
        qp[i] += h
        qm[i] -= h
        Tp = oracle_transform_chain(model, qp)
        Tm = oracle_transform_chain(model, qm)
        J[:3, i] = (Tp[:3, 3] - Tm[:3, 3]) / (2 * h)
        dR = (Tp[:3, :3] - Tm[:3, :3]) / (2 * h)
        W = dR @ T0[:3, :3].T
        J[3:, i] = [W[2, 1], W[0, 2], W[1, 0]]
    return J


def oracle_rect_member(layout, x, y, z):
    """Brute-force innermost-rectangle membership, coded independently."""
    z_lo, z_hi = layout.height_band
    if not (z_lo <= z <= z_hi):
        return Zone.NORMAL
    for zone in (Zone.DANGER, Zone.WARNING):
        r = layout.extent(zone)
        if r.x_min <= x <= r.x_max and r.y_min <= y <= r.y_max:
            return zone
    return Zone.NORMAL


def tiny_scenario(**overrides):
    """Short run: parked human in the right quadrant, robot sorting on the left."""
    base = sorting_benchmark()
    duration = overrides.get("duration", 12.0)
    if "humans" not in overrides:
        park_end = min(11.0, 0.9 * duration)
        overrides["humans"] = (
            HumanScript(
                waypoints=(
                    HumanWaypoint(0.0, 0.55, 0.35, Posture.STANDING),
                    HumanWaypoint(park_end, 0.55, 0.35, Posture.STANDING),
                )
            ),
        )
    task = RobotTask(
        steps=(
            TaskStep("sort_a", (0.35, -0.30, 0.25), 2.0),
            TaskStep("sort_b", (0.20, -0.35, 0.30), 6.5),
        )
    )
    fields = dict(task=task, duration=duration, name="tiny")
    fields.update(overrides)
    return dataclasses.replace(base, **fields)
