"""Deterministic planning clock.

The anytime loop needs a budget and per-improvement timestamps that are
reproducible run-to-run (seeded solves must emit byte-identical histories).
Real wall clocks cannot do that, so planning time is metered by a
deterministic work model: each pipeline stage charges the meter according
to how many primitive evaluations it actually performed, priced by
constants calibrated against real execution on a commodity x86 core
(scripts/calibrate_clock.py recomputes them). One metered second therefore
tracks one real second to within calibration accuracy, while the meter
itself depends only on the seeded control flow.
"""

from dataclasses import dataclass


@dataclass(frozen=True)
class CostModel:
    """Seconds charged per primitive unit of work.

    ik_row:        one damped-least-squares iteration of one IK candidate
    tsgd_waypoint: one trajectory waypoint in one two-stage update iteration
    score_config:  one interpolated configuration scored during greedy seeding
    check_waypoint: one waypoint in a full constraint check
    """

    ik_row: float = 3.0e-6
    tsgd_waypoint: float = 1.1e-5
    score_config: float = 2.0e-6
    check_waypoint: float = 6.0e-6


DEFAULT_COST_MODEL = CostModel()


class WorkMeter:
    """Accumulates modeled compute seconds; the solver's budget clock."""

    def __init__(self, model=DEFAULT_COST_MODEL):
        self.model = model
        self.seconds = 0.0

    def charge_ik(self, rows):
        self.seconds += rows * self.model.ik_row

    def charge_tsgd(self, iterations, waypoints):
        self.seconds += iterations * waypoints * self.model.tsgd_waypoint

    def charge_scoring(self, configs):
        self.seconds += configs * self.model.score_config

    def charge_checks(self, checks, waypoints):
        self.seconds += checks * waypoints * self.model.check_waypoint
