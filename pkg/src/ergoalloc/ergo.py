"""Joint-level ergonomic model: continuous RULA scores, wear dynamics, costs.

Five upper-body joints of the monitored arm are tracked: shoulder, elbow,
wrist, trunk, neck.  Posture maps to a continuous score G in [1, 7] through
sigmoid-smoothed RULA bands.  Wear V in [0, 1) charges like an RC circuit
while the worker acts, V(t) = 1 - (1 - V0) * exp(-int G/C dt), and discharges
at rate r while the worker rests, V(t) = V0 * exp(-r t / C).

One-step prediction of the wear an action will cause is linear in the current
wear: V_hat = alpha * V + (1 - alpha), where alpha = exp(-int G/C dt) over
the action, estimated per action by the calibration module.  Predicted wear
falls into a low / medium / high risk band per joint; the sum of the band
weights is the cost of assigning the action to the human.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

JOINTS = ("shoulder", "elbow", "wrist", "trunk", "neck")

DEFAULT_AVG_SCORE = 3.0
DEFAULT_ENDURANCE_S = 240.0
DEFAULT_WEAR_TARGET = 0.993  # five time constants
DEFAULT_SAMPLE_PERIOD_S = 1.0 / 60.0


class ErgoError(ValueError):
    pass


def capacity(g_avg: float, endurance_s: float, v_target: float) -> float:
    """Endurance capacity C such that a constant score `g_avg` held for
    `endurance_s` seconds drives wear from 0 to `v_target`."""
    if not 0.0 < v_target < 1.0:
        raise ErgoError(f"wear target must lie in (0, 1), got {v_target}")
    if g_avg <= 0 or endurance_s <= 0:
        raise ErgoError("score and endurance must be positive")
    return -g_avg * endurance_s / math.log(1.0 - v_target)


DEFAULT_CAPACITY = capacity(DEFAULT_AVG_SCORE, DEFAULT_ENDURANCE_S, DEFAULT_WEAR_TARGET)


@dataclass(frozen=True)
class WearVector:
    """Per-joint wear values, ordered as JOINTS, at time `t` seconds."""

    values: tuple
    t: float = 0.0

    def __post_init__(self):
        if len(self.values) != len(JOINTS):
            raise ErgoError(f"expected {len(JOINTS)} joint values, got {len(self.values)}")
        for joint, v in zip(JOINTS, self.values):
            if not 0.0 <= v < 1.0:
                raise ErgoError(f"wear for {joint} must lie in [0, 1), got {v}")

    @classmethod
    def from_mapping(cls, values: Mapping, t: float = 0.0) -> "WearVector":
        missing = [j for j in JOINTS if j not in values]
        if missing:
            raise ErgoError(f"missing joints: {missing}")
        return cls(values=tuple(float(values[j]) for j in JOINTS), t=float(t))

    def __getitem__(self, joint: str) -> float:
        try:
            return self.values[JOINTS.index(joint)]
        except ValueError:
            raise ErgoError(f"unknown joint {joint!r}") from None

    def as_dict(self) -> dict:
        return dict(zip(JOINTS, self.values))


@dataclass(frozen=True)
class ActionModel:
    """Per-action wear-prediction coefficients.

    `alpha[j]` in (0, 1] is the fraction of head-room (1 - V) a joint keeps
    when the action runs once; the raise coefficient is beta = 1 - alpha.
    Lower alpha means a more wearing action.
    """

    action: str
    alpha: Mapping[str, float]
    duration_s: float
    alpha_stddev: Mapping[str, float] | None = None
    n_trials: int | None = None

    def __post_init__(self):
        missing = [j for j in JOINTS if j not in self.alpha]
        if missing:
            raise ErgoError(f"action {self.action!r} lacks alpha for joints: {missing}")
        for j in JOINTS:
            a = self.alpha[j]
            if not 0.0 < a <= 1.0:
                raise ErgoError(f"alpha[{j}] must lie in (0, 1], got {a}")
        if self.duration_s < 0:
            raise ErgoError("duration must be nonnegative")

    def beta(self, joint: str) -> float:
        return 1.0 - self.alpha[joint]


def predict(wear: WearVector, model: ActionModel) -> WearVector:
    """One-step wear prediction: V_hat = alpha * V + (1 - alpha) per joint."""
    values = tuple(
        model.alpha[j] * v + (1.0 - model.alpha[j]) for j, v in zip(JOINTS, wear.values)
    )
    return WearVector(values=values, t=wear.t + model.duration_s)


# ---------------------------------------------------------------------------
# continuous RULA scoring


@dataclass(frozen=True)
class BandTerm:
    """One sigmoid band edge: the score gains `step` as the angle passes
    `breakpoint_deg` in `direction` (+1 increasing, -1 decreasing)."""

    breakpoint_deg: float
    step: float
    direction: int = 1


@dataclass(frozen=True)
class JointBands:
    neutral_deg: float
    range_deg: tuple
    base: float
    terms: tuple


@dataclass(frozen=True)
class RulaBandTable:
    steepness_per_deg: float
    joints: Mapping[str, JointBands]


def default_band_table() -> RulaBandTable:
    """Posture bands per joint, rescaled so every joint spans scores 1..7.

    Flexion band edges: shoulder 20/45/90, elbow outside the 60..100 window,
    wrist beyond +-15, trunk 20/60, neck 10/20 plus extension past -10.
    """
    return RulaBandTable(
        steepness_per_deg=0.5,
        joints={
            "shoulder": JointBands(
                neutral_deg=0.0,
                range_deg=(-60.0, 180.0),
                base=1.0,
                terms=(BandTerm(20.0, 2.0), BandTerm(45.0, 2.0), BandTerm(90.0, 2.0)),
            ),
            "elbow": JointBands(
                neutral_deg=80.0,
                range_deg=(0.0, 150.0),
                base=7.0,
                terms=(BandTerm(60.0, -6.0), BandTerm(100.0, 6.0)),
            ),
            "wrist": JointBands(
                neutral_deg=0.0,
                range_deg=(-90.0, 90.0),
                base=7.0,
                terms=(BandTerm(-15.0, -6.0), BandTerm(15.0, 6.0)),
            ),
            "trunk": JointBands(
                neutral_deg=0.0,
                range_deg=(-30.0, 120.0),
                base=1.0,
                terms=(BandTerm(20.0, 3.0), BandTerm(60.0, 3.0)),
            ),
            "neck": JointBands(
                neutral_deg=0.0,
                range_deg=(-60.0, 60.0),
                base=1.0,
                terms=(BandTerm(10.0, 3.0), BandTerm(20.0, 3.0), BandTerm(-10.0, 6.0, -1)),
            ),
        },
    )


def _sigmoid(x: float) -> float:
    x = max(-700.0, min(700.0, x))
    return 1.0 / (1.0 + math.exp(-x))


def rula_score(joint: str, angle_deg: float, table: RulaBandTable) -> float:
    """Continuous posture score in [1, 7] for one joint angle."""
    if joint not in table.joints:
        raise ErgoError(f"unknown joint {joint!r}")
    bands = table.joints[joint]
    lo, hi = bands.range_deg
    if not lo <= angle_deg <= hi:
        raise ErgoError(
            f"{joint} angle {angle_deg} deg outside declared range [{lo}, {hi}]"
        )
    g = bands.base
    for term in bands.terms:
        g += term.step * _sigmoid(
            table.steepness_per_deg * term.direction * (angle_deg - term.breakpoint_deg)
        )
    return min(7.0, max(1.0, g))


def _check_times(times: Sequence) -> None:
    if len(times) == 0:
        raise ErgoError("trace has no samples")
    for a, b in zip(times, times[1:]):
        if b <= a:
            raise ErgoError(f"timestamps must strictly increase ({a} -> {b})")


@dataclass(frozen=True)
class AngleTrace:
    """Sampled joint angles in degrees; one value per monitored joint per sample."""

    times: tuple
    angles: Mapping[str, tuple]

    def __post_init__(self):
        _check_times(self.times)
        missing = [j for j in JOINTS if j not in self.angles]
        if missing:
            raise ErgoError(f"angle trace missing joints: {missing}")
        for j in JOINTS:
            if len(self.angles[j]) != len(self.times):
                raise ErgoError(f"angle trace for {j} does not match the time base")


@dataclass(frozen=True)
class RulaScoreTrace:
    times: tuple
    scores: Mapping[str, tuple]
    sample_period_s: float = DEFAULT_SAMPLE_PERIOD_S

    def __post_init__(self):
        _check_times(self.times)
        missing = [j for j in JOINTS if j not in self.scores]
        if missing:
            raise ErgoError(f"score trace missing joints: {missing}")
        for j in JOINTS:
            if len(self.scores[j]) != len(self.times):
                raise ErgoError(f"score trace for {j} does not match the time base")
            for g in self.scores[j]:
                if not 1.0 <= g <= 7.0:
                    raise ErgoError(f"score {g} for {j} outside [1, 7]")

    @property
    def duration_s(self) -> float:
        return self.times[-1] - self.times[0]


def score_angle_trace(trace: AngleTrace, table: RulaBandTable) -> RulaScoreTrace:
    scores = {
        j: tuple(rula_score(j, a, table) for a in trace.angles[j]) for j in JOINTS
    }
    if len(trace.times) > 1:
        period = (trace.times[-1] - trace.times[0]) / (len(trace.times) - 1)
    else:
        period = DEFAULT_SAMPLE_PERIOD_S
    return RulaScoreTrace(times=tuple(trace.times), scores=scores, sample_period_s=period)


def constant_score_trace(
    g: float | Mapping[str, float],
    duration_s: float,
    dt: float = DEFAULT_SAMPLE_PERIOD_S,
) -> RulaScoreTrace:
    """Synthetic trace holding each joint at a constant score; useful for
    calibration fixtures and model/trace consistency checks."""
    if duration_s <= 0:
        raise ErgoError("duration must be positive")
    n = max(1, int(round(duration_s / dt)))
    times = tuple(i * duration_s / n for i in range(n + 1))
    per_joint = g if isinstance(g, Mapping) else {j: float(g) for j in JOINTS}
    scores = {j: tuple(per_joint[j] for _ in times) for j in JOINTS}
    return RulaScoreTrace(times=times, scores=scores, sample_period_s=duration_s / n)


# ---------------------------------------------------------------------------
# wear dynamics


@dataclass(frozen=True)
class WearTrajectory:
    times: tuple
    values: Mapping[str, tuple]

    def final(self, t0: float = 0.0) -> WearVector:
        return WearVector(
            values=tuple(self.values[j][-1] for j in JOINTS),
            t=t0 + (self.times[-1] - self.times[0]),
        )


def integrate_wear(v0: WearVector, trace: RulaScoreTrace, capacity_: float) -> WearTrajectory:
    """Charge wear along a score trace: V(t) = 1 - (1-V0) exp(-int G/C dt),
    with the exposure integral accumulated by the trapezoidal rule."""
    if capacity_ <= 0:
        raise ErgoError("capacity must be positive")
    times = trace.times
    values: dict[str, tuple] = {}
    for idx, j in enumerate(JOINTS):
        g = trace.scores[j]
        start = v0.values[idx]
        integral = 0.0
        out = [start]
        for k in range(1, len(times)):
            integral += 0.5 * (g[k - 1] + g[k]) * (times[k] - times[k - 1]) / capacity_
            out.append(1.0 - (1.0 - start) * math.exp(-integral))
        values[j] = tuple(out)
    return WearTrajectory(times=tuple(times), values=values)


def recover(v0: float, duration_s: float, rate: float, capacity_: float) -> float:
    """Discharge wear while resting: V = V0 * exp(-r t / C)."""
    if duration_s < 0:
        raise ErgoError("recovery duration must be nonnegative")
    if not 0.0 <= v0 < 1.0:
        raise ErgoError(f"wear must lie in [0, 1), got {v0}")
    return v0 * math.exp(-rate * duration_s / capacity_)


def recover_wear(wear: WearVector, duration_s: float, config: "CostConfig") -> WearVector:
    values = tuple(
        recover(v, duration_s, config.recovery_rate, config.capacity) for v in wear.values
    )
    return WearVector(values=values, t=wear.t + duration_s)


# ---------------------------------------------------------------------------
# risk bands and costs


@dataclass(frozen=True)
class CostConfig:
    """Risk-band weights, thresholds, and dynamics constants.

    Defaults: band weights 1/10/100, thresholds 0.25/0.75, robot cost 35,
    recovery rate 3, capacity from (G=3, 240 s, target 0.993).
    """

    gamma_low: float = 1.0
    gamma_med: float = 10.0
    gamma_high: float = 100.0
    v_th1: float = 0.25
    v_th2: float = 0.75
    robot_cost: float = 35.0
    recovery_rate: float = 3.0
    capacity: float = DEFAULT_CAPACITY
    joint_weights: Mapping[str, float] = field(
        default_factory=lambda: {j: 1.0 for j in JOINTS}
    )
    monitored_arm: str = "right"  # labels which arm shoulder/elbow/wrist refer to

    def __post_init__(self):
        if not 0.0 < self.gamma_low < self.gamma_med < self.gamma_high:
            raise ErgoError("band weights must satisfy 0 < low < med < high")
        if not 0.0 < self.v_th1 < self.v_th2 < 1.0:
            raise ErgoError("thresholds must satisfy 0 < th1 < th2 < 1")
        if self.robot_cost < 0 or self.recovery_rate <= 0 or self.capacity <= 0:
            raise ErgoError("robot cost, recovery rate and capacity must be positive")
        missing = [j for j in JOINTS if j not in self.joint_weights]
        if missing:
            raise ErgoError(f"joint weights missing: {missing}")
        for j, w in self.joint_weights.items():
            if w <= 0:
                raise ErgoError(f"joint weight for {j} must be positive, got {w}")
        if self.monitored_arm not in ("right", "left"):
            raise ErgoError(f"monitored arm must be 'right' or 'left', got {self.monitored_arm!r}")


def gamma_of(v_hat: float, config: CostConfig) -> float:
    """Risk-band weight of a predicted wear value.

    Boundary semantics: equality at the lower threshold stays low, equality
    at the upper threshold is already high.
    """
    if not 0.0 <= v_hat <= 1.0:
        raise ErgoError(f"predicted wear must lie in [0, 1], got {v_hat}")
    if v_hat >= config.v_th2:
        return config.gamma_high
    if v_hat > config.v_th1:
        return config.gamma_med
    return config.gamma_low


def human_cost(predicted: WearVector | Mapping[str, float], config: CostConfig) -> float:
    """Hyper-arc cost of a human assignment: weighted sum of band weights."""
    if isinstance(predicted, WearVector):
        values = predicted.as_dict()
    else:
        missing = [j for j in JOINTS if j not in predicted]
        if missing:
            raise ErgoError(f"prediction missing joints: {missing}")
        values = predicted
    return sum(config.joint_weights[j] * gamma_of(values[j], config) for j in JOINTS)


# ---------------------------------------------------------------------------
# trace parsing and configuration files


def angle_trace_from_rows(rows: Iterable[Sequence]) -> AngleTrace:
    """Rows of (t_seconds, shoulder, elbow, wrist, trunk, neck) in degrees."""
    times: list[float] = []
    cols: list[list[float]] = [[] for _ in JOINTS]
    for r, row in enumerate(rows):
        if len(row) != 1 + len(JOINTS):
            raise ErgoError(f"row {r}: expected {1 + len(JOINTS)} fields, got {len(row)}")
        times.append(float(row[0]))
        for i in range(len(JOINTS)):
            cols[i].append(float(row[1 + i]))
    return AngleTrace(
        times=tuple(times), angles={j: tuple(c) for j, c in zip(JOINTS, cols)}
    )


def parse_angle_trace_text(text: str) -> AngleTrace:
    """Delimited text: comma or whitespace separated, '#' comments allowed."""
    rows = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p for p in line.replace(",", " ").split() if p]
        rows.append(parts)
    if rows and not _is_number(rows[0][0]):
        rows = rows[1:]  # header row
    return angle_trace_from_rows(rows)


def _is_number(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False


def angle_trace_from_records(records: Iterable[Mapping]) -> AngleTrace:
    """Structured log rows: {"t": seconds, "shoulder": deg, ...}."""
    rows = []
    for rec in records:
        rows.append([rec["t"]] + [rec[j] for j in JOINTS])
    return angle_trace_from_rows(rows)


def score_trace_to_dict(trace: RulaScoreTrace) -> dict:
    return {
        "times": list(trace.times),
        "scores": {j: list(trace.scores[j]) for j in JOINTS},
        "sample_period_s": trace.sample_period_s,
    }


def score_trace_from_dict(data: Mapping) -> RulaScoreTrace:
    return RulaScoreTrace(
        times=tuple(float(t) for t in data["times"]),
        scores={j: tuple(float(g) for g in data["scores"][j]) for j in JOINTS},
        sample_period_s=float(data.get("sample_period_s", DEFAULT_SAMPLE_PERIOD_S)),
    )


def config_to_dict(config: CostConfig) -> dict:
    return {
        "gamma_low": config.gamma_low,
        "gamma_med": config.gamma_med,
        "gamma_high": config.gamma_high,
        "v_th1": config.v_th1,
        "v_th2": config.v_th2,
        "robot_cost": config.robot_cost,
        "recovery_rate": config.recovery_rate,
        "capacity": config.capacity,
        "joint_weights": {j: config.joint_weights[j] for j in JOINTS},
        "monitored_arm": config.monitored_arm,
    }


def config_from_dict(data: Mapping) -> CostConfig:
    base = CostConfig()
    return CostConfig(
        gamma_low=float(data.get("gamma_low", base.gamma_low)),
        gamma_med=float(data.get("gamma_med", base.gamma_med)),
        gamma_high=float(data.get("gamma_high", base.gamma_high)),
        v_th1=float(data.get("v_th1", base.v_th1)),
        v_th2=float(data.get("v_th2", base.v_th2)),
        robot_cost=float(data.get("robot_cost", base.robot_cost)),
        recovery_rate=float(data.get("recovery_rate", base.recovery_rate)),
        capacity=float(data.get("capacity", base.capacity)),
        joint_weights={
            j: float(data.get("joint_weights", {}).get(j, 1.0)) for j in JOINTS
        },
        monitored_arm=str(data.get("monitored_arm", base.monitored_arm)),
    )


def band_table_to_dict(table: RulaBandTable) -> dict:
    return {
        "steepness_per_deg": table.steepness_per_deg,
        "joints": {
            j: {
                "neutral_deg": b.neutral_deg,
                "range_deg": list(b.range_deg),
                "base": b.base,
                "terms": [
                    {"breakpoint_deg": t.breakpoint_deg, "step": t.step, "direction": t.direction}
                    for t in b.terms
                ],
            }
            for j, b in table.joints.items()
        },
    }


def band_table_from_dict(data: Mapping) -> RulaBandTable:
    return RulaBandTable(
        steepness_per_deg=float(data["steepness_per_deg"]),
        joints={
            j: JointBands(
                neutral_deg=float(b["neutral_deg"]),
                range_deg=(float(b["range_deg"][0]), float(b["range_deg"][1])),
                base=float(b["base"]),
                terms=tuple(
                    BandTerm(
                        breakpoint_deg=float(t["breakpoint_deg"]),
                        step=float(t["step"]),
                        direction=int(t.get("direction", 1)),
                    )
                    for t in b["terms"]
                ),
            )
            for j, b in data["joints"].items()
        },
    )


def save_config(config: CostConfig, table: RulaBandTable, path) -> None:
    payload = {"v": 1, "cost": config_to_dict(config), "bands": band_table_to_dict(table)}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_config(path) -> tuple:
    data = json.loads(Path(path).read_text())
    if data.get("v") != 1:
        raise ErgoError(f"unsupported config version {data.get('v')!r}")
    table = band_table_from_dict(data["bands"]) if "bands" in data else default_band_table()
    return config_from_dict(data.get("cost", {})), table
