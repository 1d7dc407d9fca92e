"""Estimate per-action wear-prediction coefficients from repeated trials.

A trial either carries a scored joint trace, in which case
alpha = exp(-int G/C dt), or just start/end wear per joint, in which case
alpha = (1 - V_end) / (1 - V_start).  Both derivations agree exactly on data
generated by the charge dynamics.  The per-action model averages alpha over
trials and keeps the spread for diagnostics.
"""
from __future__ import annotations

import json
import math
import statistics
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .ergo import JOINTS, ActionModel, RulaScoreTrace, score_trace_from_dict, score_trace_to_dict


class CalibrationError(ValueError):
    pass


@dataclass(frozen=True)
class TrialRecord:
    """One repetition of one action: a score trace, or (v_start, v_end) per joint."""

    action: str
    duration_s: float
    trace: RulaScoreTrace | None = None
    endpoints: Mapping[str, tuple] | None = None

    def __post_init__(self):
        if self.trace is None and self.endpoints is None:
            raise CalibrationError(f"trial for {self.action!r} has neither trace nor endpoints")
        if self.duration_s < 0:
            raise CalibrationError("trial duration must be nonnegative")
        if self.endpoints is not None:
            missing = [j for j in JOINTS if j not in self.endpoints]
            if missing:
                raise CalibrationError(f"trial endpoints missing joints: {missing}")
            for j in JOINTS:
                start, end = self.endpoints[j]
                if not 0.0 <= start < 1.0:
                    raise CalibrationError(f"{j} start wear must lie in [0, 1), got {start}")
                if not 0.0 <= end < 1.0:
                    raise CalibrationError(f"{j} end wear must lie in [0, 1), got {end}")
                if end < start:
                    raise CalibrationError(f"{j} wear decreased during the trial ({start} -> {end})")


def alpha_from_trial(trial: TrialRecord, capacity_: float) -> dict:
    """Per-joint alpha from one trial; the trace is preferred over endpoints."""
    if capacity_ <= 0:
        raise CalibrationError("capacity must be positive")
    alpha: dict[str, float] = {}
    if trial.trace is not None:
        times = trial.trace.times
        for j in JOINTS:
            g = trial.trace.scores[j]
            integral = sum(
                0.5 * (g[k - 1] + g[k]) * (times[k] - times[k - 1])
                for k in range(1, len(times))
            )
            alpha[j] = math.exp(-integral / capacity_)
    else:
        for j in JOINTS:
            start, end = trial.endpoints[j]
            alpha[j] = (1.0 - end) / (1.0 - start)
    for j, a in alpha.items():
        if not 0.0 < a <= 1.0:
            raise CalibrationError(f"alpha[{j}] fell outside (0, 1]: {a}")
    return alpha


def estimate_action_model(
    trials: Sequence[TrialRecord], capacity_: float, robust: bool = False
) -> ActionModel:
    """Average the per-trial alphas into one model.

    `robust=True` swaps the arithmetic mean for the median; the plain mean is
    the default estimator.
    """
    if not trials:
        raise CalibrationError("no trials given")
    actions = {t.action for t in trials}
    if len(actions) != 1:
        raise CalibrationError(f"trials mix actions: {sorted(actions)}")
    samples = {j: [] for j in JOINTS}
    for trial in trials:
        a = alpha_from_trial(trial, capacity_)
        for j in JOINTS:
            samples[j].append(a[j])
    center = statistics.median if robust else statistics.fmean
    alpha = {j: center(samples[j]) for j in JOINTS}
    stddev = {
        j: statistics.stdev(samples[j]) if len(samples[j]) > 1 else 0.0 for j in JOINTS
    }
    return ActionModel(
        action=trials[0].action,
        alpha=alpha,
        duration_s=statistics.fmean(t.duration_s for t in trials),
        alpha_stddev=stddev,
        n_trials=len(trials),
    )


# ---------------------------------------------------------------------------
# calibration files: {v, capacity, actions: {action: {duration_s, joints: {...}}}}


def models_to_dict(models: Mapping[str, ActionModel]) -> dict:
    out = {}
    for action in sorted(models):
        m = models[action]
        joints = {}
        for j in JOINTS:
            entry = {"alpha": m.alpha[j]}
            if m.alpha_stddev is not None:
                entry["stddev"] = m.alpha_stddev[j]
            if m.n_trials is not None:
                entry["n_trials"] = m.n_trials
            joints[j] = entry
        out[action] = {"duration_s": m.duration_s, "joints": joints}
    return out


def models_from_dict(data: Mapping) -> dict:
    models = {}
    for action, rec in data.items():
        joints = rec["joints"]
        stddev = {j: joints[j]["stddev"] for j in joints if "stddev" in joints[j]}
        n = next((joints[j]["n_trials"] for j in joints if "n_trials" in joints[j]), None)
        models[action] = ActionModel(
            action=action,
            alpha={j: float(joints[j]["alpha"]) for j in joints},
            duration_s=float(rec["duration_s"]),
            alpha_stddev={j: float(v) for j, v in stddev.items()} or None,
            n_trials=None if n is None else int(n),
        )
    return models


def save_calibration(models: Mapping[str, ActionModel], capacity_: float, path) -> None:
    payload = {"v": 1, "capacity": capacity_, "actions": models_to_dict(models)}
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def load_calibration(path) -> tuple:
    data = json.loads(Path(path).read_text())
    if data.get("v") != 1:
        raise CalibrationError(f"unsupported calibration version {data.get('v')!r}")
    return models_from_dict(data["actions"]), float(data["capacity"])


def trial_from_dict(data: Mapping) -> TrialRecord:
    trace = score_trace_from_dict(data["trace"]) if data.get("trace") else None
    endpoints = None
    if data.get("endpoints"):
        endpoints = {
            j: (float(v[0]), float(v[1])) for j, v in data["endpoints"].items()
        }
    return TrialRecord(
        action=str(data["action"]),
        duration_s=float(data["duration_s"]),
        trace=trace,
        endpoints=endpoints,
    )


def trial_to_dict(trial: TrialRecord) -> dict:
    out: dict = {"action": trial.action, "duration_s": trial.duration_s}
    if trial.trace is not None:
        out["trace"] = score_trace_to_dict(trial.trace)
    if trial.endpoints is not None:
        out["endpoints"] = {j: list(v) for j, v in trial.endpoints.items()}
    return out
