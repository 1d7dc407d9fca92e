#!/usr/bin/env python3
"""Step the corner-joint demo task through a full session and print what the
allocator decided at every step, next to the one-shot offline assignment."""
from ergoalloc.ergo import JOINTS
from ergoalloc.fixtures import (
    ROBOT_DURATION_S,
    corner_joint_config,
    corner_joint_graph,
    corner_joint_initial_wear,
    corner_joint_models,
)
from ergoalloc.session import (
    complete_action,
    offline_allocation,
    start_session,
    suggest_next,
)


def main() -> None:
    session = start_session(
        graph=corner_joint_graph(),
        models=corner_joint_models(),
        config=corner_joint_config(),
        initial_wear=corner_joint_initial_wear(),
        robot_durations=ROBOT_DURATION_S,
    )
    print("offline:", "  ".join(f"{a}->{w}" for a, w in offline_allocation(session)))
    print()
    header = ["step", "action", "worker", "clock_s"] + list(JOINTS)
    print("\t".join(header))
    wear = session.wear.as_dict()
    print("\t".join(["0", "-", "-", "0.0"] + [f"{wear[j]:.3f}" for j in JOINTS]))
    step = 0
    while not session.is_complete:
        suggestion, session = suggest_next(session)
        session = complete_action(session, suggestion.action, suggestion.worker)
        step += 1
        wear = session.wear.as_dict()
        print("\t".join(
            [str(step), suggestion.action, suggestion.worker, f"{session.clock:.1f}"]
            + [f"{wear[j]:.3f}" for j in JOINTS]
        ))


if __name__ == "__main__":
    main()
