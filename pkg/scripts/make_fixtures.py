#!/usr/bin/env python3
"""Regenerate the committed fixture files from the fixture modules.

Run after any change that touches the corner-joint task, the session
semantics, or the service schemas; the test suite asserts the files match
what the code produces.
"""
import json
from pathlib import Path

from ergoalloc.fixtures import build_protocol_trace, corner_joint_scenario

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"


def main() -> None:
    FIXTURES.mkdir(exist_ok=True)
    scenario_path = FIXTURES / "corner_joint.json"
    scenario_path.write_text(json.dumps(corner_joint_scenario(), indent=2, sort_keys=True) + "\n")
    print(f"wrote {scenario_path}")
    trace_path = FIXTURES / "protocol_trace.json"
    trace_path.write_text(json.dumps(build_protocol_trace(), indent=2, sort_keys=True) + "\n")
    print(f"wrote {trace_path}")


if __name__ == "__main__":
    main()
