#!/usr/bin/env python3
"""Generate docs/cli.md from the argparse tree so the reference page never
drifts from the actual flags; a test asserts the committed page is current."""
import argparse
from pathlib import Path

from ergoalloc.cli import build_parser

FORMAT_OWNERS = [
    ("graph JSON", "ergoalloc.aog", "generate, validate, plan"),
    ("calibration JSON", "ergoalloc.calibration", "calibrate, plan"),
    ("config JSON (cost + bands)", "ergoalloc.ergo", "plan, replay via scenario"),
    ("scenario JSON", "ergoalloc.session", "replay --scenario"),
    ("event log (JSON lines)", "ergoalloc.session", "replay --log / --out"),
    ("session snapshot JSON", "ergoalloc.session", "library API"),
    ("timing table CSV/JSONL", "ergoalloc.bench", "bench"),
    ("angle trace (delimited text / records)", "ergoalloc.ergo", "calibrate trials, service"),
]


def action_rows(parser: argparse.ArgumentParser) -> list:
    rows = []
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction) or action.dest == "help":
            continue
        flags = ", ".join(action.option_strings) or action.dest
        default = ""
        if action.default not in (None, argparse.SUPPRESS, False):
            default = f" (default: {action.default})"
        required = " (required)" if getattr(action, "required", False) else ""
        rows.append(f"| `{flags}` | {action.help or ''}{required}{default} |")
    return rows


def main() -> None:
    parser = build_parser()
    sub_actions = next(
        a for a in parser._actions if isinstance(a, argparse._SubParsersAction)
    )
    lines = [
        "# Command reference",
        "",
        "Generated by `scripts/gen_cli_reference.py`; do not edit by hand.",
        "",
        f"Tool: `{parser.prog}` -- {parser.description}",
        "",
        "Exit codes: 0 ok, 1 validation failure, 2 usage error, 3 I/O error.",
        "",
    ]
    for name, sub in sub_actions.choices.items():
        lines.append(f"## `{parser.prog} {name}`")
        lines.append("")
        lines.append(sub.description or dict_help(sub_actions, name))
        lines.append("")
        rows = action_rows(sub)
        if rows:
            lines.append("| flag | meaning |")
            lines.append("| --- | --- |")
            lines.extend(rows)
            lines.append("")
    lines.append("## File formats and owning modules")
    lines.append("")
    lines.append("| format | module | used by |")
    lines.append("| --- | --- | --- |")
    for fmt, module, used_by in FORMAT_OWNERS:
        lines.append(f"| {fmt} | `{module}` | {used_by} |")
    lines.append("")

    out = Path(__file__).resolve().parent.parent / "docs" / "cli.md"
    out.parent.mkdir(exist_ok=True)
    out.write_text("\n".join(lines))
    print(f"wrote {out}")


def dict_help(sub_actions: argparse._SubParsersAction, name: str) -> str:
    for choice_action in sub_actions._choices_actions:
        if choice_action.dest == name:
            return choice_action.help or ""
    return ""


if __name__ == "__main__":
    main()
