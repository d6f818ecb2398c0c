"""Command line entry points.

run      simulate a sketch file and print a report (text or JSON)
check    exit status health check: 0 clean, 2 overloaded parts, 1 errors
netlist  export the sketch as a flat DC netlist
serve    start the interactive lab service (HTTP + WebSocket)
devices  list supported part kinds
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .core import validate_sketch
from .errors import SimError, SketchFormatError
from .pipeline import simulate
from .sketchio import (
    export_netlist,
    parse_sketch,
    render_report,
    render_report_json,
)


def _read_text(path: str) -> str:
    if path == "-":
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _print_diagnostics(diags):
    for d in diags:
        subject = f" {d.subject}" if d.subject else ""
        print(f"error {d.code}{subject}: {d.message}", file=sys.stderr)


def _load_sketch(path: str):
    try:
        text = _read_text(path)
    except OSError as exc:
        print(f"error IO {path}: {exc}", file=sys.stderr)
        return None
    try:
        return parse_sketch(text)
    except SketchFormatError as exc:
        _print_diagnostics(exc.diagnostics)
        return None


def cmd_run(args) -> int:
    sketch = _load_sketch(args.sketch)
    if sketch is None:
        return 1
    try:
        result = simulate(sketch)
    except SketchFormatError as exc:
        _print_diagnostics(exc.diagnostics)
        return 1
    sys.stdout.write(render_report_json(result) if args.json
                     else render_report(result))
    return 0


def cmd_check(args) -> int:
    sketch = _load_sketch(args.sketch)
    if sketch is None:
        return 1
    try:
        result = simulate(sketch)
    except SketchFormatError as exc:
        _print_diagnostics(exc.diagnostics)
        return 1
    if not result.converged:
        failure = result.failure or {"code": "NO_SOLUTION", "message": ""}
        print(f"error {failure['code']}: {failure['message']}", file=sys.stderr)
        return 1
    for event in result.smoke_events:
        print(event.text_line())
    return 2 if result.smoke_events else 0


def cmd_netlist(args) -> int:
    sketch = _load_sketch(args.sketch)
    if sketch is None:
        return 1
    diags = validate_sketch(sketch)
    if diags:
        _print_diagnostics(diags)
        return 1
    text = export_netlist(sketch)
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_devices(args) -> int:
    from .devices import REGISTRY, reference_table_markdown

    if args.markdown:
        sys.stdout.write(reference_table_markdown())
        return 0
    for kind in sorted(REGISTRY):
        d = REGISTRY[kind]
        pins = ", ".join(d.pins) if d.pins else "(pins from placements)"
        tag = "" if d.simulatable else "  [not simulatable]"
        print(f"{kind}: {pins}{tag}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    app = create_app(static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="circsim",
        description="educational DC circuit simulator for breadboard sketches")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate a sketch and print a report")
    p.add_argument("sketch", help="sketch JSON file, or - for stdin")
    p.add_argument("--json", action="store_true",
                   help="print the full result as JSON")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser(
        "check",
        help="health check: exit 0 clean, 2 with overloaded parts, 1 on errors")
    p.add_argument("sketch", help="sketch JSON file, or - for stdin")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("netlist", help="export the sketch as a DC netlist")
    p.add_argument("sketch", help="sketch JSON file, or - for stdin")
    p.add_argument("-o", "--output", help="write to a file instead of stdout")
    p.set_defaults(func=cmd_netlist)

    p = sub.add_parser("serve", help="start the interactive lab service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--static", default=None,
                   help="directory of UI files to serve at /")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("devices", help="list supported part kinds")
    p.add_argument("--markdown", action="store_true",
                   help="print the full reference table as Markdown")
    p.set_defaults(func=cmd_devices)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SimError as exc:
        print(f"error {exc.code}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
