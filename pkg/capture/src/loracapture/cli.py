"""loracapture CLI: `capture --config c.json` and `apply --schedule s.json --config c.json`."""

from __future__ import annotations

import argparse
import sys
from typing import List, Optional

from .capture import apply_schedule, capture
from .config import load_capture_config
from .errors import CaptureError, exit_code_for


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="loracapture", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capture", help="record profiling frames into an FSTR trace")
    p.add_argument("--config", required=True)

    p = sub.add_parser("apply", help="generate one image following a schedule JSON")
    p.add_argument("--config", required=True)
    p.add_argument("--schedule", required=True)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        config = load_capture_config(args.config)
        if args.command == "capture":
            path = capture(config)
            print(f"trace written: {path}")
        else:
            path = apply_schedule(args.schedule, config)
            print(f"image written: {path}")
        return 0
    except CaptureError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
