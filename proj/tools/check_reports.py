#!/usr/bin/env python3
"""Runs every moodyn command on the shipped configs and validates the JSON
reports against schemas/summary.schema.json. Also checks the config-error exit code."""
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema


def main() -> int:
    moodyn, root = sys.argv[1], pathlib.Path(sys.argv[2])
    schema = json.loads((root / "schemas" / "summary.schema.json").read_text())
    validator = jsonschema.Draft7Validator(schema)
    failures = 0
    with tempfile.TemporaryDirectory() as tmp:
        out = pathlib.Path(tmp)
        for cfg in sorted((root / "configs").glob("*.cfg")):
            for cmd in ("simulate", "verify", "rates", "path"):
                dest = out / cfg.stem / cmd
                proc = subprocess.run([moodyn, cmd, str(cfg), "--out", str(dest), "--timing", "-q"])
                if proc.returncode not in (0, 4):
                    print(f"{cfg.name} {cmd}: exit {proc.returncode}")
                    failures += 1
        reports = sorted(out.rglob("*.json"))
        for report in reports:
            errors = list(validator.iter_errors(json.loads(report.read_text())))
            for e in errors:
                print(f"{report.relative_to(out)}: {e.message}")
            failures += len(errors)
        print(f"validated {len(reports)} reports")

        bad = out / "bad.cfg"
        bad.write_text("[experiment]\nproblem = mop-ex1\n[params]\nh = -1\n[initial]\nx0 = 1, 1\n[outputs]\nchannels = trajectory\n")
        code = subprocess.run([moodyn, "simulate", str(bad), "--out", str(out / "bad"), "-q"]).returncode
        if code != 2:
            print(f"invalid config: expected exit 2, got {code}")
            failures += 1
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
