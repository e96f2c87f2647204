#!/usr/bin/env python3
"""Validate celkit JSON outputs against the schemas in schemas/.

Usage: validate_outputs.py SCHEMA_DIR FILE...
The schema is picked from the file's "kind" (or "format") field; manifests
are recognised by their "run_id" + "outputs" keys.
"""

import json
import pathlib
import sys

import jsonschema


def schema_name(doc):
    if doc.get("format") == "celkit-path":
        return "path"
    if "outputs" in doc and "run_id" in doc:
        return "manifest"
    return doc.get("kind")


def main(argv):
    if len(argv) < 3:
        print(__doc__)
        return 2
    schema_dir = pathlib.Path(argv[1])
    failures = 0
    for name in argv[2:]:
        doc = json.loads(pathlib.Path(name).read_text())
        kind = schema_name(doc)
        path = schema_dir / f"{kind}.schema.json"
        if not path.exists():
            print(f"FAIL {name}: no schema for kind {kind!r}")
            failures += 1
            continue
        try:
            jsonschema.validate(doc, json.loads(path.read_text()))
            print(f"ok   {name} ({kind})")
        except jsonschema.ValidationError as e:
            print(f"FAIL {name}: {e.message}")
            failures += 1
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
